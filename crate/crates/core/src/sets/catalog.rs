//! Named example sets with closed-form cones where available.

use nalgebra::{DMatrix, DVector};

use super::{
    sawtooth_kinks, sawtooth_slope, Branch, ExactCones, OracleKind, PlanarCone, Representation, ScalarFn,
    SetOracle, MEMBER_TOL,
};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::geometry::{point, Point};
use crate::map::SmoothMap;

/// Catalog entries; parametrized families take a `:PARAM` suffix.
pub fn catalog_names() -> Vec<&'static str> {
    vec![
        "parabola-pair",
        "sawtooth-graph",
        "sawtooth-epigraph",
        "power32-graph",
        "parabola-band",
        "quartic-cross",
        "unit-circle",
        "unit-ball",
        "halfplane",
        "parabola-epigraph",
        "parabola-hypograph",
        "parabola-graph",
        "abs-epigraph",
        "circle:R",
        "ball:R",
        "power-graph:P/Q",
    ]
}

/// Catalog sets that come with an amenable representation.
pub fn amenable_names() -> Vec<&'static str> {
    vec![
        "unit-ball",
        "halfplane",
        "parabola-epigraph",
        "parabola-hypograph",
        "parabola-graph",
        "abs-epigraph",
        "power32-graph",
        "unit-circle",
    ]
}

pub fn catalog(name: &str) -> Result<SetOracle> {
    let unknown = || Error::UnknownSet {
        name: name.to_string(),
        available: catalog_names().join(", "),
    };
    let param = |s: &str| -> Result<f64> {
        let v: f64 = s.parse().map_err(|_| unknown())?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(unknown())
        }
    };
    if let Some(r) = name.strip_prefix("circle:") {
        return Ok(circle(name, param(r)?));
    }
    if let Some(r) = name.strip_prefix("ball:") {
        return Ok(ball(name, param(r)?));
    }
    if let Some(e) = name.strip_prefix("power-graph:") {
        let (p, q) = e.split_once('/').unwrap_or((e, "1"));
        let (p, q): (i64, i64) = (p.parse().map_err(|_| unknown())?, q.parse().map_err(|_| unknown())?);
        if p <= q || q <= 0 {
            // Exponents at most 1 are not C¹ at the origin.
            return Err(unknown());
        }
        return power_graph(name, p, q);
    }
    match name {
        "parabola-pair" => Ok(parabola_pair()),
        "sawtooth-graph" => Ok(sawtooth_graph()),
        "sawtooth-epigraph" => Ok(sawtooth_epigraph()),
        "power32-graph" => power_graph(name, 3, 2),
        "parabola-band" => parabola_band(),
        "quartic-cross" => Ok(quartic_cross()),
        "unit-circle" => Ok(circle(name, 1.0)),
        "unit-ball" => Ok(ball(name, 1.0)),
        "halfplane" => Ok(halfplane()),
        "parabola-epigraph" => parabola_epigraph(),
        "parabola-hypograph" => parabola_hypograph(),
        "parabola-graph" => parabola_graph(),
        "abs-epigraph" => abs_epigraph(),
        _ => Err(unknown()),
    }
}

fn bbox(lo: [f64; 2], hi: [f64; 2]) -> (Point, Point) {
    (point(&lo), point(&hi))
}

fn same(a: ExactCones) -> Option<ExactCones> {
    Some(a)
}

fn regular(c: PlanarCone) -> Option<ExactCones> {
    same(ExactCones {
        regular: c.clone(),
        limiting: c,
    })
}

/// Cones of a function graph at a point with the given one-sided slopes.
fn graph_cones(left: f64, right: f64) -> ExactCones {
    if left == right {
        let c = PlanarCone::line([-left, 1.0]);
        return ExactCones {
            regular: c.clone(),
            limiting: c,
        };
    }
    let hat = if left > right {
        PlanarCone::wedge([-left, 1.0], [-right, 1.0])
    } else {
        PlanarCone::wedge([left, -1.0], [right, -1.0])
    };
    let limiting = hat
        .clone()
        .union(PlanarCone::line([-left, 1.0]))
        .union(PlanarCone::line([-right, 1.0]));
    ExactCones { regular: hat, limiting }
}

/// Cones of an epigraph at a boundary point with the given one-sided slopes.
fn epigraph_cones(left: f64, right: f64) -> ExactCones {
    if left == right {
        let c = PlanarCone::ray([left, -1.0]);
        return ExactCones {
            regular: c.clone(),
            limiting: c,
        };
    }
    if left < right {
        let c = PlanarCone::wedge([left, -1.0], [right, -1.0]);
        ExactCones {
            regular: c.clone(),
            limiting: c,
        }
    } else {
        ExactCones {
            regular: PlanarCone::zero(),
            limiting: PlanarCone::ray([left, -1.0]).union(PlanarCone::ray([right, -1.0])),
        }
    }
}

fn sawtooth_sides(x: f64) -> (f64, f64) {
    let is_kink = sawtooth_kinks(x * (1.0 - 1e-12) - 1e-300, x * (1.0 + 1e-12) + 1e-300)
        .iter()
        .any(|k| *k != 0.0);
    if is_kink {
        let h = x * 1e-9;
        (sawtooth_slope(x - h), sawtooth_slope(x + h))
    } else {
        let s = sawtooth_slope(x);
        (s, s)
    }
}

fn parabola_pair() -> SetOracle {
    let branches = vec![
        Branch::new("y=x^2", -2.0, 2.0, |t| point(&[t, t * t])),
        Branch::new("y=-x^2", -2.0, 2.0, |t| point(&[t, -t * t])),
    ];
    SetOracle::new(
        "parabola-pair",
        2,
        OracleKind::CurveUnion(branches),
        bbox([-2.0, -4.0], [2.0, 4.0]),
    )
    .with_mirror_axis(1)
    .with_exact_cones(|p| {
        let (x, y) = (p[0], p[1]);
        let upper = (y - x * x).abs() <= MEMBER_TOL;
        let lower = (y + x * x).abs() <= MEMBER_TOL;
        match (upper, lower) {
            (true, true) => regular(PlanarCone::line([0.0, 1.0])),
            (true, false) => regular(PlanarCone::line([-2.0 * x, 1.0])),
            (false, true) => regular(PlanarCone::line([2.0 * x, 1.0])),
            _ => None,
        }
    })
}

fn sawtooth_graph() -> SetOracle {
    SetOracle::new(
        "sawtooth-graph",
        2,
        OracleKind::Graph(ScalarFn::Sawtooth),
        bbox([-0.5, -0.5], [1.5, 0.5]),
    )
    .with_exact_cones(|p| {
        if (p[1] - super::sawtooth(p[0])).abs() > MEMBER_TOL {
            return None;
        }
        let (l, r) = sawtooth_sides(p[0]);
        same(graph_cones(l, r))
    })
}

fn sawtooth_epigraph() -> SetOracle {
    SetOracle::new(
        "sawtooth-epigraph",
        2,
        OracleKind::Epigraph(ScalarFn::Sawtooth),
        bbox([-0.5, -0.5], [1.5, 1.0]),
    )
    .with_exact_cones(|p| {
        let f = super::sawtooth(p[0]);
        if p[1] < f - MEMBER_TOL {
            return None;
        }
        if p[1] > f + MEMBER_TOL {
            return regular(PlanarCone::zero());
        }
        let (l, r) = sawtooth_sides(p[0]);
        same(epigraph_cones(l, r))
    })
}

fn power_graph(name: &str, p: i64, q: i64) -> Result<SetOracle> {
    let src = format!("abs(x1)^({p}/{q})");
    let f = parse_expr(&src)?;
    let e = p as f64 / q as f64;
    let slope = move |x: f64| e * x.signum() * x.abs().powf(e - 1.0);
    let map = SmoothMap::from_exprs(2, &[format!("{src} - x2")])?.with_jacobian(move |z| {
        Ok(DMatrix::from_row_slice(1, 2, &[slope(z[0]), -1.0]))
    });
    let rep = Representation::new(map, ConvexBody::singleton(&[0.0]), DVector::zeros(2), 10.0);
    Ok(SetOracle::new(name, 2, OracleKind::Graph(ScalarFn::Expr(f)), bbox([-2.0, -1.0], [2.0, 3.0]))
        .with_representation(rep)
        .with_mirror_axis(0)
        .with_exact_cones(move |z| {
            if (z[1] - z[0].abs().powf(e)).abs() > MEMBER_TOL {
                return None;
            }
            regular(PlanarCone::line([-slope(z[0]), 1.0]))
        }))
}

fn parabola_band() -> Result<SetOracle> {
    let map = SmoothMap::from_exprs(2, &["x2 - x1^2".into(), "-x2 - x1^2".into()])?.with_jacobian(|z| {
        Ok(DMatrix::from_row_slice(2, 2, &[-2.0 * z[0], 1.0, -2.0 * z[0], -1.0]))
    });
    let rep = Representation::new(map, ConvexBody::orthant(&[-1, -1]), DVector::zeros(2), 10.0);
    Ok(SetOracle::preimage("parabola-band", rep)
        .with_mirror_axis(1)
        .with_exact_cones(|z| {
            let (x, y) = (z[0], z[1]);
            let (g1, g2) = (y - x * x, -y - x * x);
            if g1 > MEMBER_TOL || g2 > MEMBER_TOL {
                return None;
            }
            match (g1.abs() <= MEMBER_TOL, g2.abs() <= MEMBER_TOL) {
                (true, true) => regular(PlanarCone::line([0.0, 1.0])),
                (true, false) => regular(PlanarCone::ray([-2.0 * x, 1.0])),
                (false, true) => regular(PlanarCone::ray([-2.0 * x, -1.0])),
                (false, false) => regular(PlanarCone::zero()),
            }
        }))
}

fn quartic_cross() -> SetOracle {
    let branches = vec![
        Branch::new("u=v^2", -2.0, 2.0, |t| point(&[t * t, t])),
        Branch::new("u=-v^2", -2.0, 2.0, |t| point(&[-t * t, t])),
    ];
    SetOracle::new(
        "quartic-cross",
        2,
        OracleKind::CurveUnion(branches),
        bbox([-4.0, -2.0], [4.0, 2.0]),
    )
    .with_mirror_axis(0)
    .with_exact_cones(|p| {
        let (u, v) = (p[0], p[1]);
        let right = (u - v * v).abs() <= MEMBER_TOL;
        let left = (u + v * v).abs() <= MEMBER_TOL;
        match (right, left) {
            (true, true) => regular(PlanarCone::line([1.0, 0.0])),
            (true, false) => regular(PlanarCone::line([1.0, -2.0 * v])),
            (false, true) => regular(PlanarCone::line([1.0, 2.0 * v])),
            _ => None,
        }
    })
}

fn circle(name: &str, r: f64) -> SetOracle {
    let branch = Branch::new("circle", 0.0, std::f64::consts::TAU, move |s| point(&[r * s.cos(), r * s.sin()]));
    let map = SmoothMap::new(2, 1, "x1^2 + x2^2", |z| Ok(point(&[z.norm_squared()])))
        .with_jacobian(|z| Ok(DMatrix::from_row_slice(1, 2, &[2.0 * z[0], 2.0 * z[1]])));
    let rep = Representation::new(map, ConvexBody::singleton(&[r * r]), DVector::zeros(2), 10.0 * r);
    let m = 1.5 * r;
    SetOracle::new(name, 2, OracleKind::CurveUnion(vec![branch]), bbox([-m, -m], [m, m]))
        .with_representation(rep)
        .with_base_point(point(&[r, 0.0]))
        .with_mirror_axis(1)
        .with_exact_cones(move |p| {
            if (p.norm() - r).abs() > MEMBER_TOL {
                return None;
            }
            regular(PlanarCone::line([p[0], p[1]]))
        })
}

fn ball(name: &str, r: f64) -> SetOracle {
    let rep = Representation::new(
        SmoothMap::identity(2),
        ConvexBody::ball(&[0.0, 0.0], r),
        DVector::zeros(2),
        10.0 * r,
    );
    let m = 1.5 * r;
    let mut o = SetOracle::preimage(name, rep)
        .with_base_point(point(&[r, 0.0]))
        .with_convex(true)
        .with_mirror_axis(1)
        .with_exact_cones(move |p| {
            let n = p.norm();
            if n > r + MEMBER_TOL {
                None
            } else if n < r - MEMBER_TOL {
                regular(PlanarCone::zero())
            } else {
                regular(PlanarCone::ray([p[0], p[1]]))
            }
        });
    o.bbox = bbox([-m, -m], [m, m]);
    o
}

fn halfplane() -> SetOracle {
    let rep = Representation::new(
        SmoothMap::identity(2),
        ConvexBody::halfspaces(vec![vec![0.0, 1.0]], vec![0.0]),
        DVector::zeros(2),
        10.0,
    );
    let mut o = SetOracle::preimage("halfplane", rep)
        .with_convex(true)
        .with_mirror_axis(0)
        .with_exact_cones(|p| {
            if p[1] > MEMBER_TOL {
                None
            } else if p[1] < -MEMBER_TOL {
                regular(PlanarCone::zero())
            } else {
                regular(PlanarCone::ray([0.0, 1.0]))
            }
        });
    o.bbox = bbox([-2.0, -2.0], [2.0, 2.0]);
    o
}

fn nonpositive_halfline() -> ConvexBody {
    ConvexBody::boxed(&[f64::NEG_INFINITY], &[0.0])
}

fn parabola_epigraph() -> Result<SetOracle> {
    let map = SmoothMap::from_exprs(2, &["x1^2 - x2".into()])?
        .with_jacobian(|z| Ok(DMatrix::from_row_slice(1, 2, &[2.0 * z[0], -1.0])));
    let rep = Representation::new(map, nonpositive_halfline(), DVector::zeros(2), 10.0);
    let mut o = SetOracle::preimage("parabola-epigraph", rep)
        .with_convex(true)
        .with_mirror_axis(0)
        .with_exact_cones(|p| {
            let g = p[0] * p[0] - p[1];
            if g > MEMBER_TOL {
                None
            } else if g < -MEMBER_TOL {
                regular(PlanarCone::zero())
            } else {
                regular(PlanarCone::ray([2.0 * p[0], -1.0]))
            }
        });
    o.bbox = bbox([-2.0, -1.0], [2.0, 4.0]);
    Ok(o)
}

fn parabola_hypograph() -> Result<SetOracle> {
    let map = SmoothMap::from_exprs(2, &["x2 - x1^2".into()])?
        .with_jacobian(|z| Ok(DMatrix::from_row_slice(1, 2, &[-2.0 * z[0], 1.0])));
    let rep = Representation::new(map, nonpositive_halfline(), DVector::zeros(2), 10.0);
    let mut o = SetOracle::preimage("parabola-hypograph", rep)
        .with_mirror_axis(0)
        .with_exact_cones(|p| {
            let g = p[1] - p[0] * p[0];
            if g > MEMBER_TOL {
                None
            } else if g < -MEMBER_TOL {
                regular(PlanarCone::zero())
            } else {
                regular(PlanarCone::ray([-2.0 * p[0], 1.0]))
            }
        });
    o.bbox = bbox([-2.0, -4.0], [2.0, 4.0]);
    Ok(o)
}

fn parabola_graph() -> Result<SetOracle> {
    let f = parse_expr("x1^2")?;
    let map = SmoothMap::from_exprs(2, &["x1^2 - x2".into()])?
        .with_jacobian(|z| Ok(DMatrix::from_row_slice(1, 2, &[2.0 * z[0], -1.0])));
    let rep = Representation::new(map, ConvexBody::singleton(&[0.0]), DVector::zeros(2), 10.0);
    Ok(
        SetOracle::new("parabola-graph", 2, OracleKind::Graph(ScalarFn::Expr(f)), bbox([-2.0, -1.0], [2.0, 4.0]))
            .with_representation(rep)
            .with_mirror_axis(0)
            .with_exact_cones(|p| {
                if (p[1] - p[0] * p[0]).abs() > MEMBER_TOL {
                    return None;
                }
                regular(PlanarCone::line([2.0 * p[0], -1.0]))
            }),
    )
}

fn abs_epigraph() -> Result<SetOracle> {
    let f = parse_expr("abs(x1)")?;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, -1.0]);
    let rep = Representation::new(
        SmoothMap::affine(a, DVector::zeros(2)),
        ConvexBody::orthant(&[-1, -1]),
        DVector::zeros(2),
        10.0,
    );
    Ok(
        SetOracle::new("abs-epigraph", 2, OracleKind::Epigraph(ScalarFn::Expr(f)), bbox([-2.0, -1.0], [2.0, 3.0]))
            .with_representation(rep)
            .with_convex(true)
            .with_mirror_axis(0)
            .with_exact_cones(|p| {
                let g = p[0].abs() - p[1];
                if g > MEMBER_TOL {
                    None
                } else if g < -MEMBER_TOL {
                    regular(PlanarCone::zero())
                } else if p[0].abs() <= MEMBER_TOL {
                    same(epigraph_cones(-1.0, 1.0))
                } else {
                    regular(PlanarCone::ray([p[0].signum(), -1.0]))
                }
            }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in catalog_names() {
            let name = name
                .replace(":R", ":0.5")
                .replace(":P/Q", ":5/3");
            let c = catalog(&name).unwrap();
            assert!(c.contains(&c.base_point, MEMBER_TOL), "{name}");
        }
    }

    #[test]
    fn unknown_name_lists_catalog() {
        match catalog("nope") {
            Err(Error::UnknownSet { available, .. }) => assert!(available.contains("parabola-pair")),
            other => panic!("{other:?}"),
        }
        assert!(catalog("power-graph:1/2").is_err());
        assert!(catalog("circle:-1").is_err());
    }

    #[test]
    fn documented_memberships() {
        let saw = catalog("sawtooth-graph").unwrap();
        assert!(saw.contains(&point(&[3.0 / 16.0, 1.0 / 64.0]), 1e-12));
        assert!(saw.contains(&point(&[3.0 / 8.0, 1.0 / 16.0]), 1e-12));
        let pp = catalog("parabola-pair").unwrap();
        assert!(pp.contains(&point(&[1.0, 1.0]), MEMBER_TOL));
        assert!(!pp.contains(&point(&[1.0, 0.5]), MEMBER_TOL));
        assert!(catalog("parabola-band").unwrap().contains(&point(&[0.5, 0.2]), MEMBER_TOL));
        assert!(catalog("quartic-cross").unwrap().contains(&point(&[0.25, 0.5]), MEMBER_TOL));
        assert!(catalog("parabola-epigraph").unwrap().contains(&point(&[1.0, 2.0]), MEMBER_TOL));
    }

    #[test]
    fn sawtooth_apex_cones() {
        let saw = catalog("sawtooth-graph").unwrap();
        let apex = point(&[3.0 / 16.0, 1.0 / 64.0]);
        let c = saw.exact_cones(&apex).unwrap();
        assert!(!c.regular.is_trivial());
        assert!(!c.limiting.is_subset_of(&c.regular, 1e-12));
        let epi = catalog("sawtooth-epigraph").unwrap();
        let c = epi.exact_cones(&apex).unwrap();
        assert!(c.regular.is_trivial());
        assert!(!c.limiting.is_trivial());
        let origin = point(&[0.0, 0.0]);
        let c = epi.exact_cones(&origin).unwrap();
        assert!(c.limiting.is_subset_of(&c.regular, 1e-12));
    }
}
