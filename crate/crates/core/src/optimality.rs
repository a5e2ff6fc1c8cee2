//! First-order optimality over feasible regions and smooth feasible
//! descent paths.

use rayon::prelude::*;
use serde::Serialize;

use crate::cones::{tangent_cone_amenable, AmenableRep};
use crate::geodesics::{averaging_map, DEFAULT_LEVELS};
use crate::geometry::{sphere_directions, Point, SampledCurve};
use crate::map::SmoothMap;
use crate::paths::{build_eps_path, verify_eps_path, EpsPathReport};
use crate::regularity::graph_curve;
use crate::sets::{OracleKind, ProjectionConfig, SetOracle, MEMBER_TOL};
use crate::{Error, Result};

/// Floor of the ε recipe.
pub const EPS_FLOOR: f64 = 1e-3;
/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;
/// Chord directions of the feasible sequence must be this close to `v`.
pub const DIRECTION_TOL: f64 = 5e-4;

/// A scalar objective `f: R^n -> R` with its gradient.
#[derive(Clone, Debug)]
pub struct Objective {
    map: SmoothMap,
}

impl Objective {
    pub fn new(map: SmoothMap) -> Result<Self> {
        if map.codomain_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: map.codomain_dim(),
            });
        }
        Ok(Self { map })
    }

    /// Parses an expression in `x1, …, xn`.
    pub fn parse(n: usize, src: &str) -> Result<Self> {
        Self::new(SmoothMap::from_exprs(n, &[src.to_string()])?)
    }

    pub fn label(&self) -> &str {
        self.map.label()
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        Ok(self.map.eval(x)?[0])
    }

    pub fn gradient(&self, x: &Point) -> Result<Point> {
        let j = self.map.jacobian(x)?;
        let g = j.row(0).transpose();
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::Evaluation(format!("non-finite gradient of `{}`", self.label())))
        }
    }
}

/// Outcome of [`check_first_order`].
#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderReport {
    pub point: Vec<f64>,
    pub gradient: Vec<f64>,
    /// `true` when `⟨∇f(x), v⟩ ≥ −tol` for every sampled tangent `v`.
    pub holds: bool,
    /// Unit tangent direction minimizing `⟨∇f(x), v⟩`.
    pub worst_direction: Vec<f64>,
    pub worst_value: f64,
    pub directions: usize,
    /// `amenable` or `feasible-sequence`.
    pub method: String,
    pub tol: f64,
}

/// Limit of unit chords `(P(x + ρu) − x)/‖·‖` as `ρ → 0`, estimated at two
/// small radii with Richardson extrapolation.
pub fn sequence_direction(c: &SetOracle, x: &Point, u: &Point, cfg: &ProjectionConfig) -> Option<Point> {
    let chord = |rho: f64| -> Option<Point> {
        let y = c.nearest(&(x + u * rho), cfg).ok()?;
        let w = y - x;
        (w.norm() > 1e-14).then(|| w.normalize())
    };
    let rho = f64::powi(2.0, -18);
    let (a, b) = (chord(rho)?, chord(0.5 * rho)?);
    if (&a - &b).norm() > 0.1 {
        return None;
    }
    let v = &b * 2.0 - &a;
    (v.norm() > 1e-12).then(|| v.normalize())
}

/// Samples tangent directions at `x` and tests `⟨∇f(x), v⟩ ≥ 0`. The
/// feasible-sequence limit along `−∇f(x)` is always included, since for
/// convex tangent cones it is the minimizing direction.
pub fn check_first_order(f: &Objective, c: &SetOracle, x: &Point, tol: f64, dirs: usize) -> Result<FirstOrderReport> {
    let g = f.gradient(x)?;
    let cfg = ProjectionConfig::default();
    let mut method = "feasible-sequence";
    let mut tangents: Vec<Point> = Vec::new();
    if let Some(rep) = &c.representation {
        if let Ok(sample) = AmenableRep::new(rep.clone(), x.clone(), MEMBER_TOL.max(tol))
            .and_then(|a| tangent_cone_amenable(&a, x, dirs, 1e-9))
        {
            tangents = sample.directions;
            method = "amenable";
        }
    }
    if method != "amenable" {
        tangents = sphere_directions(x.len(), dirs)
            .par_iter()
            .filter_map(|u| sequence_direction(c, x, u, &cfg))
            .collect();
    }
    if g.norm() > 0.0 {
        if let Some(v) = sequence_direction(c, x, &(-&g / g.norm()), &cfg) {
            tangents.push(v);
        }
    }
    let count = tangents.len();
    let (worst, value) = tangents
        .into_iter()
        .map(|v| {
            let s = g.dot(&v);
            (v, s)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or_else(|| (Point::zeros(x.len()), 0.0));
    Ok(FirstOrderReport {
        point: x.iter().copied().collect(),
        gradient: g.iter().copied().collect(),
        holds: value >= -tol,
        worst_direction: worst.iter().copied().collect(),
        worst_value: value,
        directions: count,
        method: method.to_string(),
        tol,
    })
}

/// A verified feasible descent curve.
#[derive(Clone, Debug, Serialize)]
pub struct DescentReport {
    pub point: Vec<f64>,
    pub gradient: Vec<f64>,
    pub direction: Vec<f64>,
    pub eps: f64,
    /// Member of the feasible sequence the curve ends at.
    pub target: Vec<f64>,
    /// Index `k` of the target `P(x + v/k)`.
    pub k: f64,
    #[serde(skip)]
    pub curve: SampledCurve,
    /// `(f∘γ)'(0)` per unit chord length, by the chain rule.
    pub slope: f64,
    /// The same slope from the first curve node by finite differences.
    pub slope_fd: f64,
    /// `⟨∇f, v⟩ + 2ε‖∇f‖`, the flat-case bound on the slope.
    pub slope_bound: f64,
    /// Largest grid parameter up to which `f∘γ` strictly decreases.
    pub t_star: f64,
    pub values: Vec<f64>,
    pub path: EpsPathReport,
}

impl DescentReport {
    /// Objective values paired with the grid.
    pub fn rows(&self) -> Vec<(f64, Vec<f64>, f64)> {
        self.curve
            .grid()
            .iter()
            .zip(self.curve.points())
            .zip(&self.values)
            .map(|((t, p), v)| (*t, p.iter().copied().collect(), *v))
            .collect()
    }
}

/// Curve from `x` to `xp` inside `c`: ε-path of the representation when
/// there is one, the graph curve on graphs, the averaging map otherwise.
fn feasible_curve(c: &SetOracle, x: &Point, xp: &Point, eps: f64) -> Result<(SampledCurve, EpsPathReport)> {
    if let Some(rep) = &c.representation {
        if let Ok(out) = AmenableRep::new(rep.clone(), x.clone(), MEMBER_TOL).and_then(|a| build_eps_path(&a, x, xp, eps)) {
            return Ok(out);
        }
    }
    let curve = match &c.kind {
        OracleKind::Graph(f) => graph_curve(f, x, xp, 256)?,
        _ => averaging_map(c, x, xp, DEFAULT_LEVELS, &ProjectionConfig::default())?.0,
    };
    let report = verify_eps_path(&curve, c, x, xp, eps);
    Ok((curve, report))
}

/// Builds a feasible curve from `x` along which `f` decreases at a linear
/// rate. The tangent `v` defaults to the worst direction of
/// [`check_first_order`]; `ε = max(−⟨∇f, v⟩ / (2‖∇f‖), 10⁻³)`.
pub fn descent_path(f: &Objective, c: &SetOracle, x: &Point, direction: Option<Point>, tol: f64) -> Result<DescentReport> {
    let g = f.gradient(x)?;
    let v = match direction {
        Some(v) => v.normalize(),
        None => {
            let fo = check_first_order(f, c, x, tol, 64)?;
            if fo.holds {
                return Err(Error::NoDescentDirection);
            }
            Point::from_vec(fo.worst_direction)
        }
    };
    let rate = g.dot(&v);
    if rate >= -tol {
        return Err(Error::NoDescentDirection);
    }
    let gn = g.norm();
    let eps = (-rate / (2.0 * gn)).max(EPS_FLOOR);
    let cfg = ProjectionConfig::default();
    let f0 = f.value(x)?;
    let mut diagnostics = Vec::new();
    // Shrink along a dyadic ladder until the chord direction realizes v.
    let mut chosen = None;
    for j in 1..=30 {
        let k = f64::powi(2.0, j);
        let Ok(xk) = c.nearest(&(x + &v / k), &cfg) else { continue };
        let d = &xk - x;
        if d.norm() < 1e-12 {
            continue;
        }
        let dir_err = (d.normalize() - &v).norm();
        chosen = Some((k, xk));
        if dir_err <= DIRECTION_TOL {
            break;
        }
    }
    let (k, xk) = chosen.ok_or_else(|| Error::DescentFailed("no feasible sequence along v".into()))?;
    let mut attempt = Some((k, xk));
    while let Some((k, xk)) = attempt.take() {
        let d = &xk - x;
        let dn = d.norm();
        match feasible_curve(c, x, &xk, eps) {
            Ok((curve, path)) if path.feasible() => {
                let values: Vec<f64> = curve.points().iter().map(|p| f.value(p)).collect::<Result<_>>()?;
                let slope = g.dot(&curve.derivs()[0]) / dn;
                let t1 = curve.grid()[1];
                let slope_fd = (values[1] - f0) / (t1 * dn);
                let mut t_star = 0.0;
                for i in 1..values.len() {
                    if values[i] < values[i - 1] {
                        t_star = curve.grid()[i];
                    } else {
                        break;
                    }
                }
                if slope < 0.0 && t_star > 0.0 {
                    return Ok(DescentReport {
                        point: x.iter().copied().collect(),
                        gradient: g.iter().copied().collect(),
                        direction: v.iter().copied().collect(),
                        eps,
                        target: xk.iter().copied().collect(),
                        k,
                        curve,
                        slope,
                        slope_fd,
                        slope_bound: rate + 2.0 * eps * gn,
                        t_star,
                        values,
                        path,
                    });
                }
                diagnostics.push(format!("k = {k}: slope {slope:.3e}, t* = {t_star}"));
            }
            Ok((_, path)) => diagnostics.push(format!("k = {k}: infeasible curve (residual {:.3e})", path.feasibility_residual)),
            Err(e) => diagnostics.push(format!("k = {k}: {e}")),
        }
        if k < 2f64.powi(40) {
            let k2 = 2.0 * k;
            attempt = c.nearest(&(x + &v / k2), &cfg).ok().map(|p| (k2, p));
        }
    }
    Err(Error::DescentFailed(diagnostics.join("; ")))
}

/// Armijo backtracking along a descent curve: the largest
/// `t ∈ {t*, t*/2, …}` with `f(γ(t)) ≤ f(x) + c t (f∘γ)'(0)`.
pub fn armijo_step(f: &Objective, report: &DescentReport, c: f64) -> Result<(f64, Point, f64)> {
    let f0 = report.values[0];
    let raw_slope = report.slope * (Point::from_vec(report.target.clone()) - Point::from_vec(report.point.clone())).norm();
    let mut t = report.t_star;
    for _ in 0..60 {
        let p = report.curve.eval(t);
        let v = f.value(&p)?;
        if v <= f0 + c * t * raw_slope {
            return Ok((t, p, v));
        }
        t *= 0.5;
    }
    Err(Error::DescentFailed("Armijo backtracking found no step".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::sets::catalog;

    #[test]
    fn objective_gradient() {
        let f = Objective::parse(2, "x1^2 + 3*x2").unwrap();
        let g = f.gradient(&point(&[2.0, 0.0])).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
        assert!(Objective::new(SmoothMap::identity(2)).is_err());
    }

    #[test]
    fn sequence_direction_on_circle_is_tangent() {
        let c = catalog("unit-circle").unwrap();
        let v = sequence_direction(&c, &point(&[1.0, 0.0]), &point(&[0.0, 1.0]), &ProjectionConfig::default()).unwrap();
        assert!(v[0].abs() < 1e-6 && (v[1] - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn first_order_on_power32_fails() {
        let c = catalog("power32-graph").unwrap();
        let f = Objective::parse(2, "x1").unwrap();
        let r = check_first_order(&f, &c, &point(&[0.0, 0.0]), 1e-6, 64).unwrap();
        assert!(!r.holds);
        assert!((r.worst_value + 1.0).abs() < 1e-3, "{r:?}");
        assert!((r.worst_direction[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn descent_refuses_at_minimizer() {
        let c = catalog("unit-ball").unwrap();
        let f = Objective::parse(2, "x1").unwrap();
        let err = descent_path(&f, &c, &point(&[-1.0, 0.0]), None, 1e-6).unwrap_err();
        assert!(matches!(err, Error::NoDescentDirection));
    }
}
