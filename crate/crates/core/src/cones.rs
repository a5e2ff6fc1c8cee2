//! Constraint qualifications, amenable tangent cones and sampled regular
//! normal cones.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{sphere_directions, Point};
use crate::sets::{Representation, SetOracle, MEMBER_TOL};

/// A representation anchored at a base point, with its Jacobian cached.
#[derive(Clone, Debug)]
pub struct AmenableRep {
    pub rep: Representation,
    pub base: Point,
    pub jacobian: DMatrix<f64>,
    pub value: Point,
}

impl AmenableRep {
    pub fn new(rep: Representation, base: Point, tol: f64) -> Result<Self> {
        if !(rep.radius > 0.0) {
            return Err(Error::Spec("representation radius must be positive".into()));
        }
        let value = rep.map.eval(&base)?;
        let residual = rep.body.residual(&value);
        if residual > tol.max(MEMBER_TOL) {
            return Err(Error::BaseNotFeasible { residual });
        }
        let jacobian = rep.map.jacobian(&base)?;
        Ok(Self {
            rep,
            base,
            jacobian,
            value,
        })
    }

    /// Representation of `oracle` anchored at `base`.
    pub fn from_oracle(oracle: &SetOracle, base: &Point) -> Result<Self> {
        let rep = oracle
            .representation
            .clone()
            .ok_or_else(|| Error::Spec(format!("set `{}` has no amenable representation", oracle.name)))?;
        Self::new(rep, base.clone(), MEMBER_TOL)
    }

    pub fn at(&self, base: &Point) -> Result<Self> {
        Self::new(self.rep.clone(), base.clone(), MEMBER_TOL)
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CqCertificate {
    /// `B(F(x̄) + λ ∇F(x̄) w, δ)` lies in `D`.
    Holds { w: Vec<f64>, lambda: f64, delta: f64 },
    /// Unit `y` in `N_D(F(x̄))` with `|∇F(x̄)^T y| = residual`.
    Fails { y: Vec<f64>, residual: f64 },
}

impl CqCertificate {
    pub fn holds(&self) -> bool {
        matches!(self, CqCertificate::Holds { .. })
    }
}

const CQ_ITERS: usize = 200;
const CQ_RESTARTS: usize = 16;
/// Interior margins are capped so whole-space bodies stay finite.
const MARGIN_CAP: f64 = 1e3;

/// Dual constraint qualification: searches `r` with
/// `F(x̄) + ∇F(x̄) r` deep inside `D`.
pub fn check_cq(rep: &AmenableRep, tol: f64) -> Result<CqCertificate> {
    let body = &rep.rep.body;
    if !body.has_interior() {
        return Err(Error::EmptyInterior);
    }
    let (j, f0) = (&rep.jacobian, &rep.value);
    let n = rep.dim();
    let phi = |r: &Point| body.margin(&(f0 + j * r)).min(MARGIN_CAP);
    let trust = 1.0;
    let clip = |r: Point| {
        let nr = r.norm();
        if nr > trust {
            r * (trust / nr)
        } else {
            r
        }
    };
    let mut starts: Vec<Point> = vec![DVector::zeros(n)];
    if let Ok(pinv) = j.clone().pseudo_inverse(1e-12) {
        starts.push(clip(pinv * (body.center() - f0)));
    }
    starts.extend(sphere_directions(n, CQ_RESTARTS).into_iter().map(|d| d * (0.5 * trust)));
    let ascend = |r0: &Point| -> (Point, f64) {
        let mut r = r0.clone();
        let mut best = (r.clone(), phi(&r));
        let h = 1e-7;
        for k in 0..CQ_ITERS {
            let base = phi(&r);
            let g = DVector::from_fn(n, |i, _| {
                let mut e = r.clone();
                e[i] += h;
                (phi(&e) - base) / h
            });
            let gn = g.norm();
            if gn == 0.0 || !gn.is_finite() {
                break;
            }
            r = clip(&r + g * (0.5 * trust / ((k + 1) as f64).sqrt() / gn));
            let v = phi(&r);
            if v > best.1 {
                best = (r.clone(), v);
            }
        }
        best
    };
    let (r, margin) = starts
        .par_iter()
        .map(ascend)
        .reduce_with(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one start");
    if margin > tol {
        let nr = r.norm();
        let (w, lambda) = if nr > 1e-12 {
            (r / nr, nr)
        } else {
            let mut e = DVector::zeros(n);
            e[0] = 1.0;
            let step = margin / (2.0 * j.norm()).max(1e-300);
            (e, step.min(1.0))
        };
        let delta = phi(&(&w * lambda));
        return Ok(CqCertificate::Holds {
            w: w.iter().copied().collect(),
            lambda,
            delta,
        });
    }
    let (y, residual) = min_normal_residual(rep);
    Ok(CqCertificate::Fails {
        y: y.iter().copied().collect(),
        residual,
    })
}

/// Minimizes `|∇F(x̄)^T y|` over unit `y` in `N_D(F(x̄))`.
fn min_normal_residual(rep: &AmenableRep) -> (Point, f64) {
    let (j, f0, body) = (&rep.jacobian, &rep.value, &rep.rep.body);
    let m = f0.len();
    let jjt = j * j.transpose();
    let step = 0.5 / jjt.norm().max(1e-12);
    let polish = |y0: Point| -> Option<(Point, f64)> {
        let mut y = body.normal_cone_project(f0, &y0);
        if y.norm() < 1e-12 {
            return None;
        }
        y /= y.norm();
        for _ in 0..500 {
            let z = body.normal_cone_project(f0, &(&y - &jjt * &y * step));
            let nz = z.norm();
            if nz < 1e-12 {
                break;
            }
            let z = z / nz;
            if (&z - &y).norm() < 1e-15 {
                y = z;
                break;
            }
            y = z;
        }
        let res = (j.transpose() * &y).norm();
        Some((y, res))
    };
    let mut dirs = sphere_directions(m, 64);
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(m);
            e[i] = s;
            dirs.push(e);
        }
    }
    dirs.into_iter()
        .filter_map(polish)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((DVector::zeros(m), f64::INFINITY))
}

/// Primal constraint qualification at the anchored point: the smallest
/// `|∇F^T y|` over unit normals must exceed `tol`.
pub fn cq_primal_holds(rep: &AmenableRep, tol: f64) -> bool {
    min_normal_residual(rep).1 > tol
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeKind {
    Tangent,
    RegularNormal,
}

#[derive(Clone, Debug)]
pub struct ConeSample {
    pub base: Point,
    pub directions: Vec<Point>,
    pub kind: ConeKind,
    /// Number of candidate directions examined.
    pub candidates: usize,
}

/// Samples `T_C(x) = ∇F(x)^{-1} T_D(F(x))` on `dirs` unit directions.
pub fn tangent_cone_amenable(rep: &AmenableRep, x: &Point, dirs: usize, tol: f64) -> Result<ConeSample> {
    let here = rep.at(x)?;
    if !cq_primal_holds(&here, tol) {
        return Err(Error::CqFailure);
    }
    let (j, fx, body) = (&here.jacobian, &here.value, &here.rep.body);
    let scale = j.norm().max(1.0);
    let candidates = sphere_directions(x.len(), dirs);
    let directions = candidates
        .iter()
        .filter(|u| {
            let ju = j * *u;
            (&ju - body.tangent_cone_project(fx, &ju)).norm() <= tol * scale
        })
        .cloned()
        .collect();
    Ok(ConeSample {
        base: x.clone(),
        directions,
        kind: ConeKind::Tangent,
        candidates: candidates.len(),
    })
}

/// Number of dyadic shrink steps in the little-o test.
const NORMAL_LEVELS: usize = 3;
const SAMPLES_PER_LEVEL: usize = 96;

/// Angular resolution of `count` sampled directions in dimension `n`.
fn direction_resolution(n: usize, count: usize) -> f64 {
    if n <= 1 {
        return 1e-9;
    }
    if n == 2 {
        (std::f64::consts::PI / count as f64).sin()
    } else {
        0.5 * (4.0 * std::f64::consts::PI / count as f64).powf(1.0 / (n as f64 - 1.0))
    }
}

/// Samples `N̂_C(x)`: keeps unit `v` whose sup-ratio
/// `<v, x' - x> / |x' - x|` over set samples halves each time the radius
/// shrinks by four, ending below the direction resolution.
pub fn regular_normal_sample(c: &SetOracle, x: &Point, radius: f64, samples: usize, seed: u64) -> Result<ConeSample> {
    let levels: Vec<Vec<Point>> = (0..=NORMAL_LEVELS)
        .map(|j| {
            let rho = radius / 4f64.powi(j as i32);
            let mut pts = c.sample_members(x, rho, SAMPLES_PER_LEVEL, seed.wrapping_add(j as u64));
            pts.retain(|p| (p - x).norm() > 1e-14);
            pts
        })
        .collect();
    if let Some(found) = levels.iter().map(|l| l.len()).min().filter(|&k| k < 10) {
        return Err(Error::TooFewSamples { found });
    }
    // Unit chords per level; the sup-ratio at radius rho uses every sample
    // drawn at that radius or below.
    let chords: Vec<Vec<Point>> = levels
        .iter()
        .map(|l| l.iter().map(|p| (p - x) / (p - x).norm()).collect())
        .collect();
    let tol = direction_resolution(x.len(), samples);
    let candidates = sphere_directions(x.len(), samples);
    let directions: Vec<Point> = candidates
        .par_iter()
        .filter(|v| {
            let sup: Vec<f64> = (0..=NORMAL_LEVELS)
                .map(|j| {
                    chords[j..]
                        .iter()
                        .flatten()
                        .map(|u| v.dot(u))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            sup[NORMAL_LEVELS] <= tol && sup.windows(2).all(|w| w[1] <= (0.5 * w[0]).max(tol))
        })
        .cloned()
        .collect();
    Ok(ConeSample {
        base: x.clone(),
        directions,
        kind: ConeKind::RegularNormal,
        candidates: candidates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexBody;
    use crate::geometry::point;
    use crate::map::SmoothMap;
    use crate::sets::catalog;

    fn rep_of(name: &str, base: &[f64]) -> AmenableRep {
        AmenableRep::from_oracle(&catalog(name).unwrap(), &point(base)).unwrap()
    }

    #[test]
    fn ball_boundary_holds_inward() {
        let r = rep_of("unit-ball", &[1.0, 0.0]);
        match check_cq(&r, 1e-9).unwrap() {
            CqCertificate::Holds { w, lambda, delta } => {
                assert!(w[0] < -0.99, "{w:?}");
                assert!((delta - lambda).abs() < 1e-3, "{delta} vs {lambda}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_map_into_orthant_fails() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let rep = Representation::new(
            SmoothMap::affine(a, DVector::zeros(2)),
            ConvexBody::orthant(&[1, -1]),
            DVector::zeros(2),
            1.0,
        );
        let r = AmenableRep::new(rep, point(&[0.0, 0.0]), 1e-9).unwrap();
        match check_cq(&r, 1e-9).unwrap() {
            CqCertificate::Fails { y, residual } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                assert!((y[0] + s).abs() < 1e-6 && (y[1] - s).abs() < 1e-6, "{y:?}");
                assert!(residual < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_interior_is_reported() {
        let r = rep_of("power32-graph", &[0.0, 0.0]);
        assert!(matches!(check_cq(&r, 1e-9), Err(Error::EmptyInterior)));
    }

    #[test]
    fn infeasible_base_is_rejected() {
        let c = catalog("unit-ball").unwrap();
        assert!(matches!(
            AmenableRep::from_oracle(&c, &point(&[2.0, 0.0])),
            Err(Error::BaseNotFeasible { .. })
        ));
    }

    #[test]
    fn tangent_cone_of_parabola_epigraph() {
        let r = rep_of("parabola-epigraph", &[0.0, 0.0]);
        let s = tangent_cone_amenable(&r, &point(&[0.0, 0.0]), 64, 1e-9).unwrap();
        assert!(!s.directions.is_empty());
        for u in &s.directions {
            assert!(u[1] >= -1e-12);
        }
        // Exact half-plane agreement on every sampled direction.
        assert_eq!(
            s.directions.len(),
            sphere_directions(2, 64).iter().filter(|u| u[1] >= -1e-12).count()
        );
    }

    #[test]
    fn tangent_cone_of_power32_graph() {
        let r = rep_of("power32-graph", &[0.0, 0.0]);
        let s = tangent_cone_amenable(&r, &point(&[0.0, 0.0]), 64, 1e-9).unwrap();
        assert_eq!(s.directions.len(), 2);
        for u in &s.directions {
            assert!(u[1].abs() < 1e-12 && (u[0].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_tangent_cone_is_everything() {
        let r = rep_of("unit-ball", &[0.2, 0.1]);
        let s = tangent_cone_amenable(&r, &point(&[0.2, 0.1]), 50, 1e-9).unwrap();
        assert_eq!(s.directions.len(), 50);
    }

    #[test]
    fn halfplane_regular_normal() {
        let c = catalog("halfplane").unwrap();
        let s = regular_normal_sample(&c, &point(&[0.0, 0.0]), 0.5, 64, 7).unwrap();
        assert!(!s.directions.is_empty());
        for v in &s.directions {
            assert!((v - point(&[0.0, 1.0])).norm() < 0.1, "{v}");
        }
    }

    #[test]
    fn parabola_pair_regular_normal() {
        let c = catalog("parabola-pair").unwrap();
        let x = 0.5;
        let s = regular_normal_sample(&c, &point(&[x, x * x]), 0.05, 128, 7).unwrap();
        let n = point(&[-2.0 * x, 1.0]).normalize();
        assert!(!s.directions.is_empty());
        for v in &s.directions {
            assert!((v - &n).norm() < 0.1 || (v + &n).norm() < 0.1, "{v}");
        }
        assert!(s.directions.iter().any(|v| v.dot(&n) > 0.0));
        assert!(s.directions.iter().any(|v| v.dot(&n) < 0.0));
    }

    #[test]
    fn ball_interior_has_no_regular_normals() {
        let c = catalog("unit-ball").unwrap();
        let s = regular_normal_sample(&c, &point(&[0.1, 0.0]), 0.2, 64, 7).unwrap();
        assert!(s.directions.is_empty());
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let c = catalog("unit-ball").unwrap();
        // Far from the set: no member in the ball.
        assert!(matches!(
            regular_normal_sample(&c, &point(&[5.0, 0.0]), 0.1, 16, 7),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
