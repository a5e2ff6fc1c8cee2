//! Construction and verification of ε-paths for amenable sets.
//!
//! An ε-path from `x` to `x'` is a C¹ curve in `C` with
//! `|γ'(t) - (x' - x)| <= ε |x' - x|` for every `t`. Sets with a
//! representation `F^{-1}(D)` where `D` has interior get the quadratic
//! perturbation of the chord; otherwise the representation is first reduced
//! to a chart of the manifold cut out by the degenerate directions of `D`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::cones::{check_cq, AmenableRep, CqCertificate};
use crate::error::{Error, Result};
use crate::geometry::{null_space, sigma_min, Point, SampledCurve, DEFAULT_INTERVALS};
use crate::map::SmoothMap;
use crate::sets::{Representation, SetOracle, MEMBER_TOL};

/// Feasibility tolerance used when verifying constructed curves.
pub const PATH_FEAS_TOL: f64 = 1e-8;
/// Relative slack for floating-point ties in `<=` comparisons.
const REL_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct EpsPathReport {
    pub eps: f64,
    /// `max_t |γ'(t) - (x' - x)| / |x' - x|`.
    pub achieved: f64,
    pub length: f64,
    pub chord: f64,
    /// `max_t |γ(t) - ((1-t)x + t x')| / (t |x' - x|)`.
    pub midline_ratio: f64,
    /// `max_t |γ(t) - ((1-t)x + t x')| / (2 t (1-t) |x' - x|)`.
    pub midline_sym_ratio: f64,
    pub feasibility_residual: f64,
    pub endpoint_error: f64,
    pub passes: bool,
}

impl EpsPathReport {
    pub fn derivative_ok(&self) -> bool {
        self.achieved <= self.eps * (1.0 + REL_SLACK) + 1e-15
    }

    pub fn length_ok(&self) -> bool {
        self.length <= (1.0 + self.eps) * self.chord * (1.0 + REL_SLACK) + 1e-15
    }

    pub fn midline_ok(&self) -> bool {
        let bound = self.eps * (1.0 + REL_SLACK) + 1e-12;
        self.midline_ratio <= bound && self.midline_sym_ratio <= bound
    }

    pub fn feasible(&self) -> bool {
        self.feasibility_residual <= PATH_FEAS_TOL
    }
}

/// Checks the ε-path inequalities, the length bound, both midline bounds and
/// feasibility at every grid node of `gamma`.
pub fn verify_eps_path(gamma: &SampledCurve, c: &SetOracle, x: &Point, xp: &Point, eps: f64) -> EpsPathReport {
    let d = xp - x;
    let chord = d.norm();
    let grid = gamma.grid();
    let pts = gamma.points();
    let ders = gamma.derivs();
    let per_node: Vec<(f64, f64, f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let t = grid[i];
            let dev_d = (&ders[i] - &d).norm();
            let mid = x * (1.0 - t) + xp * t;
            let dev = (&pts[i] - &mid).norm();
            let r1 = if t > 0.0 && chord > 0.0 { dev / (t * chord) } else { 0.0 };
            let denom = 2.0 * t * (1.0 - t) * chord;
            let r2 = if denom > 0.0 { dev / denom } else { 0.0 };
            (dev_d, r1, r2, c.residual(&pts[i]))
        })
        .collect();
    let max = |f: fn(&(f64, f64, f64, f64)) -> f64| per_node.iter().map(f).fold(0.0, f64::max);
    let max_dev = max(|v| v.0);
    let achieved = if chord > 0.0 {
        max_dev / chord
    } else if max_dev == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let endpoint_error = (gamma.start() - x).norm().max((gamma.end() - xp).norm());
    let mut report = EpsPathReport {
        eps,
        achieved,
        length: gamma.length(),
        chord,
        midline_ratio: max(|v| v.1),
        midline_sym_ratio: max(|v| v.2),
        feasibility_residual: max(|v| v.3),
        endpoint_error,
        passes: false,
    };
    report.passes = report.derivative_ok()
        && report.length_ok()
        && report.midline_ok()
        && report.feasible()
        && endpoint_error <= PATH_FEAS_TOL * chord.max(1.0);
    report
}

/// `(1-t) x + t x' + a t (1-t) |x' - x| w` with its analytic derivative.
fn perturbed_chord(x: &Point, xp: &Point, w: &Point, amplitude: f64, tag: &str) -> Result<SampledCurve> {
    let d = xp - x;
    let s = amplitude * d.norm();
    SampledCurve::from_fn(DEFAULT_INTERVALS, tag, |t| {
        let p = x * (1.0 - t) + xp * t + w * (s * t * (1.0 - t));
        let v = &d + w * (s * (1.0 - 2.0 * t));
        Ok((p, v))
    })
}

/// Largest representation residual along the nodes, with its parameter.
fn worst_residual(rep: &Representation, curve: &SampledCurve) -> (f64, f64) {
    curve
        .grid()
        .iter()
        .zip(curve.points())
        .map(|(&t, p)| (t, rep.residual(p)))
        .fold((0.0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc })
}

fn require_member(rep: &Representation, p: &Point, t: f64) -> Result<()> {
    let residual = rep.residual(p);
    if residual > MEMBER_TOL {
        return Err(Error::Infeasible { t, residual });
    }
    Ok(())
}

/// Interior-perturbation ε-path in a set whose body `D` has interior.
///
/// The perturbation direction is the unit direction of the constraint
/// qualification certificate. The amplitude is the smallest feasible one in
/// `[0, ε]` (found by bisection), doubled to keep the open segment strictly
/// inside, and capped at `ε`; a feasible straight chord gives amplitude 0.
pub fn build_eps_path_interior(rep: &AmenableRep, x: &Point, xp: &Point, eps: f64) -> Result<SampledCurve> {
    if !(eps >= 0.0) {
        return Err(Error::Spec("eps must be nonnegative".into()));
    }
    require_member(&rep.rep, x, 0.0)?;
    require_member(&rep.rep, xp, 1.0)?;
    let n = x.len();
    if (xp - x).norm() == 0.0 {
        return SampledCurve::from_fn(DEFAULT_INTERVALS, "constant", |_| Ok((x.clone(), DVector::zeros(n))));
    }
    let straight = perturbed_chord(x, xp, &DVector::zeros(n), 0.0, "interior")?;
    if worst_residual(&rep.rep, &straight).1 <= MEMBER_TOL {
        return Ok(straight);
    }
    let w = match check_cq(rep, MEMBER_TOL)? {
        CqCertificate::Holds { w, .. } => DVector::from_vec(w),
        CqCertificate::Fails { .. } => return Err(Error::CqFailure),
    };
    let feasible = |a: f64| -> Result<(bool, f64, f64)> {
        let c = perturbed_chord(x, xp, &w, a, "interior")?;
        let (t, r) = worst_residual(&rep.rep, &c);
        Ok((r <= MEMBER_TOL, t, r))
    };
    let (ok, t, residual) = feasible(eps)?;
    if !ok {
        return Err(Error::Infeasible { t, residual });
    }
    let (mut lo, mut hi) = (0.0, eps);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let amplitude = (2.0 * hi).min(eps);
    perturbed_chord(x, xp, &w, amplitude, "interior")
}

/// Local chart `u -> H(u)` of the manifold `F₂^{-1}(0)` around a base point,
/// with `u` the coordinates in an orthonormal basis of `Ker ∇F₂(x̄)`.
#[derive(Clone)]
pub struct Chart {
    pub base: Point,
    /// `n x d` orthonormal tangent basis.
    pub basis: DMatrix<f64>,
    f2: SmoothMap,
    /// Pseudo-inverse of `∇F₂(x̄)`, used by the chord-Newton corrector.
    corrector: DMatrix<f64>,
    pub validity_radius: f64,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("base", &self.base)
            .field("basis", &self.basis)
            .field("validity_radius", &self.validity_radius)
            .finish()
    }
}

const CORRECTOR_ITERS: usize = 20;
const CORRECTOR_TOL: f64 = 1e-10;

impl Chart {
    /// Builds a chart of `f2^{-1}(0)` at `base`; `∇f2(base)` must be onto.
    pub fn new(f2: SmoothMap, base: Point) -> Result<Self> {
        let j = f2.jacobian(&base)?;
        let s = sigma_min(&j);
        let scale = j.norm().max(1.0);
        if j.nrows() > 0 && (j.nrows() > j.ncols() || s <= 1e-8 * scale) {
            return Err(Error::RankDeficient { sigma_min: s });
        }
        let basis = null_space(&j, 1e-10);
        let corrector = if j.nrows() == 0 {
            DMatrix::zeros(base.len(), 0)
        } else {
            j.clone().pseudo_inverse(1e-14).map_err(|e| Error::Evaluation(e.to_string()))?
        };
        let mut chart = Self {
            base,
            basis,
            f2,
            corrector,
            validity_radius: 0.0,
        };
        chart.validity_radius = chart.probe_validity();
        Ok(chart)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `H(u)`: the manifold point over `x̄ + B u`.
    pub fn apply(&self, u: &Point) -> Result<Point> {
        let mut z = &self.base + &self.basis * u;
        if self.f2.codomain_dim() == 0 {
            return Ok(z);
        }
        for _ in 0..CORRECTOR_ITERS {
            let r = self.f2.eval(&z)?;
            if r.norm() <= CORRECTOR_TOL {
                return Ok(z);
            }
            z -= &self.corrector * r;
        }
        if self.f2.eval(&z)?.norm() <= CORRECTOR_TOL {
            Ok(z)
        } else {
            Err(Error::DomainExit)
        }
    }

    /// Coordinates of a manifold point near the base.
    pub fn inverse(&self, x: &Point) -> Point {
        self.basis.transpose() * (x - &self.base)
    }

    /// `dH(u)` at a point `z = H(u)`, from `B^T ż = u̇` and `∇F₂(z) ż = 0`.
    pub fn differential(&self, z: &Point) -> Result<DMatrix<f64>> {
        let (n, d) = (self.base.len(), self.dim());
        if self.f2.codomain_dim() == 0 {
            return Ok(self.basis.clone());
        }
        let j = self.f2.jacobian(z)?;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (d, n)).copy_from(&self.basis.transpose());
        m.view_mut((d, 0), (n - d, n)).copy_from(&j);
        let mut rhs = DMatrix::zeros(n, d);
        rhs.view_mut((0, 0), (d, d)).fill_with_identity();
        m.lu().solve(&rhs).ok_or(Error::DomainExit)
    }

    /// Largest dyadic radius `2^{-j}` at which the corrector converges in
    /// every basis direction and its round trip is exact.
    fn probe_validity(&self) -> f64 {
        let d = self.dim();
        let mut rho = 1.0;
        for _ in 0..40 {
            let ok = (0..d).all(|i| {
                [1.0, -1.0, 0.5, -0.5].iter().all(|&s| {
                    let mut u = DVector::zeros(d);
                    u[i] = s * rho;
                    self.apply(&u)
                        .map(|z| (self.inverse(&z) - &u).norm() <= 1e-8)
                        .unwrap_or(false)
                })
            });
            if ok {
                return rho;
            }
            rho *= 0.5;
        }
        0.0
    }
}

/// A smooth embedding used to push curves forward.
pub enum Embedding<'a> {
    Chart(&'a Chart),
    Map(&'a SmoothMap),
}

/// `H ∘ γ` with derivatives `dH(γ(t)) γ'(t)`.
pub fn pushforward_path(h: &Embedding<'_>, gamma: &SampledCurve) -> Result<SampledCurve> {
    let (pts, ders): (Vec<Point>, Vec<Point>) = gamma
        .points()
        .par_iter()
        .zip(gamma.derivs().par_iter())
        .map(|(p, v)| -> Result<(Point, Point)> {
            match h {
                Embedding::Chart(c) => {
                    if p.norm() > c.validity_radius * (1.0 + 1e-12) {
                        return Err(Error::DomainExit);
                    }
                    let z = c.apply(p)?;
                    let dz = c.differential(&z)? * v;
                    Ok((z, dz))
                }
                Embedding::Map(m) => {
                    let z = m.eval(p).map_err(|_| Error::DomainExit)?;
                    let dz = m.jacobian(p).map_err(|_| Error::DomainExit)? * v;
                    Ok((z, dz))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    SampledCurve::new(gamma.grid().to_vec(), pts, ders, &format!("{}-pushforward", gamma.tag()))
}

/// Result of reducing a representation whose body has empty interior.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub chart: Chart,
    /// Representation in chart coordinates; its body has interior in `R^k`
    /// (or is `R^0` when `k = 0`).
    pub reduced: AmenableRep,
}

/// Reduces `(F, D)` with `aff(D)` proper to `(F₁ ∘ H, P(D))` on a chart of
/// `F₂^{-1}(0)`, where `F₁`, `F₂` are the components of `F - a₀` along and
/// across the affine hull of `D`.
pub fn reduce_representation(rep: &AmenableRep) -> Result<Reduction> {
    let body = &rep.rep.body;
    if body.has_interior() {
        return Err(Error::ReductionNotApplicable);
    }
    let (hull, reduced_body) = body.reduce_to_hull();
    let q = hull.basis.clone();
    let q_perp = null_space(&q.transpose(), 1e-10);
    let a0 = hull.origin.clone();
    let n = rep.dim();
    let (k, m2) = (q.ncols(), q_perp.ncols());

    let f = rep.rep.map.clone();
    let f2 = {
        let (f, a0, qp) = (f.clone(), a0.clone(), q_perp.clone());
        let (fj, qpj) = (f.clone(), q_perp.clone());
        SmoothMap::new(n, m2, "F2", move |x| Ok(qp.transpose() * (f.eval(x)? - &a0)))
            .with_jacobian(move |x| Ok(qpj.transpose() * fj.jacobian(x)?))
    };
    let chart = Chart::new(f2, rep.base.clone())?;
    let d = chart.dim();
    let shared = Arc::new(chart.clone());
    let f1 = {
        let (c, f, a0, q) = (shared.clone(), f.clone(), a0.clone(), q.clone());
        let (cj, fj, qj) = (shared.clone(), f.clone(), q.clone());
        SmoothMap::new(d, k, "F1oH", move |u| Ok(q.transpose() * (f.eval(&c.apply(u)?)? - &a0))).with_jacobian(
            move |u| {
                let z = cj.apply(u)?;
                Ok(qj.transpose() * fj.jacobian(&z)? * cj.differential(&z)?)
            },
        )
    };
    let reduced_rep = Representation::new(f1, reduced_body, DVector::zeros(d), chart.validity_radius);
    let reduced = AmenableRep::new(reduced_rep, DVector::zeros(d), MEMBER_TOL)?;
    Ok(Reduction { chart, reduced })
}

/// Straight segment `(1-t) u + t u'`.
fn segment(u: &Point, up: &Point, tag: &str) -> Result<SampledCurve> {
    let d = up - u;
    SampledCurve::from_fn(DEFAULT_INTERVALS, tag, |t| Ok((u * (1.0 - t) + up * t, d.clone())))
}

/// Builds and verifies an ε-path between members `x`, `x'` of the set
/// represented by `rep`.
pub fn build_eps_path(rep: &AmenableRep, x: &Point, xp: &Point, eps: f64) -> Result<(SampledCurve, EpsPathReport)> {
    let oracle = SetOracle::preimage("representation", rep.rep.clone());
    if rep.rep.body.has_interior() {
        let curve = build_eps_path_interior(rep, x, xp, eps)?;
        let report = verify_eps_path(&curve, &oracle, x, xp, eps);
        return Ok((curve, report));
    }
    let red = reduce_representation(rep)?;
    let chart = &red.chart;
    let (u, up) = (chart.inverse(x), chart.inverse(xp));
    for (p, q) in [(x, &u), (xp, &up)] {
        if q.norm() > chart.validity_radius || (chart.apply(q)? - p).norm() > PATH_FEAS_TOL {
            return Err(Error::DomainExit);
        }
    }
    let k = red.reduced.rep.body.dim();
    // Distortion of the chart decides how much ε the chart curve may use.
    let dh = chart.differential(&chart.apply(&DVector::zeros(chart.dim()))?)?;
    let sv = dh.singular_values();
    let (c1, c2) = (
        sv.iter().cloned().fold(f64::INFINITY, f64::min),
        sv.iter().cloned().fold(0.0, f64::max),
    );
    let mut eps_u = (c1 * eps / (2.0 * c2)).min(0.5);
    let mut last = None;
    for _ in 0..8 {
        let inner = if k == 0 {
            segment(&u, &up, "chart-segment")?
        } else {
            build_eps_path_interior(&red.reduced, &u, &up, eps_u)?
        };
        let curve = pushforward_path(&Embedding::Chart(chart), &inner)?.with_tag("chart");
        let report = verify_eps_path(&curve, &oracle, x, xp, eps);
        if report.passes || k == 0 {
            return Ok((curve, report));
        }
        last = Some((curve, report));
        eps_u *= 0.5;
    }
    Ok(last.expect("at least one attempt"))
}

/// Largest dyadic radius (seeded by the certificate's constants) at which
/// paths between all pairs of sampled members verify at `eps`.
pub fn certified_radius(rep: &AmenableRep, eps: f64, pairs: usize, seed: u64) -> Result<f64> {
    let oracle = SetOracle::preimage("representation", rep.rep.clone());
    let mut rho = rep.rep.radius.min(1.0);
    if rep.rep.body.has_interior() {
        if let CqCertificate::Holds { lambda, .. } = check_cq(rep, MEMBER_TOL)? {
            if eps > 0.0 {
                rho = rho.min(4.0 * lambda / eps);
            }
        }
    }
    for level in 0..30u64 {
        let pts = oracle.sample_members(&rep.base, 0.5 * rho, 2 * pairs, seed.wrapping_add(level));
        // Every pair, so that boundary-to-boundary pairs are not missed.
        let ok = pts.len() >= 2
            && (0..pts.len()).all(|i| {
                (i + 1..pts.len()).all(|j| {
                    build_eps_path(rep, &pts[i], &pts[j], eps)
                        .map(|(_, r)| r.passes)
                        .unwrap_or(false)
                })
            });
        if ok {
            return Ok(rho);
        }
        rho *= 0.5;
    }
    Err(Error::NonConvergent("no radius certified within 30 halvings".into()))
}

/// The straight chord from `x` to `x'` on the default grid.
pub fn chord_curve(x: &Point, xp: &Point) -> Result<SampledCurve> {
    segment(x, xp, "chord")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexBody;
    use crate::geometry::point;
    use crate::sets::catalog;

    fn rep_of(name: &str) -> AmenableRep {
        let c = catalog(name).unwrap();
        AmenableRep::from_oracle(&c, &c.base_point).unwrap()
    }

    #[test]
    fn convex_pair_gives_straight_segment() {
        let rep = rep_of("unit-ball");
        let (x, xp) = (point(&[0.3, -0.2]), point(&[-0.5, 0.4]));
        let (c, r) = build_eps_path(&rep, &x, &xp, 1e-6).unwrap();
        assert_eq!(c.tag(), "interior");
        assert!(r.passes);
        assert!(r.achieved < 1e-12);
    }

    #[test]
    fn coincident_endpoints_give_constant_curve() {
        let rep = rep_of("unit-ball");
        let x = point(&[0.1, 0.1]);
        let (c, r) = build_eps_path(&rep, &x, &x, 0.1).unwrap();
        assert_eq!(c.length(), 0.0);
        assert_eq!(r.achieved, 0.0);
    }

    #[test]
    fn epigraph_pair_passes() {
        let rep = rep_of("parabola-epigraph");
        let (x, xp) = (point(&[-0.1, 0.01]), point(&[0.1, 0.01]));
        let (_, r) = build_eps_path(&rep, &x, &xp, 0.1).unwrap();
        assert!(r.passes && r.achieved <= 0.1, "{r:?}");
    }

    #[test]
    fn hypograph_pair_needs_strict_interior_perturbation() {
        let rep = rep_of("parabola-hypograph");
        let a = 0.02;
        let (x, xp) = (point(&[-a, a * a]), point(&[a, a * a]));
        let c = build_eps_path_interior(&rep, &x, &xp, 0.1).unwrap();
        let f = |p: &Point| p[0] * p[0] - p[1];
        let mid = c.eval(0.5);
        assert!(f(&mid) > 0.0, "midpoint must be strictly inside");
        let r = verify_eps_path(&c, &catalog("parabola-hypograph").unwrap(), &x, &xp, 0.1);
        assert!(r.passes, "{r:?}");
        // Hand computation: minimal amplitude is 2a, doubled to 4a.
        assert!((r.achieved - 4.0 * a).abs() < 1e-6, "{}", r.achieved);
    }

    #[test]
    fn power32_chart_route() {
        let rep = rep_of("power32-graph");
        let a: f64 = 1e-2;
        let (x, xp) = (point(&[-a, a.powf(1.5)]), point(&[a, a.powf(1.5)]));
        let (c, r) = build_eps_path(&rep, &x, &xp, 0.2).unwrap();
        assert_eq!(c.tag(), "chart");
        assert!(r.passes && r.achieved <= 0.2, "{r:?}");
    }

    #[test]
    fn reduction_of_power32_is_zero_dimensional() {
        let red = reduce_representation(&rep_of("power32-graph")).unwrap();
        assert_eq!(red.chart.dim(), 1);
        assert_eq!(red.reduced.rep.body.dim(), 0);
        let z = red.chart.apply(&point(&[0.04])).unwrap();
        assert!((z[1] - 0.04f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn reduction_of_plane_with_halfline() {
        let f = SmoothMap::new(3, 2, "xz", |p| Ok(point(&[p[0], p[2]])));
        let body = ConvexBody::product(vec![
            ConvexBody::boxed(&[f64::NEG_INFINITY], &[0.0]),
            ConvexBody::singleton(&[0.0]),
        ]);
        let rep = Representation::new(f, body, DVector::zeros(3), 1.0);
        let ar = AmenableRep::new(rep, point(&[-0.5, 0.0, 0.0]), 1e-9).unwrap();
        let red = reduce_representation(&ar).unwrap();
        assert_eq!(red.chart.dim(), 2);
        assert_eq!(red.reduced.rep.body.dim(), 1);
        assert!(red.reduced.rep.body.has_interior());
        for v in red.chart.basis.row(2).iter() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn full_hull_is_not_reducible() {
        assert!(matches!(
            reduce_representation(&rep_of("unit-ball")),
            Err(Error::ReductionNotApplicable)
        ));
    }

    #[test]
    fn rotation_pushforward_preserves_deviation() {
        let (x, xp) = (point(&[0.0, 0.0]), point(&[1.0, 0.5]));
        let seg = chord_curve(&x, &xp).unwrap();
        let (c, s) = (0.6f64, 0.8f64);
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let m = SmoothMap::affine(rot.clone(), DVector::zeros(2));
        let out = pushforward_path(&Embedding::Map(&m), &seg).unwrap();
        let whole = catalog("ball:100").unwrap();
        let r = verify_eps_path(&out, &whole, &(&rot * &x), &(&rot * &xp), 0.0);
        assert!(r.achieved < 1e-14 && r.passes, "{r:?}");
    }

    #[test]
    fn chart_round_trip() {
        let red = reduce_representation(&rep_of("unit-circle")).unwrap();
        for s in [-0.3, -0.01, 0.0, 0.2, 0.4] {
            let u = point(&[s]);
            let back = red.chart.inverse(&red.chart.apply(&u).unwrap());
            assert!((back - u).norm() < 1e-8);
        }
    }

    #[test]
    fn achieved_shrinks_with_pair_distance() {
        let rep = rep_of("power32-graph");
        let mut prev = f64::INFINITY;
        for j in 1..6 {
            let a = 0.2 * 0.5f64.powi(j);
            let (x, xp) = (point(&[-a, a.powf(1.5)]), point(&[a, a.powf(1.5)]));
            let (_, r) = build_eps_path(&rep, &x, &xp, 0.5).unwrap();
            assert!(r.achieved <= prev * 1.1);
            prev = r.achieved;
        }
        assert!(prev < 0.5);
    }

    #[test]
    fn infeasible_endpoint_is_rejected() {
        let rep = rep_of("unit-ball");
        let err = build_eps_path_interior(&rep, &point(&[2.0, 0.0]), &point(&[0.0, 0.0]), 0.1).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }
}
