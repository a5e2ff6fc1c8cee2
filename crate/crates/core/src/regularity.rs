//! Sampled checks and falsification searches for set regularity:
//! super-regularity, UAG, intrinsic approximate convexity, approximate
//! convexity of functions, prox-regularity and Clarke regularity.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geodesics::{averaging_map, intrinsic_distance_grid, DEFAULT_LEVELS};
use crate::geometry::{fd_derivative, point, Point, SampledCurve};
use crate::optim::compass_search;
use crate::paths::{chord_curve, verify_eps_path, EpsPathReport, PATH_FEAS_TOL};
use crate::sets::{catalog, sawtooth_slope, OracleKind, ProjectionConfig, ScalarFn, SetOracle, MEMBER_TOL};
use crate::cones::regular_normal_sample;
use crate::{Error, Result};

/// Relative margin a violation must clear to count as strict.
pub const STRICT_REL: f64 = 1e-9;

/// Regularity properties the checkers understand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    SuperRegularity,
    Uag,
    IntrinsicApproxConvexity,
    FunctionApproxConvexity,
    ProxRegularity,
    ClarkeRegularity,
    EpsPath,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::SuperRegularity,
        Property::Uag,
        Property::IntrinsicApproxConvexity,
        Property::FunctionApproxConvexity,
        Property::ProxRegularity,
        Property::ClarkeRegularity,
        Property::EpsPath,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Property::SuperRegularity => "super-regularity",
            Property::Uag => "uag",
            Property::IntrinsicApproxConvexity => "intrinsic-approx-convexity",
            Property::FunctionApproxConvexity => "function-approx-convexity",
            Property::ProxRegularity => "prox-regularity",
            Property::ClarkeRegularity => "clarke-regularity",
            Property::EpsPath => "eps-path",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .iter()
            .find(|p| p.as_str() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = Property::ALL.iter().map(|p| p.as_str()).collect();
                Error::Spec(format!("unknown property `{s}`; available: {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoViolationFound,
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NoViolationFound => "no-violation-found",
            Verdict::Violated => "violated",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-violation-found" => Ok(Verdict::NoViolationFound),
            "violated" => Ok(Verdict::Violated),
            _ => Err(Error::Spec(format!("unknown verdict `{s}`"))),
        }
    }
}

/// How much a `violated` verdict can be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    /// The witness is an explicit instance of the negated definition.
    Standard,
    /// The witness depends on a heuristic choice (best-fit direction or
    /// a finite candidate family).
    Lower,
}

/// Data exhibiting a violation: `lhs > rhs` for the named inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub points: Vec<Vec<f64>>,
    pub vectors: Vec<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
    /// Family parameter (for instance `t` or `k`) when structured.
    pub param: Option<f64>,
    pub label: String,
}

impl Witness {
    pub fn is_strict(&self) -> bool {
        is_strict(self.lhs, self.rhs)
    }
}

/// `lhs > rhs` with a relative margin of [`STRICT_REL`].
pub fn is_strict(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + STRICT_REL * rhs.abs().max(lhs.abs()) + 1e-15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub property: Property,
    pub set: String,
    pub point: Vec<f64>,
    pub eps: f64,
    pub radius: f64,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Number of tested instances (pairs, points or pair-parameter combinations).
    pub samples: usize,
    pub seed: u64,
    /// Smallest `rhs - lhs` observed; negative when violated.
    pub min_margin: f64,
    pub confidence: Confidence,
    pub note: String,
}

impl RegularityVerdict {
    pub fn violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

/// One evaluated instance: its slack and, when strict, the witness.
struct Outcome {
    margin: f64,
    witness: Option<Witness>,
}

struct Tally {
    samples: usize,
    min_margin: f64,
    witness: Option<Witness>,
}

/// Order-independent reduction: minimum margin and the first witness in
/// index order.
fn tally(outcomes: Vec<Vec<Outcome>>) -> Tally {
    let mut t = Tally {
        samples: 0,
        min_margin: f64::INFINITY,
        witness: None,
    };
    for o in outcomes.into_iter().flatten() {
        t.samples += 1;
        t.min_margin = t.min_margin.min(o.margin);
        if t.witness.is_none() {
            t.witness = o.witness;
        }
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn finish(
    property: Property,
    set: &str,
    xbar: &Point,
    eps: f64,
    r: f64,
    seed: u64,
    t: Tally,
    confidence: Confidence,
    note: &str,
) -> RegularityVerdict {
    RegularityVerdict {
        property,
        set: set.to_string(),
        point: xbar.iter().copied().collect(),
        eps,
        radius: r,
        verdict: if t.witness.is_some() {
            Verdict::Violated
        } else {
            Verdict::NoViolationFound
        },
        witness: t.witness,
        samples: t.samples,
        seed,
        min_margin: if t.min_margin.is_finite() { t.min_margin } else { 0.0 },
        confidence,
        note: note.to_string(),
    }
}

fn row(p: &Point) -> Vec<f64> {
    p.iter().copied().collect()
}

/// Structured pairs followed by random ones, all inside `B_r(x̄)`:
/// mirror pairs `(m, mirror(m))` and radial pairs `(x̄, m)` at dyadic
/// parameters, then consecutive random members.
fn member_pairs(c: &SetOracle, xbar: &Point, r: f64, samples: usize, seed: u64, mirror_ladder: bool) -> Vec<(Point, Point, Option<f64>)> {
    let inside = |p: &Point| (p - xbar).norm() <= r * (1.0 + 1e-12);
    let mut out = Vec::new();
    if mirror_ladder && c.mirror_axis.is_some() {
        for k in 1..=256 {
            for t in [1.0 / k as f64, -1.0 / k as f64] {
                for m in c.param_members(t) {
                    if let Some(mm) = c.mirror(&m) {
                        if (&mm - &m).norm() > 0.0 && inside(&m) && inside(&mm) && c.contains(&mm, MEMBER_TOL) {
                            out.push((m, mm, Some(k as f64)));
                        }
                    }
                }
            }
        }
    }
    if c.contains(xbar, MEMBER_TOL) {
        for j in 1..=6 {
            let t = r / f64::from(1u32 << j);
            for s in [t, -t] {
                for m in c.param_members(s) {
                    if inside(&m) && (&m - xbar).norm() > 0.0 {
                        out.push((xbar.clone(), m.clone(), Some(s)));
                        if let Some(mm) = c.mirror(&m) {
                            if (&mm - &m).norm() > 0.0 && inside(&mm) && c.contains(&mm, MEMBER_TOL) {
                                out.push((m, mm, Some(s)));
                            }
                        }
                    }
                }
            }
        }
    }
    let members = c.sample_members(xbar, r, samples + 1, seed);
    for w in members.windows(2) {
        if (&w[1] - &w[0]).norm() > 0.0 {
            out.push((w[0].clone(), w[1].clone(), None));
        }
    }
    out
}

/// Normals at a member `x`: closed-form generators when the oracle has
/// them, `∇F(x)ᵀ N_D(F(x))` for representations, sampled otherwise.
fn normals_at(c: &SetOracle, x: &Point, r: f64, seed: u64) -> Result<Vec<Point>> {
    if let Some(cones) = c.exact_cones(x) {
        return Ok(cones.regular.generators());
    }
    if let Some(rep) = &c.representation {
        let y = rep.map.eval(x)?;
        let j = rep.map.jacobian(x)?;
        let m = y.len();
        let mut out: Vec<Point> = Vec::new();
        for w in crate::geometry::sphere_directions(m, 16) {
            let n = rep.body.normal_cone_project(&y, &w);
            if n.norm() > 1e-12 {
                let v = j.transpose() * n;
                if v.norm() > 1e-12 && !out.iter().any(|u| (u.normalize() - v.normalize()).norm() < 1e-9) {
                    out.push(v);
                }
            }
        }
        return Ok(out);
    }
    Ok(regular_normal_sample(c, x, r / 8.0, 96, seed)?.directions)
}

/// Super-regularity: `⟨v, x' − x⟩ ≤ ε‖v‖‖x' − x‖` for members
/// `x, x' ∈ B_r(x̄)` and regular normals `v` at `x`.
pub fn check_super_regularity(c: &SetOracle, xbar: &Point, eps: f64, r: f64, samples: usize, seed: u64) -> Result<RegularityVerdict> {
    let pairs = member_pairs(c, xbar, r, samples, seed, true);
    let outcomes: Vec<Vec<Outcome>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, xp, param))| {
            let normals = normals_at(c, x, r, seed.wrapping_add(i as u64))?;
            let d = xp - x;
            Ok(normals
                .iter()
                .map(|v| {
                    let lhs = v.dot(&d);
                    let rhs = eps * v.norm() * d.norm();
                    Outcome {
                        margin: rhs - lhs,
                        witness: is_strict(lhs, rhs).then(|| Witness {
                            points: vec![row(x), row(xp)],
                            vectors: vec![row(v)],
                            lhs,
                            rhs,
                            param: *param,
                            label: "<v, x'-x> > eps |v| |x'-x|".into(),
                        }),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let t = tally(outcomes);
    Ok(finish(Property::SuperRegularity, &c.name, xbar, eps, r, seed, t, Confidence::Standard, ""))
}

/// Smallest `ε'` such that the ordered points admit nondecreasing
/// parameters `0 = t_0 ≤ … ≤ t_m = 1` with `‖p_i − (x + t_i d)‖ ≤ ε' t_i ‖d‖`.
/// Linear interpolation between points then satisfies the same bound.
pub fn uag_requirement(points: &[Point], d: &Point) -> f64 {
    requirement(&offsets(points), d)
}

/// `(p_i − p_0, ‖p_i − p_0‖²)` for `i ≥ 1`.
fn offsets(points: &[Point]) -> Vec<(Point, f64)> {
    points[1..]
        .iter()
        .map(|p| {
            let w = p - &points[0];
            let c = w.norm_squared();
            (w, c)
        })
        .collect()
}

fn requirement(ws: &[(Point, f64)], d: &Point) -> f64 {
    let dn2 = d.norm_squared();
    if ws.is_empty() || dn2 == 0.0 {
        return f64::INFINITY;
    }
    let bs: Vec<f64> = ws.iter().map(|(w, _)| w.dot(d)).collect();
    let feasible = |e: f64| -> bool {
        let a = dn2 * (1.0 - e * e);
        let mut prev = 0.0_f64;
        let last = ws.len() - 1;
        for (i, ((_, c), b)) in ws.iter().zip(&bs).enumerate() {
            let Some((lo, hi)) = cone_interval(a, *b, *c) else {
                return false;
            };
            let t = if i == last { 1.0 } else { prev.max(lo) };
            if t < lo || t > hi || t < prev {
                return false;
            }
            prev = t;
        }
        true
    };
    let cap = 4.0;
    if !feasible(cap) {
        return f64::INFINITY;
    }
    if feasible(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Rounding allowance on the parameter intervals of [`cone_interval`].
const INTERVAL_SLACK: f64 = 1e-12;

/// `{t ≥ 0 : ‖w − t d‖ ≤ e t ‖d‖}` from `a = ‖d‖²(1 − e²)`, `b = ⟨w, d⟩`,
/// `c = ‖w‖²`; a closed interval, capped at 1.
fn cone_interval(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let (lo, hi) = if c == 0.0 {
        (0.0, if a > 0.0 { 0.0 } else { f64::INFINITY })
    } else if a.abs() < 1e-300 {
        if b <= 0.0 {
            return None;
        }
        (c / (2.0 * b), f64::INFINITY)
    } else {
        let mut disc = b * b - a * c;
        if disc < 0.0 {
            // A tangent ray gives a zero discriminant up to rounding.
            if disc < -INTERVAL_SLACK * b * b {
                return None;
            }
            disc = 0.0;
        }
        let sq = disc.sqrt();
        let (r1, r2) = ((b - sq) / a, (b + sq) / a);
        let (s1, s2) = (r1.min(r2), r1.max(r2));
        if a > 0.0 {
            if s2 < 0.0 {
                return None;
            }
            (s1.max(0.0), s2)
        } else {
            (s2.max(0.0), f64::INFINITY)
        }
    };
    let (lo, hi) = ((lo - INTERVAL_SLACK).max(0.0), (hi + INTERVAL_SLACK).min(1.0));
    (lo <= hi).then_some((lo, hi))
}

/// Minimizes [`uag_requirement`] over `d`, starting from the chord.
pub fn best_fit_direction(points: &[Point]) -> (Point, f64) {
    let d0 = points.last().unwrap() - &points[0];
    let scale = d0.norm();
    if scale == 0.0 {
        return (d0, f64::INFINITY);
    }
    let ws = offsets(points);
    let obj = |d: &Point| requirement(&ws, d);
    let base = obj(&d0);
    if base == 0.0 {
        return (d0, 0.0);
    }
    let (d, v) = compass_search(obj, d0.clone(), 0.25 * scale, 1e-7 * scale, 400);
    if v < base {
        (d, v)
    } else {
        (d0, base)
    }
}

/// Feasible polyline from `x` to `x'` along the grid oracle, densified to
/// half the pitch and snapped onto the set.
fn grid_curve_points(c: &SetOracle, x: &Point, xp: &Point, pitch: f64) -> Result<Vec<Point>> {
    let est = intrinsic_distance_grid(c, x, xp, pitch)?;
    if !est.estimate.is_finite() {
        return Err(Error::NonConvergent(format!(
            "grid oracle found no path between {:?} and {:?}",
            row(x),
            row(xp)
        )));
    }
    let verts = est.polyline.points();
    let cfg = ProjectionConfig {
        starts: 16,
        ..ProjectionConfig::default()
    };
    let mut out = vec![x.clone()];
    for w in verts.windows(2) {
        let len = (&w[1] - &w[0]).norm();
        let pieces = ((len / (0.5 * pitch)).ceil() as usize).max(1);
        for k in 1..=pieces {
            let q = &w[0] + (&w[1] - &w[0]) * (k as f64 / pieces as f64);
            let snapped = if c.contains(&q, MEMBER_TOL) { q } else { c.nearest(&q, &cfg)? };
            if (&snapped - out.last().unwrap()).norm() > 1e-14 {
                out.push(snapped);
            }
        }
    }
    let last = out.len() - 1;
    out[last] = xp.clone();
    if out.len() < 2 {
        out.push(xp.clone());
    }
    Ok(out)
}

/// Uniform approximate geodesicity: some curve `γ` in `C` from `x` to `x'`
/// and direction `d` with `‖γ(t) − (x + td)‖ ≤ εt‖d‖`. Curves come from the
/// grid oracle at `pitch` (default `r/100`), `d` from a best-fit search.
pub fn check_uag(c: &SetOracle, xbar: &Point, eps: f64, r: f64, samples: usize, seed: u64, pitch: Option<f64>) -> Result<RegularityVerdict> {
    let pitch = pitch.unwrap_or(r / 100.0);
    let pairs = member_pairs(c, xbar, r, samples, seed, false);
    let outcomes: Vec<Vec<Outcome>> = pairs
        .par_iter()
        .map(|(x, xp, param)| {
            let pts = grid_curve_points(c, x, xp, pitch)?;
            let chord = xp - x;
            let base = uag_requirement(&pts, &chord);
            let (d, need) = if base <= eps { (chord, base) } else { best_fit_direction(&pts) };
            Ok(vec![Outcome {
                margin: eps - need,
                witness: is_strict(need, eps).then(|| Witness {
                    points: vec![row(x), row(xp)],
                    vectors: vec![row(&d)],
                    lhs: need,
                    rhs: eps,
                    param: *param,
                    label: "min over grid curve of |g(t) - (x + t d)| / (t |d|) > eps".into(),
                }),
            }])
        })
        .collect::<Result<_>>()?;
    let t = tally(outcomes);
    Ok(finish(
        Property::Uag,
        &c.name,
        xbar,
        eps,
        r,
        seed,
        t,
        Confidence::Lower,
        &format!("grid pitch {pitch:e}; direction d by best fit"),
    ))
}

const T_GRID: usize = 16;

/// Intrinsic approximate convexity: `d((1−t)x + tx', C) ≤ εt(1−t)‖x' − x‖`.
pub fn check_intrinsic_approx_convexity(c: &SetOracle, xbar: &Point, eps: f64, r: f64, samples: usize, seed: u64) -> Result<RegularityVerdict> {
    let pairs = member_pairs(c, xbar, r, samples, seed, false);
    let outcomes: Vec<Vec<Outcome>> = pairs
        .par_iter()
        .map(|(x, xp, param)| {
            let dn = (xp - x).norm();
            (1..T_GRID)
                .map(|i| {
                    let t = i as f64 / T_GRID as f64;
                    let z = x * (1.0 - t) + xp * t;
                    let lhs = c.distance(&z);
                    let rhs = eps * t * (1.0 - t) * dn;
                    Outcome {
                        margin: rhs - lhs,
                        witness: is_strict(lhs, rhs).then(|| Witness {
                            points: vec![row(x), row(xp), row(&z)],
                            vectors: Vec::new(),
                            lhs,
                            rhs,
                            param: param.or(Some(t)),
                            label: format!("dist(z, C) > eps t(1-t) |x'-x| at t = {t}"),
                        }),
                    }
                })
                .collect()
        })
        .collect();
    let t = tally(outcomes);
    Ok(finish(Property::IntrinsicApproxConvexity, &c.name, xbar, eps, r, seed, t, Confidence::Standard, ""))
}

/// Approximate convexity of `f`:
/// `f((1−t)x + tx') ≤ (1−t)f(x) + tf(x') + εt(1−t)‖x' − x‖` on `B_r(x̄)`.
pub fn check_function_approx_convexity<F>(label: &str, f: F, xbar: &Point, eps: f64, r: f64, samples: usize, seed: u64) -> Result<RegularityVerdict>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let n = xbar.len();
    let mut pairs: Vec<(Point, Point)> = Vec::new();
    for j in 0..6 {
        let s = r / f64::from(1u32 << j);
        for i in 0..n {
            let mut e = Point::zeros(n);
            e[i] = s;
            pairs.push((xbar - &e, xbar + &e));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ball = || loop {
        let v = Point::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
        if v.norm() <= 1.0 {
            return xbar + v * r;
        }
    };
    for _ in 0..samples {
        pairs.push((ball(), ball()));
    }
    let outcomes: Vec<Vec<Outcome>> = pairs
        .par_iter()
        .map(|(x, xp)| {
            let (fx, fxp) = (f(x)?, f(xp)?);
            let dn = (xp - x).norm();
            (1..T_GRID)
                .map(|i| {
                    let t = i as f64 / T_GRID as f64;
                    let z = x * (1.0 - t) + xp * t;
                    let lhs = f(&z)?;
                    let rhs = (1.0 - t) * fx + t * fxp + eps * t * (1.0 - t) * dn;
                    Ok(Outcome {
                        margin: rhs - lhs,
                        witness: is_strict(lhs, rhs).then(|| Witness {
                            points: vec![row(x), row(xp), row(&z)],
                            vectors: Vec::new(),
                            lhs,
                            rhs,
                            param: Some(t),
                            label: "f(z) > (1-t) f(x) + t f(x') + eps t(1-t) |x'-x|".into(),
                        }),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let t = tally(outcomes);
    Ok(finish(Property::FunctionApproxConvexity, label, xbar, eps, r, seed, t, Confidence::Standard, ""))
}

/// Ratio under which a nearest-point candidate counts as co-minimal.
pub const CO_MINIMAL_RATIO: f64 = 1.05;

/// Probes uniqueness of nearest points for off-set points of `B_r(x̄)`:
/// axis points `x̄ ± (jr/grid) e_i` first, then a `grid^n` lattice
/// (random points when `n > 3`).
pub fn probe_prox_regularity(c: &SetOracle, xbar: &Point, r: f64, grid: usize, seed: u64) -> Result<RegularityVerdict> {
    let n = xbar.len();
    let grid = grid.max(2);
    let mut probes: Vec<Point> = Vec::new();
    for j in 1..=grid {
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut q = xbar.clone();
                q[i] += s * r * j as f64 / grid as f64;
                probes.push(q);
            }
        }
    }
    if n <= 3 {
        let total = grid.pow(n as u32);
        for idx in 0..total {
            let mut q = xbar.clone();
            let mut k = idx;
            for i in 0..n {
                q[i] += r * (-1.0 + 2.0 * (k % grid) as f64 / (grid - 1) as f64);
                k /= grid;
            }
            probes.push(q);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..grid * grid {
            probes.push(xbar + Point::from_fn(n, |_, _| rng.gen_range(-r..=r)));
        }
    }
    probes.retain(|q| (q - xbar).norm() <= r * (1.0 + 1e-12));
    let cfg = ProjectionConfig {
        co_minimal_ratio: Some(CO_MINIMAL_RATIO),
        seed,
        ..ProjectionConfig::default()
    };
    let threshold = 10.0 * cfg.cluster;
    let outcomes: Vec<Vec<Outcome>> = probes
        .par_iter()
        .map(|q| {
            if c.contains(q, MEMBER_TOL) {
                return Ok(Vec::new());
            }
            let near = c.project_with_distances(q, &cfg)?;
            let mut sep = 0.0_f64;
            for (i, (a, _)) in near.iter().enumerate() {
                for (b, _) in &near[i + 1..] {
                    sep = sep.max((a - b).norm());
                }
            }
            Ok(vec![Outcome {
                margin: threshold - sep,
                witness: is_strict(sep, threshold).then(|| Witness {
                    points: std::iter::once(row(q)).chain(near.iter().map(|(p, _)| row(p))).collect(),
                    vectors: Vec::new(),
                    lhs: sep,
                    rhs: threshold,
                    param: Some(near[0].1),
                    label: "separation of co-minimal nearest points > 10 cluster".into(),
                }),
            }])
        })
        .collect::<Result<_>>()?;
    let t = tally(outcomes);
    Ok(finish(
        Property::ProxRegularity,
        &c.name,
        xbar,
        0.0,
        r,
        seed,
        t,
        Confidence::Standard,
        &format!("co-minimal ratio {CO_MINIMAL_RATIO}"),
    ))
}

/// Exact Clarke verdict from closed-form cones: regular iff the limiting
/// normal cone equals the regular one (`N̂ ⊆ N` always holds).
pub fn clarke_verdict(c: &SetOracle, x: &Point) -> Result<RegularityVerdict> {
    let cones = c
        .exact_cones(x)
        .ok_or_else(|| Error::Spec(format!("set `{}` has no closed-form cones at {:?}", c.name, row(x))))?;
    let extra: Vec<Point> = cones
        .limiting
        .generators()
        .into_iter()
        .filter(|v| !cones.regular.contains_direction(v, 1e-12))
        .collect();
    let regular = cones.limiting.is_subset_of(&cones.regular, 1e-12) && extra.is_empty();
    let witness = (!regular).then(|| Witness {
        points: vec![row(x)],
        vectors: extra.iter().map(row).collect(),
        lhs: extra.len().max(1) as f64,
        rhs: 0.0,
        param: None,
        label: "limiting normals outside the regular normal cone".into(),
    });
    Ok(RegularityVerdict {
        property: Property::ClarkeRegularity,
        set: c.name.clone(),
        point: row(x),
        eps: 0.0,
        radius: 0.0,
        verdict: if regular { Verdict::NoViolationFound } else { Verdict::Violated },
        min_margin: if regular { 0.0 } else { -(extra.len().max(1) as f64) },
        witness,
        samples: 1,
        seed: 0,
        confidence: Confidence::Standard,
        note: "closed-form cones".into(),
    })
}

/// [`clarke_verdict`] for a catalog set by name.
pub fn clarke_verdict_catalog(name: &str, x: &Point) -> Result<RegularityVerdict> {
    clarke_verdict(&catalog(name)?, x)
}

/// Corners of a graph between `a` and `b`: points where the one-sided
/// slopes differ.
fn graph_corners(f: &ScalarFn, a: f64, b: f64) -> Vec<f64> {
    let (lo, hi) = (a.min(b), a.max(b));
    let mut out: Vec<f64> = f
        .kinks(lo, hi)
        .into_iter()
        .filter(|&k| k > lo && k < hi)
        .filter(|&k| match f {
            ScalarFn::Sawtooth => k != 0.0,
            ScalarFn::Expr(_) => {
                let h = 1e-6 * k.abs().max(1e-3);
                let fk = f.eval(k).unwrap_or(f64::NAN);
                let sr = (f.eval(k + h).unwrap_or(f64::NAN) - fk) / h;
                let sl = (fk - f.eval(k - h).unwrap_or(f64::NAN)) / h;
                (sr - sl).abs() > 1e-3
            }
        })
        .collect();
    out.sort_by(f64::total_cmp);
    if a > b {
        out.reverse();
    }
    out
}

fn scalar_slope(f: &ScalarFn, s: f64) -> f64 {
    match f {
        ScalarFn::Sawtooth => sawtooth_slope(s),
        ScalarFn::Expr(_) => {
            let h = 1e-7 * s.abs().max(1e-3);
            (f.eval(s + h).unwrap_or(f64::NAN) - f.eval(s - h).unwrap_or(f64::NAN)) / (2.0 * h)
        }
    }
}

/// The graph of `f` from `x` to `x'`, traversed by its first coordinate.
/// A C¹ curve inside a graph must have zero velocity at every corner it
/// crosses, so each segment between corners uses the profile
/// `3s² − 2s³`, whose speed vanishes at both ends.
pub fn graph_curve(f: &ScalarFn, x: &Point, xp: &Point, nodes_per_segment: usize) -> Result<SampledCurve> {
    let mut breaks = vec![x[0]];
    breaks.extend(graph_corners(f, x[0], xp[0]));
    breaks.push(xp[0]);
    let lens: Vec<f64> = breaks
        .windows(2)
        .map(|w| {
            let (fa, fb) = (f.eval(w[0]).unwrap_or(0.0), f.eval(w[1]).unwrap_or(0.0));
            (w[1] - w[0]).hypot(fb - fa)
        })
        .collect();
    let total: f64 = lens.iter().sum();
    if total == 0.0 {
        return chord_curve(x, xp);
    }
    let m = nodes_per_segment.max(4);
    let (mut grid, mut pts, mut ders) = (vec![0.0], vec![x.clone()], vec![Point::zeros(2)]);
    let mut t0 = 0.0;
    let single = breaks.len() == 2;
    for (i, w) in breaks.windows(2).enumerate() {
        let dt = lens[i] / total;
        let t1 = if i + 2 == breaks.len() { 1.0 } else { t0 + dt };
        if t1 <= t0 {
            continue;
        }
        for j in 1..=m {
            let s = j as f64 / m as f64;
            // Without interior corners the straight parametrization is already C¹.
            let (phi, dphi) = if single { (s, 1.0) } else { (3.0 * s * s - 2.0 * s.powi(3), 6.0 * s * (1.0 - s)) };
            let xs = w[0] + (w[1] - w[0]) * phi;
            let vx = (w[1] - w[0]) * dphi / (t1 - t0);
            grid.push(if j == m { t1 } else { t0 + (t1 - t0) * s });
            pts.push(point(&[xs, f.eval(xs)?]));
            ders.push(point(&[vx, scalar_slope(f, xs) * vx]));
        }
        t0 = t1;
    }
    if single {
        let v = point(&[xp[0] - x[0], scalar_slope(f, x[0]) * (xp[0] - x[0])]);
        ders[0] = v;
    }
    let last = pts.len() - 1;
    pts[last] = xp.clone();
    SampledCurve::new(grid, pts, ders, "graph")
}

/// Arc-length parametrized curve through `points` with finite-difference
/// derivatives.
fn arclength_curve(points: &[Point], tag: &str) -> Result<SampledCurve> {
    let mut pts: Vec<Point> = vec![points[0].clone()];
    for p in &points[1..] {
        if (p - pts.last().unwrap()).norm() > 1e-13 {
            pts.push(p.clone());
        }
    }
    if pts.len() < 3 {
        return chord_curve(&points[0], points.last().unwrap());
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + (&w[1] - &w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut grid: Vec<f64> = cum.iter().map(|s| s / total).collect();
    let last = grid.len() - 1;
    grid[last] = 1.0;
    let ders = fd_derivative(&pts, &grid)?;
    SampledCurve::new(grid, pts, ders, tag)
}

/// Falsification search for ε-paths: for each pair, tries the chord, the
/// averaging map and the grid-oracle curve (on graphs, the graph curve with
/// stops at corners). `violated` means no candidate beat ε for some pair;
/// it is a search result, not a proof.
pub fn search_eps_path_violation(c: &SetOracle, xbar: &Point, eps: f64, pairs: &[(Point, Point)], pitch: f64) -> Result<RegularityVerdict> {
    let outcomes: Vec<Vec<Outcome>> = pairs
        .par_iter()
        .map(|(x, xp)| {
            let reports = eps_path_candidates(c, x, xp, eps, pitch);
            let best = reports
                .iter()
                .filter(|(_, r)| r.feasible())
                .min_by(|a, b| a.1.achieved.total_cmp(&b.1.achieved))
                .or_else(|| reports.iter().min_by(|a, b| a.1.feasibility_residual.total_cmp(&b.1.feasibility_residual)));
            let passed = reports.iter().any(|(_, r)| r.passes);
            let (tag, achieved) = best.map_or(("none".to_string(), f64::MAX), |(t, r)| (t.clone(), r.achieved));
            let margin = if passed { (eps - achieved).max(0.0) } else { eps - achieved.max(eps * (1.0 + 2.0 * STRICT_REL) + 1e-12) };
            Outcome {
                margin,
                witness: (!passed).then(|| Witness {
                    points: vec![row(x), row(xp)],
                    vectors: Vec::new(),
                    lhs: achieved.max(eps * (1.0 + 2.0 * STRICT_REL) + 1e-12),
                    rhs: eps,
                    param: None,
                    label: format!("no candidate beat eps; best `{tag}` achieved {achieved:.6e}"),
                }),
            }
        })
        .map(|o| vec![o])
        .collect();
    let t = tally(outcomes);
    Ok(finish(
        Property::EpsPath,
        &c.name,
        xbar,
        eps,
        pairs.iter().map(|(x, xp)| (x - xbar).norm().max((xp - xbar).norm())).fold(0.0, f64::max),
        0,
        t,
        Confidence::Lower,
        "heuristic falsification over a finite candidate family",
    ))
}

/// Candidate curves for one pair with their verification reports.
pub fn eps_path_candidates(c: &SetOracle, x: &Point, xp: &Point, eps: f64, pitch: f64) -> Vec<(String, EpsPathReport)> {
    let mut out = Vec::new();
    let mut push = |tag: &str, g: Result<SampledCurve>| -> bool {
        if let Ok(g) = g {
            let r = verify_eps_path(&g, c, x, xp, eps);
            let pass = r.passes;
            out.push((tag.to_string(), r));
            pass
        } else {
            false
        }
    };
    let chord_ok = (0..=64).all(|i| {
        let t = i as f64 / 64.0;
        c.contains(&(x * (1.0 - t) + xp * t), PATH_FEAS_TOL)
    });
    if chord_ok && push("chord", chord_curve(x, xp)) {
        return out;
    }
    if let OracleKind::Graph(f) = &c.kind {
        push("graph", graph_curve(f, x, xp, 32));
        return out;
    }
    let cfg = ProjectionConfig::default();
    if push("averaging-map", averaging_map(c, x, xp, DEFAULT_LEVELS, &cfg).map(|(g, _)| g)) {
        return out;
    }
    push("grid", grid_curve_points(c, x, xp, pitch).and_then(|p| arclength_curve(&p, "grid")));
    out
}
