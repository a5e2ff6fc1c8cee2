//! Feasible regions: membership, multistart projection, sampling.

pub mod catalog;
pub mod planar;
pub mod spec;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{latin_hypercube, point, Point};
use crate::map::{MapKind, SmoothMap};
use crate::optim::{golden_section, levenberg_marquardt};

pub use catalog::{catalog, catalog_names};
pub use planar::{ConePiece, PlanarCone};

/// Default absolute membership tolerance.
pub const MEMBER_TOL: f64 = 1e-9;

/// Settings for [`SetOracle::project`].
#[derive(Clone, Debug)]
pub struct ProjectionConfig {
    /// Multistart count for preimage oracles.
    pub starts: usize,
    /// Membership tolerance of returned points.
    pub tol: f64,
    /// Candidates within `cluster` of the best distance are co-minimal;
    /// points closer than `cluster` to each other are merged.
    pub cluster: f64,
    /// When set, candidates within this factor of the best distance are
    /// also kept.
    pub co_minimal_ratio: Option<f64>,
    /// Cap on the number of returned representatives.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            tol: MEMBER_TOL,
            cluster: 1e-6,
            co_minimal_ratio: None,
            max_points: 64,
            seed: 42,
        }
    }
}

/// The sawtooth function: zero outside `(0, 1]`, and on
/// `(2^-(k+1), 2^-k]` a tooth of slope `±2^-k` peaking at `3 * 2^-(k+2)`.
pub fn sawtooth(x: f64) -> f64 {
    if !(x > 0.0 && x <= 1.0) {
        return 0.0;
    }
    // Piece index k with 2^-(k+1) < x <= 2^-k.
    let mut k = (1.0 / x).log2().floor() as i32;
    let lower = |k: i32| 0.5f64.powi(k + 1);
    while k > 0 && x > 0.5f64.powi(k) {
        k -= 1;
    }
    while x <= lower(k) {
        k += 1;
    }
    let s = 0.5f64.powi(k);
    let apex = 3.0 * 0.5f64.powi(k + 2);
    if x <= apex {
        s * (x - lower(k))
    } else {
        s * (s - x)
    }
}

/// Slope of the sawtooth on the open piece containing `x`.
pub fn sawtooth_slope(x: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return 0.0;
    }
    let mut k = 0;
    while x <= 0.5f64.powi(k + 1) {
        k += 1;
    }
    let s = 0.5f64.powi(k);
    if x < 3.0 * 0.5f64.powi(k + 2) {
        s
    } else {
        -s
    }
}

/// Breakpoints of the sawtooth in `[a, b]`, down to scale `2^-60`.
pub fn sawtooth_kinks(a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..60 {
        for v in [0.5f64.powi(k), 3.0 * 0.5f64.powi(k + 2)] {
            if v >= a && v <= b {
                out.push(v);
            }
        }
    }
    if a <= 0.0 && b >= 0.0 {
        out.push(0.0);
    }
    out
}

/// A univariate function used by graph and epigraph oracles.
#[derive(Clone, Debug)]
pub enum ScalarFn {
    Expr(Expr),
    Sawtooth,
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            ScalarFn::Expr(e) => e.eval(&[x]),
            ScalarFn::Sawtooth => Ok(sawtooth(x)),
        }
    }

    pub fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            ScalarFn::Expr(_) => {
                if a <= 0.0 && b >= 0.0 {
                    vec![0.0]
                } else {
                    Vec::new()
                }
            }
            ScalarFn::Sawtooth => sawtooth_kinks(a, b),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScalarFn::Expr(e) => e.to_string(),
            ScalarFn::Sawtooth => "sawtooth".into(),
        }
    }
}

type CurveFn = dyn Fn(f64) -> Point + Send + Sync;

/// Parametric branch `s -> c(s)`, `s` in `[lo, hi]`.
#[derive(Clone)]
pub struct Branch {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    eval: Arc<CurveFn>,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Branch({}, [{}, {}])", self.label, self.lo, self.hi)
    }
}

impl Branch {
    pub fn new<F>(label: &str, lo: f64, hi: f64, f: F) -> Self
    where
        F: Fn(f64) -> Point + Send + Sync + 'static,
    {
        Self {
            label: label.to_string(),
            lo,
            hi,
            eval: Arc::new(f),
        }
    }

    pub fn at(&self, s: f64) -> Point {
        (self.eval)(s)
    }
}

/// A representation `(V, F, D)` with `V` the ball `B(center, radius)`.
#[derive(Clone, Debug)]
pub struct Representation {
    pub map: SmoothMap,
    pub body: ConvexBody,
    pub center: Point,
    pub radius: f64,
}

impl Representation {
    pub fn new(map: SmoothMap, body: ConvexBody, center: Point, radius: f64) -> Self {
        Self {
            map,
            body,
            center,
            radius,
        }
    }

    /// Distance from `F(x)` to `D`, plus how far `x` lies outside `V`.
    pub fn residual(&self, x: &Point) -> f64 {
        let outside = ((x - &self.center).norm() - self.radius).max(0.0);
        match self.map.eval(x) {
            Ok(y) => self.body.residual(&y) + outside,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Closed-form regular and limiting normal cones at a planar point.
#[derive(Clone, Debug)]
pub struct ExactCones {
    pub regular: PlanarCone,
    pub limiting: PlanarCone,
}

type ConesFn = dyn Fn(&Point) -> Option<ExactCones> + Send + Sync;

#[derive(Clone, Debug)]
pub enum OracleKind {
    Preimage(Representation),
    Graph(ScalarFn),
    Epigraph(ScalarFn),
    CurveUnion(Vec<Branch>),
    GridCloud { points: Vec<Point>, pitch: f64 },
}

/// A feasible region with membership, projection and sampling queries.
#[derive(Clone)]
pub struct SetOracle {
    pub name: String,
    pub dim: usize,
    pub kind: OracleKind,
    /// Amenable representation, when the set admits one.
    pub representation: Option<Representation>,
    /// Reference point `x̄` of the set.
    pub base_point: Point,
    pub bbox: (Point, Point),
    /// Coordinate whose sign flip maps the set onto itself.
    pub mirror_axis: Option<usize>,
    pub convex: bool,
    exact_cones: Option<Arc<ConesFn>>,
}

impl fmt::Debug for SetOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetOracle")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish()
    }
}

impl SetOracle {
    pub fn new(name: &str, dim: usize, kind: OracleKind, bbox: (Point, Point)) -> Self {
        let representation = match &kind {
            OracleKind::Preimage(rep) => Some(rep.clone()),
            _ => None,
        };
        let base_point = DVector::zeros(dim);
        Self {
            name: name.to_string(),
            dim,
            kind,
            representation,
            base_point,
            bbox,
            mirror_axis: None,
            convex: false,
            exact_cones: None,
        }
    }

    pub fn preimage(name: &str, rep: Representation) -> Self {
        let n = rep.map.domain_dim();
        let r = if rep.radius.is_finite() { rep.radius } else { 10.0 };
        let lo = rep.center.map(|c| c - r);
        let hi = rep.center.map(|c| c + r);
        Self::new(name, n, OracleKind::Preimage(rep), (lo, hi))
    }

    pub fn with_representation(mut self, rep: Representation) -> Self {
        self.representation = Some(rep);
        self
    }

    pub fn with_base_point(mut self, p: Point) -> Self {
        self.base_point = p;
        self
    }

    pub fn with_mirror_axis(mut self, axis: usize) -> Self {
        self.mirror_axis = Some(axis);
        self
    }

    pub fn with_convex(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    pub fn with_exact_cones<F>(mut self, f: F) -> Self
    where
        F: Fn(&Point) -> Option<ExactCones> + Send + Sync + 'static,
    {
        self.exact_cones = Some(Arc::new(f));
        self
    }

    pub fn exact_cones(&self, x: &Point) -> Option<ExactCones> {
        self.exact_cones.as_ref().and_then(|f| f(x))
    }

    pub fn has_exact_cones(&self) -> bool {
        self.exact_cones.is_some()
    }

    /// Variant-specific distance from `x` to the defining locus.
    pub fn residual(&self, x: &Point) -> f64 {
        if x.len() != self.dim {
            return f64::INFINITY;
        }
        match &self.kind {
            OracleKind::Preimage(rep) => rep.residual(x),
            OracleKind::Graph(f) => f.eval(x[0]).map_or(f64::INFINITY, |v| (x[1] - v).abs()),
            OracleKind::Epigraph(f) => f.eval(x[0]).map_or(f64::INFINITY, |v| (v - x[1]).max(0.0)),
            OracleKind::CurveUnion(_) => self.distance(x),
            OracleKind::GridCloud { points, pitch } => {
                let d = nearest_in_cloud(points, x);
                (d - pitch).max(0.0)
            }
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.residual(x) <= tol
    }

    /// Whether the distance from `x` to the set is at most `tol`; cheaper
    /// than [`distance`](Self::distance) for graphs.
    pub fn within(&self, x: &Point, tol: f64) -> bool {
        match &self.kind {
            OracleKind::Graph(f) | OracleKind::Epigraph(f) => {
                if self.contains(x, tol) {
                    return true;
                }
                let (x0, y0) = (x[0], x[1]);
                let g = |s: f64| f.eval(s).map_or(f64::INFINITY, |v| (s - x0).powi(2) + (v - y0).powi(2));
                let mut samples = linspace(x0 - tol, x0 + tol, 65);
                samples.extend(f.kinks(x0 - tol, x0 + tol));
                samples.sort_by(f64::total_cmp);
                let mut params = Vec::new();
                multi_min_1d(&g, &samples, 2, 4, &mut params);
                params.iter().any(|&s| g(s) <= tol * tol)
            }
            _ => self.contains(x, 0.0) || self.distance(x) <= tol,
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &Point) -> f64 {
        match &self.kind {
            OracleKind::GridCloud { points, .. } => nearest_in_cloud(points, x),
            _ => self
                .candidates(x, &ProjectionConfig::default())
                .ok()
                .and_then(|c| c.iter().map(|(_, d)| *d).min_by(f64::total_cmp))
                .unwrap_or(f64::INFINITY),
        }
    }

    /// All nearest points of `x` (up to clustering), sorted by distance.
    pub fn project(&self, x: &Point, cfg: &ProjectionConfig) -> Result<Vec<Point>> {
        Ok(self.project_with_distances(x, cfg)?.into_iter().map(|(p, _)| p).collect())
    }

    /// Like [`project`](Self::project), with the distance of each point.
    pub fn project_with_distances(&self, x: &Point, cfg: &ProjectionConfig) -> Result<Vec<(Point, f64)>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let cands = self.candidates(x, cfg)?;
        if cands.is_empty() {
            return Err(Error::NoProjection);
        }
        Ok(cluster(cands, cfg))
    }

    /// First nearest point.
    pub fn nearest(&self, x: &Point, cfg: &ProjectionConfig) -> Result<Point> {
        Ok(self.project(x, cfg)?.swap_remove(0))
    }

    fn candidates(&self, x: &Point, cfg: &ProjectionConfig) -> Result<Vec<(Point, f64)>> {
        let mut out = match &self.kind {
            OracleKind::Preimage(rep) => preimage_candidates(rep, &self.bbox, x, cfg)?,
            OracleKind::Graph(f) => graph_candidates(f, x),
            OracleKind::Epigraph(f) => {
                if f.eval(x[0]).is_ok_and(|v| x[1] >= v) {
                    vec![(x.clone(), 0.0)]
                } else {
                    graph_candidates(f, x)
                }
            }
            OracleKind::CurveUnion(branches) => branches
                .iter()
                .flat_map(|b| branch_candidates(b, x))
                .collect(),
            OracleKind::GridCloud { points, .. } => {
                let best = nearest_in_cloud(points, x);
                points
                    .iter()
                    .map(|p| (p.clone(), (p - x).norm()))
                    .filter(|(_, d)| *d <= best + cfg.cluster)
                    .collect()
            }
        };
        out.retain(|(_, d)| d.is_finite());
        Ok(out)
    }

    /// Members "at parameter `t`": branch points for curve unions, graph
    /// points for graphs, nearest points of `base + t e_j` otherwise.
    pub fn param_members(&self, t: f64) -> Vec<Point> {
        match &self.kind {
            OracleKind::CurveUnion(branches) => branches
                .iter()
                .filter(|b| t >= b.lo && t <= b.hi)
                .map(|b| b.at(t))
                .collect(),
            OracleKind::Graph(f) | OracleKind::Epigraph(f) => f
                .eval(self.base_point[0] + t)
                .map(|v| vec![point(&[self.base_point[0] + t, v])])
                .unwrap_or_default(),
            _ => {
                let mut q = self.base_point.clone();
                q[0] += t;
                self.nearest(&q, &ProjectionConfig::default()).into_iter().collect()
            }
        }
    }

    /// Reflection of `x` across the declared mirror axis.
    pub fn mirror(&self, x: &Point) -> Option<Point> {
        self.mirror_axis.map(|a| {
            let mut y = x.clone();
            y[a] = -y[a];
            y
        })
    }

    /// Deterministic sample of members in `B(center, radius)`.
    pub fn sample_members(&self, center: &Point, radius: f64, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let cfg = ProjectionConfig {
            starts: 8,
            ..ProjectionConfig::default()
        };
        let inside = |p: &Point| (p - center).norm() <= radius;
        let mut attempts = 0;
        while out.len() < count && attempts < 50 * count.max(1) {
            attempts += 1;
            let cand = match &self.kind {
                OracleKind::CurveUnion(branches) => {
                    let b = &branches[rng.gen_range(0..branches.len())];
                    // Sample the parameter near the preimage of the ball.
                    let near = branch_candidates(b, center);
                    let s0 = near
                        .first()
                        .map(|(p, _)| branch_param_of(b, p))
                        .unwrap_or(0.5 * (b.lo + b.hi));
                    let s = (s0 + rng.gen_range(-1.0..1.0) * radius * 2.0).clamp(b.lo, b.hi);
                    Some(b.at(s))
                }
                OracleKind::Graph(f) => {
                    let s = center[0] + rng.gen_range(-1.0..1.0) * radius;
                    f.eval(s).ok().map(|v| point(&[s, v]))
                }
                OracleKind::Epigraph(f) => {
                    let s = center[0] + rng.gen_range(-1.0..1.0) * radius;
                    f.eval(s).ok().map(|v| {
                        if rng.gen_bool(0.3) {
                            point(&[s, v])
                        } else {
                            point(&[s, center[1] + rng.gen_range(-1.0..1.0) * radius])
                        }
                    })
                }
                OracleKind::GridCloud { points, .. } => Some(points[rng.gen_range(0..points.len())].clone()),
                OracleKind::Preimage(_) => {
                    let dir = DVector::from_fn(self.dim, |_, _| rng.gen_range(-1.0..1.0));
                    let q = center + dir * radius;
                    if self.contains(&q, MEMBER_TOL) && rng.gen_bool(0.5) {
                        Some(q)
                    } else {
                        self.nearest(&q, &cfg).ok()
                    }
                }
            };
            if let Some(p) = cand {
                if inside(&p) && self.contains(&p, MEMBER_TOL.max(1e-12)) {
                    out.push(p);
                }
            }
        }
        out
    }
}

fn branch_param_of(b: &Branch, p: &Point) -> f64 {
    let g = |s: f64| (b.at(s) - p).norm_squared();
    let samples = linspace(b.lo, b.hi, 257);
    let coarse = samples
        .iter()
        .copied()
        .min_by(|u, v| g(*u).total_cmp(&g(*v)))
        .unwrap_or(b.lo);
    let h = (b.hi - b.lo) / 256.0;
    golden_section(g, (coarse - h).max(b.lo), (coarse + h).min(b.hi), 200).0
}

fn nearest_in_cloud(points: &[Point], x: &Point) -> f64 {
    points
        .iter()
        .map(|p| (p - x).norm())
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Local minimizers of `g` over `samples`, refined by nested resampling
/// and golden-section search.
fn multi_min_1d<G: Fn(f64) -> f64>(g: &G, samples: &[f64], depth: usize, keep: usize, out: &mut Vec<f64>) {
    let n = samples.len();
    if n == 0 {
        return;
    }
    let vals: Vec<f64> = samples.iter().map(|&s| g(s)).collect();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| {
            vals[i].is_finite()
                && (i == 0 || vals[i] <= vals[i - 1])
                && (i + 1 == n || vals[i] <= vals[i + 1])
        })
        .collect();
    minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    minima.truncate(keep);
    for i in minima {
        let lo = samples[i.saturating_sub(1)];
        let hi = samples[(i + 1).min(n - 1)];
        if hi - lo <= 1e-300 {
            out.push(samples[i]);
            continue;
        }
        if depth < 3 {
            multi_min_1d(g, &linspace(lo, hi, 33), depth + 1, 2, out);
        } else {
            let (s, fs) = golden_section(g, lo, hi, 120);
            out.push(if fs <= vals[i] { s } else { samples[i] });
        }
    }
}

/// Newton steps on `<c'(s), c(s) - x> = 0` with difference quotients;
/// kept only while the distance does not grow.
fn polish_param<C: Fn(f64) -> Option<Point>>(c: &C, x: &Point, s0: f64, lo: f64, hi: f64) -> f64 {
    let dist = |s: f64| c(s).map_or(f64::INFINITY, |p| (p - x).norm_squared());
    let h = 1e-5 * s0.abs().max(1.0);
    let phi = |s: f64| -> Option<f64> {
        let dp = (c(s + h)? - c(s - h)?) / (2.0 * h);
        Some(dp.dot(&(c(s)? - x)))
    };
    let (mut s, mut best) = (s0, dist(s0));
    for _ in 0..6 {
        let (Some(f0), Some(f1), Some(f2)) = (phi(s), phi(s + h), phi(s - h)) else {
            break;
        };
        let slope = (f1 - f2) / (2.0 * h);
        if slope <= 0.0 || !slope.is_finite() {
            break;
        }
        let next = (s - f0 / slope).clamp(lo, hi);
        let dn = dist(next);
        if !(dn <= best * (1.0 + 1e-12) + 1e-300) || (next - s).abs() > 100.0 * h {
            break;
        }
        let done = (next - s).abs() <= 1e-15 * s.abs().max(1.0);
        s = next;
        best = best.min(dn);
        if done {
            break;
        }
    }
    s
}

fn graph_candidates(f: &ScalarFn, x: &Point) -> Vec<(Point, f64)> {
    let (x0, y0) = (x[0], x[1]);
    let r = f.eval(x0).map_or(1.0, |v| (v - y0).abs());
    if r == 0.0 {
        return vec![(x.clone(), 0.0)];
    }
    let mut samples = linspace(x0 - r, x0 + r, 513);
    for j in 1..=60 {
        let h = r * 0.5f64.powi(j);
        samples.push(x0 - h);
        samples.push(x0 + h);
    }
    samples.extend(f.kinks(x0 - r, x0 + r));
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    let g = |s: f64| f.eval(s).map_or(f64::INFINITY, |v| (s - x0).powi(2) + (v - y0).powi(2));
    let mut params = Vec::new();
    multi_min_1d(&g, &samples, 0, 64, &mut params);
    let curve = |s: f64| f.eval(s).map(|v| point(&[s, v])).ok();
    params
        .into_iter()
        .map(|s| polish_param(&curve, x, s, f64::NEG_INFINITY, f64::INFINITY))
        .filter_map(|s| {
            let v = f.eval(s).ok()?;
            let p = point(&[s, v]);
            let d = (&p - x).norm();
            Some((p, d))
        })
        .collect()
}

fn branch_candidates(b: &Branch, x: &Point) -> Vec<(Point, f64)> {
    let samples = linspace(b.lo, b.hi, 1025);
    let g = |s: f64| (b.at(s) - x).norm_squared();
    let mut params = Vec::new();
    multi_min_1d(&g, &samples, 0, 64, &mut params);
    let curve = |s: f64| Some(b.at(s)).filter(|p| p.iter().all(|v| v.is_finite()));
    params
        .into_iter()
        .map(|s| polish_param(&curve, x, s, b.lo, b.hi))
        .map(|s| {
            let p = b.at(s);
            let d = (&p - x).norm();
            (p, d)
        })
        .collect()
}

fn preimage_candidates(
    rep: &Representation,
    bbox: &(Point, Point),
    x: &Point,
    cfg: &ProjectionConfig,
) -> Result<Vec<(Point, f64)>> {
    if matches!(rep.map.kind(), MapKind::Identity) {
        let mut p = rep.body.project(x);
        // Respect V when it is the binding constraint.
        if (&p - &rep.center).norm() > rep.radius {
            p = &rep.center + (&p - &rep.center) * (rep.radius / (&p - &rep.center).norm());
        }
        let d = (&p - x).norm();
        return Ok(vec![(p, d)]);
    }
    if rep.residual(x) <= cfg.tol * 1e-3 {
        return Ok(vec![(x.clone(), 0.0)]);
    }
    let solve = |z0: &Point| local_preimage_projection(rep, x, z0.clone(), cfg.tol);
    let mut found: Vec<Point> = [x.clone(), rep.center.clone()]
        .iter()
        .filter_map(&solve)
        .collect();
    let reach = found
        .iter()
        .map(|p| (p - x).norm())
        .fold(f64::INFINITY, f64::min);
    let reach = if reach.is_finite() {
        reach * 1.1 + 1e-12
    } else {
        (&bbox.1 - &bbox.0).norm()
    };
    let lo = DVector::from_fn(x.len(), |i, _| (x[i] - reach).max(bbox.0[i]));
    let hi = DVector::from_fn(x.len(), |i, _| (x[i] + reach).min(bbox.1[i]));
    let starts = if lo.iter().zip(hi.iter()).all(|(l, h)| l < h) {
        latin_hypercube(&lo, &hi, cfg.starts, cfg.seed)
    } else {
        Vec::new()
    };
    let more: Vec<Point> = starts.par_iter().filter_map(solve).collect();
    found.extend(more);
    Ok(found
        .into_iter()
        .map(|p| {
            let d = (&p - x).norm();
            (p, d)
        })
        .collect())
}

/// Penalty Levenberg–Marquardt followed by a minimum-norm restoration onto
/// `F^-1(D)`.
fn local_preimage_projection(rep: &Representation, x: &Point, z0: Point, tol: f64) -> Option<Point> {
    let n = x.len();
    let dist_and_normal = |z: &Point| -> Result<(f64, Point)> {
        let fz = rep.map.eval(z)?;
        let e = &fz - rep.body.project(&fz);
        let d = e.norm();
        let row = if d > 0.0 {
            rep.map.jacobian(z)?.transpose() * (e / d)
        } else {
            DVector::zeros(n)
        };
        Ok((d, row))
    };
    let mut z = z0;
    for k in 0..7 {
        let sq_mu = 10f64.powi(2 * k).sqrt();
        let rj = |z: &Point| -> Result<(DVector<f64>, DMatrix<f64>)> {
            let (d, g) = dist_and_normal(z)?;
            let mut r = DVector::zeros(n + 1);
            r.rows_mut(0, n).copy_from(&(z - x));
            r[n] = sq_mu * d;
            let mut j = DMatrix::zeros(n + 1, n);
            j.view_mut((0, 0), (n, n)).fill_with_identity();
            j.row_mut(n).copy_from(&(g * sq_mu).transpose());
            Ok((r, j))
        };
        z = levenberg_marquardt(rj, z, 60, 1e-14).ok()?;
    }
    for _ in 0..60 {
        let fz = rep.map.eval(&z).ok()?;
        let e = &fz - rep.body.project(&fz);
        if e.norm() <= 1e-14 * (1.0 + fz.norm()) {
            break;
        }
        let j = rep.map.jacobian(&z).ok()?;
        let pinv = j.pseudo_inverse(1e-12).ok()?;
        z -= pinv * e;
    }
    (rep.residual(&z) <= tol).then_some(z)
}

fn cluster(mut cands: Vec<(Point, f64)>, cfg: &ProjectionConfig) -> Vec<(Point, f64)> {
    cands.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = cands[0].1;
    let limit = match cfg.co_minimal_ratio {
        Some(r) => (best + cfg.cluster).max(best * r),
        None => best + cfg.cluster,
    };
    let mut kept: Vec<(Point, f64)> = Vec::new();
    for (p, d) in cands {
        if d > limit {
            break;
        }
        if kept.iter().any(|(q, _)| (q - &p).norm() <= cfg.cluster) {
            continue;
        }
        kept.push((p, d));
        if kept.len() >= cfg.max_points {
            break;
        }
    }
    kept
}

/// Brute-force comparison oracle: centers of grid cells within half a
/// cell diagonal of `c`.
pub fn grid_cloud(c: &SetOracle, lo: &Point, hi: &Point, pitch: f64) -> SetOracle {
    let n = c.dim;
    let counts: Vec<usize> = (0..n).map(|i| ((hi[i] - lo[i]) / pitch).ceil() as usize).collect();
    let total: usize = counts.iter().product();
    let half_diag = 0.5 * pitch * (n as f64).sqrt();
    let points: Vec<Point> = (0..total)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut p = DVector::zeros(n);
            for i in 0..n {
                p[i] = lo[i] + (idx % counts[i]) as f64 * pitch + 0.5 * pitch;
                idx /= counts[i];
            }
            (c.distance(&p) <= half_diag).then_some(p)
        })
        .collect();
    SetOracle::new(
        &format!("grid({})", c.name),
        n,
        OracleKind::GridCloud { points, pitch },
        (lo.clone(), hi.clone()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sawtooth_closed_form_values() {
        assert_eq!(sawtooth(3.0 / 8.0), 1.0 / 16.0);
        assert_eq!(sawtooth(3.0 / 16.0), 1.0 / 64.0);
        assert_eq!(sawtooth(0.5), 0.0);
        assert_eq!(sawtooth(1.0), 0.0);
        assert_eq!(sawtooth(0.0), 0.0);
        assert_eq!(sawtooth(-0.3), 0.0);
        assert_eq!(sawtooth(1.5), 0.0);
        // Apex of tooth k: (3/2^(k+2), 1/2^(2k+2)).
        for k in 0..40 {
            let x = 3.0 * 0.5f64.powi(k + 2);
            assert_eq!(sawtooth(x), 0.5f64.powi(2 * k + 2), "k = {k}");
        }
    }

    #[test]
    fn sawtooth_is_continuous_at_breakpoints() {
        for x in sawtooth_kinks(1e-9, 1.0) {
            let h = x * 1e-9;
            assert!((sawtooth(x + h) - sawtooth(x)).abs() < 2.0 * h);
            assert!((sawtooth(x - h) - sawtooth(x)).abs() < 2.0 * h);
        }
    }

    #[test]
    fn sawtooth_agrees_with_series_definition() {
        // Independent oracle: scan every piece explicitly.
        let reference = |x: f64| -> f64 {
            for k in 0..64 {
                let (a, m, b) = (0.5f64.powi(k + 1), 3.0 * 0.5f64.powi(k + 2), 0.5f64.powi(k));
                let s = 0.5f64.powi(k);
                if x > a && x <= m {
                    return s * (x - a);
                }
                if x > m && x <= b {
                    return s * (b - x);
                }
            }
            0.0
        };
        let mut x = 1.0;
        while x > 1e-12 {
            for f in [1.0, 0.93, 0.81, 0.77, 0.62, 0.51] {
                assert_eq!(sawtooth(x * f), reference(x * f));
            }
            x *= 0.5;
        }
    }

    #[test]
    fn cluster_merges_and_windows() {
        let cfg = ProjectionConfig::default();
        let c = vec![
            (point(&[1.0, 0.0]), 1.0),
            (point(&[1.0, 1e-8]), 1.0),
            (point(&[-1.0, 0.0]), 1.0 + 1e-7),
            (point(&[0.0, 2.0]), 1.5),
        ];
        let k = cluster(c, &cfg);
        assert_eq!(k.len(), 2);
    }
}
