//! Averaging maps by midpoint projection, a grid-graph intrinsic distance
//! oracle, and fitting of the extrinsic curvature constant σ.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{fd_derivative, polyline_length, Point, Polyline, SampledCurve};
use crate::paths::{verify_eps_path, EpsPathReport};
use crate::sets::{ProjectionConfig, SetOracle};

pub const DEFAULT_LEVELS: usize = 14;
/// Refinement stops once every inserted node moves less than this.
const DISPLACEMENT_STOP: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    pub nodes: Vec<Vec<f64>>,
    pub length: f64,
    /// Largest distance between an inserted node and the chord midpoint it
    /// replaces.
    pub max_displacement: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementTrace {
    pub levels: Vec<LevelTrace>,
    pub converged: bool,
    /// `max |γ(t) - 2γ(t+h) + γ(t+2h)| / h²` on the final level.
    pub second_difference: f64,
}

impl RefinementTrace {
    pub fn lengths(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.length).collect()
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.max_displacement).collect()
    }

    pub fn lengths_nondecreasing(&self, tol: f64) -> bool {
        self.levels.windows(2).all(|w| w[1].length >= w[0].length - tol)
    }
}

/// Midpoint-projection refinement from the chord `[x, x']`: each level
/// inserts the projection of every consecutive midpoint.
pub fn averaging_map(
    c: &SetOracle,
    x: &Point,
    xp: &Point,
    levels: usize,
    cfg: &ProjectionConfig,
) -> Result<(SampledCurve, RefinementTrace)> {
    let mut nodes = vec![x.clone(), xp.clone()];
    let mut trace = vec![LevelTrace {
        level: 0,
        nodes: to_rows(&nodes),
        length: polyline_length(&nodes),
        max_displacement: 0.0,
    }];
    let mut converged = false;
    for level in 1..=levels {
        let inserted: Vec<(Point, f64)> = nodes
            .par_windows(2)
            .map(|w| {
                let m = (&w[0] + &w[1]) * 0.5;
                let proj = c.project_with_distances(&m, cfg)?;
                check_single_valued(&m, &proj, cfg)?;
                let u = proj[0].0.clone();
                let disp = (&u - &m).norm();
                Ok((u, disp))
            })
            .collect::<Result<Vec<_>>>()?;
        let max_displacement = inserted.iter().map(|v| v.1).fold(0.0, f64::max);
        let mut next = Vec::with_capacity(2 * nodes.len() - 1);
        for (i, p) in nodes.iter().enumerate() {
            next.push(p.clone());
            if let Some((u, _)) = inserted.get(i) {
                next.push(u.clone());
            }
        }
        nodes = next;
        trace.push(LevelTrace {
            level,
            nodes: to_rows(&nodes),
            length: polyline_length(&nodes),
            max_displacement,
        });
        if max_displacement < DISPLACEMENT_STOP {
            converged = true;
            break;
        }
    }
    let disp: Vec<f64> = trace.iter().skip(1).map(|l| l.max_displacement).collect();
    if !converged {
        converged = match disp.as_slice() {
            [.., a, b] => *b <= 0.8 * *a || *b < DISPLACEMENT_STOP,
            [b] => *b < DISPLACEMENT_STOP,
            [] => true,
        };
    }
    if disp.len() >= 4 && disp[disp.len() - 1] > disp[0] && disp[0] > DISPLACEMENT_STOP {
        return Err(Error::NonConvergent(format!(
            "node displacement grew from {:.3e} to {:.3e}",
            disp[0],
            disp[disp.len() - 1]
        )));
    }
    let n = nodes.len() - 1;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let curve = if nodes.len() >= 3 {
        let derivs = fd_derivative(&nodes, &grid)?;
        SampledCurve::new(grid, nodes, derivs, "averaging-map")?
    } else {
        // Single chord: sample it so the curve carries at least three nodes.
        let d = xp - x;
        SampledCurve::from_fn(2, "averaging-map", |t| Ok((x * (1.0 - t) + xp * t, d.clone())))?
    };
    let h = 1.0 / (curve.len() - 1) as f64;
    let second_difference = curve
        .points()
        .windows(3)
        .map(|w| (&w[0] - &w[1] * 2.0 + &w[2]).norm() / (h * h))
        .fold(0.0, f64::max);
    Ok((
        curve,
        RefinementTrace {
            levels: trace,
            converged,
            second_difference,
        },
    ))
}

fn check_single_valued(m: &Point, proj: &[(Point, f64)], cfg: &ProjectionConfig) -> Result<()> {
    let far = proj
        .iter()
        .skip(1)
        .any(|(p, _)| (p - &proj[0].0).norm() > 10.0 * cfg.cluster);
    if far {
        return Err(Error::MultivaluedProjection {
            point: m.iter().copied().collect(),
            count: proj.len(),
        });
    }
    Ok(())
}

fn to_rows(nodes: &[Point]) -> Vec<Vec<f64>> {
    nodes.iter().map(|p| p.iter().copied().collect()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IntrinsicDistance {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    /// Length of the pulled shortest polyline; `inf` when disconnected.
    pub estimate: f64,
    /// Length of the raw cell-center path before string pulling.
    pub raw_estimate: f64,
    pub pitch: f64,
    pub polyline: Polyline,
    pub cells_visited: usize,
    pub note: String,
}

/// Lazily evaluated grid of member cells over the bounding box.
struct CellGrid<'a> {
    c: &'a SetOracle,
    lo: Point,
    counts: Vec<i64>,
    pitch: f64,
    tol: f64,
    cache: HashMap<Vec<i64>, bool>,
}

impl<'a> CellGrid<'a> {
    fn new(c: &'a SetOracle, pitch: f64) -> Result<Self> {
        let (lo, hi) = &c.bbox;
        if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Spec("intrinsic distance needs a finite bounding box".into()));
        }
        let counts = lo
            .iter()
            .zip(hi.iter())
            .map(|(a, b)| ((b - a) / pitch).ceil().max(1.0) as i64)
            .collect();
        Ok(Self {
            c,
            lo: lo.clone(),
            counts,
            pitch,
            // Half the cell diagonal: every cell crossed by the set qualifies.
            tol: 0.5 * pitch * (c.dim as f64).sqrt(),
            cache: HashMap::new(),
        })
    }

    fn cell_of(&self, p: &Point) -> Vec<i64> {
        p.iter()
            .zip(self.lo.iter())
            .zip(&self.counts)
            .map(|((v, l), &k)| (((v - l) / self.pitch).floor() as i64).clamp(0, k - 1))
            .collect()
    }

    fn center(&self, cell: &[i64]) -> Point {
        Point::from_iterator(
            cell.len(),
            cell.iter().zip(self.lo.iter()).map(|(&i, l)| l + (i as f64 + 0.5) * self.pitch),
        )
    }

    fn in_box(&self, cell: &[i64]) -> bool {
        cell.iter().zip(&self.counts).all(|(&i, &k)| i >= 0 && i < k)
    }

    fn member(&mut self, cell: &[i64]) -> bool {
        if !self.in_box(cell) {
            return false;
        }
        if let Some(&m) = self.cache.get(cell) {
            return m;
        }
        let m = self.c.within(&self.center(cell), self.tol);
        self.cache.insert(cell.to_vec(), m);
        m
    }

    fn prefetch(&mut self, cells: &[Vec<i64>]) {
        let todo: Vec<Vec<i64>> = cells
            .iter()
            .filter(|c| self.in_box(c) && !self.cache.contains_key(*c))
            .cloned()
            .collect();
        let vals: Vec<bool> = todo
            .par_iter()
            .map(|cell| self.c.within(&self.center(cell), self.tol))
            .collect();
        self.cache.extend(todo.into_iter().zip(vals));
    }

    fn offsets(&self) -> Vec<Vec<i64>> {
        let n = self.counts.len();
        let mut out = Vec::new();
        if n <= 3 {
            let total = 3i64.pow(n as u32);
            for code in 0..total {
                let mut v = Vec::with_capacity(n);
                let mut c = code;
                for _ in 0..n {
                    v.push(c % 3 - 1);
                    c /= 3;
                }
                if v.iter().any(|&d| d != 0) {
                    out.push(v);
                }
            }
        } else {
            for i in 0..n {
                for s in [-1, 1] {
                    let mut v = vec![0; n];
                    v[i] = s;
                    out.push(v);
                }
                for j in i + 1..n {
                    for (a, b) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                        let mut v = vec![0; n];
                        v[i] = a;
                        v[j] = b;
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Whether every point of `[a, b]` sampled at quarter-pitch spacing lies in
    /// a member cell.
    fn visible(&mut self, a: &Point, b: &Point) -> bool {
        let steps = (((b - a).norm() / (0.25 * self.pitch)).ceil() as usize).max(1);
        (0..=steps).all(|i| {
            let p = a + (b - a) * (i as f64 / steps as f64);
            let cell = self.cell_of(&p);
            self.member(&cell)
        })
    }
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    g: f64,
    cell: Vec<i64>,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path through member cells from `p` to `q`, string-pulled.
pub fn intrinsic_distance_grid(c: &SetOracle, p: &Point, q: &Point, pitch: f64) -> Result<IntrinsicDistance> {
    if !(pitch > 0.0) {
        return Err(Error::Spec("pitch must be positive".into()));
    }
    let mut g = CellGrid::new(c, pitch)?;
    let offsets = g.offsets();
    let start = endpoint_cell(&mut g, p, &offsets).ok_or(Error::EndpointNotCovered { which: "from" })?;
    let goal = endpoint_cell(&mut g, q, &offsets).ok_or(Error::EndpointNotCovered { which: "to" })?;

    let mut dist: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut prev: HashMap<Vec<i64>, Vec<i64>> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let g0 = (g.center(&start) - p).norm();
    dist.insert(start.clone(), g0);
    heap.push(Entry {
        f: g0 + (g.center(&start) - q).norm(),
        g: g0,
        cell: start.clone(),
    });
    let mut visited = 0usize;
    let mut found = false;
    while let Some(Entry { g: gd, cell, .. }) = heap.pop() {
        if dist.get(&cell).is_some_and(|&d| gd > d) {
            continue;
        }
        visited += 1;
        if cell == goal {
            found = true;
            break;
        }
        let nbrs: Vec<Vec<i64>> = offsets
            .iter()
            .map(|o| cell.iter().zip(o).map(|(a, b)| a + b).collect())
            .collect();
        g.prefetch(&nbrs);
        let here = g.center(&cell);
        for nb in nbrs {
            if !g.member(&nb) {
                continue;
            }
            let cn = g.center(&nb);
            let nd = gd + (&cn - &here).norm();
            if dist.get(&nb).is_none_or(|&d| nd < d) {
                dist.insert(nb.clone(), nd);
                prev.insert(nb.clone(), cell.clone());
                heap.push(Entry {
                    f: nd + (&cn - q).norm(),
                    g: nd,
                    cell: nb,
                });
            }
        }
    }
    let row = |v: &Point| v.iter().copied().collect::<Vec<f64>>();
    if !found {
        return Ok(IntrinsicDistance {
            from: row(p),
            to: row(q),
            estimate: f64::INFINITY,
            raw_estimate: f64::INFINITY,
            pitch,
            polyline: Polyline { vertices: vec![] },
            cells_visited: visited,
            note: "endpoints are not connected through member cells".into(),
        });
    }
    let mut cells = vec![goal.clone()];
    while let Some(pc) = prev.get(cells.last().expect("nonempty")) {
        cells.push(pc.clone());
    }
    cells.reverse();
    let mut raw: Vec<Point> = vec![p.clone()];
    raw.extend(cells.iter().map(|cl| g.center(cl)));
    raw.push(q.clone());
    let raw_estimate = polyline_length(&raw);
    let pulled = pull_string(&mut g, &raw);
    Ok(IntrinsicDistance {
        from: row(p),
        to: row(q),
        estimate: polyline_length(&pulled),
        raw_estimate,
        pitch,
        polyline: Polyline::from_points(&pulled),
        cells_visited: visited,
        note: "upper estimate; overshoot O(pitch) per unit length".into(),
    })
}

fn endpoint_cell(g: &mut CellGrid<'_>, p: &Point, offsets: &[Vec<i64>]) -> Option<Vec<i64>> {
    let cell = g.cell_of(p);
    if g.member(&cell) {
        return Some(cell);
    }
    let members: Vec<Vec<i64>> = offsets
        .iter()
        .map(|o| cell.iter().zip(o).map(|(a, b)| a + b).collect::<Vec<i64>>())
        .filter(|nb| g.member(nb))
        .collect();
    members
        .into_iter()
        .min_by(|a, b| (g.center(a) - p).norm().total_cmp(&(g.center(b) - p).norm()))
}

/// Greedy visibility shortcutting of a polyline through member cells.
fn pull_string(g: &mut CellGrid<'_>, pts: &[Point]) -> Vec<Point> {
    let last = pts.len() - 1;
    let mut out = vec![pts[0].clone()];
    let mut i = 0;
    while i < last {
        // Exponential then binary search for the farthest visible vertex;
        // consecutive vertices are graph neighbours and always accepted.
        let mut step = 1;
        while i + 2 * step <= last && g.visible(&pts[i], &pts[i + 2 * step]) {
            step *= 2;
        }
        let (mut lo, mut hi) = (i + step, (i + 2 * step).min(last));
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if g.visible(&pts[i], &pts[mid]) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        out.push(pts[lo].clone());
        i = lo;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ProportionalityCheck {
    pub t1: f64,
    pub t2: f64,
    pub measured: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragingReport {
    pub total: f64,
    pub pairs: Vec<ProportionalityCheck>,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub proportional: bool,
    pub eps_path: EpsPathReport,
}

/// Checks `d_C(γ(t₁), γ(t₂)) = |t₁ - t₂| d_C(x, x')` with the grid oracle at
/// `pitch`, and runs the ε-path verifier at `eps`.
pub fn verify_averaging_map(
    gamma: &SampledCurve,
    c: &SetOracle,
    t_pairs: &[(f64, f64)],
    pitch: f64,
    eps: f64,
) -> Result<AveragingReport> {
    let (x, xp) = (gamma.start().clone(), gamma.end().clone());
    let total = intrinsic_distance_grid(c, &x, &xp, pitch)?.estimate;
    let pairs = t_pairs
        .par_iter()
        .map(|&(t1, t2)| {
            let measured = intrinsic_distance_grid(c, &gamma.eval(t1), &gamma.eval(t2), pitch)?.estimate;
            Ok(ProportionalityCheck {
                t1,
                t2,
                measured,
                expected: (t1 - t2).abs() * total,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_error = pairs.iter().map(|p| (p.measured - p.expected).abs()).fold(0.0, f64::max);
    let tolerance = 3.0 * pitch;
    Ok(AveragingReport {
        total,
        proportional: max_abs_error <= tolerance,
        pairs,
        max_abs_error,
        tolerance,
        eps_path: verify_eps_path(gamma, c, &x, &xp, eps),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaSample {
    pub d: f64,
    pub defect: f64,
    /// Grid-oracle estimate of `d_C` for the cross-checked pairs.
    pub grid_estimate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaFit {
    pub radius: f64,
    pub sigma: f64,
    pub samples: Vec<SigmaSample>,
    /// `max(d_C - d - 1.1 σ d³)` over the samples.
    pub max_violation: f64,
    /// Largest `|grid - averaging|` among cross-checked pairs.
    pub cross_check_gap: f64,
    pub pitch: f64,
}

impl SigmaFit {
    /// Least-squares `σ` through the origin, recomputed from the samples.
    pub fn refit(samples: &[SigmaSample]) -> f64 {
        let num: f64 = samples.iter().map(|s| s.d.powi(3) * s.defect).sum();
        let den: f64 = samples.iter().map(|s| s.d.powi(6)).sum();
        if den > 0.0 {
            (num / den).max(0.0)
        } else {
            0.0
        }
    }
}

/// Fits `d_C - d = σ d³` over member pairs in `B(x̄, r)`; intrinsic
/// distances come from averaging-map lengths.
pub fn fit_sigma(c: &SetOracle, xbar: &Point, r: f64, pairs: usize, seed: u64) -> Result<SigmaFit> {
    let pitch = r / 100.0;
    let pts = c.sample_members(xbar, r, 2 * pairs, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157);
    let chosen: Vec<(Point, Point, bool)> = pts
        .chunks_exact(2)
        .filter(|w| (&w[0] - &w[1]).norm() >= 10.0 * pitch)
        .map(|w| (w[0].clone(), w[1].clone(), rng.gen_bool(0.1)))
        .collect();
    let cfg = ProjectionConfig::default();
    let samples = chosen
        .iter()
        .map(|(p, q, check)| {
            let d = (p - q).norm();
            let (curve, _) = averaging_map(c, p, q, 10, &cfg)?;
            let dc = curve.length();
            let grid_estimate = if *check {
                Some(intrinsic_distance_grid(c, p, q, pitch)?.estimate)
            } else {
                None
            };
            Ok(SigmaSample {
                d,
                defect: dc - d,
                grid_estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma = SigmaFit::refit(&samples);
    let max_violation = samples
        .iter()
        .map(|s| s.defect - 1.1 * sigma * s.d.powi(3))
        .fold(f64::NEG_INFINITY, f64::max);
    let cross_check_gap = samples
        .iter()
        .filter_map(|s| s.grid_estimate.map(|g| (g - (s.d + s.defect)).abs()))
        .fold(0.0, f64::max);
    Ok(SigmaFit {
        radius: r,
        sigma,
        samples,
        max_violation,
        cross_check_gap,
        pitch,
    })
}
