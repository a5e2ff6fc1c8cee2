//! Vectors, sampled curves and finite differences.
//!
//! Everything here is pure and allocation-light; the other modules build on
//! [`SampledCurve`] as the common carrier for paths, geodesics and descent
//! curves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or direction in the ambient space.
pub type Point = DVector<f64>;

/// Default number of grid intervals for constructed curves.
pub const DEFAULT_INTERVALS: usize = 1024;

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

/// Central-difference step `cbrt(eps) * max(1, |x|)`.
pub fn default_fd_step(x: &Point) -> f64 {
    f64::EPSILON.cbrt() * x.norm().max(1.0)
}

/// Uniform grid `0, 1/n, ..., 1` with exact endpoints.
pub fn uniform_grid(intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|i| i as f64 / intervals as f64)
        .collect()
}

/// Ordered list of vertices; its length is the sum of chord norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<Vec<f64>>,
}

impl Polyline {
    pub fn from_points(points: &[Point]) -> Self {
        Self {
            vertices: points.iter().map(|p| p.iter().copied().collect()).collect(),
        }
    }

    pub fn points(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| point(v)).collect()
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points())
    }
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
}

/// A curve on `[0, 1]` sampled at grid nodes, with a derivative per node.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    grid: Vec<f64>,
    points: Vec<Point>,
    derivs: Vec<Point>,
    tag: String,
}

impl SampledCurve {
    pub fn new(grid: Vec<f64>, points: Vec<Point>, derivs: Vec<Point>, tag: &str) -> Result<Self> {
        validate_grid(&grid)?;
        if points.len() != grid.len() || derivs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: points.len().min(derivs.len()),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidGrid("points must have dimension >= 1".into()));
        }
        for p in points.iter().chain(derivs.iter()) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation("non-finite curve sample".into()));
            }
        }
        Ok(Self {
            grid,
            points,
            derivs,
            tag: tag.to_string(),
        })
    }

    /// Builds a curve whose derivatives are estimated by [`fd_derivative`].
    pub fn from_points(grid: Vec<f64>, points: Vec<Point>, tag: &str) -> Result<Self> {
        let derivs = fd_derivative(&points, &grid)?;
        Self::new(grid, points, derivs, tag)
    }

    /// Samples `f(t) = (point, derivative)` on a uniform grid.
    pub fn from_fn<F>(intervals: usize, tag: &str, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<(Point, Point)>,
    {
        let grid = uniform_grid(intervals);
        let mut points = Vec::with_capacity(grid.len());
        let mut derivs = Vec::with_capacity(grid.len());
        for &t in &grid {
            let (p, d) = f(t)?;
            points.push(p);
            derivs.push(d);
        }
        Self::new(grid, points, derivs, tag)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn derivs(&self) -> &[Point] {
        &self.derivs
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn start(&self) -> &Point {
        &self.points[0]
    }

    pub fn end(&self) -> &Point {
        &self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        curve_length(self)
    }

    /// Piecewise-linear evaluation at parameter `t` (clamped to `[0, 1]`).
    pub fn eval(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        let i = match self.grid.binary_search_by(|g| g.total_cmp(&t)) {
            Ok(i) => return self.points[i].clone(),
            Err(i) => i.clamp(1, self.grid.len() - 1),
        };
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let s = (t - t0) / (t1 - t0);
        &self.points[i - 1] * (1.0 - s) + &self.points[i] * s
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tag = tag.to_string();
        self
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::TooFewNodes {
            needed: 3,
            got: grid.len(),
        });
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
    }
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if first.abs() > 1e-12 || (last - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "grid must span [0, 1], got [{first}, {last}]"
        )));
    }
    Ok(())
}

/// Polygonal length over the grid nodes.
pub fn curve_length(c: &SampledCurve) -> f64 {
    polyline_length(c.points())
}

/// Three-point derivative estimates on an arbitrary increasing grid.
///
/// Interior nodes use the centered stencil, endpoints the second-order
/// one-sided one; both are exact for quadratics in `t`.
pub fn fd_derivative(points: &[Point], grid: &[f64]) -> Result<Vec<Point>> {
    if points.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: points.len(),
        });
    }
    if grid.len() < 3 {
        return Err(Error::TooFewNodes {
            needed: 3,
            got: grid.len(),
        });
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
    }
    let n = grid.len();
    let mut out = Vec::with_capacity(n);
    {
        let (h1, h2) = (grid[1] - grid[0], grid[2] - grid[1]);
        let c1 = (h1 + h2) / (h1 * h2);
        let c2 = -h1 / (h2 * (h1 + h2));
        out.push((&points[1] - &points[0]) * c1 + (&points[2] - &points[0]) * c2);
    }
    for i in 1..n - 1 {
        let (h1, h2) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let a = -h2 / (h1 * (h1 + h2));
        let c = h1 / (h2 * (h1 + h2));
        out.push((&points[i - 1] - &points[i]) * a + (&points[i + 1] - &points[i]) * c);
    }
    {
        let (h1, h2) = (grid[n - 2] - grid[n - 3], grid[n - 1] - grid[n - 2]);
        let a = h2 / (h1 * (h1 + h2));
        let b = -(h1 + h2) / (h1 * h2);
        out.push((&points[n - 3] - &points[n - 1]) * a + (&points[n - 2] - &points[n - 1]) * b);
    }
    Ok(out)
}

/// Central-difference Jacobian of `f` at `x` with step `h`.
pub fn fd_jacobian<F>(f: F, x: &Point, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&Point) -> Result<Point>,
{
    let n = x.len();
    let mut cols: Vec<Point> = Vec::with_capacity(n);
    let mut probe = x.clone();
    for j in 0..n {
        let xj = probe[j];
        probe[j] = xj + h;
        let fp = f(&probe)?;
        probe[j] = xj - h;
        let fm = f(&probe)?;
        probe[j] = xj;
        if fp.len() != fm.len() {
            return Err(Error::Evaluation("map changed output dimension".into()));
        }
        cols.push((fp - fm) / (2.0 * h));
    }
    let m = cols.first().map(|c| c.len()).unwrap_or(0);
    let mut jac = DMatrix::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        jac.set_column(j, c);
    }
    Ok(jac)
}

/// Radical inverse of `index` in `base` (van der Corput).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton point `index` in `[0, 1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|d| radical_inverse(index, PRIMES[d % PRIMES.len()])).collect()
}

/// Deterministic, well-spread unit directions in `R^dim`.
///
/// Dimension 1 gives `±1`; dimension 2 an equiangular fan starting at
/// angle 0; higher dimensions Halton points pushed through Box-Muller.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Point> {
    match dim {
        0 => Vec::new(),
        1 => (0..count)
            .map(|i| point(&[if i % 2 == 0 { 1.0 } else { -1.0 }]))
            .collect(),
        2 => (0..count)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / count as f64;
                point(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let pairs = dim.div_ceil(2);
            let mut out = Vec::with_capacity(count);
            let mut idx = 1u64;
            while out.len() < count {
                let u = halton(idx, 2 * pairs);
                idx += 1;
                let mut g = Vec::with_capacity(2 * pairs);
                for k in 0..pairs {
                    let (u1, u2) = (u[2 * k].max(1e-12), u[2 * k + 1]);
                    let r = (-2.0 * u1.ln()).sqrt();
                    let th = std::f64::consts::TAU * u2;
                    g.push(r * th.cos());
                    g.push(r * th.sin());
                }
                g.truncate(dim);
                let v = point(&g);
                let nrm = v.norm();
                if nrm > 1e-9 {
                    out.push(v / nrm);
                }
            }
            out
        }
    }
}

/// Points of a Latin hypercube over the box `[lo, hi]`, deterministic in `seed`.
pub fn latin_hypercube(lo: &Point, hi: &Point, count: usize, seed: u64) -> Vec<Point> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let dim = lo.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let strata: Vec<Vec<usize>> = (0..dim)
        .map(|_| {
            let mut s: Vec<usize> = (0..count).collect();
            s.shuffle(&mut rng);
            s
        })
        .collect();
    (0..count)
        .map(|i| {
            let coords: Vec<f64> = (0..dim)
                .map(|d| {
                    let cell = strata[d][i] as f64 + rng.gen::<f64>();
                    lo[d] + (hi[d] - lo[d]) * cell / count as f64
                })
                .collect();
            point(&coords)
        })
        .collect()
}

/// Orthonormal basis of the null space of `a` (columns), via SVD.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to a square matrix so the full right-singular basis is available.
    let mut padded = DMatrix::zeros(n.max(a.nrows()), n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let cols: Vec<Point> = (0..n)
        .filter(|&i| svd.singular_values[i] <= tol * smax)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Smallest singular value of `a` (0 for an empty matrix).
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn straight_segment_length_is_chord() {
        let c = SampledCurve::from_fn(7, "seg", |t| Ok((point(&[t, 0.0]), point(&[1.0, 0.0])))).unwrap();
        assert_abs_diff_eq!(curve_length(&c), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_curve_has_zero_length() {
        let c = SampledCurve::from_fn(10, "const", |_| Ok((point(&[2.0, 3.0]), point(&[0.0, 0.0])))).unwrap();
        assert_eq!(curve_length(&c), 0.0);
    }

    #[test]
    fn quarter_circle_length() {
        let n = 10_000;
        let c = SampledCurve::from_fn(n, "arc", |t| {
            let a = t * std::f64::consts::FRAC_PI_2;
            Ok((point(&[a.cos(), a.sin()]), point(&[-a.sin(), a.cos()])))
        })
        .unwrap();
        // Oracle: each chord subtends an angle (pi/2)/n, so its length is 2 sin(angle/2).
        let chord = 2.0 * (std::f64::consts::FRAC_PI_2 / n as f64 / 2.0).sin();
        assert_abs_diff_eq!(curve_length(&c), chord * n as f64, epsilon = 1e-12);
        assert!((curve_length(&c) - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn fd_derivative_exact_for_quadratics() {
        let grid = uniform_grid(8);
        let pts: Vec<Point> = grid.iter().map(|&t| point(&[t, t * t])).collect();
        let d = fd_derivative(&pts, &grid).unwrap();
        for (t, v) in grid.iter().zip(&d) {
            assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v[1], 2.0 * t, epsilon = 1e-12);
        }
    }

    #[test]
    fn fd_derivative_exact_for_quadratics_on_nonuniform_grid() {
        let grid = vec![0.0, 0.1, 0.35, 0.4, 0.8, 1.0];
        let pts: Vec<Point> = grid.iter().map(|&t| point(&[3.0 * t * t - t])).collect();
        let d = fd_derivative(&pts, &grid).unwrap();
        for (t, v) in grid.iter().zip(&d) {
            assert_abs_diff_eq!(v[0], 6.0 * t - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fd_derivative_of_constant_is_zero() {
        let grid = uniform_grid(5);
        let pts = vec![point(&[1.5, -2.0]); grid.len()];
        for v in fd_derivative(&pts, &grid).unwrap() {
            assert_eq!(v.norm(), 0.0);
        }
    }

    #[test]
    fn fd_derivative_circle_accuracy() {
        let h = 1e-3;
        let n = 1000;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let pts: Vec<Point> = grid.iter().map(|&t| point(&[t.cos(), t.sin()])).collect();
        let d = fd_derivative(&pts, &grid).unwrap();
        // Centered error is h^2/6 |f'''| <= 1.7e-7; one-sided h^2/3 |f'''| <= 3.4e-7.
        for (t, v) in grid.iter().zip(&d) {
            assert!((v[0] + t.sin()).abs() < 1e-6);
            assert!((v[1] - t.cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn fd_derivative_rejects_non_monotone_grid() {
        let grid = vec![0.0, 0.5, 0.4, 1.0];
        let pts = vec![point(&[0.0]); 4];
        assert!(matches!(
            fd_derivative(&pts, &grid),
            Err(Error::NonMonotoneGrid { index: 2 })
        ));
    }

    #[test]
    fn fd_jacobian_of_linear_map_is_exact() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let x = point(&[0.3, -0.7, 2.0]);
        let j = fd_jacobian(|z| Ok(&a * z), &x, 1e-3).unwrap();
        assert!((j - &a).abs().max() < 1e-12);
    }

    #[test]
    fn fd_jacobian_hand_differentiated() {
        let x = point(&[1.0, 0.0]);
        let j = fd_jacobian(|z| Ok(point(&[z[0] * z[0] - z[1]])), &x, 1e-4).unwrap();
        assert!((j[(0, 0)] - 2.0).abs() < 1e-7);
        assert!((j[(0, 1)] + 1.0).abs() < 1e-7);
    }

    #[test]
    fn fd_jacobian_power_three_halves_at_zero() {
        let x = point(&[0.0]);
        let j = fd_jacobian(|z| Ok(point(&[z[0].abs().powf(1.5)])), &x, default_fd_step(&x)).unwrap();
        assert_eq!(j[(0, 0)], 0.0);
    }

    #[test]
    fn sphere_directions_are_unit() {
        for dim in 1..6 {
            for v in sphere_directions(dim, 17) {
                assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
                assert_eq!(v.len(), dim);
            }
        }
    }

    #[test]
    fn null_space_of_row() {
        let a = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        let k = null_space(&a, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).abs().max() < 1e-12);
    }

    #[test]
    fn eval_interpolates() {
        let c = SampledCurve::from_fn(4, "seg", |t| Ok((point(&[2.0 * t]), point(&[2.0])))).unwrap();
        assert_abs_diff_eq!(c.eval(0.3)[0], 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(c.eval(1.0)[0], 2.0, epsilon = 1e-14);
    }
}
