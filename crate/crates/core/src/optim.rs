//! Small local solvers used by projections and searches.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::geometry::Point;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns the best point seen, so non-unimodal inputs still give a
/// valid (if local) answer.
pub fn golden_section<F>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let (fa, fb) = (f(a), f(b));
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    for _ in 0..iters {
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-16 * (1.0 + a.abs()) {
            break;
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Levenberg–Marquardt on `0.5 |r(z)|^2` where `rj(z) = (r, J)`.
pub fn levenberg_marquardt<F>(rj: F, z0: Point, max_iter: usize, tol: f64) -> Result<Point>
where
    F: Fn(&Point) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let mut z = z0;
    let (mut r, mut j) = rj(&z)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let g = j.transpose() * &r;
        if g.norm() <= tol * (1.0 + cost.sqrt()) {
            break;
        }
        let jtj = j.transpose() * &j;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let cand = &z + &step;
            match rj(&cand) {
                Ok((rc, jc)) if rc.norm_squared() < cost => {
                    let small = step.norm() <= tol * (1.0 + z.norm());
                    z = cand;
                    r = rc;
                    j = jc;
                    cost = r.norm_squared();
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    if small {
                        return Ok(z);
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    Ok(z)
}

/// Derivative-free compass (pattern) search.
pub fn compass_search<F>(f: F, x0: Point, step: f64, min_step: f64, max_evals: usize) -> (Point, f64)
where
    F: Fn(&Point) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut h = step;
    let mut evals = 1;
    while h > min_step && evals < max_evals {
        let mut moved = false;
        'dirs: for i in 0..n {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += s * h;
                let fy = f(&y);
                evals += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    moved = true;
                    break 'dirs;
                }
            }
        }
        if !moved {
            h /= 2.0;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        let (x, fx) = golden_section(|t| (t - 0.3).powi(2) + 1.0, -1.0, 2.0, 100);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_endpoint_minimum() {
        let (x, _) = golden_section(|t| t, 0.0, 1.0, 60);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn lm_solves_rosenbrock_residuals() {
        let rj = |z: &Point| {
            let r = DVector::from_vec(vec![10.0 * (z[1] - z[0] * z[0]), 1.0 - z[0]]);
            let j = DMatrix::from_row_slice(2, 2, &[-20.0 * z[0], 10.0, -1.0, 0.0]);
            Ok((r, j))
        };
        let z = levenberg_marquardt(rj, point(&[-1.2, 1.0]), 200, 1e-14).unwrap();
        assert!((z - point(&[1.0, 1.0])).norm() < 1e-8);
    }

    #[test]
    fn compass_search_quadratic() {
        let (x, _) = compass_search(|z| (z[0] - 1.0).powi(2) + (z[1] + 2.0).powi(2), point(&[0.0, 0.0]), 1.0, 1e-9, 10_000);
        assert!((x - point(&[1.0, -2.0])).norm() < 1e-8);
    }
}
