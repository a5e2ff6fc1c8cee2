//! Closed convex bodies with exact projections and cone formulas.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Tolerance used to decide which constraints are active at a point.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConvexBody {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Coordinate box; infinite bounds are allowed.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `{y : a_i . y <= b_i}`; `normals` holds one row per constraint.
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    /// `point + span(directions)`; directions are orthonormalized on construction.
    Affine {
        point: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
    Singleton {
        point: Vec<f64>,
    },
    Product {
        factors: Vec<ConvexBody>,
    },
}

/// Affine hull `a0 + range(basis)` with orthonormal basis columns.
#[derive(Clone, Debug)]
pub struct AffineHull {
    pub origin: Point,
    pub basis: DMatrix<f64>,
}

impl AffineHull {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

impl ConvexBody {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        ConvexBody::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(&vec![0.0; dim], 1.0)
    }

    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        ConvexBody::Box {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    /// The whole space, as a box with infinite bounds.
    pub fn whole(dim: usize) -> Self {
        Self::boxed(&vec![f64::NEG_INFINITY; dim], &vec![f64::INFINITY; dim])
    }

    /// `{y : y_i >= 0}` for `signs[i] > 0`, `{y_i <= 0}` for `signs[i] < 0`, free for 0.
    pub fn orthant(signs: &[i8]) -> Self {
        let lo = signs
            .iter()
            .map(|&s| if s > 0 { 0.0 } else { f64::NEG_INFINITY })
            .collect::<Vec<_>>();
        let hi = signs
            .iter()
            .map(|&s| if s < 0 { 0.0 } else { f64::INFINITY })
            .collect::<Vec<_>>();
        Self::boxed(&lo, &hi)
    }

    pub fn halfspaces(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Self {
        ConvexBody::Halfspaces { normals, offsets }
    }

    pub fn affine(point: &[f64], directions: Vec<Vec<f64>>) -> Self {
        let m = point.len();
        let mut ortho: Vec<Point> = Vec::new();
        for d in directions {
            let mut v = DVector::from_vec(d);
            for q in &ortho {
                let c = q.dot(&v);
                v -= q * c;
            }
            let n = v.norm();
            if n > 1e-12 {
                ortho.push(v / n);
            }
        }
        debug_assert!(ortho.iter().all(|q| q.len() == m));
        ConvexBody::Affine {
            point: point.to_vec(),
            directions: ortho.into_iter().map(|q| q.iter().copied().collect()).collect(),
        }
    }

    pub fn singleton(point: &[f64]) -> Self {
        ConvexBody::Singleton {
            point: point.to_vec(),
        }
    }

    pub fn product(factors: Vec<ConvexBody>) -> Self {
        ConvexBody::Product { factors }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball { center, .. } => center.len(),
            ConvexBody::Box { lo, .. } => lo.len(),
            ConvexBody::Halfspaces { normals, .. } => normals.first().map_or(0, |r| r.len()),
            ConvexBody::Affine { point, .. } | ConvexBody::Singleton { point } => point.len(),
            ConvexBody::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
        }
    }

    /// Checks internal consistency of the parameters.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ConvexBody::Ball { center, radius } => {
                if center.is_empty() || !(*radius >= 0.0) || !radius.is_finite() {
                    return Err("ball needs a center and a finite radius >= 0".into());
                }
            }
            ConvexBody::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err("box bounds have different lengths".into());
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err("box needs lo <= hi in every coordinate".into());
                }
            }
            ConvexBody::Halfspaces { normals, offsets } => {
                if normals.is_empty() || normals.len() != offsets.len() {
                    return Err("halfspaces need one offset per normal".into());
                }
                let m = normals[0].len();
                if normals.iter().any(|r| r.len() != m || r.iter().all(|v| *v == 0.0)) {
                    return Err("halfspace normals must be nonzero and of equal length".into());
                }
            }
            ConvexBody::Affine { point, directions } => {
                if directions.iter().any(|d| d.len() != point.len()) {
                    return Err("affine directions must match the point dimension".into());
                }
            }
            ConvexBody::Singleton { point } => {
                if point.is_empty() {
                    return Err("singleton needs a point".into());
                }
            }
            ConvexBody::Product { factors } => {
                if factors.is_empty() {
                    return Err("product needs at least one factor".into());
                }
                for f in factors {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    fn split<'a>(&'a self, y: &Point) -> Vec<(&'a ConvexBody, Point)> {
        let ConvexBody::Product { factors } = self else {
            return vec![(self, y.clone())];
        };
        let mut off = 0;
        factors
            .iter()
            .map(|f| {
                let d = f.dim();
                let part = y.rows(off, d).into_owned();
                off += d;
                (f, part)
            })
            .collect()
    }

    /// Exact Euclidean projection.
    pub fn project(&self, y: &Point) -> Point {
        match self {
            ConvexBody::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let d = y - &c;
                let n = d.norm();
                if n <= *radius {
                    y.clone()
                } else {
                    c + d * (*radius / n)
                }
            }
            ConvexBody::Box { lo, hi } => {
                DVector::from_iterator(y.len(), y.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])))
            }
            ConvexBody::Halfspaces { normals, offsets } => project_polyhedron(normals, offsets, y),
            ConvexBody::Affine { point, directions } => {
                let p = DVector::from_column_slice(point);
                let d = y - &p;
                let mut out = p;
                for q in directions {
                    let q = DVector::from_column_slice(q);
                    out += &q * q.dot(&d);
                }
                out
            }
            ConvexBody::Singleton { point } => DVector::from_column_slice(point),
            ConvexBody::Product { .. } => {
                let parts: Vec<f64> = self
                    .split(y)
                    .into_iter()
                    .flat_map(|(f, p)| f.project(&p).iter().copied().collect::<Vec<_>>())
                    .collect();
                DVector::from_vec(parts)
            }
        }
    }

    /// `|y - P_D(y)|`.
    pub fn residual(&self, y: &Point) -> f64 {
        (y - self.project(y)).norm()
    }

    pub fn contains(&self, y: &Point, tol: f64) -> bool {
        self.residual(y) <= tol
    }

    /// Radius of the largest ball centered at `y` inside `D` when `y` is
    /// in `D`, minus the distance to `D` otherwise. Concave in `y`.
    pub fn margin(&self, y: &Point) -> f64 {
        match self {
            ConvexBody::Ball { center, radius } => {
                radius - (y - DVector::from_column_slice(center)).norm()
            }
            ConvexBody::Box { lo, hi } => {
                let r = self.residual(y);
                if r > 0.0 {
                    return -r;
                }
                (0..y.len())
                    .map(|i| (y[i] - lo[i]).min(hi[i] - y[i]))
                    .fold(f64::INFINITY, f64::min)
            }
            ConvexBody::Halfspaces { normals, offsets } => {
                let inside = normals
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| {
                        let a = DVector::from_column_slice(a);
                        (b - a.dot(y)) / a.norm()
                    })
                    .fold(f64::INFINITY, f64::min);
                if inside >= 0.0 {
                    inside
                } else {
                    -self.residual(y)
                }
            }
            ConvexBody::Affine { .. } | ConvexBody::Singleton { .. } => {
                if self.dim() == self.affine_hull().rank() {
                    f64::INFINITY
                } else {
                    -self.residual(y)
                }
            }
            ConvexBody::Product { .. } => {
                let parts = self.split(y);
                let margins: Vec<f64> = parts.iter().map(|(f, p)| f.margin(p)).collect();
                if margins.iter().all(|m| *m >= 0.0) {
                    margins.into_iter().fold(f64::INFINITY, f64::min)
                } else {
                    -parts
                        .iter()
                        .map(|(f, p)| f.residual(p).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
            }
        }
    }

    /// A point of `D`, used to seed searches.
    pub fn center(&self) -> Point {
        match self {
            ConvexBody::Ball { center, .. } => DVector::from_column_slice(center),
            ConvexBody::Box { lo, hi } => DVector::from_iterator(
                lo.len(),
                lo.iter().zip(hi).map(|(l, h)| match (l.is_finite(), h.is_finite()) {
                    (true, true) => 0.5 * (l + h),
                    (true, false) => l + 1.0,
                    (false, true) => h - 1.0,
                    (false, false) => 0.0,
                }),
            ),
            ConvexBody::Halfspaces { .. } => self.project(&DVector::zeros(self.dim())),
            ConvexBody::Affine { point, .. } | ConvexBody::Singleton { point } => {
                DVector::from_column_slice(point)
            }
            ConvexBody::Product { factors } => {
                DVector::from_vec(factors.iter().flat_map(|f| f.center().iter().copied().collect::<Vec<_>>()).collect())
            }
        }
    }

    /// Affine hull of `D`.
    pub fn affine_hull(&self) -> AffineHull {
        let m = self.dim();
        match self {
            ConvexBody::Ball { center, radius } => {
                let basis = if *radius > 0.0 {
                    DMatrix::identity(m, m)
                } else {
                    DMatrix::zeros(m, 0)
                };
                AffineHull {
                    origin: DVector::from_column_slice(center),
                    basis,
                }
            }
            ConvexBody::Box { lo, hi } => {
                let free: Vec<usize> = (0..m).filter(|&i| lo[i] < hi[i]).collect();
                let mut basis = DMatrix::zeros(m, free.len());
                for (j, &i) in free.iter().enumerate() {
                    basis[(i, j)] = 1.0;
                }
                AffineHull {
                    origin: self.center(),
                    basis,
                }
            }
            ConvexBody::Halfspaces { normals, offsets } => {
                let eq = implicit_equalities(normals, offsets);
                let rows: Vec<Point> = eq.iter().map(|&i| DVector::from_column_slice(&normals[i])).collect();
                let basis = if rows.is_empty() {
                    DMatrix::identity(m, m)
                } else {
                    let a = DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>());
                    crate::geometry::null_space(&a, 1e-10)
                };
                AffineHull {
                    origin: self.center(),
                    basis,
                }
            }
            ConvexBody::Affine { point, directions } => {
                let cols: Vec<Point> = directions.iter().map(|d| DVector::from_column_slice(d)).collect();
                let basis = if cols.is_empty() {
                    DMatrix::zeros(m, 0)
                } else {
                    DMatrix::from_columns(&cols)
                };
                AffineHull {
                    origin: DVector::from_column_slice(point),
                    basis,
                }
            }
            ConvexBody::Singleton { point } => AffineHull {
                origin: DVector::from_column_slice(point),
                basis: DMatrix::zeros(m, 0),
            },
            ConvexBody::Product { factors } => {
                let hulls: Vec<AffineHull> = factors.iter().map(|f| f.affine_hull()).collect();
                let k: usize = hulls.iter().map(|h| h.rank()).sum();
                let mut basis = DMatrix::zeros(m, k);
                let mut origin = DVector::zeros(m);
                let (mut r, mut c) = (0, 0);
                for h in &hulls {
                    let (mi, ki) = (h.basis.nrows(), h.rank());
                    origin.rows_mut(r, mi).copy_from(&h.origin);
                    basis.view_mut((r, c), (mi, ki)).copy_from(&h.basis);
                    r += mi;
                    c += ki;
                }
                AffineHull { origin, basis }
            }
        }
    }

    /// Whether `D` has nonempty interior in its ambient space.
    pub fn has_interior(&self) -> bool {
        self.affine_hull().rank() == self.dim()
    }

    /// Expresses `D` in the coordinates of its affine hull: returns the hull
    /// and `P(D) = {Q^T (y - a0) : y in D}` as a body in `R^k`, which has
    /// nonempty interior there.
    pub fn reduce_to_hull(&self) -> (AffineHull, ConvexBody) {
        let hull = self.affine_hull();
        let k = hull.rank();
        let reduced = match self {
            ConvexBody::Ball { center, radius } => {
                if k == 0 {
                    ConvexBody::whole(0)
                } else {
                    let _ = center;
                    ConvexBody::ball(&vec![0.0; k], *radius)
                }
            }
            ConvexBody::Box { lo, hi } => {
                let (l, h): (Vec<f64>, Vec<f64>) = (0..lo.len())
                    .filter(|&i| lo[i] < hi[i])
                    .map(|i| {
                        let c = hull.origin[i];
                        (lo[i] - c, hi[i] - c)
                    })
                    .unzip();
                ConvexBody::boxed(&l, &h)
            }
            ConvexBody::Halfspaces { normals, offsets } => {
                let eq = implicit_equalities(normals, offsets);
                let mut rn = Vec::new();
                let mut ro = Vec::new();
                for (i, (a, b)) in normals.iter().zip(offsets).enumerate() {
                    if eq.contains(&i) {
                        continue;
                    }
                    let a = DVector::from_column_slice(a);
                    let ar = hull.basis.transpose() * &a;
                    if ar.norm() < 1e-12 {
                        continue;
                    }
                    rn.push(ar.iter().copied().collect());
                    ro.push(b - a.dot(&hull.origin));
                }
                if rn.is_empty() {
                    ConvexBody::whole(k)
                } else {
                    ConvexBody::halfspaces(rn, ro)
                }
            }
            ConvexBody::Affine { .. } | ConvexBody::Singleton { .. } => ConvexBody::whole(k),
            ConvexBody::Product { factors } => {
                let parts: Vec<ConvexBody> = factors
                    .iter()
                    .map(|f| f.reduce_to_hull().1)
                    .filter(|f| f.dim() > 0)
                    .collect();
                match parts.len() {
                    0 => ConvexBody::whole(0),
                    1 => parts.into_iter().next().expect("one factor"),
                    _ => ConvexBody::product(parts),
                }
            }
        };
        (hull, reduced)
    }

    /// Projection onto the tangent cone `T_D(y)` at `y` in `D`.
    pub fn tangent_cone_project(&self, y: &Point, u: &Point) -> Point {
        match self {
            ConvexBody::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let d = y - &c;
                if d.norm() < radius - ACTIVE_TOL || *radius == 0.0 {
                    if *radius == 0.0 {
                        return DVector::zeros(u.len());
                    }
                    return u.clone();
                }
                let n = d / *radius;
                let s = n.dot(u);
                if s > 0.0 {
                    u - n * s
                } else {
                    u.clone()
                }
            }
            ConvexBody::Box { lo, hi } => DVector::from_iterator(
                u.len(),
                (0..u.len()).map(|i| {
                    let at_lo = y[i] - lo[i] <= ACTIVE_TOL;
                    let at_hi = hi[i] - y[i] <= ACTIVE_TOL;
                    let mut v = u[i];
                    if at_lo {
                        v = v.max(0.0);
                    }
                    if at_hi {
                        v = v.min(0.0);
                    }
                    v
                }),
            ),
            ConvexBody::Halfspaces { normals, offsets } => {
                let (an, ao): (Vec<Vec<f64>>, Vec<f64>) = normals
                    .iter()
                    .zip(offsets)
                    .filter(|(a, b)| {
                        let a = DVector::from_column_slice(a);
                        *b - a.dot(y) <= ACTIVE_TOL * a.norm()
                    })
                    .map(|(a, _)| (a.clone(), 0.0))
                    .unzip();
                if an.is_empty() {
                    u.clone()
                } else {
                    project_polyhedron(&an, &ao, u)
                }
            }
            ConvexBody::Affine { point, directions } => {
                let z = vec![0.0; point.len()];
                ConvexBody::Affine {
                    point: z,
                    directions: directions.clone(),
                }
                .project(u)
            }
            ConvexBody::Singleton { .. } => DVector::zeros(u.len()),
            ConvexBody::Product { .. } => {
                let ys = self.split(y);
                let us = self.split(u);
                DVector::from_vec(
                    ys.iter()
                        .zip(&us)
                        .flat_map(|((f, yp), (_, up))| f.tangent_cone_project(yp, up).iter().copied().collect::<Vec<_>>())
                        .collect(),
                )
            }
        }
    }

    /// Projection onto the normal cone `N_D(y)`, via `v = P_T v + P_N v`.
    pub fn normal_cone_project(&self, y: &Point, v: &Point) -> Point {
        v - self.tangent_cone_project(y, v)
    }

    pub fn in_tangent_cone(&self, y: &Point, u: &Point, tol: f64) -> bool {
        (u - self.tangent_cone_project(y, u)).norm() <= tol * u.norm().max(1e-300)
    }

    pub fn in_normal_cone(&self, y: &Point, v: &Point, tol: f64) -> bool {
        self.tangent_cone_project(y, v).norm() <= tol * v.norm().max(1e-300)
    }
}

/// Indices of constraints that hold with equality on the whole body,
/// detected as pairs of opposite normals with matching offsets.
fn implicit_equalities(normals: &[Vec<f64>], offsets: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..normals.len() {
        let ai = DVector::from_column_slice(&normals[i]);
        let ni = ai.norm();
        for j in 0..normals.len() {
            if i == j {
                continue;
            }
            let aj = DVector::from_column_slice(&normals[j]);
            let nj = aj.norm();
            let opposite = (&ai / ni + &aj / nj).norm() < 1e-12;
            if opposite && (offsets[i] / ni + offsets[j] / nj).abs() < 1e-12 {
                out.push(i);
                break;
            }
        }
    }
    out
}

/// Projection onto `{z : A z <= b}`.
///
/// Small systems enumerate active sets and return the unique KKT point;
/// larger ones fall back to Dykstra's alternating projections.
fn project_polyhedron(normals: &[Vec<f64>], offsets: &[f64], y: &Point) -> Point {
    let k = normals.len();
    let rows: Vec<Point> = normals.iter().map(|a| DVector::from_column_slice(a)).collect();
    let feasible = |z: &Point| {
        rows.iter()
            .zip(offsets)
            .all(|(a, b)| a.dot(z) <= b + 1e-10 * (1.0 + b.abs()))
    };
    if feasible(y) {
        return y.clone();
    }
    if k <= 10 {
        let mut best: Option<(f64, Point)> = None;
        for mask in 1u32..(1 << k) {
            let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            if idx.len() > y.len() {
                continue;
            }
            let a = DMatrix::from_rows(&idx.iter().map(|&i| rows[i].transpose()).collect::<Vec<_>>());
            let rhs = &a * y - DVector::from_iterator(idx.len(), idx.iter().map(|&i| offsets[i]));
            let gram = &a * a.transpose();
            let Some(lam) = gram.clone().lu().solve(&rhs) else {
                continue;
            };
            if (&gram * &lam - &rhs).norm() > 1e-9 * (1.0 + rhs.norm()) {
                continue;
            }
            if lam.iter().any(|l| *l < -1e-12) {
                continue;
            }
            let z = y - a.transpose() * lam;
            if feasible(&z) {
                let d = (&z - y).norm();
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, z));
                }
            }
        }
        if let Some((_, z)) = best {
            return z;
        }
    }
    // Dykstra.
    let mut x = y.clone();
    let mut incs = vec![DVector::zeros(y.len()); k];
    for _ in 0..20_000 {
        let prev = x.clone();
        for i in 0..k {
            let z = &x + &incs[i];
            let a = &rows[i];
            let viol = a.dot(&z) - offsets[i];
            let p = if viol > 0.0 { &z - a * (viol / a.norm_squared()) } else { z.clone() };
            incs[i] = &z - &p;
            x = p;
        }
        if (&x - &prev).norm() < 1e-14 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use proptest::prelude::*;

    fn bodies() -> Vec<ConvexBody> {
        vec![
            ConvexBody::unit_ball(2),
            ConvexBody::boxed(&[-1.0, 0.0], &[1.0, 2.0]),
            ConvexBody::orthant(&[1, -1]),
            ConvexBody::halfspaces(
                vec![vec![1.0, 1.0], vec![-1.0, 0.5], vec![0.0, -1.0]],
                vec![1.0, 0.5, 0.3],
            ),
            ConvexBody::affine(&[0.5, 0.5], vec![vec![1.0, -1.0]]),
            ConvexBody::singleton(&[0.2, -0.3]),
            ConvexBody::product(vec![
                ConvexBody::boxed(&[f64::NEG_INFINITY], &[0.0]),
                ConvexBody::singleton(&[0.0]),
            ]),
        ]
    }

    #[test]
    fn ball_projection_is_radial() {
        let p = ConvexBody::unit_ball(2).project(&point(&[2.0, 0.0]));
        assert_eq!(p, point(&[1.0, 0.0]));
    }

    #[test]
    fn halfspace_projection_matches_closed_form() {
        let d = ConvexBody::halfspaces(vec![vec![0.0, 1.0]], vec![0.0]);
        assert_eq!(d.project(&point(&[3.0, 2.0])), point(&[3.0, 0.0]));
    }

    #[test]
    fn polyhedron_corner_projection() {
        let d = ConvexBody::halfspaces(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        let p = d.project(&point(&[1.0, 2.0]));
        assert!((p - point(&[0.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn margins() {
        let b = ConvexBody::unit_ball(2);
        assert!((b.margin(&point(&[0.5, 0.0])) - 0.5).abs() < 1e-15);
        assert!((b.margin(&point(&[3.0, 0.0])) + 2.0).abs() < 1e-15);
        let o = ConvexBody::orthant(&[1, -1]);
        assert!((o.margin(&point(&[2.0, -0.5])) - 0.5).abs() < 1e-15);
        assert!((o.margin(&point(&[-3.0, 4.0])) + 5.0).abs() < 1e-15);
    }

    #[test]
    fn affine_hulls() {
        assert_eq!(ConvexBody::unit_ball(3).affine_hull().rank(), 3);
        assert_eq!(ConvexBody::singleton(&[1.0, 2.0]).affine_hull().rank(), 0);
        let d = ConvexBody::product(vec![
            ConvexBody::boxed(&[f64::NEG_INFINITY], &[0.0]),
            ConvexBody::singleton(&[0.0]),
        ]);
        let h = d.affine_hull();
        assert_eq!(h.rank(), 1);
        assert_eq!(h.basis.column(0).into_owned(), point(&[1.0, 0.0]));
        let (_, red) = d.reduce_to_hull();
        assert!(red.has_interior());
        assert_eq!(red.dim(), 1);
        let strip = ConvexBody::halfspaces(vec![vec![0.0, 1.0], vec![0.0, -1.0]], vec![1.0, -1.0]);
        assert_eq!(strip.affine_hull().rank(), 1);
        assert!(!strip.has_interior());
    }

    #[test]
    fn tangent_cones_exact() {
        let e = ConvexBody::boxed(&[f64::NEG_INFINITY], &[0.0]);
        let y = point(&[0.0]);
        assert!(e.in_tangent_cone(&y, &point(&[-1.0]), 1e-12));
        assert!(!e.in_tangent_cone(&y, &point(&[1.0]), 1e-12));
        assert!(e.in_normal_cone(&y, &point(&[1.0]), 1e-12));
        let s = ConvexBody::singleton(&[0.0]);
        assert!(!s.in_tangent_cone(&y, &point(&[1.0]), 1e-12));
        assert!(s.in_normal_cone(&y, &point(&[-1.0]), 1e-12));
        let b = ConvexBody::unit_ball(2);
        let y = point(&[1.0, 0.0]);
        assert!(b.in_tangent_cone(&y, &point(&[-0.1, 1.0]), 1e-12));
        assert!(!b.in_tangent_cone(&y, &point(&[0.1, 1.0]), 1e-12));
    }

    #[test]
    fn orthant_normal_cone_membership() {
        // D = {u >= 0, v <= 0}: N_D(0) = {y1 <= 0, y2 >= 0}.
        let d = ConvexBody::orthant(&[1, -1]);
        let z = point(&[0.0, 0.0]);
        assert!(d.in_normal_cone(&z, &point(&[-1.0, 1.0]), 1e-12));
        assert!(!d.in_normal_cone(&z, &point(&[1.0, 1.0]), 1e-12));
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        proptest::collection::vec(-3.0f64..3.0, 2).prop_map(DVector::from_vec)
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nearest(y in arb_point(), probes in proptest::collection::vec(arb_point(), 8)) {
            for d in bodies() {
                let p = d.project(&y);
                prop_assert!(d.residual(&p) <= 1e-9, "{:?}", d);
                prop_assert!((d.project(&p) - &p).norm() <= 1e-9);
                for q in &probes {
                    let z = d.project(q);
                    prop_assert!((&y - &p).norm() <= (&y - &z).norm() + 1e-9);
                }
            }
        }

        #[test]
        fn bodies_are_convex(a in arb_point(), b in arb_point(), t in 0.0f64..1.0) {
            for d in bodies() {
                let (pa, pb) = (d.project(&a), d.project(&b));
                let m = &pa * (1.0 - t) + &pb * t;
                prop_assert!(d.residual(&m) <= 1e-9);
            }
        }

        #[test]
        fn margin_is_concave(a in arb_point(), b in arb_point(), t in 0.0f64..1.0) {
            for d in bodies() {
                let m = &a * (1.0 - t) + &b * t;
                let (ma, mb, mm) = (d.margin(&a), d.margin(&b), d.margin(&m));
                if ma.is_finite() && mb.is_finite() {
                    prop_assert!(mm >= (1.0 - t) * ma + t * mb - 1e-9, "{:?}", d);
                }
            }
        }

        #[test]
        fn moreau_decomposition(y in arb_point(), v in arb_point()) {
            for d in bodies() {
                let p = d.project(&y);
                let t = d.tangent_cone_project(&p, &v);
                let n = d.normal_cone_project(&p, &v);
                prop_assert!((&t + &n - &v).norm() < 1e-12);
                prop_assert!(t.dot(&n).abs() < 1e-8);
            }
        }
    }
}
