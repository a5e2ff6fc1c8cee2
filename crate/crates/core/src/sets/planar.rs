//! Closed-form planar cones, used for exact normal-cone verdicts.

use nalgebra::DVector;
use std::f64::consts::TAU;

use crate::geometry::Point;

/// One piece of a planar cone: a ray or a convex wedge spanned by two
/// generators (angle strictly below pi).
#[derive(Clone, Debug, PartialEq)]
pub enum ConePiece {
    Ray([f64; 2]),
    Wedge([f64; 2], [f64; 2]),
}

/// Finite union of rays and wedges; the empty union is the cone `{0}`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlanarCone {
    pub pieces: Vec<ConePiece>,
}

fn angle(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(TAU)
}

impl ConePiece {
    /// `(start angle, sweep)` going counter-clockwise.
    fn arc(&self) -> (f64, f64) {
        match self {
            ConePiece::Ray(v) => (angle(*v), 0.0),
            ConePiece::Wedge(a, b) => {
                let (ta, tb) = (angle(*a), angle(*b));
                let ccw = (tb - ta).rem_euclid(TAU);
                if ccw <= std::f64::consts::PI {
                    (ta, ccw)
                } else {
                    (tb, TAU - ccw)
                }
            }
        }
    }

    fn generators(&self) -> Vec<[f64; 2]> {
        match self {
            ConePiece::Ray(v) => vec![*v],
            ConePiece::Wedge(a, b) => vec![*a, *b],
        }
    }
}

impl PlanarCone {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn ray(v: [f64; 2]) -> Self {
        Self {
            pieces: vec![ConePiece::Ray(v)],
        }
    }

    /// `v * R`.
    pub fn line(v: [f64; 2]) -> Self {
        Self {
            pieces: vec![ConePiece::Ray(v), ConePiece::Ray([-v[0], -v[1]])],
        }
    }

    pub fn wedge(a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            pieces: vec![ConePiece::Wedge(a, b)],
        }
    }

    pub fn union(mut self, other: PlanarCone) -> Self {
        self.pieces.extend(other.pieces);
        self
    }

    pub fn is_trivial(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Edge generators of every piece, in their natural (unnormalized) scale.
    pub fn generators(&self) -> Vec<Point> {
        self.pieces
            .iter()
            .flat_map(|p| p.generators())
            .map(|g| DVector::from_column_slice(&g))
            .collect()
    }

    pub fn contains_direction(&self, v: &Point, tol: f64) -> bool {
        if v.norm() == 0.0 {
            return true;
        }
        let t = angle([v[0], v[1]]);
        self.pieces.iter().any(|p| {
            let (s, w) = p.arc();
            let d = (t - s).rem_euclid(TAU);
            d <= w + tol || TAU - d <= tol
        })
    }

    /// Whether every piece of `self` lies inside a single piece of `other`.
    pub fn is_subset_of(&self, other: &PlanarCone, tol: f64) -> bool {
        self.pieces.iter().all(|p| {
            let (a, s) = p.arc();
            other.pieces.iter().any(|q| {
                let (b, t) = q.arc();
                let mut d = (a - b).rem_euclid(TAU);
                if TAU - d <= tol {
                    d = 0.0;
                }
                d + s <= t + tol
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn line_is_not_inside_wedge() {
        let w = PlanarCone::wedge([-1.0, 1.0], [1.0, 1.0]);
        let l = PlanarCone::line([0.0, 1.0]);
        assert!(!l.is_subset_of(&w, 1e-12));
        assert!(PlanarCone::ray([0.0, 1.0]).is_subset_of(&w, 1e-12));
        assert!(w.contains_direction(&point(&[0.0, 1.0]), 1e-12));
        assert!(!w.contains_direction(&point(&[0.0, -1.0]), 1e-12));
    }

    #[test]
    fn wedge_orientation_is_irrelevant() {
        let a = PlanarCone::wedge([1.0, 0.1], [1.0, -0.1]);
        let b = PlanarCone::wedge([1.0, -0.1], [1.0, 0.1]);
        assert!(a.is_subset_of(&b, 1e-12) && b.is_subset_of(&a, 1e-12));
        assert!(a.contains_direction(&point(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn zero_cone_is_subset_of_everything() {
        assert!(PlanarCone::zero().is_subset_of(&PlanarCone::ray([1.0, 0.0]), 0.0));
        assert!(!PlanarCone::ray([1.0, 0.0]).is_subset_of(&PlanarCone::zero(), 0.0));
    }
}
