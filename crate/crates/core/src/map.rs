//! C¹ maps `F: R^n -> R^m` with optional analytic Jacobians.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use crate::geometry::{default_fd_step, fd_jacobian, Point};

type EvalFn = dyn Fn(&Point) -> Result<Point> + Send + Sync;
type JacFn = dyn Fn(&Point) -> Result<DMatrix<f64>> + Send + Sync;

/// Structural information that lets callers skip nonlinear machinery.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    /// `x -> A x + b`.
    Affine { a: DMatrix<f64>, b: Point },
    General,
}

#[derive(Clone)]
pub struct SmoothMap {
    n: usize,
    m: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
    kind: MapKind,
    label: String,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("kind", &self.kind)
            .field("label", &self.label)
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(n: usize, m: usize, label: &str, f: F) -> Self
    where
        F: Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    {
        Self {
            n,
            m,
            eval: Arc::new(f),
            jac: None,
            kind: MapKind::General,
            label: label.to_string(),
        }
    }

    pub fn with_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&Point) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(j));
        self
    }

    pub fn identity(n: usize) -> Self {
        Self {
            kind: MapKind::Identity,
            ..Self::new(n, n, "identity", |x| Ok(x.clone()))
        }
        .with_jacobian(move |_| Ok(DMatrix::identity(n, n)))
    }

    pub fn affine(a: DMatrix<f64>, b: Point) -> Self {
        let (m, n) = a.shape();
        let (a2, b2, a3) = (a.clone(), b.clone(), a.clone());
        Self {
            kind: MapKind::Affine { a, b },
            ..Self::new(n, m, "affine", move |x| Ok(&a2 * x + &b2))
        }
        .with_jacobian(move |_| Ok(a3.clone()))
    }

    /// Map whose components are parsed expressions in `x1..xn`.
    pub fn from_exprs(n: usize, sources: &[String]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| parse_expr(s))
            .collect::<Result<Vec<Expr>>>()?;
        Self::from_parsed(n, exprs)
    }

    pub fn from_parsed(n: usize, exprs: Vec<Expr>) -> Result<Self> {
        if let Some(e) = exprs.iter().find(|e| e.arity() > n) {
            return Err(Error::Spec(format!("expression `{e}` uses more than {n} variables")));
        }
        let label = exprs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        let m = exprs.len();
        Ok(Self::new(n, m, &label, move |x| {
            let xs = x.as_slice();
            let vals = exprs.iter().map(|e| e.eval(xs)).collect::<Result<Vec<f64>>>()?;
            Ok(Point::from_vec(vals))
        }))
    }

    pub fn domain_dim(&self) -> usize {
        self.n
    }

    pub fn codomain_dim(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_affine(&self) -> bool {
        !matches!(self.kind, MapKind::General)
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let y = (self.eval)(x)?;
        if y.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: y.len(),
            });
        }
        Ok(y)
    }

    /// Analytic Jacobian when supplied, central differences otherwise.
    pub fn jacobian(&self, x: &Point) -> Result<DMatrix<f64>> {
        match &self.jac {
            Some(j) => j(x),
            None => fd_jacobian(|z| self.eval(z), x, default_fd_step(x)),
        }
    }

    /// `c * F`, used to check scale invariance of certificates.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        let inner_j = self.clone();
        let mut out = Self::new(self.n, self.m, &format!("{c}*({})", self.label), move |x| {
            Ok(inner.eval(x)? * c)
        });
        if self.jac.is_some() {
            out = out.with_jacobian(move |x| Ok(inner_j.jacobian(x)? * c));
        }
        out
    }

    /// `x -> F(x) - y0`.
    pub fn shifted(&self, y0: Point) -> Self {
        let inner = self.clone();
        let inner_j = self.clone();
        Self::new(self.n, self.m, &self.label, move |x| Ok(inner.eval(x)? - &y0))
            .with_jacobian(move |x| inner_j.jacobian(x))
    }

    /// `x -> Q^T F(x)`.
    pub fn left_mul(&self, qt: DMatrix<f64>) -> Self {
        let inner = self.clone();
        let inner_j = self.clone();
        let q2 = qt.clone();
        Self::new(self.n, qt.nrows(), &self.label, move |x| Ok(&qt * inner.eval(x)?))
            .with_jacobian(move |x| Ok(&q2 * inner_j.jacobian(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn expression_map_and_fd_jacobian() {
        let f = SmoothMap::from_exprs(2, &["x1^2 - x2".into(), "x1*x2".into()]).unwrap();
        let x = point(&[1.0, 2.0]);
        assert_eq!(f.eval(&x).unwrap(), point(&[-1.0, 2.0]));
        let j = f.jacobian(&x).unwrap();
        let exact = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 2.0, 1.0]);
        assert!((j - exact).abs().max() < 1e-8);
    }

    #[test]
    fn too_many_variables_rejected() {
        assert!(SmoothMap::from_exprs(1, &["x2".into()]).is_err());
    }

    #[test]
    fn affine_map() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let f = SmoothMap::affine(a.clone(), point(&[1.0, 0.0]));
        assert_eq!(f.eval(&point(&[1.0, 0.0])).unwrap(), point(&[1.0, 1.0]));
        assert_eq!(f.jacobian(&point(&[0.0, 0.0])).unwrap(), a);
        assert!(f.is_affine());
    }
}
