//! JSON set specifications.
//!
//! The schema is documented in `docs/set-spec.md`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{catalog, Branch, OracleKind, Representation, ScalarFn, SetOracle};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::geometry::Point;
use crate::map::SmoothMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    Preimage,
    Graph,
    Epigraph,
    CurveUnion,
    Catalog,
}

/// Convex body in JSON form; `null` box bounds mean infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BodySpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<Option<f64>>, hi: Vec<Option<f64>> },
    Halfspaces { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// `signs[i]` is `1` for `y_i >= 0`, `-1` for `y_i <= 0`, `0` for free.
    Orthant { signs: Vec<i8> },
    Affine { point: Vec<f64>, directions: Vec<Vec<f64>> },
    Singleton { point: Vec<f64> },
    Product { factors: Vec<BodySpec> },
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        let body = match self {
            BodySpec::Ball { center, radius } => ConvexBody::ball(center, *radius),
            BodySpec::Box { lo, hi } => ConvexBody::boxed(
                &lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect::<Vec<_>>(),
                &hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect::<Vec<_>>(),
            ),
            BodySpec::Halfspaces { normals, offsets } => ConvexBody::halfspaces(normals.clone(), offsets.clone()),
            BodySpec::Orthant { signs } => ConvexBody::orthant(signs),
            BodySpec::Affine { point, directions } => ConvexBody::affine(point, directions.clone()),
            BodySpec::Singleton { point } => ConvexBody::singleton(point),
            BodySpec::Product { factors } => {
                ConvexBody::product(factors.iter().map(|f| f.build()).collect::<Result<Vec<_>>>()?)
            }
        };
        body.validate().map_err(Error::Spec)?;
        Ok(body)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    /// Coordinate expressions in the parameter `x1`.
    pub coords: Vec<String>,
    pub range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<String>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    #[serde(rename = "f", default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<BranchSpec>>,
    /// Reference point; defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
}

/// Parses a JSON spec; syntax errors report a byte offset.
pub fn parse_spec(src: &str) -> Result<SetSpec> {
    serde_json::from_str(src).map_err(|e| {
        let offset = byte_offset(src, e.line(), e.column());
        Error::Spec(format!("JSON error at byte {offset}: {e}"))
    })
}

fn byte_offset(src: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let before: usize = src.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (before + column.saturating_sub(1)).min(src.len())
}

pub fn load_spec(path: &std::path::Path) -> Result<SetOracle> {
    let src = std::fs::read_to_string(path)?;
    parse_spec(&src)?.build()
}

impl SetSpec {
    fn need<'a, T>(&self, v: &'a Option<T>, field: &str) -> Result<&'a T> {
        v.as_ref()
            .ok_or_else(|| Error::Spec(format!("kind {:?} requires field `{field}`", self.kind)))
    }

    pub fn build(&self) -> Result<SetOracle> {
        let name = self.name.clone().unwrap_or_else(|| "spec".to_string());
        let mut oracle = match self.kind {
            SpecKind::Catalog => return catalog(self.need(&self.name, "name")?),
            SpecKind::Preimage => {
                let dim = *self.need(&self.dim, "dim")?;
                let map = SmoothMap::from_exprs(dim, self.need(&self.map, "F")?)?;
                let body = self.need(&self.body, "D")?.build()?;
                if body.dim() != map.codomain_dim() {
                    return Err(Error::Spec(format!(
                        "D has dimension {} but F has {} components",
                        body.dim(),
                        map.codomain_dim()
                    )));
                }
                let center = match &self.center {
                    Some(c) if c.len() == dim => DVector::from_column_slice(c),
                    Some(_) => return Err(Error::Spec("center must have length dim".into())),
                    None => DVector::zeros(dim),
                };
                let radius = self.radius.unwrap_or(10.0);
                if !(radius > 0.0) {
                    return Err(Error::Spec("radius must be positive".into()));
                }
                SetOracle::preimage(&name, Representation::new(map, body, center, radius))
            }
            SpecKind::Graph | SpecKind::Epigraph => {
                if self.dim.is_some_and(|d| d != 2) {
                    return Err(Error::Spec("graph and epigraph specs are planar (dim 2)".into()));
                }
                let f = parse_expr(self.need(&self.function, "f")?)?;
                if f.arity() > 1 {
                    return Err(Error::Spec("f may only use x1".into()));
                }
                let f = ScalarFn::Expr(f);
                let kind = if self.kind == SpecKind::Graph {
                    OracleKind::Graph(f)
                } else {
                    OracleKind::Epigraph(f)
                };
                let bbox = (Point::from_vec(vec![-2.0, -2.0]), Point::from_vec(vec![2.0, 2.0]));
                SetOracle::new(&name, 2, kind, bbox)
            }
            SpecKind::CurveUnion => {
                let specs = self.need(&self.branches, "branches")?;
                let dim = self.dim.or_else(|| specs.first().map(|b| b.coords.len())).unwrap_or(0);
                let mut branches = Vec::new();
                let (mut lo, mut hi) = (vec![f64::INFINITY; dim], vec![f64::NEG_INFINITY; dim]);
                for (i, b) in specs.iter().enumerate() {
                    if b.coords.len() != dim {
                        return Err(Error::Spec(format!("branch {i} has {} coordinates, expected {dim}", b.coords.len())));
                    }
                    let exprs = b.coords.iter().map(|s| parse_expr(s)).collect::<Result<Vec<_>>>()?;
                    if exprs.iter().any(|e| e.arity() > 1) {
                        return Err(Error::Spec("branch coordinates may only use the parameter x1".into()));
                    }
                    let [a, c] = b.range;
                    if !(a < c) {
                        return Err(Error::Spec(format!("branch {i} has an empty range")));
                    }
                    let branch = Branch::new(&format!("branch{i}"), a, c, move |s| {
                        Point::from_iterator(exprs.len(), exprs.iter().map(|e| e.eval(&[s]).unwrap_or(f64::NAN)))
                    });
                    for k in 0..=256 {
                        let p = branch.at(a + (c - a) * k as f64 / 256.0);
                        for d in 0..dim {
                            if p[d].is_finite() {
                                lo[d] = lo[d].min(p[d]);
                                hi[d] = hi[d].max(p[d]);
                            }
                        }
                    }
                    branches.push(branch);
                }
                let pad = |l: f64, h: f64| 0.1 * (h - l).max(1.0);
                let lo = Point::from_iterator(dim, (0..dim).map(|d| lo[d] - pad(lo[d], hi[d])));
                let hi2 = Point::from_iterator(dim, (0..dim).map(|d| hi[d] + pad(lo[d], hi[d])));
                SetOracle::new(&name, dim, OracleKind::CurveUnion(branches), (lo, hi2))
            }
        };
        if let Some(b) = &self.base {
            if b.len() != oracle.dim {
                return Err(Error::Spec("base must have length dim".into()));
            }
            oracle.base_point = DVector::from_column_slice(b);
        }
        Ok(oracle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    const EPI: &str = r#"{
  "kind": "preimage",
  "dim": 2,
  "F": ["x1^2 - x2"],
  "D": {"type": "box", "lo": [null], "hi": [0.0]},
  "center": [0.0, 0.0],
  "radius": 5.0,
  "name": "epi_x2"
}"#;

    #[test]
    fn preimage_spec_builds() {
        let c = parse_spec(EPI).unwrap().build().unwrap();
        assert!(c.contains(&point(&[1.0, 2.0]), 1e-9));
        assert!(!c.contains(&point(&[1.0, 0.5]), 1e-9));
        assert!(c.representation.is_some());
    }

    #[test]
    fn spec_round_trips() {
        let s = parse_spec(EPI).unwrap();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(parse_spec(&text).unwrap(), s);
    }

    #[test]
    fn curve_union_spec() {
        let s = r#"{"kind": "curve-union", "branches": [
            {"coords": ["x1", "x1^2"], "range": [-2, 2]},
            {"coords": ["x1", "-x1^2"], "range": [-2, 2]}]}"#;
        let c = parse_spec(s).unwrap().build().unwrap();
        assert!(c.contains(&point(&[1.0, -1.0]), 1e-9));
        assert!(!c.contains(&point(&[1.0, 0.5]), 1e-9));
    }

    #[test]
    fn catalog_spec() {
        let c = parse_spec(r#"{"kind": "catalog", "name": "unit-circle"}"#).unwrap().build().unwrap();
        assert_eq!(c.name, "unit-circle");
    }

    #[test]
    fn malformed_json_reports_byte_offset() {
        let src = "{\n  \"kind\": \"preimage\",\n  \"dim\": ,\n}";
        match parse_spec(src) {
            Err(Error::Spec(msg)) => {
                let expected = src.find(": ,").unwrap() + 2;
                assert!(msg.contains(&format!("byte {expected}")), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_fields_are_reported() {
        let err = parse_spec(r#"{"kind": "preimage", "dim": 2}"#).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("`F`"));
        let err = parse_spec(r#"{"kind": "graph"}"#).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("`f`"));
    }
}
