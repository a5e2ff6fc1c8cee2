//! CSV and JSON output. Floats are written with 17 significant digits so
//! that every value re-parses exactly.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, SampledCurve};
use crate::optimality::DescentReport;
use crate::regularity::{Confidence, Property, RegularityVerdict, Verdict, Witness};
use crate::{Error, Result};

/// Exact decimal rendering of `v` (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Spec(format!("not a number: `{t}`"))),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn split(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_f64).collect()
}

fn join_rows(rows: &[Vec<f64>]) -> String {
    rows.iter().map(|r| join(r)).collect::<Vec<_>>().join("|")
}

fn split_rows(s: &str) -> Result<Vec<Vec<f64>>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('|').map(split).collect()
}

/// Writes `t, x1..xn, dx1..dxn` rows.
pub fn write_curve_csv<W: Write>(curve: &SampledCurve, w: W) -> Result<()> {
    let n = curve.dim();
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("dx{i}")));
    wtr.write_record(&header)?;
    for ((t, p), d) in curve.grid().iter().zip(curve.points()).zip(curve.derivs()) {
        let mut rec = vec![fmt_f64(*t)];
        rec.extend(p.iter().map(|v| fmt_f64(*v)));
        rec.extend(d.iter().map(|v| fmt_f64(*v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_curve_csv`].
pub fn read_curve_csv<R: Read>(r: R, tag: &str) -> Result<SampledCurve> {
    let mut rdr = csv::Reader::from_reader(r);
    let width = rdr.headers()?.len();
    if width < 3 || width % 2 == 0 {
        return Err(Error::Spec(format!("curve CSV needs t, x.., dx.. columns; got {width}")));
    }
    let n = (width - 1) / 2;
    let (mut grid, mut pts, mut ders) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec.iter().map(parse_f64).collect::<Result<_>>()?;
        grid.push(vals[0]);
        pts.push(Point::from_column_slice(&vals[1..=n]));
        ders.push(Point::from_column_slice(&vals[n + 1..]));
    }
    SampledCurve::new(grid, pts, ders, tag)
}

/// One flat CSV row per verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub property: String,
    pub set: String,
    pub point: String,
    pub eps: String,
    pub radius: String,
    pub verdict: String,
    pub lhs: String,
    pub rhs: String,
    pub witness_points: String,
    pub witness_vectors: String,
    pub witness_param: String,
    pub witness_label: String,
    pub margin: String,
    pub samples: usize,
    pub seed: u64,
    pub confidence: String,
    pub note: String,
}

impl From<&RegularityVerdict> for VerdictRow {
    fn from(v: &RegularityVerdict) -> Self {
        let w = v.witness.as_ref();
        Self {
            property: v.property.to_string(),
            set: v.set.clone(),
            point: join(&v.point),
            eps: fmt_f64(v.eps),
            radius: fmt_f64(v.radius),
            verdict: v.verdict.to_string(),
            lhs: w.map(|w| fmt_f64(w.lhs)).unwrap_or_default(),
            rhs: w.map(|w| fmt_f64(w.rhs)).unwrap_or_default(),
            witness_points: w.map(|w| join_rows(&w.points)).unwrap_or_default(),
            witness_vectors: w.map(|w| join_rows(&w.vectors)).unwrap_or_default(),
            witness_param: w.and_then(|w| w.param).map(fmt_f64).unwrap_or_default(),
            witness_label: w.map(|w| w.label.clone()).unwrap_or_default(),
            margin: fmt_f64(v.min_margin),
            samples: v.samples,
            seed: v.seed,
            confidence: match v.confidence {
                Confidence::Standard => "standard".into(),
                Confidence::Lower => "lower".into(),
            },
            note: v.note.clone(),
        }
    }
}

impl VerdictRow {
    pub fn to_verdict(&self) -> Result<RegularityVerdict> {
        let witness = if self.lhs.is_empty() {
            None
        } else {
            Some(Witness {
                points: split_rows(&self.witness_points)?,
                vectors: split_rows(&self.witness_vectors)?,
                lhs: parse_f64(&self.lhs)?,
                rhs: parse_f64(&self.rhs)?,
                param: if self.witness_param.is_empty() {
                    None
                } else {
                    Some(parse_f64(&self.witness_param)?)
                },
                label: self.witness_label.clone(),
            })
        };
        Ok(RegularityVerdict {
            property: self.property.parse::<Property>()?,
            set: self.set.clone(),
            point: split(&self.point)?,
            eps: parse_f64(&self.eps)?,
            radius: parse_f64(&self.radius)?,
            verdict: self.verdict.parse::<Verdict>()?,
            witness,
            samples: self.samples,
            seed: self.seed,
            min_margin: parse_f64(&self.margin)?,
            confidence: match self.confidence.as_str() {
                "standard" => Confidence::Standard,
                "lower" => Confidence::Lower,
                other => return Err(Error::Spec(format!("unknown confidence `{other}`"))),
            },
            note: self.note.clone(),
        })
    }

    fn key(&self) -> (String, String, String, String, u64) {
        (self.set.clone(), self.property.clone(), self.eps.clone(), self.radius.clone(), self.seed)
    }
}

pub fn write_verdicts_csv<W: Write>(verdicts: &[RegularityVerdict], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for v in verdicts {
        wtr.serialize(VerdictRow::from(v))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_verdicts_csv<R: Read>(r: R) -> Result<Vec<VerdictRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Drops rows repeating an earlier `(set, property, eps, radius, seed)`.
pub fn dedup_rows(rows: Vec<VerdictRow>) -> Vec<VerdictRow> {
    let mut seen = HashSet::new();
    rows.into_iter().filter(|r| seen.insert(r.key())).collect()
}

/// Pivots verdict rows into one line per `(set, property)` with one column
/// per `(eps, radius)` cell.
pub fn write_matrix_csv<W: Write>(rows: &[VerdictRow], w: W) -> Result<()> {
    let rows = dedup_rows(rows.to_vec());
    let cell = |r: &VerdictRow| -> Result<(u64, u64)> {
        Ok((parse_f64(&r.eps)?.to_bits(), parse_f64(&r.radius)?.to_bits()))
    };
    let mut cells: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut table: BTreeMap<(String, String), BTreeMap<(u64, u64), String>> = BTreeMap::new();
    for r in &rows {
        let c = cell(r)?;
        cells.insert(c);
        table
            .entry((r.set.clone(), r.property.clone()))
            .or_default()
            .entry(c)
            .or_insert_with(|| r.verdict.clone());
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["set".to_string(), "property".to_string()];
    header.extend(
        cells
            .iter()
            .map(|(e, r)| format!("eps={} r={}", fmt_f64(f64::from_bits(*e)), fmt_f64(f64::from_bits(*r)))),
    );
    wtr.write_record(&header)?;
    for ((set, prop), vals) in &table {
        let mut rec = vec![set.clone(), prop.clone()];
        rec.extend(cells.iter().map(|c| vals.get(c).cloned().unwrap_or_default()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `t, x1..xn, f` rows of a descent curve.
pub fn write_descent_csv<W: Write>(report: &DescentReport, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let n = report.point.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("f".into());
    wtr.write_record(&header)?;
    for (t, p, v) in report.rows() {
        let mut rec = vec![fmt_f64(t)];
        rec.extend(p.iter().map(|x| fmt_f64(*x)));
        rec.push(fmt_f64(v));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Pretty JSON of any serializable report; non-finite floats become null.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
