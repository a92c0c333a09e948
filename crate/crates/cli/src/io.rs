//! Dataset and system file formats.
//!
//! CSV holds one sequence with header `t,u1..um,y1..yp`. JSON holds any
//! number of sequences:
//! `{"m":1,"p":1,"sampling_time":null,"sequences":[{"u":[[..]],"y":[[..]]}]}`
//! where `u` and `y` list one row per sample.

use std::fmt::Write as _;
use std::path::Path;

use ddsys_core::hankel::{DataSet, Trajectory};
use ddsys_core::lti::{ContinuousStateSpace, DiscreteStateSpace};
use ddsys_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    /// Guesses the format from the file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequenceJson {
    u: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DataSetJson {
    m: usize,
    p: usize,
    sampling_time: Option<f64>,
    sequences: Vec<SequenceJson>,
}

fn parse_err(line: usize, field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn rows_to_matrix(
    rows: &[Vec<f64>],
    width: usize,
    seq: usize,
    name: &str,
) -> Result<Matrix, CliError> {
    for (t, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(CliError::from(ddsys_core::Error::DimensionMismatch(
                format!(
                    "sequence {seq}, {name}[{t}] has {} entries, expected {width}",
                    r.len()
                ),
            )));
        }
    }
    Ok(Matrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Parses a JSON dataset.
pub fn parse_json(text: &str) -> Result<DataSet, CliError> {
    let raw: DataSetJson = serde_json::from_str(text)
        .map_err(|e| parse_err(e.line(), format!("column {}", e.column()), e.to_string()))?;
    let mut seqs = Vec::with_capacity(raw.sequences.len());
    for (k, s) in raw.sequences.iter().enumerate() {
        let u = rows_to_matrix(&s.u, raw.m, k, "u")?;
        let y = rows_to_matrix(&s.y, raw.p, k, "y")?;
        seqs.push(Trajectory::new(u, y)?);
    }
    Ok(DataSet::new(raw.m, raw.p, seqs, raw.sampling_time)?)
}

/// Parses a single-sequence CSV dataset.
pub fn parse_csv(text: &str, sampling_time: Option<f64>) -> Result<DataSet, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, "header", e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names.first() != Some(&"t") {
        return Err(parse_err(
            1,
            names.first().copied().unwrap_or(""),
            "first column must be `t`",
        ));
    }
    let m = names.iter().filter(|s| s.starts_with('u')).count();
    let p = names.len() - 1 - m;
    for (i, name) in names.iter().enumerate().skip(1) {
        let want = if i <= m {
            format!("u{i}")
        } else {
            format!("y{}", i - m)
        };
        if *name != want {
            return Err(parse_err(
                1,
                *name,
                format!("expected column `{want}` (header must be t,u1..um,y1..yp)"),
            ));
        }
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, "", e.to_string()))?;
        if rec.len() != names.len() {
            return Err(parse_err(
                line,
                "",
                format!("{} fields, header has {}", rec.len(), names.len()),
            ));
        }
        let mut vals = Vec::with_capacity(rec.len());
        for (field, name) in rec.iter().zip(&names) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, *name, format!("`{field}` is not a number")))?;
            vals.push(v);
        }
        if vals[0] != k as f64 {
            return Err(parse_err(
                line,
                "t",
                format!("expected t = {k}, found {}", vals[0]),
            ));
        }
        rows.push(vals);
    }
    let u = Matrix::from_fn(rows.len(), m, |i, j| rows[i][1 + j]);
    let y = Matrix::from_fn(rows.len(), p, |i, j| rows[i][1 + m + j]);
    Ok(DataSet::new(
        m,
        p,
        vec![Trajectory::new(u, y)?],
        sampling_time,
    )?)
}

pub fn emit_json(ds: &DataSet) -> String {
    let raw = DataSetJson {
        m: ds.m(),
        p: ds.p(),
        sampling_time: ds.sampling_time(),
        sequences: ds
            .sequences()
            .iter()
            .map(|s| SequenceJson {
                u: matrix_rows(&s.u),
                y: matrix_rows(&s.y),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("finite data")
}

/// CSV holds a single sequence; several sequences are rejected.
pub fn emit_csv(ds: &DataSet) -> Result<String, CliError> {
    let [seq] = ds.sequences() else {
        return Err(CliError::Usage(format!(
            "CSV holds exactly one sequence, data set has {}",
            ds.sequences().len()
        )));
    };
    let mut out = String::from("t");
    for i in 1..=ds.m() {
        write!(out, ",u{i}").unwrap();
    }
    for i in 1..=ds.p() {
        write!(out, ",y{i}").unwrap();
    }
    out.push('\n');
    for t in 0..seq.len() {
        write!(out, "{t}").unwrap();
        for v in seq.u.row(t).iter().chain(seq.y.row(t).iter()) {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Reads a dataset; `sampling_time` only applies to CSV input.
pub fn ingest(
    path: &Path,
    format: DataFormat,
    sampling_time: Option<f64>,
) -> Result<DataSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    match format {
        DataFormat::Csv => parse_csv(&text, sampling_time),
        DataFormat::Json => {
            let ds = parse_json(&text)?;
            Ok(match sampling_time {
                Some(h) => ds.with_sampling_time(Some(h)),
                None => ds,
            })
        }
    }
}

pub fn emit(ds: &DataSet, format: DataFormat) -> Result<String, CliError> {
    match format {
        DataFormat::Csv => emit_csv(ds),
        DataFormat::Json => Ok(emit_json(ds)),
    }
}

/// State-space model as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemJson {
    pub continuous: bool,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

/// A model read from System JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySystem {
    Discrete(DiscreteStateSpace),
    Continuous(ContinuousStateSpace),
}

fn to_matrix(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    name: &str,
) -> Result<Matrix, CliError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::from(ddsys_core::Error::DimensionMismatch(
            format!("{name} must be {nrows}x{ncols}"),
        )));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl SystemJson {
    pub fn from_matrices(continuous: bool, a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Self {
        Self {
            continuous,
            a: matrix_rows(a),
            b: matrix_rows(b),
            c: matrix_rows(c),
            d: matrix_rows(d),
        }
    }

    /// Shapes come from `D` (p x m) and `A` (n x n); an empty `B` or `C`
    /// is accepted when `n = 0`.
    pub fn to_system(&self) -> Result<AnySystem, CliError> {
        let p = self.d.len();
        let m = self.d.first().map_or(0, Vec::len);
        let n = self.a.len();
        let a = to_matrix(&self.a, n, n, "A")?;
        let b = if n == 0 {
            Matrix::zeros(0, m)
        } else {
            to_matrix(&self.b, n, m, "B")?
        };
        let c = if n == 0 && self.c.iter().all(Vec::is_empty) {
            Matrix::zeros(p, 0)
        } else {
            to_matrix(&self.c, p, n, "C")?
        };
        let d = to_matrix(&self.d, p, m, "D")?;
        Ok(if self.continuous {
            AnySystem::Continuous(ContinuousStateSpace::new(a, b, c, d)?)
        } else {
            AnySystem::Discrete(DiscreteStateSpace::new(a, b, c, d)?)
        })
    }

    pub fn from_discrete(s: &DiscreteStateSpace) -> Self {
        Self::from_matrices(false, &s.a, &s.b, &s.c, &s.d)
    }

    pub fn from_continuous(s: &ContinuousStateSpace) -> Self {
        Self::from_matrices(true, &s.a, &s.b, &s.c, &s.d)
    }
}

pub fn read_system(path: &Path) -> Result<AnySystem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw: SystemJson = serde_json::from_str(&text)
        .map_err(|e| parse_err(e.line(), format!("column {}", e.column()), e.to_string()))?;
    raw.to_system()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_row_csv() {
        let ds = parse_csv("t,u1,y1\n0,1,0\n1,0,1\n2,0,0\n", None).unwrap();
        assert_eq!((ds.m(), ds.p()), (1, 1));
        assert_eq!(ds.sequences()[0].len(), 3);
        assert_eq!(ds.sequences()[0].y[(1, 0)], 1.0);
    }

    #[test]
    fn json_with_two_sequences() {
        let text = r#"{"m":1,"p":1,"sampling_time":null,"sequences":[
            {"u":[[1.0],[0.0]],"y":[[0.0],[1.0]]},
            {"u":[[2.0]],"y":[[0.5]]}]}"#;
        let ds = parse_json(text).unwrap();
        assert_eq!(ds.sequences().len(), 2);
    }

    #[test]
    fn bad_header_reports_position() {
        match parse_csv("t,u1,y1,y2\n0,1,0\n", None) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_csv("t,u1,z1\n0,1,0\n", None) {
            Err(CliError::Parse { line, field, .. }) => {
                assert_eq!((line, field.as_str()), (1, "z1"))
            }
            other => panic!("{other:?}"),
        }
        match parse_csv("t,u1,y1\n0,1,x\n", None) {
            Err(CliError::Parse { line, field, .. }) => {
                assert_eq!((line, field.as_str()), (2, "y1"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_shape_checked() {
        let text = r#"{"m":2,"p":1,"sampling_time":null,"sequences":[{"u":[[1.0]],"y":[[0.0]]}]}"#;
        assert!(matches!(parse_json(text), Err(CliError::Core { .. })));
        assert!(matches!(
            parse_json("{\"m\":1,"),
            Err(CliError::Parse { .. })
        ));
    }

    #[test]
    fn static_system_json() {
        let s: SystemJson =
            serde_json::from_str(r#"{"continuous":false,"A":[],"B":[],"C":[[]],"D":[[2.0]]}"#)
                .unwrap();
        match s.to_system().unwrap() {
            AnySystem::Discrete(d) => assert_eq!((d.n(), d.m(), d.p()), (0, 1, 1)),
            _ => panic!(),
        }
    }
}
