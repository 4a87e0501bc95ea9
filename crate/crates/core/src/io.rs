//! JSON and CSV formats: matrices, state-space models, structures, sweep
//! tables and bound reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsvError};
use crate::linalg::{CMatrix, ComplexMatrix};
use crate::structure::BlockStructure;
use crate::sweep::{Peaks, StateSpace, SweepTable};

/// `{"rows": n, "cols": m, "data": [[[re, im], ...], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.data.len() != self.rows {
            return Err(SsvError::Parse(format!(
                "row count mismatch: rows = {} but data has {} rows",
                self.rows,
                self.data.len()
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        for (i, row) in self.data.iter().enumerate() {
            if row.len() != self.cols {
                return Err(SsvError::Parse(format!(
                    "row {i} has {} entries, expected cols = {}",
                    row.len(),
                    self.cols
                )));
            }
            for (j, [re, im]) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(SsvError::Parse(format!("non-finite entry at row {i}, column {j}")));
                }
                entries.push(Complex64::new(*re, *im));
            }
        }
        ComplexMatrix::new(self.rows, self.cols, entries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct StateSpaceJson {
    pub a: MatrixJson,
    pub b: MatrixJson,
    pub c: MatrixJson,
}

fn json_error(what: &str, e: serde_json::Error) -> SsvError {
    SsvError::Parse(format!("{what}: line {}, column {}: {e}", e.line(), e.column()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SsvError::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_matrix_str(text: &str) -> Result<ComplexMatrix> {
    let raw: MatrixJson = serde_json::from_str(text).map_err(|e| json_error("matrix", e))?;
    raw.to_matrix()
}

pub fn parse_matrix_file(path: &Path) -> Result<ComplexMatrix> {
    parse_matrix_str(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("matrix serializes")
}

pub fn parse_state_space_str(text: &str) -> Result<StateSpace> {
    let raw: StateSpaceJson = serde_json::from_str(text).map_err(|e| json_error("state-space model", e))?;
    let part = |name: &str, m: &MatrixJson| {
        m.to_matrix()
            .map_err(|e| SsvError::Parse(format!("matrix {name}: {e}")))
    };
    StateSpace::new(part("A", &raw.a)?, part("B", &raw.b)?, part("C", &raw.c)?)
}

pub fn parse_state_space_file(path: &Path) -> Result<StateSpace> {
    parse_state_space_str(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn state_space_to_json(ss: &StateSpace) -> String {
    let raw = StateSpaceJson {
        a: MatrixJson::from_matrix(ss.a()),
        b: MatrixJson::from_matrix(ss.b()),
        c: MatrixJson::from_matrix(ss.c()),
    };
    serde_json::to_string_pretty(&raw).expect("model serializes")
}

/// A structure given inline (`{"blocks": [...]}`) or as a path to such a file.
pub fn parse_structure(spec: &str) -> Result<BlockStructure> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        read(Path::new(spec))?
    };
    serde_json::from_str(&text).map_err(|e| json_error("structure", e))
}

fn with_path(path: &Path, e: SsvError) -> SsvError {
    match e {
        SsvError::Parse(msg) => SsvError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mant = strip_zeros(mant);
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "omega,alpha,beta,gap_percent,converged_upper,converged_lower";

/// Sweep table as CSV; a failed bound leaves its field empty.
pub fn sweep_csv(table: &SweepTable) -> String {
    let opt = |x: Option<f64>| x.map(format_g12).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_g12(r.omega),
            opt(r.alpha),
            opt(r.beta),
            opt(r.gap_percent),
            r.converged_upper,
            r.converged_lower
        )
        .expect("write to string");
    }
    out
}

pub fn peaks_json(peaks: &Peaks) -> String {
    serde_json::to_string_pretty(peaks).expect("peaks serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_matrix() {
        let m = parse_matrix_str(r#"{"rows":1,"cols":1,"data":[[[2.0,0.0]]]}"#).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn row_count_mismatch() {
        let e = parse_matrix_str(r#"{"rows":2,"cols":1,"data":[[[1,0]],[[1,0]],[[1,0]]]}"#).unwrap_err();
        assert!(e.to_string().contains("row count mismatch"), "{e}");
        let e = parse_matrix_str(r#"{"rows":1,"cols":2,"data":[[[1,0]]]}"#).unwrap_err();
        assert!(e.to_string().contains("row 0"), "{e}");
    }

    #[test]
    fn malformed_json_has_position() {
        let e = parse_matrix_str("{\"rows\":1,\n\"cols\":1, \"data\": [[[1.0, ]]]}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn round_trip_is_exact() {
        let m = CMatrix::from_fn(3, 2, |i, j| {
            Complex64::new((i as f64 + 0.1) / 3.0, -1e-300 * (j as f64) + std::f64::consts::PI)
        });
        let back = parse_matrix_str(&matrix_to_json(&m)).unwrap();
        assert_eq!(back.as_matrix(), &m);
    }

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(0.9999999999999998), "1");
        assert_eq!(format_g12(-2.5), "-2.5");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(123456.789), "123456.789");
        assert_eq!(format_g12(1e-5), "1e-05");
        assert_eq!(format_g12(1.5e15), "1.5e+15");
        assert_eq!(format_g12(999999999999.5), "1e+12");
        assert_eq!(format_g12(0.0001), "0.0001");
        assert_eq!(format_g12(31.6227766016838), "31.6227766017");
    }

    #[test]
    fn structures_inline() {
        let s = parse_structure(r#"{"blocks":[{"type":"repeated_full","v":3,"m1":30}]}"#).unwrap();
        assert_eq!(s.row_dim(), 90);
        let s = parse_structure(r#"{"blocks":[{"type":"full","dim":4},{"type":"repeated_scalar","v":4}]}"#).unwrap();
        assert_eq!(s.blocks().len(), 2);
        assert!(parse_structure(r#"{"blocks":[{"type":"full","dim":0}]}"#).is_err());
        assert!(parse_structure("/nonexistent/structure.json").is_err());
    }
}
