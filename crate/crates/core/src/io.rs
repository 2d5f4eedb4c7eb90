//! File formats: tensor JSON, eigenpair tables (CSV and JSON) and
//! convergence traces (CSV). Indices in files are 1-based.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::hopm::PowerTraceRow;
use crate::qrst::TraceRow;
use crate::spectra::{EigenEntry, EigenSet};
use crate::tensor::{DenseTensor, SymTensor};

/// On-disk tensor. Exactly one of `unique_entries` (lexicographic canonical
/// order) and `dense_values` (first index fastest) is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub order: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique_entries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_values: Option<Vec<f64>>,
}

/// Relative asymmetry accepted in `dense_values`.
pub const DENSE_SYMMETRY_TOLERANCE: f64 = 1e-12;

impl TensorFile {
    pub fn from_tensor(t: &SymTensor) -> Self {
        Self {
            order: t.order(),
            dim: t.dim(),
            unique_entries: Some(t.unique_entries()),
            dense_values: None,
        }
    }

    pub fn into_tensor(self) -> Result<SymTensor> {
        if self.order < 1 {
            return Err(Error::InvalidInput(format!(
                "order: must be at least 1, got {}",
                self.order
            )));
        }
        if self.dim < 1 {
            return Err(Error::InvalidInput(format!(
                "dim: must be at least 1, got {}",
                self.dim
            )));
        }
        match (self.unique_entries, self.dense_values) {
            (Some(entries), None) => {
                check_finite("unique_entries", &entries)?;
                SymTensor::from_unique_entries(self.order, self.dim, &entries)
            }
            (None, Some(values)) => {
                check_finite("dense_values", &values)?;
                let expected = self.dim.pow(self.order as u32);
                if values.len() != expected {
                    return Err(Error::InvalidInput(format!(
                        "dense_values: expected {expected} values, got {}",
                        values.len()
                    )));
                }
                let dense = DenseTensor::new(vec![self.dim; self.order], values)?;
                SymTensor::from_dense(&dense, DENSE_SYMMETRY_TOLERANCE).map_err(|e| match e {
                    Error::NotSymmetric {
                        asymmetry,
                        tolerance,
                    } => Error::InvalidInput(format!(
                        "dense_values: not symmetric (asymmetry {asymmetry:e} > {tolerance:e})"
                    )),
                    other => other,
                })
            }
            (Some(_), Some(_)) => Err(Error::InvalidInput(
                "unique_entries/dense_values: exactly one must be present, found both".into(),
            )),
            (None, None) => Err(Error::InvalidInput(
                "unique_entries/dense_values: exactly one must be present, found neither".into(),
            )),
        }
    }
}

fn check_finite(field: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "{field}: entry {} is not finite",
            i + 1
        ))),
        None => Ok(()),
    }
}

pub fn parse_tensor_json(text: &str) -> Result<SymTensor> {
    let file: TensorFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("tensor JSON: {e}")))?;
    file.into_tensor()
}

pub fn read_tensor(path: &Path) -> Result<SymTensor> {
    let text = std::fs::read_to_string(path)?;
    parse_tensor_json(&text)
}

pub fn tensor_to_json(t: &SymTensor) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&TensorFile::from_tensor(t))?;
    s.push('\n');
    Ok(s)
}

pub fn write_tensor(path: &Path, t: &SymTensor) -> Result<()> {
    std::fs::write(path, tensor_to_json(t)?)?;
    Ok(())
}

/// Column names of the eigenpair table for dimension `n`.
pub fn eigen_table_header(n: usize) -> Vec<String> {
    let mut h = vec!["lambda".to_string()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    for c in [
        "stability",
        "residual",
        "iterations",
        "occurrences",
        "solver",
        "permutation",
        "slice",
    ] {
        h.push(c.to_string());
    }
    h
}

/// One table row per entry, ordered by decreasing eigenvalue. `iterations` is
/// the median over the runs merged into the entry.
fn eigen_rows(set: &EigenSet) -> Vec<Vec<(String, Value)>> {
    set.sorted_by_lambda_desc()
        .into_iter()
        .map(|e: &EigenEntry| {
            let p = &e.pair;
            let mut row = vec![("lambda".to_string(), Value::from(p.lambda))];
            row.extend(
                p.x.iter()
                    .enumerate()
                    .map(|(i, v)| (format!("x_{}", i + 1), Value::from(*v))),
            );
            row.push(("stability".into(), Value::from(p.stability.as_str())));
            row.push(("residual".into(), Value::from(p.residual)));
            row.push(("iterations".into(), Value::from(e.median_iterations())));
            row.push(("occurrences".into(), Value::from(e.occurrences)));
            row.push(("solver".into(), Value::from(p.provenance.solver.as_str())));
            row.push((
                "permutation".into(),
                p.provenance
                    .permutation
                    .as_ref()
                    .map_or(Value::Null, |(_, perm)| Value::from(perm.to_string())),
            ));
            row.push((
                "slice".into(),
                p.provenance
                    .slice
                    .map_or(Value::Null, |s| Value::from(s + 1)),
            ));
            row
        })
        .collect()
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f:?}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

pub fn eigen_table_csv(set: &EigenSet, n: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(eigen_table_header(n))?;
    for row in eigen_rows(set) {
        w.write_record(row.iter().map(|(_, v)| csv_cell(v)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn eigen_table_json(set: &EigenSet) -> Result<String> {
    let rows: Vec<Value> = eigen_rows(set)
        .into_iter()
        .map(|r| Value::Object(r.into_iter().collect::<Map<_, _>>()))
        .collect();
    let mut s = serde_json::to_string_pretty(&rows)?;
    s.push('\n');
    Ok(s)
}

/// Writes the table as JSON when `path` ends in `.json`, CSV otherwise.
pub fn write_eigen_table(path: &Path, set: &EigenSet, n: usize) -> Result<()> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let text = if is_json {
        eigen_table_json(set)?
    } else {
        eigen_table_csv(set, n)?
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// QRST trace: `slice,k,shift,epsilon,slice_lambda_min`. PQRST traces carry a
/// leading 1-based `permutation` column.
pub fn write_qrst_trace<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (Option<usize>, &'a TraceRow)>,
    with_permutation: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["slice", "k", "shift", "epsilon", "slice_lambda_min"];
    if with_permutation {
        header.insert(0, "permutation");
    }
    w.write_record(&header)?;
    for (perm, r) in rows {
        let mut rec = vec![
            r.slice.to_string(),
            r.k.to_string(),
            format!("{:?}", r.shift),
            format!("{:?}", r.epsilon),
            format!("{:?}", r.slice_lambda_min),
        ];
        if with_permutation {
            rec.insert(0, perm.map_or(String::new(), |p| (p + 1).to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Power-method trace: `run,k,alpha,lambda` (runs 1-based).
pub fn write_power_trace<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = &'a PowerTraceRow>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "k", "alpha", "lambda"])?;
    for r in rows {
        w.write_record([
            (r.run + 1).to_string(),
            r.k.to_string(),
            format!("{:?}", r.alpha),
            format!("{:?}", r.lambda),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{Eigenpair, Provenance, SolverId, SpectraTolerances, Stability};
    use nalgebra::DVector;

    #[test]
    fn tensor_json_round_trip() {
        let t = SymTensor::labeling(3, 3).unwrap();
        let text = tensor_to_json(&t).unwrap();
        assert_eq!(parse_tensor_json(&text).unwrap(), t);
    }

    #[test]
    fn dense_values_are_accepted() {
        let t = SymTensor::labeling(2, 2).unwrap();
        let text = r#"{"order": 2, "dim": 2, "dense_values": [1, 2, 2, 3]}"#;
        assert_eq!(parse_tensor_json(text).unwrap(), t);
    }

    #[test]
    fn malformed_files_name_the_field() {
        let cases = [
            (
                r#"{"order": 3, "dim": 3, "unique_entries": [1, 2]}"#,
                "unique_entries",
            ),
            (
                r#"{"order": 2, "dim": 2, "dense_values": [1, 2, 5, 3]}"#,
                "dense_values",
            ),
            (
                r#"{"order": 2, "dim": 2, "dense_values": [1, 2, 2]}"#,
                "dense_values",
            ),
            (r#"{"order": 2, "dim": 2}"#, "neither"),
            (
                r#"{"order": 2, "dim": 2, "unique_entries": [1,2,3], "dense_values": [1,2,2,3]}"#,
                "both",
            ),
            (r#"{"order": 0, "dim": 2, "unique_entries": []}"#, "order"),
            (r#"{"order": 2, "unique_entries": [1,2,3]}"#, "dim"),
        ];
        for (text, needle) in cases {
            let err = parse_tensor_json(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn eigen_table_layout() {
        let mut set = EigenSet::new(3, SpectraTolerances::default());
        set.insert(Eigenpair {
            lambda: 0.5,
            x: DVector::from_vec(vec![0.6, 0.8]),
            residual: 1e-15,
            stability: Stability::Unstable,
            provenance: Provenance {
                slice: Some(1),
                ..Provenance::new(SolverId::Qrst, 7)
            },
        });
        let csv = eigen_table_csv(&set, 2).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "lambda,x_1,x_2,stability,residual,iterations,occurrences,solver,permutation,slice"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0.5,0.6,0.8,unstable,1e-15,7.0,1,qrst,,2"
        );
        let json: Value = serde_json::from_str(&eigen_table_json(&set).unwrap()).unwrap();
        assert_eq!(json[0]["slice"], 2);
        assert_eq!(json[0]["x_2"], 0.8);
    }
}
