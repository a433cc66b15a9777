//! Discretized records to an all-binary transaction matrix.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::bits::BitVec;
use crate::dataset::{FeatureKind, FeatureSchema, Role, Schema};
use crate::error::{Error, Result};
use crate::profiling::{DiscreteValue, DiscretizedRecord, Level};

/// Column-major boolean matrix: one bit vector per feature plus the target.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix {
    pub feature_names: Vec<String>,
    pub columns: Vec<BitVec>,
    pub target_name: String,
    pub target: BitVec,
    pub n_records: usize,
}

impl BinaryMatrix {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<BitVec>,
        target_name: String,
        target: BitVec,
    ) -> Result<Self> {
        let n_records = target.len();
        if feature_names.len() != columns.len() {
            return Err(Error::Data("feature name/column count mismatch".into()));
        }
        if let Some(c) = columns.iter().position(|c| c.len() != n_records) {
            return Err(Error::Data(format!(
                "column {:?} has {} rows, target has {n_records}",
                feature_names[c],
                columns[c].len()
            )));
        }
        let mut seen = HashSet::new();
        for n in feature_names.iter().chain(std::iter::once(&target_name)) {
            if !seen.insert(n.as_str()) {
                return Err(Error::Data(format!("duplicate column name {n:?}")));
            }
        }
        Ok(Self {
            feature_names,
            columns,
            target_name,
            target,
            n_records,
        })
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Row-major view: `rows[r]` has one bit per feature column.
    pub fn rows(&self) -> Vec<BitVec> {
        let mut rows = vec![BitVec::zeros(self.n_features()); self.n_records];
        for (c, col) in self.columns.iter().enumerate() {
            for r in col.ones_indices() {
                rows[r].set(c, true);
            }
        }
        rows
    }

    /// Keep the listed feature columns, in that order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: indices.iter().map(|&i| self.feature_names[i].clone()).collect(),
            columns: indices.iter().map(|&i| self.columns[i].clone()).collect(),
            target_name: self.target_name.clone(),
            target: self.target.clone(),
            n_records: self.n_records,
        }
    }

    /// Keep the listed rows, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            target_name: self.target_name.clone(),
            target: self.target.select(rows),
            n_records: rows.len(),
        }
    }

    /// CSV of 0/1 cells; the last column is the target.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.feature_names.iter().chain(std::iter::once(&self.target_name)))?;
        let mut row: Vec<&str> = Vec::with_capacity(self.n_features() + 1);
        for r in 0..self.n_records {
            row.clear();
            row.extend(self.columns.iter().map(|c| bit_str(c.get(r))));
            row.push(bit_str(self.target.get(r)));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let Some((target_name, feature_names)) = headers.split_last() else {
            return Err(Error::Data("binary matrix has no columns".into()));
        };
        let mut columns = vec![BitVec::zeros(0); feature_names.len()];
        let mut target = BitVec::zeros(0);
        for (ri, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (ci, cell) in rec.iter().enumerate() {
                let bit = match cell {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::Cell {
                            row: ri + 1,
                            column: headers[ci].clone(),
                            message: format!("expected 0 or 1, found {other:?}"),
                        })
                    }
                };
                if ci < feature_names.len() {
                    columns[ci].push(bit);
                } else {
                    target.push(bit);
                }
            }
        }
        if target.is_empty() {
            return Err(Error::Data("empty dataset".into()));
        }
        Self::new(feature_names.to_vec(), columns, target_name.clone(), target)
    }
}

fn bit_str(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn check_value<'a>(feature: &'a FeatureSchema, value: &str) -> Result<&'a str> {
    feature.canonical_label(value).ok_or_else(|| {
        Error::Data(format!(
            "value {value:?} not allowed for {:?}",
            feature.name
        ))
    })
}

/// Presence value -> True, the alternative -> False.
pub fn binarize_binominal(feature: &FeatureSchema, value: &str) -> Result<bool> {
    if feature.kind != FeatureKind::Binominal {
        return Err(Error::Data(format!("{:?} is not binominal", feature.name)));
    }
    let label = check_value(feature, value)?;
    Ok(feature.is_presence(label))
}

/// Absence/Normal value -> False, every other value -> True.
pub fn binarize_polynomial(feature: &FeatureSchema, value: &str) -> Result<bool> {
    if feature.kind != FeatureKind::Polynomial {
        return Err(Error::Data(format!("{:?} is not polynomial", feature.name)));
    }
    let label = check_value(feature, value)?;
    Ok(feature.is_presence(label))
}

/// A discretized numeric level is abnormal (True) unless it is Normal.
pub fn binarize_level(level: Level) -> bool {
    level != Level::Normal
}

/// (male, female) bits for a gender label.
pub fn expand_gender(gender: &str) -> Result<(bool, bool)> {
    match gender.trim().to_ascii_lowercase().as_str() {
        "male" | "m" => Ok((true, false)),
        "female" | "f" | "fmale" => Ok((false, true)),
        _ => Err(Error::Data(format!("unknown gender {gender:?}"))),
    }
}

/// Names of the binary columns a schema produces, in column order.
pub fn binary_column_names(schema: &Schema) -> Vec<String> {
    let mut names = Vec::new();
    for (_, f) in schema.inputs() {
        if f.is_numeric() {
            names.push(discretized_name(&f.name));
        } else if f.one_hot {
            names.extend(f.allowed_values.iter().cloned());
        } else {
            names.push(f.name.clone());
        }
    }
    names
}

/// Column name of a discretized numeric feature.
pub fn discretized_name(feature: &str) -> String {
    format!("{feature}2")
}

pub fn binarize_dataset(records: &[DiscretizedRecord], schema: &Schema) -> Result<BinaryMatrix> {
    if records.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let names = binary_column_names(schema);
    let n = records.len();
    let mut columns = vec![BitVec::zeros(n); names.len()];
    let mut target = BitVec::zeros(n);
    let target_idx = schema.target_index();

    for (r, rec) in records.iter().enumerate() {
        if rec.values.len() != schema.features.len() {
            return Err(Error::Data(format!("record {} has the wrong arity", r + 1)));
        }
        let mut col = 0;
        for (fi, (f, v)) in schema.features.iter().zip(&rec.values).enumerate() {
            if fi == target_idx {
                let DiscreteValue::Label(l) = v else {
                    return Err(Error::Data("target must be categorical".into()));
                };
                target.set(r, f.is_presence(check_value(f, l)?));
                continue;
            }
            if f.role != Role::Input {
                continue;
            }
            match v {
                DiscreteValue::Level(level) if f.is_numeric() => {
                    columns[col].set(r, binarize_level(*level));
                    col += 1;
                }
                DiscreteValue::Label(l) if !f.is_numeric() => {
                    let label = check_value(f, l)?;
                    if f.one_hot {
                        for v in &f.allowed_values {
                            columns[col].set(r, v == label);
                            col += 1;
                        }
                    } else {
                        let bit = match f.kind {
                            FeatureKind::Binominal => binarize_binominal(f, label)?,
                            _ => binarize_polynomial(f, label)?,
                        };
                        columns[col].set(r, bit);
                        col += 1;
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "record {}: value kind does not match feature {:?}",
                        r + 1,
                        f.name
                    )))
                }
            }
        }
    }
    BinaryMatrix::new(names, columns, schema.target().name.clone(), target)
}

/// CSV of a discretized dataset: a `profile` column followed by one column
/// per schema feature (numerics renamed with the `2` suffix).
pub fn write_discretized_csv<W: Write>(
    writer: W,
    records: &[DiscretizedRecord],
    schema: &Schema,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("profile".to_string()).chain(discretized_headers(schema)))?;
    for rec in records {
        w.write_record(std::iter::once(rec.profile.0.as_str()).chain(rec.values.iter().map(
            |v| match v {
                DiscreteValue::Level(l) => l.as_str(),
                DiscreteValue::Label(s) => s.as_str(),
            },
        )))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn discretized_headers(schema: &Schema) -> impl Iterator<Item = String> + '_ {
    schema.features.iter().map(|f| {
        if f.is_numeric() {
            discretized_name(&f.name)
        } else {
            f.name.clone()
        }
    })
}

pub fn read_discretized_csv<R: Read>(reader: R, schema: &Schema) -> Result<Vec<DiscretizedRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = std::iter::once("profile".to_string())
        .chain(discretized_headers(schema))
        .collect();
    if headers != expected {
        return Err(Error::Data(format!(
            "discretized header does not match the schema; expected {expected:?}"
        )));
    }
    let mut out = Vec::new();
    for (ri, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut cells = rec.iter();
        let profile = cells.next().unwrap_or_default().to_string();
        if profile.is_empty() {
            return Err(Error::Cell {
                row: ri + 1,
                column: "profile".into(),
                message: "missing profile".into(),
            });
        }
        let values = schema
            .features
            .iter()
            .zip(cells)
            .map(|(f, cell)| {
                let bad = |message: String| Error::Cell {
                    row: ri + 1,
                    column: f.name.clone(),
                    message,
                };
                if f.is_numeric() {
                    Level::parse(cell)
                        .map(DiscreteValue::Level)
                        .ok_or_else(|| bad(format!("expected Low/Normal/High, found {cell:?}")))
                } else {
                    f.canonical_label(cell)
                        .map(|l| DiscreteValue::Label(l.to_string()))
                        .ok_or_else(|| bad(format!("value {cell:?} not allowed")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(DiscretizedRecord {
            profile: profile.as_str().into(),
            values,
        });
    }
    if out.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    Ok(out)
}
