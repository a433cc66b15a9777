//! Feature schema, raw record model and CSV loading.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Binominal,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Input,
    Target,
}

/// One column of the clinical table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    pub unit: Option<String>,
    /// Canonical category labels; empty for numeric features.
    pub allowed_values: Vec<String>,
    pub role: Role,
    /// CSV header for this feature when it differs from `name`.
    pub column: Option<String>,
    /// Extra spellings accepted in the CSV, mapped to a canonical label.
    pub aliases: BTreeMap<String, String>,
    /// Labels that denote presence/occurrence; they binarize to True.
    pub presence: Vec<String>,
    /// Expand into one binary column per allowed value instead of one column.
    pub one_hot: bool,
}

/// Labels that mean "absent" when a feature declares no presence set.
const ABSENCE_LABELS: [&str; 2] = ["no", "normal"];

impl FeatureSchema {
    pub fn numeric(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            unit: None,
            allowed_values: Vec::new(),
            role: Role::Input,
            column: None,
            aliases: BTreeMap::new(),
            presence: Vec::new(),
            one_hot: false,
        }
    }

    /// A categorical feature whose presence set is the default one.
    pub fn categorical(name: &str, values: &[&str]) -> Self {
        let kind = if values.len() == 2 {
            FeatureKind::Binominal
        } else {
            FeatureKind::Polynomial
        };
        let allowed_values: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        Self {
            presence: default_presence(&allowed_values),
            name: name.to_string(),
            kind,
            unit: None,
            allowed_values,
            role: Role::Input,
            column: None,
            aliases: BTreeMap::new(),
            one_hot: false,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == FeatureKind::Numeric
    }

    pub fn header(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }

    /// Resolve a raw cell to its canonical label. Matching ignores case.
    pub fn canonical_label(&self, raw: &str) -> Option<&str> {
        let raw = raw.trim();
        if let Some(v) = self
            .allowed_values
            .iter()
            .find(|v| v.eq_ignore_ascii_case(raw))
        {
            return Some(v);
        }
        self.aliases
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(raw))
            .and_then(|(_, v)| self.allowed_values.iter().find(|a| a.eq_ignore_ascii_case(v)))
            .map(String::as_str)
    }

    pub fn is_presence(&self, label: &str) -> bool {
        self.presence.iter().any(|p| p.eq_ignore_ascii_case(label))
    }
}

pub(crate) fn default_presence(values: &[String]) -> Vec<String> {
    values
        .iter()
        .filter(|v| !ABSENCE_LABELS.iter().any(|a| v.eq_ignore_ascii_case(a)))
        .cloned()
        .collect()
}

/// Ordered feature list plus CSV columns that are read but discarded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub features: Vec<FeatureSchema>,
    pub ignore_columns: Vec<String>,
}

impl Schema {
    pub fn new(features: Vec<FeatureSchema>) -> Self {
        Self {
            features,
            ignore_columns: Vec::new(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSchema> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn target_index(&self) -> usize {
        self.features
            .iter()
            .position(|f| f.role == Role::Target)
            .expect("validated schema has a target")
    }

    pub fn target(&self) -> &FeatureSchema {
        &self.features[self.target_index()]
    }

    pub fn inputs(&self) -> impl Iterator<Item = (usize, &FeatureSchema)> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.role == Role::Input)
    }

    /// Checks the schema invariants, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        validate_schema(&self.features)?;
        let mut headers = HashSet::new();
        for f in &self.features {
            if !headers.insert(f.header()) {
                return Err(Error::Schema(format!("duplicate column {:?}", f.header())));
            }
        }
        for c in &self.ignore_columns {
            if headers.contains(c.as_str()) {
                return Err(Error::Schema(format!(
                    "column {c:?} is both a feature and ignored"
                )));
            }
        }
        Ok(())
    }
}

pub fn validate_schema(features: &[FeatureSchema]) -> Result<()> {
    let mut names = HashSet::new();
    let mut headers = HashSet::new();
    let mut targets = 0;
    for f in features {
        if f.name.is_empty() {
            return Err(Error::Schema("empty feature name".into()));
        }
        if !names.insert(f.name.as_str()) {
            return Err(Error::Schema(format!("duplicate feature {:?}", f.name)));
        }
        if !headers.insert(f.header().to_ascii_lowercase()) {
            return Err(Error::Schema(format!("duplicate column header {:?}", f.header())));
        }
        if f.role == Role::Target {
            targets += 1;
        }
        match f.kind {
            FeatureKind::Numeric => {
                if !f.allowed_values.is_empty() {
                    return Err(Error::Schema(format!(
                        "numeric feature {:?} declares allowed values",
                        f.name
                    )));
                }
            }
            FeatureKind::Binominal if f.allowed_values.len() != 2 => {
                return Err(Error::Schema(format!(
                    "binominal feature {:?} needs exactly 2 values, has {}",
                    f.name,
                    f.allowed_values.len()
                )));
            }
            FeatureKind::Polynomial if f.allowed_values.len() < 3 => {
                return Err(Error::Schema(format!(
                    "polynomial feature {:?} needs at least 3 values, has {}",
                    f.name,
                    f.allowed_values.len()
                )));
            }
            _ => {}
        }
        if !f.is_numeric() {
            let mut seen = HashSet::new();
            for v in &f.allowed_values {
                if !seen.insert(v.to_ascii_lowercase()) {
                    return Err(Error::Schema(format!(
                        "feature {:?} repeats value {v:?}",
                        f.name
                    )));
                }
            }
            for (alias, target) in &f.aliases {
                if !f.allowed_values.iter().any(|v| v.eq_ignore_ascii_case(target)) {
                    return Err(Error::Schema(format!(
                        "feature {:?}: alias {alias:?} maps to unknown value {target:?}",
                        f.name
                    )));
                }
            }
            for p in &f.presence {
                if !f.allowed_values.iter().any(|v| v.eq_ignore_ascii_case(p)) {
                    return Err(Error::Schema(format!(
                        "feature {:?}: presence value {p:?} is not an allowed value",
                        f.name
                    )));
                }
            }
            if f.role == Role::Target && f.presence.is_empty() {
                return Err(Error::Schema(format!(
                    "target {:?} has no presence value",
                    f.name
                )));
            }
        }
    }
    match targets {
        0 => Err(Error::Schema("no target feature".into())),
        1 => Ok(()),
        _ => Err(Error::Schema("multiple targets".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Label(String),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Number(_) => None,
        }
    }
}

/// One patient; `values[i]` belongs to `schema.features[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub schema: Schema,
    pub records: Vec<RawRecord>,
}

impl RawDataset {
    pub fn value<'a>(&'a self, record: &'a RawRecord, feature: &str) -> Option<&'a Value> {
        self.schema.index_of(feature).map(|i| &record.values[i])
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, schema)
}

/// Parse a CSV with a header row. Columns are matched to the schema by
/// header name (case-sensitive) in any order. Row numbers in errors are
/// 1-based over data rows.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<RawDataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    // headers match case-insensitively
    let by_header: HashMap<String, usize> = schema
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.header().to_ascii_lowercase(), i))
        .collect();
    // column position -> feature index
    let mut mapping: Vec<Option<usize>> = Vec::with_capacity(headers.len());
    let mut seen = vec![false; schema.features.len()];
    let mut seen_headers = HashSet::new();
    for h in headers.iter() {
        let key = h.to_ascii_lowercase();
        if !seen_headers.insert(key.clone()) {
            return Err(Error::Data(format!("duplicate column {h:?} in header")));
        }
        match by_header.get(&key) {
            Some(&fi) => {
                seen[fi] = true;
                mapping.push(Some(fi));
            }
            None if schema.ignore_columns.iter().any(|c| c.eq_ignore_ascii_case(h)) => mapping.push(None),
            None => return Err(Error::Data(format!("unexpected column {h:?}"))),
        }
    }
    if let Some(fi) = seen.iter().position(|s| !s) {
        return Err(Error::Data(format!(
            "missing column {:?}",
            schema.features[fi].header()
        )));
    }

    let mut records = Vec::new();
    for (ri, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = ri + 1;
        let mut values: Vec<Option<Value>> = vec![None; schema.features.len()];
        for (cell, fi) in row.iter().zip(&mapping) {
            let Some(fi) = *fi else { continue };
            let feature = &schema.features[fi];
            values[fi] = Some(parse_cell(feature, cell).map_err(|message| Error::Cell {
                row: row_no,
                column: feature.header().to_string(),
                message,
            })?);
        }
        records.push(RawRecord {
            values: values.into_iter().map(|v| v.expect("all columns mapped")).collect(),
        });
    }
    if records.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    Ok(RawDataset {
        schema: schema.clone(),
        records,
    })
}

fn parse_cell(feature: &FeatureSchema, cell: &str) -> std::result::Result<Value, String> {
    if cell.is_empty() {
        return Err("missing value".into());
    }
    if feature.is_numeric() {
        let x: f64 = cell
            .parse()
            .map_err(|_| format!("cannot parse {cell:?} as a number"))?;
        if !x.is_finite() {
            return Err(format!("non-finite value {cell:?}"));
        }
        Ok(Value::Number(x))
    } else {
        feature
            .canonical_label(cell)
            .map(|l| Value::Label(l.to_string()))
            .ok_or_else(|| {
                format!(
                    "value {cell:?} not in allowed values {:?}",
                    feature.allowed_values
                )
            })
    }
}

/// Write records as CSV with schema headers in schema order. Numbers use
/// the shortest representation that parses back to the same `f64`.
pub fn write_dataset<W: Write>(writer: W, data: &RawDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(data.schema.features.iter().map(|f| f.header()))?;
    for r in &data.records {
        w.write_record(r.values.iter().map(|v| match v {
            Value::Number(x) => x.to_string(),
            Value::Label(s) => s.clone(),
        }))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
