//! CSV ingestion driven by a small column-role schema.
//!
//! Schema files are plain text, one `column = role` entry per line, where the
//! role is one of `marker`, `group`, `location` or `label`. Blank lines and
//! lines starting with `#` are ignored. Columns that the schema does not
//! mention are treated as markers; exactly one column must be the label.

use super::{Dataset, FeatureRole};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Feature(FeatureRole),
    Label,
}

impl std::str::FromStr for ColumnRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "marker" => Ok(ColumnRole::Feature(FeatureRole::Marker)),
            "group" => Ok(ColumnRole::Feature(FeatureRole::Group)),
            "location" => Ok(ColumnRole::Feature(FeatureRole::Location)),
            "label" => Ok(ColumnRole::Label),
            other => Err(Error::Schema(format!("unknown column role `{other}`"))),
        }
    }
}

/// Column name to role declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    roles: BTreeMap<String, ColumnRole>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: impl Into<String>, role: ColumnRole) -> Self {
        self.roles.insert(column.into(), role);
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut roles = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, role) = line.rsplit_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `column = role`", lineno + 1))
            })?;
            let name = name.trim().trim_matches('"').to_string();
            if name.is_empty() {
                return Err(Error::Schema(format!("line {}: empty column name", lineno + 1)));
            }
            if roles.insert(name.clone(), role.parse()?).is_some() {
                return Err(Error::Schema(format!("column `{name}` declared twice")));
            }
        }
        Ok(Self { roles })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn role(&self, column: &str) -> ColumnRole {
        self.roles
            .get(column)
            .copied()
            .unwrap_or(ColumnRole::Feature(FeatureRole::Marker))
    }

    /// Renders the schema back to its text form.
    pub fn to_text(&self) -> String {
        self.roles
            .iter()
            .map(|(name, role)| {
                let role = match role {
                    ColumnRole::Feature(r) => r.to_string(),
                    ColumnRole::Label => "label".to_string(),
                };
                format!("{name} = {role}\n")
            })
            .collect()
    }
}

/// Reads a CSV file (header row, comma separated) into an unscaled [`Dataset`].
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    parse_csv(reader, schema)
}

/// Same as [`load_csv`] for an already opened reader.
pub fn parse_csv<R: std::io::Read>(mut reader: csv::Reader<R>, schema: &Schema) -> Result<Dataset> {
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate column name `{h}`")));
        }
    }
    for declared in schema.roles.keys() {
        if !seen.contains(declared.as_str()) {
            return Err(Error::Schema(format!(
                "schema declares `{declared}` but the file has no such column"
            )));
        }
    }
    let label_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| schema.role(h) == ColumnRole::Label)
        .map(|(i, _)| i)
        .collect();
    let label_col = match label_cols.as_slice() {
        [one] => *one,
        [] => return Err(Error::Schema("no column declared as label".into())),
        _ => return Err(Error::Schema("more than one column declared as label".into())),
    };

    let mut names = Vec::new();
    let mut roles = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let ColumnRole::Feature(r) = schema.role(h) {
            debug_assert_ne!(i, label_col);
            names.push(h.clone());
            roles.push(r);
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        // Row numbers in messages are 1-based data rows (header excluded).
        let row = row + 1;
        if record.len() != headers.len() {
            return Err(Error::Ingest {
                row,
                column: String::new(),
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        for (i, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Ingest {
                row,
                column: headers[i].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingest {
                    row,
                    column: headers[i].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            if i == label_col {
                labels.push(v);
            } else {
                values.push(v);
            }
        }
    }

    let m = labels.len();
    let features = Array2::from_shape_vec((m, names.len()), values)
        .map_err(|e| Error::Validation(e.to_string()))?;
    Dataset::new(features, names, roles, Array1::from(labels), false)
}

/// Writes `dataset` as CSV (features in order, then the label under
/// `label_column`) and returns the schema that reads it back.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, writer: W, label_column: &str) -> Result<Schema> {
    if dataset.feature_names().iter().any(|n| n == label_column) {
        return Err(Error::Schema(format!("label column `{label_column}` clashes with a feature name")));
    }
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(dataset.feature_names().iter().map(String::as_str).chain([label_column]))?;
    for (row, label) in dataset.features().rows().into_iter().zip(dataset.labels()) {
        out.write_record(row.iter().chain([label]).map(|v| v.to_string()))?;
    }
    out.flush()?;
    let schema = dataset
        .feature_names()
        .iter()
        .zip(dataset.feature_roles())
        .filter(|(_, role)| **role != FeatureRole::Marker)
        .fold(Schema::new(), |s, (name, role)| s.with(name.clone(), ColumnRole::Feature(*role)));
    Ok(schema.with(label_column, ColumnRole::Label))
}
