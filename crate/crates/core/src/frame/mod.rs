//! Columnar episode tables.
//!
//! A [`Frame`] stores one treatment-episode register: a [`Schema`] plus one
//! column of data per schema entry. Categorical columns are
//! dictionary-encoded; numeric and categorical cells may be missing. Label,
//! timestamp, and id columns are always fully populated.
//!
//! Submodules cover CSV and schema-manifest I/O ([`csv_io`]), register
//! joining ([`merge`]), missing-value handling ([`impute`]), cohort
//! summaries ([`summary`]), and a synthetic register generator with known
//! ground truth ([`synth`]).

mod csv_io;
mod impute;
mod merge;
mod summary;
mod synth;

pub use csv_io::{parse_schema_manifest, read_csv, render_schema_manifest, write_csv};
pub use impute::{impute, Imputer, MISSING_TOKEN};
pub use merge::merge_registers;
pub use summary::{summarize, CohortCount, SummaryStats};
pub use synth::{
    generate, GeneratorConfig, GroundTruth, AGE_COL, CONSTANT_COL, DISTRICT_COL, DOMINANT_COL,
};

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a column within a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Opaque row identifier; never used as a feature.
    Id,
    /// Month index (0-based from the epoch month of the register).
    Timestamp,
    /// Binary outcome, stored as 0/1.
    Label,
    /// Dictionary-encoded string feature.
    Categorical,
    /// Floating-point feature.
    Numeric,
}

impl ColumnKind {
    /// Whether columns of this kind participate in modeling.
    pub fn is_feature(self) -> bool {
        matches!(self, ColumnKind::Categorical | ColumnKind::Numeric)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Id => "id",
            ColumnKind::Timestamp => "timestamp",
            ColumnKind::Label => "label",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numeric => "numeric",
        }
    }
}

/// Name, kind, and missingness policy for one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Whether cells of this column may be missing. Forced to `false` for
    /// id, timestamp, and label columns.
    pub allow_missing: bool,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec {
            name: name.into(),
            allow_missing: kind.is_feature(),
            kind,
        }
    }

    pub fn required(mut self) -> Self {
        self.allow_missing = false;
        self
    }
}

/// Ordered column specification for a register.
///
/// At most one label and at most one timestamp column are permitted; pure
/// feature registers (for example secondary registers joined onto a
/// notification spine) carry neither. Operations that need the label or the
/// timestamp fail with a data error when the column is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    /// Token in raw label cells that maps to outcome 1. Tokens `"0"` and
    /// `"1"` always map to 0 and 1 respectively.
    positive_token: String,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, positive_token: impl Into<String>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::config("schema has no columns"));
        }
        let mut seen = HashMap::new();
        let mut labels = 0usize;
        let mut timestamps = 0usize;
        for (i, spec) in columns.iter().enumerate() {
            if spec.name.trim().is_empty() {
                return Err(Error::config(format!("column {i} has an empty name")));
            }
            if seen.insert(spec.name.clone(), i).is_some() {
                return Err(Error::config(format!("duplicate column name `{}`", spec.name)));
            }
            match spec.kind {
                ColumnKind::Label => labels += 1,
                ColumnKind::Timestamp => timestamps += 1,
                _ => {}
            }
        }
        if labels > 1 {
            return Err(Error::config("schema declares more than one label column"));
        }
        if timestamps > 1 {
            return Err(Error::config("schema declares more than one timestamp column"));
        }
        let columns = columns
            .into_iter()
            .map(|mut spec| {
                if !spec.kind.is_feature() {
                    spec.allow_missing = false;
                }
                spec
            })
            .collect();
        Ok(Schema { columns, positive_token: positive_token.into() })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn positive_token(&self) -> &str {
        &self.positive_token
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn label_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::Label)
    }

    pub fn timestamp_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::Timestamp)
    }

    /// Indices and specs of modeling (categorical/numeric) columns.
    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &ColumnSpec)> {
        self.columns.iter().enumerate().filter(|(_, c)| c.kind.is_feature())
    }
}

/// Dictionary-encoded categorical column.
///
/// `codes[row]` indexes into `categories`; `None` marks a missing cell.
/// Category order is first appearance, which keeps construction
/// deterministic.
#[derive(Debug, Clone, Default)]
pub struct CategoricalColumn {
    codes: Vec<Option<u32>>,
    categories: Vec<String>,
    index: HashMap<String, u32>,
}

impl CategoricalColumn {
    pub fn from_tokens<'a, I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = Option<&'a str>>,
    {
        let mut col = CategoricalColumn::default();
        for tok in tokens {
            let code = tok.map(|t| col.intern(t));
            col.codes.push(code);
        }
        col
    }

    /// Interns `token` and returns its code without appending a cell.
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&code) = self.index.get(token) {
            return code;
        }
        let code = u32::try_from(self.categories.len()).expect("category space exhausted");
        self.categories.push(token.to_string());
        self.index.insert(token.to_string(), code);
        code
    }

    pub fn push(&mut self, token: Option<&str>) {
        let code = token.map(|t| self.intern(t));
        self.codes.push(code);
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[Option<u32>] {
        &self.codes
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn code_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, row: usize) -> Option<&str> {
        self.codes[row].map(|c| self.categories[c as usize].as_str())
    }

    fn gather(&self, rows: &[usize]) -> Self {
        // Re-intern so the gathered dictionary only holds observed
        // categories in first-appearance order.
        CategoricalColumn::from_tokens(rows.iter().map(|&r| self.token(r)))
    }
}

/// One column of register data.
#[derive(Debug, Clone)]
pub enum ColumnData {
    Id(Vec<String>),
    Timestamp(Vec<i64>),
    Label(Vec<u8>),
    Categorical(CategoricalColumn),
    Numeric(Vec<Option<f64>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Id(v) => v.len(),
            ColumnData::Timestamp(v) => v.len(),
            ColumnData::Label(v) => v.len(),
            ColumnData::Categorical(c) => c.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Id(_) => ColumnKind::Id,
            ColumnData::Timestamp(_) => ColumnKind::Timestamp,
            ColumnData::Label(_) => ColumnKind::Label,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
            ColumnData::Numeric(_) => ColumnKind::Numeric,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Categorical(c) => c.codes()[row].is_none(),
            ColumnData::Numeric(v) => v[row].is_none(),
            _ => false,
        }
    }

    pub fn as_categorical(&self) -> Option<&CategoricalColumn> {
        match self {
            ColumnData::Categorical(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match self {
            ColumnData::Numeric(v) => Some(v),
            _ => None,
        }
    }

    /// Textual form of a cell; missing cells render as the empty string.
    pub fn cell_to_string(&self, row: usize) -> String {
        match self {
            ColumnData::Id(v) => v[row].clone(),
            ColumnData::Timestamp(v) => v[row].to_string(),
            ColumnData::Label(v) => v[row].to_string(),
            ColumnData::Categorical(c) => c.token(row).unwrap_or("").to_string(),
            ColumnData::Numeric(v) => match v[row] {
                Some(x) => format_numeric(x),
                None => String::new(),
            },
        }
    }

    fn gather(&self, rows: &[usize]) -> Self {
        match self {
            ColumnData::Id(v) => ColumnData::Id(rows.iter().map(|&r| v[r].clone()).collect()),
            ColumnData::Timestamp(v) => {
                ColumnData::Timestamp(rows.iter().map(|&r| v[r]).collect())
            }
            ColumnData::Label(v) => ColumnData::Label(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(c) => ColumnData::Categorical(c.gather(rows)),
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

/// Render a numeric cell without trailing noise (integers print bare).
fn format_numeric(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// A schema plus columnar data; the in-memory form of one register.
///
/// Columns are reference-counted so row-preserving column swaps (for
/// example permutation importance) are cheap.
#[derive(Debug, Clone)]
pub struct Frame {
    schema: Schema,
    columns: Vec<Arc<ColumnData>>,
    rows: usize,
}

impl Frame {
    pub fn new(schema: Schema, columns: Vec<ColumnData>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::internal(format!(
                "schema has {} columns but {} were provided",
                schema.len(),
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, ColumnData::len);
        for (spec, col) in schema.columns().iter().zip(&columns) {
            if col.kind() != spec.kind {
                return Err(Error::internal(format!(
                    "column `{}` declared {} but holds {}",
                    spec.name,
                    spec.kind.as_str(),
                    col.kind().as_str()
                )));
            }
            if col.len() != rows {
                return Err(Error::internal(format!(
                    "column `{}` has {} rows, expected {rows}",
                    spec.name,
                    col.len()
                )));
            }
            if !spec.allow_missing && col.kind().is_feature() {
                if let Some(row) = (0..rows).find(|&r| col.is_missing(r)) {
                    return Err(Error::data(format!(
                        "column `{}` forbids missing values but row {row} is missing",
                        spec.name
                    )));
                }
            }
        }
        Ok(Frame { schema, columns: columns.into_iter().map(Arc::new).collect(), rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, idx: usize) -> &ColumnData {
        &self.columns[idx]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&ColumnData> {
        let idx = self
            .schema
            .column_index(name)
            .ok_or_else(|| Error::config(format!("unknown column `{name}`")))?;
        Ok(self.column(idx))
    }

    /// 0/1 outcome labels; errors when the register has no label column.
    pub fn labels(&self) -> Result<&[u8]> {
        let idx = self
            .schema
            .label_index()
            .ok_or_else(|| Error::data("register has no label column"))?;
        match self.column(idx) {
            ColumnData::Label(v) => Ok(v),
            _ => Err(Error::internal("label column holds non-label data")),
        }
    }

    /// Month indices; errors when the register has no timestamp column.
    pub fn months(&self) -> Result<&[i64]> {
        let idx = self
            .schema
            .timestamp_index()
            .ok_or_else(|| Error::data("register has no timestamp column"))?;
        match self.column(idx) {
            ColumnData::Timestamp(v) => Ok(v),
            _ => Err(Error::internal("timestamp column holds non-timestamp data")),
        }
    }

    /// New frame holding `rows` in order; indices may repeat.
    pub fn take_rows(&self, rows: &[usize]) -> Frame {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            panic!("take_rows index {bad} out of bounds for {} rows", self.rows);
        }
        Frame {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| Arc::new(c.gather(rows))).collect(),
            rows: rows.len(),
        }
    }

    /// Same frame with one column's data replaced (row count must match).
    pub fn with_column_replaced(&self, idx: usize, data: ColumnData) -> Result<Frame> {
        let spec = &self.schema.columns()[idx];
        if data.kind() != spec.kind {
            return Err(Error::internal(format!(
                "replacement for `{}` has kind {}, expected {}",
                spec.name,
                data.kind().as_str(),
                spec.kind.as_str()
            )));
        }
        if data.len() != self.rows {
            return Err(Error::internal(format!(
                "replacement for `{}` has {} rows, expected {}",
                spec.name,
                data.len(),
                self.rows
            )));
        }
        let mut columns = self.columns.clone();
        columns[idx] = Arc::new(data);
        Ok(Frame { schema: self.schema.clone(), columns, rows: self.rows })
    }

    /// Count of positive labels.
    pub fn positives(&self) -> Result<usize> {
        Ok(self.labels()?.iter().map(|&y| usize::from(y)).sum())
    }

    /// Per-row cohort ids from a categorical or timestamp column; missing
    /// cells group under [`MISSING_TOKEN`] so no row is dropped.
    pub fn cohort_tokens(&self, column: &str) -> Result<Vec<String>> {
        let idx = self
            .schema
            .column_index(column)
            .ok_or_else(|| Error::config(format!("unknown cohort column `{column}`")))?;
        let kind = self.schema.columns()[idx].kind;
        if !matches!(kind, ColumnKind::Categorical | ColumnKind::Timestamp) {
            return Err(Error::config(format!(
                "cohort column `{column}` is {}; expected categorical or timestamp",
                kind.as_str()
            )));
        }
        let data = self.column(idx);
        Ok((0..self.rows)
            .map(|row| {
                if data.is_missing(row) {
                    MISSING_TOKEN.to_string()
                } else {
                    data.cell_to_string(row)
                }
            })
            .collect())
    }
}
