//! CSV and schema-manifest I/O for registers.
//!
//! Registers travel as header-ful CSV files accompanied by a plain-text
//! schema manifest that maps each column name to its kind:
//!
//! ```text
//! # notification register
//! positive_token = yes
//! EpisodeID = id
//! TreatmentMonth = timestamp
//! State = categorical
//! Age = numeric required
//! LFU = label
//! ```
//!
//! Missing cells are empty strings. Lines starting with `#` are comments in
//! both formats, so CSV artifacts may carry a provenance comment line.

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ColumnData, ColumnKind, ColumnSpec, Frame, Schema};

/// Parse a schema manifest (see module docs for the format).
pub fn parse_schema_manifest(text: &str) -> Result<Schema> {
    let mut positive_token: Option<String> = None;
    let mut columns = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("schema line {}: expected `name = kind`", lineno + 1)))?;
        let name = name.trim();
        let value = value.trim();
        if name == "positive_token" {
            if positive_token.replace(value.to_string()).is_some() {
                return Err(Error::config("schema declares positive_token twice"));
            }
            continue;
        }
        let mut parts = value.split_whitespace();
        let kind_token = parts
            .next()
            .ok_or_else(|| Error::config(format!("schema line {}: missing kind", lineno + 1)))?;
        let kind = match kind_token {
            "id" => ColumnKind::Id,
            "timestamp" => ColumnKind::Timestamp,
            "label" => ColumnKind::Label,
            "categorical" => ColumnKind::Categorical,
            "numeric" => ColumnKind::Numeric,
            other => {
                return Err(Error::config(format!(
                    "schema line {}: unknown kind `{other}`",
                    lineno + 1
                )))
            }
        };
        let mut spec = ColumnSpec::new(name, kind);
        match parts.next() {
            None => {}
            Some("required") => spec = spec.required(),
            Some(other) => {
                return Err(Error::config(format!(
                    "schema line {}: unknown modifier `{other}`",
                    lineno + 1
                )))
            }
        }
        columns.push(spec);
    }
    let positive_token =
        positive_token.ok_or_else(|| Error::config("schema manifest lacks positive_token"))?;
    Schema::new(columns, positive_token)
}

/// Render a schema back into manifest form (round-trips with
/// [`parse_schema_manifest`]).
pub fn render_schema_manifest(schema: &Schema) -> String {
    let mut out = String::new();
    out.push_str(&format!("positive_token = {}\n", schema.positive_token()));
    for spec in schema.columns() {
        out.push_str(&format!("{} = {}", spec.name, spec.kind.as_str()));
        if spec.kind.is_feature() && !spec.allow_missing {
            out.push_str(" required");
        }
        out.push('\n');
    }
    out
}

/// Read a register CSV against a known schema.
///
/// The header must contain exactly the schema's columns (any order). Empty
/// cells are missing; missing cells in required columns are data errors.
pub fn read_csv(path: &Path, schema: &Schema) -> Result<Frame> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)?;
    let headers = reader.headers()?.clone();

    // Map schema position -> CSV position.
    let mut csv_pos = Vec::with_capacity(schema.len());
    for spec in schema.columns() {
        let pos = headers
            .iter()
            .position(|h| h == spec.name)
            .ok_or_else(|| Error::data(format!("csv lacks column `{}`", spec.name)))?;
        csv_pos.push(pos);
    }
    if headers.len() != schema.len() {
        let extras: Vec<&str> = headers
            .iter()
            .filter(|h| schema.column_index(h).is_none())
            .collect();
        return Err(Error::data(format!(
            "csv has {} columns not in the schema: {}",
            extras.len(),
            extras.join(", ")
        )));
    }

    let mut builders: Vec<ColumnBuilder> =
        schema.columns().iter().map(|s| ColumnBuilder::new(s.kind)).collect();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        for (schema_idx, spec) in schema.columns().iter().enumerate() {
            let cell = record.get(csv_pos[schema_idx]).unwrap_or("");
            builders[schema_idx]
                .push(cell, spec, schema.positive_token())
                .map_err(|e| {
                    Error::data(format!("row {}, column `{}`: {e}", row_idx + 2, spec.name))
                })?;
        }
    }
    let columns = builders.into_iter().map(ColumnBuilder::finish).collect();
    Frame::new(schema.clone(), columns)
}

/// Write a register CSV. `comment` (if given) is emitted verbatim as a
/// leading `# `-prefixed line, which [`read_csv`] skips.
pub fn write_csv(frame: &Frame, path: &Path, comment: Option<&str>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    if let Some(c) = comment {
        writeln!(file, "# {c}")?;
    }
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(frame.schema().columns().iter().map(|c| c.name.as_str()))?;
    for row in 0..frame.n_rows() {
        let record: Vec<String> =
            (0..frame.schema().len()).map(|c| frame.column(c).cell_to_string(row)).collect();
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

enum ColumnBuilder {
    Id(Vec<String>),
    Timestamp(Vec<i64>),
    Label(Vec<u8>),
    Categorical(CategoricalColumn),
    Numeric(Vec<Option<f64>>),
}

impl ColumnBuilder {
    fn new(kind: ColumnKind) -> Self {
        match kind {
            ColumnKind::Id => ColumnBuilder::Id(Vec::new()),
            ColumnKind::Timestamp => ColumnBuilder::Timestamp(Vec::new()),
            ColumnKind::Label => ColumnBuilder::Label(Vec::new()),
            ColumnKind::Categorical => ColumnBuilder::Categorical(CategoricalColumn::default()),
            ColumnKind::Numeric => ColumnBuilder::Numeric(Vec::new()),
        }
    }

    fn push(&mut self, cell: &str, spec: &ColumnSpec, positive_token: &str) -> Result<()> {
        let missing = cell.is_empty();
        if missing && !spec.allow_missing {
            return Err(Error::data("missing value in required column".to_string()));
        }
        match self {
            ColumnBuilder::Id(v) => v.push(cell.to_string()),
            ColumnBuilder::Timestamp(v) => v.push(
                cell.parse::<i64>()
                    .map_err(|_| Error::data(format!("`{cell}` is not a month index")))?,
            ),
            ColumnBuilder::Label(v) => {
                let y = if cell == positive_token || cell == "1" {
                    1
                } else if cell == "0" {
                    0
                } else {
                    return Err(Error::data(format!("unrecognized label token `{cell}`")));
                };
                v.push(y);
            }
            ColumnBuilder::Categorical(c) => c.push(if missing { None } else { Some(cell) }),
            ColumnBuilder::Numeric(v) => v.push(if missing {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .map_err(|_| Error::data(format!("`{cell}` is not numeric")))?,
                )
            }),
        }
        Ok(())
    }

    fn finish(self) -> ColumnData {
        match self {
            ColumnBuilder::Id(v) => ColumnData::Id(v),
            ColumnBuilder::Timestamp(v) => ColumnData::Timestamp(v),
            ColumnBuilder::Label(v) => ColumnData::Label(v),
            ColumnBuilder::Categorical(c) => ColumnData::Categorical(c),
            ColumnBuilder::Numeric(v) => ColumnData::Numeric(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MANIFEST: &str = "\
# toy register
positive_token = yes
EpisodeID = id
TreatmentMonth = timestamp
State = categorical
Age = numeric
LFU = label
";

    #[test]
    fn manifest_round_trips() {
        let schema = parse_schema_manifest(MANIFEST).unwrap();
        assert_eq!(schema.len(), 5);
        assert_eq!(schema.positive_token(), "yes");
        assert_eq!(schema.label_index(), Some(4));
        let rendered = render_schema_manifest(&schema);
        let again = parse_schema_manifest(&rendered).unwrap();
        assert_eq!(schema, again);
    }

    #[test]
    fn manifest_rejects_unknown_kind() {
        let err = parse_schema_manifest("positive_token = 1\nx = text\n").unwrap_err();
        assert!(err.to_string().contains("unknown kind"));
    }

    #[test]
    fn csv_round_trips_with_missing_cells() {
        let schema = parse_schema_manifest(MANIFEST).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(
            &path,
            "EpisodeID,TreatmentMonth,State,Age,LFU\n\
             e1,0,KA,30,yes\n\
             e2,1,,45.5,0\n\
             e3,2,MH,,1\n",
        )
        .unwrap();
        let frame = read_csv(&path, &schema).unwrap();
        assert_eq!(frame.n_rows(), 3);
        assert_eq!(frame.labels().unwrap(), &[1, 0, 1]);
        assert!(frame.column(2).is_missing(1));
        assert!(frame.column(3).is_missing(2));
        assert_eq!(frame.column(3).as_numeric().unwrap()[1], Some(45.5));

        let out = dir.path().join("out.csv");
        write_csv(&frame, &out, Some("config_hash=deadbeef seed=7")).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("# config_hash=deadbeef seed=7\n"));
        let again = read_csv(&out, &schema).unwrap();
        assert_eq!(again.n_rows(), 3);
        assert_eq!(again.labels().unwrap(), frame.labels().unwrap());
        assert!(again.column(3).is_missing(2));
    }

    #[test]
    fn csv_rejects_bad_label_and_extra_columns() {
        let schema = parse_schema_manifest(MANIFEST).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "EpisodeID,TreatmentMonth,State,Age,LFU\ne1,0,KA,30,maybe\n",
        )
        .unwrap();
        let err = read_csv(&path, &schema).unwrap_err();
        assert!(err.to_string().contains("unrecognized label token"));

        let path2 = dir.path().join("extra.csv");
        std::fs::write(
            &path2,
            "EpisodeID,TreatmentMonth,State,Age,LFU,Extra\ne1,0,KA,30,0,x\n",
        )
        .unwrap();
        let err = read_csv(&path2, &schema).unwrap_err();
        assert!(err.to_string().contains("not in the schema"));
    }
}
