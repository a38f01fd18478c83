//! Left-join of secondary registers onto a notification spine.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ColumnData, Frame, Schema};

/// Left-join `others` onto `spine` by the shared `key` column.
///
/// Every spine row appears exactly once in the result, in spine order.
/// Joined columns from unmatched rows are missing. Rules:
///
/// * `key` must exist in every register as an id or categorical column;
/// * key values must be unique within each secondary register (a duplicate
///   would make the join ambiguous);
/// * secondary registers contribute only categorical/numeric columns
///   besides the key — label, timestamp, and id columns belong on the
///   spine, and only feature columns can represent a missing (unmatched)
///   cell;
/// * joined column names must not collide with spine columns or each other.
pub fn merge_registers(spine: &Frame, others: &[&Frame], key: &str) -> Result<Frame> {
    let spine_keys = key_tokens(spine, key)?;

    let mut specs = spine.schema().columns().to_vec();
    let mut columns: Vec<ColumnData> =
        (0..spine.schema().len()).map(|i| spine.column(i).clone()).collect();

    for (fi, other) in others.iter().enumerate() {
        let other_keys = key_tokens(other, key)?;
        let mut by_key: HashMap<&str, usize> = HashMap::with_capacity(other.n_rows());
        for (row, tok) in other_keys.iter().enumerate() {
            let tok = tok.ok_or_else(|| {
                Error::data(format!("register {}: key `{key}` is missing at row {row}", fi + 2))
            })?;
            if by_key.insert(tok, row).is_some() {
                return Err(Error::data(format!(
                    "register {}: duplicate key `{tok}` makes the join ambiguous",
                    fi + 2
                )));
            }
        }

        for (ci, spec) in other.schema().columns().iter().enumerate() {
            if spec.name == key {
                continue;
            }
            if !spec.kind.is_feature() {
                return Err(Error::data(format!(
                    "register {}: column `{}` has kind {}; secondary registers may only \
                     contribute categorical or numeric columns",
                    fi + 2,
                    spec.name,
                    spec.kind.as_str()
                )));
            }
            if specs.iter().any(|s| s.name == spec.name) {
                return Err(Error::data(format!(
                    "joined column `{}` collides with an existing column",
                    spec.name
                )));
            }
            let matched_row = |tok: Option<&str>| tok.and_then(|t| by_key.get(t).copied());
            let data = match other.column(ci) {
                ColumnData::Categorical(col) => {
                    ColumnData::Categorical(CategoricalColumn::from_tokens(
                        spine_keys.iter().map(|tok| matched_row(*tok).and_then(|r| col.token(r))),
                    ))
                }
                ColumnData::Numeric(vals) => ColumnData::Numeric(
                    spine_keys.iter().map(|tok| matched_row(*tok).and_then(|r| vals[r])).collect(),
                ),
                _ => unreachable!("feature kinds are categorical or numeric"),
            };
            let mut spec = spec.clone();
            spec.allow_missing = true; // unmatched spine rows yield missing cells
            specs.push(spec);
            columns.push(data);
        }
    }

    let schema = Schema::new(specs, spine.schema().positive_token())?;
    Frame::new(schema, columns)
}

fn key_tokens<'f>(frame: &'f Frame, key: &str) -> Result<Vec<Option<&'f str>>> {
    let idx = frame
        .schema()
        .column_index(key)
        .ok_or_else(|| Error::config(format!("key column `{key}` not present in register")))?;
    match frame.column(idx) {
        ColumnData::Id(v) => Ok(v.iter().map(|s| Some(s.as_str())).collect()),
        ColumnData::Categorical(c) => Ok((0..c.len()).map(|r| c.token(r)).collect()),
        other => Err(Error::config(format!(
            "key column `{key}` has kind {}; expected id or categorical",
            other.kind().as_str()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{ColumnKind, ColumnSpec, Schema};

    fn spine() -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("EpisodeID", ColumnKind::Id),
                ColumnSpec::new("TreatmentMonth", ColumnKind::Timestamp),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "1",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Id(vec!["e1".into(), "e2".into(), "e3".into()]),
                ColumnData::Timestamp(vec![0, 1, 2]),
                ColumnData::Label(vec![0, 1, 0]),
            ],
        )
        .unwrap()
    }

    fn bank_register() -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("EpisodeID", ColumnKind::Id),
                ColumnSpec::new("BankDetailsAdded", ColumnKind::Categorical),
                ColumnSpec::new("Payments", ColumnKind::Numeric),
            ],
            "1",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Id(vec!["e3".into(), "e1".into()]),
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![
                    Some("no"),
                    Some("yes"),
                ])),
                ColumnData::Numeric(vec![Some(0.0), Some(3.0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn left_join_preserves_spine_and_fills_missing() {
        let merged = merge_registers(&spine(), &[&bank_register()], "EpisodeID").unwrap();
        assert_eq!(merged.n_rows(), 3);
        assert_eq!(merged.schema().len(), 5);
        let bank = merged.column_by_name("BankDetailsAdded").unwrap().as_categorical().unwrap();
        assert_eq!(bank.token(0), Some("yes"));
        assert_eq!(bank.token(1), None); // e2 unmatched
        assert_eq!(bank.token(2), Some("no"));
        let pay = merged.column_by_name("Payments").unwrap().as_numeric().unwrap();
        assert_eq!(pay[1], None);
        assert_eq!(pay[2], Some(0.0));
        // Spine label intact and still unique.
        assert_eq!(merged.labels().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("EpisodeID", ColumnKind::Id),
                ColumnSpec::new("x", ColumnKind::Numeric),
            ],
            "1",
        )
        .unwrap();
        let dup = Frame::new(
            schema,
            vec![
                ColumnData::Id(vec!["e1".into(), "e1".into()]),
                ColumnData::Numeric(vec![Some(1.0), Some(2.0)]),
            ],
        )
        .unwrap();
        let err = merge_registers(&spine(), &[&dup], "EpisodeID").unwrap_err();
        assert!(err.to_string().contains("duplicate key"));
    }

    #[test]
    fn column_collisions_are_rejected() {
        let other = spine(); // re-joining the spine collides on every column
        let err = merge_registers(&spine(), &[&other], "EpisodeID").unwrap_err();
        assert!(err.to_string().contains("secondary registers may only contribute"));
    }
}
