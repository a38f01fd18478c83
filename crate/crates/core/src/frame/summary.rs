//! Register summaries: size, prevalence, missingness, cohort counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColumnData, Frame, MISSING_TOKEN};

/// Row/positive counts for one cohort value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCount {
    pub rows: usize,
    pub positives: usize,
    pub prevalence: f64,
}

/// Descriptive statistics for one register.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryStats {
    pub rows: usize,
    /// Positive count/rate; absent when the register carries no label.
    pub positives: Option<usize>,
    pub prevalence: Option<f64>,
    /// First and last month index; absent without a timestamp column.
    pub month_range: Option<(i64, i64)>,
    /// Missing cells over feature (categorical/numeric) cells only —
    /// id/timestamp/label columns are never missing.
    pub missing_cells: usize,
    pub feature_cells: usize,
    pub missing_fraction: f64,
    /// Per-column missing fraction, feature columns only.
    pub column_missing: BTreeMap<String, f64>,
    /// cohort column -> category -> counts. Missing cohort cells bucket
    /// under the missing token.
    pub cohorts: BTreeMap<String, BTreeMap<String, CohortCount>>,
}

/// Summarize `frame`, breaking counts down by each categorical column named
/// in `cohort_columns`.
pub fn summarize(frame: &Frame, cohort_columns: &[&str]) -> Result<SummaryStats> {
    let rows = frame.n_rows();
    let labels = frame.schema().label_index().map(|_| frame.labels()).transpose()?;
    let positives = labels.map(|ls| ls.iter().map(|&y| usize::from(y)).sum::<usize>());
    let prevalence = match (positives, rows) {
        (Some(_), 0) => None,
        (Some(p), n) => Some(p as f64 / n as f64),
        (None, _) => None,
    };
    let month_range = if frame.schema().timestamp_index().is_some() {
        let months = frame.months()?;
        months
            .iter()
            .copied()
            .fold(None, |acc: Option<(i64, i64)>, m| {
                Some(acc.map_or((m, m), |(lo, hi)| (lo.min(m), hi.max(m))))
            })
    } else {
        None
    };

    let mut missing_cells = 0usize;
    let mut feature_cells = 0usize;
    let mut column_missing = BTreeMap::new();
    for (idx, spec) in frame.schema().feature_columns() {
        let col = frame.column(idx);
        let missing = (0..rows).filter(|&r| col.is_missing(r)).count();
        missing_cells += missing;
        feature_cells += rows;
        column_missing
            .insert(spec.name.clone(), if rows == 0 { 0.0 } else { missing as f64 / rows as f64 });
    }
    let missing_fraction =
        if feature_cells == 0 { 0.0 } else { missing_cells as f64 / feature_cells as f64 };

    let mut cohorts = BTreeMap::new();
    for &name in cohort_columns {
        let col = frame.column_by_name(name)?;
        let cat = match col {
            ColumnData::Categorical(c) => c,
            other => {
                return Err(Error::config(format!(
                    "cohort column `{name}` has kind {}; expected categorical",
                    other.kind().as_str()
                )))
            }
        };
        let mut table: BTreeMap<String, CohortCount> = BTreeMap::new();
        for row in 0..rows {
            let token = cat.token(row).unwrap_or(MISSING_TOKEN);
            let entry = table
                .entry(token.to_string())
                .or_insert(CohortCount { rows: 0, positives: 0, prevalence: 0.0 });
            entry.rows += 1;
            if let Some(ls) = labels {
                entry.positives += usize::from(ls[row]);
            }
        }
        for count in table.values_mut() {
            count.prevalence =
                if count.rows == 0 { 0.0 } else { count.positives as f64 / count.rows as f64 };
        }
        cohorts.insert(name.to_string(), table);
    }

    Ok(SummaryStats {
        rows,
        positives,
        prevalence,
        month_range,
        missing_cells,
        feature_cells,
        missing_fraction,
        column_missing,
        cohorts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{CategoricalColumn, ColumnKind, ColumnSpec, Schema};

    fn frame() -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("TreatmentMonth", ColumnKind::Timestamp),
                ColumnSpec::new("State", ColumnKind::Categorical),
                ColumnSpec::new("Age", ColumnKind::Numeric),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "1",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Timestamp(vec![3, 1, 4, 1]),
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![
                    Some("KA"),
                    Some("KA"),
                    None,
                    Some("MH"),
                ])),
                ColumnData::Numeric(vec![Some(30.0), None, Some(61.0), Some(45.0)]),
                ColumnData::Label(vec![1, 0, 1, 0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn counts_prevalence_missingness_and_cohorts() {
        let s = summarize(&frame(), &["State"]).unwrap();
        assert_eq!(s.rows, 4);
        assert_eq!(s.positives, Some(2));
        assert_eq!(s.prevalence, Some(0.5));
        assert_eq!(s.month_range, Some((1, 4)));
        // 2 missing cells over 8 feature cells.
        assert_eq!(s.missing_cells, 2);
        assert_eq!(s.feature_cells, 8);
        assert!((s.missing_fraction - 0.25).abs() < 1e-12);
        assert_eq!(s.column_missing["State"], 0.25);
        assert_eq!(s.column_missing["Age"], 0.25);

        let by_state = &s.cohorts["State"];
        assert_eq!(by_state["KA"], CohortCount { rows: 2, positives: 1, prevalence: 0.5 });
        assert_eq!(by_state["MH"], CohortCount { rows: 1, positives: 0, prevalence: 0.0 });
        assert_eq!(
            by_state[MISSING_TOKEN],
            CohortCount { rows: 1, positives: 1, prevalence: 1.0 }
        );
        // Cohort rows partition the register.
        assert_eq!(by_state.values().map(|c| c.rows).sum::<usize>(), s.rows);
    }

    #[test]
    fn numeric_cohort_is_rejected() {
        assert!(summarize(&frame(), &["Age"]).is_err());
    }
}
