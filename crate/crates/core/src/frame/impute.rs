//! Missing-value handling.
//!
//! Missingness is often informative in programmatic registers (an absent
//! bank record is itself a signal), so categorical gaps become an explicit
//! category rather than being dropped or guessed. Numeric gaps take the
//! training-split mean, learned once by [`Imputer::fit`] and replayed on
//! later splits so no statistics leak across the temporal boundary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ColumnData, Frame};

/// Category assigned to missing categorical cells.
pub const MISSING_TOKEN: &str = "__missing__";

/// Learned imputation state: per-column means for numeric features.
/// Categorical imputation is stateless (a fixed token) and needs no fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Imputer {
    numeric_means: BTreeMap<String, f64>,
}

impl Imputer {
    /// Learn per-column means from `frame` (typically the training split).
    ///
    /// Errors if a numeric feature column is entirely missing — there is no
    /// defensible fill value in that case and the column should be dropped
    /// upstream.
    pub fn fit(frame: &Frame) -> Result<Self> {
        let mut numeric_means = BTreeMap::new();
        for (idx, spec) in frame.schema().feature_columns() {
            if let ColumnData::Numeric(values) = frame.column(idx) {
                let mut sum = 0.0;
                let mut n = 0usize;
                for v in values.iter().flatten() {
                    sum += v;
                    n += 1;
                }
                if n == 0 {
                    return Err(Error::data(format!(
                        "numeric column `{}` is entirely missing; cannot impute a mean",
                        spec.name
                    )));
                }
                numeric_means.insert(spec.name.clone(), sum / n as f64);
            }
        }
        Ok(Imputer { numeric_means })
    }

    pub fn numeric_means(&self) -> &BTreeMap<String, f64> {
        &self.numeric_means
    }

    /// Fill every missing feature cell; idempotent.
    pub fn apply(&self, frame: &Frame) -> Result<Frame> {
        let mut columns = Vec::with_capacity(frame.schema().len());
        for (idx, spec) in frame.schema().columns().iter().enumerate() {
            let col = frame.column(idx);
            let filled = match col {
                ColumnData::Numeric(values) => {
                    if values.iter().any(Option::is_none) {
                        let mean = *self.numeric_means.get(&spec.name).ok_or_else(|| {
                            Error::config(format!(
                                "imputer was not fitted on numeric column `{}`",
                                spec.name
                            ))
                        })?;
                        ColumnData::Numeric(values.iter().map(|v| Some(v.unwrap_or(mean))).collect())
                    } else {
                        col.clone()
                    }
                }
                ColumnData::Categorical(cat) => {
                    if cat.codes().iter().any(Option::is_none) {
                        ColumnData::Categorical(CategoricalColumn::from_tokens(
                            (0..cat.len()).map(|r| Some(cat.token(r).unwrap_or(MISSING_TOKEN))),
                        ))
                    } else {
                        col.clone()
                    }
                }
                _ => col.clone(),
            };
            columns.push(filled);
        }
        Frame::new(frame.schema().clone(), columns)
    }
}

/// Fit on `frame` and fill it in one step, returning the learned state for
/// replay on held-out splits.
pub fn impute(frame: &Frame) -> Result<(Frame, Imputer)> {
    let imputer = Imputer::fit(frame)?;
    let filled = imputer.apply(frame)?;
    Ok((filled, imputer))
}
