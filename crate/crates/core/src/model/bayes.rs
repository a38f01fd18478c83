//! Naive Bayes on raw register columns.
//!
//! Class-conditional independence over features, computed in log space:
//! categorical columns get Laplace-smoothed (+1) token likelihoods with a
//! dedicated missing bucket that is always allocated — unseen tokens at
//! scoring time route there — and numeric columns get per-class Gaussian
//! likelihoods. Missing numeric cells contribute nothing to the score
//! (the feature's factor is skipped), so the model tolerates partial
//! registers without imputation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColumnData, Frame};
use crate::util::sigmoid;

/// Per-class statistics for one feature. Index 0 = negative, 1 = positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum Feature {
    Categorical {
        name: String,
        /// Token → per-class log-likelihood.
        log_lik: BTreeMap<String, [f64; 2]>,
        /// Missing/unseen bucket, always allocated.
        log_missing: [f64; 2],
    },
    Numeric {
        name: String,
        mean: [f64; 2],
        var: [f64; 2],
    },
}

/// Fitted Naive Bayes scorer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    log_prior: [f64; 2],
    features: Vec<Feature>,
}

impl NaiveBayesModel {
    /// Posterior probability of the positive class per row.
    pub fn predict(&self, frame: &Frame) -> Result<Vec<f64>> {
        let columns: Vec<&ColumnData> = self
            .features
            .iter()
            .map(|f| {
                let name = match f {
                    Feature::Categorical { name, .. } | Feature::Numeric { name, .. } => name,
                };
                frame.column_by_name(name)
            })
            .collect::<Result<_>>()?;

        let mut scores = Vec::with_capacity(frame.n_rows());
        for row in 0..frame.n_rows() {
            let mut log_odds = self.log_prior[1] - self.log_prior[0];
            for (feature, column) in self.features.iter().zip(&columns) {
                match feature {
                    Feature::Categorical { name, log_lik, log_missing } => {
                        let cat = column.as_categorical().ok_or_else(|| {
                            Error::data(format!("column `{name}` is not categorical"))
                        })?;
                        let ll = cat
                            .token(row)
                            .and_then(|t| log_lik.get(t))
                            .unwrap_or(log_missing);
                        log_odds += ll[1] - ll[0];
                    }
                    Feature::Numeric { name, mean, var } => {
                        let vals = column.as_numeric().ok_or_else(|| {
                            Error::data(format!("column `{name}` is not numeric"))
                        })?;
                        if let Some(v) = vals[row] {
                            log_odds += gaussian_log_pdf(v, mean[1], var[1])
                                - gaussian_log_pdf(v, mean[0], var[0]);
                        }
                    }
                }
            }
            scores.push(sigmoid(log_odds));
        }
        Ok(scores)
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }
}

fn gaussian_log_pdf(v: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - mean).powi(2) / (2.0 * var)
}

pub(super) fn fit(frame: &Frame) -> Result<NaiveBayesModel> {
    let y = frame.labels()?;
    let n = y.len();
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    let class_n = [(n - n_pos) as f64, n_pos as f64];
    let log_prior = [class_n[0].ln() - (n as f64).ln(), class_n[1].ln() - (n as f64).ln()];

    let mut features = Vec::new();
    for (idx, spec) in frame.schema().feature_columns() {
        match frame.column(idx) {
            ColumnData::Categorical(cat) => {
                // counts[code][class]; one extra slot for the missing bucket.
                let n_tokens = cat.categories().len();
                let mut counts = vec![[0usize; 2]; n_tokens + 1];
                for (row, code) in cat.codes().iter().enumerate() {
                    let slot = code.map_or(n_tokens, |c| c as usize);
                    counts[slot][y[row] as usize] += 1;
                }
                // Laplace +1 per bucket; vocabulary = tokens + missing.
                let vocab = (n_tokens + 1) as f64;
                let ll = |count: usize, class: usize| {
                    ((count + 1) as f64).ln() - (class_n[class] + vocab).ln()
                };
                let log_lik = cat
                    .categories()
                    .iter()
                    .enumerate()
                    .map(|(code, token)| {
                        (token.clone(), [ll(counts[code][0], 0), ll(counts[code][1], 1)])
                    })
                    .collect();
                features.push(Feature::Categorical {
                    name: spec.name.clone(),
                    log_lik,
                    log_missing: [ll(counts[n_tokens][0], 0), ll(counts[n_tokens][1], 1)],
                });
            }
            ColumnData::Numeric(vals) => {
                let mut mean = [0.0f64; 2];
                let mut var = [0.0f64; 2];
                let mut count = [0.0f64; 2];
                for (row, v) in vals.iter().enumerate() {
                    if let Some(v) = v {
                        let c = y[row] as usize;
                        count[c] += 1.0;
                        mean[c] += v;
                    }
                }
                for c in 0..2 {
                    if count[c] > 0.0 {
                        mean[c] /= count[c];
                    }
                }
                for (row, v) in vals.iter().enumerate() {
                    if let Some(v) = v {
                        let c = y[row] as usize;
                        var[c] += (v - mean[c]).powi(2);
                    }
                }
                // Global variance floors degenerate classes so one constant
                // or empty class cannot produce infinite densities.
                let total = count[0] + count[1];
                let global_mean = (mean[0] * count[0] + mean[1] * count[1]) / total.max(1.0);
                let global_var = vals
                    .iter()
                    .flatten()
                    .map(|v| (v - global_mean).powi(2))
                    .sum::<f64>()
                    / total.max(1.0);
                let floor = (global_var * 1e-3).max(1e-9);
                for c in 0..2 {
                    if count[c] > 0.0 {
                        var[c] = (var[c] / count[c]).max(floor);
                    } else {
                        mean[c] = global_mean;
                        var[c] = global_var.max(floor);
                    }
                }
                features.push(Feature::Numeric { name: spec.name.clone(), mean, var });
            }
            other => {
                return Err(Error::internal(format!(
                    "feature column `{}` holds {} data",
                    spec.name,
                    other.kind().as_str()
                )))
            }
        }
    }
    if features.is_empty() {
        return Err(Error::data("naive bayes: register has no feature columns"));
    }
    Ok(NaiveBayesModel { log_prior, features })
}
