//! Forward (temporal) splitting.
//!
//! Evaluation must mimic deployment: models trained on one period are
//! applied to episodes that begin later. [`forward_split`] reserves the
//! trailing months of a register as a passive-evaluation set, and
//! [`chronological_partition`] divides the remainder into train/val/test
//! in time order. Random or stratified splits are deliberately absent —
//! they would leak future information into training.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

/// How a register is carved into modeling and passive-evaluation periods,
/// and how the modeling period is partitioned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Number of trailing (most recent) distinct months reserved for
    /// passive evaluation.
    pub pes_months: i64,
    /// Train/val/test proportions for the modeling period.
    pub fractions: (f64, f64, f64),
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan { pes_months: 6, fractions: (0.6, 0.2, 0.2) }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if self.pes_months < 1 {
            return Err(Error::config("split: pes_months must be at least 1"));
        }
        validate_fractions(self.fractions)
    }
}

fn validate_fractions(fractions: (f64, f64, f64)) -> Result<()> {
    let (a, b, c) = fractions;
    if a <= 0.0 || b <= 0.0 || c <= 0.0 {
        return Err(Error::config("split: every fraction must be positive"));
    }
    if (a + b + c - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("split: fractions sum to {}, expected 1", a + b + c)));
    }
    Ok(())
}

/// Row-index lists for each named split; the JSON reproducibility artifact.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SplitManifest {
    pub splits: BTreeMap<String, Vec<usize>>,
}

/// Split off the trailing `plan.pes_months` distinct months as the
/// passive-evaluation set. Returns `(modeling, pes)` row indices in
/// original order.
pub fn forward_split_indices(frame: &Frame, plan: &SplitPlan) -> Result<(Vec<usize>, Vec<usize>)> {
    plan.validate()?;
    let months = frame.months()?;
    let mut distinct: Vec<i64> = months.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let span = distinct.len() as i64;
    if span <= plan.pes_months {
        return Err(Error::data(format!(
            "split: register spans {span} distinct months, need more than pes_months = {}",
            plan.pes_months
        )));
    }
    let boundary = distinct[(span - plan.pes_months) as usize];
    let mut modeling = Vec::new();
    let mut pes = Vec::new();
    for (row, &m) in months.iter().enumerate() {
        if m >= boundary {
            pes.push(row);
        } else {
            modeling.push(row);
        }
    }
    Ok((modeling, pes))
}

/// Frame-level wrapper over [`forward_split_indices`].
pub fn forward_split(frame: &Frame, plan: &SplitPlan) -> Result<(Frame, Frame)> {
    let (modeling, pes) = forward_split_indices(frame, plan)?;
    Ok((frame.take_rows(&modeling), frame.take_rows(&pes)))
}

/// Chronologically partition rows into train/val/test index lists.
///
/// Rows are stably sorted by (month, original index); the first
/// `ceil(train·n)` go to train, the next `ceil(val·n)` to val, and the
/// remainder to test.
pub fn chronological_indices(
    frame: &Frame,
    fractions: (f64, f64, f64),
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    validate_fractions(fractions)?;
    let months = frame.months()?;
    let n = frame.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&r| (months[r], r));

    let n_train = ((fractions.0 * n as f64).ceil() as usize).min(n);
    let n_val = ((fractions.1 * n as f64).ceil() as usize).min(n - n_train);
    let train = order[..n_train].to_vec();
    let val = order[n_train..n_train + n_val].to_vec();
    let test = order[n_train + n_val..].to_vec();
    Ok((train, val, test))
}

/// Frame-level wrapper over [`chronological_indices`].
pub fn chronological_partition(
    frame: &Frame,
    fractions: (f64, f64, f64),
) -> Result<(Frame, Frame, Frame)> {
    let (train, val, test) = chronological_indices(frame, fractions)?;
    Ok((frame.take_rows(&train), frame.take_rows(&val), frame.take_rows(&test)))
}
