//! Predictive-multiplicity audit over near-equivalent models.
//!
//! Model selection crowns a single scorer, but other candidates within a
//! whisker of its headline metric would rank some patients differently —
//! and for those patients the choice of champion is arbitrary. This
//! module measures how consequential that arbitrariness is: build an
//! [`EpsilonSet`] of models whose metric lands in `[(1−ε)·p, p]` around
//! the best value `p`, then summarize disagreement with [`ambiguity`]
//! (how many patients *any* near-tie flips) and [`discrepancy`] (how many
//! a *single* worst-case near-tie flips).
//!
//! Continuous scores are binarized at each model's **own top-20% global
//! threshold** — the deployment rule — before disagreement is counted.
//! This choice changes the measures, so it is fixed here rather than left
//! to callers and is recorded in the report.
//!
//! [`ambiguity`]: EpsilonSet::ambiguity
//! [`discrepancy`]: EpsilonSet::discrepancy

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{global_threshold, MetricFn};

/// Default performance-band width.
pub const DEFAULT_EPSILON: f64 = 0.2;

/// Binarization rule: each model flags its own top-k% of patients.
pub const BINARIZE_K: f64 = 20.0;

/// A baseline model plus every candidate whose metric falls within
/// `[(1−ε)·p, p]` of the baseline's metric `p`, all binarized to
/// per-patient 0/1 flags at their own top-20% thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSet {
    epsilon: f64,
    baseline: String,
    baseline_metric: f64,
    baseline_flags: Vec<u8>,
    /// Admitted near-ties, in candidate order; the baseline itself is
    /// never a member, so it cannot "disagree" with itself.
    members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Member {
    name: String,
    metric: f64,
    flags: Vec<u8>,
}

/// Summary emitted to reports and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub epsilon: f64,
    pub binarize_k: f64,
    pub baseline: String,
    pub baseline_metric: f64,
    pub n_members: usize,
    pub ambiguity: f64,
    pub discrepancy: f64,
    /// Per-member fraction of patients flipped relative to the baseline.
    pub member_disagreement: Vec<(String, f64)>,
}

/// Pick the best candidate by `metric`, admit every other candidate whose
/// metric falls in `[(1−epsilon)·best, best]`, and binarize everyone at
/// their own top-20% global threshold. Ties for best go to the earliest
/// candidate.
pub fn build_epsilon_set(
    candidates: &[(String, Vec<f64>)],
    labels: &[u8],
    metric: MetricFn,
    epsilon: f64,
) -> Result<EpsilonSet> {
    if candidates.is_empty() {
        return Err(Error::config("epsilon set: no candidate models"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(format!("epsilon set: ε = {epsilon} outside (0, 1)")));
    }
    for (name, scores) in candidates {
        if scores.len() != labels.len() {
            return Err(Error::data(format!(
                "epsilon set: model `{name}` has {} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
    }

    let metrics: Vec<f64> = candidates
        .par_iter()
        .map(|(_, scores)| metric(scores, labels))
        .collect::<Result<_>>()?;
    if let Some(bad) = metrics.iter().find(|m| !m.is_finite()) {
        return Err(Error::data(format!("epsilon set: non-finite metric {bad}")));
    }
    let best = metrics
        .iter()
        .enumerate()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .map(|(i, _)| i)
        .expect("non-empty candidates");
    let p = metrics[best];
    let floor = (1.0 - epsilon) * p;

    let flags_of = |scores: &[f64]| -> Result<Vec<u8>> {
        let threshold = global_threshold(scores, BINARIZE_K)?;
        Ok(scores.iter().map(|&s| u8::from(s >= threshold)).collect())
    };

    let members = candidates
        .par_iter()
        .enumerate()
        .filter(|&(i, _)| i != best && metrics[i] >= floor && metrics[i] <= p)
        .map(|(i, (name, scores))| {
            Ok(Member { name: name.clone(), metric: metrics[i], flags: flags_of(scores)? })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EpsilonSet {
        epsilon,
        baseline: candidates[best].0.clone(),
        baseline_metric: p,
        baseline_flags: flags_of(&candidates[best].1)?,
        members,
    })
}

impl EpsilonSet {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn baseline(&self) -> &str {
        &self.baseline
    }

    pub fn baseline_metric(&self) -> f64 {
        self.baseline_metric
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_patients(&self) -> usize {
        self.baseline_flags.len()
    }

    /// Names of admitted members, in candidate order.
    pub fn member_names(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.name.as_str()).collect()
    }

    /// Fraction of patients on whom at least one member disagrees with
    /// the baseline — the union of all flips. Zero without members.
    pub fn ambiguity(&self) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        let flipped = (0..self.baseline_flags.len())
            .filter(|&i| self.members.iter().any(|m| m.flags[i] != self.baseline_flags[i]))
            .count();
        flipped as f64 / self.baseline_flags.len() as f64
    }

    /// Max over members of the fraction of patients that single member
    /// flips relative to the baseline. Zero without members.
    pub fn discrepancy(&self) -> f64 {
        self.member_disagreement()
            .into_iter()
            .map(|(_, d)| d)
            .fold(0.0, f64::max)
    }

    /// Per-member flip fraction against the baseline.
    pub fn member_disagreement(&self) -> Vec<(String, f64)> {
        let n = self.baseline_flags.len() as f64;
        self.members
            .iter()
            .map(|m| {
                let flips = m
                    .flags
                    .iter()
                    .zip(&self.baseline_flags)
                    .filter(|(a, b)| a != b)
                    .count();
                (m.name.clone(), flips as f64 / n)
            })
            .collect()
    }

    pub fn report(&self) -> MultiplicityReport {
        MultiplicityReport {
            epsilon: self.epsilon,
            binarize_k: BINARIZE_K,
            baseline: self.baseline.clone(),
            baseline_metric: self.baseline_metric,
            n_members: self.members.len(),
            ambiguity: self.ambiguity(),
            discrepancy: self.discrepancy(),
            member_disagreement: self.member_disagreement(),
        }
    }
}
