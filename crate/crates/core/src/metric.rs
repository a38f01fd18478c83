//! Rank metrics and standard classification metrics.
//!
//! The program-facing quantity is Recall@k%: after sorting episodes by
//! descending score, what fraction of the true LFU cases fall in the top
//! k% that staff can actually follow up on? [`av_recall`] averages this
//! over the operating range k = 10..=40. AUC-ROC/PR and precision are
//! provided for completeness.
//!
//! All rank metrics sort descending by score with ties broken by ascending
//! original index, so results are deterministic even on heavily tied
//! score vectors (rule baselines produce many ties).

use crate::error::{Error, Result};
use crate::util::argsort_desc;

/// Scores paired with labels, sorted descending by score (ties by
/// ascending original index). The common substrate for rank metrics.
#[derive(Debug, Clone)]
pub struct RankedSet {
    /// Permutation of original indices in rank order.
    order: Vec<usize>,
    /// Scores in rank order.
    scores: Vec<f64>,
    /// Labels in rank order.
    labels: Vec<u8>,
    positives: usize,
}

impl RankedSet {
    pub fn new(scores: &[f64], labels: &[u8]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::internal(format!(
                "rank: {} scores vs {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.is_empty() {
            return Err(Error::data("rank: empty score vector"));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::data(format!("rank: non-finite score {bad}")));
        }
        let order = argsort_desc(scores);
        let ranked_scores = order.iter().map(|&i| scores[i]).collect();
        let ranked_labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
        let positives = ranked_labels.iter().map(|&y| usize::from(y)).sum();
        Ok(RankedSet { order, scores: ranked_scores, labels: ranked_labels, positives })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of rows targeted at k percent: ⌊k·n/100⌋, minimum 1.
    pub fn targeted(&self, k: f64) -> usize {
        ((k * self.len() as f64 / 100.0).floor() as usize).clamp(1, self.len())
    }

    /// Recall among the top k percent.
    pub fn recall_at(&self, k: f64) -> Result<f64> {
        if !(0.0 < k && k <= 100.0) {
            return Err(Error::config(format!("rank: k = {k} outside (0, 100]")));
        }
        if self.positives == 0 {
            return Err(Error::data("rank: recall undefined without positive labels"));
        }
        let m = self.targeted(k);
        let hits: usize = self.labels[..m].iter().map(|&y| usize::from(y)).sum();
        Ok(hits as f64 / self.positives as f64)
    }

    /// Precision among the top k percent.
    pub fn precision_at(&self, k: f64) -> Result<f64> {
        if !(0.0 < k && k <= 100.0) {
            return Err(Error::config(format!("rank: k = {k} outside (0, 100]")));
        }
        let m = self.targeted(k);
        let hits: usize = self.labels[..m].iter().map(|&y| usize::from(y)).sum();
        Ok(hits as f64 / m as f64)
    }

    /// Mean of [`RankedSet::recall_at`] over integer k in `k_lo..=k_hi`.
    pub fn av_recall(&self, k_lo: u32, k_hi: u32) -> Result<f64> {
        if k_lo == 0 || k_hi > 100 || k_lo > k_hi {
            return Err(Error::config(format!("rank: bad av_recall range [{k_lo}, {k_hi}]")));
        }
        let mut sum = 0.0;
        for k in k_lo..=k_hi {
            sum += self.recall_at(k as f64)?;
        }
        Ok(sum / (k_hi - k_lo + 1) as f64)
    }
}

/// Recall among the top k percent (k in percent units).
pub fn recall_at_k(scores: &[f64], labels: &[u8], k: f64) -> Result<f64> {
    RankedSet::new(scores, labels)?.recall_at(k)
}

/// Mean Recall@k over integer k in `k_lo..=k_hi` (defaults 10..=40 at call
/// sites; the operating range used throughout).
pub fn av_recall(scores: &[f64], labels: &[u8], k_lo: u32, k_hi: u32) -> Result<f64> {
    RankedSet::new(scores, labels)?.av_recall(k_lo, k_hi)
}

/// Precision among the top k percent.
pub fn precision_at_k(scores: &[f64], labels: &[u8], k: f64) -> Result<f64> {
    RankedSet::new(scores, labels)?.precision_at(k)
}

/// Area under the ROC curve via the Mann–Whitney rank statistic with tie
/// correction (tied scores share their average rank).
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let ranked = RankedSet::new(scores, labels)?;
    let n = ranked.len();
    let pos = ranked.positives();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::data("auc_roc: needs both classes"));
    }

    // Ascending order; average ranks across tie groups.
    let mut by_score: Vec<(f64, u8)> =
        ranked.scores.iter().rev().copied().zip(ranked.labels.iter().rev().copied()).collect();
    // `ranked` is descending; reversed it is ascending.
    let mut rank_sum_pos = 0.0;
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && by_score[j + 1].0 == by_score[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for item in &mut by_score[i..=j] {
            if item.1 == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Area under the precision-recall curve: step-wise average precision,
/// summing precision at each positive hit (descending score order, stable
/// tie order).
pub fn auc_pr(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let ranked = RankedSet::new(scores, labels)?;
    let pos = ranked.positives();
    if pos == 0 || pos == ranked.len() {
        return Err(Error::data("auc_pr: needs both classes"));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &y) in ranked.labels.iter().enumerate() {
        if y == 1 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// Percentage improvement of `value` over `reference`.
pub fn lift(value: f64, reference: f64) -> Result<f64> {
    if reference <= 0.0 {
        return Err(Error::data(format!("lift: reference {reference} must be positive")));
    }
    Ok(100.0 * (value - reference) / reference)
}

/// Percentage of a cohort's scores at or above a global threshold — the
/// fraction of the cohort that would actually be targeted.
pub fn effective_k(cohort_scores: &[f64], threshold: f64) -> Result<f64> {
    if cohort_scores.is_empty() {
        return Err(Error::data("effective_k: empty cohort"));
    }
    let hit = cohort_scores.iter().filter(|&&s| s >= threshold).count();
    Ok(100.0 * hit as f64 / cohort_scores.len() as f64)
}
