//! Deployment thresholds and cohort-level evaluation.
//!
//! A program that follows up the riskiest k% of patients needs a score
//! cutoff. The *global* threshold is the m-th largest score over everyone
//! (m = ⌊k·n/100⌋, at least 1); *local* thresholds apply the same rule
//! within each cohort, so every cohort gets its own top-k% targeted
//! regardless of how its score distribution compares to the rest.
//! [`cohort_eval`] reports, per cohort, how many patients the threshold
//! targets (effective k) and what fraction of true positives it catches,
//! with a within-cohort bootstrap interval around that recall.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::metric::effective_k;
use crate::util::{str_salt, sub_rng};

/// How thresholds are derived in cohort evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// One threshold from the pooled scores.
    Global,
    /// A separate threshold from each cohort's own scores.
    Local,
}

impl ThresholdMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(ThresholdMode::Global),
            "local" => Ok(ThresholdMode::Local),
            other => Err(Error::config(format!(
                "unknown threshold mode `{other}` (expected global|local)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::Global => "global",
            ThresholdMode::Local => "local",
        }
    }
}

/// The m-th largest score, m = ⌊k·n/100⌋ clamped to at least 1: scoring
/// at or above it targets (roughly, up to ties) the top k% of rows.
pub fn global_threshold(scores: &[f64], k: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::data("threshold: no scores"));
    }
    if !(k > 0.0 && k <= 100.0) {
        return Err(Error::config(format!("threshold: k = {k} outside (0, 100]")));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::data(format!("threshold: non-finite score {bad}")));
    }
    let m = ((k * scores.len() as f64 / 100.0).floor() as usize).max(1);
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite scores"));
    Ok(sorted[m - 1])
}

/// Per-cohort thresholds under the same m-th-largest rule.
pub fn local_thresholds(
    scores: &[f64],
    cohorts: &[String],
    k: f64,
) -> Result<BTreeMap<String, f64>> {
    if scores.len() != cohorts.len() {
        return Err(Error::data(format!(
            "threshold: {} scores vs {} cohort ids",
            scores.len(),
            cohorts.len()
        )));
    }
    let mut grouped: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (s, c) in scores.iter().zip(cohorts) {
        grouped.entry(c).or_default().push(*s);
    }
    if grouped.is_empty() {
        return Err(Error::data("threshold: no cohorts"));
    }
    grouped
        .into_iter()
        .map(|(c, s)| Ok((c.to_string(), global_threshold(&s, k)?)))
        .collect()
}

/// One cohort's row in a [`CohortReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortRow {
    pub cohort: String,
    pub patients: usize,
    pub positives: usize,
    /// Score cutoff applied to this cohort under the report's mode.
    pub threshold: f64,
    /// Fraction of the cohort's positives at or above the threshold;
    /// `None` when the cohort has no positives (kept, not dropped).
    pub recall: Option<f64>,
    /// Percentage of the cohort actually targeted by the threshold.
    pub effective_k: f64,
    /// 95% within-cohort bootstrap interval around `recall`; `None` when
    /// recall is undefined or too few informative resamples exist.
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

/// Cohort-level evaluation of one score vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort_column: String,
    pub mode: ThresholdMode,
    pub k: f64,
    /// The pooled threshold (present in global mode).
    pub global_threshold: Option<f64>,
    pub rows: Vec<CohortRow>,
}

/// Evaluate recall/effective-k per cohort under global or local
/// thresholding. Cohorts come from `cohort_column` (categorical or
/// timestamp); missing cells form their own cohort. `b` bootstrap
/// resamples (within cohort, threshold held fixed) produce the interval;
/// pass `b = 0` to skip intervals.
pub fn cohort_eval(
    frame: &Frame,
    scores: &[f64],
    cohort_column: &str,
    mode: ThresholdMode,
    k: f64,
    b: usize,
    seed: u64,
) -> Result<CohortReport> {
    if scores.len() != frame.n_rows() {
        return Err(Error::data(format!(
            "cohort eval: {} scores for {} rows",
            scores.len(),
            frame.n_rows()
        )));
    }
    let labels = frame.labels()?;
    let tokens = frame.cohort_tokens(cohort_column)?;

    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (row, token) in tokens.iter().enumerate() {
        groups.entry(token.clone()).or_default().push(row);
    }

    let pooled = match mode {
        ThresholdMode::Global => Some(global_threshold(scores, k)?),
        ThresholdMode::Local => None,
    };

    let mut rows = Vec::with_capacity(groups.len());
    for (cohort, members) in groups {
        let c_scores: Vec<f64> = members.iter().map(|&r| scores[r]).collect();
        let c_labels: Vec<u8> = members.iter().map(|&r| labels[r]).collect();
        let threshold = match mode {
            ThresholdMode::Global => pooled.expect("set in global mode"),
            ThresholdMode::Local => global_threshold(&c_scores, k)?,
        };
        let positives = c_labels.iter().filter(|&&y| y == 1).count();
        let recall = recall_at_threshold(&c_scores, &c_labels, threshold);
        let (ci_lo, ci_hi) = if recall.is_some() && b >= 2 {
            bootstrap_recall_ci(&c_scores, &c_labels, threshold, b, seed, &cohort)
        } else {
            (None, None)
        };
        rows.push(CohortRow {
            cohort,
            patients: members.len(),
            positives,
            threshold,
            recall,
            effective_k: effective_k(&c_scores, threshold)?,
            ci_lo,
            ci_hi,
        });
    }

    Ok(CohortReport {
        cohort_column: cohort_column.to_string(),
        mode,
        k,
        global_threshold: pooled,
        rows,
    })
}

/// Recall of positives at a fixed threshold (`None` without positives).
fn recall_at_threshold(scores: &[f64], labels: &[u8], threshold: f64) -> Option<f64> {
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 {
        return None;
    }
    let caught = scores
        .iter()
        .zip(labels)
        .filter(|(s, &y)| y == 1 && **s >= threshold)
        .count();
    Some(caught as f64 / positives as f64)
}

/// Percentile interval of within-cohort bootstrap recall at a fixed
/// threshold. Resamples without positives are skipped; if fewer than 30
/// informative resamples remain, no interval is reported.
fn bootstrap_recall_ci(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
    b: usize,
    seed: u64,
    cohort: &str,
) -> (Option<f64>, Option<f64>) {
    let n = scores.len();
    let cohort_seed = seed ^ str_salt(cohort);
    let salt = str_salt("cohort-recall-ci");
    let mut replicates = Vec::with_capacity(b);
    for rep in 0..b as u64 {
        let mut rng = sub_rng(cohort_seed ^ rep, salt);
        let mut r_scores = Vec::with_capacity(n);
        let mut r_labels = Vec::with_capacity(n);
        for _ in 0..n {
            let row = rng.gen_range(0..n);
            r_scores.push(scores[row]);
            r_labels.push(labels[row]);
        }
        if let Some(r) = recall_at_threshold(&r_scores, &r_labels, threshold) {
            replicates.push(r);
        }
    }
    match super::confidence_interval(&replicates, 0.95) {
        Ok((lo, hi)) => (Some(lo), Some(hi)),
        Err(_) => (None, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{CategoricalColumn, ColumnData, ColumnKind, ColumnSpec, Schema};
    use crate::model::random_scores;

    fn cohort_frame(cohorts: &[&str], labels: &[u8]) -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("District", ColumnKind::Categorical),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Categorical(CategoricalColumn::from_tokens(
                    cohorts.iter().map(|c| Some(*c)),
                )),
                ColumnData::Label(labels.to_vec()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn five_scores_k20_threshold_is_max() {
        let scores = [0.1, 0.9, 0.3, 0.2, 0.5];
        assert_eq!(global_threshold(&scores, 20.0).unwrap(), 0.9);
        // m = ⌊0.2·5⌋ = 1 → the single largest score.
        assert_eq!(global_threshold(&scores, 40.0).unwrap(), 0.5);
    }

    #[test]
    fn single_cohort_local_equals_global() {
        let scores = random_scores(50, 3);
        let cohorts = vec!["only".to_string(); 50];
        let locals = local_thresholds(&scores, &cohorts, 20.0).unwrap();
        assert_eq!(locals.len(), 1);
        assert_eq!(locals["only"], global_threshold(&scores, 20.0).unwrap());
    }

    #[test]
    fn local_effective_k_is_k_up_to_rounding() {
        // Distinct scores, uneven cohort sizes: per-cohort effective k
        // under the local threshold deviates from k by < 100/size.
        let sizes = [37usize, 120, 13, 60];
        let mut scores = Vec::new();
        let mut cohorts = Vec::new();
        for (c, &size) in sizes.iter().enumerate() {
            for i in 0..size {
                scores.push((c * 1000 + i) as f64 * 0.000_37 + c as f64); // distinct
                cohorts.push(format!("c{c}"));
            }
        }
        let locals = local_thresholds(&scores, &cohorts, 20.0).unwrap();
        for (c, &size) in sizes.iter().enumerate() {
            let thr = locals[&format!("c{c}")];
            let members: Vec<f64> = scores
                .iter()
                .zip(&cohorts)
                .filter(|(_, co)| **co == format!("c{c}"))
                .map(|(s, _)| *s)
                .collect();
            let ek = effective_k(&members, thr).unwrap();
            assert!(
                (ek - 20.0).abs() <= 100.0 / size as f64 + 1e-9,
                "cohort {c}: effective k {ek}"
            );
        }
    }

    #[test]
    fn cohort_without_positives_is_retained_with_undefined_recall() {
        let cohorts = ["a", "a", "a", "b", "b", "b"];
        let labels = [1, 0, 0, 0, 0, 0];
        let frame = cohort_frame(&cohorts, &labels);
        let scores = [0.9, 0.1, 0.2, 0.8, 0.3, 0.4];
        let report = cohort_eval(
            &frame,
            &scores,
            "District",
            ThresholdMode::Global,
            20.0,
            0,
            1,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        let b = report.rows.iter().find(|r| r.cohort == "b").unwrap();
        assert_eq!(b.positives, 0);
        assert!(b.recall.is_none());
        let a = report.rows.iter().find(|r| r.cohort == "a").unwrap();
        assert_eq!(a.recall, Some(1.0)); // global thr = 0.9, the positive row
    }

    #[test]
    fn global_mode_lets_effective_k_drift_and_local_fixes_it() {
        // Cohort `hot` owns all the top scores: global thresholding
        // targets far more than 20% of it, local targeting restores k.
        let mut cohorts = Vec::new();
        let mut labels = Vec::new();
        let mut scores = Vec::new();
        for i in 0..50 {
            cohorts.push("hot");
            labels.push(u8::from(i % 5 == 0));
            scores.push(0.9 + i as f64 * 1e-4);
        }
        for i in 0..150 {
            cohorts.push("cold");
            labels.push(u8::from(i % 5 == 0));
            scores.push(0.1 + i as f64 * 1e-4);
        }
        let frame = cohort_frame(&cohorts, &labels);
        let global =
            cohort_eval(&frame, &scores, "District", ThresholdMode::Global, 20.0, 0, 1)
                .unwrap();
        let hot = global.rows.iter().find(|r| r.cohort == "hot").unwrap();
        assert!(hot.effective_k > 60.0, "effective k {}", hot.effective_k);

        let local =
            cohort_eval(&frame, &scores, "District", ThresholdMode::Local, 20.0, 0, 1)
                .unwrap();
        for row in &local.rows {
            assert!(
                (row.effective_k - 20.0).abs() <= 100.0 / row.patients as f64 + 1e-9,
                "{}: {}",
                row.cohort,
                row.effective_k
            );
        }
    }

    #[test]
    fn homogeneous_cohorts_score_similarly_under_both_modes() {
        // All cohorts drawn from one distribution: global and local recall
        // land close together per cohort.
        let n = 1200;
        let scores = random_scores(n, 5);
        let labels: Vec<u8> = scores.iter().map(|&s| u8::from(s > 0.8)).collect();
        let cohorts: Vec<&str> = (0..n).map(|i| ["p", "q", "r"][i % 3]).collect();
        let frame = cohort_frame(&cohorts, &labels);
        let global =
            cohort_eval(&frame, &scores, "District", ThresholdMode::Global, 20.0, 0, 1)
                .unwrap();
        let local =
            cohort_eval(&frame, &scores, "District", ThresholdMode::Local, 20.0, 0, 1)
                .unwrap();
        for (g, l) in global.rows.iter().zip(&local.rows) {
            assert_eq!(g.cohort, l.cohort);
            let (gr, lr) = (g.recall.unwrap(), l.recall.unwrap());
            assert!((gr - lr).abs() < 0.08, "{}: global {gr} local {lr}", g.cohort);
        }
        // Partition property: cohort patients sum to the full register.
        assert_eq!(global.rows.iter().map(|r| r.patients).sum::<usize>(), n);
    }

    #[test]
    fn bootstrap_interval_brackets_point_recall() {
        let n = 300;
        let scores = random_scores(n, 9);
        let labels: Vec<u8> = scores.iter().map(|&s| u8::from(s > 0.7)).collect();
        let cohorts: Vec<&str> = vec!["only"; n];
        let frame = cohort_frame(&cohorts, &labels);
        let report = cohort_eval(
            &frame,
            &scores,
            "District",
            ThresholdMode::Global,
            20.0,
            200,
            11,
        )
        .unwrap();
        let row = &report.rows[0];
        let (lo, hi) = (row.ci_lo.unwrap(), row.ci_hi.unwrap());
        let r = row.recall.unwrap();
        assert!(lo <= r && r <= hi, "({lo}, {hi}) vs {r}");
        assert!(hi - lo < 0.5);
    }

    #[test]
    fn non_cohort_columns_are_rejected() {
        let frame = cohort_frame(&["a", "b"], &[0, 1]);
        let err = cohort_eval(
            &frame,
            &[0.1, 0.2],
            "LFU",
            ThresholdMode::Global,
            20.0,
            0,
            0,
        );
        assert!(err.is_err());
        let err = cohort_eval(
            &frame,
            &[0.1, 0.2],
            "Nope",
            ThresholdMode::Global,
            20.0,
            0,
            0,
        );
        assert!(err.is_err());
    }
}
