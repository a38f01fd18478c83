//! Cohort-level performance repair and inequality summaries.
//!
//! A model that clears the portfolio-level bar can still under-serve
//! individual districts or facilities. Three repairs, in increasing order
//! of distance from the model: [`augment_duplicate`] oversamples one
//! cohort's rows before refitting, [`reweigh_log_inverse`] turns cohort
//! frequency into per-row weights for weight-aware learners, and
//! [`fit_shifts`] leaves the model alone and nudges each cohort's scores
//! so that a single global top-k% cutoff catches positives at roughly the
//! same rate everywhere. [`gini`] summarizes cross-cohort inequality of
//! any per-cohort metric before and after repair.
//!
//! Shift tables must be fitted on a holdout that is disjoint from — and
//! chronologically earlier than — the rows they are later applied to;
//! [`ShiftTable`] carries the holdout id so reports can prove it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::harness::global_threshold;

/// Default number of extra copies per matching row in augmentation.
pub const DEFAULT_COPIES: usize = 10;

/// Default absolute recall-gap tolerance for shift fitting.
pub const DEFAULT_TOLERANCE: f64 = 0.02;

/// Shifts are confined to this symmetric interval around zero.
const SHIFT_LIMIT: f64 = 0.5;
/// Coordinate-search step schedule: halved from start until below floor.
const STEP_START: f64 = 0.1;
const STEP_FLOOR: f64 = 1e-4;
/// Hard cap on round-robin sweeps over the cohorts.
const MAX_SWEEPS: usize = 100;

/// Per-cohort additive score adjustments plus fitting provenance.
///
/// Cohorts absent from the table shift by zero, so the empty table is the
/// identity. Apply with [`apply_shifts`]; scores clip back into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftTable {
    shifts: BTreeMap<String, f64>,
    /// Identifier of the holdout slice the table was fitted on.
    holdout: String,
    /// Top-k% target the fit equalized recall at.
    k: f64,
    /// Recall-gap tolerance the fit stopped at.
    tolerance: f64,
}

impl ShiftTable {
    /// The all-zero table: applying it returns scores unchanged.
    pub fn identity() -> Self {
        ShiftTable {
            shifts: BTreeMap::new(),
            holdout: String::new(),
            k: 0.0,
            tolerance: 0.0,
        }
    }

    /// Shift for a cohort; unknown cohorts shift by zero.
    pub fn shift(&self, cohort: &str) -> f64 {
        self.shifts.get(cohort).copied().unwrap_or(0.0)
    }

    pub fn shifts(&self) -> &BTreeMap<String, f64> {
        &self.shifts
    }

    pub fn holdout(&self) -> &str {
        &self.holdout
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Label the holdout slice the table was fitted on (for provenance in
    /// downstream reports).
    pub fn with_holdout(mut self, id: impl Into<String>) -> Self {
        self.holdout = id.into();
        self
    }
}

/// Append `n` extra copies of every row whose `cohort_column` cell equals
/// `category`. Output order is stable: all originals first, then the
/// matching block repeated `n` times.
///
/// For learners whose fitted statistics are linear in sample weight, this
/// is equivalent to weighting the matching rows by `n + 1`.
pub fn augment_duplicate(
    train: &Frame,
    cohort_column: &str,
    category: &str,
    n: usize,
) -> Result<Frame> {
    let tokens = train.cohort_tokens(cohort_column)?;
    let matching: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.as_str() == category)
        .map(|(row, _)| row)
        .collect();
    if matching.is_empty() {
        return Err(Error::config(format!(
            "augment: category `{category}` absent from column `{cohort_column}`"
        )));
    }
    let mut rows: Vec<usize> = (0..train.n_rows()).collect();
    for _ in 0..n {
        rows.extend_from_slice(&matching);
    }
    Ok(train.take_rows(&rows))
}

/// Per-row weight `ln(N / N_d)` where `N` is the register size and `N_d`
/// the size of the row's cohort: rare cohorts weigh more. A single-cohort
/// register is rejected because every weight would be `ln 1 = 0`.
pub fn reweigh_log_inverse(train: &Frame, cohort_column: &str) -> Result<Vec<f64>> {
    let tokens = train.cohort_tokens(cohort_column)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    if counts.len() < 2 {
        return Err(Error::data(format!(
            "reweigh: column `{cohort_column}` has a single cohort; \
             every weight would be ln(N/N) = 0"
        )));
    }
    let n = train.n_rows() as f64;
    Ok(tokens
        .iter()
        .map(|t| (n / counts[t.as_str()] as f64).ln())
        .collect())
}

/// Fit per-cohort score shifts that equalize cohort Recall@global-k%.
///
/// Coordinate search: shifts start at zero, and cohorts are visited
/// round-robin in sorted order. Each visit tries moving the cohort's
/// shift by ± the current step (clamped to ±0.5) and keeps a move only
/// when it strictly reduces the max pairwise recall gap, so the gap never
/// increases on the fitting data. The step halves from 0.1 after every
/// sweep without improvement and the search stops at gap ≤ `tolerance`,
/// step < 1e-4, or 100 sweeps. The global threshold is recomputed from
/// the shifted scores at every evaluation, exactly as deployment would.
///
/// Cohorts without a positive have undefined recall; they are left at
/// zero shift (with a warning) but still move with the pooled threshold.
pub fn fit_shifts(
    scores: &[f64],
    labels: &[u8],
    cohorts: &[String],
    k: f64,
    tolerance: f64,
) -> Result<ShiftTable> {
    if scores.len() != labels.len() || scores.len() != cohorts.len() {
        return Err(Error::data(format!(
            "fit_shifts: {} scores, {} labels, {} cohort ids",
            scores.len(),
            labels.len(),
            cohorts.len()
        )));
    }
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::config(format!("fit_shifts: bad tolerance {tolerance}")));
    }
    // Validates emptiness, k range, and score finiteness.
    global_threshold(scores, k)?;

    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (row, c) in cohorts.iter().enumerate() {
        groups.entry(c.clone()).or_default().push(row);
    }
    let mut eligible: Vec<(String, Vec<usize>)> = Vec::new();
    for (cohort, members) in groups {
        if members.iter().any(|&r| labels[r] == 1) {
            eligible.push((cohort, members));
        } else {
            log::warn!("fit_shifts: cohort `{cohort}` has no positives; left unshifted");
        }
    }

    let mut shifts: BTreeMap<String, f64> =
        eligible.iter().map(|(c, _)| (c.clone(), 0.0)).collect();
    let table = |shifts: &BTreeMap<String, f64>| ShiftTable {
        shifts: shifts.clone(),
        holdout: String::new(),
        k,
        tolerance,
    };
    if eligible.len() < 2 {
        return Ok(table(&shifts));
    }

    let gap = |shifts: &BTreeMap<String, f64>| -> Result<f64> {
        let shifted = apply_shifts(scores, cohorts, &table(shifts))?;
        let threshold = global_threshold(&shifted, k)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, members) in &eligible {
            let mut caught = 0usize;
            let mut positives = 0usize;
            for &r in members {
                if labels[r] == 1 {
                    positives += 1;
                    if shifted[r] >= threshold {
                        caught += 1;
                    }
                }
            }
            let recall = caught as f64 / positives as f64;
            lo = lo.min(recall);
            hi = hi.max(recall);
        }
        Ok(hi - lo)
    };

    let mut best = gap(&shifts)?;
    let mut step = STEP_START;
    for _ in 0..MAX_SWEEPS {
        if best <= tolerance || step < STEP_FLOOR {
            break;
        }
        let mut improved = false;
        for (cohort, _) in &eligible {
            let current = shifts[cohort];
            for candidate in [current + step, current - step] {
                let candidate = candidate.clamp(-SHIFT_LIMIT, SHIFT_LIMIT);
                if candidate == current {
                    continue;
                }
                shifts.insert(cohort.clone(), candidate);
                let trial = gap(&shifts)?;
                if trial < best {
                    best = trial;
                    improved = true;
                    break;
                }
                shifts.insert(cohort.clone(), current);
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(table(&shifts))
}

/// `score_i + shift(cohort_i)`, clipped back into [0, 1]. Cohorts absent
/// from the table shift by zero.
pub fn apply_shifts(scores: &[f64], cohorts: &[String], table: &ShiftTable) -> Result<Vec<f64>> {
    if scores.len() != cohorts.len() {
        return Err(Error::data(format!(
            "apply_shifts: {} scores vs {} cohort ids",
            scores.len(),
            cohorts.len()
        )));
    }
    Ok(scores
        .iter()
        .zip(cohorts)
        .map(|(&s, c)| (s + table.shift(c)).clamp(0.0, 1.0))
        .collect())
}

/// Gini coefficient `Σ_i Σ_j |v_i − v_j| / (2 n² v̄)` of a per-cohort
/// metric: 0 means perfect equality, values approach 1 as one cohort
/// holds everything. Inputs must be non-negative with a positive mean.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::data("gini: no values"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::data(format!("gini: bad value {bad}")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::data("gini: all values are zero"));
    }
    let mut spread = 0.0;
    for &a in values {
        for &b in values {
            spread += (a - b).abs();
        }
    }
    Ok(spread / (2.0 * n * n * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::Matrix;
    use crate::frame::{CategoricalColumn, ColumnData, ColumnKind, ColumnSpec, Schema};
    use crate::metric::{av_recall, recall_at_k};
    use crate::model::{fit_boosted, BoostHParams};
    use crate::util::{str_salt, sub_rng};
    use rand::Rng;

    fn district_frame(districts: &[&str], xs: &[f64], labels: &[u8]) -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("District", ColumnKind::Categorical),
                ColumnSpec::new("x", ColumnKind::Numeric),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Categorical(CategoricalColumn::from_tokens(
                    districts.iter().map(|d| Some(*d)),
                )),
                ColumnData::Numeric(xs.iter().map(|&x| Some(x)).collect()),
                ColumnData::Label(labels.to_vec()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn augmentation_appends_stable_copies() {
        let districts = ["D1", "D2", "D1", "D2", "D2", "D1"];
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let labels = [1, 0, 0, 1, 0, 1];
        let frame = district_frame(&districts, &xs, &labels);

        // 3 matching rows, N = 10 → n grows by 30.
        let out = augment_duplicate(&frame, "District", "D1", 10).unwrap();
        assert_eq!(out.n_rows(), 6 + 30);

        // Originals first, in order.
        let x = out.column_by_name("x").unwrap().as_numeric().unwrap();
        for (i, &expect) in xs.iter().enumerate() {
            assert_eq!(x[i], Some(expect));
        }
        // Copies carry identical features and labels, cycling through the
        // matching block (rows 0, 2, 5) in stable order.
        let tokens = out.cohort_tokens("District").unwrap();
        let out_labels = out.labels().unwrap();
        for (j, &(xv, y)) in [(1.0, 1u8), (3.0, 0), (6.0, 1)].iter().cycle().take(30).enumerate() {
            let row = 6 + j;
            assert_eq!(tokens[row], "D1");
            assert_eq!(x[row], Some(xv));
            assert_eq!(out_labels[row], y);
        }
    }

    #[test]
    fn zero_copies_is_identity_and_absent_category_rejected() {
        let frame = district_frame(&["D1", "D2"], &[1.0, 2.0], &[1, 0]);
        let same = augment_duplicate(&frame, "District", "D2", 0).unwrap();
        assert_eq!(same.n_rows(), 2);
        assert_eq!(same.cohort_tokens("District").unwrap(), frame.cohort_tokens("District").unwrap());

        let err = augment_duplicate(&frame, "District", "D9", 5).unwrap_err();
        assert!(err.to_string().contains("absent"));
    }

    #[test]
    fn duplication_equals_row_weights_for_the_booster() {
        // Weight-linearity check in a regime where every partial sum is a
        // short dyadic rational, so float addition order cannot matter:
        // both fits see weighted prevalence exactly 1/2 (base margin 0,
        // p = 1/2 exactly) and the weights are powers of two.
        let districts =
            ["D1", "D1", "D2", "D2", "D2", "D2", "D2", "D2", "D2", "D2"];
        let xs = [0.5, 9.5, 1.0, 2.0, 3.0, 4.0, 6.0, 7.0, 8.0, 9.0];
        let labels = [1u8, 0, 1, 1, 1, 0, 0, 1, 0, 0];
        let frame = district_frame(&districts, &xs, &labels);

        // Σw = 2·4 + 8 = 16, Σwy = 4 + 4 = 8 → prevalence exactly 1/2.
        let augmented = augment_duplicate(&frame, "District", "D1", 3).unwrap();
        assert_eq!(augmented.n_rows(), 16);
        assert_eq!(augmented.positives().unwrap(), 8);

        let matrix_of = |f: &Frame| {
            let col = f.column_by_name("x").unwrap().as_numeric().unwrap();
            let vals: Vec<f64> = col.iter().map(|v| v.unwrap()).collect();
            Matrix::from_columns(vec!["x".into()], vec![vals]).unwrap()
        };
        let hp = BoostHParams {
            n_estimators: 1,
            max_depth: 2,
            learning_rate: 0.5,
            l2: 1.0,
            ..BoostHParams::default()
        };
        let dup = fit_boosted(
            &matrix_of(&augmented),
            augmented.labels().unwrap(),
            None,
            &hp,
        )
        .unwrap();
        let weights: Vec<f64> =
            districts.iter().map(|&d| if d == "D1" { 4.0 } else { 1.0 }).collect();
        let weighted = fit_boosted(&matrix_of(&frame), &labels, Some(&weights), &hp).unwrap();

        let probe = matrix_of(&frame);
        assert_eq!(dup.predict_matrix(&probe).unwrap(), weighted.predict_matrix(&probe).unwrap());
    }

    #[test]
    fn reweighing_matches_hand_arithmetic() {
        // Two cohorts 50/50 → every weight ln 2.
        let even: Vec<&str> = (0..100).map(|i| if i < 50 { "A" } else { "B" }).collect();
        let frame = district_frame(&even, &vec![0.0; 100], &vec![0u8; 100]);
        let w = reweigh_log_inverse(&frame, "District").unwrap();
        assert!(w.iter().all(|&wi| wi == 2.0f64.ln()));

        // 90/10 → ln(100/90) for the majority, ln 10 for the minority.
        let skew: Vec<&str> = (0..100).map(|i| if i < 90 { "A" } else { "B" }).collect();
        let frame = district_frame(&skew, &vec![0.0; 100], &vec![0u8; 100]);
        let w = reweigh_log_inverse(&frame, "District").unwrap();
        assert_eq!(w[0], (100.0f64 / 90.0).ln());
        assert_eq!(w[99], 10.0f64.ln());

        // Single cohort → degenerate all-zero weights → error.
        let solo = district_frame(&["A", "A"], &[0.0, 0.0], &[0, 0]);
        assert!(reweigh_log_inverse(&solo, "District").is_err());
    }

    #[test]
    fn symmetric_cohorts_need_no_shift() {
        // Identical score/label multisets per cohort: gap already 0.
        let scores = [0.9, 0.7, 0.4, 0.2, 0.9, 0.7, 0.4, 0.2];
        let labels = [1, 1, 0, 0, 1, 1, 0, 0];
        let cohorts: Vec<String> =
            ["A", "A", "A", "A", "B", "B", "B", "B"].iter().map(|s| s.to_string()).collect();
        let table = fit_shifts(&scores, &labels, &cohorts, 50.0, DEFAULT_TOLERANCE).unwrap();
        assert!(table.shifts().values().all(|&s| s == 0.0));
    }

    #[test]
    fn single_cohort_gets_zero_shift() {
        let scores = [0.9, 0.5, 0.1];
        let labels = [1, 0, 1];
        let cohorts = vec!["only".to_string(); 3];
        let table = fit_shifts(&scores, &labels, &cohorts, 50.0, 0.0).unwrap();
        assert_eq!(table.shift("only"), 0.0);
    }

    /// Scores informative in both cohorts, but cohort B's are deflated so
    /// the pooled top-k% cutoff almost only targets cohort A.
    fn planted_imbalance(seed: u64) -> (Vec<f64>, Vec<u8>, Vec<String>) {
        let mut rng = sub_rng(seed, str_salt("planted-imbalance"));
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        let mut cohorts = Vec::new();
        for i in 0..400 {
            let cohort = if i % 2 == 0 { "A" } else { "B" };
            let y = u8::from(rng.gen::<f64>() < 0.25);
            let base = 0.35 + 0.35 * f64::from(y) + 0.2 * rng.gen::<f64>();
            let score = if cohort == "A" { base } else { base * 0.5 };
            scores.push(score);
            labels.push(y);
            cohorts.push(cohort.to_string());
        }
        (scores, labels, cohorts)
    }

    fn cohort_recalls(
        scores: &[f64],
        labels: &[u8],
        cohorts: &[String],
        k: f64,
    ) -> Vec<f64> {
        let threshold = global_threshold(scores, k).unwrap();
        let mut out = Vec::new();
        for name in ["A", "B"] {
            let mut caught = 0;
            let mut positives = 0;
            for ((&s, &y), c) in scores.iter().zip(labels).zip(cohorts) {
                if c == name && y == 1 {
                    positives += 1;
                    if s >= threshold {
                        caught += 1;
                    }
                }
            }
            out.push(caught as f64 / positives as f64);
        }
        out
    }

    #[test]
    fn planted_imbalance_gap_and_gini_shrink_after_shifting() {
        let (scores, labels, cohorts) = planted_imbalance(11);
        let before = cohort_recalls(&scores, &labels, &cohorts, 20.0);
        let gap_before = (before[0] - before[1]).abs();
        assert!(gap_before > 0.3, "planted gap too small: {gap_before}");

        let table = fit_shifts(&scores, &labels, &cohorts, 20.0, DEFAULT_TOLERANCE).unwrap();
        let shifted = apply_shifts(&scores, &cohorts, &table).unwrap();
        let after = cohort_recalls(&shifted, &labels, &cohorts, 20.0);
        let gap_after = (after[0] - after[1]).abs();

        assert!(
            gap_after < gap_before,
            "gap did not shrink: {gap_before} -> {gap_after}"
        );
        assert!(gini(&after).unwrap() < gini(&before).unwrap());
    }

    #[test]
    fn fitting_never_worsens_the_gap_on_its_own_holdout() {
        for seed in 0..5 {
            let (scores, labels, cohorts) = planted_imbalance(seed);
            let before = cohort_recalls(&scores, &labels, &cohorts, 20.0);
            let table = fit_shifts(&scores, &labels, &cohorts, 20.0, 0.0).unwrap();
            let shifted = apply_shifts(&scores, &cohorts, &table).unwrap();
            let after = cohort_recalls(&shifted, &labels, &cohorts, 20.0);
            assert!(
                (after[0] - after[1]).abs() <= (before[0] - before[1]).abs() + 1e-12,
                "seed {seed}: gap increased"
            );
        }
    }

    #[test]
    fn zero_table_is_identity_and_uniform_shift_preserves_ranks() {
        let scores: Vec<f64> = (0..40).map(|i| 0.02 + 0.017 * i as f64).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 5 == 0)).collect();
        let cohorts: Vec<String> =
            (0..40).map(|i| if i % 2 == 0 { "A".into() } else { "B".into() }).collect();

        let same = apply_shifts(&scores, &cohorts, &ShiftTable::identity()).unwrap();
        assert_eq!(same, scores);

        // A constant shift on every cohort changes no rank metric (scores
        // stay below 1 so clipping never engages).
        let mut uniform = ShiftTable::identity();
        uniform.shifts.insert("A".into(), 0.2);
        uniform.shifts.insert("B".into(), 0.2);
        let shifted = apply_shifts(&scores, &cohorts, &uniform).unwrap();
        assert_eq!(
            recall_at_k(&shifted, &labels, 20.0).unwrap(),
            recall_at_k(&scores, &labels, 20.0).unwrap()
        );
        assert_eq!(
            av_recall(&shifted, &labels, 10, 40).unwrap(),
            av_recall(&scores, &labels, 10, 40).unwrap()
        );
    }

    #[test]
    fn hand_case_shift_flips_one_patient_across_the_cutoff() {
        // k=50 over 6 rows → m=3, threshold = 3rd largest shifted score.
        // All values are dyadic so additions below are exact.
        let scores = [0.875, 0.75, 0.5, 0.4375, 0.25, 0.125];
        let labels = [1u8, 0, 0, 1, 0, 0];
        let cohorts: Vec<String> =
            ["A", "A", "A", "B", "B", "B"].iter().map(|s| s.to_string()).collect();

        // Unshifted: threshold 0.5 targets {0.875, 0.75, 0.5} → B's
        // positive at 0.4375 is missed.
        let t0 = global_threshold(&scores, 50.0).unwrap();
        assert_eq!(t0, 0.5);
        assert_eq!(recall_at_threshold_brute(&scores, &labels, t0), (1.0, 0.0));

        // Shift B by +0.125: its positive moves to 0.5625, displacing
        // A's 0.5 from the targeted set.
        let mut table = ShiftTable::identity();
        table.shifts.insert("B".into(), 0.125);
        let shifted = apply_shifts(&scores, &cohorts, &table).unwrap();
        assert_eq!(shifted, vec![0.875, 0.75, 0.5, 0.5625, 0.375, 0.25]);
        let t1 = global_threshold(&shifted, 50.0).unwrap();
        assert_eq!(t1, 0.5625);
        assert_eq!(recall_at_threshold_brute(&shifted, &labels, t1), (1.0, 1.0));
    }

    /// (cohort-A recall, cohort-B recall) by direct enumeration; rows
    /// 0..3 are cohort A, rows 3..6 cohort B, one positive in each.
    fn recall_at_threshold_brute(scores: &[f64], labels: &[u8], threshold: f64) -> (f64, f64) {
        let caught = |range: std::ops::Range<usize>| {
            let mut hit = 0.0;
            let mut pos = 0.0;
            for r in range {
                if labels[r] == 1 {
                    pos += 1.0;
                    if scores[r] >= threshold {
                        hit += 1.0;
                    }
                }
            }
            hit / pos
        };
        (caught(0..3), caught(3..6))
    }

    #[test]
    fn gini_matches_hand_values() {
        assert_eq!(gini(&[0.4, 0.4, 0.4]).unwrap(), 0.0);
        // |0−1| + |1−0| = 2 over 2·n²·mean = 2·4·0.5 = 4 → 0.5.
        assert_eq!(gini(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(gini(&[]).is_err());
        assert!(gini(&[0.0, 0.0]).is_err());
        assert!(gini(&[0.3, -0.1]).is_err());
    }

    #[test]
    fn shift_table_round_trips_through_json() {
        let (scores, labels, cohorts) = planted_imbalance(2);
        let table = fit_shifts(&scores, &labels, &cohorts, 20.0, DEFAULT_TOLERANCE)
            .unwrap()
            .with_holdout("val");
        let json = serde_json::to_string(&table).unwrap();
        let back: ShiftTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.holdout(), "val");
    }
}
