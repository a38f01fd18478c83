//! `fairness`: measure and mitigate cohort recall disparity.
//!
//! The evaluation split is cut at the pooled top-k% threshold and recall is
//! compared across the cohorts of one column, before and after one of three
//! mitigations:
//!
//! * `shifts` — per-cohort score offsets fitted on a held-out split and
//!   applied at scoring time (the model itself is untouched);
//! * `augment` — duplicate one cohort's training rows and refit;
//! * `reweigh` — log-inverse-frequency row weights and refit (boosted
//!   family only).
//!
//! The summary reports the max−min recall gap and the Gini coefficient of
//! per-cohort recalls before and after, plus overall recall so mitigation
//! cost is visible.

use serde::{Deserialize, Serialize};

use lfurisk_core::equity::{
    apply_shifts, augment_duplicate, fit_shifts, gini, reweigh_log_inverse,
};
use lfurisk_core::harness::{cohort_eval, fit_pipeline, CohortRow, ThresholdMode};
use lfurisk_core::metric::recall_at_k;
use lfurisk_core::util::str_salt;
use lfurisk_core::{Error, Frame, Result};

use crate::artifact::{cell_opt, Ctx};
use crate::commands::{load_pipeline, load_register, load_splits, FAIRNESS_SUMMARY};
use crate::config::Mitigation;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessCohortRow {
    pub cohort: String,
    pub patients: usize,
    pub positives: usize,
    pub recall_before: Option<f64>,
    pub recall_after: Option<f64>,
    /// Additive score offset for this cohort (shifts mitigation only).
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessSummary {
    pub mitigation: String,
    pub cohort_column: String,
    pub split: String,
    /// Split the mitigation was fitted on (shifts) or refitted from
    /// (augment/reweigh).
    pub fit_split: String,
    pub k: f64,
    pub tolerance: Option<f64>,
    pub copies: Option<usize>,
    pub target_category: Option<String>,
    pub gap_before: f64,
    pub gap_after: f64,
    pub gini_before: Option<f64>,
    pub gini_after: Option<f64>,
    pub overall_before: f64,
    pub overall_after: f64,
    pub rows: Vec<FairnessCohortRow>,
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let art = load_pipeline(ctx)?;
    let section = &ctx.config.fairness;
    let column = section.cohort_column.clone();
    if column.is_empty() {
        return Err(Error::config(
            "fairness.cohort_column is empty: set the column whose cohorts to balance",
        ));
    }
    let k = ctx.config.metrics.k;

    let sub = splits.frame(&frame, &section.split)?;
    let labels = sub.labels()?;
    let scores_before = art.pipeline.score(&sub)?;
    let before = global_cohort_rows(ctx, &sub, &scores_before, &column)?;
    let overall_before = recall_at_k(&scores_before, labels, k)?;

    let (scores_after, fit_split, target_category, shifts) = match section.mitigation {
        Mitigation::Shifts => {
            let holdout = splits.frame(&frame, &section.holdout)?;
            let h_scores = art.pipeline.score(&holdout)?;
            let h_labels = holdout.labels()?;
            let h_cohorts = holdout.cohort_tokens(&column)?;
            let table = fit_shifts(&h_scores, h_labels, &h_cohorts, k, section.tolerance)?
                .with_holdout(section.holdout.clone());
            let eval_cohorts = sub.cohort_tokens(&column)?;
            let shifted = apply_shifts(&scores_before, &eval_cohorts, &table)?;
            ctx.write_json("fairness.shifts.json", &table)?;
            (shifted, section.holdout.clone(), None, Some(table))
        }
        Mitigation::Augment => {
            splits.guard_training(&art.split)?;
            let train = splits.frame(&frame, &art.split)?;
            let target = if section.augment_category.is_empty() {
                worst_cohort(ctx, &splits.frame(&frame, &section.holdout)?, &art, &column)?
            } else {
                section.augment_category.clone()
            };
            log::info!(
                "fairness: duplicating cohort `{target}` of `{column}` x{} and refitting",
                section.copies
            );
            let augmented = augment_duplicate(&train, &column, &target, section.copies)?;
            let refit = fit_pipeline(
                &augmented,
                art.encoder,
                art.family,
                &art.params,
                &ctx.config.selection_config(),
                None,
            )?;
            (refit.score(&sub)?, art.split.clone(), Some(target), None)
        }
        Mitigation::Reweigh => {
            splits.guard_training(&art.split)?;
            let train = splits.frame(&frame, &art.split)?;
            let weights = reweigh_log_inverse(&train, &column)?;
            let refit = fit_pipeline(
                &train,
                art.encoder,
                art.family,
                &art.params,
                &ctx.config.selection_config(),
                Some(&weights),
            )?;
            (refit.score(&sub)?, art.split.clone(), None, None)
        }
    };

    let after = global_cohort_rows(ctx, &sub, &scores_after, &column)?;
    let overall_after = recall_at_k(&scores_after, labels, k)?;

    let mut rows = Vec::with_capacity(before.len());
    for row in &before {
        let after_row = after.iter().find(|a| a.cohort == row.cohort);
        rows.push(FairnessCohortRow {
            cohort: row.cohort.clone(),
            patients: row.patients,
            positives: row.positives,
            recall_before: row.recall,
            recall_after: after_row.and_then(|a| a.recall),
            shift: shifts.as_ref().map(|t| t.shift(&row.cohort)),
        });
    }

    let summary = FairnessSummary {
        mitigation: section.mitigation.as_str().to_string(),
        cohort_column: column.clone(),
        split: section.split.clone(),
        fit_split: fit_split.clone(),
        k,
        tolerance: matches!(section.mitigation, Mitigation::Shifts).then_some(section.tolerance),
        copies: matches!(section.mitigation, Mitigation::Augment).then_some(section.copies),
        target_category,
        gap_before: recall_gap(&rows, |r| r.recall_before),
        gap_after: recall_gap(&rows, |r| r.recall_after),
        gini_before: gini_of(&rows, |r| r.recall_before),
        gini_after: gini_of(&rows, |r| r.recall_after),
        overall_before,
        overall_after,
        rows,
    };

    let mut table = ctx.table(
        "fairness.cohorts.csv",
        &["cohort", "patients", "positives", "recall_before", "recall_after", "shift"],
    )?;
    for row in &summary.rows {
        table.row(&[
            row.cohort.clone(),
            row.patients.to_string(),
            row.positives.to_string(),
            cell_opt(row.recall_before),
            cell_opt(row.recall_after),
            cell_opt(row.shift),
        ])?;
    }
    table.finish()?;
    ctx.write_json(FAIRNESS_SUMMARY, &summary)?;

    println!(
        "fairness: `{}` on `{column}`: recall gap {:.4} -> {:.4}, overall {:.4} -> {:.4}",
        summary.mitigation, summary.gap_before, summary.gap_after, overall_before, overall_after,
    );
    Ok(())
}

/// Per-cohort recall at the pooled global threshold, no intervals.
fn global_cohort_rows(
    ctx: &Ctx,
    frame: &Frame,
    scores: &[f64],
    column: &str,
) -> Result<Vec<CohortRow>> {
    let seed = ctx.config.seed ^ str_salt("fairness-cohorts");
    let report = cohort_eval(
        frame,
        scores,
        column,
        ThresholdMode::Global,
        ctx.config.metrics.k,
        0,
        seed,
    )?;
    Ok(report.rows)
}

/// The holdout cohort with the lowest defined recall; ties keep the first
/// in cohort order.
fn worst_cohort(
    ctx: &Ctx,
    holdout: &Frame,
    art: &crate::commands::TrainArtifact,
    column: &str,
) -> Result<String> {
    let scores = art.pipeline.score(holdout)?;
    let rows = global_cohort_rows(ctx, holdout, &scores, column)?;
    let mut worst: Option<(&str, f64)> = None;
    for row in &rows {
        if let Some(recall) = row.recall {
            if worst.map_or(true, |(_, w)| recall < w) {
                worst = Some((&row.cohort, recall));
            }
        }
    }
    match worst {
        Some((cohort, recall)) => {
            log::info!(
                "fairness: worst `{column}` cohort on `{}`: `{cohort}` (recall {recall:.4})",
                ctx.config.fairness.holdout
            );
            Ok(cohort.to_string())
        }
        None => Err(Error::data(format!(
            "fairness: no cohort of `{column}` has positives on split `{}`",
            ctx.config.fairness.holdout
        ))),
    }
}

fn recall_gap(rows: &[FairnessCohortRow], get: impl Fn(&FairnessCohortRow) -> Option<f64>) -> f64 {
    let defined: Vec<f64> = rows.iter().filter_map(get).collect();
    if defined.len() < 2 {
        return 0.0;
    }
    let max = defined.iter().copied().fold(f64::MIN, f64::max);
    let min = defined.iter().copied().fold(f64::MAX, f64::min);
    max - min
}

fn gini_of(
    rows: &[FairnessCohortRow],
    get: impl Fn(&FairnessCohortRow) -> Option<f64>,
) -> Option<f64> {
    let defined: Vec<f64> = rows.iter().filter_map(get).collect();
    gini(&defined).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cohort: &str, recall_before: Option<f64>, recall_after: Option<f64>) -> FairnessCohortRow {
        FairnessCohortRow {
            cohort: cohort.to_string(),
            patients: 10,
            positives: 2,
            recall_before,
            recall_after,
            shift: None,
        }
    }

    #[test]
    fn gap_ignores_undefined_recalls() {
        let rows = vec![
            row("a", Some(0.9), Some(0.8)),
            row("b", None, Some(0.6)),
            row("c", Some(0.3), Some(0.7)),
        ];
        assert!((recall_gap(&rows, |r| r.recall_before) - 0.6).abs() < 1e-12);
        let after = recall_gap(&rows, |r| r.recall_after);
        assert!((after - 0.2).abs() < 1e-12);
    }

    #[test]
    fn gap_needs_two_defined_cohorts() {
        let rows = vec![row("a", Some(0.9), None), row("b", None, None)];
        assert_eq!(recall_gap(&rows, |r| r.recall_before), 0.0);
        assert_eq!(recall_gap(&rows, |r| r.recall_after), 0.0);
    }
}
