//! `cohorts`: per-cohort recall under global and local deployment
//! thresholds.
//!
//! For each configured cohort column the evaluation split is scored once,
//! then cut two ways: a single pooled top-k% threshold (global) and a
//! per-cohort top-k% threshold (local). The contrast shows which cohorts a
//! pooled cutoff under-serves and what a budget-preserving local policy
//! would change.

use std::collections::BTreeMap;

use lfurisk_core::harness::{cohort_eval, CohortReport, ThresholdMode};
use lfurisk_core::util::str_salt;
use lfurisk_core::{Error, Result};

use crate::artifact::{cell_opt, slug, Ctx};
use crate::commands::{load_pipeline, load_register, load_splits, COHORTS_REPORT};

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let art = load_pipeline(ctx)?;
    let section = &ctx.config.cohorts;
    if section.columns.is_empty() {
        return Err(Error::config(
            "cohorts.columns is empty: list at least one cohort column",
        ));
    }
    let mut seen = BTreeMap::new();
    for column in &section.columns {
        if let Some(other) = seen.insert(slug(column), column) {
            return Err(Error::config(format!(
                "cohorts.columns `{other}` and `{column}` collide on output name \
                 `cohorts.{}.csv`",
                slug(column)
            )));
        }
    }

    let sub = splits.frame(&frame, &section.split)?;
    let scores = art.pipeline.score(&sub)?;
    let m = &ctx.config.metrics;

    let mut reports: Vec<CohortReport> = Vec::new();
    for column in &section.columns {
        let mut table = ctx.table(
            &format!("cohorts.{}.csv", slug(column)),
            &[
                "mode",
                "cohort",
                "patients",
                "positives",
                "threshold",
                "recall",
                "effective_k",
                "ci_lo",
                "ci_hi",
            ],
        )?;
        for mode in [ThresholdMode::Global, ThresholdMode::Local] {
            let seed = ctx.config.seed ^ str_salt(column) ^ str_salt(mode.as_str());
            let report = cohort_eval(&sub, &scores, column, mode, m.k, section.ci_b, seed)?;
            for row in &report.rows {
                table.row(&[
                    mode.as_str().to_string(),
                    row.cohort.clone(),
                    row.patients.to_string(),
                    row.positives.to_string(),
                    row.threshold.to_string(),
                    cell_opt(row.recall),
                    row.effective_k.to_string(),
                    cell_opt(row.ci_lo),
                    cell_opt(row.ci_hi),
                ])?;
            }
            reports.push(report);
        }
        table.finish()?;
    }

    ctx.write_json(COHORTS_REPORT, &reports)?;

    println!(
        "cohorts: split `{}`, k = {}: {} column(s) x global+local thresholds",
        section.split,
        m.k,
        section.columns.len()
    );
    Ok(())
}
