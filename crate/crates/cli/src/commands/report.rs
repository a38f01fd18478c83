//! `report`: flatten every available analysis artifact into review tables.
//!
//! Requires the evaluation report; everything else (selection, cohorts,
//! fairness, multiplicity, importance) is folded in when present and listed
//! as skipped when not, so a minimal run still produces a readable bundle.
//! All tables are plain CSV with the run stamp; `report.manifest.json`
//! records what was written.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lfurisk_core::harness::SelectionOutcome;
use lfurisk_core::multiplicity::MultiplicityReport;
use lfurisk_core::Result;

use crate::artifact::{cell_opt, Ctx};
use crate::commands::evaluate::EvalReport;
use crate::commands::fairness::FairnessSummary;
use crate::commands::{
    COHORTS_REPORT, EVALUATE_REPORT, FAIRNESS_SUMMARY, IMPORTANCE_REPORT, MULTIPLICITY_REPORT,
    SELECT_OUTCOME,
};
use lfurisk_core::explain::ImportanceReport;
use lfurisk_core::harness::CohortReport;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportManifest {
    pub tables: Vec<String>,
    pub skipped: Vec<String>,
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut manifest = ReportManifest { tables: Vec::new(), skipped: Vec::new() };

    let eval: EvalReport = ctx.read_json(EVALUATE_REPORT)?;
    write_overall(ctx, &eval, &mut manifest)?;

    if let Some(outcome) = optional::<SelectionOutcome>(ctx, SELECT_OUTCOME, &mut manifest)? {
        write_selection(ctx, &outcome, &mut manifest)?;
    }
    if let Some(reports) = optional::<Vec<CohortReport>>(ctx, COHORTS_REPORT, &mut manifest)? {
        write_cohorts(ctx, &reports, &mut manifest)?;
    }
    if let Some(summary) = optional::<FairnessSummary>(ctx, FAIRNESS_SUMMARY, &mut manifest)? {
        write_fairness(ctx, &summary, &mut manifest)?;
    }
    if let Some(report) =
        optional::<MultiplicityReport>(ctx, MULTIPLICITY_REPORT, &mut manifest)?
    {
        write_multiplicity(ctx, &report, &mut manifest)?;
    }
    if let Some(importance) = optional::<ImportanceReport>(ctx, IMPORTANCE_REPORT, &mut manifest)?
    {
        write_importance(ctx, &importance, &mut manifest)?;
    }

    ctx.write_json("report.manifest.json", &manifest)?;
    println!(
        "report: {} table(s) written, {} artifact(s) absent",
        manifest.tables.len(),
        manifest.skipped.len()
    );
    Ok(())
}

fn optional<T: DeserializeOwned>(
    ctx: &Ctx,
    name: &str,
    manifest: &mut ReportManifest,
) -> Result<Option<T>> {
    if ctx.exists(name) {
        Ok(Some(ctx.read_json(name)?))
    } else {
        log::info!("report: `{name}` not present; skipping its tables");
        manifest.skipped.push(name.to_string());
        Ok(None)
    }
}

fn write_overall(ctx: &Ctx, eval: &EvalReport, manifest: &mut ReportManifest) -> Result<()> {
    let mut overall = ctx.table(
        "report.overall.csv",
        &[
            "method",
            "recall_at_k",
            "av_recall",
            "auc_roc",
            "auc_pr",
            "recall_ci_lo",
            "recall_ci_hi",
        ],
    )?;
    for row in &eval.methods {
        overall.row(&[
            row.method.clone(),
            row.recall_at_k.to_string(),
            row.av_recall.to_string(),
            row.auc_roc.to_string(),
            row.auc_pr.to_string(),
            cell_opt(row.recall_ci.map(|(lo, _)| lo)),
            cell_opt(row.recall_ci.map(|(_, hi)| hi)),
        ])?;
    }
    overall.finish()?;
    manifest.tables.push("report.overall.csv".to_string());

    let mut lift = ctx.table(
        "report.lift.csv",
        &["metric", "method", "reference", "value", "reference_value", "lift_pct"],
    )?;
    for row in &eval.lifts {
        lift.row(&[
            row.metric.clone(),
            row.method.clone(),
            row.reference.clone(),
            row.value.to_string(),
            row.reference_value.to_string(),
            row.lift_pct.to_string(),
        ])?;
    }
    lift.finish()?;
    manifest.tables.push("report.lift.csv".to_string());
    Ok(())
}

fn write_selection(
    ctx: &Ctx,
    outcome: &SelectionOutcome,
    manifest: &mut ReportManifest,
) -> Result<()> {
    let mut encoders = ctx.table(
        "report.encoders.csv",
        &["encoder", "val_objective", "test_objective", "chosen"],
    )?;
    for row in &outcome.stage1 {
        encoders.row(&[
            row.encoder.as_str().to_string(),
            row.val_objective.to_string(),
            row.test_objective.to_string(),
            (row.encoder == outcome.encoder).to_string(),
        ])?;
    }
    encoders.finish()?;
    manifest.tables.push("report.encoders.csv".to_string());

    // Average ranks and top-clique membership come from the critical-
    // difference analysis when it ran (two or more families).
    let top_clique: Vec<String> = outcome
        .cd
        .as_ref()
        .and_then(|cd| {
            let best = cd
                .avg_ranks
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| cd.methods[i].clone())?;
            cd.cliques.iter().find(|c| c.contains(&best)).cloned()
        })
        .unwrap_or_default();
    let mut families = ctx.table(
        "report.families.csv",
        &["family", "val_objective", "test_objective", "avg_rank", "in_top_clique", "chosen"],
    )?;
    for row in &outcome.stage2 {
        let name = row.family.as_str();
        let avg_rank = outcome.cd.as_ref().and_then(|cd| {
            cd.methods.iter().position(|m| m == name).map(|i| cd.avg_ranks[i])
        });
        families.row(&[
            name.to_string(),
            row.val_objective.to_string(),
            row.test_objective.to_string(),
            cell_opt(avg_rank),
            top_clique.iter().any(|m| m == name).to_string(),
            (row.family == outcome.family).to_string(),
        ])?;
    }
    families.finish()?;
    manifest.tables.push("report.families.csv".to_string());
    Ok(())
}

fn write_cohorts(
    ctx: &Ctx,
    reports: &[CohortReport],
    manifest: &mut ReportManifest,
) -> Result<()> {
    let mut table = ctx.table(
        "report.cohorts.csv",
        &[
            "column",
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
    for report in reports {
        for row in &report.rows {
            table.row(&[
                report.cohort_column.clone(),
                report.mode.as_str().to_string(),
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
    }
    table.finish()?;
    manifest.tables.push("report.cohorts.csv".to_string());
    Ok(())
}

fn write_fairness(
    ctx: &Ctx,
    summary: &FairnessSummary,
    manifest: &mut ReportManifest,
) -> Result<()> {
    let mut cohorts = ctx.table(
        "report.fairness.csv",
        &["cohort", "patients", "positives", "recall_before", "recall_after", "shift"],
    )?;
    for row in &summary.rows {
        cohorts.row(&[
            row.cohort.clone(),
            row.patients.to_string(),
            row.positives.to_string(),
            cell_opt(row.recall_before),
            cell_opt(row.recall_after),
            cell_opt(row.shift),
        ])?;
    }
    cohorts.finish()?;
    manifest.tables.push("report.fairness.csv".to_string());

    let mut mitigation = ctx.table(
        "report.mitigation.csv",
        &[
            "mitigation",
            "cohort_column",
            "split",
            "fit_split",
            "target_category",
            "gap_before",
            "gap_after",
            "gini_before",
            "gini_after",
            "overall_before",
            "overall_after",
        ],
    )?;
    mitigation.row(&[
        summary.mitigation.clone(),
        summary.cohort_column.clone(),
        summary.split.clone(),
        summary.fit_split.clone(),
        summary.target_category.clone().unwrap_or_default(),
        summary.gap_before.to_string(),
        summary.gap_after.to_string(),
        cell_opt(summary.gini_before),
        cell_opt(summary.gini_after),
        summary.overall_before.to_string(),
        summary.overall_after.to_string(),
    ])?;
    mitigation.finish()?;
    manifest.tables.push("report.mitigation.csv".to_string());
    Ok(())
}

fn write_multiplicity(
    ctx: &Ctx,
    report: &MultiplicityReport,
    manifest: &mut ReportManifest,
) -> Result<()> {
    let mut table = ctx.table(
        "report.multiplicity.csv",
        &[
            "epsilon",
            "binarize_k",
            "baseline",
            "baseline_metric",
            "n_members",
            "ambiguity",
            "discrepancy",
        ],
    )?;
    table.row(&[
        report.epsilon.to_string(),
        report.binarize_k.to_string(),
        report.baseline.clone(),
        report.baseline_metric.to_string(),
        report.n_members.to_string(),
        report.ambiguity.to_string(),
        report.discrepancy.to_string(),
    ])?;
    table.finish()?;
    manifest.tables.push("report.multiplicity.csv".to_string());
    Ok(())
}

fn write_importance(
    ctx: &Ctx,
    importance: &ImportanceReport,
    manifest: &mut ReportManifest,
) -> Result<()> {
    let mut table = ctx.table("report.importance.csv", &["rank", "feature", "mean", "std"])?;
    for (rank, fi) in importance.ranked().iter().enumerate() {
        table.row(&[
            (rank + 1).to_string(),
            fi.feature.clone(),
            fi.mean.to_string(),
            fi.std.to_string(),
        ])?;
    }
    table.finish()?;
    manifest.tables.push("report.importance.csv".to_string());
    Ok(())
}
