//! `evaluate`: rank metrics for the trained pipeline against baselines.
//!
//! Scores the configured evaluation split with the trained pipeline, a
//! seeded random ranker, every built-in rule checklist that matches the
//! schema, and — for synthetic registers — the generator's oracle scores.
//! Reports Recall@k, AvRecall, AUC-ROC/PR with paired bootstrap confidence
//! intervals, plus lift of the model over each reference.

use serde::{Deserialize, Serialize};

use lfurisk_core::harness::{bootstrap_metric, confidence_interval};
use lfurisk_core::metric::{auc_pr, auc_roc, av_recall, lift, recall_at_k};
use lfurisk_core::model::{builtin_rules, random_scores};
use lfurisk_core::util::str_salt;
use lfurisk_core::Result;

use crate::artifact::{cell_opt, Ctx};
use crate::commands::{load_pipeline, load_register, load_splits, load_truth, EVALUATE_REPORT};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: String,
    pub recall_at_k: f64,
    pub av_recall: f64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub recall_ci: Option<(f64, f64)>,
    pub av_recall_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftRow {
    pub metric: String,
    pub method: String,
    pub reference: String,
    pub value: f64,
    pub reference_value: f64,
    pub lift_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub rows: usize,
    pub positives: usize,
    pub k: f64,
    pub av_lo: u32,
    pub av_hi: u32,
    pub bootstrap_b: usize,
    pub level: f64,
    pub methods: Vec<MethodEval>,
    pub lifts: Vec<LiftRow>,
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, manifest) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let art = load_pipeline(ctx)?;
    let split_name = &ctx.config.evaluate.split;
    let sub = splits.frame(&frame, split_name)?;
    let labels = sub.labels()?;
    let n = sub.n_rows();
    let m = &ctx.config.metrics;

    let mut methods: Vec<(String, Vec<f64>)> = Vec::new();
    methods.push(("model".to_string(), art.pipeline.score(&sub)?));
    methods.push((
        "random".to_string(),
        random_scores(n, ctx.config.seed ^ str_salt("random-baseline")),
    ));
    for rule in builtin_rules() {
        match rule.validate_against(&sub) {
            Ok(()) => methods.push((rule.name.clone(), rule.score_frame(&sub)?)),
            Err(e) => log::warn!("evaluate: skipping rule `{}`: {e}", rule.name),
        }
    }
    if let Some(truth) = load_truth(ctx, &manifest)? {
        methods.push(("oracle".to_string(), truth.oracle_scores(&sub)?));
    }

    // Paired bootstrap over the two rank metrics; on small splits a resample
    // can lack positives, in which case intervals are omitted rather than
    // failing the whole evaluation.
    let (k, av_lo, av_hi) = (m.k, m.av_lo, m.av_hi);
    let recall_metric = move |s: &[f64], y: &[u8]| recall_at_k(s, y, k);
    let av_metric = move |s: &[f64], y: &[u8]| av_recall(s, y, av_lo, av_hi);
    let recall_set = bootstrap_metric(
        &methods,
        labels,
        m.bootstrap_b,
        ctx.config.seed ^ str_salt("evaluate-bootstrap-recall"),
        &recall_metric,
    );
    let av_set = bootstrap_metric(
        &methods,
        labels,
        m.bootstrap_b,
        ctx.config.seed ^ str_salt("evaluate-bootstrap-avrecall"),
        &av_metric,
    );
    for (name, set) in [("Recall@k", &recall_set), ("AvRecall", &av_set)] {
        if let Err(e) = set {
            log::warn!("evaluate: no {name} confidence intervals: {e}");
        }
    }

    let mut evals = Vec::with_capacity(methods.len());
    for (i, (name, scores)) in methods.iter().enumerate() {
        let ci = |set: &Result<lfurisk_core::harness::BootstrapSet>| match set {
            Ok(set) => confidence_interval(set.replicates(i), m.level).ok(),
            Err(_) => None,
        };
        evals.push(MethodEval {
            method: name.clone(),
            recall_at_k: recall_at_k(scores, labels, m.k)?,
            av_recall: av_recall(scores, labels, m.av_lo, m.av_hi)?,
            auc_roc: auc_roc(scores, labels)?,
            auc_pr: auc_pr(scores, labels)?,
            recall_ci: ci(&recall_set),
            av_recall_ci: ci(&av_set),
        });
    }

    let lifts = model_lifts(&evals, m.k, m.av_lo, m.av_hi);

    let report = EvalReport {
        split: split_name.clone(),
        rows: n,
        positives: sub.positives()?,
        k: m.k,
        av_lo: m.av_lo,
        av_hi: m.av_hi,
        bootstrap_b: m.bootstrap_b,
        level: m.level,
        methods: evals,
        lifts,
    };
    ctx.write_json(EVALUATE_REPORT, &report)?;
    write_tables(ctx, &report)?;

    let model = &report.methods[0];
    println!(
        "evaluate: split `{}` ({} rows, {} positives): model Recall@{} = {:.4}, \
         AvRecall({},{}) = {:.4}",
        report.split,
        report.rows,
        report.positives,
        report.k,
        model.recall_at_k,
        report.av_lo,
        report.av_hi,
        model.av_recall,
    );
    Ok(())
}

/// Lift of the model over the random ranker, the best rule, and the oracle,
/// for both rank metrics. References with a non-positive value are skipped.
fn model_lifts(evals: &[MethodEval], k: f64, av_lo: u32, av_hi: u32) -> Vec<LiftRow> {
    let model = &evals[0];
    let mut references: Vec<&MethodEval> = Vec::new();
    if let Some(random) = evals.iter().find(|e| e.method == "random") {
        references.push(random);
    }
    let best_rule = evals
        .iter()
        .filter(|e| e.method != "model" && e.method != "random" && e.method != "oracle")
        .max_by(|a, b| a.recall_at_k.total_cmp(&b.recall_at_k));
    if let Some(rule) = best_rule {
        references.push(rule);
    }
    if let Some(oracle) = evals.iter().find(|e| e.method == "oracle") {
        references.push(oracle);
    }

    let mut rows = Vec::new();
    for reference in references {
        let pairs = [
            (format!("recall_at_{k}"), model.recall_at_k, reference.recall_at_k),
            (format!("av_recall_{av_lo}_{av_hi}"), model.av_recall, reference.av_recall),
        ];
        for (metric, value, reference_value) in pairs {
            match lift(value, reference_value) {
                Ok(lift_pct) => rows.push(LiftRow {
                    metric,
                    method: "model".to_string(),
                    reference: reference.method.clone(),
                    value,
                    reference_value,
                    lift_pct,
                }),
                Err(e) => log::warn!(
                    "evaluate: no lift vs `{}` on {metric}: {e}",
                    reference.method
                ),
            }
        }
    }
    rows
}

fn write_tables(ctx: &Ctx, report: &EvalReport) -> Result<()> {
    let mut metrics = ctx.table(
        "evaluate.metrics.csv",
        &["method", "metric", "value", "ci_lo", "ci_hi"],
    )?;
    for eval in &report.methods {
        let rows: [(String, f64, Option<(f64, f64)>); 4] = [
            (format!("recall_at_{}", report.k), eval.recall_at_k, eval.recall_ci),
            (
                format!("av_recall_{}_{}", report.av_lo, report.av_hi),
                eval.av_recall,
                eval.av_recall_ci,
            ),
            ("auc_roc".to_string(), eval.auc_roc, None),
            ("auc_pr".to_string(), eval.auc_pr, None),
        ];
        for (metric, value, interval) in rows {
            metrics.row(&[
                eval.method.clone(),
                metric,
                value.to_string(),
                cell_opt(interval.map(|(lo, _)| lo)),
                cell_opt(interval.map(|(_, hi)| hi)),
            ])?;
        }
    }
    metrics.finish()?;

    let mut lifts = ctx.table(
        "evaluate.lift.csv",
        &["metric", "method", "reference", "value", "reference_value", "lift_pct"],
    )?;
    for row in &report.lifts {
        lifts.row(&[
            row.metric.clone(),
            row.method.clone(),
            row.reference.clone(),
            row.value.to_string(),
            row.reference_value.to_string(),
            row.lift_pct.to_string(),
        ])?;
    }
    lifts.finish()?;
    Ok(())
}
