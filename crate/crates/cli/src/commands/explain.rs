//! `explain`: why does the trained pipeline rank the way it does?
//!
//! Three complementary views over the configured split:
//!
//! * permutation feature importance — objective drop when one column is
//!   shuffled, averaged over repeats;
//! * accumulated local effects — how the score moves along each configured
//!   numeric column, isolated from correlated features;
//! * local linear surrogates — a sparse weighted ridge fit around
//!   individual rows, reported with its goodness of fit.

use lfurisk_core::explain::{ale, local_surrogate, pfi, ALECurve, SurrogateExplanation};
use lfurisk_core::util::str_salt;
use lfurisk_core::{Error, Result};

use crate::artifact::{slug, Ctx};
use crate::commands::{load_pipeline, load_register, load_splits, objective, IMPORTANCE_REPORT};

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let art = load_pipeline(ctx)?;
    let section = &ctx.config.explain;
    let target = splits.frame(&frame, &section.split)?;
    let scorer = |f: &lfurisk_core::Frame| art.pipeline.score(f);

    // ---- Permutation feature importance ----
    let m = &ctx.config.metrics;
    let obj = objective(&ctx.config);
    let metric_name = format!("av_recall({},{})", m.av_lo, m.av_hi);
    let importance = pfi(
        scorer,
        &target,
        &obj,
        &metric_name,
        section.repeats,
        ctx.config.seed ^ str_salt("explain-pfi"),
    )?;
    ctx.write_json(IMPORTANCE_REPORT, &importance)?;

    let mut table = ctx.table("explain.importance.csv", &["rank", "feature", "mean", "std"])?;
    for (rank, fi) in importance.ranked().iter().enumerate() {
        table.row(&[
            (rank + 1).to_string(),
            fi.feature.clone(),
            fi.mean.to_string(),
            fi.std.to_string(),
        ])?;
    }
    table.finish()?;

    // ---- Accumulated local effects ----
    let mut curves: Vec<ALECurve> = Vec::new();
    for column in &section.ale_columns {
        let curve = ale(scorer, &target, column, section.ale_bins)?;
        let mut table = ctx.table(
            &format!("explain.ale_{}.csv", slug(column)),
            &["bin", "lo", "hi", "effect", "count"],
        )?;
        for (bin, effect) in curve.effects().iter().enumerate() {
            table.row(&[
                bin.to_string(),
                curve.edges()[bin].to_string(),
                curve.edges()[bin + 1].to_string(),
                effect.to_string(),
                curve.counts()[bin].to_string(),
            ])?;
        }
        table.finish()?;
        curves.push(curve);
    }
    if curves.is_empty() {
        log::info!("explain: no ALE columns configured; skipping curves");
    } else {
        ctx.write_json("explain.ale.json", &curves)?;
    }

    // ---- Local surrogates ----
    let mut surrogates: Vec<(usize, SurrogateExplanation)> = Vec::new();
    for &row in &section.surrogate_rows {
        if row >= target.n_rows() {
            return Err(Error::config(format!(
                "explain.surrogate_rows: row {row} outside split `{}` with {} rows",
                section.split,
                target.n_rows()
            )));
        }
        let explanation = local_surrogate(
            scorer,
            &target,
            row,
            section.surrogate_samples,
            None,
            ctx.config.seed ^ str_salt("explain-surrogate") ^ row as u64,
        )?;
        surrogates.push((row, explanation));
    }
    if !surrogates.is_empty() {
        ctx.write_json("explain.surrogates.json", &surrogates)?;
        let mut table = ctx.table("explain.surrogates.csv", &["row", "term", "weight"])?;
        for (row, explanation) in &surrogates {
            table.row(&[
                row.to_string(),
                "_intercept".to_string(),
                explanation.intercept().to_string(),
            ])?;
            for (term, weight) in explanation.weights() {
                table.row(&[row.to_string(), term.clone(), weight.to_string()])?;
            }
        }
        table.finish()?;
    }

    let top = importance.ranked();
    println!(
        "explain: split `{}`: top feature `{}` (drop {:.4}), {} ALE curve(s), {} surrogate(s)",
        section.split,
        top.first().map(|f| f.feature.as_str()).unwrap_or("-"),
        top.first().map(|f| f.mean).unwrap_or(0.0),
        curves.len(),
        surrogates.len(),
    );
    Ok(())
}
