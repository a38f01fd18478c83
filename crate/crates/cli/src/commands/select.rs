//! `select`: two-stage encoder-then-model search on the modeling window.
//!
//! Stage 1 races categorical encoders with a fixed boosted learner; stage 2
//! tunes each model family on the winning encoder. The full outcome —
//! including every logged trial and the rank comparison across families —
//! lands in `select.outcome.json` for `train`, `multiplicity`, and `report`
//! to build on.

use lfurisk_core::harness::select_encoder_then_model;
use lfurisk_core::Result;

use crate::artifact::Ctx;
use crate::commands::{load_register, load_splits, SELECT_OUTCOME};

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let split_name = &ctx.config.selection.split;
    splits.guard_training(split_name)?;
    let sub = splits.frame(&frame, split_name)?;

    let selection_config = ctx.config.selection_config();
    log::info!(
        "select: {} rows from split `{}`, budget {} trials/family",
        sub.n_rows(),
        split_name,
        selection_config.budget
    );
    let outcome = select_encoder_then_model(&sub, &selection_config)?;

    ctx.write_json(SELECT_OUTCOME, &outcome)?;

    let mut stage1 = ctx.table(
        "select.encoders.csv",
        &["encoder", "val_objective", "test_objective"],
    )?;
    for row in &outcome.stage1 {
        stage1.row(&[
            row.encoder.as_str().to_string(),
            row.val_objective.to_string(),
            row.test_objective.to_string(),
        ])?;
    }
    stage1.finish()?;

    let mut stage2 = ctx.table(
        "select.families.csv",
        &["family", "val_objective", "test_objective"],
    )?;
    for row in &outcome.stage2 {
        stage2.row(&[
            row.family.as_str().to_string(),
            row.val_objective.to_string(),
            row.test_objective.to_string(),
        ])?;
    }
    stage2.finish()?;

    let mut trials = ctx.table(
        "select.trials.csv",
        &["stage", "context", "trial", "seed", "objective", "params"],
    )?;
    for logged in &outcome.trial_log {
        trials.row(&[
            logged.stage.to_string(),
            logged.context.clone(),
            logged.record.trial.to_string(),
            logged.record.seed.to_string(),
            logged.record.objective.to_string(),
            serde_json::to_string(&logged.record.params)?,
        ])?;
    }
    trials.finish()?;

    if let Some(cd) = &outcome.cd {
        ctx.write_json("select.cd.json", cd)?;
    }

    println!(
        "select: encoder `{}`, family `{}` ({} trials logged)",
        outcome.encoder.as_str(),
        outcome.family.as_str(),
        outcome.trial_log.len()
    );
    Ok(())
}
