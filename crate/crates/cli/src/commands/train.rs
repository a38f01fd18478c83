//! `train`: fit the scoring pipeline that downstream commands evaluate.
//!
//! The encoder and family come from `[train]` overrides when given, otherwise
//! from the `select` outcome; hyper-parameters follow the same precedence.
//! The fitted imputer + encoder + model are persisted together so that
//! `evaluate`, `cohorts`, `fairness`, `multiplicity`, and `explain` all score
//! rows through the identical pipeline.

use lfurisk_core::encode::EncoderKind;
use lfurisk_core::harness::{fit_pipeline, ModelFamily, SelectionOutcome};
use lfurisk_core::model::{BoostHParams, GamParams, TreeParams};
use lfurisk_core::{Error, Result};

use crate::artifact::Ctx;
use crate::commands::{load_register, load_splits, TrainArtifact, SELECT_OUTCOME, TRAIN_PIPELINE};

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let split_name = &ctx.config.train.split;
    splits.guard_training(split_name)?;
    let sub = splits.frame(&frame, split_name)?;

    let outcome: Option<SelectionOutcome> = if ctx.exists(SELECT_OUTCOME) {
        Some(ctx.read_json(SELECT_OUTCOME)?)
    } else {
        None
    };

    let encoder = resolve_encoder(ctx, outcome.as_ref())?;
    let family = resolve_family(ctx, outcome.as_ref())?;
    let params = resolve_params(ctx, outcome.as_ref(), family)?;

    log::info!(
        "train: fitting encoder `{}` + family `{}` on split `{}` ({} rows)",
        encoder.as_str(),
        family.as_str(),
        split_name,
        sub.n_rows()
    );
    let selection_config = ctx.config.selection_config();
    let pipeline = fit_pipeline(&sub, encoder, family, &params, &selection_config, None)?;

    let artifact = TrainArtifact {
        encoder,
        family,
        params,
        split: split_name.clone(),
        rows: sub.n_rows(),
        pipeline,
    };
    ctx.write_json(TRAIN_PIPELINE, &artifact)?;

    println!(
        "train: fitted `{}` + `{}` on {} rows of split `{}`",
        encoder.as_str(),
        family.as_str(),
        sub.n_rows(),
        split_name
    );
    Ok(())
}

fn resolve_encoder(ctx: &Ctx, outcome: Option<&SelectionOutcome>) -> Result<EncoderKind> {
    let name = &ctx.config.train.encoder;
    if !name.is_empty() {
        return EncoderKind::parse(name);
    }
    match outcome {
        Some(o) => Ok(o.encoder),
        None => Err(Error::config(
            "train.encoder is empty and no selection outcome exists: \
             run `lfurisk select` first or set [train] encoder",
        )),
    }
}

fn resolve_family(ctx: &Ctx, outcome: Option<&SelectionOutcome>) -> Result<ModelFamily> {
    let name = &ctx.config.train.family;
    if !name.is_empty() {
        return ModelFamily::parse(name);
    }
    match outcome {
        Some(o) => Ok(o.family),
        None => Err(Error::config(
            "train.family is empty and no selection outcome exists: \
             run `lfurisk select` first or set [train] family",
        )),
    }
}

/// Tuned hyper-parameters for `family` from the selection outcome when it has
/// them, otherwise the family defaults seeded with the run seed.
fn resolve_params(
    ctx: &Ctx,
    outcome: Option<&SelectionOutcome>,
    family: ModelFamily,
) -> Result<serde_json::Value> {
    if let Some(o) = outcome {
        if let Some(row) = o.stage2.iter().find(|row| row.family == family) {
            return Ok(row.best_params.clone());
        }
    }
    let value = match family {
        ModelFamily::Boosted => serde_json::to_value(BoostHParams {
            seed: ctx.config.seed,
            ..BoostHParams::default()
        })?,
        ModelFamily::Tree => serde_json::to_value(TreeParams::default())?,
        ModelFamily::CyclicGam => serde_json::to_value(GamParams::default())?,
        ModelFamily::NaiveBayes => serde_json::Value::Null,
    };
    Ok(value)
}
