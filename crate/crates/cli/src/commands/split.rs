//! `split`: carve the register into the five named splits with roles.
//!
//! `modeling` (everything before the passive-evaluation boundary) and its
//! chronological `train`/`val`/`test` partition may fit or tune models;
//! `pes` — the trailing months — is reserved for final reporting and is
//! refused as a training input by every downstream command.

use std::collections::BTreeMap;

use lfurisk_core::split::{chronological_indices, forward_split_indices};
use lfurisk_core::{Frame, Result};

use crate::artifact::{cell_opt, Ctx};
use crate::commands::{
    load_register, SplitArtifact, ROLE_COMPARISON, ROLE_PASSIVE, ROLE_TRAINING, ROLE_TUNING,
    SPLIT_MANIFEST,
};

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let plan = ctx.config.split_plan();

    let (modeling, pes) = forward_split_indices(&frame, &plan)?;
    let modeling_frame = frame.take_rows(&modeling);
    let (train, val, test) = chronological_indices(&modeling_frame, plan.fractions)?;
    let back = |sub: Vec<usize>| sub.into_iter().map(|i| modeling[i]).collect::<Vec<_>>();

    let mut splits = BTreeMap::new();
    splits.insert("modeling".to_string(), modeling.clone());
    splits.insert("train".to_string(), back(train));
    splits.insert("val".to_string(), back(val));
    splits.insert("test".to_string(), back(test));
    splits.insert("pes".to_string(), pes);

    let roles: BTreeMap<String, String> = [
        ("modeling", ROLE_TRAINING),
        ("train", ROLE_TRAINING),
        ("val", ROLE_TUNING),
        ("test", ROLE_COMPARISON),
        ("pes", ROLE_PASSIVE),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();

    let artifact = SplitArtifact { plan, roles, splits };
    ctx.write_json(SPLIT_MANIFEST, &artifact)?;

    let mut table = ctx.table(
        "split.summary.csv",
        &["split", "role", "rows", "positives", "prevalence", "month_lo", "month_hi"],
    )?;
    for name in ["modeling", "train", "val", "test", "pes"] {
        let sub = artifact.frame(&frame, name)?;
        let (lo, hi) = month_range(&sub)?;
        let positives = sub.positives()?;
        table.row(&[
            name.to_string(),
            artifact.role(name)?.to_string(),
            sub.n_rows().to_string(),
            positives.to_string(),
            (positives as f64 / sub.n_rows().max(1) as f64).to_string(),
            cell_opt(lo.map(|m| m as f64)),
            cell_opt(hi.map(|m| m as f64)),
        ])?;
    }
    table.finish()?;

    println!(
        "split: modeling {} rows (train {} / val {} / test {}), pes {} rows",
        artifact.rows("modeling")?.len(),
        artifact.rows("train")?.len(),
        artifact.rows("val")?.len(),
        artifact.rows("test")?.len(),
        artifact.rows("pes")?.len(),
    );
    Ok(())
}

fn month_range(frame: &Frame) -> Result<(Option<i64>, Option<i64>)> {
    let months = frame.months()?;
    Ok((months.iter().min().copied(), months.iter().max().copied()))
}
