//! `synth`: generate the synthetic register with known ground truth.

use lfurisk_core::frame::{generate, render_schema_manifest, summarize, write_csv};
use lfurisk_core::{Error, Result};

use crate::artifact::Ctx;
use crate::commands::RegisterManifest;
use crate::config::DataSource;

pub fn run(ctx: &Ctx) -> Result<()> {
    if ctx.config.data.source != DataSource::Synth {
        return Err(Error::config(
            "data.source is `csv`; run `lfurisk ingest` instead of `lfurisk synth`",
        ));
    }
    let (frame, truth) = generate(&ctx.config.data.synth, ctx.config.seed)?;
    let cohort_columns: Vec<&str> =
        ctx.config.cohorts.columns.iter().map(String::as_str).collect();
    let summary = summarize(&frame, &cohort_columns)?;

    write_csv(&frame, &ctx.path("synth.register.csv"), Some(&ctx.stamp_comment()))?;
    ctx.write_json("synth.schema.json", frame.schema())?;
    ctx.write_json("synth.truth.json", &truth)?;
    ctx.write_json("synth.summary.json", &summary)?;
    let manifest = RegisterManifest {
        source: "synth".into(),
        csv: "synth.register.csv".into(),
        schema: "synth.schema.json".into(),
        truth: Some("synth.truth.json".into()),
        rows: frame.n_rows(),
        positives: frame.positives()?,
    };
    ctx.write_json("synth.manifest.json", &manifest)?;
    log::debug!("schema:\n{}", render_schema_manifest(frame.schema()));

    println!(
        "synth: {} rows, {} positives ({:.2}%), {} columns",
        manifest.rows,
        manifest.positives,
        100.0 * manifest.positives as f64 / manifest.rows.max(1) as f64,
        frame.schema().len()
    );
    Ok(())
}
