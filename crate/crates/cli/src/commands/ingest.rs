//! `ingest`: read CSV registers, merge them onto the spine, and validate.

use std::path::Path;

use lfurisk_core::frame::{merge_registers, parse_schema_manifest, summarize, write_csv};
use lfurisk_core::{Error, Frame, Result};

use crate::artifact::Ctx;
use crate::commands::RegisterManifest;
use crate::config::DataSource;

pub fn run(ctx: &Ctx) -> Result<()> {
    if ctx.config.data.source != DataSource::Csv {
        return Err(Error::config(
            "data.source is `synth`; run `lfurisk synth` instead of `lfurisk ingest`",
        ));
    }
    let csv = &ctx.config.data.csv;
    let mut frames = Vec::with_capacity(csv.registers.len());
    for (register, schema_path) in csv.registers.iter().zip(&csv.schemas) {
        let text = std::fs::read_to_string(schema_path).map_err(|e| {
            Error::data(format!("cannot read schema manifest `{schema_path}`: {e}"))
        })?;
        let schema = parse_schema_manifest(&text)?;
        let frame = lfurisk_core::frame::read_csv(Path::new(register), &schema)?;
        log::info!("read {}: {} rows", register, frame.n_rows());
        frames.push(frame);
    }

    let merged: Frame = if frames.len() == 1 {
        frames.into_iter().next().expect("one register")
    } else {
        let others: Vec<&Frame> = frames[1..].iter().collect();
        merge_registers(&frames[0], &others, &csv.merge_key)?
    };

    let cohort_columns: Vec<&str> =
        ctx.config.cohorts.columns.iter().map(String::as_str).collect();
    let summary = summarize(&merged, &cohort_columns)?;

    write_csv(&merged, &ctx.path("ingest.register.csv"), Some(&ctx.stamp_comment()))?;
    ctx.write_json("ingest.schema.json", merged.schema())?;
    ctx.write_json("ingest.summary.json", &summary)?;
    let manifest = RegisterManifest {
        source: "csv".into(),
        csv: "ingest.register.csv".into(),
        schema: "ingest.schema.json".into(),
        truth: None,
        rows: merged.n_rows(),
        positives: merged.positives().unwrap_or(0),
    };
    ctx.write_json("ingest.manifest.json", &manifest)?;

    println!(
        "ingest: {} rows, {} positives, {} columns from {} register(s)",
        manifest.rows,
        manifest.positives,
        merged.schema().len(),
        csv.registers.len()
    );
    Ok(())
}
