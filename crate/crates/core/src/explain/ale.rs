//! Accumulated local effects for numeric features.
//!
//! For each quantile bin of the feature, every patient in the bin is
//! scored twice — feature pinned to the bin's upper edge, then to its
//! lower edge — and the mean difference is the bin's local effect.
//! Accumulating the effects left to right and centering by bin counts
//! yields a curve whose value reads as "score offset relative to the
//! register average, attributable to this feature alone". Because each
//! difference holds the patient's other features fixed, the curve stays
//! honest under correlated features where a marginal sweep would not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColumnData, Frame};

/// An accumulated-local-effects curve over one numeric feature.
///
/// `effects[j]` is the centered accumulated effect at `edges[j + 1]`, the
/// upper edge of bin `j`; the curve is zero-mean under `counts` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ALECurve {
    feature: String,
    /// Strictly increasing bin edges (order statistics of the feature);
    /// one more entry than `effects`.
    edges: Vec<f64>,
    /// Centered accumulated effect per bin.
    effects: Vec<f64>,
    /// Rows per bin; sums to the number of rows with the feature present.
    counts: Vec<usize>,
    /// Count-weighted mean subtracted from the raw accumulated curve.
    centering: f64,
}

impl ALECurve {
    pub fn feature(&self) -> &str {
        &self.feature
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn effects(&self) -> &[f64] {
        &self.effects
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn centering(&self) -> f64 {
        self.centering
    }

    pub fn n_bins(&self) -> usize {
        self.effects.len()
    }
}

/// Accumulated local effects of `feature` under `scorer`, with up to
/// `bins` quantile bins.
///
/// Edges are order statistics of the observed values, deduplicated, so
/// every bin is guaranteed non-empty; heavily tied features therefore
/// yield fewer than `bins` bins. Rows with the feature missing do not
/// enter any bin (they are scored unmodified in both passes and cancel).
pub fn ale<S>(scorer: S, frame: &Frame, feature: &str, bins: usize) -> Result<ALECurve>
where
    S: Fn(&Frame) -> Result<Vec<f64>>,
{
    if bins == 0 {
        return Err(Error::config("ale: bins must be at least 1"));
    }
    let idx = frame
        .schema()
        .column_index(feature)
        .ok_or_else(|| Error::config(format!("ale: unknown feature `{feature}`")))?;
    let values = frame
        .column(idx)
        .as_numeric()
        .ok_or_else(|| Error::config(format!("ale: feature `{feature}` is not numeric")))?;

    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::data(format!("ale: feature `{feature}` has no observed values")));
    }
    present.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite feature values"));
    let n = present.len();

    // Order-statistic edges at evenly spaced ranks, deduplicated.
    let mut edges: Vec<f64> = (0..=bins).map(|i| present[i * (n - 1) / bins]).collect();
    edges.dedup();
    if edges.len() < 2 {
        return Err(Error::data(format!(
            "ale: feature `{feature}` is constant; no effect to accumulate"
        )));
    }
    let n_bins = edges.len() - 1;

    // Bin j covers (edges[j], edges[j+1]]; bin 0 also takes its left edge.
    let bin_of = |x: f64| edges[1..n_bins].partition_point(|&e| e < x);
    let mut lo = values.to_vec();
    let mut hi = values.to_vec();
    let mut bin_rows: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (row, v) in values.iter().enumerate() {
        let Some(x) = v else { continue };
        let j = bin_of(*x);
        lo[row] = Some(edges[j]);
        hi[row] = Some(edges[j + 1]);
        bin_rows[j].push(row);
    }
    let scores_lo = scorer(&frame.with_column_replaced(idx, ColumnData::Numeric(lo))?)?;
    let scores_hi = scorer(&frame.with_column_replaced(idx, ColumnData::Numeric(hi))?)?;
    if scores_lo.len() != frame.n_rows() || scores_hi.len() != frame.n_rows() {
        return Err(Error::data("ale: scorer returned a wrong-length vector"));
    }

    let mut accumulated = Vec::with_capacity(n_bins);
    let mut counts = Vec::with_capacity(n_bins);
    let mut running = 0.0;
    for rows in &bin_rows {
        let local: f64 =
            rows.iter().map(|&r| scores_hi[r] - scores_lo[r]).sum::<f64>() / rows.len() as f64;
        running += local;
        accumulated.push(running);
        counts.push(rows.len());
    }
    let centering = accumulated
        .iter()
        .zip(&counts)
        .map(|(a, &c)| a * c as f64)
        .sum::<f64>()
        / n as f64;
    let effects = accumulated.iter().map(|a| a - centering).collect();

    Ok(ALECurve { feature: feature.to_string(), edges, effects, counts, centering })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{generate, GeneratorConfig, AGE_COL};
    use crate::frame::{ColumnKind, ColumnSpec, Schema};
    use crate::util::{str_salt, sub_rng};
    use rand::Rng;

    fn numeric_frame(xs: &[f64], zs: &[f64]) -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("x", ColumnKind::Numeric),
                ColumnSpec::new("z", ColumnKind::Numeric),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Numeric(xs.iter().map(|&x| Some(x)).collect()),
                ColumnData::Numeric(zs.iter().map(|&z| Some(z)).collect()),
                ColumnData::Label(vec![0; xs.len()]),
            ],
        )
        .unwrap()
    }

    fn random_frame(seed: u64, n: usize) -> Frame {
        let mut rng = sub_rng(seed, str_salt("ale-random"));
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let zs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        numeric_frame(&xs, &zs)
    }

    #[test]
    fn ignored_feature_gives_a_flat_zero_curve() {
        let frame = random_frame(1, 300);
        // Scorer reads only z; the x curve must be identically zero.
        let scorer = |f: &Frame| {
            let z = f.column_by_name("z").unwrap().as_numeric().unwrap();
            Ok(z.iter().map(|v| v.unwrap() * 0.3 + 0.5).collect())
        };
        let curve = ale(scorer, &frame, "x", 20).unwrap();
        assert!(curve.effects().iter().all(|&e| e == 0.0));
        assert_eq!(curve.centering(), 0.0);
        assert_eq!(curve.counts().iter().sum::<usize>(), 300);
    }

    #[test]
    fn linear_scorer_recovers_its_slope_between_edges() {
        let frame = random_frame(2, 500);
        let a = 0.7;
        let scorer = |f: &Frame| {
            let x = f.column_by_name("x").unwrap().as_numeric().unwrap();
            Ok(x.iter().map(|v| a * v.unwrap() + 0.1).collect())
        };
        let curve = ale(scorer, &frame, "x", 20).unwrap();

        // Between consecutive bins the curve rises by exactly a·Δedge.
        for j in 1..curve.n_bins() {
            let rise = curve.effects()[j] - curve.effects()[j - 1];
            let run = curve.edges()[j + 1] - curve.edges()[j];
            assert!((rise - a * run).abs() < 1e-9, "bin {j}: {rise} vs {}", a * run);
        }
        // Count-weighted mean of the centered curve is zero.
        let weighted: f64 = curve
            .effects()
            .iter()
            .zip(curve.counts())
            .map(|(e, &c)| e * c as f64)
            .sum();
        assert!(weighted.abs() < 1e-9);
        assert_eq!(curve.counts().iter().sum::<usize>(), 500);
    }

    #[test]
    fn planted_age_effect_rises_from_18_to_30() {
        let config = GeneratorConfig { rows: 6000, missing_rate: 0.0, ..Default::default() };
        let (frame, truth) = generate(&config, 11).unwrap();
        let scorer = |f: &Frame| truth.oracle_scores(f);
        let curve = ale(scorer, &frame, AGE_COL, 20).unwrap();

        // The generating logit is flat below 18, rises to 30, then
        // plateaus: every bin inside (18, 30] must carry positive local
        // effect, and the curve level at ~30 clearly exceeds ~18.
        let value_near = |target: f64| {
            let j = (0..curve.n_bins())
                .min_by(|&a, &b| {
                    let da = (curve.edges()[a + 1] - target).abs();
                    let db = (curve.edges()[b + 1] - target).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            curve.effects()[j]
        };
        assert!(
            value_near(30.0) - value_near(18.0) > 0.01,
            "age curve failed to rise: {:?}",
            curve.effects()
        );
        for j in 0..curve.n_bins() {
            let (lo, hi) = (curve.edges()[j], curve.edges()[j + 1]);
            if lo >= 18.0 && hi <= 30.0 {
                let rise = curve.effects()[j] - if j > 0 { curve.effects()[j - 1] } else { 0.0 };
                assert!(rise > 0.0, "bin ({lo}, {hi}] did not rise");
            }
        }
    }

    #[test]
    fn tied_values_shrink_the_bin_count() {
        // Only three distinct values → at most three bins survive dedup.
        let xs: Vec<f64> = (0..90).map(|i| f64::from(i % 3)).collect();
        let zs = vec![0.0; 90];
        let frame = numeric_frame(&xs, &zs);
        let scorer = |f: &Frame| {
            let x = f.column_by_name("x").unwrap().as_numeric().unwrap();
            Ok(x.iter().map(|v| v.unwrap()).collect())
        };
        let curve = ale(scorer, &frame, "x", 20).unwrap();
        assert_eq!(curve.n_bins(), 2);
        assert_eq!(curve.counts().iter().sum::<usize>(), 90);

        let json = serde_json::to_string(&curve).unwrap();
        let back: ALECurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn constant_and_non_numeric_features_rejected() {
        let frame = numeric_frame(&[2.0; 40], &[0.0; 40]);
        let scorer = |f: &Frame| Ok(vec![0.5; f.n_rows()]);
        let err = ale(scorer, &frame, "x", 10).unwrap_err();
        assert!(err.to_string().contains("constant"));
        assert!(ale(scorer, &frame, "LFU", 10).is_err());
        assert!(ale(scorer, &frame, "nope", 10).is_err());
        assert!(ale(scorer, &frame, "x", 0).is_err());
    }
}
