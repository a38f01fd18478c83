//! Cyclic gradient-boosted additive model.
//!
//! Each feature owns an additive shape function on the logit scale:
//! per-token offsets for categorical columns (plus a missing bucket that
//! also absorbs unseen tokens) and per-quantile-bin offsets for numeric
//! columns. Training cycles round-robin over features; each visit fits a
//! depth-1 Newton stump to the current logistic gradient — best
//! one-vs-rest token for categorical features, best bin-order threshold
//! for numeric ones — and folds `learning_rate` times the stump into the
//! feature's shape. Because every update touches exactly one feature's
//! shape, the fitted score decomposes exactly as
//! `sigmoid(intercept + Σ_f shape_f(x_f))`, which is what makes the model
//! glass-box: shapes are returned as plain lookup tables.
//!
//! After fitting, shapes are centered to zero training mean (the mass
//! moves into the intercept), the standard identifiability convention.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColumnData, Frame};
use crate::util::{logit, sigmoid};

/// Ridge term shared by stump gains and values.
const LAMBDA: f64 = 1.0;
/// Minimum gain for a stump to be applied.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GamParams {
    /// Full passes over the feature list.
    pub cycles: usize,
    pub learning_rate: f64,
    /// Upper bound on quantile bins per numeric feature.
    pub max_bins: usize,
}

impl Default for GamParams {
    fn default() -> Self {
        GamParams { cycles: 100, learning_rate: 0.1, max_bins: 64 }
    }
}

impl GamParams {
    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::config("gam params: cycles >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("gam params: learning_rate > 0"));
        }
        if self.max_bins < 2 {
            return Err(Error::config("gam params: max_bins >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum Shape {
    Categorical {
        name: String,
        /// Token → logit offset.
        offsets: BTreeMap<String, f64>,
        /// Offset for missing cells and unseen tokens.
        missing: f64,
    },
    Numeric {
        name: String,
        /// Ascending bin boundaries; value v lands in the first bin whose
        /// cut is >= v (last bin if none).
        cuts: Vec<f64>,
        /// Per-bin logit offsets, len = cuts.len() + 1.
        offsets: Vec<f64>,
    },
}

impl Shape {
    fn name(&self) -> &str {
        match self {
            Shape::Categorical { name, .. } | Shape::Numeric { name, .. } => name,
        }
    }
}

/// Fitted additive model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GamModel {
    intercept: f64,
    shapes: Vec<Shape>,
}

impl GamModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.shapes.iter().map(Shape::name).collect()
    }

    /// Token offsets and the missing-bucket offset of a categorical shape.
    pub fn categorical_shape(&self, name: &str) -> Option<(&BTreeMap<String, f64>, f64)> {
        self.shapes.iter().find_map(|s| match s {
            Shape::Categorical { name: n, offsets, missing } if n == name => {
                Some((offsets, *missing))
            }
            _ => None,
        })
    }

    /// (cuts, per-bin offsets) of a numeric shape.
    pub fn numeric_shape(&self, name: &str) -> Option<(&[f64], &[f64])> {
        self.shapes.iter().find_map(|s| match s {
            Shape::Numeric { name: n, cuts, offsets } if n == name => {
                Some((cuts.as_slice(), offsets.as_slice()))
            }
            _ => None,
        })
    }

    /// Per-feature logit contributions for one row (the local explanation;
    /// summing them plus the intercept reproduces the margin exactly).
    pub fn contributions(&self, frame: &Frame, row: usize) -> Result<Vec<(String, f64)>> {
        self.shapes
            .iter()
            .map(|shape| {
                let column = frame.column_by_name(shape.name())?;
                Ok((shape.name().to_string(), shape_offset(shape, column, row)?))
            })
            .collect()
    }

    pub fn predict(&self, frame: &Frame) -> Result<Vec<f64>> {
        let columns: Vec<&ColumnData> = self
            .shapes
            .iter()
            .map(|s| frame.column_by_name(s.name()))
            .collect::<Result<_>>()?;
        (0..frame.n_rows())
            .map(|row| {
                let mut margin = self.intercept;
                for (shape, column) in self.shapes.iter().zip(&columns) {
                    margin += shape_offset(shape, column, row)?;
                }
                Ok(sigmoid(margin))
            })
            .collect()
    }
}

fn shape_offset(shape: &Shape, column: &ColumnData, row: usize) -> Result<f64> {
    match shape {
        Shape::Categorical { name, offsets, missing } => {
            let cat = column
                .as_categorical()
                .ok_or_else(|| Error::data(format!("column `{name}` is not categorical")))?;
            Ok(cat.token(row).and_then(|t| offsets.get(t)).copied().unwrap_or(*missing))
        }
        Shape::Numeric { name, cuts, offsets } => {
            let vals = column
                .as_numeric()
                .ok_or_else(|| Error::data(format!("column `{name}` is not numeric")))?;
            let v = vals[row].ok_or_else(|| {
                Error::data(format!("column `{name}` row {row} is missing: impute before scoring"))
            })?;
            Ok(offsets[cuts.partition_point(|&c| v > c)])
        }
    }
}

/// Working form of one feature during fitting.
struct Working {
    column: usize,
    /// Per-row bucket index.
    buckets: Vec<u32>,
    n_buckets: usize,
    /// Accumulated per-bucket offsets.
    offsets: Vec<f64>,
    /// Numeric features split only between adjacent bins; categorical
    /// ones split one bucket against the rest.
    ordered: bool,
}

pub(super) fn fit(frame: &Frame, params: &GamParams) -> Result<GamModel> {
    let y = frame.labels()?;
    let n = frame.n_rows();

    let mut working = Vec::new();
    let mut numeric_cuts: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, spec) in frame.schema().feature_columns() {
        match frame.column(idx) {
            ColumnData::Categorical(cat) => {
                let n_tokens = cat.categories().len();
                let buckets = cat
                    .codes()
                    .iter()
                    .map(|c| c.map_or(n_tokens as u32, |v| v))
                    .collect();
                working.push(Working {
                    column: idx,
                    buckets,
                    n_buckets: n_tokens + 1,
                    offsets: vec![0.0; n_tokens + 1],
                    ordered: false,
                });
            }
            ColumnData::Numeric(vals) => {
                let mut sorted = Vec::with_capacity(n);
                for (row, v) in vals.iter().enumerate() {
                    let v = v.ok_or_else(|| {
                        Error::data(format!(
                            "column `{}` row {row} is missing: impute before fitting",
                            spec.name
                        ))
                    })?;
                    sorted.push(v);
                }
                let values = sorted.clone();
                sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
                let mut cuts: Vec<f64> = (1..params.max_bins)
                    .map(|i| {
                        crate::util::quantile_sorted(&sorted, i as f64 / params.max_bins as f64)
                    })
                    .collect();
                cuts.dedup();
                let buckets = values
                    .iter()
                    .map(|&v| cuts.partition_point(|&c| v > c) as u32)
                    .collect();
                working.push(Working {
                    column: idx,
                    n_buckets: cuts.len() + 1,
                    buckets,
                    offsets: vec![0.0; cuts.len() + 1],
                    ordered: true,
                });
                // Remember cuts by stashing them on the side.
                numeric_cuts.push((idx, cuts));
            }
            other => {
                return Err(Error::internal(format!(
                    "feature column `{}` holds {} data",
                    spec.name,
                    other.kind().as_str()
                )))
            }
        }
    }
    if working.is_empty() {
        return Err(Error::data("gam: register has no feature columns"));
    }

    let prevalence = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let mut intercept = logit(prevalence);
    let mut margins = vec![intercept; n];

    for _cycle in 0..params.cycles {
        for feat in working.iter_mut() {
            // Newton statistics per bucket at current margins.
            let mut stats = vec![(0.0f64, 0.0f64); feat.n_buckets];
            for i in 0..n {
                let p = sigmoid(margins[i]);
                let s = &mut stats[feat.buckets[i] as usize];
                s.0 += p - f64::from(y[i]);
                s.1 += p * (1.0 - p);
            }
            let (g_tot, h_tot) =
                stats.iter().fold((0.0, 0.0), |(g, h), s| (g + s.0, h + s.1));
            let base = g_tot * g_tot / (h_tot + LAMBDA);

            // Best depth-1 stump on this feature's buckets.
            let mut best: Option<(f64, Vec<bool>)> = None; // (gain, in-left)
            if feat.ordered {
                let mut gl = 0.0;
                let mut hl = 0.0;
                for k in 0..feat.n_buckets - 1 {
                    gl += stats[k].0;
                    hl += stats[k].1;
                    let gr = g_tot - gl;
                    let hr = h_tot - hl;
                    let gain =
                        0.5 * (gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - base);
                    if best.as_ref().map_or(true, |(b, _)| gain > *b) {
                        let mut mask = vec![false; feat.n_buckets];
                        mask.iter_mut().take(k + 1).for_each(|m| *m = true);
                        best = Some((gain, mask));
                    }
                }
            } else {
                for b in 0..feat.n_buckets {
                    let (gb, hb) = stats[b];
                    let gr = g_tot - gb;
                    let hr = h_tot - hb;
                    let gain =
                        0.5 * (gb * gb / (hb + LAMBDA) + gr * gr / (hr + LAMBDA) - base);
                    if best.as_ref().map_or(true, |(bst, _)| gain > *bst) {
                        let mut mask = vec![false; feat.n_buckets];
                        mask[b] = true;
                        best = Some((gain, mask));
                    }
                }
            }
            let Some((gain, in_left)) = best else { continue };
            if gain <= MIN_GAIN {
                continue; // constant or fully fitted feature: no update
            }

            let (mut gl, mut hl) = (0.0, 0.0);
            for (b, &inl) in in_left.iter().enumerate() {
                if inl {
                    gl += stats[b].0;
                    hl += stats[b].1;
                }
            }
            let v_left = -params.learning_rate * gl / (hl + LAMBDA);
            let v_right = -params.learning_rate * (g_tot - gl) / (h_tot - hl + LAMBDA);
            for (b, &inl) in in_left.iter().enumerate() {
                feat.offsets[b] += if inl { v_left } else { v_right };
            }
            for i in 0..n {
                margins[i] += if in_left[feat.buckets[i] as usize] { v_left } else { v_right };
            }
        }
    }

    // Center each shape to zero count-weighted mean; the mass moves into
    // the intercept so predictions are unchanged.
    for feat in working.iter_mut() {
        let mut counts = vec![0usize; feat.n_buckets];
        for &b in &feat.buckets {
            counts[b as usize] += 1;
        }
        let mean = feat
            .offsets
            .iter()
            .zip(&counts)
            .map(|(o, &c)| o * c as f64)
            .sum::<f64>()
            / n as f64;
        for o in feat.offsets.iter_mut() {
            *o -= mean;
        }
        intercept += mean;
    }

    // Freeze the working state into serializable shapes.
    let mut cuts_by_column: BTreeMap<usize, Vec<f64>> = numeric_cuts.into_iter().collect();
    let shapes = working
        .into_iter()
        .map(|feat| {
            let spec = &frame.schema().columns()[feat.column];
            match frame.column(feat.column) {
                ColumnData::Categorical(cat) => {
                    let n_tokens = cat.categories().len();
                    let offsets = cat
                        .categories()
                        .iter()
                        .enumerate()
                        .map(|(code, token)| (token.clone(), feat.offsets[code]))
                        .collect();
                    Shape::Categorical {
                        name: spec.name.clone(),
                        offsets,
                        missing: feat.offsets[n_tokens],
                    }
                }
                _ => Shape::Numeric {
                    name: spec.name.clone(),
                    cuts: cuts_by_column.remove(&feat.column).expect("cuts recorded"),
                    offsets: feat.offsets,
                },
            }
        })
        .collect();

    Ok(GamModel { intercept, shapes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{CategoricalColumn, ColumnKind, ColumnSpec, Frame, Schema};
    use crate::model::{fit_cyclic_gam, Model};
    use crate::util::{pearson, sub_rng};
    use rand::Rng;

    const PLANTED: [(&str, f64); 5] =
        [("t0", -1.0), ("t1", -0.5), ("t2", 0.0), ("t3", 0.5), ("t4", 1.0)];

    /// One categorical feature with planted per-token logits (plus an
    /// inert constant column), labels drawn from the implied Bernoulli.
    fn planted_frame(n: usize, seed: u64) -> Frame {
        let mut rng = sub_rng(seed, 0x6741_6d);
        let mut tokens = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let k = rng.gen_range(0..PLANTED.len());
            let (token, effect) = PLANTED[k];
            tokens.push(Some(token));
            labels.push(u8::from(rng.gen::<f64>() < sigmoid(-1.0 + effect)));
        }
        let schema = Schema::new(
            vec![
                ColumnSpec::new("Flag", ColumnKind::Categorical),
                ColumnSpec::new("Fixed", ColumnKind::Categorical),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Categorical(CategoricalColumn::from_tokens(tokens)),
                ColumnData::Categorical(CategoricalColumn::from_tokens(
                    std::iter::repeat(Some("same")).take(n),
                )),
                ColumnData::Label(labels),
            ],
        )
        .unwrap()
    }

    #[test]
    fn recovers_planted_category_effects() {
        let frame = planted_frame(4000, 1);
        let params = GamParams { cycles: 150, learning_rate: 0.2, max_bins: 64 };
        let model = fit_cyclic_gam(&frame, &params).unwrap();
        let Model::CyclicGam(gam) = &model else { panic!() };

        let (offsets, _) = gam.categorical_shape("Flag").unwrap();
        let fitted: Vec<f64> = PLANTED.iter().map(|(t, _)| offsets[*t]).collect();
        let truth: Vec<f64> = PLANTED.iter().map(|(_, e)| *e).collect();
        let r = pearson(&fitted, &truth);
        assert!(r > 0.95, "shape correlation {r}, fitted {fitted:?}");

        // The constant column can never host an improving stump.
        let (fixed, missing) = gam.categorical_shape("Fixed").unwrap();
        assert_eq!(fixed["same"], 0.0);
        assert_eq!(missing, 0.0);
    }

    #[test]
    fn score_decomposes_into_intercept_plus_contributions() {
        let frame = planted_frame(500, 2);
        let model = fit_cyclic_gam(&frame, &GamParams::default()).unwrap();
        let Model::CyclicGam(gam) = &model else { panic!() };
        let scores = gam.predict(&frame).unwrap();
        for row in [0usize, 17, 499] {
            let margin: f64 = gam.intercept()
                + gam
                    .contributions(&frame, row)
                    .unwrap()
                    .iter()
                    .map(|(_, v)| v)
                    .sum::<f64>();
            assert!((sigmoid(margin) - scores[row]).abs() < 1e-12);
        }
    }

    #[test]
    fn numeric_step_effect_shows_in_bins() {
        let n = 3000;
        let mut rng = sub_rng(9, 0x6e756d);
        let mut vals = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let v: f64 = rng.gen();
            vals.push(Some(v));
            let logit_v = if v > 0.5 { 0.5f64 } else { -1.5 };
            labels.push(u8::from(rng.gen::<f64>() < sigmoid(logit_v)));
        }
        let schema = Schema::new(
            vec![
                ColumnSpec::new("Reading", ColumnKind::Numeric),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        let frame =
            Frame::new(schema, vec![ColumnData::Numeric(vals), ColumnData::Label(labels)])
                .unwrap();
        let params = GamParams { cycles: 200, learning_rate: 0.3, max_bins: 16 };
        let model = fit_cyclic_gam(&frame, &params).unwrap();
        let Model::CyclicGam(gam) = &model else { panic!() };
        let (cuts, offsets) = gam.numeric_shape("Reading").unwrap();

        // Mean shape above the step minus below it approaches the planted
        // 2.0 logit gap.
        let split = cuts.partition_point(|&c| 0.5 > c);
        let below = offsets[..split].iter().sum::<f64>() / split as f64;
        let above = offsets[split..].iter().sum::<f64>() / (offsets.len() - split) as f64;
        assert!(above - below > 1.2, "gap {} (below {below}, above {above})", above - below);
    }

    #[test]
    fn unseen_token_uses_missing_bucket() {
        let frame = planted_frame(400, 3);
        let model = fit_cyclic_gam(&frame, &GamParams::default()).unwrap();
        let Model::CyclicGam(gam) = &model else { panic!() };
        let (_, missing) = gam.categorical_shape("Flag").unwrap();

        let schema = frame.schema().clone();
        let probe = Frame::new(
            schema,
            vec![
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![Some("novel")])),
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![Some("same")])),
                ColumnData::Label(vec![0]),
            ],
        )
        .unwrap();
        let score = gam.predict(&probe).unwrap()[0];
        assert!((score - sigmoid(gam.intercept() + missing)).abs() < 1e-12);
    }

    #[test]
    fn missing_numeric_is_rejected_with_guidance() {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("Reading", ColumnKind::Numeric),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        let frame = Frame::new(
            schema,
            vec![
                ColumnData::Numeric(vec![Some(1.0), None, Some(2.0), Some(3.0)]),
                ColumnData::Label(vec![0, 1, 0, 1]),
            ],
        )
        .unwrap();
        let err = fit_cyclic_gam(&frame, &GamParams::default()).unwrap_err();
        assert!(err.to_string().contains("impute"), "{err}");
    }

    #[test]
    fn round_trips_through_json() {
        let frame = planted_frame(300, 4);
        let model = fit_cyclic_gam(&frame, &GamParams::default()).unwrap();
        let back: Model = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(model.predict_frame(&frame).unwrap(), back.predict_frame(&frame).unwrap());
    }
}
