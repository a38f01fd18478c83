//! Local linear surrogates: a faithful-nearby linear story for one score.
//!
//! Perturb a single patient's record — categoricals resampled from the
//! register's marginals, numerics jittered with Gaussian noise at the
//! column's standard deviation — score the perturbations with the black
//! box, and fit a weighted least-squares line through the results. The
//! kernel weight `exp(−d²/width²)` keeps the fit local: distance is
//! Hamming on categoricals plus standardized Euclidean on numerics, and
//! the default width is `0.75·√d` for `d` features. Categorical features
//! enter the design as "still equals the record's value" indicators, so a
//! negative weight reads "this patient's current value is protective";
//! numerics enter raw, so weights read as local slopes.

use nalgebra::{DMatrix, DVector};
use rand::distributions::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::Normal;

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ColumnData, ColumnKind, Frame};
use crate::util::{str_salt, sub_rng};

/// Weighted linear fit around one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateExplanation {
    /// Feature → coefficient, in register column order. Categorical
    /// coefficients multiply an equals-the-record indicator; numeric
    /// coefficients are local slopes. Numeric features missing on the
    /// record are skipped (there is no value to jitter around).
    weights: Vec<(String, f64)>,
    intercept: f64,
    /// Kernel-weighted R² of the linear fit against the black box.
    r2: f64,
    kernel_width: f64,
    n_samples: usize,
    seed: u64,
    /// True when the normal equations were singular and a small diagonal
    /// loading was added to solve them; treat weights with extra care.
    ridge_fallback: bool,
}

impl SurrogateExplanation {
    pub fn weights(&self) -> &[(String, f64)] {
        &self.weights
    }

    pub fn weight(&self, feature: &str) -> Option<f64> {
        self.weights.iter().find(|(n, _)| n == feature).map(|(_, w)| *w)
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn kernel_width(&self) -> f64 {
        self.kernel_width
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ridge_fallback(&self) -> bool {
        self.ridge_fallback
    }
}

/// One feature's sampling recipe and the record's value for it.
enum Perturb {
    Categorical {
        idx: usize,
        name: String,
        /// Sampleable states (observed tokens, plus `None` when the
        /// column has missing cells) with cumulative row counts.
        states: Vec<Option<String>>,
        cumulative: Vec<usize>,
        record: Option<String>,
    },
    Numeric {
        idx: usize,
        name: String,
        std: f64,
        record: Option<f64>,
    },
}

/// One sampled cell.
#[derive(Clone)]
enum Cell {
    Token(Option<String>),
    Value(Option<f64>),
}

/// Explain `scorer`'s output on row `row` of `frame` with a locally
/// weighted linear model over `n_samples` perturbations (sample 0 is the
/// unperturbed record). Deterministic for fixed `(frame, row, seed)`.
pub fn local_surrogate<S>(
    scorer: S,
    frame: &Frame,
    row: usize,
    n_samples: usize,
    kernel_width: Option<f64>,
    seed: u64,
) -> Result<SurrogateExplanation>
where
    S: Fn(&Frame) -> Result<Vec<f64>>,
{
    if row >= frame.n_rows() {
        return Err(Error::data(format!(
            "surrogate: row {row} outside register of {} rows",
            frame.n_rows()
        )));
    }
    let perturbs = perturb_specs(frame, row)?;
    let d = perturbs.len();
    if n_samples < d + 2 {
        return Err(Error::config(format!(
            "surrogate: {n_samples} samples cannot constrain {d} features"
        )));
    }
    let width = match kernel_width {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => return Err(Error::config(format!("surrogate: bad kernel width {w}"))),
        None => 0.75 * (d as f64).sqrt(),
    };

    // Sample-major perturbation with one seeded stream per sample, so
    // batches parallelize without changing results.
    let salt = str_salt("surrogate-sample");
    let samples: Vec<Vec<Cell>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed ^ i, salt);
            perturbs
                .iter()
                .map(|p| {
                    if i == 0 {
                        return record_cell(p);
                    }
                    match p {
                        Perturb::Categorical { states, cumulative, .. } => {
                            let total = *cumulative.last().expect("non-empty register");
                            let t = rng.gen_range(0..total);
                            let s = cumulative.partition_point(|&c| c <= t);
                            Cell::Token(states[s].clone())
                        }
                        Perturb::Numeric { std, record, .. } => match record {
                            Some(x) => {
                                let noise = Normal::new(0.0, std.max(f64::MIN_POSITIVE))
                                    .expect("positive std")
                                    .sample(&mut rng);
                                Cell::Value(Some(x + noise))
                            }
                            // Nothing to jitter around; stays missing.
                            None => Cell::Value(None),
                        },
                    }
                })
                .collect()
        })
        .collect();

    let y = scorer(&assemble_frame(frame, row, &perturbs, &samples)?)?;
    if y.len() != n_samples {
        return Err(Error::data("surrogate: scorer returned a wrong-length vector"));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::data(format!("surrogate: non-finite score {bad}")));
    }

    // Design columns: intercept, then one column per feature; numeric
    // features missing on the record carry no information and are
    // excluded. Kernel distance is Hamming + standardized Euclidean.
    let design: Vec<&Perturb> = perturbs
        .iter()
        .filter(|p| !matches!(p, Perturb::Numeric { record: None, .. }))
        .collect();
    let p = design.len() + 1;
    let mut x = DMatrix::zeros(n_samples, p);
    let mut w = DVector::zeros(n_samples);
    for (i, sample) in samples.iter().enumerate() {
        x[(i, 0)] = 1.0;
        let mut dist2 = 0.0;
        let mut col = 1;
        for (cell, spec) in sample.iter().zip(&perturbs) {
            match (cell, spec) {
                (Cell::Token(t), Perturb::Categorical { record, .. }) => {
                    let same = t == record;
                    if !same {
                        dist2 += 1.0;
                    }
                    x[(i, col)] = f64::from(same);
                    col += 1;
                }
                (Cell::Value(v), Perturb::Numeric { std, record, .. }) => {
                    let Some(r) = record else { continue };
                    let v = v.expect("jittered values are present");
                    let scaled = (v - r) / std.max(f64::MIN_POSITIVE);
                    dist2 += scaled * scaled;
                    x[(i, col)] = v;
                    col += 1;
                }
                _ => unreachable!("cell kind follows spec kind"),
            }
        }
        w[i] = (-dist2 / (width * width)).exp();
    }

    // Weighted normal equations XᵀWX β = XᵀWy, with a diagonal ridge
    // when the design is (numerically) singular.
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for i in 0..n_samples {
        let xi = x.row(i).transpose();
        a += &xi * xi.transpose() * w[i];
        b += xi * (w[i] * y[i]);
    }
    let singular_values = a.clone().svd(false, false).singular_values;
    let s_max = singular_values.max();
    let ridge_fallback = singular_values.min() <= s_max * 1e-10;
    if ridge_fallback {
        let loading = (s_max * 1e-8).max(1e-12);
        for j in 0..p {
            a[(j, j)] += loading;
        }
    }
    let beta = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::internal("surrogate: normal equations unsolvable after ridge"))?;

    // Kernel-weighted fit quality.
    let w_total: f64 = w.iter().sum();
    let y_bar = w.iter().zip(&y).map(|(wi, yi)| wi * yi).sum::<f64>() / w_total;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n_samples {
        let fitted: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
        ss_res += w[i] * (y[i] - fitted) * (y[i] - fitted);
        ss_tot += w[i] * (y[i] - y_bar) * (y[i] - y_bar);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    let weights = design
        .iter()
        .zip(beta.iter().skip(1))
        .map(|(spec, &coeff)| {
            let name = match spec {
                Perturb::Categorical { name, .. } | Perturb::Numeric { name, .. } => name.clone(),
            };
            (name, coeff)
        })
        .collect();
    Ok(SurrogateExplanation {
        weights,
        intercept: beta[0],
        r2,
        kernel_width: width,
        n_samples,
        seed,
        ridge_fallback,
    })
}

fn record_cell(p: &Perturb) -> Cell {
    match p {
        Perturb::Categorical { record, .. } => Cell::Token(record.clone()),
        Perturb::Numeric { record, .. } => Cell::Value(*record),
    }
}

/// Sampling recipes for every feature column, anchored at `row`.
fn perturb_specs(frame: &Frame, row: usize) -> Result<Vec<Perturb>> {
    let mut out = Vec::new();
    for (idx, spec) in frame.schema().feature_columns() {
        match frame.column(idx) {
            ColumnData::Categorical(col) => {
                let mut counts = vec![0usize; col.categories().len()];
                let mut missing = 0usize;
                for code in col.codes() {
                    match code {
                        Some(c) => counts[*c as usize] += 1,
                        None => missing += 1,
                    }
                }
                let mut states: Vec<Option<String>> =
                    col.categories().iter().cloned().map(Some).collect();
                let mut cumulative = Vec::with_capacity(states.len() + 1);
                let mut running = 0usize;
                for c in &counts {
                    running += c;
                    cumulative.push(running);
                }
                if missing > 0 {
                    states.push(None);
                    running += missing;
                    cumulative.push(running);
                }
                out.push(Perturb::Categorical {
                    idx,
                    name: spec.name.clone(),
                    states,
                    cumulative,
                    record: col.token(row).map(str::to_string),
                });
            }
            ColumnData::Numeric(vals) => {
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                let std = if present.is_empty() {
                    0.0
                } else {
                    let mean = present.iter().sum::<f64>() / present.len() as f64;
                    (present.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / present.len() as f64)
                        .sqrt()
                };
                out.push(Perturb::Numeric {
                    idx,
                    name: spec.name.clone(),
                    std,
                    record: vals[row],
                });
            }
            _ => unreachable!("feature_columns yields only feature kinds"),
        }
    }
    if out.is_empty() {
        return Err(Error::data("surrogate: register has no feature columns"));
    }
    Ok(out)
}

/// The perturbed register: sampled feature cells; id cells name the
/// sample; timestamp and label cells replicate the record's row.
fn assemble_frame(
    frame: &Frame,
    row: usize,
    perturbs: &[Perturb],
    samples: &[Vec<Cell>],
) -> Result<Frame> {
    let n = samples.len();
    let mut columns: Vec<ColumnData> = Vec::with_capacity(frame.schema().columns().len());
    for (idx, spec) in frame.schema().columns().iter().enumerate() {
        let feature_slot = perturbs.iter().position(|p| match p {
            Perturb::Categorical { idx: i, .. } | Perturb::Numeric { idx: i, .. } => *i == idx,
        });
        let data = match (spec.kind, feature_slot) {
            (ColumnKind::Categorical, Some(slot)) => {
                ColumnData::Categorical(CategoricalColumn::from_tokens(samples.iter().map(
                    |s| match &s[slot] {
                        Cell::Token(t) => t.as_deref(),
                        Cell::Value(_) => unreachable!("cell kind follows spec kind"),
                    },
                )))
            }
            (ColumnKind::Numeric, Some(slot)) => ColumnData::Numeric(
                samples
                    .iter()
                    .map(|s| match &s[slot] {
                        Cell::Value(v) => *v,
                        Cell::Token(_) => unreachable!("cell kind follows spec kind"),
                    })
                    .collect(),
            ),
            (ColumnKind::Id, None) => {
                ColumnData::Id((0..n).map(|i| format!("sample-{i}")).collect())
            }
            (ColumnKind::Timestamp, None) => match frame.column(idx) {
                ColumnData::Timestamp(v) => ColumnData::Timestamp(vec![v[row]; n]),
                _ => return Err(Error::internal("timestamp column holds non-timestamp data")),
            },
            (ColumnKind::Label, None) => ColumnData::Label(vec![0; n]),
            _ => return Err(Error::internal("column kind/slot mismatch in surrogate")),
        };
        columns.push(data);
    }
    Frame::new(frame.schema().clone(), columns)
}
