//! Synthetic treatment-episode registers with known ground truth.
//!
//! The generator draws episodes whose LFU probability follows a planted
//! additive-logit model: every categorical value and every numeric feature
//! (through piecewise-linear shapes) contributes a known amount, and a
//! per-half base offset is calibrated by bisection so realized prevalence
//! matches configured targets in each half of the observation window. The
//! returned [`GroundTruth`] can recompute each row's exact probability,
//! giving tests an oracle ranking to compare models against.
//!
//! Planted structure worth knowing about:
//!
//! * `BankDetailsAdded = yes` is strongly protective — the dominant signal.
//! * Facility names embed a risk tier (`tbu-high-017`), so string-similarity
//!   encoders have real substructure to exploit.
//! * One "contrary" district inverts the bank/reason effects, creating a
//!   cohort on which a globally-fitted model underperforms (used to
//!   exercise cohort repair).
//! * `NoiseBlock`/`NoiseBatch` carry no signal; `RegimenCode` is constant
//!   and never missing, so its permutation importance is exactly zero.
//! * Missingness is injected before probabilities are computed: a masked
//!   cell contributes nothing to the logit, making absence itself part of
//!   the data-generating process (and keeping the truth recomputable from
//!   the masked register).

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ColumnData, ColumnKind, ColumnSpec, Frame, Schema};
use crate::util::{sigmoid, str_salt, sub_rng};

/// Column names with planted roles, shared with tests.
pub const DISTRICT_COL: &str = "CurrentFacilityDistrict";
pub const DOMINANT_COL: &str = "BankDetailsAdded";
pub const CONSTANT_COL: &str = "RegimenCode";
pub const AGE_COL: &str = "Age";

/// Generator parameters. Defaults mirror the observed register: ~3.42%
/// prevalence in the first half of the window, 2.78% in the second, and
/// 9.17% of feature cells missing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub rows: usize,
    /// Months span 0..months; the prevalence targets apply to each half.
    pub months: i64,
    pub districts: usize,
    pub tbus: usize,
    pub phis: usize,
    pub first_half_prevalence: f64,
    pub second_half_prevalence: f64,
    pub missing_rate: f64,
    /// Plant a district whose bank/reason effects are inverted.
    pub contrary_district: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            rows: 20_000,
            months: 24,
            districts: 40,
            tbus: 320,
            phis: 640,
            first_half_prevalence: 0.0342,
            second_half_prevalence: 0.0278,
            missing_rate: 0.0917,
            contrary_district: true,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::config("generator: rows must be positive"));
        }
        if self.months < 2 {
            return Err(Error::config("generator: need at least two months"));
        }
        if self.districts == 0 || self.tbus < self.districts || self.phis < self.tbus {
            return Err(Error::config(
                "generator: facility hierarchy requires phis >= tbus >= districts >= 1",
            ));
        }
        for (name, p) in [
            ("first_half_prevalence", self.first_half_prevalence),
            ("second_half_prevalence", self.second_half_prevalence),
        ] {
            if !(0.0..1.0).contains(&p) || p <= 0.0 {
                return Err(Error::config(format!("generator: {name} must be in (0, 1)")));
            }
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::config("generator: missing_rate must be in [0, 1)"));
        }
        Ok(())
    }
}

/// The planted data-generating process, sufficient to recompute every
/// row's exact LFU probability from the (masked) register.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    /// Calibrated base logit for each month index.
    pub base_logit_by_month: Vec<f64>,
    /// feature -> category -> additive logit. Absent categories contribute 0.
    pub category_logit: BTreeMap<String, BTreeMap<String, f64>>,
    /// feature -> piecewise-linear (x, logit) knots for numeric features.
    pub numeric_knots: BTreeMap<String, Vec<(f64, f64)>>,
    /// District whose rows use `override_logit` instead of `category_logit`
    /// for the overridden features.
    pub contrary_district: Option<String>,
    /// feature -> category -> additive logit, applied only to contrary rows.
    pub override_logit: BTreeMap<String, BTreeMap<String, f64>>,
}

impl GroundTruth {
    /// Exact generating logit of `row`. The frame must be generator output
    /// (pre-imputation): filled-in cells would shift contributions.
    pub fn true_logit(&self, frame: &Frame, row: usize) -> Result<f64> {
        let month = frame.months()?[row];
        let base = *self
            .base_logit_by_month
            .get(usize::try_from(month).map_err(|_| Error::data("negative month index"))?)
            .ok_or_else(|| Error::data(format!("month {month} outside generated window")))?;

        let contrary_row = match &self.contrary_district {
            Some(d) => frame
                .column_by_name(DISTRICT_COL)?
                .as_categorical()
                .ok_or_else(|| Error::data("district column is not categorical"))?
                .token(row)
                == Some(d.as_str()),
            None => false,
        };

        let mut logit = base;
        for (idx, spec) in frame.schema().feature_columns() {
            match frame.column(idx) {
                ColumnData::Categorical(col) => {
                    let Some(token) = col.token(row) else { continue };
                    let table = if contrary_row && self.override_logit.contains_key(&spec.name) {
                        &self.override_logit[&spec.name]
                    } else if let Some(t) = self.category_logit.get(&spec.name) {
                        t
                    } else {
                        continue;
                    };
                    logit += table.get(token).copied().unwrap_or(0.0);
                }
                ColumnData::Numeric(vals) => {
                    let Some(x) = vals[row] else { continue };
                    if let Some(knots) = self.numeric_knots.get(&spec.name) {
                        logit += interp(knots, x);
                    }
                }
                _ => {}
            }
        }
        Ok(logit)
    }

    /// Exact generating probability of `row`.
    pub fn true_probability(&self, frame: &Frame, row: usize) -> Result<f64> {
        Ok(sigmoid(self.true_logit(frame, row)?))
    }

    /// Oracle scores for every row — the best ranking any model can hope
    /// to recover.
    pub fn oracle_scores(&self, frame: &Frame) -> Result<Vec<f64>> {
        (0..frame.n_rows()).map(|r| self.true_probability(frame, r)).collect()
    }
}

/// Piecewise-linear interpolation, clamped to the knot range.
fn interp(knots: &[(f64, f64)], x: f64) -> f64 {
    debug_assert!(!knots.is_empty());
    if x <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
            return y0 + t * (y1 - y0);
        }
    }
    knots[knots.len() - 1].1
}

/// Simple independent categorical feature: (token, sampling share, logit).
struct CatSpec {
    name: &'static str,
    cats: &'static [(&'static str, f64, f64)],
}

const SIMPLE_CATS: &[CatSpec] = &[
    CatSpec {
        name: "CurrentFacilityPHIType",
        cats: &[("public", 0.72, 0.0), ("private", 0.28, 0.12)],
    },
    CatSpec {
        name: "Gender",
        cats: &[("female", 0.40, 0.0), ("male", 0.59, 0.15), ("transgender", 0.01, 0.25)],
    },
    CatSpec { name: "TypeOfCase", cats: &[("DSTB", 0.967, 0.0), ("DRTB", 0.033, 1.4)] },
    CatSpec { name: DOMINANT_COL, cats: &[("yes", 0.68, -2.0), ("no", 0.32, 0.0)] },
    CatSpec {
        name: "ReasonForTesting",
        cats: &[("diagnosis", 0.78, 0.0), ("follow-up", 0.22, 1.0)],
    },
    CatSpec {
        name: "HIVStatus",
        cats: &[("negative", 0.92, 0.0), ("positive", 0.05, 0.7), ("unknown", 0.03, 0.2)],
    },
    CatSpec {
        name: "DiabetesStatus",
        cats: &[("negative", 0.88, 0.0), ("positive", 0.12, 0.3)],
    },
    CatSpec { name: "AlcoholIntake", cats: &[("absent", 0.80, 0.0), ("present", 0.20, 0.5)] },
    CatSpec { name: "MigrantStatus", cats: &[("no", 0.90, 0.0), ("yes", 0.10, 0.4)] },
    CatSpec {
        name: "HouseholdContactsAboveSix",
        cats: &[("present", 0.85, 0.0), ("absent", 0.15, 0.3)],
    },
    CatSpec {
        name: "MicrobiologicallyConfirmed",
        cats: &[("yes", 0.70, 0.15), ("no", 0.30, 0.0)],
    },
    CatSpec {
        name: "DiseaseSite",
        cats: &[("pulmonary", 0.80, 0.1), ("extrapulmonary", 0.20, 0.0)],
    },
    CatSpec { name: "UDSTDone", cats: &[("yes", 0.60, 0.0), ("no", 0.40, 0.1)] },
    CatSpec { name: "ContactTracingDone", cats: &[("yes", 0.75, -0.25), ("no", 0.25, 0.0)] },
    CatSpec {
        name: "NoiseBlock",
        cats: &[
            ("block-a", 0.125, 0.0),
            ("block-b", 0.125, 0.0),
            ("block-c", 0.125, 0.0),
            ("block-d", 0.125, 0.0),
            ("block-e", 0.125, 0.0),
            ("block-f", 0.125, 0.0),
            ("block-g", 0.125, 0.0),
            ("block-h", 0.125, 0.0),
        ],
    },
    CatSpec {
        name: "NoiseBatch",
        cats: &[
            ("batch-00", 0.2, 0.0),
            ("batch-01", 0.2, 0.0),
            ("batch-02", 0.2, 0.0),
            ("batch-03", 0.2, 0.0),
            ("batch-04", 0.2, 0.0),
        ],
    },
    CatSpec { name: CONSTANT_COL, cats: &[("std6", 1.0, 0.0)] },
];

const STATES: [(&str, f64); 4] = [
    ("Karnataka", -0.05),
    ("Maharashtra", 0.0),
    ("UttarPradesh", 0.10),
    ("WestBengal", -0.10),
];
const TIER_NAMES: [&str; 3] = ["low", "mid", "high"];
const DISTRICT_TIER_LOGIT: [f64; 3] = [-0.45, 0.0, 0.45];
const TBU_TIER_LOGIT: [f64; 3] = [-0.7, 0.0, 0.7];
const AGE_KNOTS: [(f64, f64); 5] =
    [(5.0, -0.5), (18.0, -0.5), (30.0, 0.45), (60.0, 0.45), (90.0, 0.95)];
const WEIGHT_KNOTS: [(f64, f64); 3] = [(25.0, 0.35), (45.0, 0.0), (80.0, 0.0)];
/// Index of the contrary district (tier "mid", so its own tier logit is 0).
const CONTRARY_DISTRICT_IDX: usize = 1;
/// Sampling weight multiplier for facilities in the contrary district.
const CONTRARY_WEIGHT: f64 = 2.5;

fn district_name(d: usize) -> String {
    format!("district-{}-{:02}", TIER_NAMES[d % 3], d)
}

fn tbu_name(t: usize) -> String {
    format!("tbu-{}-{:03}", TIER_NAMES[t % 3], t)
}

fn phi_name(p: usize) -> String {
    format!("phi-{p:04}")
}

/// Generate a register and its ground truth.
///
/// Deterministic in `(config, seed)`: every column draws from its own
/// seeded sub-stream, so results are stable under reordering of internal
/// work and under future column additions.
pub fn generate(config: &GeneratorConfig, seed: u64) -> Result<(Frame, GroundTruth)> {
    config.validate()?;
    let n = config.rows;

    // --- months ---
    let mut rng = sub_rng(seed, str_salt("TreatmentMonth"));
    let months: Vec<i64> = (0..n).map(|_| rng.gen_range(0..config.months)).collect();

    // --- facility hierarchy: sample PHI, derive TBU/district/state ---
    let tbu_of_phi = |p: usize| p % config.tbus;
    let district_of_tbu = |t: usize| t % config.districts;
    let contrary_name = config.contrary_district.then(|| {
        district_name(CONTRARY_DISTRICT_IDX.min(config.districts - 1))
    });
    let phi_weights: Vec<f64> = (0..config.phis)
        .map(|p| {
            let d = district_of_tbu(tbu_of_phi(p));
            if config.contrary_district && d == CONTRARY_DISTRICT_IDX.min(config.districts - 1) {
                CONTRARY_WEIGHT
            } else {
                1.0
            }
        })
        .collect();
    let phi_dist = WeightedIndex::new(&phi_weights)
        .map_err(|e| Error::internal(format!("phi weights: {e}")))?;
    let mut rng = sub_rng(seed, str_salt("CurrentFacilityPHI"));
    let phi_idx: Vec<usize> = (0..n).map(|_| phi_dist.sample(&mut rng)).collect();
    let phi_tokens: Vec<String> = phi_idx.iter().map(|&p| phi_name(p)).collect();
    let tbu_tokens: Vec<String> = phi_idx.iter().map(|&p| tbu_name(tbu_of_phi(p))).collect();
    let district_tokens: Vec<String> =
        phi_idx.iter().map(|&p| district_name(district_of_tbu(tbu_of_phi(p)))).collect();
    let state_tokens: Vec<&str> = phi_idx
        .iter()
        .map(|&p| STATES[district_of_tbu(tbu_of_phi(p)) % STATES.len()].0)
        .collect();

    // --- simple independent categoricals ---
    let mut simple_tokens: Vec<Vec<&'static str>> = Vec::with_capacity(SIMPLE_CATS.len());
    for spec in SIMPLE_CATS {
        let dist = WeightedIndex::new(spec.cats.iter().map(|c| c.1))
            .map_err(|e| Error::internal(format!("{}: {e}", spec.name)))?;
        let mut rng = sub_rng(seed, str_salt(spec.name));
        simple_tokens.push((0..n).map(|_| spec.cats[dist.sample(&mut rng)].0).collect());
    }

    // --- numeric features ---
    let mut rng = sub_rng(seed, str_salt(AGE_COL));
    let ages: Vec<f64> = (0..n).map(|_| rng.gen_range(5..=90) as f64).collect();
    let mut rng = sub_rng(seed, str_salt("WeightKg"));
    let normal = statrs::distribution::Normal::new(42.0, 8.0)
        .map_err(|e| Error::internal(format!("weight distribution: {e}")))?;
    let weights_kg: Vec<f64> = (0..n)
        .map(|_| ((normal.sample(&mut rng).clamp(25.0, 80.0)) * 10.0).round() / 10.0)
        .collect();

    // --- ground-truth tables ---
    let mut category_logit: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    category_logit.insert(
        "State".to_string(),
        STATES.iter().map(|&(s, c)| (s.to_string(), c)).collect(),
    );
    category_logit.insert(
        DISTRICT_COL.to_string(),
        (0..config.districts)
            .map(|d| (district_name(d), DISTRICT_TIER_LOGIT[d % 3]))
            .collect(),
    );
    category_logit.insert(
        "CurrentFacilityTBU".to_string(),
        (0..config.tbus).map(|t| (tbu_name(t), TBU_TIER_LOGIT[t % 3])).collect(),
    );
    for spec in SIMPLE_CATS {
        let table: BTreeMap<String, f64> = spec
            .cats
            .iter()
            .filter(|c| c.2 != 0.0)
            .map(|&(tok, _, coeff)| (tok.to_string(), coeff))
            .collect();
        if !table.is_empty() {
            category_logit.insert(spec.name.to_string(), table);
        }
    }
    let mut numeric_knots = BTreeMap::new();
    numeric_knots.insert(AGE_COL.to_string(), AGE_KNOTS.to_vec());
    numeric_knots.insert("WeightKg".to_string(), WEIGHT_KNOTS.to_vec());
    let mut override_logit: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    if config.contrary_district {
        override_logit.insert(
            DOMINANT_COL.to_string(),
            [("yes".to_string(), 0.6)].into_iter().collect(),
        );
        override_logit.insert(
            "ReasonForTesting".to_string(),
            [("follow-up".to_string(), -0.5)].into_iter().collect(),
        );
    }

    let mut truth = GroundTruth {
        seed,
        base_logit_by_month: vec![0.0; usize::try_from(config.months).unwrap_or(0)],
        category_logit,
        numeric_knots,
        contrary_district: contrary_name,
        override_logit,
    };

    // --- assemble the unlabeled register (masking included) ---
    let mut specs = vec![
        ColumnSpec::new("EpisodeID", ColumnKind::Id),
        ColumnSpec::new("TreatmentMonth", ColumnKind::Timestamp),
        ColumnSpec::new("State", ColumnKind::Categorical),
        ColumnSpec::new(DISTRICT_COL, ColumnKind::Categorical),
        ColumnSpec::new("CurrentFacilityTBU", ColumnKind::Categorical),
        ColumnSpec::new("CurrentFacilityPHI", ColumnKind::Categorical),
    ];
    let mut columns = vec![
        ColumnData::Id((0..n).map(|i| format!("ep-{i:08}")).collect()),
        ColumnData::Timestamp(months.clone()),
    ];

    // Feature cells masked at a rate scaled so that the register-wide
    // missing fraction matches `missing_rate` even though the constant
    // column is exempt (it must stay single-category).
    let n_feature_cols = 4 + SIMPLE_CATS.len() + 2; // facilities+state, simple, age+weight
    let n_maskable = n_feature_cols - 1;
    let mask_rate = config.missing_rate * n_feature_cols as f64 / n_maskable as f64;
    let mask_for = |col: &str| -> Vec<bool> {
        if col == CONSTANT_COL {
            return vec![false; n];
        }
        let mut rng = sub_rng(seed, str_salt(col) ^ str_salt("mask"));
        (0..n).map(|_| rng.gen::<f64>() < mask_rate).collect()
    };
    let masked_cat = |tokens: &[&str], mask: &[bool]| {
        CategoricalColumn::from_tokens(
            tokens.iter().zip(mask).map(|(t, &m)| if m { None } else { Some(*t) }),
        )
    };

    let state_mask = mask_for("State");
    columns.push(ColumnData::Categorical(masked_cat(&state_tokens, &state_mask)));
    for (name, tokens) in [
        (DISTRICT_COL, &district_tokens),
        ("CurrentFacilityTBU", &tbu_tokens),
        ("CurrentFacilityPHI", &phi_tokens),
    ] {
        let mask = mask_for(name);
        let toks: Vec<&str> = tokens.iter().map(String::as_str).collect();
        columns.push(ColumnData::Categorical(masked_cat(&toks, &mask)));
    }
    for (spec, tokens) in SIMPLE_CATS.iter().zip(&simple_tokens) {
        specs.push(ColumnSpec::new(spec.name, ColumnKind::Categorical));
        let mask = mask_for(spec.name);
        columns.push(ColumnData::Categorical(masked_cat(tokens, &mask)));
    }
    specs.push(ColumnSpec::new(AGE_COL, ColumnKind::Numeric));
    let age_mask = mask_for(AGE_COL);
    columns.push(ColumnData::Numeric(
        ages.iter().zip(&age_mask).map(|(&a, &m)| if m { None } else { Some(a) }).collect(),
    ));
    specs.push(ColumnSpec::new("WeightKg", ColumnKind::Numeric));
    let weight_mask = mask_for("WeightKg");
    columns.push(ColumnData::Numeric(
        weights_kg.iter().zip(&weight_mask).map(|(&w, &m)| if m { None } else { Some(w) }).collect(),
    ));

    let unlabeled =
        Frame::new(Schema::new(specs.clone(), "1")?, columns.clone())?;

    // --- calibrate per-half base logits against target prevalence ---
    let raw_logits: Vec<f64> =
        (0..n).map(|r| truth.true_logit(&unlabeled, r)).collect::<Result<_>>()?;
    let half = config.months / 2;
    for (target, in_half) in [
        (config.first_half_prevalence, Box::new(|m: i64| m < half) as Box<dyn Fn(i64) -> bool>),
        (config.second_half_prevalence, Box::new(move |m: i64| m >= half)),
    ] {
        let idx: Vec<usize> = (0..n).filter(|&r| in_half(months[r])).collect();
        if idx.is_empty() {
            return Err(Error::data(
                "generator: a half of the observation window received no rows",
            ));
        }
        let base = calibrate_base(&idx.iter().map(|&r| raw_logits[r]).collect::<Vec<_>>(), target);
        for m in 0..config.months {
            if in_half(m) {
                truth.base_logit_by_month[m as usize] = base;
            }
        }
    }

    // --- draw labels from the calibrated probabilities ---
    let mut rng = sub_rng(seed, str_salt("LFU"));
    let labels: Vec<u8> = (0..n)
        .map(|r| {
            let p = sigmoid(raw_logits[r] + truth.base_logit_by_month[months[r] as usize]);
            u8::from(rng.gen::<f64>() < p)
        })
        .collect();

    specs.push(ColumnSpec::new("LFU", ColumnKind::Label));
    columns.push(ColumnData::Label(labels));
    let frame = Frame::new(Schema::new(specs, "1")?, columns)?;
    Ok((frame, truth))
}

/// Bisection for `b` such that `mean(sigmoid(b + logit_i)) = target`.
fn calibrate_base(logits: &[f64], target: f64) -> f64 {
    let mean_p = |b: f64| logits.iter().map(|&l| sigmoid(b + l)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-20.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
