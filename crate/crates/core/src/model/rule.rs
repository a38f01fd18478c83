//! Rule-based baseline scorers.
//!
//! Field programs prioritize follow-up with checklists: a patient matching
//! more risk conditions ranks higher. A [`Rule`] is such a checklist; its
//! score is the fraction of conditions the episode satisfies, so scores
//! live on the coarse grid {0, 1/K, …, 1} and produce heavily tied
//! rankings (ties are resolved downstream by stable original-index order).
//!
//! Three standard checklists ship as [`builtin_rules`], from the simple
//! clinical triad to a twelve-condition literature-derived list. Missing
//! cells never qualify: an unknown HIV status is not evidence of risk.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColumnData, ColumnKind, Frame};

/// One qualifying condition on a feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Categorical cell qualifies when its token is in the set.
    InSet(BTreeSet<String>),
    /// Numeric cell qualifies when lo ≤ value ≤ hi (inclusive).
    InRange { lo: f64, hi: f64 },
}

impl Condition {
    fn of_tokens(tokens: &[&str]) -> Condition {
        Condition::InSet(tokens.iter().map(|t| t.to_string()).collect())
    }
}

/// A named checklist of (feature, condition) pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub conditions: Vec<(String, Condition)>,
}

impl Rule {
    pub fn new(name: impl Into<String>, conditions: Vec<(String, Condition)>) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::config("rule: needs at least one condition"));
        }
        Ok(Rule { name: name.into(), conditions })
    }

    /// Check that every condition refers to an existing column of the
    /// right kind.
    pub fn validate_against(&self, frame: &Frame) -> Result<()> {
        for (feature, condition) in &self.conditions {
            let idx = frame.schema().column_index(feature).ok_or_else(|| {
                Error::config(format!("rule `{}`: unknown feature `{feature}`", self.name))
            })?;
            let kind = frame.schema().columns()[idx].kind;
            let ok = match condition {
                Condition::InSet(_) => kind == ColumnKind::Categorical,
                Condition::InRange { .. } => kind == ColumnKind::Numeric,
            };
            if !ok {
                return Err(Error::config(format!(
                    "rule `{}`: condition on `{feature}` does not match column kind {}",
                    self.name,
                    kind.as_str()
                )));
            }
        }
        Ok(())
    }

    /// Fraction of conditions each row satisfies. Missing cells do not
    /// qualify.
    pub fn score_frame(&self, frame: &Frame) -> Result<Vec<f64>> {
        self.validate_against(frame)?;
        let total = self.conditions.len() as f64;
        let mut hits = vec![0usize; frame.n_rows()];
        for (feature, condition) in &self.conditions {
            let col = frame.column_by_name(feature)?;
            match (condition, col) {
                (Condition::InSet(set), ColumnData::Categorical(cat)) => {
                    // Resolve qualifying codes once per column.
                    let qualifying: Vec<bool> =
                        cat.categories().iter().map(|t| set.contains(t)).collect();
                    for (row, code) in cat.codes().iter().enumerate() {
                        if let Some(c) = code {
                            if qualifying[*c as usize] {
                                hits[row] += 1;
                            }
                        }
                    }
                }
                (Condition::InRange { lo, hi }, ColumnData::Numeric(values)) => {
                    for (row, v) in values.iter().enumerate() {
                        if let Some(x) = v {
                            if *lo <= *x && *x <= *hi {
                                hits[row] += 1;
                            }
                        }
                    }
                }
                _ => unreachable!("validated above"),
            }
        }
        Ok(hits.into_iter().map(|h| h as f64 / total).collect())
    }
}

/// The three built-in checklists, with qualifying categories from the
/// register data dictionary.
///
/// * Rule 1 — clinical triad: alcohol history, HIV+, diabetes+.
/// * Rule 2 — adds case type (drug-resistant/retreatment), age ≥ 60, and
///   absent household contacts above age six.
/// * Rule 3 — twelve-condition literature list (the strongest baseline):
///   age 18–45, case type, HIV+, diabetes+, male/transgender, migrant,
///   alcohol, absent household contacts, microbiological confirmation,
///   pulmonary site, UDST done, and no bank details on record.
pub fn builtin_rules() -> Vec<Rule> {
    let rule1 = Rule::new(
        "rule1",
        vec![
            ("AlcoholIntake".into(), Condition::of_tokens(&["present"])),
            ("HIVStatus".into(), Condition::of_tokens(&["positive"])),
            ("DiabetesStatus".into(), Condition::of_tokens(&["positive"])),
        ],
    )
    .expect("static rule");

    let rule2 = Rule::new(
        "rule2",
        vec![
            ("TypeOfCase".into(), Condition::of_tokens(&["DRTB", "retreatment"])),
            ("HIVStatus".into(), Condition::of_tokens(&["positive"])),
            ("DiabetesStatus".into(), Condition::of_tokens(&["positive"])),
            ("Age".into(), Condition::InRange { lo: 60.0, hi: f64::MAX }),
            ("HouseholdContactsAboveSix".into(), Condition::of_tokens(&["absent"])),
        ],
    )
    .expect("static rule");

    let rule3 = Rule::new(
        "rule3",
        vec![
            ("Age".into(), Condition::InRange { lo: 18.0, hi: 45.0 }),
            ("TypeOfCase".into(), Condition::of_tokens(&["DRTB", "retreatment"])),
            ("HIVStatus".into(), Condition::of_tokens(&["positive"])),
            ("DiabetesStatus".into(), Condition::of_tokens(&["positive"])),
            ("Gender".into(), Condition::of_tokens(&["male", "transgender"])),
            ("MigrantStatus".into(), Condition::of_tokens(&["yes"])),
            ("AlcoholIntake".into(), Condition::of_tokens(&["present"])),
            ("HouseholdContactsAboveSix".into(), Condition::of_tokens(&["absent"])),
            ("MicrobiologicallyConfirmed".into(), Condition::of_tokens(&["yes"])),
            ("DiseaseSite".into(), Condition::of_tokens(&["pulmonary"])),
            ("UDSTDone".into(), Condition::of_tokens(&["yes"])),
            ("BankDetailsAdded".into(), Condition::of_tokens(&["no"])),
        ],
    )
    .expect("static rule");

    vec![rule1, rule2, rule3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{CategoricalColumn, ColumnSpec, Schema};

    fn clinic_frame() -> Frame {
        let schema = Schema::new(
            vec![
                ColumnSpec::new("AlcoholIntake", ColumnKind::Categorical),
                ColumnSpec::new("HIVStatus", ColumnKind::Categorical),
                ColumnSpec::new("DiabetesStatus", ColumnKind::Categorical),
                ColumnSpec::new("Age", ColumnKind::Numeric),
            ],
            "1",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![
                    Some("present"),
                    Some("absent"),
                    None,
                ])),
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![
                    Some("positive"),
                    Some("negative"),
                    Some("positive"),
                ])),
                ColumnData::Categorical(CategoricalColumn::from_tokens(vec![
                    Some("positive"),
                    Some("negative"),
                    None,
                ])),
                ColumnData::Numeric(vec![Some(65.0), Some(30.0), Some(70.0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn all_some_and_none_matching() {
        let rule1 = builtin_rules().remove(0);
        let scores = rule1.score_frame(&clinic_frame()).unwrap();
        // Row 0 qualifies on all three; row 1 on none; row 2 only HIV
        // (missing cells never qualify).
        assert_eq!(scores, vec![1.0, 0.0, 1.0 / 3.0]);
    }

    #[test]
    fn numeric_interval_condition() {
        let rule = Rule::new(
            "age-band",
            vec![("Age".into(), Condition::InRange { lo: 60.0, hi: f64::MAX })],
        )
        .unwrap();
        let scores = rule.score_frame(&clinic_frame()).unwrap();
        assert_eq!(scores, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn twelve_condition_rule_fraction() {
        // Synthetic register carries all rule-3 features; check scores
        // live on the {0, 1/12, ..., 1} grid and validation passes.
        let (frame, _) = crate::frame::generate(
            &crate::frame::GeneratorConfig { rows: 500, ..Default::default() },
            3,
        )
        .unwrap();
        let rule3 = builtin_rules().remove(2);
        assert_eq!(rule3.conditions.len(), 12);
        let scores = rule3.score_frame(&frame).unwrap();
        for s in &scores {
            let grid = s * 12.0;
            assert!((grid - grid.round()).abs() < 1e-9);
            assert!((0.0..=1.0).contains(s));
        }
        // A row qualifying on 4 of 12 conditions scores exactly 1/3.
        assert!(scores.iter().any(|&s| (s - 1.0 / 3.0).abs() < 1e-9));
    }

    #[test]
    fn kind_mismatch_and_unknown_feature_rejected() {
        let bad_kind =
            Rule::new("bad", vec![("Age".into(), Condition::of_tokens(&["x"]))]).unwrap();
        assert!(bad_kind.score_frame(&clinic_frame()).is_err());
        let unknown =
            Rule::new("bad", vec![("Nope".into(), Condition::of_tokens(&["x"]))]).unwrap();
        assert!(unknown.score_frame(&clinic_frame()).is_err());
        assert!(Rule::new("empty", vec![]).is_err());
    }
}
