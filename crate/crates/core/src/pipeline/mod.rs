//! End-to-end evaluation pipeline: ingest scenarios, score both drivers
//! under every criterion and game type, classify sociality, collect PET and
//! aggregate statistics into a serializable report.

pub mod config;
pub mod ingest;
pub mod pet;
pub mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{recorded_actions, CalibrationResult};
use crate::error::Result;
use crate::game::rollout::rollout_interaction;
use crate::game::{GameConfig, GameType};
use crate::model::{ScenarioRecord, VehicleRole};
use crate::risk::RiskParams;
use crate::scoring::{score_breakdown, score_to_level, AbilityLevel, AbilityScore, Criterion};
use crate::stats::{
    summarize, t_test_pooled_from_summary, t_test_welch_from_summary, SampleSummary, TTestResult,
};

/// Sociality classification of one driver from their comprehensive scores
/// under the two game frameworks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sociality {
    StrongerCompetition,
    Balance,
    StrongerCooperation,
    Unclassified,
}

impl Sociality {
    pub const ALL: [Sociality; 4] = [
        Sociality::StrongerCompetition,
        Sociality::Balance,
        Sociality::StrongerCooperation,
        Sociality::Unclassified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Sociality::StrongerCompetition => "stronger_competition",
            Sociality::Balance => "balance",
            Sociality::StrongerCooperation => "stronger_cooperation",
            Sociality::Unclassified => "unclassified",
        }
    }
}

/// Margin of the sociality rule: the gap between shifted scores must exceed
/// this fraction of the smaller shifted score.
pub const SOCIALITY_MARGIN: f64 = 0.05;

/// Human-readable statement of the sociality rule, embedded in reports.
pub const SOCIALITY_RULE: &str = "scores are shifted to (s+1)/2 in [0,1]; a driver is \
    stronger_cooperation (resp. stronger_competition) when the cooperative (resp. \
    non-cooperative) shifted score exceeds the other by more than 5% of the smaller \
    shifted score, balance otherwise";

/// Classify a driver's sociality by comparing comprehensive-criterion scores
/// under the non-cooperative and cooperative frameworks. Missing scores
/// (e.g. rollout timeouts) yield `Unclassified`.
pub fn classify_sociality(nc_score: Option<f64>, c_score: Option<f64>) -> Sociality {
    let (Some(nc), Some(c)) = (nc_score, c_score) else {
        return Sociality::Unclassified;
    };
    if !nc.is_finite() || !c.is_finite() {
        return Sociality::Unclassified;
    }
    let nc_shifted = (nc + 1.0) / 2.0;
    let c_shifted = (c + 1.0) / 2.0;
    let threshold = SOCIALITY_MARGIN * nc_shifted.min(c_shifted);
    let diff = c_shifted - nc_shifted;
    if diff > threshold {
        Sociality::StrongerCooperation
    } else if -diff > threshold {
        Sociality::StrongerCompetition
    } else {
        Sociality::Balance
    }
}

/// A (criterion, game type) combination whose rollout did not finish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCombination {
    pub criterion: Criterion,
    pub game_type: GameType,
    pub reason: String,
}

/// Evaluation result of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvaluation {
    pub scenario_id: String,
    /// Up to 12 records: 2 drivers x 3 criteria x 2 game types.
    pub scores: Vec<AbilityScore>,
    /// Combinations whose rollout timed out.
    pub skipped: Vec<SkippedCombination>,
    /// Sociality per driver role.
    pub sociality: BTreeMap<String, Sociality>,
    /// Post Encroachment Time, s, when both vehicles crossed the region.
    pub pet: Option<f64>,
    pub pet_note: Option<String>,
}

/// Evaluate one scenario: roll out the rational benchmark for every
/// criterion and game type, score both drivers against it, classify
/// sociality and measure PET.
pub fn evaluate_scenario(
    s: &ScenarioRecord,
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<ScenarioEvaluation> {
    s.validate()?;
    params.validate()?;
    let mut scores = Vec::with_capacity(12);
    let mut skipped = Vec::new();
    for criterion in Criterion::ALL {
        for game_type in GameType::BOTH {
            let run_cfg = GameConfig {
                rationality: criterion.rationality(),
                game_type,
                ..cfg.clone()
            };
            let outcome = rollout_interaction(s, &run_cfg, params)?;
            if let Some(diag) = &outcome.timeout {
                skipped.push(SkippedCombination {
                    criterion,
                    game_type,
                    reason: format!(
                        "rollout timed out after {} steps (left passed: {}, straight passed: {})",
                        diag.max_steps, diag.left_passed, diag.straight_passed
                    ),
                });
                continue;
            }
            for role in VehicleRole::BOTH {
                let real = recorded_actions(s.trajectory(role), s.dist_to_conflict(role), s.dt);
                let (score, d_msd, cosine) = score_breakdown(&real, outcome.actions(role))?;
                scores.push(AbilityScore {
                    scenario_id: s.scenario_id.clone(),
                    role,
                    criterion,
                    game_type,
                    score,
                    level: score_to_level(score),
                    morphological_distance: d_msd,
                    cosine_similarity: cosine,
                });
            }
        }
    }

    let mut sociality = BTreeMap::new();
    for role in VehicleRole::BOTH {
        let find = |gt: GameType| {
            scores
                .iter()
                .find(|r| {
                    r.role == role && r.criterion == Criterion::Comprehensive && r.game_type == gt
                })
                .map(|r| r.score)
        };
        sociality.insert(
            role.as_str().to_string(),
            classify_sociality(find(GameType::NonCooperative), find(GameType::Cooperative)),
        );
    }

    let (pet, pet_note) = match pet::pet_of_event(s) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };

    Ok(ScenarioEvaluation {
        scenario_id: s.scenario_id.clone(),
        scores,
        skipped,
        sociality,
        pet,
        pet_note,
    })
}

/// Mean / spread summary of one score group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregate {
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub std_error: Option<f64>,
}

impl GroupAggregate {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return GroupAggregate {
                n,
                mean: None,
                std: None,
                std_error: None,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return GroupAggregate {
                n,
                mean: Some(mean),
                std: None,
                std_error: None,
            };
        }
        let s = summarize(values).expect("n >= 2 finite values");
        GroupAggregate {
            n,
            mean: Some(s.mean),
            std: Some(s.sd),
            std_error: Some(s.sd / (n as f64).sqrt()),
        }
    }
}

/// PET sample statistics across scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetSummary {
    pub count: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub std_error: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// Two-dataset comparison entry (filled by the compare command).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub label: String,
    pub group_a: SampleSummary,
    pub group_b: SampleSummary,
    pub pooled: TTestResult,
    pub welch: TTestResult,
}

/// Compare two independent samples with both two-sample t-test variants.
pub fn compare_groups(label: &str, a: SampleSummary, b: SampleSummary) -> Result<GroupComparison> {
    Ok(GroupComparison {
        label: label.to_string(),
        group_a: a,
        group_b: b,
        pooled: t_test_pooled_from_summary(a, b)?,
        welch: t_test_welch_from_summary(a, b)?,
    })
}

/// Report header: configuration and conventions the numbers depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub sociality_rule: String,
    pub game: GameConfig,
    pub risk: RiskParams,
}

/// Complete evaluation output over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub scenarios: Vec<ScenarioEvaluation>,
    /// Aggregates keyed by "criterion/game_type".
    pub aggregates: BTreeMap<String, GroupAggregate>,
    /// Level histograms keyed by "criterion/game_type", then level.
    pub level_histograms: BTreeMap<String, BTreeMap<String, usize>>,
    /// Percentage of drivers per sociality class (sums to 100).
    pub sociality_percentages: BTreeMap<String, f64>,
    pub pet: PetSummary,
    /// Total number of skipped (criterion, game type) combinations.
    pub timeout_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<GroupComparison>,
}

fn group_key(criterion: Criterion, game_type: GameType) -> String {
    format!("{}/{}", criterion.as_str(), game_type.as_str())
}

/// Build the aggregate sections of a report from per-scenario evaluations.
pub fn assemble_report(
    mut evaluations: Vec<ScenarioEvaluation>,
    cfg: &GameConfig,
    params: &RiskParams,
) -> EvaluationReport {
    evaluations.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));

    let mut aggregates = BTreeMap::new();
    let mut level_histograms = BTreeMap::new();
    for criterion in Criterion::ALL {
        for game_type in GameType::BOTH {
            let key = group_key(criterion, game_type);
            let values: Vec<f64> = evaluations
                .iter()
                .flat_map(|e| &e.scores)
                .filter(|r| r.criterion == criterion && r.game_type == game_type)
                .map(|r| r.score)
                .collect();
            aggregates.insert(key.clone(), GroupAggregate::from_values(&values));

            let mut hist: BTreeMap<String, usize> = [
                AbilityLevel::I,
                AbilityLevel::II,
                AbilityLevel::III,
                AbilityLevel::IV,
                AbilityLevel::V,
            ]
            .iter()
            .map(|l| (l.as_str().to_string(), 0usize))
            .collect();
            for e in &evaluations {
                for r in &e.scores {
                    if r.criterion == criterion && r.game_type == game_type {
                        *hist.get_mut(r.level.as_str()).expect("all levels present") += 1;
                    }
                }
            }
            level_histograms.insert(key, hist);
        }
    }

    let mut class_counts: BTreeMap<String, usize> = Sociality::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), 0usize))
        .collect();
    let mut driver_total = 0usize;
    for e in &evaluations {
        for class in e.sociality.values() {
            *class_counts
                .get_mut(class.as_str())
                .expect("all classes present") += 1;
            driver_total += 1;
        }
    }
    let sociality_percentages = class_counts
        .into_iter()
        .map(|(k, count)| {
            let pct = if driver_total == 0 {
                0.0
            } else {
                100.0 * count as f64 / driver_total as f64
            };
            (k, pct)
        })
        .collect();

    let pet_values: Vec<f64> = evaluations.iter().filter_map(|e| e.pet).collect();
    let pet = if pet_values.is_empty() {
        PetSummary {
            count: 0,
            missing: evaluations.len(),
            mean: None,
            std: None,
            std_error: None,
            min: None,
            max: None,
        }
    } else {
        let agg = GroupAggregate::from_values(&pet_values);
        PetSummary {
            count: pet_values.len(),
            missing: evaluations.len() - pet_values.len(),
            mean: agg.mean,
            std: agg.std,
            std_error: agg.std_error,
            min: pet_values.iter().copied().reduce(f64::min),
            max: pet_values.iter().copied().reduce(f64::max),
        }
    };

    let timeout_count = evaluations.iter().map(|e| e.skipped.len()).sum();

    EvaluationReport {
        metadata: ReportMetadata {
            sociality_rule: SOCIALITY_RULE.to_string(),
            game: cfg.clone(),
            risk: *params,
        },
        scenarios: evaluations,
        aggregates,
        level_histograms,
        sociality_percentages,
        pet,
        timeout_count,
        calibration: None,
        comparisons: Vec::new(),
    }
}

/// Evaluate a whole dataset in parallel and assemble the report.
pub fn evaluate_manifest(
    scenarios: &[ScenarioRecord],
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<EvaluationReport> {
    let evaluations: Vec<ScenarioEvaluation> = scenarios
        .par_iter()
        .map(|s| evaluate_scenario(s, cfg, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(evaluations, cfg, params))
}
