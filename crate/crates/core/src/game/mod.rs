//! Stage games between the left-turning and straight-driving players:
//! per-step kinematics, payoff styles, feasibility constraints and the
//! 3x3 payoff matrix construction. Solvers live in [`nash`] and [`coop`],
//! the full interaction loop in [`rollout`].

pub mod coop;
pub mod nash;
pub mod rollout;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::comprehensive_risk;
use crate::model::{ActionSequence, ScenarioRecord, StaticObject, VehicleGeometry, VehicleRole, VehicleState};
use crate::path::PathTrack;
use crate::risk::{RiskActor, RiskParams};

/// Payoff assigned to joint actions that violate the collision-avoidance
/// constraint (soft infinity).
pub const INFEASIBLE_PAYOFF: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameType {
    NonCooperative,
    Cooperative,
}

impl GameType {
    pub const BOTH: [GameType; 2] = [GameType::NonCooperative, GameType::Cooperative];

    pub fn as_str(self) -> &'static str {
        match self {
            GameType::NonCooperative => "non_cooperative",
            GameType::Cooperative => "cooperative",
        }
    }
}

impl std::fmt::Display for GameType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GameType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non_cooperative" => Ok(GameType::NonCooperative),
            "cooperative" => Ok(GameType::Cooperative),
            other => Err(Error::InvalidInput(format!(
                "unknown game type {other:?} (expected non_cooperative or cooperative)"
            ))),
        }
    }
}

/// What the rational agent optimizes at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationality {
    SafetyFirst,
    EfficiencyFirst,
    Comprehensive,
}

impl Rationality {
    pub const ALL: [Rationality; 3] = [
        Rationality::SafetyFirst,
        Rationality::EfficiencyFirst,
        Rationality::Comprehensive,
    ];
}

/// Source of the safety term in the payoff: the risk field, or the
/// arrival-gap (PET surrogate) baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyModel {
    RiskField,
    PetGap,
}

/// Stage-game configuration shared by both players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    /// Candidate accelerations: accelerate / hold / decelerate.
    pub strategy_accels: Vec<f64>,
    /// Weight of the efficiency term.
    pub m_weight: f64,
    /// Weight of the safety term; m + n = 1.
    pub n_weight: f64,
    /// Speed limit, m/s.
    pub v_max: f64,
    /// Acceleration magnitude limit, m/s^2.
    pub a_max: f64,
    /// Minimum admissible arrival-time separation, s.
    pub t_avoid: f64,
    /// Derive t_avoid per step from vehicle/conflict geometry instead of
    /// the fixed value.
    pub t_avoid_geometric: bool,
    /// Guard against division by zero in time-to-conflict terms.
    pub epsilon: f64,
    /// Step length, s.
    pub dt: f64,
    pub game_type: GameType,
    pub rationality: Rationality,
    pub safety_model: SafetyModel,
    /// Saturation point for the PET surrogate, s.
    pub pet_cap: f64,
    /// Rollout step budget.
    pub max_steps: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            strategy_accels: vec![1.5, 0.0, -1.5],
            m_weight: 0.5,
            n_weight: 0.5,
            v_max: 15.0,
            a_max: 3.0,
            t_avoid: 1.5,
            t_avoid_geometric: false,
            epsilon: 1e-6,
            dt: 0.1,
            game_type: GameType::NonCooperative,
            rationality: Rationality::Comprehensive,
            safety_model: SafetyModel::RiskField,
            pet_cap: 5.0,
            max_steps: 300,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strategy_accels.is_empty() {
            return Err(Error::InvalidGame("strategy set is empty".into()));
        }
        if self.strategy_accels.iter().any(|a| a.abs() > self.a_max + 1e-12) {
            return Err(Error::InvalidGame(format!(
                "strategy accelerations must satisfy |a| <= a_max = {}",
                self.a_max
            )));
        }
        if self.m_weight < 0.0 || self.n_weight < 0.0 || (self.m_weight + self.n_weight - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGame(format!(
                "payoff weights must be non-negative and sum to 1, got m = {}, n = {}",
                self.m_weight, self.n_weight
            )));
        }
        for (name, value) in [
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("t_avoid", self.t_avoid),
            ("epsilon", self.epsilon),
            ("dt", self.dt),
            ("pet_cap", self.pet_cap),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidGame(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidGame("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Index of the strongest deceleration in the strategy set.
    pub fn max_deceleration_index(&self) -> usize {
        self.strategy_accels
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("validated non-empty strategy set")
    }
}

/// One player's evolving state along its reference path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub role: VehicleRole,
    /// Current speed, m/s.
    pub v: f64,
    /// Distance traveled along the path since the scenario start, m.
    pub s_traveled: f64,
    /// Path distance from the scenario start to the conflict point, m.
    pub dist_to_conflict: f64,
    /// Accelerations realized so far.
    pub action_history: ActionSequence,
    pub passed_conflict: bool,
}

impl PlayerState {
    pub fn new(role: VehicleRole, v: f64, dist_to_conflict: f64, dt: f64) -> Self {
        PlayerState {
            role,
            v,
            s_traveled: 0.0,
            dist_to_conflict,
            action_history: ActionSequence::new(Vec::new(), dt),
            passed_conflict: 0.0 >= dist_to_conflict,
        }
    }

    /// Estimated time to reach the conflict point at the current speed, s.
    pub fn time_to_conflict(&self, epsilon: f64) -> f64 {
        (self.dist_to_conflict - self.s_traveled) / (self.v + epsilon)
    }
}

/// Advance one player by one step under a candidate acceleration.
/// Speed clamps to [0, v_max]; the conflict flag latches once passed.
pub fn kinematics_step(p: &PlayerState, accel: f64, cfg: &GameConfig) -> PlayerState {
    let v = (p.v + accel * cfg.dt).clamp(0.0, cfg.v_max);
    let s = p.s_traveled + v * cfg.dt;
    PlayerState {
        role: p.role,
        v,
        s_traveled: s,
        dist_to_conflict: p.dist_to_conflict,
        action_history: p.action_history.clone(),
        passed_conflict: p.passed_conflict || s >= p.dist_to_conflict,
    }
}

/// Immutable per-encounter context: reference paths, footprints and the
/// static surroundings.
#[derive(Debug, Clone)]
pub struct EncounterScene {
    pub left_path: PathTrack,
    pub straight_path: PathTrack,
    pub left_geometry: VehicleGeometry,
    pub straight_geometry: VehicleGeometry,
    pub statics: Vec<StaticObject>,
}

impl EncounterScene {
    pub fn from_scenario(s: &ScenarioRecord) -> Result<Self> {
        Ok(EncounterScene {
            left_path: PathTrack::from_states(&s.left_turn_trajectory)?,
            straight_path: PathTrack::from_states(&s.straight_trajectory)?,
            left_geometry: s.left_turn_geometry,
            straight_geometry: s.straight_geometry,
            statics: s.static_objects.clone(),
        })
    }

    fn path(&self, role: VehicleRole) -> &PathTrack {
        match role {
            VehicleRole::LeftTurn => &self.left_path,
            VehicleRole::Straight => &self.straight_path,
        }
    }

    pub fn geometry(&self, role: VehicleRole) -> VehicleGeometry {
        match role {
            VehicleRole::LeftTurn => self.left_geometry,
            VehicleRole::Straight => self.straight_geometry,
        }
    }

    /// World position of a player at its current path offset.
    pub fn position(&self, p: &PlayerState) -> (f64, f64) {
        let (x, y, _) = self.path(p.role).sample(p.s_traveled);
        (x, y)
    }

    /// Full kinematic state of a player for risk evaluation (prediction
    /// controls zeroed: one-step lookahead assumes held speed and heading).
    pub fn vehicle_state(&self, p: &PlayerState) -> VehicleState {
        let (x, y, heading) = self.path(p.role).sample(p.s_traveled);
        VehicleState::new(x, y, p.v, heading)
    }

    /// Comprehensive risk perceived by `p` from `other` plus the statics.
    pub fn risk_for(
        &self,
        p: &PlayerState,
        other: &PlayerState,
        cfg: &GameConfig,
        params: &RiskParams,
    ) -> f64 {
        let probe = self.position(p);
        let actor = RiskActor::new(self.vehicle_state(other), self.geometry(other.role));
        comprehensive_risk(probe, &[actor], &self.statics, params, cfg.dt)
    }
}

/// Safety payoff: 1 - R_all at the player's post-action position.
pub fn payoff_safety(
    p: &PlayerState,
    other: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
    params: &RiskParams,
) -> f64 {
    1.0 - scene.risk_for(p, other, cfg, params)
}

/// Efficiency payoff: normalized speed v/v_max in [0, 1].
pub fn payoff_efficiency(p: &PlayerState, cfg: &GameConfig) -> f64 {
    p.v / cfg.v_max
}

/// Comprehensive payoff: m * E + n * (1 - R_all).
pub fn payoff_comprehensive(
    p: &PlayerState,
    other: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
    params: &RiskParams,
) -> f64 {
    cfg.m_weight * payoff_efficiency(p, cfg)
        + cfg.n_weight * payoff_safety(p, other, scene, cfg, params)
}

/// Arrival-time gap between the two players, the per-step PET surrogate.
pub fn arrival_gap(p: &PlayerState, other: &PlayerState, cfg: &GameConfig) -> f64 {
    (p.time_to_conflict(cfg.epsilon) - other.time_to_conflict(cfg.epsilon)).abs()
}

/// PET-baseline payoff: m * E + n * min(PET, cap)/cap, replacing the risk
/// field with the normalized arrival-time gap.
pub fn payoff_pet(p: &PlayerState, other: &PlayerState, cfg: &GameConfig) -> f64 {
    let pet_norm = (arrival_gap(p, other, cfg).min(cfg.pet_cap)) / cfg.pet_cap;
    cfg.m_weight * payoff_efficiency(p, cfg) + cfg.n_weight * pet_norm
}

/// Stage payoff of `p` against `other` under the configured rationality and
/// safety model, both players already advanced by their candidate actions.
pub fn stage_payoff(
    p: &PlayerState,
    other: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
    params: &RiskParams,
) -> f64 {
    let safety_term = || match cfg.safety_model {
        SafetyModel::RiskField => payoff_safety(p, other, scene, cfg, params),
        SafetyModel::PetGap => (arrival_gap(p, other, cfg).min(cfg.pet_cap)) / cfg.pet_cap,
    };
    match cfg.rationality {
        Rationality::SafetyFirst => safety_term(),
        Rationality::EfficiencyFirst => payoff_efficiency(p, cfg),
        Rationality::Comprehensive => {
            cfg.m_weight * payoff_efficiency(p, cfg) + cfg.n_weight * safety_term()
        }
    }
}

/// One cell of the joint-action payoff table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCell {
    pub u_row: f64,
    pub u_col: f64,
    pub feasible: bool,
}

/// Payoff table over the joint strategy space; the left-turning player picks
/// the row, the straight player the column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePayoffs {
    pub cells: Vec<Vec<StageCell>>,
    pub all_infeasible: bool,
}

impl StagePayoffs {
    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    pub fn row_matrix(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|c| c.u_row).collect())
            .collect()
    }

    pub fn col_matrix(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|c| c.u_col).collect())
            .collect()
    }

    pub fn feasibility(&self) -> Vec<Vec<bool>> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|c| c.feasible).collect())
            .collect()
    }

    /// Sum of both payoffs in one cell.
    pub fn total(&self, row: usize, col: usize) -> f64 {
        let c = &self.cells[row][col];
        c.u_row + c.u_col
    }
}

/// Arrival-separation threshold for one joint outcome. The geometric variant
/// scales with how long the later (follower) vehicle needs to clear the
/// conflict zone.
fn t_avoid_for(
    pl: &PlayerState,
    ps: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
) -> f64 {
    if !cfg.t_avoid_geometric {
        return cfg.t_avoid;
    }
    let (follower, leader_role) = if pl.time_to_conflict(cfg.epsilon) >= ps.time_to_conflict(cfg.epsilon) {
        (pl, VehicleRole::Straight)
    } else {
        (ps, VehicleRole::LeftTurn)
    };
    let zone_width = scene.geometry(leader_role).width;
    (scene.geometry(follower.role).length + zone_width) / (follower.v + cfg.epsilon)
}

/// Build the joint-action payoff table for one step. Both players must still
/// be approaching the conflict point. Joint actions whose post-action
/// arrival times fall closer than t_avoid (while both still approach) are
/// marked infeasible and penalized.
pub fn build_stage_game(
    pl: &PlayerState,
    ps: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<StagePayoffs> {
    cfg.validate()?;
    if pl.passed_conflict || ps.passed_conflict {
        return Err(Error::InvalidGame(
            "stage games are only defined while both players approach the conflict point".into(),
        ));
    }
    // Payoffs do not depend on history; explore cells on history-free copies.
    let base_l = PlayerState {
        action_history: ActionSequence::new(Vec::new(), cfg.dt),
        ..pl.clone()
    };
    let base_s = PlayerState {
        action_history: ActionSequence::new(Vec::new(), cfg.dt),
        ..ps.clone()
    };
    let n = cfg.strategy_accels.len();
    let mut cells = Vec::with_capacity(n);
    let mut any_feasible = false;
    for &a_l in &cfg.strategy_accels {
        let next_l = kinematics_step(&base_l, a_l, cfg);
        let mut row = Vec::with_capacity(n);
        for &a_s in &cfg.strategy_accels {
            let next_s = kinematics_step(&base_s, a_s, cfg);
            let feasible = if !next_l.passed_conflict && !next_s.passed_conflict {
                arrival_gap(&next_l, &next_s, cfg) >= t_avoid_for(&next_l, &next_s, scene, cfg)
            } else {
                true
            };
            if feasible {
                any_feasible = true;
                row.push(StageCell {
                    u_row: stage_payoff(&next_l, &next_s, scene, cfg, params),
                    u_col: stage_payoff(&next_s, &next_l, scene, cfg, params),
                    feasible: true,
                });
            } else {
                row.push(StageCell {
                    u_row: INFEASIBLE_PAYOFF,
                    u_col: INFEASIBLE_PAYOFF,
                    feasible: false,
                });
            }
        }
        cells.push(row);
    }
    Ok(StagePayoffs {
        cells,
        all_infeasible: !any_feasible,
    })
}
