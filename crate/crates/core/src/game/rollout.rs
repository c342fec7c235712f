//! Step-by-step interaction rollout: at every step the players still
//! approaching the conflict point play a stage game (non-cooperative or
//! cooperative), realize their equilibrium actions and advance; players that
//! have passed coast at constant speed. Payoffs are accumulated over the
//! full step budget so cumulative totals stay comparable across solution
//! concepts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::coop::solve_cooperative_from;
use crate::game::nash::{lemke_howson_all, solve_nash_enumeration, Equilibrium};
use crate::game::{
    build_stage_game, kinematics_step, stage_payoff, EncounterScene, GameConfig, GameType,
    PlayerState, StagePayoffs,
};
use crate::model::{ActionSequence, ScenarioRecord, VehicleRole};
use crate::risk::RiskParams;

/// How the joint action at one step was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepDecision {
    /// Both players approaching, equilibrium play.
    NashGame {
        all_infeasible: bool,
        perturbed: bool,
        row_strategy: Vec<f64>,
        col_strategy: Vec<f64>,
        chosen: (usize, usize),
    },
    /// Both players approaching, joint payoff maximization.
    CoopGame {
        all_infeasible: bool,
        superadditive: bool,
        chosen: (usize, usize),
    },
    /// Only one player still approaching: single-agent best response.
    Solo { role: VehicleRole, chosen: usize },
    /// Both players past the conflict point.
    Coast,
}

/// Diagnostic trace entry for one rollout step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub decision: StepDecision,
    /// Realized accelerations (left-turn, straight); coasting players hold 0.
    pub accels: (f64, f64),
    /// Realized stage payoffs after both players moved.
    pub payoffs: (f64, f64),
    /// Post-step speeds.
    pub speeds: (f64, f64),
}

/// Emitted when the step budget ran out before both players passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeoutDiagnostic {
    pub max_steps: usize,
    pub left_passed: bool,
    pub straight_passed: bool,
    /// Remaining path distance to the conflict point, m.
    pub left_remaining: f64,
    pub straight_remaining: f64,
    pub left_speed: f64,
    pub straight_speed: f64,
}

/// Outcome of one full interaction rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutOutcome {
    /// Rational acceleration sequence of the left-turning player, one entry
    /// per step until it passes the conflict point.
    pub left_actions: ActionSequence,
    pub straight_actions: ActionSequence,
    /// Step at which each player passed (None = never).
    pub left_pass_step: Option<usize>,
    pub straight_pass_step: Option<usize>,
    /// Payoffs accumulated over the full step budget (left-turn, straight).
    pub cumulative: (f64, f64),
    pub timeout: Option<TimeoutDiagnostic>,
    /// Per-step records; empty unless tracing was requested.
    pub trace: Vec<StepRecord>,
}

impl RolloutOutcome {
    pub fn cumulative_total(&self) -> f64 {
        self.cumulative.0 + self.cumulative.1
    }

    pub fn actions(&self, role: VehicleRole) -> &ActionSequence {
        match role {
            VehicleRole::LeftTurn => &self.left_actions,
            VehicleRole::Straight => &self.straight_actions,
        }
    }
}

/// Realize a mixed strategy as its most likely pure action; probability ties
/// resolve toward the strongest deceleration.
pub fn realize_strategy(strategy: &[f64], accels: &[f64]) -> usize {
    let max_p = strategy.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    strategy
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= max_p - 1e-12)
        .min_by(|a, b| accels[a.0].total_cmp(&accels[b.0]))
        .map(|(i, _)| i)
        .expect("non-empty strategy")
}

/// Equilibrium play for one stage game: Lemke-Howson from every label with
/// support enumeration as fallback, then highest-total selection.
fn nash_step(game: &StagePayoffs) -> Result<(Equilibrium, bool)> {
    match lemke_howson_all(game) {
        Ok(sols) => {
            let eqs: Vec<Equilibrium> = sols.iter().map(|s| s.equilibrium.clone()).collect();
            let best = crate::game::nash::select_equilibrium(&eqs)
                .ok_or_else(|| Error::NumericalError("no equilibrium found".into()))?;
            let idx = eqs
                .iter()
                .position(|e| e == best)
                .expect("selected equilibrium comes from the list");
            Ok((best.clone(), sols[idx].perturbed))
        }
        Err(_) => {
            let eqs = solve_nash_enumeration(game)?;
            let best = crate::game::nash::select_equilibrium(&eqs)
                .ok_or_else(|| Error::NumericalError("no equilibrium found".into()))?;
            Ok((best.clone(), true))
        }
    }
}

/// Best response of the only remaining approaching player, the other one
/// coasting; payoff ties resolve toward the strongest deceleration.
fn solo_best_response(
    p: &PlayerState,
    other: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
    params: &RiskParams,
) -> usize {
    let mut best_idx = 0;
    let mut best_u = f64::NEG_INFINITY;
    for (idx, &a) in cfg.strategy_accels.iter().enumerate() {
        let next_p = kinematics_step(p, a, cfg);
        let next_o = kinematics_step(other, 0.0, cfg);
        let u = stage_payoff(&next_p, &next_o, scene, cfg, params);
        let better = u > best_u + 1e-12
            || ((u - best_u).abs() <= 1e-12 && a < cfg.strategy_accels[best_idx]);
        if better {
            best_idx = idx;
            best_u = u;
        }
    }
    best_idx
}

/// Advance a player, appending the action to its history only while it is
/// still approaching the conflict point.
fn advance(p: &mut PlayerState, accel: f64, record: bool, cfg: &GameConfig) {
    let mut history = std::mem::take(&mut p.action_history);
    let mut next = kinematics_step(p, accel, cfg);
    if record {
        history.accels.push(accel);
    }
    next.action_history = history;
    *p = next;
}

/// Roll out the interaction between two rational players from given initial
/// states. Terminates its decision phase when both players have passed the
/// conflict point, then keeps accounting payoffs until the step budget so
/// cumulative totals are defined on a fixed horizon.
pub fn rollout_from(
    scene: &EncounterScene,
    initial_left: PlayerState,
    initial_straight: PlayerState,
    cfg: &GameConfig,
    params: &RiskParams,
    trace: bool,
) -> Result<RolloutOutcome> {
    cfg.validate()?;
    let mut pl = initial_left;
    let mut ps = initial_straight;
    pl.action_history = ActionSequence::new(Vec::new(), cfg.dt);
    ps.action_history = ActionSequence::new(Vec::new(), cfg.dt);

    let mut left_pass_step = if pl.passed_conflict { Some(0) } else { None };
    let mut straight_pass_step = if ps.passed_conflict { Some(0) } else { None };
    let mut cumulative = (0.0, 0.0);
    let mut records = Vec::new();

    for step in 0..cfg.max_steps {
        let l_active = !pl.passed_conflict;
        let s_active = !ps.passed_conflict;

        let (decision, a_left, a_right) = match (l_active, s_active) {
            (true, true) => {
                let game = build_stage_game(&pl, &ps, scene, cfg, params)?;
                if game.all_infeasible {
                    let idx = cfg.max_deceleration_index();
                    let a = cfg.strategy_accels[idx];
                    let decision = match cfg.game_type {
                        GameType::NonCooperative => StepDecision::NashGame {
                            all_infeasible: true,
                            perturbed: false,
                            row_strategy: Vec::new(),
                            col_strategy: Vec::new(),
                            chosen: (idx, idx),
                        },
                        GameType::Cooperative => StepDecision::CoopGame {
                            all_infeasible: true,
                            superadditive: true,
                            chosen: (idx, idx),
                        },
                    };
                    (decision, a, a)
                } else {
                    match cfg.game_type {
                        GameType::NonCooperative => {
                            let (eq, perturbed) = nash_step(&game)?;
                            let i = realize_strategy(&eq.row_strategy, &cfg.strategy_accels);
                            let j = realize_strategy(&eq.col_strategy, &cfg.strategy_accels);
                            (
                                StepDecision::NashGame {
                                    all_infeasible: false,
                                    perturbed,
                                    row_strategy: eq.row_strategy.clone(),
                                    col_strategy: eq.col_strategy.clone(),
                                    chosen: (i, j),
                                },
                                cfg.strategy_accels[i],
                                cfg.strategy_accels[j],
                            )
                        }
                        GameType::Cooperative => {
                            let coop = solve_cooperative_from(&game, cfg)?;
                            let (i, j) = coop.joint_action;
                            (
                                StepDecision::CoopGame {
                                    all_infeasible: false,
                                    superadditive: coop.superadditive,
                                    chosen: (i, j),
                                },
                                cfg.strategy_accels[i],
                                cfg.strategy_accels[j],
                            )
                        }
                    }
                }
            }
            (true, false) => {
                let idx = solo_best_response(&pl, &ps, scene, cfg, params);
                (
                    StepDecision::Solo {
                        role: VehicleRole::LeftTurn,
                        chosen: idx,
                    },
                    cfg.strategy_accels[idx],
                    0.0,
                )
            }
            (false, true) => {
                let idx = solo_best_response(&ps, &pl, scene, cfg, params);
                (
                    StepDecision::Solo {
                        role: VehicleRole::Straight,
                        chosen: idx,
                    },
                    0.0,
                    cfg.strategy_accels[idx],
                )
            }
            (false, false) => (StepDecision::Coast, 0.0, 0.0),
        };

        advance(&mut pl, a_left, l_active, cfg);
        advance(&mut ps, a_right, s_active, cfg);

        if l_active && pl.passed_conflict {
            left_pass_step = Some(step);
        }
        if s_active && ps.passed_conflict {
            straight_pass_step = Some(step);
        }

        let u_left = stage_payoff(&pl, &ps, scene, cfg, params);
        let u_right = stage_payoff(&ps, &pl, scene, cfg, params);
        cumulative.0 += u_left;
        cumulative.1 += u_right;

        if trace {
            records.push(StepRecord {
                step,
                decision,
                accels: (a_left, a_right),
                payoffs: (u_left, u_right),
                speeds: (pl.v, ps.v),
            });
        }
    }

    let timeout = if pl.passed_conflict && ps.passed_conflict {
        None
    } else {
        Some(TimeoutDiagnostic {
            max_steps: cfg.max_steps,
            left_passed: pl.passed_conflict,
            straight_passed: ps.passed_conflict,
            left_remaining: (pl.dist_to_conflict - pl.s_traveled).max(0.0),
            straight_remaining: (ps.dist_to_conflict - ps.s_traveled).max(0.0),
            left_speed: pl.v,
            straight_speed: ps.v,
        })
    };

    Ok(RolloutOutcome {
        left_actions: pl.action_history,
        straight_actions: ps.action_history,
        left_pass_step,
        straight_pass_step,
        cumulative,
        timeout,
        trace: records,
    })
}

/// Rational responses along an externally forced action track: both players
/// advance by the given (recorded) accelerations while at every step the
/// action the model would pick in that same state is collected. Because the
/// states are pinned to the forced track, each step's comparison is
/// independent of the model's earlier choices. Returns per-role lists of
/// (model, forced) acceleration pairs covering every step where the player
/// was still approaching the conflict point and forced data existed.
pub fn stepwise_rational_actions(
    scene: &EncounterScene,
    initial_left: PlayerState,
    initial_straight: PlayerState,
    forced_left: &ActionSequence,
    forced_straight: &ActionSequence,
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    cfg.validate()?;
    let mut pl = initial_left;
    let mut ps = initial_straight;
    let mut left_pairs = Vec::with_capacity(forced_left.accels.len());
    let mut straight_pairs = Vec::with_capacity(forced_straight.accels.len());

    let steps = forced_left.accels.len().max(forced_straight.accels.len());
    for step in 0..steps {
        let l_forced = forced_left.accels.get(step).copied();
        let s_forced = forced_straight.accels.get(step).copied();
        let l_active = l_forced.is_some() && !pl.passed_conflict;
        let s_active = s_forced.is_some() && !ps.passed_conflict;

        let (model_left, model_right) = match (l_active, s_active) {
            (true, true) => {
                let game = build_stage_game(&pl, &ps, scene, cfg, params)?;
                if game.all_infeasible {
                    let a = cfg.strategy_accels[cfg.max_deceleration_index()];
                    (Some(a), Some(a))
                } else {
                    let (i, j) = match cfg.game_type {
                        GameType::NonCooperative => {
                            let (eq, _) = nash_step(&game)?;
                            (
                                realize_strategy(&eq.row_strategy, &cfg.strategy_accels),
                                realize_strategy(&eq.col_strategy, &cfg.strategy_accels),
                            )
                        }
                        GameType::Cooperative => {
                            solve_cooperative_from(&game, cfg)?.joint_action
                        }
                    };
                    (Some(cfg.strategy_accels[i]), Some(cfg.strategy_accels[j]))
                }
            }
            (true, false) => {
                let idx = solo_best_response(&pl, &ps, scene, cfg, params);
                (Some(cfg.strategy_accels[idx]), None)
            }
            (false, true) => {
                let idx = solo_best_response(&ps, &pl, scene, cfg, params);
                (None, Some(cfg.strategy_accels[idx]))
            }
            (false, false) => (None, None),
        };

        if let (Some(model), Some(forced)) = (model_left, l_forced) {
            left_pairs.push((model, forced));
        }
        if let (Some(model), Some(forced)) = (model_right, s_forced) {
            straight_pairs.push((model, forced));
        }

        advance(&mut pl, l_forced.unwrap_or(0.0), false, cfg);
        advance(&mut ps, s_forced.unwrap_or(0.0), false, cfg);
    }

    Ok((left_pairs, straight_pairs))
}

/// Roll out the rational interaction for a recorded scenario, starting both
/// players at their recorded initial speeds and path distances.
pub fn rollout_interaction(
    scenario: &ScenarioRecord,
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<RolloutOutcome> {
    scenario.validate()?;
    let scene = EncounterScene::from_scenario(scenario)?;
    let pl = PlayerState::new(
        VehicleRole::LeftTurn,
        scenario.left_turn_trajectory[0].v,
        scenario.dist_to_conflict.0,
        cfg.dt,
    );
    let ps = PlayerState::new(
        VehicleRole::Straight,
        scenario.straight_trajectory[0].v,
        scenario.dist_to_conflict.1,
        cfg.dt,
    );
    rollout_from(&scene, pl, ps, cfg, params, false)
}
