//! Synthetic scenario generation: roll out rational play on a canonical
//! crossing geometry and integrate the resulting actions into recorded-style
//! trajectories. Used for calibration fixtures, recovery experiments and
//! the command-line simulator.

use crate::error::{Error, Result};
use crate::game::rollout::rollout_from;
use crate::game::{EncounterScene, GameConfig, PlayerState};
use crate::model::{ScenarioRecord, StaticObject, VehicleGeometry, VehicleRole, VehicleState};
use crate::path::PathTrack;
use crate::risk::RiskParams;

/// Trailing samples appended after the later vehicle passes the conflict
/// point, so recorded tracks extend a little past the interaction.
const TAIL_SAMPLES: usize = 10;

fn straight_path(start: (f64, f64), heading: f64, length: f64, v: f64) -> Result<PathTrack> {
    let n = length.ceil() as usize + 1;
    let states: Vec<VehicleState> = (0..=n)
        .map(|i| {
            let d = i as f64;
            let mut s = VehicleState::new(
                start.0 + d * heading.cos(),
                start.1 + d * heading.sin(),
                v,
                heading,
            );
            s.t_index = i;
            s
        })
        .collect();
    PathTrack::from_states(&states)
}

/// Canonical crossing geometry: the left-turn player approaches the origin
/// along +x, the straight player along +y, conflict point at the origin.
pub fn crossing_encounter(
    dist: (f64, f64),
    v0: (f64, f64),
    statics: Vec<StaticObject>,
) -> Result<EncounterScene> {
    if !(dist.0 > 0.0 && dist.1 > 0.0) {
        return Err(Error::InvalidScenario(format!(
            "distances to the conflict point must be positive, got {dist:?}"
        )));
    }
    Ok(EncounterScene {
        left_path: straight_path((-dist.0, 0.0), 0.0, dist.0 + 50.0, v0.0)?,
        straight_path: straight_path((0.0, -dist.1), std::f64::consts::FRAC_PI_2, dist.1 + 50.0, v0.1)?,
        left_geometry: VehicleGeometry::default(),
        straight_geometry: VehicleGeometry::default(),
        statics,
    })
}

/// Integrate an action sequence into a recorded-style trajectory along a
/// path: sample k carries the speed before and the acceleration applied at
/// step k.
fn integrate_track(
    path: &PathTrack,
    v0: f64,
    accels: &[f64],
    n_samples: usize,
    cfg: &GameConfig,
) -> Vec<VehicleState> {
    let mut out = Vec::with_capacity(n_samples);
    let mut v = v0;
    let mut s = 0.0;
    for k in 0..n_samples {
        let a = accels.get(k).copied().unwrap_or(0.0);
        let (x, y, heading) = path.sample(s);
        let mut state = VehicleState::new(x, y, v, heading);
        state.a = a;
        state.t_index = k;
        out.push(state);
        v = (v + a * cfg.dt).clamp(0.0, cfg.v_max);
        s += v * cfg.dt;
    }
    out
}

/// Generate a complete synthetic scenario: rational play between two
/// players approaching a right-angle crossing, recorded as trajectories.
/// The recorded accelerations are exactly the rational ones, so evaluating
/// the generating parameter vector against this scenario reproduces them.
pub fn synthesize_scenario_with(
    id: &str,
    v0: (f64, f64),
    dist: (f64, f64),
    statics: Vec<StaticObject>,
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<ScenarioRecord> {
    cfg.validate()?;
    params.validate()?;
    let scene = crossing_encounter(dist, v0, statics.clone())?;
    let pl = PlayerState::new(VehicleRole::LeftTurn, v0.0, dist.0, cfg.dt);
    let ps = PlayerState::new(VehicleRole::Straight, v0.1, dist.1, cfg.dt);
    let outcome = rollout_from(&scene, pl, ps, cfg, params, false)?;
    if let Some(diag) = &outcome.timeout {
        return Err(Error::InvalidScenario(format!(
            "synthetic rollout for {id:?} timed out after {} steps \
             (left remaining {:.1} m, straight remaining {:.1} m)",
            diag.max_steps, diag.left_remaining, diag.straight_remaining
        )));
    }
    let last_pass = outcome
        .left_pass_step
        .unwrap_or(0)
        .max(outcome.straight_pass_step.unwrap_or(0));
    let n_samples = last_pass + 1 + TAIL_SAMPLES;

    let record = ScenarioRecord {
        scenario_id: id.to_string(),
        left_turn_trajectory: integrate_track(
            &scene.left_path,
            v0.0,
            &outcome.left_actions.accels,
            n_samples,
            cfg,
        ),
        straight_trajectory: integrate_track(
            &scene.straight_path,
            v0.1,
            &outcome.straight_actions.accels,
            n_samples,
            cfg,
        ),
        left_turn_geometry: scene.left_geometry,
        straight_geometry: scene.straight_geometry,
        static_objects: statics,
        conflict_point: (0.0, 0.0),
        dist_to_conflict: dist,
        dt: cfg.dt,
    };
    record.validate()?;
    Ok(record)
}

/// Convenience wrapper without static objects.
pub fn synthesize_crossing_scenario(
    id: &str,
    v0: (f64, f64),
    dist: (f64, f64),
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<ScenarioRecord> {
    synthesize_scenario_with(id, v0, dist, Vec::new(), cfg, params)
}
