//! Post Encroachment Time on recorded trajectories: the gap between the
//! first vehicle leaving the conflict region and the second entering it.

use crate::error::{Error, Result};
use crate::model::{ScenarioRecord, VehicleState};

/// Radius of the circular conflict region around the conflict point, m.
pub const CONFLICT_REGION_RADIUS: f64 = 2.0;

/// Entry and exit times of one vehicle's first pass through the region.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Occupancy {
    enter: f64,
    exit: f64,
}

/// Distances from each sample to the conflict point.
fn distances(traj: &[VehicleState], cp: (f64, f64)) -> Vec<f64> {
    traj.iter()
        .map(|s| (s.x - cp.0).hypot(s.y - cp.1))
        .collect()
}

/// First contiguous occupancy of the disc of radius `r`, with crossing
/// times linearly interpolated between samples. `None` if the vehicle never
/// enters.
fn first_occupancy(traj: &[VehicleState], cp: (f64, f64), r: f64, dt: f64) -> Option<Occupancy> {
    let d = distances(traj, cp);
    let first_inside = d.iter().position(|&di| di <= r)?;
    let enter = if first_inside == 0 {
        0.0
    } else {
        let (d0, d1) = (d[first_inside - 1], d[first_inside]);
        let frac = if d0 > d1 { (d0 - r) / (d0 - d1) } else { 1.0 };
        (first_inside as f64 - 1.0 + frac.clamp(0.0, 1.0)) * dt
    };
    // Walk to the end of this occupancy episode.
    let mut last_inside = first_inside;
    while last_inside + 1 < d.len() && d[last_inside + 1] <= r {
        last_inside += 1;
    }
    let exit = if last_inside + 1 >= d.len() {
        (d.len() as f64 - 1.0) * dt
    } else {
        let (d0, d1) = (d[last_inside], d[last_inside + 1]);
        let frac = if d1 > d0 { (r - d0) / (d1 - d0) } else { 0.0 };
        (last_inside as f64 + frac.clamp(0.0, 1.0)) * dt
    };
    Some(Occupancy { enter, exit })
}

/// Post Encroachment Time of a recorded two-vehicle encounter: both
/// vehicles must cross the conflict region; simultaneous occupancy yields 0.
pub fn pet_of_event(s: &ScenarioRecord) -> Result<f64> {
    let left = first_occupancy(
        &s.left_turn_trajectory,
        s.conflict_point,
        CONFLICT_REGION_RADIUS,
        s.dt,
    );
    let straight = first_occupancy(
        &s.straight_trajectory,
        s.conflict_point,
        CONFLICT_REGION_RADIUS,
        s.dt,
    );
    let (left, straight) = match (left, straight) {
        (Some(l), Some(st)) => (l, st),
        (l, _) => {
            let who = if l.is_none() { "left-turn" } else { "straight" };
            return Err(Error::NoConflict(format!(
                "scenario {}: {who} vehicle never enters the conflict region",
                s.scenario_id
            )));
        }
    };
    let (first, second) = if left.enter <= straight.enter {
        (left, straight)
    } else {
        (straight, left)
    };
    Ok((second.enter - first.exit).max(0.0))
}
