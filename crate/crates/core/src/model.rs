//! Shared vehicle/scenario data types.
//!
//! Positions are metres in a scene-fixed frame, headings are radians in
//! (-pi, pi], speeds are m/s along the heading. A scenario always pairs one
//! left-turning vehicle with one straight-driving vehicle approaching a
//! common conflict point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::normalize_angle;

/// Which approach a vehicle drives in the encounter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleRole {
    LeftTurn,
    Straight,
}

impl VehicleRole {
    pub const BOTH: [VehicleRole; 2] = [VehicleRole::LeftTurn, VehicleRole::Straight];

    /// The opposing role in a two-vehicle encounter.
    pub fn other(self) -> VehicleRole {
        match self {
            VehicleRole::LeftTurn => VehicleRole::Straight,
            VehicleRole::Straight => VehicleRole::LeftTurn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VehicleRole::LeftTurn => "left_turn",
            VehicleRole::Straight => "straight",
        }
    }
}

impl std::str::FromStr for VehicleRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left_turn" => Ok(VehicleRole::LeftTurn),
            "straight" => Ok(VehicleRole::Straight),
            other => Err(Error::InvalidInput(format!(
                "unknown vehicle role {other:?} (expected left_turn or straight)"
            ))),
        }
    }
}

impl std::fmt::Display for VehicleRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sample of a vehicle track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Speed along the heading, m/s, non-negative.
    pub v: f64,
    /// Heading, rad, normalized to (-pi, pi].
    pub theta: f64,
    /// Longitudinal acceleration, m/s^2.
    pub a: f64,
    /// Yaw rate, rad/s.
    pub omega: f64,
    /// Sample index within the trajectory (uniform timestep).
    pub t_index: usize,
}

impl VehicleState {
    /// State with heading normalized and zero acceleration/yaw-rate.
    pub fn new(x: f64, y: f64, v: f64, theta: f64) -> Self {
        VehicleState {
            x,
            y,
            v,
            theta: normalize_angle(theta),
            a: 0.0,
            omega: 0.0,
            t_index: 0,
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Bounding-box footprint of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleGeometry {
    /// Overall length, m, > 0.
    pub length: f64,
    /// Overall width, m, > 0.
    pub width: f64,
}

impl VehicleGeometry {
    pub fn new(length: f64, width: f64) -> Self {
        VehicleGeometry { length, width }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "vehicle length must be positive, got {}",
                self.length
            )));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "vehicle width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

impl Default for VehicleGeometry {
    /// Typical passenger-car footprint.
    fn default() -> Self {
        VehicleGeometry {
            length: 4.5,
            width: 1.8,
        }
    }
}

/// A stationary risk source (lane boundary segment proxy, parked obstacle, ...)
/// modelled as a zero-speed vehicle whose field is scaled by `max_risk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticObject {
    pub x: f64,
    pub y: f64,
    /// Peak field value this object can exert, in [0, 1].
    pub max_risk: f64,
    /// Footprint length along x, m, >= 0.
    #[serde(default)]
    pub length: f64,
    /// Footprint width along y, m, >= 0.
    #[serde(default)]
    pub width: f64,
}

impl StaticObject {
    /// Point-like object (zero footprint).
    pub fn point(x: f64, y: f64, max_risk: f64) -> Self {
        StaticObject {
            x,
            y,
            max_risk,
            length: 0.0,
            width: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.max_risk) {
            return Err(Error::InvalidScenario(format!(
                "static object max_risk must lie in [0, 1], got {}",
                self.max_risk
            )));
        }
        if self.length < 0.0 || self.width < 0.0 {
            return Err(Error::InvalidScenario(
                "static object footprint must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Default peak risk for lane-boundary proxies.
pub const LANE_BOUNDARY_MAX_RISK: f64 = 0.4;
/// Default peak risk for hard obstacles.
pub const OBSTACLE_MAX_RISK: f64 = 1.0;

/// A complete two-vehicle encounter ready for evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario_id: String,
    pub left_turn_trajectory: Vec<VehicleState>,
    pub straight_trajectory: Vec<VehicleState>,
    pub left_turn_geometry: VehicleGeometry,
    pub straight_geometry: VehicleGeometry,
    pub static_objects: Vec<StaticObject>,
    /// Crossing point of the two reference paths.
    pub conflict_point: (f64, f64),
    /// Path distance from each trajectory's first sample to the conflict
    /// point, metres: (left_turn, straight).
    pub dist_to_conflict: (f64, f64),
    /// Uniform sample interval, s.
    pub dt: f64,
}

impl ScenarioRecord {
    pub fn trajectory(&self, role: VehicleRole) -> &[VehicleState] {
        match role {
            VehicleRole::LeftTurn => &self.left_turn_trajectory,
            VehicleRole::Straight => &self.straight_trajectory,
        }
    }

    pub fn geometry(&self, role: VehicleRole) -> VehicleGeometry {
        match role {
            VehicleRole::LeftTurn => self.left_turn_geometry,
            VehicleRole::Straight => self.straight_geometry,
        }
    }

    pub fn dist_to_conflict(&self, role: VehicleRole) -> f64 {
        match role {
            VehicleRole::LeftTurn => self.dist_to_conflict.0,
            VehicleRole::Straight => self.dist_to_conflict.1,
        }
    }

    /// Check every structural invariant the rest of the library relies on.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "scenario {}: dt must be positive, got {}",
                self.scenario_id, self.dt
            )));
        }
        for (role, traj) in [
            (VehicleRole::LeftTurn, &self.left_turn_trajectory),
            (VehicleRole::Straight, &self.straight_trajectory),
        ] {
            if traj.is_empty() {
                return Err(Error::InvalidScenario(format!(
                    "scenario {}: {role} trajectory is empty",
                    self.scenario_id
                )));
            }
            for (i, st) in traj.iter().enumerate() {
                if !(st.x.is_finite() && st.y.is_finite() && st.v.is_finite() && st.theta.is_finite())
                {
                    return Err(Error::InvalidScenario(format!(
                        "scenario {}: {role} sample {i} contains non-finite values",
                        self.scenario_id
                    )));
                }
                if st.v < 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "scenario {}: {role} sample {i} has negative speed {}",
                        self.scenario_id, st.v
                    )));
                }
                if !(st.theta > -std::f64::consts::PI - 1e-9
                    && st.theta <= std::f64::consts::PI + 1e-9)
                {
                    return Err(Error::InvalidScenario(format!(
                        "scenario {}: {role} sample {i} heading {} outside (-pi, pi]",
                        self.scenario_id, st.theta
                    )));
                }
                if st.t_index != i {
                    return Err(Error::InvalidScenario(format!(
                        "scenario {}: {role} sample {i} has t_index {}",
                        self.scenario_id, st.t_index
                    )));
                }
            }
        }
        self.left_turn_geometry.validate()?;
        self.straight_geometry.validate()?;
        for obj in &self.static_objects {
            obj.validate()?;
        }
        if self.dist_to_conflict.0 < 0.0 || self.dist_to_conflict.1 < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "scenario {}: distance to conflict must be non-negative",
                self.scenario_id
            )));
        }
        Ok(())
    }
}

/// A timed longitudinal acceleration sequence (real or model-generated).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionSequence {
    pub accels: Vec<f64>,
    /// Interval between consecutive actions, s.
    pub dt: f64,
}

impl ActionSequence {
    pub fn new(accels: Vec<f64>, dt: f64) -> Self {
        ActionSequence { accels, dt }
    }

    pub fn len(&self) -> usize {
        self.accels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accels.is_empty()
    }
}
