//! Instantaneous risk field: distance/speed-attenuated contributions from
//! dynamic vehicles and zero-speed static objects, superimposed additively.
//!
//! Gaps are measured in the emitting object's body frame so that
//! "longitudinal" follows its heading; for an object heading along +x the
//! formulation reduces to the plain axis-aligned form. Behind an object the
//! field decays at `rear_attenuation` times the frontal spatial rate instead
//! of staying saturated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StaticObject, VehicleGeometry, VehicleState};

/// Risk-field coefficients.
///
/// The defaults are the calibrated vector [w_now, alpha_x, alpha_y, beta_x,
/// beta_y] = [0.3157, 0.1053, 0.4737, 0.8421, 0.8947].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskParams {
    /// Speed attenuation, longitudinal.
    pub alpha_x: f64,
    /// Speed attenuation, lateral.
    pub alpha_y: f64,
    /// Distance attenuation, longitudinal, 1/m.
    pub beta_x: f64,
    /// Distance attenuation, lateral, 1/m.
    pub beta_y: f64,
    /// Blend weight of instantaneous vs. future risk, in [0, 1].
    pub w_now: f64,
    /// Scale on the decay rate behind an object's rear boundary, in [0, 1].
    pub rear_attenuation: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            alpha_x: 0.1053,
            alpha_y: 0.4737,
            beta_x: 0.8421,
            beta_y: 0.8947,
            w_now: 0.3157,
            rear_attenuation: 0.5,
        }
    }
}

impl RiskParams {
    /// Calibration search order: [w_now, alpha_x, alpha_y, beta_x, beta_y].
    pub fn to_vector(&self) -> [f64; 5] {
        [self.w_now, self.alpha_x, self.alpha_y, self.beta_x, self.beta_y]
    }

    pub fn from_vector(v: [f64; 5]) -> Self {
        RiskParams {
            w_now: v[0],
            alpha_x: v[1],
            alpha_y: v[2],
            beta_x: v[3],
            beta_y: v[4],
            ..RiskParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha_x", self.alpha_x),
            ("alpha_y", self.alpha_y),
            ("beta_x", self.beta_x),
            ("beta_y", self.beta_y),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "risk parameter {name} must be non-negative, got {value}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.w_now) {
            return Err(Error::InvalidInput(format!(
                "w_now must lie in [0, 1], got {}",
                self.w_now
            )));
        }
        if !(0.0..=1.0).contains(&self.rear_attenuation) {
            return Err(Error::InvalidInput(format!(
                "rear_attenuation must lie in [0, 1], got {}",
                self.rear_attenuation
            )));
        }
        Ok(())
    }
}

/// A dynamic object contributing to the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskActor {
    pub state: VehicleState,
    pub geometry: VehicleGeometry,
}

impl RiskActor {
    pub fn new(state: VehicleState, geometry: VehicleGeometry) -> Self {
        RiskActor { state, geometry }
    }
}

/// Offset of `probe` in the body frame of an object at (`x`, `y`) heading
/// `theta`: (longitudinal, lateral).
fn body_offset(probe: (f64, f64), x: f64, y: f64, theta: f64) -> (f64, f64) {
    let dx = probe.0 - x;
    let dy = probe.1 - y;
    let (s, c) = theta.sin_cos();
    (c * dx + s * dy, -s * dx + c * dy)
}

/// Decay along one body axis given the offset from the body center, the
/// half-extent of the body, and the speed component feeding the attenuation
/// denominator. `rear` scales the decay rate on the negative side (behind).
fn axis_decay(offset: f64, half_extent: f64, beta: f64, alpha: f64, speed: f64, rear: f64) -> f64 {
    let denom = alpha * speed + 1.0;
    if offset > half_extent {
        beta * (offset - half_extent) / denom
    } else if offset < -half_extent {
        rear * beta * (-offset - half_extent) / denom
    } else {
        0.0
    }
}

/// Longitudinal decay factor of `other`'s field at the probe point, 0 on the
/// body, growing linearly with the gap ahead of the front boundary.
pub fn longitudinal_decay(
    probe: (f64, f64),
    other: &VehicleState,
    geom: &VehicleGeometry,
    params: &RiskParams,
) -> f64 {
    let (lon, _) = body_offset(probe, other.x, other.y, other.theta);
    let v_x = (other.v * other.theta.cos()).abs();
    axis_decay(
        lon,
        geom.length / 2.0,
        params.beta_x,
        params.alpha_x,
        v_x,
        params.rear_attenuation,
    )
}

/// Lateral decay factor, symmetric on both sides of the body.
pub fn lateral_decay(
    probe: (f64, f64),
    other: &VehicleState,
    geom: &VehicleGeometry,
    params: &RiskParams,
) -> f64 {
    let (_, lat) = body_offset(probe, other.x, other.y, other.theta);
    let v_y = (other.v * other.theta.sin()).abs();
    axis_decay(
        lat.abs(),
        geom.width / 2.0,
        params.beta_y,
        params.alpha_y,
        v_y,
        1.0,
    )
}

/// Risk exerted by one dynamic vehicle at the probe point, in (0, 1].
pub fn vehicle_risk(
    probe: (f64, f64),
    other: &VehicleState,
    geom: &VehicleGeometry,
    params: &RiskParams,
) -> f64 {
    let dx = longitudinal_decay(probe, other, geom, params);
    let dy = lateral_decay(probe, other, geom, params);
    1.0 / (dx.hypot(dy) + 1.0)
}

/// Risk exerted by a static object, modelled as a zero-speed body scaled by
/// its `max_risk`, in [0, max_risk].
pub fn static_risk(probe: (f64, f64), obj: &StaticObject, params: &RiskParams) -> f64 {
    let (lon, lat) = body_offset(probe, obj.x, obj.y, 0.0);
    let dx = axis_decay(
        lon,
        obj.length / 2.0,
        params.beta_x,
        params.alpha_x,
        0.0,
        params.rear_attenuation,
    );
    let dy = axis_decay(lat.abs(), obj.width / 2.0, params.beta_y, params.alpha_y, 0.0, 1.0);
    obj.max_risk / (dx.hypot(dy) + 1.0)
}

/// Superimposed field from every vehicle and static object; empty scene → 0.
pub fn instantaneous_field(
    probe: (f64, f64),
    vehicles: &[RiskActor],
    statics: &[StaticObject],
    params: &RiskParams,
) -> f64 {
    let dynamic: f64 = vehicles
        .iter()
        .map(|a| vehicle_risk(probe, &a.state, &a.geometry, params))
        .sum();
    let fixed: f64 = statics.iter().map(|o| static_risk(probe, o, params)).sum();
    dynamic + fixed
}

/// Sample the field on a rectangular grid; rows are (x, y, risk).
pub fn sample_grid(
    vehicles: &[RiskActor],
    statics: &[StaticObject],
    params: &RiskParams,
    x_range: (f64, f64),
    y_range: (f64, f64),
    step: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if !step.is_finite() || step <= 0.0 || x_range.1 < x_range.0 || y_range.1 < y_range.0 {
        return Err(Error::InvalidInput(
            "grid step must be positive and ranges ordered".into(),
        ));
    }
    let nx = ((x_range.1 - x_range.0) / step).floor() as usize + 1;
    let ny = ((y_range.1 - y_range.0) / step).floor() as usize + 1;
    let mut rows = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        let x = x_range.0 + ix as f64 * step;
        for iy in 0..ny {
            let y = y_range.0 + iy as f64 * step;
            rows.push((x, y, instantaneous_field((x, y), vehicles, statics, params)));
        }
    }
    Ok(rows)
}

/// Write a grid raster produced by [`sample_grid`] as CSV (x, y, risk).
pub fn write_grid_csv<P: AsRef<std::path::Path>>(path: P, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_io)?;
    w.write_record(["x", "y", "risk"]).map_err(csv_io)?;
    for (x, y, r) in rows {
        w.write_record([format!("{x}"), format!("{y}"), format!("{r}")])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::ParseError {
        location: "csv".into(),
        message: e.to_string(),
    }
}
