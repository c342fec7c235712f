//! One-step EKF motion prediction on a unicycle model, future-state risk and
//! the comprehensive (instantaneous + predicted) risk blend.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::model::{StaticObject, VehicleState};
use crate::path::normalize_angle;
use crate::risk::{instantaneous_field, RiskActor, RiskParams};

/// Symmetry / eigenvalue tolerance for covariance validation.
const PSD_TOL: f64 = 1e-9;

/// EKF state for one tracked vehicle: mean (x, y, v, theta) plus covariance
/// and the noise models used by predict/update.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub process_noise: Matrix4<f64>,
    pub measurement_noise: Matrix2<f64>,
}

impl EkfState {
    /// Filter initialized on a vehicle state with the default noise models
    /// Q = diag(0.01, 0.01, 0.1, 0.01) and R = diag(0.05, 0.05).
    pub fn from_vehicle(state: &VehicleState) -> Self {
        EkfState {
            mean: Vector4::new(state.x, state.y, state.v, state.theta),
            covariance: Matrix4::identity(),
            process_noise: Matrix4::from_diagonal(&Vector4::new(0.01, 0.01, 0.1, 0.01)),
            measurement_noise: Matrix2::from_diagonal(&Vector2::new(0.05, 0.05)),
        }
    }

    /// Mean as a plain vehicle state (a, omega zeroed).
    pub fn to_vehicle(&self) -> VehicleState {
        VehicleState::new(self.mean[0], self.mean[1], self.mean[2].max(0.0), self.mean[3])
    }

    pub fn validate(&self) -> Result<()> {
        check_symmetric_psd("covariance", &self.covariance)?;
        check_symmetric_psd("process noise", &self.process_noise)?;
        let r = &self.measurement_noise;
        if (r[(0, 1)] - r[(1, 0)]).abs() > PSD_TOL {
            return Err(Error::NumericalError(
                "measurement noise is not symmetric".into(),
            ));
        }
        Ok(())
    }
}

fn check_symmetric_psd(name: &str, m: &Matrix4<f64>) -> Result<()> {
    if (m - m.transpose()).abs().max() > PSD_TOL {
        return Err(Error::NumericalError(format!("{name} is not symmetric")));
    }
    let eigs = m.symmetric_eigenvalues();
    if eigs.iter().any(|e| *e < -PSD_TOL) {
        return Err(Error::NumericalError(format!(
            "{name} has negative eigenvalue {:.3e}",
            eigs.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    Ok(())
}

/// Advance a vehicle one step under the unicycle model with control (a, omega).
/// Speed clamps at zero; heading stays normalized.
pub fn unicycle_step(state: &VehicleState, control: (f64, f64), dt: f64) -> VehicleState {
    let (a, omega) = control;
    VehicleState {
        x: state.x + state.v * state.theta.cos() * dt,
        y: state.y + state.v * state.theta.sin() * dt,
        v: (state.v + a * dt).max(0.0),
        theta: normalize_angle(state.theta + omega * dt),
        a,
        omega,
        t_index: state.t_index + 1,
    }
}

/// Jacobian of the unicycle step w.r.t. (x, y, v, theta).
pub fn motion_jacobian(state: &VehicleState, dt: f64) -> Matrix4<f64> {
    let (s, c) = state.theta.sin_cos();
    let mut j = Matrix4::identity();
    j[(0, 2)] = c * dt;
    j[(0, 3)] = -state.v * s * dt;
    j[(1, 2)] = s * dt;
    j[(1, 3)] = state.v * c * dt;
    j
}

/// EKF time update: advance the mean by the unicycle model and the
/// covariance by P <- J P J^T + Q.
pub fn ekf_predict(ekf: &EkfState, control: (f64, f64), dt: f64) -> Result<EkfState> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    ekf.validate()?;
    let state = ekf.to_vehicle();
    let next = unicycle_step(&state, control, dt);
    let j = motion_jacobian(&state, dt);
    let p = j * ekf.covariance * j.transpose() + ekf.process_noise;
    Ok(EkfState {
        mean: Vector4::new(next.x, next.y, next.v, next.theta),
        covariance: symmetrize(&p),
        ..ekf.clone()
    })
}

/// EKF measurement update with a position observation (x, y).
pub fn ekf_update(ekf: &EkfState, measurement: (f64, f64)) -> Result<EkfState> {
    ekf.validate()?;
    // H selects (x, y) from the state.
    let mut h = Matrix2x4::<f64>::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    let p = ekf.covariance;
    let innovation_cov = h * p * h.transpose() + ekf.measurement_noise;
    let inv = innovation_cov.try_inverse().ok_or_else(|| {
        Error::NumericalError("innovation covariance is singular".into())
    })?;
    let gain = p * h.transpose() * inv;
    let z = Vector2::new(measurement.0, measurement.1);
    let residual = z - h * ekf.mean;
    let mut mean = ekf.mean + gain * residual;
    mean[3] = normalize_angle(mean[3]);
    let cov = p - gain * h * p;
    Ok(EkfState {
        mean,
        covariance: symmetrize(&cov),
        ..ekf.clone()
    })
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Advance a risk actor by one prediction step using its recorded (a, omega).
pub fn predict_actor(actor: &RiskActor, dt: f64) -> RiskActor {
    RiskActor {
        state: unicycle_step(&actor.state, (actor.state.a, actor.state.omega), dt),
        geometry: actor.geometry,
    }
}

/// Field from one-step-predicted dynamic objects plus unchanged statics.
pub fn future_risk(
    probe: (f64, f64),
    predicted_vehicles: &[RiskActor],
    statics: &[StaticObject],
    params: &RiskParams,
) -> f64 {
    instantaneous_field(probe, predicted_vehicles, statics, params)
}

/// Blend of instantaneous and one-step-future risk at the probe point:
/// w_now * R_now + (1 - w_now) * R_future.
pub fn comprehensive_risk(
    probe: (f64, f64),
    vehicles: &[RiskActor],
    statics: &[StaticObject],
    params: &RiskParams,
    dt: f64,
) -> f64 {
    let now = instantaneous_field(probe, vehicles, statics, params);
    let predicted: Vec<RiskActor> = vehicles.iter().map(|a| predict_actor(a, dt)).collect();
    let future = future_risk(probe, &predicted, statics, params);
    params.w_now * now + (1.0 - params.w_now) * future
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VehicleGeometry;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn unicycle_zero_motion() {
        let s = VehicleState::new(2.0, 3.0, 0.0, 1.0);
        let out = unicycle_step(&s, (0.0, 0.0), 0.1);
        assert_eq!((out.x, out.y, out.v), (2.0, 3.0, 0.0));
    }

    #[test]
    fn unicycle_straight_line() {
        let s = VehicleState::new(0.0, 0.0, 10.0, 0.0);
        let out = unicycle_step(&s, (0.0, 0.0), 0.1);
        assert_relative_eq!(out.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(out.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unicycle_axis_symmetry() {
        let s = VehicleState::new(0.0, 0.0, 10.0, FRAC_PI_2);
        let out = unicycle_step(&s, (0.0, 0.0), 0.1);
        assert_relative_eq!(out.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(out.x, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn unicycle_speed_clamps_at_zero() {
        let s = VehicleState::new(0.0, 0.0, 0.05, 0.0);
        let out = unicycle_step(&s, (-1.5, 0.0), 0.1);
        assert_eq!(out.v, 0.0);
    }

    #[test]
    fn jacobian_structure_at_zero_speed() {
        let s = VehicleState::new(1.0, 2.0, 0.0, 0.3);
        let j = motion_jacobian(&s, 0.1);
        let mut expected = Matrix4::identity();
        expected[(0, 2)] = 0.3f64.cos() * 0.1;
        expected[(1, 2)] = 0.3f64.sin() * 0.1;
        assert_relative_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_zero_heading_theta_column() {
        let s = VehicleState::new(0.0, 0.0, 10.0, 0.0);
        let j = motion_jacobian(&s, 0.1);
        assert_eq!(j[(0, 3)], 0.0); // -v sin(0) dt
        assert_relative_eq!(j[(1, 3)], 1.0, epsilon = 1e-12); // v cos(0) dt
    }

    /// Central finite differences of the unicycle step, columns (x, y, v, theta).
    fn fd_jacobian(state: &VehicleState, dt: f64, h: f64) -> Matrix4<f64> {
        let mut j = Matrix4::zeros();
        for col in 0..4 {
            let mut plus = *state;
            let mut minus = *state;
            match col {
                0 => {
                    plus.x += h;
                    minus.x -= h;
                }
                1 => {
                    plus.y += h;
                    minus.y -= h;
                }
                2 => {
                    plus.v += h;
                    minus.v -= h;
                }
                _ => {
                    plus.theta += h;
                    minus.theta -= h;
                }
            }
            let fp = unicycle_step(&plus, (0.0, 0.0), dt);
            let fm = unicycle_step(&minus, (0.0, 0.0), dt);
            j[(0, col)] = (fp.x - fm.x) / (2.0 * h);
            j[(1, col)] = (fp.y - fm.y) / (2.0 * h);
            j[(2, col)] = (fp.v - fm.v) / (2.0 * h);
            j[(3, col)] = (fp.theta - fm.theta) / (2.0 * h);
        }
        j
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let state = VehicleState::new(
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
                rng.gen_range(1.0..15.0),
                rng.gen_range(-3.0..3.0),
            );
            let dt = rng.gen_range(0.05..0.2);
            let analytic = motion_jacobian(&state, dt);
            let numeric = fd_jacobian(&state, dt, 1e-5);
            for r in 0..4 {
                for c in 0..4 {
                    let denom = analytic[(r, c)].abs().max(1.0);
                    assert!(
                        (analytic[(r, c)] - numeric[(r, c)]).abs() / denom < 1e-6,
                        "mismatch at ({r},{c}): {} vs {}",
                        analytic[(r, c)],
                        numeric[(r, c)]
                    );
                }
            }
        }
    }

    #[test]
    fn predict_zero_noise_fixed_point() {
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.0, 0.0, 0.0, 0.0));
        ekf.process_noise = Matrix4::zeros();
        ekf.covariance = Matrix4::zeros();
        let out = ekf_predict(&ekf, (0.0, 0.0), 0.1).unwrap();
        assert_eq!(out.mean, ekf.mean);
        assert_eq!(out.covariance, Matrix4::zeros());
    }

    #[test]
    fn predict_identity_jacobian_limit() {
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.0, 0.0, 5.0, 0.2));
        ekf.process_noise = Matrix4::zeros();
        let out = ekf_predict(&ekf, (0.0, 0.0), 1e-9).unwrap();
        assert!((out.covariance - Matrix4::identity()).abs().max() < 1e-8);
    }

    #[test]
    fn predict_rejects_non_psd_covariance() {
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.0, 0.0, 5.0, 0.0));
        ekf.covariance[(0, 0)] = -1.0;
        assert!(matches!(
            ekf_predict(&ekf, (0.0, 0.0), 0.1),
            Err(Error::NumericalError(_))
        ));
    }

    #[test]
    fn update_zero_innovation_keeps_mean() {
        let ekf = EkfState::from_vehicle(&VehicleState::new(3.0, -2.0, 5.0, 0.4));
        let out = ekf_update(&ekf, (3.0, -2.0)).unwrap();
        assert_relative_eq!(out.mean, ekf.mean, epsilon = 1e-12);
    }

    #[test]
    fn update_no_trust_limit() {
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.0, 0.0, 5.0, 0.0));
        ekf.measurement_noise = Matrix2::from_diagonal(&Vector2::new(1e12, 1e12));
        let out = ekf_update(&ekf, (10.0, 10.0)).unwrap();
        assert!((out.mean - ekf.mean).abs().max() < 1e-9);
    }

    #[test]
    fn update_full_trust_limit() {
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.0, 0.0, 5.0, 0.0));
        ekf.measurement_noise = Matrix2::from_diagonal(&Vector2::new(1e-12, 1e-12));
        let out = ekf_update(&ekf, (10.0, -4.0)).unwrap();
        assert_relative_eq!(out.mean[0], 10.0, epsilon = 1e-6);
        assert_relative_eq!(out.mean[1], -4.0, epsilon = 1e-6);
    }

    #[test]
    fn covariance_stays_psd_through_interleavings() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.0, 0.0, 8.0, 0.5));
        for _ in 0..100 {
            if rng.gen_bool(0.5) {
                let control = (rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
                ekf = ekf_predict(&ekf, control, 0.1).unwrap();
            } else {
                let z = (
                    ekf.mean[0] + rng.gen_range(-0.5..0.5),
                    ekf.mean[1] + rng.gen_range(-0.5..0.5),
                );
                ekf = ekf_update(&ekf, z).unwrap();
            }
            ekf.validate().unwrap();
        }
    }

    #[test]
    fn noise_free_tracking_converges() {
        // Ground truth follows the unicycle model exactly; the filter sees
        // exact positions with Q = 0 and must lock on within 20 steps.
        let dt = 0.1;
        let control = (0.3, 0.05);
        let mut truth = VehicleState::new(0.0, 0.0, 5.0, 0.2);
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.5, -0.4, 4.5, 0.25));
        // Keep the default process noise so the filter never becomes
        // overconfident in the unmeasured speed/heading states; trust the
        // exact position measurements almost completely.
        ekf.measurement_noise = Matrix2::from_diagonal(&Vector2::new(1e-9, 1e-9));
        let mut err = f64::INFINITY;
        for _ in 0..20 {
            truth = unicycle_step(&truth, control, dt);
            ekf = ekf_predict(&ekf, control, dt).unwrap();
            ekf = ekf_update(&ekf, (truth.x, truth.y)).unwrap();
            err = (ekf.mean[0] - truth.x).hypot(ekf.mean[1] - truth.y);
        }
        assert!(err < 1e-3, "position error {err} after 20 steps");
    }

    #[test]
    fn future_risk_of_stationary_scene_matches_instantaneous() {
        let params = RiskParams::default();
        let actor = RiskActor::new(VehicleState::new(5.0, 0.0, 0.0, 0.0), VehicleGeometry::default());
        let probe = (0.0, 0.0);
        let now = instantaneous_field(probe, &[actor], &[], &params);
        let fut = future_risk(probe, &[predict_actor(&actor, 0.1)], &[], &params);
        assert_relative_eq!(now, fut, epsilon = 1e-12);
    }

    #[test]
    fn future_risk_grows_for_approaching_vehicle() {
        let params = RiskParams::default();
        // Vehicle 10 m east of the probe, driving west at 10 m/s.
        let state = VehicleState::new(10.0, 0.0, 10.0, std::f64::consts::PI);
        let actor = RiskActor::new(state, VehicleGeometry::default());
        let probe = (0.0, 0.0);
        let now = instantaneous_field(probe, &[actor], &[], &params);
        let fut = future_risk(probe, &[predict_actor(&actor, 0.1)], &[], &params);
        assert!(fut > now, "future {fut} <= instantaneous {now}");
    }

    #[test]
    fn future_risk_empty_scene_is_statics_only() {
        let params = RiskParams::default();
        let obj = StaticObject::point(1.0, 1.0, 0.4);
        let fut = future_risk((0.0, 0.0), &[], &[obj], &params);
        assert_relative_eq!(
            fut,
            instantaneous_field((0.0, 0.0), &[], &[obj], &params),
            epsilon = 1e-15
        );
    }

    #[test]
    fn comprehensive_risk_blend() {
        let mut params = RiskParams::default();
        let actor = RiskActor::new(
            VehicleState::new(10.0, 0.0, 10.0, std::f64::consts::PI),
            VehicleGeometry::default(),
        );
        let probe = (0.0, 0.0);
        let now = instantaneous_field(probe, &[actor], &[], &params);
        let fut = future_risk(probe, &[predict_actor(&actor, 0.1)], &[], &params);

        params.w_now = 1.0;
        assert_relative_eq!(
            comprehensive_risk(probe, &[actor], &[], &params, 0.1),
            now,
            epsilon = 1e-12
        );
        params.w_now = 0.0;
        assert_relative_eq!(
            comprehensive_risk(probe, &[actor], &[], &params, 0.1),
            fut,
            epsilon = 1e-12
        );
        // Convex combination stays between the endpoints.
        params.w_now = 0.3157;
        let blend = comprehensive_risk(probe, &[actor], &[], &params, 0.1);
        assert!(blend >= now.min(fut) - 1e-12 && blend <= now.max(fut) + 1e-12);
    }

    #[test]
    fn comprehensive_blend_arithmetic() {
        // w = 0.3157 applied to endpoint risks 0.5 (now) and 0.8 (future).
        let blend = 0.3157 * 0.5 + (1.0 - 0.3157) * 0.8;
        assert_relative_eq!(blend, 0.7053, epsilon = 1e-4);
    }
}
