//! Polyline geometry: arc-length parameterization, trajectory resampling,
//! conflict-point location and path distances.

use crate::error::{Error, Result};
use crate::model::VehicleState;

/// Trajectories whose closest approach to the conflict point exceeds this
/// gate (metres) are treated as non-conflicting.
pub const DEFAULT_CONFLICT_GATE: f64 = 5.0;

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Shortest signed angular difference `b - a`, in (-pi, pi].
pub fn angle_diff(b: f64, a: f64) -> f64 {
    normalize_angle(b - a)
}

/// Resample a uniformly sampled trajectory onto a new uniform timestep by
/// linear interpolation of x, y, v and shortest-arc interpolation of theta.
/// Acceleration and yaw rate are recomputed by finite differences (central
/// inside, one-sided at the ends).
///
/// Resampling at the source timestep returns the input unchanged.
pub fn resample_trajectory(
    traj: &[VehicleState],
    dt_src: f64,
    dt_target: f64,
) -> Result<Vec<VehicleState>> {
    if traj.is_empty() {
        return Err(Error::InvalidScenario(
            "cannot resample an empty trajectory".into(),
        ));
    }
    if !(dt_src > 0.0 && dt_target > 0.0) {
        return Err(Error::InvalidInput(format!(
            "timesteps must be positive (dt_src = {dt_src}, dt_target = {dt_target})"
        )));
    }
    if dt_src == dt_target || ((dt_src - dt_target) / dt_src).abs() < 1e-12 {
        return Ok(traj.to_vec());
    }

    let duration = (traj.len() - 1) as f64 * dt_src;
    let n_out = (duration / dt_target + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let t = (k as f64 * dt_target).min(duration);
        let pos = t / dt_src;
        let i = (pos.floor() as usize).min(traj.len().saturating_sub(2));
        let u = if traj.len() == 1 { 0.0 } else { pos - i as f64 };
        let (p, q) = if traj.len() == 1 {
            (&traj[0], &traj[0])
        } else {
            (&traj[i], &traj[i + 1])
        };
        out.push(VehicleState {
            x: p.x + u * (q.x - p.x),
            y: p.y + u * (q.y - p.y),
            v: (p.v + u * (q.v - p.v)).max(0.0),
            theta: normalize_angle(p.theta + u * angle_diff(q.theta, p.theta)),
            a: 0.0,
            omega: 0.0,
            t_index: k,
        });
    }
    differentiate_controls(&mut out, dt_target);
    Ok(out)
}

/// Fill `a` and `omega` by finite differencing `v` and `theta`.
pub fn differentiate_controls(traj: &mut [VehicleState], dt: f64) {
    let n = traj.len();
    if n < 2 {
        return;
    }
    for k in 0..n {
        let (va, vb, ta, tb, span) = if k == 0 {
            (traj[0].v, traj[1].v, traj[0].theta, traj[1].theta, dt)
        } else if k == n - 1 {
            (
                traj[n - 2].v,
                traj[n - 1].v,
                traj[n - 2].theta,
                traj[n - 1].theta,
                dt,
            )
        } else {
            (
                traj[k - 1].v,
                traj[k + 1].v,
                traj[k - 1].theta,
                traj[k + 1].theta,
                2.0 * dt,
            )
        };
        traj[k].a = (vb - va) / span;
        traj[k].omega = angle_diff(tb, ta) / span;
    }
}

/// An arc-length-parameterized polyline built from trajectory positions.
///
/// `sample(s)` clamps below zero and extrapolates past the recorded end
/// along the final heading, so a vehicle can be driven beyond its recorded
/// track during rollouts.
#[derive(Debug, Clone)]
pub struct PathTrack {
    points: Vec<(f64, f64)>,
    cum: Vec<f64>,
    headings: Vec<f64>,
    fallback_heading: f64,
}

impl PathTrack {
    pub fn from_states(traj: &[VehicleState]) -> Result<Self> {
        if traj.is_empty() {
            return Err(Error::InvalidScenario(
                "cannot build a path from an empty trajectory".into(),
            ));
        }
        let mut points: Vec<(f64, f64)> = vec![traj[0].position()];
        for st in &traj[1..] {
            let last = *points.last().unwrap();
            let p = st.position();
            if (p.0 - last.0).hypot(p.1 - last.1) > 1e-9 {
                points.push(p);
            }
        }
        let mut cum = vec![0.0];
        let mut headings = Vec::new();
        for w in points.windows(2) {
            let dx = w[1].0 - w[0].0;
            let dy = w[1].1 - w[0].1;
            cum.push(cum.last().unwrap() + dx.hypot(dy));
            headings.push(dy.atan2(dx));
        }
        Ok(PathTrack {
            points,
            cum,
            headings,
            fallback_heading: traj[0].theta,
        })
    }

    /// Total recorded arc length, metres.
    pub fn total_len(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Position and heading at arc length `s` from the first sample.
    pub fn sample(&self, s: f64) -> (f64, f64, f64) {
        if self.points.len() == 1 {
            let (x, y) = self.points[0];
            let h = self.fallback_heading;
            return (x + s.max(0.0) * h.cos(), y + s.max(0.0) * h.sin(), h);
        }
        let s = s.max(0.0);
        let total = self.total_len();
        if s >= total {
            let (x, y) = *self.points.last().unwrap();
            let h = *self.headings.last().unwrap();
            let extra = s - total;
            return (x + extra * h.cos(), y + extra * h.sin(), h);
        }
        // Find the segment containing s (cum is sorted ascending).
        let seg = match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.headings.len() - 1),
            Err(i) => i - 1,
        };
        let seg_len = self.cum[seg + 1] - self.cum[seg];
        let u = if seg_len > 0.0 {
            (s - self.cum[seg]) / seg_len
        } else {
            0.0
        };
        let (ax, ay) = self.points[seg];
        let (bx, by) = self.points[seg + 1];
        (
            ax + u * (bx - ax),
            ay + u * (by - ay),
            self.headings[seg],
        )
    }
}

/// Arc length along the trajectory polyline from the first sample to the
/// point of closest approach to `conflict_point`.
pub fn path_distance_to_conflict(
    traj: &[VehicleState],
    conflict_point: (f64, f64),
) -> Result<f64> {
    path_distance_to_conflict_gated(traj, conflict_point, DEFAULT_CONFLICT_GATE)
}

/// As [`path_distance_to_conflict`] with an explicit approach gate.
pub fn path_distance_to_conflict_gated(
    traj: &[VehicleState],
    conflict_point: (f64, f64),
    gate: f64,
) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::InvalidScenario(
            "cannot measure conflict distance on an empty trajectory".into(),
        ));
    }
    let (cx, cy) = conflict_point;
    let mut best_dist = f64::INFINITY;
    let mut best_arc = 0.0;
    let mut arc = 0.0;
    let mut prev = traj[0].position();
    // Distance from the first sample itself.
    let d0 = (cx - prev.0).hypot(cy - prev.1);
    if d0 < best_dist {
        best_dist = d0;
        best_arc = 0.0;
    }
    for st in &traj[1..] {
        let cur = st.position();
        let (dx, dy) = (cur.0 - prev.0, cur.1 - prev.1);
        let seg_len_sq = dx * dx + dy * dy;
        if seg_len_sq > 0.0 {
            let seg_len = seg_len_sq.sqrt();
            let t = (((cx - prev.0) * dx + (cy - prev.1) * dy) / seg_len_sq).clamp(0.0, 1.0);
            let px = prev.0 + t * dx;
            let py = prev.1 + t * dy;
            let d = (cx - px).hypot(cy - py);
            if d < best_dist - 1e-12 {
                best_dist = d;
                best_arc = arc + t * seg_len;
            }
            arc += seg_len;
        }
        prev = cur;
    }
    if best_dist > gate {
        return Err(Error::NoConflict(format!(
            "closest approach {best_dist:.3} m exceeds the {gate:.3} m gate"
        )));
    }
    Ok(best_arc)
}

/// First geometric intersection of the two reference polylines, walking the
/// left-turn path in travel order.
pub fn conflict_point_of(
    left: &[VehicleState],
    straight: &[VehicleState],
) -> Result<(f64, f64)> {
    let lp: Vec<(f64, f64)> = left.iter().map(|s| s.position()).collect();
    let sp: Vec<(f64, f64)> = straight.iter().map(|s| s.position()).collect();
    for lw in lp.windows(2) {
        let mut best_t = f64::INFINITY;
        let mut hit = None;
        for sw in sp.windows(2) {
            if let Some((t, point)) = segment_intersection(lw[0], lw[1], sw[0], sw[1]) {
                if t < best_t {
                    best_t = t;
                    hit = Some(point);
                }
            }
        }
        if let Some(point) = hit {
            return Ok(point);
        }
    }
    Err(Error::NoConflict(
        "reference paths do not intersect".into(),
    ))
}

/// Proper intersection of segments p1p2 and q1q2. Returns the parameter
/// along p1p2 and the intersection point; collinear overlap is ignored.
fn segment_intersection(
    p1: (f64, f64),
    p2: (f64, f64),
    q1: (f64, f64),
    q2: (f64, f64),
) -> Option<(f64, (f64, f64))> {
    let r = (p2.0 - p1.0, p2.1 - p1.1);
    let s = (q2.0 - q1.0, q2.1 - q1.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = (q1.0 - p1.0, q1.1 - p1.1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    let eps = 1e-9;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some((t, (p1.0 + t * r.0, p1.1 + t * r.1)))
    } else {
        None
    }
}
