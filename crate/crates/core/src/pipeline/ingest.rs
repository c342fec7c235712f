//! Dataset ingestion: trajectory CSV files (one or more scenarios per file)
//! and JSON manifests binding scenario files to conflict-point overrides and
//! static surroundings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScenarioRecord, StaticObject, VehicleGeometry, VehicleRole, VehicleState};
use crate::path::{angle_diff, conflict_point_of, differentiate_controls, normalize_angle, path_distance_to_conflict};

/// Default sampling interval scenarios are normalized to, s.
pub const DEFAULT_DT: f64 = 0.1;

/// Ingestion result: validated scenarios plus non-fatal warnings (e.g.
/// resampling notices) for the caller to surface.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub scenarios: Vec<ScenarioRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
struct RawRow {
    t: f64,
    x: f64,
    y: f64,
    v: f64,
    theta: f64,
    length: f64,
    width: f64,
    a: Option<f64>,
}

/// Normalize a CSV header cell: trim, lowercase, drop a trailing unit
/// annotation such as "(m/s2)".
fn normalize_header(h: &str) -> String {
    let cut = h.find('(').unwrap_or(h.len());
    h[..cut].trim().to_lowercase()
}

fn parse_field(raw: &str, column: &str, location: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::ParseError {
        location: location.to_string(),
        message: format!("column {column:?}: cannot parse {raw:?} as a number"),
    })
}

/// Linearly interpolate raw rows onto a uniform time grid. Headings
/// interpolate along the shortest arc; speeds clamp at zero.
fn resample_rows(rows: &[RawRow], dt: f64) -> Vec<VehicleState> {
    let t0 = rows[0].t;
    let t_end = rows[rows.len() - 1].t;
    let n = ((t_end - t0) / dt + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        while seg + 2 < rows.len() && rows[seg + 1].t <= t {
            seg += 1;
        }
        let (lo, hi) = (&rows[seg], &rows[seg + 1]);
        let span = hi.t - lo.t;
        let frac = if span > 0.0 {
            ((t - lo.t) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut s = VehicleState::new(
            lo.x + frac * (hi.x - lo.x),
            lo.y + frac * (hi.y - lo.y),
            (lo.v + frac * (hi.v - lo.v)).max(0.0),
            normalize_angle(lo.theta + frac * angle_diff(hi.theta, lo.theta)),
        );
        if let (Some(a_lo), Some(a_hi)) = (lo.a, hi.a) {
            s.a = a_lo + frac * (a_hi - a_lo);
        }
        s.t_index = k;
        out.push(s);
    }
    out
}

/// Convert one vehicle's rows into a uniformly sampled trajectory with
/// controls populated. Returns the trajectory and an optional warning.
fn build_trajectory(
    mut rows: Vec<RawRow>,
    target_dt: f64,
    context: &str,
) -> Result<(Vec<VehicleState>, Option<String>)> {
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    for pair in rows.windows(2) {
        if (pair[1].t - pair[0].t).abs() < 1e-9 {
            return Err(Error::ParseError {
                location: context.to_string(),
                message: format!("duplicate timestamp {:.6} s", pair[0].t),
            });
        }
    }
    let has_accel = rows.iter().all(|r| r.a.is_some());

    let mut warning = None;
    let traj = if rows.len() == 1 {
        let r = &rows[0];
        let mut s = VehicleState::new(r.x, r.y, r.v, r.theta);
        s.a = r.a.unwrap_or(0.0);
        vec![s]
    } else {
        let dt0 = rows[1].t - rows[0].t;
        let uniform = rows
            .windows(2)
            .all(|p| ((p[1].t - p[0].t) - dt0).abs() <= 1e-6);
        if uniform && (dt0 - target_dt).abs() <= 1e-9 {
            rows.iter()
                .enumerate()
                .map(|(k, r)| {
                    let mut s = VehicleState::new(r.x, r.y, r.v, r.theta);
                    s.a = r.a.unwrap_or(0.0);
                    s.t_index = k;
                    s
                })
                .collect()
        } else {
            warning = Some(if uniform {
                format!(
                    "{context}: resampled from {:.1} Hz to {:.1} Hz",
                    1.0 / dt0,
                    1.0 / target_dt
                )
            } else {
                format!(
                    "{context}: non-uniform sampling, resampled to {:.1} Hz",
                    1.0 / target_dt
                )
            });
            resample_rows(&rows, target_dt)
        }
    };
    let mut traj = traj;
    if has_accel {
        // Accelerations provided (and carried through resampling); still
        // populate turn rates from headings.
        let accels: Vec<f64> = traj.iter().map(|s| s.a).collect();
        differentiate_controls(&mut traj, target_dt);
        for (s, a) in traj.iter_mut().zip(accels) {
            s.a = a;
        }
    } else {
        differentiate_controls(&mut traj, target_dt);
    }
    Ok((traj, warning))
}

/// Ingest one trajectory CSV. A file may contain several scenarios; each
/// must provide both vehicle roles. Scenarios are returned sorted by id.
pub fn ingest_csv<P: AsRef<Path>>(path: P) -> Result<IngestOutcome> {
    ingest_csv_with(path, DEFAULT_DT, None, &[])
}

/// Full-control CSV ingestion: target sampling interval, optional conflict
/// point override and static objects to attach to every scenario.
pub fn ingest_csv_with<P: AsRef<Path>>(
    path: P,
    target_dt: f64,
    conflict_override: Option<(f64, f64)>,
    statics: &[StaticObject],
) -> Result<IngestOutcome> {
    let path = path.as_ref();
    let display = path.display().to_string();
    if !(target_dt > 0.0 && target_dt.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "target dt must be positive, got {target_dt}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ParseError {
            location: display.clone(),
            message: e.to_string(),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::ParseError {
            location: display.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(normalize_header)
        .collect();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ParseError {
                location: display.clone(),
                message: format!("missing required column {name:?}"),
            })
    };
    let col_id = column("scenario_id")?;
    let col_role = column("vehicle_role")?;
    let col_t = column("t")?;
    let col_x = column("x")?;
    let col_y = column("y")?;
    let col_v = column("v")?;
    let col_theta = column("theta")?;
    let col_length = column("length")?;
    let col_width = column("width")?;
    let col_a = headers.iter().position(|h| h == "a");

    // Group rows by (scenario, role), keeping geometry per vehicle.
    type Key = (String, VehicleRole);
    let mut groups: BTreeMap<Key, Vec<RawRow>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let location = format!("{display}:{}", line + 2);
        let record = record.map_err(|e| Error::ParseError {
            location: location.clone(),
            message: e.to_string(),
        })?;
        let get = |idx: usize, name: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::ParseError {
                location: location.clone(),
                message: format!("missing value for column {name:?}"),
            })
        };
        let id = get(col_id, "scenario_id")?.to_string();
        let role: VehicleRole =
            get(col_role, "vehicle_role")?
                .parse()
                .map_err(|e: Error| Error::ParseError {
                    location: location.clone(),
                    message: e.to_string(),
                })?;
        let row = RawRow {
            t: parse_field(get(col_t, "t")?, "t", &location)?,
            x: parse_field(get(col_x, "x")?, "x", &location)?,
            y: parse_field(get(col_y, "y")?, "y", &location)?,
            v: parse_field(get(col_v, "v")?, "v", &location)?,
            theta: parse_field(get(col_theta, "theta")?, "theta", &location)?,
            length: parse_field(get(col_length, "length")?, "length", &location)?,
            width: parse_field(get(col_width, "width")?, "width", &location)?,
            a: match col_a {
                Some(idx) => Some(parse_field(get(idx, "a")?, "a", &location)?),
                None => None,
            },
        };
        groups.entry((id, role)).or_default().push(row);
    }
    if groups.is_empty() {
        return Err(Error::ParseError {
            location: display,
            message: "file contains no data rows".into(),
        });
    }

    let mut warnings = Vec::new();
    let mut scenarios = Vec::new();
    let ids: Vec<String> = {
        let mut ids: Vec<String> = groups.keys().map(|(id, _)| id.clone()).collect();
        ids.dedup();
        ids
    };
    for id in ids {
        let mut per_role: BTreeMap<VehicleRole, (Vec<VehicleState>, VehicleGeometry)> =
            BTreeMap::new();
        for role in VehicleRole::BOTH {
            let rows = groups.remove(&(id.clone(), role)).ok_or_else(|| {
                Error::InvalidScenario(format!(
                    "scenario {id}: missing {role} vehicle rows in {display}"
                ))
            })?;
            let geometry = VehicleGeometry::new(rows[0].length, rows[0].width);
            for r in &rows {
                if (r.length - geometry.length).abs() > 1e-6
                    || (r.width - geometry.width).abs() > 1e-6
                {
                    return Err(Error::ParseError {
                        location: display.clone(),
                        message: format!(
                            "scenario {id}: {role} vehicle geometry changes between rows"
                        ),
                    });
                }
            }
            let context = format!("{display} scenario {id} ({role})");
            let (traj, warning) = build_trajectory(rows, target_dt, &context)?;
            if let Some(w) = warning {
                warnings.push(w);
            }
            per_role.insert(role, (traj, geometry));
        }
        let (left, left_geom) = per_role.remove(&VehicleRole::LeftTurn).expect("inserted");
        let (straight, straight_geom) = per_role.remove(&VehicleRole::Straight).expect("inserted");

        let conflict_point = match conflict_override {
            Some(cp) => cp,
            None => conflict_point_of(&left, &straight)?,
        };
        let dist_left = path_distance_to_conflict(&left, conflict_point)?;
        let dist_straight = path_distance_to_conflict(&straight, conflict_point)?;

        let record = ScenarioRecord {
            scenario_id: id,
            left_turn_trajectory: left,
            straight_trajectory: straight,
            left_turn_geometry: left_geom,
            straight_geometry: straight_geom,
            static_objects: statics.to_vec(),
            conflict_point,
            dist_to_conflict: (dist_left, dist_straight),
            dt: target_dt,
        };
        record.validate()?;
        scenarios.push(record);
    }
    scenarios.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    Ok(IngestOutcome {
        scenarios,
        warnings,
    })
}

/// One scenario-file entry in a manifest: either a bare path or a path with
/// per-file overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestEntry {
    Path(String),
    Detailed {
        file: String,
        #[serde(default)]
        conflict_point: Option<(f64, f64)>,
        #[serde(default)]
        static_objects: Vec<StaticObject>,
    },
}

impl ManifestEntry {
    fn file(&self) -> &str {
        match self {
            ManifestEntry::Path(p) => p,
            ManifestEntry::Detailed { file, .. } => file,
        }
    }
}

/// Dataset manifest: scenario files plus shared settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenarios: Vec<ManifestEntry>,
    /// Target sampling interval, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Static objects shared by every scenario.
    #[serde(default)]
    pub static_objects: Vec<StaticObject>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

/// Load a JSON manifest and ingest every referenced scenario file. Relative
/// paths resolve against the manifest's directory.
pub fn load_manifest<P: AsRef<Path>>(path: P) -> Result<IngestOutcome> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::ParseError {
        location: path.display().to_string(),
        message: format!("invalid manifest: {e}"),
    })?;
    if manifest.scenarios.is_empty() {
        return Err(Error::InvalidInput(format!(
            "manifest {} lists no scenarios",
            path.display()
        )));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut scenarios = Vec::new();
    let mut warnings = Vec::new();
    for entry in &manifest.scenarios {
        let file: PathBuf = {
            let p = Path::new(entry.file());
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let (conflict_override, mut statics) = match entry {
            ManifestEntry::Path(_) => (None, Vec::new()),
            ManifestEntry::Detailed {
                conflict_point,
                static_objects,
                ..
            } => (*conflict_point, static_objects.clone()),
        };
        statics.extend(manifest.static_objects.iter().copied());
        let outcome = ingest_csv_with(&file, manifest.dt, conflict_override, &statics)?;
        scenarios.extend(outcome.scenarios);
        warnings.extend(outcome.warnings);
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &scenarios {
        if !seen.insert(s.scenario_id.clone()) {
            return Err(Error::InvalidScenario(format!(
                "duplicate scenario id {:?} across manifest files",
                s.scenario_id
            )));
        }
    }
    scenarios.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    Ok(IngestOutcome {
        scenarios,
        warnings,
    })
}

/// Serialize scenarios back to the ingestion CSV schema (used by the
/// synthetic-data tooling and round-trip tests).
pub fn write_scenario_csv<P: AsRef<Path>>(path: P, scenarios: &[ScenarioRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record([
        "scenario_id",
        "vehicle_role",
        "t(s)",
        "x(m)",
        "y(m)",
        "v(m/s)",
        "theta(rad)",
        "length(m)",
        "width(m)",
        "a(m/s2)",
    ])
    .map_err(csv_err)?;
    for s in scenarios {
        for role in VehicleRole::BOTH {
            let geom = s.geometry(role);
            for (k, st) in s.trajectory(role).iter().enumerate() {
                w.write_record([
                    s.scenario_id.clone(),
                    role.to_string(),
                    format!("{}", k as f64 * s.dt),
                    format!("{}", st.x),
                    format!("{}", st.y),
                    format!("{}", st.v),
                    format!("{}", st.theta),
                    format!("{}", geom.length),
                    format!("{}", geom.width),
                    format!("{}", st.a),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::ParseError {
        location: "csv".into(),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameConfig;
    use crate::risk::RiskParams;
    use crate::synth::synthesize_crossing_scenario;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn crossing_csv(dt: f64) -> String {
        let mut out = String::from(
            "scenario_id,vehicle_role,t(s),x(m),y(m),v(m/s),theta(rad),length(m),width(m)\n",
        );
        // Left-turn vehicle drives +x through the origin, straight drives +y.
        for k in 0..40 {
            let t = k as f64 * dt;
            let p = -15.0 + 5.0 * t;
            out.push_str(&format!("s1,left_turn,{t},{p},0,5,0,4.5,1.8\n"));
            out.push_str(&format!(
                "s1,straight,{t},0,{p},5,{},4.5,1.8\n",
                std::f64::consts::FRAC_PI_2
            ));
        }
        out
    }

    #[test]
    fn well_formed_file_yields_one_scenario() {
        let f = write_temp(&crossing_csv(0.1));
        let outcome = ingest_csv(f.path()).unwrap();
        assert_eq!(outcome.scenarios.len(), 1);
        assert!(outcome.warnings.is_empty());
        let s = &outcome.scenarios[0];
        assert_eq!(s.scenario_id, "s1");
        assert_relative_eq!(s.conflict_point.0, 0.0, epsilon = 1e-9);
        assert_relative_eq!(s.conflict_point.1, 0.0, epsilon = 1e-9);
        assert_relative_eq!(s.dist_to_conflict.0, 15.0, epsilon = 1e-6);
        assert_relative_eq!(s.dist_to_conflict.1, 15.0, epsilon = 1e-6);
        assert_eq!(s.left_turn_trajectory.len(), 40);
        // Accelerations were differentiated from constant speed: zero.
        assert!(s.left_turn_trajectory.iter().all(|st| st.a.abs() < 1e-9));
    }

    #[test]
    fn missing_heading_column_is_named() {
        let f = write_temp(
            "scenario_id,vehicle_role,t(s),x(m),y(m),v(m/s),length(m),width(m)\n\
             s1,left_turn,0,0,0,5,4.5,1.8\n",
        );
        let err = ingest_csv(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("theta"), "error should name the column: {msg}");
    }

    #[test]
    fn nine_hz_data_resampled_with_warning() {
        let f = write_temp(&crossing_csv(1.0 / 9.0));
        let outcome = ingest_csv(f.path()).unwrap();
        assert_eq!(outcome.scenarios.len(), 1);
        assert!(
            outcome.warnings.iter().any(|w| w.contains("resampled")),
            "expected a resampling warning, got {:?}",
            outcome.warnings
        );
        assert_relative_eq!(outcome.scenarios[0].dt, 0.1, epsilon = 1e-12);
        // Positions still follow the 5 m/s motion on the new grid.
        let traj = &outcome.scenarios[0].left_turn_trajectory;
        assert_relative_eq!(traj[10].x - traj[0].x, 5.0, epsilon = 1e-6);
    }

    #[test]
    fn bare_headers_without_units_accepted() {
        let content = crossing_csv(0.1)
            .replace("t(s)", "t")
            .replace("x(m)", "x")
            .replace("y(m)", "y")
            .replace("v(m/s)", "v")
            .replace("theta(rad)", "theta")
            .replace("length(m)", "length")
            .replace("width(m)", "width");
        let f = write_temp(&content);
        assert_eq!(ingest_csv(f.path()).unwrap().scenarios.len(), 1);
    }

    #[test]
    fn missing_role_is_rejected() {
        let mut content = String::from(
            "scenario_id,vehicle_role,t(s),x(m),y(m),v(m/s),theta(rad),length(m),width(m)\n",
        );
        for k in 0..10 {
            let t = k as f64 * 0.1;
            content.push_str(&format!("s1,left_turn,{t},{},0,5,0,4.5,1.8\n", -15.0 + t));
        }
        let f = write_temp(&content);
        let err = ingest_csv(f.path()).unwrap_err();
        assert!(err.to_string().contains("straight"));
    }

    #[test]
    fn unparseable_number_reports_row() {
        let mut content = crossing_csv(0.1);
        content.push_str("s1,left_turn,99,abc,0,5,0,4.5,1.8\n");
        let f = write_temp(&content);
        let err = ingest_csv(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("abc"));
        assert!(msg.contains(":82"), "row number expected in {msg}");
    }

    #[test]
    fn synthetic_round_trip_through_csv() {
        let cfg = GameConfig::default();
        let params = RiskParams::default();
        let s = synthesize_crossing_scenario("rt", (6.0, 7.0), (18.0, 24.0), &cfg, &params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("rt.csv");
        write_scenario_csv(&csv_path, std::slice::from_ref(&s)).unwrap();
        let outcome = ingest_csv(&csv_path).unwrap();
        assert_eq!(outcome.scenarios.len(), 1);
        let r = &outcome.scenarios[0];
        assert_eq!(r.left_turn_trajectory.len(), s.left_turn_trajectory.len());
        for (a, b) in r
            .left_turn_trajectory
            .iter()
            .zip(&s.left_turn_trajectory)
        {
            assert_relative_eq!(a.x, b.x, epsilon = 1e-12);
            assert_relative_eq!(a.v, b.v, epsilon = 1e-12);
            assert_relative_eq!(a.a, b.a, epsilon = 1e-12);
        }
        assert_relative_eq!(r.dist_to_conflict.0, s.dist_to_conflict.0, epsilon = 1e-6);
    }

    #[test]
    fn manifest_applies_overrides_and_statics() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("a.csv");
        std::fs::write(&csv_path, crossing_csv(0.1)).unwrap();
        let manifest_path = dir.path().join("manifest.json");
        std::fs::write(
            &manifest_path,
            r#"{
                "dt": 0.1,
                "static_objects": [ { "x": 3.0, "y": 3.0, "max_risk": 0.4 } ],
                "scenarios": [
                    { "file": "a.csv", "conflict_point": [0.0, 0.0],
                      "static_objects": [ { "x": -3.0, "y": 0.5, "max_risk": 1.0, "length": 1.0, "width": 1.0 } ] }
                ]
            }"#,
        )
        .unwrap();
        let outcome = load_manifest(&manifest_path).unwrap();
        assert_eq!(outcome.scenarios.len(), 1);
        let s = &outcome.scenarios[0];
        assert_eq!(s.static_objects.len(), 2);
        assert_relative_eq!(s.static_objects[0].max_risk, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.static_objects[1].max_risk, 0.4, epsilon = 1e-12);
        assert_relative_eq!(s.static_objects[1].length, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn manifest_rejects_duplicate_ids() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), crossing_csv(0.1)).unwrap();
        std::fs::write(dir.path().join("b.csv"), crossing_csv(0.1)).unwrap();
        let manifest_path = dir.path().join("m.json");
        std::fs::write(
            &manifest_path,
            r#"{ "scenarios": [ "a.csv", "b.csv" ] }"#,
        )
        .unwrap();
        assert!(load_manifest(&manifest_path).is_err());
    }
}
