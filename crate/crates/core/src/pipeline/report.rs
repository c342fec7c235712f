//! Report emission and re-ingestion. All artifacts are plain CSV/JSON with
//! no timestamps, written atomically (temp file + rename), so identical
//! inputs produce byte-identical outputs. Floats are printed with the
//! shortest representation that parses back to the same value, making the
//! scores.csv round-trip exact.

use std::fs;
use std::path::{Path, PathBuf};

use super::EvaluationReport;
use crate::error::{Error, Result};
use crate::scoring::AbilityScore;

/// Width of PET histogram bins, seconds.
pub const PET_BIN_WIDTH: f64 = 0.5;

pub const SCORES_FILE: &str = "scores.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LEVELS_FILE: &str = "levels.csv";
pub const PET_FILE: &str = "pet.csv";
pub const SCORE_DISTRIBUTION_FILE: &str = "plot_score_distribution.csv";
pub const PET_BINS_FILE: &str = "plot_pet_bins.csv";
pub const CALIBRATION_TRACE_FILE: &str = "calibration_trace.csv";

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let final_path = dir.join(name);
    let tmp_path = dir.join(format!("{name}.tmp"));
    fs::write(&tmp_path, contents)?;
    fs::rename(&tmp_path, &final_path)?;
    Ok(final_path)
}

fn csv_to_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)
            .map_err(|e| Error::InvalidInput(format!("csv write: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv utf8: {e}")))
}

fn score_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "scenario_id".to_string(),
        "role".to_string(),
        "criterion".to_string(),
        "game_type".to_string(),
        "score".to_string(),
        "level".to_string(),
        "morphological_distance".to_string(),
        "cosine_similarity".to_string(),
    ]];
    for e in &report.scenarios {
        for r in &e.scores {
            rows.push(vec![
                r.scenario_id.clone(),
                r.role.as_str().to_string(),
                r.criterion.as_str().to_string(),
                r.game_type.as_str().to_string(),
                r.score.to_string(),
                r.level.as_str().to_string(),
                r.morphological_distance.to_string(),
                r.cosine_similarity.to_string(),
            ]);
        }
    }
    rows
}

fn level_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "criterion".to_string(),
        "game_type".to_string(),
        "level".to_string(),
        "count".to_string(),
    ]];
    for (key, hist) in &report.level_histograms {
        let (criterion, game_type) = key.split_once('/').unwrap_or((key.as_str(), ""));
        for (level, count) in hist {
            rows.push(vec![
                criterion.to_string(),
                game_type.to_string(),
                level.clone(),
                count.to_string(),
            ]);
        }
    }
    rows
}

fn pet_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["scenario_id".to_string(), "pet_s".to_string()]];
    for e in &report.scenarios {
        if let Some(pet) = e.pet {
            rows.push(vec![e.scenario_id.clone(), pet.to_string()]);
        }
    }
    rows
}

fn score_distribution_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "criterion".to_string(),
        "game_type".to_string(),
        "score".to_string(),
    ]];
    for e in &report.scenarios {
        for r in &e.scores {
            rows.push(vec![
                r.criterion.as_str().to_string(),
                r.game_type.as_str().to_string(),
                r.score.to_string(),
            ]);
        }
    }
    rows
}

fn pet_bin_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "bin_start_s".to_string(),
        "bin_end_s".to_string(),
        "count".to_string(),
    ]];
    let pets: Vec<f64> = report.scenarios.iter().filter_map(|e| e.pet).collect();
    if let Some(max) = pets.iter().copied().reduce(f64::max) {
        let max_idx = (max / PET_BIN_WIDTH).floor() as usize;
        let mut counts = vec![0usize; max_idx + 1];
        for p in &pets {
            let idx = ((p / PET_BIN_WIDTH).floor() as usize).min(max_idx);
            counts[idx] += 1;
        }
        for (idx, count) in counts.iter().enumerate() {
            let start = idx as f64 * PET_BIN_WIDTH;
            rows.push(vec![
                start.to_string(),
                (start + PET_BIN_WIDTH).to_string(),
                count.to_string(),
            ]);
        }
    }
    rows
}

fn calibration_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "generation".to_string(),
        "best_fitness".to_string(),
        "mean_fitness".to_string(),
    ]];
    if let Some(cal) = &report.calibration {
        for g in &cal.trace {
            rows.push(vec![
                g.generation.to_string(),
                g.best_fitness.to_string(),
                g.mean_fitness.to_string(),
            ]);
        }
    }
    rows
}

/// Write every report artifact into `out_dir` (created if absent).
/// Returns the paths written.
pub fn emit_report(report: &EvaluationReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
    json.push('\n');

    let files = vec![
        write_atomic(out_dir, SCORES_FILE, &csv_to_string(score_rows(report))?)?,
        write_atomic(out_dir, SUMMARY_FILE, &json)?,
        write_atomic(out_dir, LEVELS_FILE, &csv_to_string(level_rows(report))?)?,
        write_atomic(out_dir, PET_FILE, &csv_to_string(pet_rows(report))?)?,
        write_atomic(
            out_dir,
            SCORE_DISTRIBUTION_FILE,
            &csv_to_string(score_distribution_rows(report))?,
        )?,
        write_atomic(
            out_dir,
            PET_BINS_FILE,
            &csv_to_string(pet_bin_rows(report))?,
        )?,
        write_atomic(
            out_dir,
            CALIBRATION_TRACE_FILE,
            &csv_to_string(calibration_rows(report))?,
        )?,
    ];
    Ok(files)
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    column: &str,
    location: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| Error::ParseError {
        location: location.to_string(),
        message: format!("column '{column}': {e}"),
    })
}

/// Read a scores.csv back into score records (exact float round-trip).
pub fn read_scores_csv(path: &Path) -> Result<Vec<AbilityScore>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::ParseError {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::ParseError {
            location: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let expected = [
        "scenario_id",
        "role",
        "criterion",
        "game_type",
        "score",
        "level",
        "morphological_distance",
        "cosine_similarity",
    ];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::ParseError {
            location: format!("{}:1", path.display()),
            message: format!("expected columns {expected:?}, found {got:?}"),
        });
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::ParseError {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".to_string());
        let location = format!("{}:{}", path.display(), line);
        if record.len() != expected.len() {
            return Err(Error::ParseError {
                location,
                message: format!("expected {} fields, found {}", expected.len(), record.len()),
            });
        }
        out.push(AbilityScore {
            scenario_id: record[0].to_string(),
            role: parse_field(&record[1], "role", &location)?,
            criterion: parse_field(&record[2], "criterion", &location)?,
            game_type: parse_field(&record[3], "game_type", &location)?,
            score: parse_field(&record[4], "score", &location)?,
            level: parse_field(&record[5], "level", &location)?,
            morphological_distance: parse_field(&record[6], "morphological_distance", &location)?,
            cosine_similarity: parse_field(&record[7], "cosine_similarity", &location)?,
        });
    }
    Ok(out)
}

/// Read a previously emitted summary.json back into a report.
pub fn read_report(dir: &Path) -> Result<EvaluationReport> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| Error::ParseError {
        location: path.display().to_string(),
        message: e.to_string(),
    })
}
