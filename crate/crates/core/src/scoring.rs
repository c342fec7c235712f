//! Interaction-ability scoring: compare a driver's recorded acceleration
//! sequence against the rational benchmark sequence via a shape-aware
//! (morphological) distance and cosine similarity, then map the score onto
//! five ability levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameType, Rationality};
use crate::model::{ActionSequence, VehicleRole};

/// Which rational objective the benchmark sequence optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Safety,
    Efficiency,
    Comprehensive,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [
        Criterion::Safety,
        Criterion::Efficiency,
        Criterion::Comprehensive,
    ];

    pub fn rationality(self) -> Rationality {
        match self {
            Criterion::Safety => Rationality::SafetyFirst,
            Criterion::Efficiency => Rationality::EfficiencyFirst,
            Criterion::Comprehensive => Rationality::Comprehensive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Safety => "safety",
            Criterion::Efficiency => "efficiency",
            Criterion::Comprehensive => "comprehensive",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safety" => Ok(Criterion::Safety),
            "efficiency" => Ok(Criterion::Efficiency),
            "comprehensive" => Ok(Criterion::Comprehensive),
            other => Err(Error::InvalidInput(format!(
                "unknown criterion {other:?} (expected safety, efficiency or comprehensive)"
            ))),
        }
    }
}

/// Five-level interaction-ability grade, from excellent (I) to poor (V).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbilityLevel {
    I,
    II,
    III,
    IV,
    V,
}

impl AbilityLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            AbilityLevel::I => "I",
            AbilityLevel::II => "II",
            AbilityLevel::III => "III",
            AbilityLevel::IV => "IV",
            AbilityLevel::V => "V",
        }
    }
}

impl std::fmt::Display for AbilityLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AbilityLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(AbilityLevel::I),
            "II" => Ok(AbilityLevel::II),
            "III" => Ok(AbilityLevel::III),
            "IV" => Ok(AbilityLevel::IV),
            "V" => Ok(AbilityLevel::V),
            other => Err(Error::InvalidInput(format!(
                "unknown ability level {other:?} (expected I..V)"
            ))),
        }
    }
}

/// Full scoring record for one driver under one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilityScore {
    pub scenario_id: String,
    pub role: VehicleRole,
    pub criterion: Criterion,
    pub game_type: GameType,
    pub score: f64,
    pub level: AbilityLevel,
    pub morphological_distance: f64,
    pub cosine_similarity: f64,
}

/// Plain Euclidean distance between two equal-length sequences.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AlignmentError(format!(
            "sequences must have equal length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Morphological distance: Euclidean distance weighted by shape agreement.
/// The weight 2 - ASD/SAD lies in [1, 2]; systematic one-sided deviations
/// (ASD = SAD) keep the plain distance, oscillating deviations double it.
/// Identical sequences (SAD = 0) give zero.
pub fn morphological_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let d_ed = euclidean_distance(a, b)?;
    let asd: f64 = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>().abs();
    let sad: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    if sad == 0.0 {
        return Ok(0.0);
    }
    Ok(d_ed * (2.0 - asd / sad))
}

/// Cosine similarity in [-1, 1]; two zero vectors count as identical (1),
/// one zero vector as orthogonal (0).
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AlignmentError(format!(
            "sequences must have equal length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let norm_sq_a = a.iter().map(|x| x * x).sum::<f64>();
    let norm_sq_b = b.iter().map(|x| x * x).sum::<f64>();
    match (norm_sq_a == 0.0, norm_sq_b == 0.0) {
        (true, true) => Ok(1.0),
        (true, false) | (false, true) => Ok(0.0),
        (false, false) => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            // A single square root of the product (rather than multiplying
            // two rounded roots) keeps the similarity of a sequence with
            // itself at exactly 1.
            Ok((dot / (norm_sq_a * norm_sq_b).sqrt()).clamp(-1.0, 1.0))
        }
    }
}

/// Align two action sequences by padding the shorter one with trailing
/// zeros (a vehicle that finished earlier simply stops acting). The step
/// lengths must match.
pub fn pad_align(real: &ActionSequence, rational: &ActionSequence) -> Result<(Vec<f64>, Vec<f64>)> {
    if (real.dt - rational.dt).abs() > 1e-9 {
        return Err(Error::AlignmentError(format!(
            "action sequences use different step lengths: {} vs {}",
            real.dt, rational.dt
        )));
    }
    let len = real.accels.len().max(rational.accels.len());
    let mut a = real.accels.clone();
    let mut b = rational.accels.clone();
    a.resize(len, 0.0);
    b.resize(len, 0.0);
    Ok((a, b))
}

/// Interaction-ability score S = Co / (1 + D_MSD) in [-1, 1]: 1 means the
/// real behavior matches the rational benchmark exactly, negative values
/// mean opposing action patterns.
pub fn ability_score(real: &ActionSequence, rational: &ActionSequence) -> Result<f64> {
    let (a, b) = pad_align(real, rational)?;
    let d_msd = morphological_distance(&a, &b)?;
    let co = cosine_similarity(&a, &b)?;
    Ok((co / (1.0 + d_msd)).clamp(-1.0, 1.0))
}

/// Score plus its components, for reporting.
pub fn score_breakdown(real: &ActionSequence, rational: &ActionSequence) -> Result<(f64, f64, f64)> {
    let (a, b) = pad_align(real, rational)?;
    let d_msd = morphological_distance(&a, &b)?;
    let co = cosine_similarity(&a, &b)?;
    let score = (co / (1.0 + d_msd)).clamp(-1.0, 1.0);
    Ok((score, d_msd, co))
}

/// Map a score in [-1, 1] onto the five ability levels. Values outside the
/// range (numerical overshoot) are clamped.
pub fn score_to_level(score: f64) -> AbilityLevel {
    let s = score.clamp(-1.0, 1.0);
    if s >= 0.6 {
        AbilityLevel::I
    } else if s >= 0.2 {
        AbilityLevel::II
    } else if s >= -0.2 {
        AbilityLevel::III
    } else if s >= -0.6 {
        AbilityLevel::IV
    } else {
        AbilityLevel::V
    }
}
