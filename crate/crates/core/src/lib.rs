//! Evaluation of driver interaction ability in two-vehicle unprotected
//! left-turn encounters.
//!
//! The library models perceived risk as a distance/speed-attenuated field
//! with a one-step EKF-predicted future component, rolls out rational-agent
//! benchmarks from non-cooperative (Nash) and cooperative (Shapley) stage
//! games, scores recorded driver actions against the benchmark with a
//! morphological similarity metric, and packages the whole flow behind a
//! CSV/manifest pipeline.

pub mod calibration;
pub mod error;
pub mod estimation;
pub mod game;
pub mod model;
pub mod path;
pub mod pipeline;
pub mod risk;
pub mod scoring;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use estimation::EkfState;
pub use game::{GameConfig, GameType, PlayerState, Rationality, StagePayoffs};
pub use model::{
    ActionSequence, ScenarioRecord, StaticObject, VehicleGeometry, VehicleRole, VehicleState,
};
pub use pipeline::{compare_groups, evaluate_manifest, EvaluationReport, Sociality};
pub use risk::{RiskActor, RiskParams};
pub use scoring::{AbilityLevel, AbilityScore, Criterion};
