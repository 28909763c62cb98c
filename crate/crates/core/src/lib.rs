//! Core engine for testing task-oriented dialog bots by simulation.
//!
//! The pipeline: a [`schema::BotDefinition`] is parsed into dialog-act maps
//! ([`generator`]), goals are simulated against a bot over a chat channel
//! ([`simulator`], with [`runtime`] as the reference bot), and the episodes
//! are turned into a health report ([`remediator`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix `f64`, which is what every serialized artifact uses.

pub mod generator;
pub mod remediator;
pub mod runtime;
pub mod scalar;
pub mod schema;
pub mod simulator;
pub mod text;

pub use scalar::Scalar;

pub type NluMatch = simulator::nlu::NluMatch<f64>;
pub type IntentModel = runtime::IntentModel<f64>;
pub type Classification = runtime::Classification<f64>;
pub type SessionMetrics = remediator::SessionMetrics<f64>;
pub type OutcomeCounts = remediator::OutcomeCounts<f64>;
pub type IntentScore = remediator::IntentScore<f64>;
pub type IntentReport = remediator::IntentReport<f64>;
pub type Interval = remediator::Interval<f64>;
pub type IntentCluster = remediator::IntentCluster<f64>;
