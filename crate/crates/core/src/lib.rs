//! Deterministic simulation of federated learning under systems heterogeneity.
//!
//! The crate covers the full pipeline of a simulated run:
//!
//! * [`datagen`] builds non-IID client shards (synthetic or ingested from CSV),
//! * [`model`] is a multinomial logistic regression trained with mini-batch SGD,
//! * [`hetero`] draws the per-round affordable workload of every client,
//! * [`predictor`] keeps each client's `(L, H)` task pair up to date (Ira and Fassa),
//! * [`selector`] picks participants uniformly or by training value,
//! * [`engine`] ties everything together into FedAvg / FedSAE rounds.
//!
//! Every random draw comes from a stream keyed by `(seed, purpose, client, round)`,
//! so results do not depend on thread scheduling or the order clients are visited.

pub mod datagen;
pub mod engine;
pub mod error;
pub mod hetero;
pub mod model;
pub mod predictor;
pub mod rng;
pub mod selector;

pub use datagen::{ClientShard, PartitionOptions, Sample, SyntheticSpec};
pub use engine::{
    evaluate_global, run_experiment, Algorithm, ExperimentConfig, MetricsRow, RoundReport,
    Simulator,
};
pub use error::{Error, Result};
pub use hetero::CapacityProfile;
pub use model::{ModelWeights, TrainingConfig};
pub use predictor::{Completion, FassaPartialRule, PredictorParams, RoundOutcome, TaskPair};
pub use selector::{SelectionParams, SelectionState, ValueReport, ValueSource};
