//! Continual learning with orthogonal weights modification (OWM).
pub mod context;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod owm;
pub mod rng;
pub mod tasks;

mod codec;

pub use context::{ContextLayer, ContextVector};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, MetricsRecord, RunSummary};
pub use linalg::Matrix;
pub use network::{LayerSpec, Loss, Mlp, TrainConfig};
pub use owm::{CapacityReport, InputRecord, Projector};
pub use tasks::{Dataset, TaskSpec};
