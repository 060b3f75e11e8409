//! Partitioning of monolith trace corpora into microservice candidates,
//! partition quality metrics, hyperparameter tuning of the partitioners and
//! Scott-Knott ranking of the tuned and untuned treatments.

pub mod corpus;
pub mod experiment;
pub mod metrics;
pub mod optimizer;
pub mod partitioners;
pub mod seed;
pub mod stats;

pub use corpus::{load_dataset, save_dataset, CallGraph, Partition, TraceDataset};
pub use metrics::{LossSpec, Metric, MetricVector};
