//! Scott-Knott ranking of repeated-run samples and the win tables built on
//! top of it: per-metric treatment wins across datasets and the best-of
//! cross-algorithm comparison.

mod scott_knott;
mod tables;

pub use scott_knott::{
    bootstrap_p_value, cliffs_delta, groups_differ, scott_knott, RankTable, SampleSet,
    ScottKnottConfig,
};
pub use tables::{
    best_of, win_table, BestCell, BestOfTable, TotalRow, WinTable, BEST_OF_CSV_HEADER,
    WINS_CSV_HEADER,
};
pub(crate) use tables::render_grid;

/// Treatment labels used throughout the harness.
pub const UNTUNED: &str = "untuned";
pub const RANDOM: &str = "random";
pub const HYPEROPT: &str = "hyperopt";
pub const TREATMENTS: [&str; 3] = [UNTUNED, RANDOM, HYPEROPT];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("no sample sets")]
    Empty,
    #[error("duplicate label \"{0}\"")]
    DuplicateLabel(String),
    #[error("sample set \"{0}\" needs at least 2 values")]
    TooFewValues(String),
    #[error("sample set \"{0}\" contains a non-finite value")]
    NonFinite(String),
    #[error("inconsistent treatment sets: {0}")]
    InconsistentTreatments(String),
    #[error("missing result cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),
}

pub type Result<T> = std::result::Result<T, StatsError>;
