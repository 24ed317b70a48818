//! Experiment runner for the sparse principal subspace estimators:
//! simulation grids over (rank, sparsity) cells, deterministic parallel
//! replication, and CSV/table report emission.

pub mod error;
pub mod grid;
pub mod report;
pub mod spec;
pub mod stats;
pub mod truth;
pub mod whiteness;

pub use error::{exit_code, HarnessError, Result};
pub use grid::{run_grid, run_trial, trial_seed, TrialRecord, TrialStatus};
pub use report::{records_csv, summarize, summary_csv, table_text, CellStat};
pub use spec::{EstimatorKind, ExperimentSpec, VarianceProfile};
pub use truth::{build_truth, equispaced_spikes};
pub use whiteness::whiteness_samples;
