//! Network selection over depths and segment lengths, feature extraction, and
//! the raw-lag versus extracted-feature prediction grid.

mod config;
mod experiment;
mod report;
mod seeds;
mod selection;

pub use config::{DataSource, ExperimentConfig, NetworkConfig, OrdersConfig};
pub use experiment::{select_network, run_experiment, ExperimentOutput, Variant, TOOL_VERSION};
pub use report::{CellResult, ExperimentReport, MdeEntry, OrderChoice, ReportMeta};
pub use seeds::{cell_seed, splitmix64};
pub use selection::{
    build_feature_datasets, extract_feature_dataset, select_network_on, select_candidate, CandidateResult,
    CandidateScore, FeatureDataset, FenSelection, SELECTION_TOLERANCE,
};
