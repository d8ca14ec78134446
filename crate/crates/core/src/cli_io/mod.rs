//! Run configuration, output files and plotting. Everything that touches the
//! filesystem lives here.

mod config;
mod output;
mod plot;

pub use config::{
    apply_env, GridConfig, ModelConfig, OutputConfig, PresetConfig, PresetKind, RunConfig,
    SolverConfig, ENV_PREFIX, MAX_SEED,
};
pub use output::{
    content_hash, list_snapshots, read_diagnostics, read_snapshot, snapshot_name, write_outputs,
    Manifest, Snapshot, DIAGNOSTICS_FILE, MANIFEST_FILE,
};
pub use plot::plot_outputs;
