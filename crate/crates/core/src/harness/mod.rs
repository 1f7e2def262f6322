//! Experiment driver: checkpoint pipeline, strategy sweeps, the run store,
//! CSV and SVG output, and fixture checks.

mod accounting;
mod config;
mod fixture;
mod pipeline;
mod plot;
mod store;
mod sweep;

pub use accounting::{
    bytes_to_bits, cmd_accounting, human_bytes, params_to_bits, tokens_to_bytes, AccountingReport,
};
pub use config::{
    AdapterGrid, AlphaGrid, CorpusSpec, ExperimentConfig, ModelSpec, PipelineConfig, PosttrainSpec,
    PromptGrid, StrategyGrids, SubsetGrid, SweepConfig, TrainGrid,
};
pub use fixture::{
    cmd_fixture_check, published_frontier, published_points, FixtureCheck, PublishedPoint,
    PUBLISHED,
};
pub use pipeline::{build_family, cmd_pretrain, load_or_build, posttrain, CheckpointFamily};
pub use plot::{cmd_plot, plot_coordinates, render_svg, Series};
pub use store::RunStore;
pub use sweep::{
    build_cell, cmd_replay, cmd_sweep, expand, run_sweep, Cell, RunRecord, SweepReport,
};
