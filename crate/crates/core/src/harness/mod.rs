//! Scenario simulation, metrics, sweeps and file formats used by the CLI.

mod baseline;
pub mod config;
pub mod datasets;
pub mod io;
mod metrics;
mod scenario;
pub mod suite;
mod sweep;

pub use baseline::{baseline_predictor, ConstantVelocity};
pub use metrics::{accumulate, evaluate, post_occlusion_hits, MetricsAccumulator, MetricsReport};
pub use scenario::{
    read_sequence, simulate, write_scenario, Motion, ObjectSpec, OcclusionEpisode, Pattern,
    Scenario, ScenarioSpec, Shape, Waypoint,
};
pub use sweep::{parse_values, sweep, track_scenario, write_sweep_csv, SweepParam, SweepRow};
