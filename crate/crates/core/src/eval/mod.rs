//! Evaluation protocol: L1 metrics on maps, depth and relit renderings,
//! benchmark manifests and fitting ablations.

mod ablation;
mod metrics;
mod protocol;
mod report;

#[cfg(test)]
mod tests;

pub use ablation::{ablation_suite, build_benchmark, AblationSample, AblationTable, BenchmarkRecord, ExternalAblation};
pub use metrics::{l1_depth, l1_metric, masked_median, median, tonemap, Channels};
pub use protocol::{
    aggregate, comparison_grid, evaluate, evaluate_maps, read_prediction, relight_light, relight_pair,
    write_prediction, Aggregate, EvalConfig, MetricsRow, MetricsTable, RelightGeometry, Stat, PREDICTION_META,
};
pub use report::{aggregates_csv, metrics_csv, write_json, write_metrics};
