//! Accuracy metrics, the sub-region capability analysis, experiment sweeps
//! and the runtime benchmark.

pub mod analysis;
pub mod bench;
pub mod metrics;
pub mod sweep;

pub use analysis::{AnalysisParams, MaxGrayDistribution, SubregionDistributions};
pub use bench::{benchmark, BenchReport};
pub use metrics::{centroid, centroid_error, iou, mask_iou, CentroidWeights};
pub use sweep::{run_sweep, summarize, Detectors, Method, MetricRow, SweepConfig, SweepKind, SweepSummary};
