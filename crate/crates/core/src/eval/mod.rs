//! Synthetic grid labeling instances, oracle metrics and the benchmark that
//! tunes every diversity method on a validation split.

mod bench;
mod metrics;
mod synth;

pub use bench::{
    instance_summary, method_lists, run_benchmark, Curve, EvalReport, Method, Params, Selection,
    SuiteConfig, ORACLE_ACCURACY, ORACLE_CORPUS_IOU,
};
pub use metrics::{corpus_iou, iou, iou_counts, mean_iou, oracle_accuracy, oracle_best, pixel_accuracy, Metric};
pub use synth::{synth_generate, synth_rare_transition, SynthInstance, BETA};
