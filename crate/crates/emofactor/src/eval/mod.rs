//! Evaluation: classification metrics, the ablation system grid, and report
//! emission.

pub mod harness;
pub mod metrics;
pub mod report;
pub mod systems;

pub use harness::{
    cross_corpus_eval, run_ablation, AblationConfig, AblationOutcome, LabeledSplits, ResultRow,
    SystemFailure,
};
pub use metrics::{confusion_matrix, uar, ConfusionMatrix};
pub use report::{emit_report, ReportBundle, REPORT_SCHEMA_VERSION};
pub use systems::{enumerate_systems, system_for_tag, AblationSystem, SystemKind, RAW_TAG};
