//! Classification benchmark suite: k-nearest-neighbour and backpropagation
//! network classifiers, evaluation metrics, missing-value handling (simple
//! fills and multiple imputation) and a stratified cross-validation harness.
//!
//! All randomized operations are driven by explicit `u64` seeds and are
//! bit-reproducible across runs and thread counts.

pub mod data;
pub mod error;
pub mod harness;
pub mod imputation;
pub mod knn;
pub mod metrics;
pub mod mlp;

pub use data::{
    drop_missing_class, load_dataset, load_dataset_path, nominal_to_binary, normalize,
    save_dataset, save_dataset_path, stratified_folds, AttributeKind, AttributeSchema, Cell,
    Dataset, FoldSplit, MinMaxStats, SourceFormat,
};
pub use error::{Error, Result};
pub use harness::{
    compare_missing, cross_validate, emit_report, emit_roc, materialize_datasets, report_to_csv,
    run_experiment, sweep, ClassifierSpec, ComparisonRow, ComparisonTable, CvOptions,
    ExperimentConfig, KnnGrid, MissingMethod, MlpGrid, ReportFormat, SweepGrid,
};
pub use imputation::{
    em_mle, mean_mode_impute, missingness_summary, multiple_impute, EmResult, ImputationConfig,
    MeanModeStats, MissingnessSummary, NormalModelState,
};
pub use knn::{ClassDistribution, KnnClassifier, KnnConfig, VoteWeighting};
pub use metrics::{
    rmse, roc_points, ClassRates, ConfusionMatrix, EvaluationReport, FoldMetrics, RocPoint,
};
pub use mlp::{MlpConfig, Network};
