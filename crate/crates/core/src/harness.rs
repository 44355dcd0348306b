//! Cross-validation engine, parameter-grid sweeps, missing-value method
//! comparisons, and report persistence.
//!
//! Every run is deterministic in its master seed: fold assignment derives
//! from the seed, and each fold's training RNG derives from the seed and the
//! fold index, so results do not depend on scheduling order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    drop_missing_class, load_dataset_path, nominal_to_binary, stratified_folds, Dataset,
    MinMaxStats,
};
use crate::error::{Error, Result};
use crate::imputation::{mean_mode_impute, multiple_impute, ImputationConfig, MeanModeStats};
use crate::knn::{KnnClassifier, KnnConfig};
use crate::metrics::{rmse, roc_points, ConfusionMatrix, EvaluationReport, FoldMetrics, RocPoint};
use crate::mlp::{self, MlpConfig};

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seed for a numbered work unit under a master seed.
fn mix_seed(master: u64, salt: u64) -> u64 {
    splitmix64(master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Which classifier a run evaluates. `Majority` is a dummy baseline that
/// predicts the most frequent training class (lowest index on ties) with the
/// training class priors as its probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn(KnnConfig),
    Mlp(MlpConfig),
    Majority,
}

impl ClassifierSpec {
    /// Short human-readable cell label used in tables.
    pub fn label(&self) -> String {
        match self {
            ClassifierSpec::Knn(cfg) => {
                format!("knn k={} {}", cfg.k, cfg.weighting.label())
            }
            ClassifierSpec::Mlp(cfg) => format!(
                "mlp h={} lr={} mom={} epochs={}",
                cfg.hidden, cfg.learning_rate, cfg.momentum, cfg.epochs
            ),
            ClassifierSpec::Majority => "majority".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierSpec::Knn(cfg) => {
                if cfg.k == 0 || cfg.k % 2 == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "k = {} is invalid: the neighbour count must be an odd number >= 1",
                        cfg.k
                    )));
                }
                Ok(())
            }
            ClassifierSpec::Mlp(cfg) => cfg.validate(),
            ClassifierSpec::Majority => Ok(()),
        }
    }
}

/// How missing values are handled before cross-validation.
///
/// `Default` leaves the data as is: the k-NN distance treats missing values
/// as maximally distant, while the network path fills training-fold
/// means/modes during fold preprocessing. The other two methods materialize
/// completed datasets up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MissingMethod {
    #[default]
    Default,
    MeanMode,
    MultipleImputation(ImputationConfig),
}

impl MissingMethod {
    pub fn label(&self) -> &'static str {
        match self {
            MissingMethod::Default => "default",
            MissingMethod::MeanMode => "mean-mode",
            MissingMethod::MultipleImputation(_) => "multiple-imputation",
        }
    }
}

/// Cross-validation knobs that are not part of the classifier itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    /// Name recorded in reports.
    pub dataset_name: String,
    /// Fit normalization/fill statistics per training fold (the default)
    /// instead of once on the full dataset.
    pub per_fold_preprocessing: bool,
    /// Positive class index for pooled one-vs-rest ROC points.
    pub roc_class: Option<usize>,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            dataset_name: String::new(),
            per_fold_preprocessing: true,
            roc_class: None,
        }
    }
}

/// One full experiment: a dataset, one classifier, one missing-value method,
/// and the evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Class attribute position; defaults to the last attribute.
    #[serde(default)]
    pub class_index: Option<usize>,
    pub classifier: ClassifierSpec,
    #[serde(default)]
    pub missing: MissingMethod,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Where to write the comparison table; `.json` selects JSON, anything
    /// else CSV. ROC files are written alongside when `roc_class` is set.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub per_fold_preprocessing: bool,
    /// Positive class label for ROC output.
    #[serde(default)]
    pub roc_class: Option<String>,
    /// Keep measured wall times in emitted files. Off by default so that
    /// re-running an identical configuration reproduces the bytes exactly.
    #[serde(default)]
    pub timing: bool,
}

fn default_folds() -> usize {
    10
}

pub fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, classifier: ClassifierSpec) -> ExperimentConfig {
        ExperimentConfig {
            dataset: dataset.into(),
            class_index: None,
            classifier,
            missing: MissingMethod::Default,
            folds: default_folds(),
            seeds: default_seeds(),
            output: None,
            per_fold_preprocessing: true,
            roc_class: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!(
                "fold count {} must be at least 2",
                self.folds
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list must not be empty".into()));
        }
        self.classifier.validate()
    }
}

/// Hyper-parameter grid; either part may be omitted, but not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SweepGrid {
    #[serde(default)]
    pub knn: Option<KnnGrid>,
    #[serde(default)]
    pub mlp: Option<MlpGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnGrid {
    pub k: Vec<usize>,
    pub weighting: Vec<crate::knn::VoteWeighting>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpGrid {
    pub alpha: Vec<f64>,
    pub momentum: Vec<f64>,
    pub hidden: Vec<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_epochs() -> usize {
    500
}

impl SweepGrid {
    pub fn from_toml(text: &str) -> Result<SweepGrid> {
        let grid: SweepGrid =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("grid file: {e}")))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.knn.is_none() && self.mlp.is_none() {
            return Err(Error::InvalidConfig(
                "grid needs a [knn] or [mlp] section".into(),
            ));
        }
        if let Some(knn) = &self.knn {
            if knn.k.is_empty() || knn.weighting.is_empty() {
                return Err(Error::InvalidConfig(
                    "knn grid lists must not be empty".into(),
                ));
            }
            for &k in &knn.k {
                if k == 0 || k % 2 == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "knn grid contains k = {k}; every k must be an odd number >= 1"
                    )));
                }
            }
        }
        if let Some(mlp) = &self.mlp {
            if mlp.alpha.is_empty() || mlp.momentum.is_empty() || mlp.hidden.is_empty() {
                return Err(Error::InvalidConfig(
                    "mlp grid lists must not be empty".into(),
                ));
            }
        }
        for spec in self.cells() {
            spec.validate()?;
        }
        Ok(())
    }

    /// Grid cells in deterministic order: all knn combinations first
    /// (k-major), then all network combinations (alpha-major).
    pub fn cells(&self) -> Vec<ClassifierSpec> {
        let mut out = Vec::new();
        if let Some(knn) = &self.knn {
            for &k in &knn.k {
                for &weighting in &knn.weighting {
                    out.push(ClassifierSpec::Knn(KnnConfig { k, weighting }));
                }
            }
        }
        if let Some(mlp) = &self.mlp {
            for &alpha in &mlp.alpha {
                for &momentum in &mlp.momentum {
                    for &hidden in &mlp.hidden {
                        out.push(ClassifierSpec::Mlp(MlpConfig {
                            hidden,
                            learning_rate: alpha,
                            momentum,
                            epochs: mlp.epochs,
                            seed: 0,
                        }));
                    }
                }
            }
        }
        out
    }
}

/// One line of a comparison table. Per-seed rows carry `seed`; aggregate
/// rows carry the mean over seeds plus the sample standard deviation in the
/// `*_sd` fields. `report_ids` index into [`ComparisonTable::reports`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub classifier: String,
    pub missing_method: String,
    pub seed: Option<u64>,
    pub accuracy: f64,
    pub accuracy_sd: Option<f64>,
    pub rmse: f64,
    pub rmse_sd: Option<f64>,
    pub kappa: f64,
    pub kappa_sd: Option<f64>,
    pub wall_time_secs: f64,
    /// Set on the aggregate row of the winning sweep cell.
    pub best: bool,
    pub report_ids: Vec<usize>,
}

/// Rows plus every evaluation report they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub reports: Vec<EvaluationReport>,
}

/// Quote a CSV field when it contains a delimiter, quote, or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonTable {
    pub const CSV_HEADER: &'static str = "dataset,classifier,missing_method,seed,accuracy,\
         accuracy_sd,rmse,rmse_sd,kappa,kappa_sd,wall_time_secs,best";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&r.dataset),
                csv_field(&r.classifier),
                csv_field(&r.missing_method),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.accuracy,
                fmt_opt_f64(r.accuracy_sd),
                r.rmse,
                fmt_opt_f64(r.rmse_sd),
                r.kappa,
                fmt_opt_f64(r.kappa_sd),
                r.wall_time_secs,
                if r.best { "best" } else { "" },
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ComparisonTable> {
        Ok(serde_json::from_str(text)?)
    }

    /// Copy with every wall time set to zero, for byte-stable output.
    pub fn zeroed_wall_times(&self) -> ComparisonTable {
        let mut t = self.clone();
        for row in &mut t.rows {
            row.wall_time_secs = 0.0;
        }
        for report in &mut t.reports {
            report.wall_time_secs = 0.0;
        }
        t
    }

    fn push_cell(&mut self, cell: CellOutcome) {
        self.rows.extend(cell.rows);
    }
}

/// Report CSV: one row per fold plus an `all` aggregate row.
pub fn report_to_csv(r: &EvaluationReport) -> String {
    let mut out =
        String::from("dataset,classifier,missing_method,seed,fold,test_size,accuracy,rmse,kappa,wall_time_secs\n");
    let prefix = format!(
        "{},{},{},{}",
        csv_field(&r.dataset),
        csv_field(&r.classifier),
        csv_field(&r.missing_method),
        r.seed
    );
    for fm in &r.fold_metrics {
        out.push_str(&format!(
            "{prefix},{},{},{},{},{},\n",
            fm.fold, fm.test_size, fm.accuracy, fm.rmse, fm.kappa
        ));
    }
    out.push_str(&format!(
        "{prefix},all,{},{},{},{},{}\n",
        r.confusion.total(),
        r.accuracy,
        r.rmse,
        r.kappa,
        r.wall_time_secs
    ));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> ReportFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// Write a comparison table to disk. Output bytes depend only on the table
/// contents, so identical runs produce identical files.
pub fn emit_report(t: &ComparisonTable, format: ReportFormat, path: &Path) -> Result<()> {
    if t.rows.is_empty() {
        return Err(Error::EmptyInput(
            "refusing to write an empty comparison table".into(),
        ));
    }
    let body = match format {
        ReportFormat::Csv => t.to_csv(),
        ReportFormat::Json => t.to_json()?,
    };
    std::fs::write(path, body)
        .map_err(|e| Error::io(format!("writing report to {}", path.display()), e))
}

/// Write ROC points as a two-column CSV for external plotting.
pub fn emit_roc(points: &[RocPoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no roc points to write".into()));
    }
    let mut body = String::from("fp_rate,tp_rate\n");
    for p in points {
        body.push_str(&format!("{},{}\n", p.fp_rate, p.tp_rate));
    }
    std::fs::write(path, body)
        .map_err(|e| Error::io(format!("writing roc points to {}", path.display()), e))
}

/// Per-instance outcome of one evaluated fold.
struct FoldEval {
    actual: Vec<usize>,
    predicted: Vec<usize>,
    probabilities: Vec<Vec<f64>>,
}

/// Normalize (statistics from `train`), and for the network path also fill
/// missing values with training means/modes and expand nominal attributes to
/// indicators. k-NN keeps missing cells and relies on max-distance
/// semantics.
fn prepare_pair(
    train: &Dataset,
    test: &Dataset,
    spec: &ClassifierSpec,
) -> Result<(Dataset, Dataset)> {
    let stats = MinMaxStats::fit(train);
    let train_n = stats.apply(train);
    let test_n = stats.apply(test);
    match spec {
        ClassifierSpec::Knn(_) | ClassifierSpec::Majority => Ok((train_n, test_n)),
        ClassifierSpec::Mlp(_) => {
            let fill = MeanModeStats::fit(&train_n)?;
            let train_f = fill.apply(&train_n);
            let test_f = fill.apply(&test_n);
            Ok((nominal_to_binary(&train_f), nominal_to_binary(&test_f)))
        }
    }
}

fn evaluate_fold(
    train: &Dataset,
    test: &Dataset,
    spec: &ClassifierSpec,
    fold_seed: u64,
) -> Result<FoldEval> {
    let mut actual = Vec::with_capacity(test.n_instances());
    let mut predicted = Vec::with_capacity(test.n_instances());
    let mut probabilities = Vec::with_capacity(test.n_instances());
    for row in 0..test.n_instances() {
        actual.push(test.class_of(row).ok_or(Error::MissingClass { row })?);
    }
    match spec {
        ClassifierSpec::Knn(cfg) => {
            let classifier = KnnClassifier::new(train.clone(), *cfg)?;
            for row in 0..test.n_instances() {
                let dist = classifier.classify(test.instance(row))?;
                predicted.push(dist.predicted());
                probabilities.push(dist.into_probabilities());
            }
        }
        ClassifierSpec::Mlp(cfg) => {
            let cfg = MlpConfig {
                seed: fold_seed,
                ..*cfg
            };
            let net = mlp::train(train, &cfg)?;
            for row in 0..test.n_instances() {
                let x = mlp::instance_features(test, row)?;
                let dist = net.distribution(&x)?;
                predicted.push(dist.predicted());
                probabilities.push(dist.into_probabilities());
            }
        }
        ClassifierSpec::Majority => {
            let mut counts = vec![0usize; train.n_classes()];
            for row in 0..train.n_instances() {
                counts[train.class_of(row).ok_or(Error::MissingClass { row })?] += 1;
            }
            let total = train.n_instances() as f64;
            let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
            let mut best = 0;
            for (c, &n) in counts.iter().enumerate() {
                if n > counts[best] {
                    best = c;
                }
            }
            for _ in 0..test.n_instances() {
                predicted.push(best);
                probabilities.push(priors.clone());
            }
        }
    }
    Ok(FoldEval {
        actual,
        predicted,
        probabilities,
    })
}

/// Stratified k-fold cross-validation of one classifier under the default
/// missing-value path. Instances without a class label are dropped first.
/// Preprocessing statistics are fitted on each training partition (or once
/// globally, per `opts`), folds run in parallel, and the per-fold confusion
/// matrices and probabilities are pooled into a single report. The
/// classifier's own `seed` field is ignored here; each fold trains with a
/// sub-seed derived from `seed` and the fold index.
pub fn cross_validate(
    d: &Dataset,
    spec: &ClassifierSpec,
    folds: usize,
    seed: u64,
    opts: &CvOptions,
) -> Result<EvaluationReport> {
    let started = Instant::now();
    spec.validate()?;
    let d = drop_missing_class(d)?;
    let split = stratified_folds(&d, folds, seed)?;

    if let ClassifierSpec::Knn(cfg) = spec {
        let largest_test = (0..folds)
            .map(|f| split.test_indices(f).len())
            .max()
            .unwrap_or(0);
        let smallest_train = d.n_instances() - largest_test;
        if cfg.k > smallest_train {
            return Err(Error::InvalidConfig(format!(
                "k = {} but the smallest training partition holds only {smallest_train} \
                 instances; choose a smaller k or fewer folds",
                cfg.k
            )));
        }
    }

    let base = if opts.per_fold_preprocessing {
        d.clone()
    } else {
        prepare_pair(&d, &d, spec)?.0
    };

    let fold_evals: Vec<FoldEval> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<FoldEval> {
            let train_idx = split.train_indices(f);
            let train = base.subset(&train_idx);
            let test = base.subset(split.test_indices(f));
            let (train, test) = if opts.per_fold_preprocessing {
                prepare_pair(&train, &test, spec)?
            } else {
                (train, test)
            };
            evaluate_fold(&train, &test, spec, mix_seed(seed, f as u64))
        })
        .collect::<Result<_>>()?;

    let labels = d.class_labels().to_vec();
    let mut confusion = ConfusionMatrix::new(labels.clone())?;
    let mut pooled_probs = Vec::with_capacity(d.n_instances());
    let mut pooled_actual = Vec::with_capacity(d.n_instances());
    let mut fold_metrics = Vec::with_capacity(folds);
    for (f, eval) in fold_evals.iter().enumerate() {
        let mut fold_cm = ConfusionMatrix::new(labels.clone())?;
        for (&a, &p) in eval.actual.iter().zip(&eval.predicted) {
            confusion.record(a, p)?;
            fold_cm.record(a, p)?;
        }
        fold_metrics.push(FoldMetrics {
            fold: f,
            test_size: eval.actual.len(),
            accuracy: fold_cm.accuracy()?,
            rmse: rmse(&eval.probabilities, &eval.actual)?,
            kappa: fold_cm.kappa()?,
        });
        pooled_probs.extend(eval.probabilities.iter().cloned());
        pooled_actual.extend(eval.actual.iter().copied());
    }

    let roc = match opts.roc_class {
        Some(positive) => {
            if positive >= d.n_classes() {
                return Err(Error::InvalidConfig(format!(
                    "roc class index {positive} out of range for {} classes",
                    d.n_classes()
                )));
            }
            let scores: Vec<f64> = pooled_probs.iter().map(|p| p[positive]).collect();
            let truth: Vec<bool> = pooled_actual.iter().map(|&a| a == positive).collect();
            Some(roc_points(&scores, &truth)?)
        }
        None => None,
    };

    Ok(EvaluationReport {
        dataset: opts.dataset_name.clone(),
        classifier: spec.label(),
        missing_method: MissingMethod::Default.label().to_string(),
        folds,
        seed,
        accuracy: confusion.accuracy()?,
        rmse: rmse(&pooled_probs, &pooled_actual)?,
        kappa: confusion.kappa()?,
        per_class: EvaluationReport::rates_from(&confusion),
        confusion,
        roc,
        fold_metrics,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Completed dataset(s) for a missing-value method: the input itself for the
/// default path, one mean/mode-filled copy, or `m` imputed versions.
pub fn materialize_datasets(d: &Dataset, method: &MissingMethod) -> Result<Vec<Dataset>> {
    match method {
        MissingMethod::Default => Ok(vec![d.clone()]),
        MissingMethod::MeanMode => Ok(vec![mean_mode_impute(d)?]),
        MissingMethod::MultipleImputation(cfg) => multiple_impute(d, cfg),
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// All rows of one (classifier, missing-method) cell: per-seed rows followed
/// by the seed-aggregated row.
struct CellOutcome {
    rows: Vec<ComparisonRow>,
    mean_accuracy: f64,
    mean_rmse: f64,
}

/// Evaluate one classifier under one method over all seeds; reports from
/// every completed dataset are appended to `reports`, and under multiple
/// imputation each per-seed row averages the metrics over the `m` datasets.
fn evaluate_cell(
    datasets: &[Dataset],
    spec: &ClassifierSpec,
    method_label: &str,
    folds: usize,
    seeds: &[u64],
    opts: &CvOptions,
    reports: &mut Vec<EvaluationReport>,
) -> Result<CellOutcome> {
    let mut rows = Vec::with_capacity(seeds.len() + 1);
    let mut accs = Vec::with_capacity(seeds.len());
    let mut rmses = Vec::with_capacity(seeds.len());
    let mut kappas = Vec::with_capacity(seeds.len());
    let mut walls = Vec::with_capacity(seeds.len());
    let mut all_ids = Vec::new();
    for &seed in seeds {
        let mut ids = Vec::with_capacity(datasets.len());
        let mut seed_reports = Vec::with_capacity(datasets.len());
        for dd in datasets {
            let mut r = cross_validate(dd, spec, folds, seed, opts)?;
            r.missing_method = method_label.to_string();
            ids.push(reports.len() + seed_reports.len());
            seed_reports.push(r);
        }
        let m = seed_reports.len() as f64;
        let acc = seed_reports.iter().map(|r| r.accuracy).sum::<f64>() / m;
        let rm = seed_reports.iter().map(|r| r.rmse).sum::<f64>() / m;
        let ka = seed_reports.iter().map(|r| r.kappa).sum::<f64>() / m;
        let wall = seed_reports.iter().map(|r| r.wall_time_secs).sum::<f64>() / m;
        reports.append(&mut seed_reports);
        rows.push(ComparisonRow {
            dataset: opts.dataset_name.clone(),
            classifier: spec.label(),
            missing_method: method_label.to_string(),
            seed: Some(seed),
            accuracy: acc,
            accuracy_sd: None,
            rmse: rm,
            rmse_sd: None,
            kappa: ka,
            kappa_sd: None,
            wall_time_secs: wall,
            best: false,
            report_ids: ids.clone(),
        });
        accs.push(acc);
        rmses.push(rm);
        kappas.push(ka);
        walls.push(wall);
        all_ids.extend(ids);
    }
    let (acc_mean, acc_sd) = mean_sd(&accs);
    let (rmse_mean, rmse_sd) = mean_sd(&rmses);
    let (kappa_mean, kappa_sd) = mean_sd(&kappas);
    let (wall_mean, _) = mean_sd(&walls);
    rows.push(ComparisonRow {
        dataset: opts.dataset_name.clone(),
        classifier: spec.label(),
        missing_method: method_label.to_string(),
        seed: None,
        accuracy: acc_mean,
        accuracy_sd: Some(acc_sd),
        rmse: rmse_mean,
        rmse_sd: Some(rmse_sd),
        kappa: kappa_mean,
        kappa_sd: Some(kappa_sd),
        wall_time_secs: wall_mean,
        best: false,
        report_ids: all_ids,
    });
    Ok(CellOutcome {
        rows,
        mean_accuracy: acc_mean,
        mean_rmse: rmse_mean,
    })
}

/// Cross-validate every grid cell over every seed. The resulting table is
/// ordered by mean accuracy (descending), mean RMSE breaking ties
/// (ascending), and the winning cell's aggregate row carries the `best`
/// flag. A one-cell grid reproduces `cross_validate` exactly.
pub fn sweep(
    d: &Dataset,
    grid: &SweepGrid,
    folds: usize,
    seeds: &[u64],
    opts: &CvOptions,
) -> Result<ComparisonTable> {
    grid.validate()?;
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seed list must not be empty".into()));
    }
    let mut table = ComparisonTable::default();
    let mut cells = Vec::new();
    for spec in grid.cells() {
        let datasets = std::slice::from_ref(d);
        let cell = evaluate_cell(
            datasets,
            &spec,
            MissingMethod::Default.label(),
            folds,
            seeds,
            opts,
            &mut table.reports,
        )?;
        cells.push(cell);
    }
    cells.sort_by(|a, b| {
        b.mean_accuracy
            .total_cmp(&a.mean_accuracy)
            .then(a.mean_rmse.total_cmp(&b.mean_rmse))
    });
    if let Some(winner) = cells.first_mut() {
        if let Some(agg) = winner.rows.last_mut() {
            agg.best = true;
        }
    }
    for cell in cells {
        table.push_cell(cell);
    }
    Ok(table)
}

/// Evaluate every classifier under every missing-value method. Completed
/// datasets are materialized once per method; under multiple imputation the
/// per-seed metrics average over the `m` completed datasets. Rows keep the
/// given method-major order.
pub fn compare_missing(
    d: &Dataset,
    specs: &[ClassifierSpec],
    methods: &[MissingMethod],
    folds: usize,
    seeds: &[u64],
    opts: &CvOptions,
) -> Result<ComparisonTable> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig(
            "classifier list must not be empty".into(),
        ));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig(
            "missing-method list must not be empty".into(),
        ));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seed list must not be empty".into()));
    }
    let mut table = ComparisonTable::default();
    for method in methods {
        let datasets = materialize_datasets(d, method)?;
        for spec in specs {
            let cell = evaluate_cell(
                &datasets,
                spec,
                method.label(),
                folds,
                seeds,
                opts,
                &mut table.reports,
            )?;
            table.push_cell(cell);
        }
    }
    Ok(table)
}

/// Dataset display name: the file stem of its path.
pub fn dataset_display_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string()
}

/// Run one configured experiment end to end: load, evaluate over all seeds,
/// and write the table (plus ROC side files when requested) to the
/// configured output path.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonTable> {
    cfg.validate()?;
    let d = load_dataset_path(&cfg.dataset, cfg.class_index)?;
    let roc_class = match &cfg.roc_class {
        Some(label) => Some(resolve_class_label(&d, label)?),
        None => None,
    };
    let opts = CvOptions {
        dataset_name: dataset_display_name(&cfg.dataset),
        per_fold_preprocessing: cfg.per_fold_preprocessing,
        roc_class,
    };
    let datasets = materialize_datasets(&d, &cfg.missing)?;
    let mut table = ComparisonTable::default();
    let cell = evaluate_cell(
        &datasets,
        &cfg.classifier,
        cfg.missing.label(),
        cfg.folds,
        &cfg.seeds,
        &opts,
        &mut table.reports,
    )?;
    table.push_cell(cell);

    if let Some(path) = &cfg.output {
        let emitted = if cfg.timing {
            table.clone()
        } else {
            table.zeroed_wall_times()
        };
        emit_report(&emitted, ReportFormat::from_path(path), path)?;
        if roc_class.is_some() {
            emit_roc_side_files(&table, path)?;
        }
    }
    Ok(table)
}

/// Resolve a class label to its index, with the valid labels in the error.
pub fn resolve_class_label(d: &Dataset, label: &str) -> Result<usize> {
    d.class_labels()
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown class label '{label}'; expected one of: {}",
                d.class_labels().join(", ")
            ))
        })
}

/// Write one ROC CSV per report that carries points, next to `output`.
fn emit_roc_side_files(table: &ComparisonTable, output: &Path) -> Result<()> {
    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report")
        .to_string();
    for row in &table.rows {
        let Some(seed) = row.seed else { continue };
        let multiple = row.report_ids.len() > 1;
        for (j, &id) in row.report_ids.iter().enumerate() {
            let Some(points) = &table.reports[id].roc else {
                continue;
            };
            let name = if multiple {
                format!("{stem}-seed{seed}-m{j}-roc.csv")
            } else {
                format!("{stem}-seed{seed}-roc.csv")
            };
            let path = output.with_file_name(name);
            emit_roc(points, &path)?;
        }
    }
    Ok(())
}
