//! Command-line front end: dataset inspection, imputation, cross-validated
//! evaluation, hyper-parameter sweeps, missing-value method comparison, and
//! ROC export.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use classlab::data::Cell;
use classlab::harness::{dataset_display_name, default_seeds, resolve_class_label};
use classlab::{
    compare_missing, cross_validate, em_mle, emit_report, emit_roc, load_dataset_path,
    mean_mode_impute, missingness_summary, multiple_impute, report_to_csv, run_experiment,
    save_dataset_path, sweep, ClassifierSpec, ComparisonTable, CvOptions, Dataset, Error,
    ExperimentConfig, ImputationConfig, KnnConfig, MissingMethod, MlpConfig, ReportFormat, Result,
    SweepGrid, VoteWeighting,
};

#[derive(Parser)]
#[command(
    name = "classlab",
    version,
    about = "Classification benchmarks: nearest-neighbour and backpropagation \
             classifiers with cross-validation and missing-value handling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset utilities.
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
    /// Fill missing values and write completed dataset(s).
    Impute(ImputeArgs),
    /// Cross-validate one classifier on one dataset.
    Eval(EvalArgs),
    /// Cross-validate every cell of a hyper-parameter grid.
    Sweep(SweepArgs),
    /// Compare missing-value methods across classifiers.
    CompareMissing(CompareMissingArgs),
    /// Write pooled cross-validation ROC points for one positive class.
    Roc(RocArgs),
}

#[derive(Args)]
struct DatasetArg {
    /// Dataset file (.arff or .csv; '?' marks missing values).
    path: PathBuf,
    /// Class attribute position (0-based); defaults to the last attribute.
    #[arg(long)]
    class_index: Option<usize>,
}

impl DatasetArg {
    fn load(&self) -> Result<Dataset> {
        load_dataset_path(&self.path, self.class_index)
    }
}

#[derive(Subcommand)]
enum DataCommand {
    /// Print schema, class distribution, and missingness.
    Info(DatasetArg),
}

#[derive(Args)]
struct ImputeArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// Imputation method.
    #[arg(long, value_parser = ["mean-mode", "mi"])]
    method: String,
    /// Output file; with `--method mi` and m > 1 the copies are written to
    /// `<stem>-1.<ext>` through `<stem>-m.<ext>`.
    #[arg(long)]
    out: PathBuf,
    /// Completed datasets to draw (mi only).
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Random seed for the imputation draws (mi only).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data-augmentation sweeps discarded before the first draw (mi only).
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    /// Sweeps between consecutive draws (mi only).
    #[arg(long, default_value_t = 100)]
    thin: usize,
    /// EM convergence tolerance (mi only).
    #[arg(long, default_value_t = 1e-6)]
    em_tol: f64,
    /// EM iteration cap (mi only).
    #[arg(long, default_value_t = 500)]
    em_max_iter: usize,
    /// Also impute missing class values instead of leaving them missing.
    #[arg(long)]
    impute_class: bool,
}

#[derive(Args, Clone)]
struct ClassifierArgs {
    /// Classifier to evaluate.
    #[arg(long, value_parser = ["knn", "mlp", "majority"])]
    classifier: String,
    /// Neighbour count (knn); must be odd.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Vote weighting (knn): uniform, inverse, or complement.
    #[arg(long, default_value = "uniform")]
    weighting: VoteWeighting,
    /// Learning rate (mlp).
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// Momentum (mlp).
    #[arg(long, default_value_t = 0.2)]
    momentum: f64,
    /// Hidden units (mlp); 0 trains a single sigmoid layer.
    #[arg(long, default_value_t = 2)]
    hidden: usize,
    /// Training epochs (mlp).
    #[arg(long, default_value_t = 500)]
    epochs: usize,
}

impl ClassifierArgs {
    fn spec(&self) -> Result<ClassifierSpec> {
        match self.classifier.as_str() {
            "knn" => Ok(ClassifierSpec::Knn(KnnConfig {
                k: self.k,
                weighting: self.weighting,
            })),
            "mlp" => Ok(ClassifierSpec::Mlp(MlpConfig {
                hidden: self.hidden,
                learning_rate: self.alpha,
                momentum: self.momentum,
                epochs: self.epochs,
                seed: 0,
            })),
            "majority" => Ok(ClassifierSpec::Majority),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier '{other}'"
            ))),
        }
    }
}

#[derive(Args, Clone)]
struct MiArgs {
    /// Completed datasets per imputation (mi only).
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Imputation random seed, independent of --seeds (mi only).
    #[arg(long, default_value_t = 0)]
    mi_seed: u64,
    /// Data-augmentation burn-in sweeps (mi only).
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    /// Sweeps between draws (mi only).
    #[arg(long, default_value_t = 100)]
    thin: usize,
}

impl MiArgs {
    fn config(&self) -> ImputationConfig {
        ImputationConfig {
            m: self.m,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.mi_seed,
            ..ImputationConfig::default()
        }
    }

    fn method(&self, name: &str) -> Result<MissingMethod> {
        match name {
            "default" => Ok(MissingMethod::Default),
            "mean-mode" => Ok(MissingMethod::MeanMode),
            "mi" => Ok(MissingMethod::MultipleImputation(self.config())),
            other => Err(Error::InvalidConfig(format!(
                "unknown missing-value method '{other}'; expected default, mean-mode, or mi"
            ))),
        }
    }
}

#[derive(Args, Clone)]
struct ProtocolArgs {
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Master seeds, one evaluation per seed.
    #[arg(long, value_delimiter = ',', default_values_t = default_seeds())]
    seeds: Vec<u64>,
    /// Fit normalization/fill statistics once on the full dataset instead of
    /// per training fold.
    #[arg(long)]
    global_normalization: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Missing-value handling: default, mean-mode, or mi.
    #[arg(long, default_value = "default")]
    missing: String,
    #[command(flatten)]
    mi: MiArgs,
    /// Report file (.json for JSON, anything else CSV); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Class label treated as positive for ROC output files.
    #[arg(long)]
    roc_class: Option<String>,
    /// Keep measured wall times in the output instead of zeroing them.
    #[arg(long)]
    timing: bool,
    /// Also write per-fold metrics of every evaluation to this CSV file.
    #[arg(long)]
    fold_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// TOML grid file with [knn] (k, weighting) and/or [mlp] (alpha,
    /// momentum, hidden, epochs) lists.
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Report file (.json for JSON, anything else CSV); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep measured wall times in the output instead of zeroing them.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct CompareMissingArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// knn cell as `k,weighting` (e.g. `5,uniform`); repeatable.
    #[arg(long = "knn", value_name = "K,WEIGHTING")]
    knn: Vec<String>,
    /// mlp cell as `alpha,momentum,hidden[,epochs]`; repeatable.
    #[arg(long = "mlp", value_name = "ALPHA,MOMENTUM,HIDDEN[,EPOCHS]")]
    mlp: Vec<String>,
    /// Include the majority baseline.
    #[arg(long)]
    majority: bool,
    /// Methods to compare, from: default, mean-mode, mi.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["mean-mode".to_string(), "mi".to_string()])]
    methods: Vec<String>,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    mi: MiArgs,
    /// Report file (.json for JSON, anything else CSV); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep measured wall times in the output instead of zeroing them.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RocArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// Class label treated as positive.
    #[arg(long)]
    positive: String,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Two-column CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Restore default SIGPIPE handling so `classlab ... | head` dies quietly
/// like other Unix tools instead of panicking on a closed stdout.
fn reset_sigpipe() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Data {
            command: DataCommand::Info(args),
        } => data_info(&args),
        Command::Impute(args) => impute(&args),
        Command::Eval(args) => eval(&args),
        Command::Sweep(args) => run_sweep(&args),
        Command::CompareMissing(args) => run_compare(&args),
        Command::Roc(args) => run_roc(&args),
    }
}

fn data_info(args: &DatasetArg) -> Result<()> {
    let d = args.load()?;
    let summary = missingness_summary(&d);
    println!("dataset: {}", args.path.display());
    println!("instances: {}", d.n_instances());
    println!(
        "attributes: {} (class: {})",
        d.n_attributes(),
        d.class_attribute().name
    );
    println!();
    println!("attributes:");
    for (attr, miss) in d.schema().iter().zip(&summary.per_attribute) {
        let kind = match attr.categories() {
            Some(cats) => format!("nominal ({} values)", cats.len()),
            None => "numeric".to_string(),
        };
        let role = if attr.index == d.class_index() {
            " [class]"
        } else {
            ""
        };
        println!(
            "  {:2}  {:<24} {:<20} missing {} ({:.1}%){role}",
            attr.index,
            attr.name,
            kind,
            miss.missing,
            miss.fraction * 100.0
        );
    }
    println!();
    println!("class distribution:");
    let mut counts = vec![0usize; d.n_classes()];
    let mut unlabeled = 0usize;
    for row in 0..d.n_instances() {
        match d.class_of(row) {
            Some(c) => counts[c] += 1,
            None => unlabeled += 1,
        }
    }
    for (label, count) in d.class_labels().iter().zip(&counts) {
        println!("  {label:<24} {count}");
    }
    if unlabeled > 0 {
        println!("  (missing class)          {unlabeled}");
    }
    println!();
    println!(
        "missing cells: {} of {} ({:.1}%), rows affected: {} of {}",
        summary.missing_cells,
        summary.total_cells,
        100.0 * summary.missing_cells as f64 / summary.total_cells.max(1) as f64,
        summary.rows_with_missing,
        d.n_instances()
    );
    Ok(())
}

/// Sidecar metadata written next to imputation output.
#[derive(Serialize)]
struct ImputeSidecar {
    method: String,
    config: Option<ImputationConfig>,
    em: Option<EmSidecar>,
    missingness: classlab::MissingnessSummary,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct EmSidecar {
    iterations: usize,
    final_loglik: f64,
    mean: Vec<f64>,
}

/// Numbered sibling of `path`: `stem-i.ext`.
fn numbered_path(path: &Path, i: usize) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("imputed");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{i}.{ext}"),
        None => format!("{stem}-{i}"),
    };
    path.with_file_name(name)
}

/// Rows as option-coded reals (nominal cells by category index), excluding
/// the class column unless `include_class`: the shape `em_mle` consumes.
fn option_rows(d: &Dataset, include_class: bool) -> Vec<Vec<Option<f64>>> {
    (0..d.n_instances())
        .map(|r| {
            d.schema()
                .iter()
                .filter(|attr| include_class || attr.index != d.class_index())
                .map(|attr| match d.cell(r, attr.index) {
                    Cell::Numeric(v) => Some(v),
                    Cell::Nominal(c) => Some(c as f64),
                    Cell::Missing => None,
                })
                .collect()
        })
        .collect()
}

fn impute(args: &ImputeArgs) -> Result<()> {
    let d = args.dataset.load()?;
    let missingness = missingness_summary(&d);
    let mut outputs = Vec::new();
    let mut config = None;
    let mut em = None;

    match args.method.as_str() {
        "mean-mode" => {
            let completed = mean_mode_impute(&d)?;
            save_dataset_path(&completed, &args.out)?;
            outputs.push(args.out.display().to_string());
        }
        "mi" => {
            let cfg = ImputationConfig {
                m: args.m,
                burn_in: args.burn_in,
                thin: args.thin,
                em_tol: args.em_tol,
                em_max_iter: args.em_max_iter,
                seed: args.seed,
                impute_class: args.impute_class,
            };
            let fit = em_mle(
                &option_rows(&d, args.impute_class),
                cfg.em_tol,
                cfg.em_max_iter,
            )?;
            em = Some(EmSidecar {
                iterations: fit.iterations,
                final_loglik: *fit.loglik.last().unwrap_or(&f64::NAN),
                mean: fit.state.mean.clone(),
            });
            let completed = multiple_impute(&d, &cfg)?;
            if completed.len() == 1 {
                save_dataset_path(&completed[0], &args.out)?;
                outputs.push(args.out.display().to_string());
            } else {
                for (i, ds) in completed.iter().enumerate() {
                    let path = numbered_path(&args.out, i + 1);
                    save_dataset_path(ds, &path)?;
                    outputs.push(path.display().to_string());
                }
            }
            config = Some(cfg);
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown imputation method '{other}'"
            )))
        }
    }

    let sidecar = ImputeSidecar {
        method: args.method.clone(),
        config,
        em,
        missingness,
        outputs: outputs.clone(),
    };
    let sidecar_path = args.out.with_extension("json");
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)
        .map_err(|e| Error::io(format!("writing {}", sidecar_path.display()), e))?;

    for path in &outputs {
        println!("wrote {path}");
    }
    println!("wrote {}", sidecar_path.display());
    Ok(())
}

fn print_or_write(table: &ComparisonTable, out: Option<&Path>, timing: bool) -> Result<()> {
    let emitted = if timing {
        table.clone()
    } else {
        table.zeroed_wall_times()
    };
    match out {
        Some(path) => {
            emit_report(&emitted, ReportFormat::from_path(path), path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{}", emitted.to_csv());
            Ok(())
        }
    }
}

fn eval(args: &EvalArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        dataset: args.dataset.path.clone(),
        class_index: args.dataset.class_index,
        classifier: args.classifier.spec()?,
        missing: args.mi.method(&args.missing)?,
        folds: args.protocol.folds,
        seeds: args.protocol.seeds.clone(),
        output: args.out.clone(),
        per_fold_preprocessing: !args.protocol.global_normalization,
        roc_class: args.roc_class.clone(),
        timing: args.timing,
    };
    let table = run_experiment(&cfg)?;
    match &args.out {
        Some(path) => println!("wrote {}", path.display()),
        None => {
            let emitted = if args.timing {
                table.clone()
            } else {
                table.zeroed_wall_times()
            };
            print!("{}", emitted.to_csv());
        }
    }
    if let Some(path) = &args.fold_csv {
        let mut body = String::new();
        for (i, report) in table.reports.iter().enumerate() {
            let csv = report_to_csv(report);
            if i == 0 {
                body.push_str(&csv);
            } else {
                // skip the repeated header
                body.extend(csv.split_once('\n').map(|(_, rest)| rest.to_string()));
            }
        }
        std::fs::write(path, body)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let d = args.dataset.load()?;
    let text = std::fs::read_to_string(&args.grid)
        .map_err(|e| Error::io(format!("reading {}", args.grid.display()), e))?;
    let grid = SweepGrid::from_toml(&text)?;
    let opts = CvOptions {
        dataset_name: dataset_display_name(&args.dataset.path),
        per_fold_preprocessing: !args.protocol.global_normalization,
        roc_class: None,
    };
    let table = sweep(&d, &grid, args.protocol.folds, &args.protocol.seeds, &opts)?;
    print_or_write(&table, args.out.as_deref(), args.timing)
}

fn parse_knn_cell(text: &str) -> Result<ClassifierSpec> {
    let bad = || {
        Error::InvalidConfig(format!(
            "knn cell '{text}' must be 'k,weighting' (e.g. '5,uniform')"
        ))
    };
    let mut parts = text.split(',');
    let k = parts
        .next()
        .and_then(|t| t.trim().parse::<usize>().ok())
        .ok_or_else(bad)?;
    let weighting: VoteWeighting = parts.next().ok_or_else(bad)?.trim().parse()?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(ClassifierSpec::Knn(KnnConfig { k, weighting }))
}

fn parse_mlp_cell(text: &str) -> Result<ClassifierSpec> {
    let bad = || {
        Error::InvalidConfig(format!(
            "mlp cell '{text}' must be 'alpha,momentum,hidden[,epochs]' (e.g. '0.3,0.2,4')"
        ))
    };
    let parts: Vec<&str> = text.split(',').map(|t| t.trim()).collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad());
    }
    let learning_rate: f64 = parts[0].parse().map_err(|_| bad())?;
    let momentum: f64 = parts[1].parse().map_err(|_| bad())?;
    let hidden: usize = parts[2].parse().map_err(|_| bad())?;
    let epochs: usize = match parts.get(3) {
        Some(t) => t.parse().map_err(|_| bad())?,
        None => 500,
    };
    Ok(ClassifierSpec::Mlp(MlpConfig {
        hidden,
        learning_rate,
        momentum,
        epochs,
        seed: 0,
    }))
}

fn run_compare(args: &CompareMissingArgs) -> Result<()> {
    let d = args.dataset.load()?;
    let mut specs = Vec::new();
    for cell in &args.knn {
        specs.push(parse_knn_cell(cell)?);
    }
    for cell in &args.mlp {
        specs.push(parse_mlp_cell(cell)?);
    }
    if args.majority {
        specs.push(ClassifierSpec::Majority);
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig(
            "give at least one classifier via --knn, --mlp, or --majority".into(),
        ));
    }
    let methods: Vec<MissingMethod> = args
        .methods
        .iter()
        .map(|name| args.mi.method(name))
        .collect::<Result<_>>()?;
    let opts = CvOptions {
        dataset_name: dataset_display_name(&args.dataset.path),
        per_fold_preprocessing: !args.protocol.global_normalization,
        roc_class: None,
    };
    let table = compare_missing(
        &d,
        &specs,
        &methods,
        args.protocol.folds,
        &args.protocol.seeds,
        &opts,
    )?;
    print_or_write(&table, args.out.as_deref(), args.timing)
}

fn run_roc(args: &RocArgs) -> Result<()> {
    let d = args.dataset.load()?;
    let positive = resolve_class_label(&d, &args.positive)?;
    let opts = CvOptions {
        dataset_name: dataset_display_name(&args.dataset.path),
        per_fold_preprocessing: true,
        roc_class: Some(positive),
    };
    let report = cross_validate(&d, &args.classifier.spec()?, args.folds, args.seed, &opts)?;
    let points = report.roc.expect("roc requested");
    match &args.out {
        Some(path) => {
            emit_roc(&points, path)?;
            println!("wrote {}", path.display());
        }
        None => {
            println!("fp_rate,tp_rate");
            for p in &points {
                println!("{},{}", p.fp_rate, p.tp_rate);
            }
        }
    }
    Ok(())
}
