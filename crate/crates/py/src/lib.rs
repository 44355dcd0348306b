//! Python bindings for the classlab benchmark suite: datasets, the two
//! classifiers, evaluation metrics, missing-value handling, and the
//! cross-validation harness.
//!
//! Reports and summaries cross the boundary as plain Python dicts/lists so
//! they can be fed straight into `json`, `csv`, or a dataframe library.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pythonize::pythonize;

use classlab::harness::resolve_class_label;
use classlab::{
    cross_validate as cv, materialize_datasets, AttributeKind, Cell, ClassifierSpec, CvOptions,
    Dataset, EvaluationReport, ImputationConfig, KnnClassifier, KnnConfig, MissingMethod,
    MlpConfig, Network, VoteWeighting,
};

fn lab_err(e: classlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

// ---------------------------------------------------------------------------
// Dataset

/// Immutable classification dataset with a declared schema and a nominal
/// class attribute. Missing cells are `None` on the Python side.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// Load an `.arff` or `.csv` file ('?' marks missing values). The class
    /// attribute defaults to the last column.
    #[staticmethod]
    #[pyo3(signature = (path, class_index=None))]
    fn load(path: PathBuf, class_index: Option<usize>) -> PyResult<Self> {
        Ok(PyDataset {
            inner: classlab::load_dataset_path(&path, class_index).map_err(lab_err)?,
        })
    }

    /// Write the dataset in the format implied by the file extension.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        classlab::save_dataset_path(&self.inner, &path).map_err(lab_err)
    }

    #[getter]
    fn n_instances(&self) -> usize {
        self.inner.n_instances()
    }

    #[getter]
    fn n_attributes(&self) -> usize {
        self.inner.n_attributes()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn class_index(&self) -> usize {
        self.inner.class_index()
    }

    #[getter]
    fn class_labels(&self) -> Vec<String> {
        self.inner.class_labels().to_vec()
    }

    /// Schema as a list of dicts: name, index, kind, and categories (None
    /// for numeric attributes).
    fn schema<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let value: Vec<serde_json::Value> = self
            .inner
            .schema()
            .iter()
            .map(|attr| {
                serde_json::json!({
                    "name": attr.name,
                    "index": attr.index,
                    "kind": if attr.is_numeric() { "numeric" } else { "nominal" },
                    "categories": attr.categories(),
                })
            })
            .collect();
        Ok(pythonize(py, &value)?)
    }

    /// One instance as a list of cell values: floats for numeric cells,
    /// category labels for nominal cells, None for missing cells.
    fn row<'py>(&self, py: Python<'py>, index: usize) -> PyResult<Vec<Bound<'py, PyAny>>> {
        if index >= self.inner.n_instances() {
            return Err(PyValueError::new_err(format!(
                "row {index} out of range for {} instances",
                self.inner.n_instances()
            )));
        }
        self.inner
            .schema()
            .iter()
            .map(|attr| {
                let cell = self.inner.cell(index, attr.index);
                let value = match cell {
                    Cell::Numeric(v) => v.into_pyobject(py)?.into_any(),
                    Cell::Nominal(c) => {
                        let cats = attr.categories().expect("nominal cell in numeric column");
                        cats[c].clone().into_pyobject(py)?.into_any()
                    }
                    Cell::Missing => py.None().into_bound(py),
                };
                Ok(value)
            })
            .collect()
    }

    /// Class label of one instance, or None when it is missing.
    fn class_of(&self, row: usize) -> PyResult<Option<String>> {
        if row >= self.inner.n_instances() {
            return Err(PyValueError::new_err(format!(
                "row {row} out of range for {} instances",
                self.inner.n_instances()
            )));
        }
        Ok(self
            .inner
            .class_of(row)
            .map(|c| self.inner.class_labels()[c].clone()))
    }

    /// Missing-cell summary: totals plus one entry per attribute.
    fn missingness<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(pythonize(py, &classlab::missingness_summary(&self.inner))?)
    }

    /// Copy without the instances whose class value is missing.
    fn drop_missing_class(&self) -> PyResult<Self> {
        Ok(PyDataset {
            inner: classlab::drop_missing_class(&self.inner).map_err(lab_err)?,
        })
    }

    /// Copy with every numeric attribute min-max scaled to [0, 1] using
    /// statistics fitted on this dataset.
    fn normalized(&self) -> Self {
        PyDataset {
            inner: classlab::normalize(&self.inner),
        }
    }

    /// Copy with non-class nominal attributes replaced by 0/1 indicator
    /// columns (a single column for binary attributes, one-hot otherwise).
    fn nominal_to_binary(&self) -> Self {
        PyDataset {
            inner: classlab::nominal_to_binary(&self.inner),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.n_instances()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} instances, {} attributes, class '{}')",
            self.inner.n_instances(),
            self.inner.n_attributes(),
            self.inner.class_attribute().name
        )
    }
}

/// Feature list (class attribute excluded) -> full-width cell row with the
/// class slot left missing, converting labels/floats per the schema.
fn instance_cells(d: &Dataset, features: &Bound<'_, PyAny>) -> PyResult<Vec<Cell>> {
    let mut values = Vec::new();
    for item in features.try_iter()? {
        values.push(item?);
    }
    let expected = d.n_attributes() - 1;
    if values.len() != expected {
        return Err(PyValueError::new_err(format!(
            "expected {expected} feature values (class attribute excluded), got {}",
            values.len()
        )));
    }
    let mut cells = Vec::with_capacity(d.n_attributes());
    let mut it = values.into_iter();
    for attr in d.schema() {
        if attr.index == d.class_index() {
            cells.push(Cell::Missing);
            continue;
        }
        let value = it.next().expect("length checked above");
        if value.is_none() {
            cells.push(Cell::Missing);
            continue;
        }
        match &attr.kind {
            AttributeKind::Numeric => {
                cells.push(Cell::Numeric(value.extract::<f64>().map_err(|_| {
                    PyValueError::new_err(format!(
                        "attribute '{}' is numeric; got {value}",
                        attr.name
                    ))
                })?))
            }
            AttributeKind::Nominal(cats) => {
                if let Ok(label) = value.extract::<String>() {
                    let c = cats.iter().position(|c| *c == label).ok_or_else(|| {
                        PyValueError::new_err(format!(
                            "unknown category '{label}' for attribute '{}'; expected one of: {}",
                            attr.name,
                            cats.join(", ")
                        ))
                    })?;
                    cells.push(Cell::Nominal(c));
                } else {
                    let c = value.extract::<usize>().map_err(|_| {
                        PyValueError::new_err(format!(
                            "attribute '{}' is nominal; pass a category label or index",
                            attr.name
                        ))
                    })?;
                    if c >= cats.len() {
                        return Err(PyValueError::new_err(format!(
                            "category index {c} out of range for attribute '{}'",
                            attr.name
                        )));
                    }
                    cells.push(Cell::Nominal(c));
                }
            }
        }
    }
    Ok(cells)
}

// ---------------------------------------------------------------------------
// Classifiers

/// k-nearest-neighbour classifier over a training dataset. Vote weighting is
/// "uniform", "inverse" (1/d), or "complement" (1 - d).
#[pyclass(name = "KnnClassifier", frozen)]
struct PyKnn {
    inner: KnnClassifier,
}

#[pymethods]
impl PyKnn {
    #[new]
    #[pyo3(signature = (train, k=1, weighting="uniform"))]
    fn new(train: &PyDataset, k: usize, weighting: &str) -> PyResult<Self> {
        let weighting: VoteWeighting = weighting.parse().map_err(lab_err)?;
        let inner =
            KnnClassifier::new(train.inner.clone(), KnnConfig { k, weighting }).map_err(lab_err)?;
        Ok(PyKnn { inner })
    }

    /// Per-class vote shares for a feature list (class attribute excluded;
    /// None marks a missing value).
    fn probabilities(&self, features: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
        let cells = instance_cells(self.inner.train_data(), features)?;
        Ok(self
            .inner
            .classify(&cells)
            .map_err(lab_err)?
            .into_probabilities())
    }

    /// Predicted class index for a feature list.
    fn predict(&self, features: &Bound<'_, PyAny>) -> PyResult<usize> {
        let cells = instance_cells(self.inner.train_data(), features)?;
        self.inner.predict(&cells).map_err(lab_err)
    }

    /// Predicted class label for a feature list.
    fn predict_label(&self, features: &Bound<'_, PyAny>) -> PyResult<String> {
        let c = self.predict(features)?;
        Ok(self.inner.train_data().class_labels()[c].clone())
    }
}

/// Backpropagation network: one sigmoid hidden layer (or none), sigmoid
/// outputs, trained per instance with momentum.
#[pyclass(name = "Mlp", frozen)]
struct PyMlp {
    inner: Network,
    labels: Option<Vec<String>>,
}

#[pymethods]
impl PyMlp {
    /// Train on a dataset whose non-class attributes are all numeric and
    /// fully observed (see Dataset.nominal_to_binary and the imputation
    /// helpers).
    #[staticmethod]
    #[pyo3(signature = (train, hidden=2, learning_rate=0.3, momentum=0.2, epochs=500, seed=0))]
    fn train(
        py: Python<'_>,
        train: &PyDataset,
        hidden: usize,
        learning_rate: f64,
        momentum: f64,
        epochs: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let config = MlpConfig {
            hidden,
            learning_rate,
            momentum,
            epochs,
            seed,
        };
        let d = train.inner.clone();
        let labels = d.class_labels().to_vec();
        let inner = py
            .detach(move || classlab::mlp::train(&d, &config))
            .map_err(lab_err)?;
        Ok(PyMlp {
            inner,
            labels: Some(labels),
        })
    }

    /// Raw output activations for a numeric feature vector.
    fn outputs(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&x).map_err(lab_err)
    }

    /// Normalized per-class probabilities for a numeric feature vector.
    fn probabilities(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&x).map_err(lab_err)
    }

    /// Predicted class index for a numeric feature vector.
    fn predict(&self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.predict(&x).map_err(lab_err)
    }

    /// Predicted class label; falls back to the index as a string when the
    /// network was loaded from a file without label information.
    fn predict_label(&self, x: Vec<f64>) -> PyResult<String> {
        let c = self.predict(x)?;
        Ok(match &self.labels {
            Some(labels) => labels[c].clone(),
            None => c.to_string(),
        })
    }

    /// Write the network weights to a text file.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(&path)
            .map_err(|e| PyValueError::new_err(format!("creating {}: {e}", path.display())))?;
        self.inner.save(file).map_err(lab_err)
    }

    /// Read a network saved with `save`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = File::open(&path)
            .map_err(|e| PyValueError::new_err(format!("opening {}: {e}", path.display())))?;
        Ok(PyMlp {
            inner: Network::load(BufReader::new(file)).map_err(lab_err)?,
            labels: None,
        })
    }

    #[getter]
    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.hidden()
    }

    #[getter]
    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mlp({} inputs, {} hidden, {} outputs)",
            self.inner.n_inputs(),
            self.inner.hidden(),
            self.inner.n_outputs()
        )
    }
}

// ---------------------------------------------------------------------------
// Metrics

/// Root mean squared error of predicted class-probability vectors against
/// one-hot actual class indices.
#[pyfunction]
fn rmse(probabilities: Vec<Vec<f64>>, actual: Vec<usize>) -> PyResult<f64> {
    classlab::rmse(&probabilities, &actual).map_err(lab_err)
}

/// ROC curve points as (threshold, fp_rate, tp_rate) tuples; the synthetic
/// origin carries threshold None.
#[pyfunction]
fn roc_points(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<Vec<(Option<f64>, f64, f64)>> {
    Ok(classlab::roc_points(&scores, &labels)
        .map_err(lab_err)?
        .into_iter()
        .map(|p| (p.threshold, p.fp_rate, p.tp_rate))
        .collect())
}

/// Accuracy, kappa, and per-class tp/fp rates of a counts matrix indexed
/// [actual][predicted]. Rates with a zero denominator come back as None.
#[pyfunction]
#[pyo3(signature = (counts, labels=None))]
fn confusion_metrics<'py>(
    py: Python<'py>,
    counts: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyAny>> {
    let n = counts.len();
    let labels = labels.unwrap_or_else(|| (0..n).map(|i| format!("c{i}")).collect());
    if labels.len() != n {
        return Err(PyValueError::new_err(format!(
            "{} labels for a {n}x{n} counts matrix",
            labels.len()
        )));
    }
    let mut m = classlab::ConfusionMatrix::new(labels).map_err(lab_err)?;
    for (actual, row) in counts.iter().enumerate() {
        if row.len() != n {
            return Err(PyValueError::new_err("counts matrix must be square"));
        }
        for (predicted, &count) in row.iter().enumerate() {
            for _ in 0..count {
                m.record(actual, predicted).map_err(lab_err)?;
            }
        }
    }
    let value = serde_json::json!({
        "accuracy": m.accuracy().map_err(lab_err)?,
        "kappa": m.kappa().map_err(lab_err)?,
        "tp_rate": (0..n).map(|c| m.tp_rate(c).ok()).collect::<Vec<_>>(),
        "fp_rate": (0..n).map(|c| m.fp_rate(c).ok()).collect::<Vec<_>>(),
    });
    Ok(pythonize(py, &value)?)
}

// ---------------------------------------------------------------------------
// Missing values

/// Copy with numeric missing cells replaced by the column mean and nominal
/// ones by the most frequent category; the class column is left untouched.
#[pyfunction]
fn mean_mode_impute(dataset: &PyDataset) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: classlab::mean_mode_impute(&dataset.inner).map_err(lab_err)?,
    })
}

/// Draw m completed copies of the dataset by data augmentation under a
/// multivariate normal model (EM-initialized).
#[pyfunction]
#[pyo3(signature = (dataset, m=5, seed=0, burn_in=200, thin=100, em_tol=1e-6,
                    em_max_iter=500, impute_class=false))]
#[allow(clippy::too_many_arguments)]
fn multiple_impute(
    py: Python<'_>,
    dataset: &PyDataset,
    m: usize,
    seed: u64,
    burn_in: usize,
    thin: usize,
    em_tol: f64,
    em_max_iter: usize,
    impute_class: bool,
) -> PyResult<Vec<PyDataset>> {
    let cfg = ImputationConfig {
        m,
        burn_in,
        thin,
        em_tol,
        em_max_iter,
        seed,
        impute_class,
    };
    let d = dataset.inner.clone();
    let completed = py
        .detach(move || classlab::multiple_impute(&d, &cfg))
        .map_err(lab_err)?;
    Ok(completed
        .into_iter()
        .map(|inner| PyDataset { inner })
        .collect())
}

/// Maximum-likelihood mean/covariance of a multivariate normal over
/// incomplete rows (None marks a missing entry). Returns a dict with the
/// fitted mean and covariance, the iteration count, and the per-iteration
/// observed-data log-likelihood trace.
#[pyfunction]
#[pyo3(signature = (rows, tol=1e-6, max_iter=500))]
fn em_mle<'py>(
    py: Python<'py>,
    rows: Vec<Vec<Option<f64>>>,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let fit = py
        .detach(move || classlab::em_mle(&rows, tol, max_iter))
        .map_err(lab_err)?;
    let value = serde_json::json!({
        "mean": fit.state.mean,
        "cov": fit.state.cov,
        "iterations": fit.iterations,
        "loglik": fit.loglik,
    });
    Ok(pythonize(py, &value)?)
}

// ---------------------------------------------------------------------------
// Harness

fn classifier_spec(
    classifier: &str,
    k: usize,
    weighting: &str,
    alpha: f64,
    momentum: f64,
    hidden: usize,
    epochs: usize,
) -> PyResult<ClassifierSpec> {
    match classifier {
        "knn" => Ok(ClassifierSpec::Knn(KnnConfig {
            k,
            weighting: weighting.parse().map_err(lab_err)?,
        })),
        "mlp" => Ok(ClassifierSpec::Mlp(MlpConfig {
            hidden,
            learning_rate: alpha,
            momentum,
            epochs,
            seed: 0,
        })),
        "majority" => Ok(ClassifierSpec::Majority),
        other => Err(PyValueError::new_err(format!(
            "unknown classifier '{other}'; expected knn, mlp, or majority"
        ))),
    }
}

/// Stratified k-fold cross-validation of one classifier under one
/// missing-value method ("default", "mean-mode", or "mi").
///
/// Returns a dict with the mean accuracy/rmse/kappa and the full per-dataset
/// reports (one report unless method "mi" draws several completed datasets).
#[pyfunction]
#[pyo3(signature = (dataset, classifier, *, k=1, weighting="uniform", alpha=0.3,
                    momentum=0.2, hidden=2, epochs=500, folds=10, seed=1,
                    missing="default", m=5, mi_seed=0, burn_in=200, thin=100,
                    per_fold_preprocessing=true, roc_class=None,
                    dataset_name="dataset"))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    classifier: &str,
    k: usize,
    weighting: &str,
    alpha: f64,
    momentum: f64,
    hidden: usize,
    epochs: usize,
    folds: usize,
    seed: u64,
    missing: &str,
    m: usize,
    mi_seed: u64,
    burn_in: usize,
    thin: usize,
    per_fold_preprocessing: bool,
    roc_class: Option<String>,
    dataset_name: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = classifier_spec(classifier, k, weighting, alpha, momentum, hidden, epochs)?;
    let method = match missing {
        "default" => MissingMethod::Default,
        "mean-mode" => MissingMethod::MeanMode,
        "mi" => MissingMethod::MultipleImputation(ImputationConfig {
            m,
            burn_in,
            thin,
            seed: mi_seed,
            ..ImputationConfig::default()
        }),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown missing-value method '{other}'; expected default, mean-mode, or mi"
            )))
        }
    };
    let roc_index = roc_class
        .map(|label| resolve_class_label(&dataset.inner, &label))
        .transpose()
        .map_err(lab_err)?;
    let opts = CvOptions {
        dataset_name: dataset_name.to_string(),
        per_fold_preprocessing,
        roc_class: roc_index,
    };
    let d = dataset.inner.clone();
    let reports: Vec<EvaluationReport> = py
        .detach(move || -> classlab::Result<_> {
            let label = method.label().to_string();
            let mut reports: Vec<EvaluationReport> = materialize_datasets(&d, &method)?
                .iter()
                .map(|completed| cv(completed, &spec, folds, seed, &opts))
                .collect::<classlab::Result<_>>()?;
            for r in &mut reports {
                r.missing_method = label.clone();
            }
            Ok(reports)
        })
        .map_err(lab_err)?;
    let count = reports.len() as f64;
    let mean = |f: fn(&EvaluationReport) -> f64| reports.iter().map(f).sum::<f64>() / count;
    let value = serde_json::json!({
        "accuracy": mean(|r| r.accuracy),
        "rmse": mean(|r| r.rmse),
        "kappa": mean(|r| r.kappa),
        "reports": reports,
    });
    Ok(pythonize(py, &value)?)
}

#[pymodule]
fn classlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyKnn>()?;
    m.add_class::<PyMlp>()?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(roc_points, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(mean_mode_impute, m)?)?;
    m.add_function(wrap_pyfunction!(multiple_impute, m)?)?;
    m.add_function(wrap_pyfunction!(em_mle, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
