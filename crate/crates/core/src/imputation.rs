//! Missing-value handling: missingness summaries, mean/mode filling,
//! maximum-likelihood estimation of a multivariate normal over incomplete
//! data (EM), and multiple imputation by data augmentation.
//!
//! For the normal model every attribute is encoded as a real column; nominal
//! attributes enter as their category index and imputed draws are rounded
//! and clamped back to a valid category.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Cell, Dataset};
use crate::error::{Error, Result};

/// Mean vector and covariance matrix of the fitted normal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalModelState {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl NormalModelState {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    fn mean_vec(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.mean)
    }

    fn cov_mat(&self) -> DMatrix<f64> {
        let p = self.mean.len();
        DMatrix::from_fn(p, p, |i, j| self.cov[i][j])
    }

    fn from_nalgebra(mean: &DVector<f64>, cov: &DMatrix<f64>) -> NormalModelState {
        let p = mean.len();
        NormalModelState {
            mean: mean.iter().copied().collect(),
            cov: (0..p)
                .map(|i| (0..p).map(|j| cov[(i, j)]).collect())
                .collect(),
        }
    }
}

/// EM output: the fitted state, iterations used, and the observed-data
/// log-likelihood at the start of every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub state: NormalModelState,
    pub iterations: usize,
    pub loglik: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputationConfig {
    /// Number of completed datasets to produce.
    pub m: usize,
    /// Data-augmentation iterations discarded before the first draw.
    pub burn_in: usize,
    /// Iterations between consecutive draws.
    pub thin: usize,
    pub em_tol: f64,
    pub em_max_iter: usize,
    pub seed: u64,
    /// Also fill missing class values. Off by default: rows without a class
    /// are normally dropped instead of invented.
    pub impute_class: bool,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            m: 5,
            burn_in: 200,
            thin: 100,
            em_tol: 1e-6,
            em_max_iter: 500,
            seed: 0,
            impute_class: false,
        }
    }
}

impl ImputationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if !(self.em_tol.is_finite() && self.em_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "EM tolerance {} must be positive",
                self.em_tol
            )));
        }
        if self.em_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "EM iteration limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMissingness {
    pub name: String,
    pub missing: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSummary {
    pub per_attribute: Vec<AttributeMissingness>,
    pub total_cells: usize,
    pub missing_cells: usize,
    pub rows_with_missing: usize,
}

pub fn missingness_summary(d: &Dataset) -> MissingnessSummary {
    let n = d.n_instances();
    let per_attribute: Vec<AttributeMissingness> = d
        .schema()
        .iter()
        .map(|attr| {
            let missing = (0..n).filter(|&r| d.is_missing(r, attr.index)).count();
            AttributeMissingness {
                name: attr.name.clone(),
                missing,
                fraction: if n == 0 {
                    0.0
                } else {
                    missing as f64 / n as f64
                },
            }
        })
        .collect();
    let missing_cells = per_attribute.iter().map(|a| a.missing).sum();
    let rows_with_missing = (0..n)
        .filter(|&r| (0..d.n_attributes()).any(|a| d.is_missing(r, a)))
        .count();
    MissingnessSummary {
        per_attribute,
        total_cells: n * d.n_attributes(),
        missing_cells,
        rows_with_missing,
    }
}

/// Fill values fitted on one dataset: mean of observed values for numeric
/// attributes, most frequent category for nominal ones (ties to the lowest
/// category index). The class attribute is never filled.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanModeStats {
    fills: Vec<Option<Cell>>,
}

impl MeanModeStats {
    pub fn fit(d: &Dataset) -> Result<MeanModeStats> {
        if d.n_instances() == 0 {
            return Err(Error::EmptyInput("fitting fill values on no rows".into()));
        }
        let fills = d
            .schema()
            .iter()
            .map(|attr| {
                if attr.index == d.class_index() {
                    return Ok(None);
                }
                match &attr.kind {
                    AttributeKind::Numeric => {
                        let observed: Vec<f64> = (0..d.n_instances())
                            .filter_map(|r| d.cell(r, attr.index).as_numeric())
                            .collect();
                        if observed.is_empty() {
                            return Err(Error::EmptyInput(format!(
                                "attribute '{}' has no observed values",
                                attr.name
                            )));
                        }
                        Ok(Some(Cell::Numeric(
                            observed.iter().sum::<f64>() / observed.len() as f64,
                        )))
                    }
                    AttributeKind::Nominal(cats) => {
                        let mut counts = vec![0usize; cats.len()];
                        for r in 0..d.n_instances() {
                            if let Some(c) = d.cell(r, attr.index).as_nominal() {
                                counts[c] += 1;
                            }
                        }
                        if counts.iter().all(|&c| c == 0) {
                            return Err(Error::EmptyInput(format!(
                                "attribute '{}' has no observed values",
                                attr.name
                            )));
                        }
                        let mode = counts
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                            .map(|(c, _)| c)
                            .unwrap();
                        Ok(Some(Cell::Nominal(mode)))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeanModeStats { fills })
    }

    pub fn fill_value(&self, attribute: usize) -> Option<&Cell> {
        self.fills.get(attribute).and_then(|f| f.as_ref())
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for row in 0..d.n_instances() {
            for (attr, fill) in self.fills.iter().enumerate() {
                if let (true, Some(value)) = (d.is_missing(row, attr), fill) {
                    out.set_cell(row, attr, *value);
                }
            }
        }
        out
    }
}

/// Fill every missing non-class cell with its attribute's mean or mode,
/// fitted on the same data.
pub fn mean_mode_impute(d: &Dataset) -> Result<Dataset> {
    Ok(MeanModeStats::fit(d)?.apply(d))
}

// ---------------------------------------------------------------------------
// Normal-model machinery shared by EM and data augmentation.

/// Rows grouped by their missingness mask (true = missing).
type Patterns = BTreeMap<Vec<bool>, Vec<usize>>;

struct Encoded {
    /// n x p matrix; missing slots start at 0 and are only ever written.
    x: DMatrix<f64>,
    patterns: Patterns,
    /// Attribute index behind each encoded column.
    columns: Vec<usize>,
}

/// Encode the dataset as a real matrix, nominal values as their category
/// index. The class column joins the model only when `include_class` is set;
/// otherwise it is left out of the matrix entirely.
fn encode(d: &Dataset, include_class: bool) -> Result<Encoded> {
    let n = d.n_instances();
    if n == 0 {
        return Err(Error::EmptyInput("imputation over zero rows".into()));
    }
    let columns: Vec<usize> = d
        .schema()
        .iter()
        .map(|attr| attr.index)
        .filter(|&idx| include_class || idx != d.class_index())
        .collect();
    if columns.is_empty() {
        return Err(Error::EmptyInput(
            "dataset has no attributes to model besides the class".into(),
        ));
    }
    for &idx in &columns {
        if (0..n).all(|r| d.is_missing(r, idx)) {
            return Err(Error::EmptyInput(format!(
                "attribute '{}' has no observed values",
                d.schema()[idx].name
            )));
        }
    }
    let p = columns.len();
    let mut x = DMatrix::zeros(n, p);
    let mut patterns: Patterns = BTreeMap::new();
    for row in 0..n {
        let mut mask = vec![false; p];
        for (col, &idx) in columns.iter().enumerate() {
            match d.cell(row, idx) {
                Cell::Numeric(v) => x[(row, col)] = v,
                Cell::Nominal(c) => x[(row, col)] = c as f64,
                Cell::Missing => mask[col] = true,
            }
        }
        patterns.entry(mask).or_default().push(row);
    }
    Ok(Encoded {
        x,
        patterns,
        columns,
    })
}

/// Write imputed values back over the missing cells of `d`. Observed cells
/// are untouched; nominal draws are rounded and clamped to a valid category.
fn write_back(d: &Dataset, x: &DMatrix<f64>, columns: &[usize]) -> Result<Dataset> {
    let mut out = d.clone();
    for row in 0..d.n_instances() {
        for (col, &idx) in columns.iter().enumerate() {
            if !d.is_missing(row, idx) {
                continue;
            }
            let attr = &d.schema()[idx];
            let v = x[(row, col)];
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "imputation produced a non-finite value for attribute '{}'",
                    attr.name
                )));
            }
            let cell = match &attr.kind {
                AttributeKind::Numeric => Cell::Numeric(v),
                AttributeKind::Nominal(cats) => {
                    let idx_cat = v.round().clamp(0.0, (cats.len() - 1) as f64) as usize;
                    Cell::Nominal(idx_cat)
                }
            };
            out.set_cell(row, idx, cell);
        }
    }
    Ok(out)
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Factor a covariance, adding an escalating diagonal ridge when it is
/// singular to numerical precision (e.g. collinear attributes make
/// conditional covariances degenerate without being invalid).
fn cholesky_or_ridge(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let p = m.nrows();
    let base = (1e-8 * m.trace() / p as f64).max(1e-12);
    for boost in [1.0, 1e3, 1e6] {
        let mut ridged = m.clone();
        let lambda = base * boost;
        for i in 0..p {
            ridged[(i, i)] += lambda;
        }
        if let Some(c) = Cholesky::new(ridged) {
            return Ok(c);
        }
    }
    Err(Error::InvalidConfig(format!(
        "{what} is not positive definite"
    )))
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.ln())
        .sum::<f64>()
}

const LN_2PI: f64 = 1.8378770664093453;

/// One EM expectation pass: sufficient statistic sums `t1 = sum E[x]`,
/// `t2 = sum E[x xT]`, plus the observed-data log-likelihood at the
/// supplied parameters.
fn e_step(
    x: &DMatrix<f64>,
    patterns: &Patterns,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let p = mean.len();
    let mut t1 = DVector::zeros(p);
    let mut t2 = DMatrix::zeros(p, p);
    let mut loglik = 0.0;

    for (mask, rows) in patterns {
        let obs: Vec<usize> = (0..p).filter(|&c| !mask[c]).collect();
        let mis: Vec<usize> = (0..p).filter(|&c| mask[c]).collect();

        if obs.is_empty() {
            // Entirely missing row: expectation is the current model.
            for _ in rows {
                t1 += mean;
                t2 += cov + mean * mean.transpose();
            }
            continue;
        }

        let mu_o = subvector(mean, &obs);
        let sigma_oo = submatrix(cov, &obs, &obs);
        let chol = cholesky_or_ridge(sigma_oo, "observed-block covariance")?;
        let ld = log_det(&chol);

        // Conditional pieces for the missing block.
        let (sigma_mo, cond_cov, mu_m) = if mis.is_empty() {
            (
                DMatrix::zeros(0, 0),
                DMatrix::zeros(0, 0),
                DVector::zeros(0),
            )
        } else {
            let sigma_mo = submatrix(cov, &mis, &obs);
            let sigma_mm = submatrix(cov, &mis, &mis);
            // B = Sigma_MO Sigma_OO^-1, via solving against the transpose.
            let b_t = chol.solve(&sigma_mo.transpose());
            let cond_cov = &sigma_mm - &sigma_mo * &b_t;
            (sigma_mo, cond_cov, subvector(mean, &mis))
        };

        for &row in rows {
            let x_o = DVector::from_fn(obs.len(), |i, _| x[(row, obs[i])]);
            let centered = &x_o - &mu_o;
            let solved = chol.solve(&centered);
            loglik -= 0.5 * (obs.len() as f64 * LN_2PI + ld + centered.dot(&solved));

            let mut full = DVector::zeros(p);
            for (i, &c) in obs.iter().enumerate() {
                full[c] = x_o[i];
            }
            if !mis.is_empty() {
                let x_m = &mu_m + &sigma_mo * &solved;
                for (i, &c) in mis.iter().enumerate() {
                    full[c] = x_m[i];
                }
            }
            t1 += &full;
            t2 += &full * full.transpose();
            // E[x xT] needs the conditional covariance in the missing block.
            for (i, &ci) in mis.iter().enumerate() {
                for (j, &cj) in mis.iter().enumerate() {
                    t2[(ci, cj)] += cond_cov[(i, j)];
                }
            }
        }
    }
    Ok((t1, t2, loglik))
}

/// Maximum-likelihood mean and covariance of a multivariate normal fitted to
/// incomplete data by EM. Rows are instances; `None` marks a missing entry.
/// Converges when neither the mean nor the covariance moves more than `tol`
/// in any entry.
pub fn em_mle(rows: &[Vec<Option<f64>>], tol: f64, max_iter: usize) -> Result<EmResult> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput("EM over zero rows".into()));
    }
    let p = rows[0].len();
    if p == 0 {
        return Err(Error::EmptyInput("EM over zero columns".into()));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::SchemaMismatch(format!(
                "row {r} has {} entries, expected {p}",
                row.len()
            )));
        }
    }
    let mut x = DMatrix::zeros(n, p);
    let mut patterns: Patterns = BTreeMap::new();
    for (r, row) in rows.iter().enumerate() {
        let mut mask = vec![false; p];
        for (c, entry) in row.iter().enumerate() {
            match entry {
                Some(v) if v.is_finite() => x[(r, c)] = *v,
                Some(v) => {
                    return Err(Error::SchemaMismatch(format!(
                        "non-finite value {v} at row {r}, column {c}"
                    )))
                }
                None => mask[c] = true,
            }
        }
        patterns.entry(mask).or_default().push(r);
    }
    for c in 0..p {
        if patterns.keys().all(|mask| mask[c]) {
            return Err(Error::EmptyInput(format!(
                "column {c} has no observed values"
            )));
        }
    }
    em_core(&x, &patterns, tol, max_iter)
}

/// EM core over an encoded matrix whose missing slots are zero placeholders
/// described by `patterns`.
fn em_core(x: &DMatrix<f64>, patterns: &Patterns, tol: f64, max_iter: usize) -> Result<EmResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "EM tolerance {tol} must be positive"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidConfig(
            "EM iteration limit must be at least 1".into(),
        ));
    }
    let n = x.nrows();
    let p = x.ncols();
    if n < 2 {
        return Err(Error::EmptyInput(
            "normal model needs at least two rows".into(),
        ));
    }

    // Initialize from the mean-filled completed matrix.
    let mut col_sums = vec![(0.0, 0usize); p];
    for (mask, rows) in patterns {
        for col in 0..p {
            if !mask[col] {
                for &row in rows {
                    col_sums[col].0 += x[(row, col)];
                }
                col_sums[col].1 += rows.len();
            }
        }
    }
    let col_means: Vec<f64> = col_sums.iter().map(|&(s, c)| s / c as f64).collect();
    let mut filled = x.clone();
    for (mask, rows) in patterns {
        for col in 0..p {
            if mask[col] {
                for &row in rows {
                    filled[(row, col)] = col_means[col];
                }
            }
        }
    }
    let mut mean = DVector::from_fn(p, |c, _| filled.column(c).sum() / n as f64);
    let mut cov = {
        let mut acc = DMatrix::zeros(p, p);
        for r in 0..n {
            let diff = filled.row(r).transpose() - &mean;
            acc += &diff * diff.transpose();
        }
        acc / n as f64
    };

    let mut loglik_trace = Vec::new();
    for iter in 1..=max_iter {
        let (t1, t2, loglik) = e_step(x, patterns, &mean, &cov)?;
        loglik_trace.push(loglik);

        let new_mean = t1 / n as f64;
        let mut new_cov = t2 / n as f64 - &new_mean * new_mean.transpose();
        // Keep the matrix exactly symmetric against round-off drift.
        new_cov = (&new_cov + new_cov.transpose()) * 0.5;

        let delta_mean = (&new_mean - &mean).amax();
        let delta_cov = (&new_cov - &cov).amax();
        mean = new_mean;
        cov = new_cov;
        log::debug!(
            "em iter {iter}: loglik {loglik:.6}, delta {:.3e}",
            delta_mean.max(delta_cov)
        );

        if delta_mean < tol && delta_cov < tol {
            return Ok(EmResult {
                state: NormalModelState::from_nalgebra(&mean, &cov),
                iterations: iter,
                loglik: loglik_trace,
            });
        }
    }
    Err(Error::EmNonConvergence {
        iterations: max_iter,
        last_state: Box::new(NormalModelState::from_nalgebra(&mean, &cov)),
    })
}

/// One data-augmentation sweep.
///
/// I-step: draw every missing entry from its conditional normal given the
/// observed entries and the current parameters. P-step: redraw the
/// parameters from their posterior given the completed data — covariance
/// from an inverse-Wishart on the centered scatter, mean from a normal
/// around the sample mean.
pub(crate) fn da_step(
    x: &mut DMatrix<f64>,
    patterns: &Patterns,
    state: &mut NormalModelState,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let p = x.ncols();
    let n = x.nrows();
    let mean = state.mean_vec();
    let cov = state.cov_mat();
    let normal = StandardNormal;

    // I-step, patterns in deterministic (sorted-mask) order.
    for (mask, rows) in patterns {
        let mis: Vec<usize> = (0..p).filter(|&c| mask[c]).collect();
        if mis.is_empty() {
            continue;
        }
        let obs: Vec<usize> = (0..p).filter(|&c| !mask[c]).collect();
        let no = obs.len();
        let nm = mis.len();

        // Permute the covariance so observed coordinates come first and
        // factor it once: with [[A, Bt], [B, C]] = L Lt, L = [[L1, 0],
        // [L2, L3]], the Schur complement C - B A^-1 Bt equals L3 L3t, so
        // the conditional factor never suffers a cancelling subtraction
        // (which can go indefinite when attributes are collinear).
        let perm: Vec<usize> = obs.iter().chain(mis.iter()).copied().collect();
        let full = submatrix(&cov, &perm, &perm);
        let chol = cholesky_or_ridge(full, "model covariance")?;
        let l = chol.l();
        let l1 = l.view((0, 0), (no, no)).into_owned();
        let l2 = l.view((no, 0), (nm, no)).into_owned();
        let l3 = l.view((no, no), (nm, nm)).into_owned();
        let mu_o = subvector(&mean, &obs);
        let mu_m = subvector(&mean, &mis);

        for &row in rows {
            let mut center = mu_m.clone();
            if no > 0 {
                let x_o = DVector::from_fn(no, |i, _| x[(row, obs[i])]);
                // Sigma_MO Sigma_OO^-1 (x_o - mu_o) = L2 L1^-1 (x_o - mu_o)
                let y = l1.solve_lower_triangular(&(x_o - &mu_o)).ok_or_else(|| {
                    Error::InvalidConfig("observed-block covariance is singular".into())
                })?;
                center += &l2 * y;
            }
            let z = DVector::from_fn(nm, |_, _| normal.sample(rng));
            let draw = center + &l3 * z;
            for (i, &c) in mis.iter().enumerate() {
                x[(row, c)] = draw[i];
            }
        }
    }

    // P-step.
    let nu = n - 1;
    if nu < p {
        return Err(Error::InvalidConfig(format!(
            "posterior draw needs at least {} rows for {p} attributes",
            p + 1
        )));
    }
    let xbar = DVector::from_fn(p, |c, _| x.column(c).sum() / n as f64);
    let mut scatter = DMatrix::zeros(p, p);
    for r in 0..n {
        let diff = x.row(r).transpose() - &xbar;
        scatter += &diff * diff.transpose();
    }
    scatter = (&scatter + scatter.transpose()) * 0.5;

    // Sigma ~ InvWishart(nu, scatter): draw W ~ Wishart(nu, scatter^-1) by
    // the Bartlett construction and invert.
    let chol_s = cholesky_or_ridge(scatter, "scatter matrix")?;
    let s_inv = chol_s.inverse();
    let s_inv = (&s_inv + s_inv.transpose()) * 0.5;
    let chol_v = cholesky_or_ridge(s_inv, "inverse scatter")?;
    let mut bartlett = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new((nu - i) as f64)
            .map_err(|e| Error::InvalidConfig(format!("chi-squared degrees of freedom: {e}")))?;
        bartlett[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            bartlett[(i, j)] = normal.sample(rng);
        }
    }
    let la = chol_v.l() * bartlett;
    let w = &la * la.transpose();
    let chol_w = cholesky_or_ridge(w, "Wishart draw")?;
    let sigma = chol_w.inverse();
    let sigma = (&sigma + sigma.transpose()) * 0.5;

    // mu ~ Normal(xbar, Sigma / n).
    let chol_sigma = cholesky_or_ridge(sigma.clone(), "posterior covariance")?;
    let z = DVector::from_fn(p, |_, _| normal.sample(rng));
    let mu = &xbar + (chol_sigma.l() * z) / (n as f64).sqrt();

    *state = NormalModelState::from_nalgebra(&mu, &sigma);
    Ok(())
}

/// Multiple imputation by data augmentation under a multivariate normal
/// model, started from the EM maximum-likelihood estimate. Returns `cfg.m`
/// completed copies of the dataset; observed cells are identical to the
/// input in every copy.
pub fn multiple_impute(d: &Dataset, cfg: &ImputationConfig) -> Result<Vec<Dataset>> {
    cfg.validate()?;

    let needs_work = (0..d.n_instances()).any(|row| {
        d.schema().iter().any(|attr| {
            d.is_missing(row, attr.index) && (attr.index != d.class_index() || cfg.impute_class)
        })
    });
    if !needs_work {
        return Ok(vec![d.clone(); cfg.m]);
    }

    let mut enc = encode(d, cfg.impute_class)?;
    let em = em_core(&enc.x, &enc.patterns, cfg.em_tol, cfg.em_max_iter)?;
    let mut state = em.state;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.m);
    let total = cfg.burn_in + cfg.m * cfg.thin;
    for t in 1..=total {
        da_step(&mut enc.x, &enc.patterns, &mut state, &mut rng)?;
        if t > cfg.burn_in && (t - cfg.burn_in).is_multiple_of(cfg.thin) {
            out.push(write_back(d, &enc.x, &enc.columns)?);
        }
        if t % 100 == 0 {
            log::debug!("data augmentation sweep {t}/{total}");
        }
    }
    Ok(out)
}
