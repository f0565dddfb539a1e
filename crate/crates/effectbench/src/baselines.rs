//! Minimal reference estimators.
//!
//! These exist so the full pipeline can run without external models. They
//! are deliberately of different quality (a constant-effect baseline, a
//! global linear model, and a local matcher) so that rank tests on their
//! errors have real signal. All are deterministic functions of the
//! realization.

use serde::{Deserialize, Serialize};

use crate::datagen::SimulationRealization;
use crate::error::{Error, Result};

/// Which estimator to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Predict the observed group means for every unit.
    DiffInMeans,
    /// One least-squares fit on `[1, x, t]`; predictions at t = 0 and t = 1.
    SLearnerLinear,
    /// Counterfactual from the nearest opposite-group units (Euclidean over
    /// covariates); the factual arm is predicted as observed.
    KnnMatching {
        #[serde(default = "default_neighbors")]
        k: usize,
    },
}

fn default_neighbors() -> usize {
    1
}

/// A named estimator instance for a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: EstimatorKind,
}

impl EstimatorSpec {
    pub fn new(name: impl Into<String>, kind: EstimatorKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Validation("estimator name must be non-empty".into()));
        }
        if let EstimatorKind::KnnMatching { k } = self.kind {
            if k == 0 {
                return Err(Error::Validation(format!(
                    "estimator `{}`: neighbor count must be >= 1",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Fit the estimator on one realization and predict both potential
/// outcomes for every unit.
pub fn fit_predict(
    spec: &EstimatorSpec,
    realization: &SimulationRealization,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let treated = realization.treated_count();
    if treated == 0 || treated == realization.n_units() {
        return Err(Error::Estimation(format!(
            "estimator `{}`: realization {} has only one treatment group",
            spec.name, realization.sim_id
        )));
    }
    match spec.kind {
        EstimatorKind::DiffInMeans => Ok(diff_in_means(realization)),
        EstimatorKind::SLearnerLinear => s_learner_linear(&spec.name, realization),
        EstimatorKind::KnnMatching { k } => Ok(knn_matching(realization, k)),
    }
}

fn group_mean(realization: &SimulationRealization, group: u8) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &t) in realization.t.iter().enumerate() {
        if t == group {
            sum += realization.y_factual[i];
            count += 1;
        }
    }
    sum / count as f64
}

fn diff_in_means(realization: &SimulationRealization) -> (Vec<f64>, Vec<f64>) {
    let n = realization.n_units();
    let control_mean = group_mean(realization, 0);
    let treated_mean = group_mean(realization, 1);
    (vec![control_mean; n], vec![treated_mean; n])
}

fn s_learner_linear(
    name: &str,
    realization: &SimulationRealization,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = realization.n_units();
    let d = realization.n_covariates();
    let p = d + 2; // intercept, covariates, treatment

    // Normal equations A = X'X, b = X'y accumulated directly.
    let mut a = vec![vec![0.0f64; p]; p];
    let mut b = vec![0.0f64; p];
    let mut row = vec![0.0f64; p];
    for i in 0..n {
        row[0] = 1.0;
        row[1..=d].copy_from_slice(&realization.covariates[i]);
        row[p - 1] = f64::from(realization.t[i]);
        for r in 0..p {
            for c in r..p {
                a[r][c] += row[r] * row[c];
            }
            b[r] += row[r] * realization.y_factual[i];
        }
    }
    for r in 0..p {
        for c in 0..r {
            a[r][c] = a[c][r];
        }
    }

    // Ridge jitter on singular designs keeps the solve deterministic.
    let beta = match solve(a.clone(), b.clone()) {
        Some(beta) => beta,
        None => {
            let mut jittered = a;
            for (r, row) in jittered.iter_mut().enumerate() {
                row[r] += 1e-10;
            }
            solve(jittered, b).ok_or_else(|| {
                Error::Estimation(format!("estimator `{name}`: singular design matrix"))
            })?
        }
    };

    let mut y0_hat = Vec::with_capacity(n);
    let mut y1_hat = Vec::with_capacity(n);
    for i in 0..n {
        let mut base = beta[0];
        for (j, &x) in realization.covariates[i].iter().enumerate() {
            base += beta[j + 1] * x;
        }
        y0_hat.push(base);
        y1_hat.push(base + beta[p - 1]);
    }
    Ok((y0_hat, y1_hat))
}

/// Gaussian elimination with partial pivoting; `None` on (near-)singular
/// input so the caller can retry with a jitter.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let tol = 1e-12 * scale;
    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() <= tol {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in (col + 1)..p {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..p {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for col in (0..p).rev() {
        let mut acc = b[col];
        for c in (col + 1)..p {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

fn knn_matching(realization: &SimulationRealization, k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = realization.n_units();
    let by_group: [Vec<usize>; 2] = [
        (0..n).filter(|&i| realization.t[i] == 0).collect(),
        (0..n).filter(|&i| realization.t[i] == 1).collect(),
    ];

    let mut y0_hat = vec![0.0; n];
    let mut y1_hat = vec![0.0; n];
    for i in 0..n {
        let opposite = &by_group[usize::from(realization.t[i] == 0)];
        let mut candidates: Vec<(f64, usize)> = opposite
            .iter()
            .map(|&j| (sq_dist(&realization.covariates[i], &realization.covariates[j]), j))
            .collect();
        // Ties break toward the lowest unit index.
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k_eff = k.min(candidates.len());
        let matched: f64 = candidates[..k_eff]
            .iter()
            .map(|&(_, j)| realization.y_factual[j])
            .sum::<f64>()
            / k_eff as f64;
        if realization.t[i] == 1 {
            y1_hat[i] = realization.y_factual[i];
            y0_hat[i] = matched;
        } else {
            y0_hat[i] = realization.y_factual[i];
            y1_hat[i] = matched;
        }
    }
    (y0_hat, y1_hat)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}
