//! Data sources: a synthetic hidden-confounder generator with full ground
//! truth, and a loader for IHDP/NPCI-style realization files.
//!
//! The synthetic process draws, per unit,
//!
//! ```text
//! z ~ Bern(0.5)
//! t | z ~ Bern(0.75 z + 0.25 (1 - z))
//! x | z ~ Normal(z, sigma_z1^2 z + sigma_z0^2 (1 - z))
//! y | t, z ~ Bern(sigmoid(3 (z + 2 (2t - 1))))
//! ```
//!
//! so treatment and outcome are confounded through the hidden z while only
//! the noisy proxy x is observed.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PotentialOutcomeTable;
use crate::numeric::sigmoid;

/// Configuration of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_units: usize,
    pub n_sims: usize,
    pub seed: u64,
    /// Standard deviation of the proxy x for z = 0 units.
    pub sigma_z0: f64,
    /// Standard deviation of the proxy x for z = 1 units.
    pub sigma_z1: f64,
    /// With `true` (the default) the stored potential outcomes are the
    /// Bernoulli success probabilities, which gives every unit a
    /// well-defined individual effect; with `false` both arms are sampled
    /// and the factual one is exposed as the observed outcome.
    pub noiseless_truth: bool,
    /// Number of independent proxy draws per unit (d = 1 matches the
    /// scalar process above; larger values exist for stress tests).
    pub proxy_dim: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_units: 1000,
            n_sims: 100,
            seed: 0,
            sigma_z0: 3.0,
            sigma_z1: 5.0,
            noiseless_truth: true,
            proxy_dim: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_units < 2 {
            return Err(Error::Validation(format!(
                "n_units must be >= 2 so both groups are representable, got {}",
                self.n_units
            )));
        }
        if self.n_sims == 0 {
            return Err(Error::Validation("n_sims must be positive".into()));
        }
        if !(self.sigma_z0 > 0.0) || !(self.sigma_z1 > 0.0) {
            return Err(Error::Validation(format!(
                "sigma_z0 and sigma_z1 must be positive, got {} and {}",
                self.sigma_z0, self.sigma_z1
            )));
        }
        if self.proxy_dim == 0 {
            return Err(Error::Validation("proxy_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Where a realization came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataOrigin {
    Synthetic,
    Ihdp,
}

/// One simulation's units: covariates, treatment, observed outcome, and the
/// ground-truth potential outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRealization {
    pub sim_id: u64,
    /// n_units rows of d covariates each.
    pub covariates: Vec<Vec<f64>>,
    pub t: Vec<u8>,
    pub y_factual: Vec<f64>,
    pub y0_true: Vec<f64>,
    pub y1_true: Vec<f64>,
    pub source: DataOrigin,
}

impl SimulationRealization {
    pub fn n_units(&self) -> usize {
        self.t.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.first().map_or(0, Vec::len)
    }

    pub fn treated_count(&self) -> usize {
        self.t.iter().filter(|&&t| t == 1).count()
    }

    pub fn control_count(&self) -> usize {
        self.n_units() - self.treated_count()
    }

    /// The true potential outcomes as a metrics table (no models attached).
    pub fn truth_table(&self) -> Result<PotentialOutcomeTable> {
        PotentialOutcomeTable::new(self.sim_id, self.y0_true.clone(), self.y1_true.clone())?
            .with_treatment(self.t.clone())
    }
}

/// Generate `n_sims` realizations of the synthetic process.
///
/// Randomness comes from ChaCha20 seeded with `config.seed`, using the
/// simulation index as the ChaCha stream id; each unit consumes a fixed
/// number of draws in a fixed order. Generation is therefore deterministic
/// and each simulation may be produced independently of the others.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<SimulationRealization>> {
    config.validate()?;
    let mut sims = Vec::with_capacity(config.n_sims);
    for sim_id in 0..config.n_sims as u64 {
        sims.push(generate_one(config, sim_id));
    }
    Ok(sims)
}

fn generate_one(config: &SyntheticConfig, sim_id: u64) -> SimulationRealization {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(sim_id);

    let n = config.n_units;
    let mut covariates = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    let mut y_factual = Vec::with_capacity(n);
    let mut y0_true = Vec::with_capacity(n);
    let mut y1_true = Vec::with_capacity(n);

    for _ in 0..n {
        let z = rng.random::<f64>() < 0.5;
        let zf = if z { 1.0 } else { 0.0 };

        let p_treat = 0.75 * zf + 0.25 * (1.0 - zf);
        let treated = rng.random::<f64>() < p_treat;
        t.push(u8::from(treated));

        let sigma = if z { config.sigma_z1 } else { config.sigma_z0 };
        let x: Vec<f64> = (0..config.proxy_dim)
            .map(|_| {
                let eps: f64 = rng.sample(StandardNormal);
                zf + sigma * eps
            })
            .collect();
        covariates.push(x);

        let q0 = sigmoid(3.0 * (zf - 2.0));
        let q1 = sigmoid(3.0 * (zf + 2.0));
        if config.noiseless_truth {
            y0_true.push(q0);
            y1_true.push(q1);
            let q_fact = if treated { q1 } else { q0 };
            y_factual.push(f64::from(u8::from(rng.random::<f64>() < q_fact)));
        } else {
            let y0 = f64::from(u8::from(rng.random::<f64>() < q0));
            let y1 = f64::from(u8::from(rng.random::<f64>() < q1));
            y0_true.push(y0);
            y1_true.push(y1);
            y_factual.push(if treated { y1 } else { y0 });
        }
    }

    SimulationRealization {
        sim_id,
        covariates,
        t,
        y_factual,
        y0_true,
        y1_true,
        source: DataOrigin::Synthetic,
    }
}

/// Expected column layout of an IHDP/NPCI realization file.
pub const IHDP_COVARIATES: usize = 25;
const IHDP_COLUMNS: usize = 5 + IHDP_COVARIATES;

/// Load IHDP/NPCI realizations from a file or a directory of CSV files.
///
/// Each file holds one realization with rows
/// `treatment, y_factual, y_cfactual, mu0, mu1, x1..x25` (the de-facto NPCI
/// CSV layout, without a header; a leading header row is skipped if
/// present). `mu0`/`mu1` become the true potential outcomes. Directories
/// are read in sorted filename order; `limit` caps the number of
/// realizations loaded.
pub fn load_ihdp(path: &Path, limit: Option<usize>) -> Result<Vec<SimulationRealization>> {
    let files = ihdp_files(path, limit)?;
    let mut sims = Vec::with_capacity(files.len());
    for (sim_id, file) in files.iter().enumerate() {
        sims.push(load_ihdp_file(file, sim_id as u64)?);
    }
    Ok(sims)
}

fn ihdp_files(path: &Path, limit: Option<usize>) -> Result<Vec<PathBuf>> {
    let mut files = if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("csv"))
            .collect();
        entries.sort();
        entries
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no .csv realization files under {}",
            path.display()
        )));
    }
    if let Some(limit) = limit {
        files.truncate(limit);
    }
    Ok(files)
}

fn load_ihdp_file(path: &Path, sim_id: u64) -> Result<SimulationRealization> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;

    let mut covariates = Vec::new();
    let mut t = Vec::new();
    let mut y_factual = Vec::new();
    let mut y0_true = Vec::new();
    let mut y1_true = Vec::new();

    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 1;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: e.to_string(),
        })?;
        // Tolerate one leading header row.
        if row_idx == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() != IHDP_COLUMNS {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!(
                    "expected {IHDP_COLUMNS} columns \
                     (treatment, y_factual, y_cfactual, mu0, mu1, x1..x{IHDP_COVARIATES}), \
                     found {}",
                    record.len()
                ),
            });
        }
        let mut fields = Vec::with_capacity(IHDP_COLUMNS);
        for (col, raw) in record.iter().enumerate() {
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("cannot parse `{raw}` in column {}", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("column {} is {v}; NaN/Inf are rejected", col + 1),
                });
            }
            fields.push(v);
        }
        let treatment = if fields[0] == 0.0 {
            0u8
        } else if fields[0] == 1.0 {
            1u8
        } else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("treatment must be 0 or 1, found {}", fields[0]),
            });
        };
        t.push(treatment);
        y_factual.push(fields[1]);
        // fields[2] is the noisy counterfactual draw; the noiseless means
        // mu0/mu1 serve as the ground truth.
        y0_true.push(fields[3]);
        y1_true.push(fields[4]);
        covariates.push(fields[5..].to_vec());
    }

    if t.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "file contains no data rows".into(),
        });
    }
    let treated = t.iter().filter(|&&x| x == 1).count();
    if treated == 0 || treated == t.len() {
        return Err(Error::Validation(format!(
            "{}: realization has an empty treatment or control group ({treated}/{} treated)",
            path.display(),
            t.len()
        )));
    }

    Ok(SimulationRealization {
        sim_id,
        covariates,
        t,
        y_factual,
        y0_true,
        y1_true,
        source: DataOrigin::Ihdp,
    })
}
