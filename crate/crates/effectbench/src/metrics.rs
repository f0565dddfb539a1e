//! Population- and individual-level error metrics for estimated potential
//! outcomes, plus the CSV ingestion formats that feed them.
//!
//! Two metrics are supported: the absolute error on the average treatment
//! effect, and the precision in estimation of heterogeneous effect (mean
//! squared error of the per-unit effect, reported without a square root so
//! that rankings use the quantity as defined).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Which error metric an `ErrorMatrix` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Absolute error of the estimated average treatment effect.
    AteAbs,
    /// Mean squared error of the estimated individual treatment effects.
    Pehe,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::AteAbs, Metric::Pehe];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AteAbs => "ate_abs",
            Metric::Pehe => "pehe",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ate_abs" => Ok(Metric::AteAbs),
            "pehe" => Ok(Metric::Pehe),
            other => Err(Error::Validation(format!(
                "unknown metric `{other}` (expected `ate_abs` or `pehe`)"
            ))),
        }
    }
}

/// True and per-model estimated potential outcomes for one simulation.
///
/// All vectors have the same length n >= 1 and contain only finite values;
/// NaN or infinity anywhere is rejected at construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomeTable {
    sim_id: u64,
    y0_true: Vec<f64>,
    y1_true: Vec<f64>,
    treatment: Option<Vec<u8>>,
    models: Vec<String>,
    y0_hat: Vec<Vec<f64>>,
    y1_hat: Vec<Vec<f64>>,
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Validation(format!(
                "{name}[{i}] is {v}; NaN/Inf are rejected at ingestion"
            )));
        }
    }
    Ok(())
}

impl PotentialOutcomeTable {
    /// Create a table from the true potential outcomes.
    pub fn new(sim_id: u64, y0_true: Vec<f64>, y1_true: Vec<f64>) -> Result<Self> {
        if y0_true.is_empty() {
            return Err(Error::Validation(
                "potential-outcome table needs at least one unit".into(),
            ));
        }
        if y0_true.len() != y1_true.len() {
            return Err(Error::Validation(format!(
                "y0_true has {} units but y1_true has {}",
                y0_true.len(),
                y1_true.len()
            )));
        }
        check_finite("y0_true", &y0_true)?;
        check_finite("y1_true", &y1_true)?;
        Ok(Self {
            sim_id,
            y0_true,
            y1_true,
            treatment: None,
            models: Vec::new(),
            y0_hat: Vec::new(),
            y1_hat: Vec::new(),
        })
    }

    /// Attach the treatment assignment (provenance only; not used by metrics).
    pub fn with_treatment(mut self, t: Vec<u8>) -> Result<Self> {
        if t.len() != self.n_units() {
            return Err(Error::Validation(format!(
                "treatment vector has {} entries for {} units",
                t.len(),
                self.n_units()
            )));
        }
        if let Some(i) = t.iter().position(|&v| v > 1) {
            return Err(Error::Validation(format!(
                "treatment[{i}] = {}; must be 0 or 1",
                t[i]
            )));
        }
        self.treatment = Some(t);
        Ok(self)
    }

    /// Add one model's estimated potential outcomes.
    pub fn add_model(
        &mut self,
        name: impl Into<String>,
        y0_hat: Vec<f64>,
        y1_hat: Vec<f64>,
    ) -> Result<()> {
        let name = name.into();
        if self.models.iter().any(|m| *m == name) {
            return Err(Error::Validation(format!("duplicate model `{name}`")));
        }
        if y0_hat.len() != self.n_units() || y1_hat.len() != self.n_units() {
            return Err(Error::Validation(format!(
                "model `{name}` predictions have {}/{} entries for {} units",
                y0_hat.len(),
                y1_hat.len(),
                self.n_units()
            )));
        }
        check_finite(&format!("{name}_y0"), &y0_hat)?;
        check_finite(&format!("{name}_y1"), &y1_hat)?;
        self.models.push(name);
        self.y0_hat.push(y0_hat);
        self.y1_hat.push(y1_hat);
        Ok(())
    }

    pub fn sim_id(&self) -> u64 {
        self.sim_id
    }

    pub fn n_units(&self) -> usize {
        self.y0_true.len()
    }

    /// Model names in declaration order.
    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn y0_true(&self) -> &[f64] {
        &self.y0_true
    }

    pub fn y1_true(&self) -> &[f64] {
        &self.y1_true
    }

    pub fn treatment(&self) -> Option<&[u8]> {
        self.treatment.as_deref()
    }

    fn model_index(&self, model: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m == model)
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    /// `(y0_hat, y1_hat)` for one model.
    pub fn predictions(&self, model: &str) -> Result<(&[f64], &[f64])> {
        let idx = self.model_index(model)?;
        Ok((&self.y0_hat[idx], &self.y1_hat[idx]))
    }
}

/// Absolute error on the average treatment effect:
/// `|mean(y1_true - y0_true) - mean(y1_hat - y0_hat)|`.
///
/// Computed in one compensated pass over the per-unit effect residuals, so
/// the result is permutation-stable to ~1 ulp.
pub fn ate_error(table: &PotentialOutcomeTable, model: &str) -> Result<f64> {
    let (y0_hat, y1_hat) = table.predictions(model)?;
    let mut acc = CompensatedSum::new();
    for i in 0..table.n_units() {
        let ite_true = table.y1_true[i] - table.y0_true[i];
        let ite_hat = y1_hat[i] - y0_hat[i];
        acc.add(ite_true - ite_hat);
    }
    Ok((acc.total() / table.n_units() as f64).abs())
}

/// Mean squared error between true and estimated per-unit effects.
///
/// This is the mean of squares, not its root; a root may be displayed in
/// reports for comparability but is never used in rankings.
pub fn pehe(table: &PotentialOutcomeTable, model: &str) -> Result<f64> {
    let (y0_hat, y1_hat) = table.predictions(model)?;
    let mut acc = CompensatedSum::new();
    for i in 0..table.n_units() {
        let ite_true = table.y1_true[i] - table.y0_true[i];
        let ite_hat = y1_hat[i] - y0_hat[i];
        let r = ite_true - ite_hat;
        acc.add(r * r);
    }
    Ok(acc.total() / table.n_units() as f64)
}

/// An n_sims x n_models grid of nonnegative error scores for one metric.
///
/// Row order follows the simulation input order and column order follows
/// model declaration order, so repeated runs produce identical layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    metric: Metric,
    models: Vec<String>,
    sims: Vec<u64>,
    values: Vec<Vec<f64>>,
}

impl ErrorMatrix {
    pub fn new(
        metric: Metric,
        models: Vec<String>,
        sims: Vec<u64>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::Validation(format!(
                "error matrix needs at least 2 models, got {}",
                models.len()
            )));
        }
        if sims.is_empty() {
            return Err(Error::Validation("error matrix has no simulations".into()));
        }
        if values.len() != sims.len() {
            return Err(Error::Validation(format!(
                "{} value rows for {} simulations",
                values.len(),
                sims.len()
            )));
        }
        let unique: BTreeSet<&String> = models.iter().collect();
        if unique.len() != models.len() {
            return Err(Error::Validation("duplicate model names".into()));
        }
        for (s, row) in values.iter().enumerate() {
            if row.len() != models.len() {
                return Err(Error::Validation(format!(
                    "row {s} has {} entries for {} models",
                    row.len(),
                    models.len()
                )));
            }
            for (m, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "value[{s}][{m}] is {v}; NaN/Inf are rejected"
                    )));
                }
                if v < 0.0 {
                    return Err(Error::Validation(format!(
                        "value[{s}][{m}] = {v} is negative; error scores must be >= 0"
                    )));
                }
            }
        }
        Ok(Self {
            metric,
            models,
            sims,
            values,
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn sims(&self) -> &[u64] {
        &self.sims
    }

    pub fn n_sims(&self) -> usize {
        self.sims.len()
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, sim: usize, model: usize) -> f64 {
        self.values[sim][model]
    }

    pub fn model_index(&self, model: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m == model)
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    /// Column means, in model order.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.n_models())
            .map(|m| {
                let mut acc = CompensatedSum::new();
                for row in &self.values {
                    acc.add(row[m]);
                }
                acc.total() / self.n_sims() as f64
            })
            .collect()
    }
}

/// Assemble an `ErrorMatrix` by evaluating one metric on every table.
///
/// Simulations keep their input order; model columns follow the declaration
/// order of the first table. Every table must expose the same model set.
pub fn build_error_matrix(tables: &[PotentialOutcomeTable], metric: Metric) -> Result<ErrorMatrix> {
    if tables.is_empty() {
        return Err(Error::Validation(
            "cannot build an error matrix from zero tables".into(),
        ));
    }
    let models = tables[0].models().to_vec();
    let reference: BTreeSet<&String> = models.iter().collect();
    let mut offenders = Vec::new();
    for table in tables {
        let set: BTreeSet<&String> = table.models().iter().collect();
        if set != reference {
            offenders.push(table.sim_id());
        }
    }
    if !offenders.is_empty() {
        return Err(Error::Validation(format!(
            "inconsistent model sets across tables; offending sim ids: {offenders:?}"
        )));
    }

    let mut sims = Vec::with_capacity(tables.len());
    let mut values = Vec::with_capacity(tables.len());
    for table in tables {
        let mut row = Vec::with_capacity(models.len());
        for model in &models {
            let v = match metric {
                Metric::AteAbs => ate_error(table, model)?,
                Metric::Pehe => pehe(table, model)?,
            };
            row.push(v);
        }
        sims.push(table.sim_id());
        values.push(row);
    }
    ErrorMatrix::new(metric, models, sims, values)
}

// ---------------------------------------------------------------------------
// CSV ingestion format A: one file per simulation with header
// `unit,t,y0_true,y1_true,<model>_y0,<model>_y1,...`
// ---------------------------------------------------------------------------

fn parse_field(path: &Path, line: usize, name: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse `{raw}` as a number for column {name}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("column {name} is {v}; NaN/Inf are rejected at ingestion"),
        });
    }
    Ok(v)
}

/// Read one simulation's potential outcomes from a format-A CSV.
///
/// The file may declare zero or more models; pairs of `<model>_y0` and
/// `<model>_y1` columns must be adjacent and complete.
pub fn read_outcome_table_csv(path: &Path, sim_id: u64) -> Result<PotentialOutcomeTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols[0] != "unit" || cols[1] != "t" || cols[2] != "y0_true" || cols[3] != "y1_true" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!(
                "header must start with `unit,t,y0_true,y1_true`, found `{}`",
                cols.join(",")
            ),
        });
    }
    let mut models = Vec::new();
    let mut i = 4;
    while i < cols.len() {
        let c0 = cols[i];
        let name = c0.strip_suffix("_y0").ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected a `<model>_y0` column, found `{c0}`"),
        })?;
        let want = format!("{name}_y1");
        if i + 1 >= cols.len() || cols[i + 1] != want {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("column `{c0}` must be followed by `{want}`"),
            });
        }
        models.push(name.to_string());
        i += 2;
    }

    let mut t = Vec::new();
    let mut y0_true = Vec::new();
    let mut y1_true = Vec::new();
    let mut y0_hat: Vec<Vec<f64>> = vec![Vec::new(); models.len()];
    let mut y1_hat: Vec<Vec<f64>> = vec![Vec::new(); models.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // 1-based, after the header
        let record = record?;
        if record.len() != cols.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected {} fields, found {}", cols.len(), record.len()),
            });
        }
        let t_raw = record.get(1).unwrap_or("");
        let t_val: u8 = match t_raw.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("treatment must be 0 or 1, found `{other}`"),
                })
            }
        };
        t.push(t_val);
        y0_true.push(parse_field(path, line, "y0_true", record.get(2).unwrap())?);
        y1_true.push(parse_field(path, line, "y1_true", record.get(3).unwrap())?);
        for (m, model) in models.iter().enumerate() {
            let f0 = record.get(4 + 2 * m).unwrap();
            let f1 = record.get(5 + 2 * m).unwrap();
            y0_hat[m].push(parse_field(path, line, &format!("{model}_y0"), f0)?);
            y1_hat[m].push(parse_field(path, line, &format!("{model}_y1"), f1)?);
        }
    }
    if y0_true.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "file contains a header but no data rows".into(),
        });
    }

    let mut table = PotentialOutcomeTable::new(sim_id, y0_true, y1_true)?.with_treatment(t)?;
    for (m, model) in models.into_iter().enumerate() {
        table.add_model(
            model,
            std::mem::take(&mut y0_hat[m]),
            std::mem::take(&mut y1_hat[m]),
        )?;
    }
    Ok(table)
}

/// Write one table in format A. Requires treatment indicators.
pub fn write_outcome_table_csv(table: &PotentialOutcomeTable, path: &Path) -> Result<()> {
    let t = table.treatment().ok_or_else(|| {
        Error::Validation("format A requires treatment indicators on the table".into())
    })?;
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![
        "unit".to_string(),
        "t".to_string(),
        "y0_true".to_string(),
        "y1_true".to_string(),
    ];
    for model in table.models() {
        header.push(format!("{model}_y0"));
        header.push(format!("{model}_y1"));
    }
    writer.write_record(&header)?;
    for i in 0..table.n_units() {
        let mut record = vec![
            i.to_string(),
            t[i].to_string(),
            table.y0_true()[i].to_string(),
            table.y1_true()[i].to_string(),
        ];
        for model in table.models() {
            let (y0, y1) = table.predictions(model)?;
            record.push(y0[i].to_string());
            record.push(y1[i].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV ingestion format B: precomputed error scores, header
// `sim,<model1>,<model2>,...`
// ---------------------------------------------------------------------------

/// Load a precomputed error matrix from a format-B CSV.
pub fn read_error_matrix_csv(path: &Path, metric: Metric) -> Result<ErrorMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "sim" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!(
                "header must be `sim,<model1>,<model2>,...` with at least 2 models, found `{}`",
                cols.join(",")
            ),
        });
    }
    let models: Vec<String> = cols[1..].iter().map(|c| c.to_string()).collect();
    let mut sims = Vec::new();
    let mut values = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2;
        let record = record?;
        if record.len() != cols.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected {} fields, found {}", cols.len(), record.len()),
            });
        }
        let sim: u64 = record.get(0).unwrap().trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("cannot parse sim id `{}`", record.get(0).unwrap()),
        })?;
        let mut row = Vec::with_capacity(models.len());
        for (m, model) in models.iter().enumerate() {
            let v = parse_field(path, line, model, record.get(m + 1).unwrap())?;
            if v < 0.0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("column {model} is negative ({v}); error scores must be >= 0"),
                });
            }
            row.push(v);
        }
        sims.push(sim);
        values.push(row);
    }
    ErrorMatrix::new(metric, models, sims, values)
}

/// Write an error matrix in format B.
pub fn write_error_matrix_csv(matrix: &ErrorMatrix, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["sim".to_string()];
    header.extend(matrix.models().iter().cloned());
    writer.write_record(&header)?;
    for (s, row) in matrix.rows().iter().enumerate() {
        let mut record = vec![matrix.sims()[s].to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_2x2() -> PotentialOutcomeTable {
        let mut t = PotentialOutcomeTable::new(0, vec![1.0, 2.0], vec![3.0, 2.0]).unwrap();
        t.add_model("m", vec![1.0, 2.0], vec![2.5, 2.0]).unwrap();
        t
    }

    #[test]
    fn ate_error_worked_example() {
        let t = table_2x2();
        assert_eq!(ate_error(&t, "m").unwrap(), 0.25);
    }

    #[test]
    fn ate_error_perfect_estimator_is_zero() {
        let mut t = PotentialOutcomeTable::new(0, vec![1.0, 2.0, -3.0], vec![0.5, 7.0, 1.0]).unwrap();
        t.add_model("m", vec![1.0, 2.0, -3.0], vec![0.5, 7.0, 1.0]).unwrap();
        assert_eq!(ate_error(&t, "m").unwrap(), 0.0);
        assert_eq!(pehe(&t, "m").unwrap(), 0.0);
    }

    #[test]
    fn ate_error_sign_flip() {
        let mut t = PotentialOutcomeTable::new(0, vec![0.0], vec![1.0]).unwrap();
        t.add_model("m", vec![1.0], vec![0.0]).unwrap();
        assert_eq!(ate_error(&t, "m").unwrap(), 2.0);
    }

    #[test]
    fn pehe_worked_example() {
        let t = table_2x2();
        assert_eq!(pehe(&t, "m").unwrap(), 0.125);
    }

    #[test]
    fn pehe_unit_residuals() {
        let mut t = PotentialOutcomeTable::new(0, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        t.add_model("m", vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(pehe(&t, "m").unwrap(), 1.0);
    }

    #[test]
    fn unknown_model_is_a_lookup_error() {
        let t = table_2x2();
        assert!(matches!(ate_error(&t, "nope"), Err(Error::UnknownModel(_))));
        assert!(matches!(pehe(&t, "nope"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn nan_is_rejected_at_construction() {
        assert!(PotentialOutcomeTable::new(0, vec![f64::NAN], vec![1.0]).is_err());
        let mut t = PotentialOutcomeTable::new(0, vec![0.0], vec![1.0]).unwrap();
        assert!(t.add_model("m", vec![f64::INFINITY], vec![0.0]).is_err());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(PotentialOutcomeTable::new(0, vec![0.0, 1.0], vec![1.0]).is_err());
        let mut t = PotentialOutcomeTable::new(0, vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(t.add_model("m", vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(t.clone().with_treatment(vec![0]).is_err());
        assert!(t.with_treatment(vec![0, 2]).is_err());
    }

    /// Build a table whose ate_error for model `m` equals `err` exactly.
    fn table_with_errors(sim_id: u64, errs: &[(&str, f64)]) -> PotentialOutcomeTable {
        let mut t = PotentialOutcomeTable::new(sim_id, vec![0.0], vec![0.0]).unwrap();
        for (name, err) in errs {
            t.add_model(*name, vec![*err], vec![0.0]).unwrap();
        }
        t
    }

    #[test]
    fn build_error_matrix_assembles_rows_in_order() {
        let tables = vec![
            table_with_errors(10, &[("a", 1.0), ("b", 2.0)]),
            table_with_errors(11, &[("a", 4.0), ("b", 2.0)]),
        ];
        let m = build_error_matrix(&tables, Metric::AteAbs).unwrap();
        assert_eq!(m.models(), &["a".to_string(), "b".to_string()]);
        assert_eq!(m.sims(), &[10, 11]);
        assert_eq!(m.rows(), &[vec![1.0, 2.0], vec![4.0, 2.0]]);
    }

    #[test]
    fn build_error_matrix_rejects_empty_input() {
        assert!(build_error_matrix(&[], Metric::Pehe).is_err());
    }

    #[test]
    fn build_error_matrix_lists_offending_sims() {
        let tables = vec![
            table_with_errors(0, &[("a", 1.0), ("b", 2.0)]),
            table_with_errors(7, &[("a", 1.0), ("c", 2.0)]),
        ];
        let err = build_error_matrix(&tables, Metric::AteAbs).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('7'), "offender sim id missing: {msg}");
    }

    #[test]
    fn perfect_model_gives_zero_row() {
        let mut t = PotentialOutcomeTable::new(0, vec![1.0, 2.0], vec![2.0, 5.0]).unwrap();
        t.add_model("perfect", vec![1.0, 2.0], vec![2.0, 5.0]).unwrap();
        t.add_model("off", vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let m = build_error_matrix(&[t], Metric::Pehe).unwrap();
        assert_eq!(m.value(0, 0), 0.0);
        assert!(m.value(0, 1) > 0.0);
    }

    #[test]
    fn error_matrix_rejects_negative_and_single_model() {
        assert!(ErrorMatrix::new(
            Metric::AteAbs,
            vec!["a".into(), "b".into()],
            vec![0],
            vec![vec![1.0, -0.5]],
        )
        .is_err());
        assert!(ErrorMatrix::new(Metric::AteAbs, vec!["a".into()], vec![0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn format_a_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim0.csv");
        let mut table = PotentialOutcomeTable::new(3, vec![0.25, -1.5], vec![1.0, 0.125])
            .unwrap()
            .with_treatment(vec![1, 0])
            .unwrap();
        table.add_model("m1", vec![0.3, -1.25], vec![0.9, 0.0]).unwrap();
        table.add_model("m2", vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        write_outcome_table_csv(&table, &path).unwrap();
        let back = read_outcome_table_csv(&path, 3).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn format_a_rejects_bad_headers_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "unit,t,y0_true,y1_true,m_y0\n0,0,1,2,3\n").unwrap();
        assert!(matches!(
            read_outcome_table_csv(&path, 0),
            Err(Error::Parse { line: 1, .. })
        ));
        std::fs::write(&path, "unit,t,y0_true,y1_true\n0,2,1,2\n").unwrap();
        assert!(matches!(
            read_outcome_table_csv(&path, 0),
            Err(Error::Parse { line: 2, .. })
        ));
        std::fs::write(&path, "unit,t,y0_true,y1_true\n0,1,NaN,2\n").unwrap();
        assert!(read_outcome_table_csv(&path, 0).is_err());
    }

    #[test]
    fn format_b_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("err.csv");
        let m = ErrorMatrix::new(
            Metric::Pehe,
            vec!["a".into(), "b".into(), "c".into()],
            vec![0, 1, 2],
            vec![
                vec![0.1, 0.2, 0.3],
                vec![0.3, 0.2, 0.1],
                vec![0.1, 0.1, 0.2],
            ],
        )
        .unwrap();
        write_error_matrix_csv(&m, &path).unwrap();
        let back = read_error_matrix_csv(&path, Metric::Pehe).unwrap();
        assert_eq!(back, m);

        std::fs::write(&path, "sim,a,b\n0,1.0,-2.0\n").unwrap();
        let err = read_error_matrix_csv(&path, Metric::Pehe).unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    proptest! {
        #[test]
        fn metrics_are_permutation_invariant(
            data in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 1..40),
            seed in 0u64..1000,
        ) {
            let y0t: Vec<f64> = data.iter().map(|d| d.0).collect();
            let y1t: Vec<f64> = data.iter().map(|d| d.1).collect();
            let y0h: Vec<f64> = data.iter().map(|d| d.2).collect();
            let y1h: Vec<f64> = data.iter().map(|d| d.3).collect();

            let mut table = PotentialOutcomeTable::new(0, y0t.clone(), y1t.clone()).unwrap();
            table.add_model("m", y0h.clone(), y1h.clone()).unwrap();

            // Deterministic shuffle of unit order.
            let n = data.len();
            let mut order: Vec<usize> = (0..n).collect();
            let mut state = seed.wrapping_add(1);
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                order.swap(i, j);
            }
            let pick = |v: &[f64]| -> Vec<f64> { order.iter().map(|&i| v[i]).collect() };
            let mut permuted = PotentialOutcomeTable::new(0, pick(&y0t), pick(&y1t)).unwrap();
            permuted.add_model("m", pick(&y0h), pick(&y1h)).unwrap();

            let (a1, a2) = (ate_error(&table, "m").unwrap(), ate_error(&permuted, "m").unwrap());
            let (p1, p2) = (pehe(&table, "m").unwrap(), pehe(&permuted, "m").unwrap());
            prop_assert!((a1 - a2).abs() <= 1e-13 * a1.abs().max(1.0));
            prop_assert!((p1 - p2).abs() <= 1e-13 * p1.abs().max(1.0));
        }

        #[test]
        fn jensen_inequality_holds(
            data in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 1..40),
        ) {
            let mut table = PotentialOutcomeTable::new(
                0,
                data.iter().map(|d| d.0).collect(),
                data.iter().map(|d| d.1).collect(),
            ).unwrap();
            table.add_model(
                "m",
                data.iter().map(|d| d.2).collect(),
                data.iter().map(|d| d.3).collect(),
            ).unwrap();
            let a = ate_error(&table, "m").unwrap();
            let p = pehe(&table, "m").unwrap();
            prop_assert!(a * a <= p + 1e-12, "ate^2 = {} > pehe = {}", a * a, p);
        }

        #[test]
        fn constant_shift_of_predictions_changes_nothing(
            data in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 1..30),
            c in -100.0f64..100.0,
        ) {
            let y0h: Vec<f64> = data.iter().map(|d| d.2).collect();
            let y1h: Vec<f64> = data.iter().map(|d| d.3).collect();
            let mut base = PotentialOutcomeTable::new(
                0,
                data.iter().map(|d| d.0).collect(),
                data.iter().map(|d| d.1).collect(),
            ).unwrap();
            let mut shifted = base.clone();
            base.add_model("m", y0h.clone(), y1h.clone()).unwrap();
            shifted.add_model(
                "m",
                y0h.iter().map(|v| v + c).collect(),
                y1h.iter().map(|v| v + c).collect(),
            ).unwrap();
            let (a1, a2) = (ate_error(&base, "m").unwrap(), ate_error(&shifted, "m").unwrap());
            let (p1, p2) = (pehe(&base, "m").unwrap(), pehe(&shifted, "m").unwrap());
            prop_assert!((a1 - a2).abs() <= 1e-9 * a1.abs().max(1.0));
            prop_assert!((p1 - p2).abs() <= 1e-9 * p1.abs().max(1.0));
        }
    }
}
