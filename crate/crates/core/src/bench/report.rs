//! Per-instance heuristic rows and their aggregation into report rows.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::bench::dataset::ensure_parent;
use crate::error::{Error, Result};

/// Shift used by every report aggregate.
pub const GEOMEAN_SHIFT: f64 = 1.0;

/// `exp(mean(ln(x + s))) - s`; `None` for an empty input or a value at or
/// below `-s`.
pub fn shifted_geomean(values: &[f64], shift: f64) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| v + shift <= 0.0) {
        return None;
    }
    let mean_log = values.iter().map(|&v| (v + shift).ln()).sum::<f64>() / values.len() as f64;
    Some(mean_log.exp() - shift)
}

/// Rounds seconds to the reported 1 ms resolution.
pub fn ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// One heuristic run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub method: String,
    pub scale: String,
    pub seed: u64,
    pub nvars: usize,
    pub first_objective: Option<f64>,
    /// Includes prediction time for model-driven methods.
    pub first_time_s: Option<f64>,
    pub best_objective: Option<f64>,
    /// Includes prediction time for model-driven methods.
    pub best_time_s: Option<f64>,
    pub prediction_time_s: f64,
    pub total_time_s: f64,
    pub nodes: usize,
    pub backtracks: usize,
    pub calls: usize,
    pub optimum: Option<f64>,
}

impl InstanceRow {
    pub fn feasible(&self) -> bool {
        self.best_objective.is_some()
    }
}

/// Aggregate over the instances of one method and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub scale: String,
    pub instances: usize,
    /// Over instances with at least one feasible solution.
    pub best_objective: Option<f64>,
    /// Over instances with at least one feasible solution.
    pub best_time_s: Option<f64>,
    pub n_no_feasible: usize,
    pub calls: f64,
    pub total_time_s: f64,
}

impl ReportRow {
    /// Fields that do not depend on wall-clock time.
    pub fn non_timing(&self) -> (String, String, usize, Option<f64>, usize, f64) {
        (
            self.method.clone(),
            self.scale.clone(),
            self.instances,
            self.best_objective,
            self.n_no_feasible,
            self.calls,
        )
    }
}

/// Pure function of the rows, which must share one method and scale.
pub fn aggregate(rows: &[InstanceRow]) -> Result<ReportRow> {
    let first = rows.first().ok_or(Error::EmptyDataset)?;
    if rows.iter().any(|r| r.method != first.method || r.scale != first.scale) {
        return Err(Error::InvalidArgument("rows mix methods or scales".into()));
    }
    let feasible: Vec<&InstanceRow> = rows.iter().filter(|r| r.feasible()).collect();
    let objs: Vec<f64> = feasible.iter().filter_map(|r| r.best_objective).collect();
    let times: Vec<f64> = feasible.iter().filter_map(|r| r.best_time_s).collect();
    let calls: Vec<f64> = rows.iter().map(|r| r.calls as f64).collect();
    let totals: Vec<f64> = rows.iter().map(|r| r.total_time_s).collect();
    Ok(ReportRow {
        method: first.method.clone(),
        scale: first.scale.clone(),
        instances: rows.len(),
        best_objective: shifted_geomean(&objs, GEOMEAN_SHIFT),
        best_time_s: shifted_geomean(&times, GEOMEAN_SHIFT).map(ms),
        n_no_feasible: rows.len() - feasible.len(),
        calls: shifted_geomean(&calls, GEOMEAN_SHIFT).unwrap_or(0.0),
        total_time_s: ms(shifted_geomean(&totals, GEOMEAN_SHIFT).unwrap_or(0.0)),
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::parse(path, e))).collect()
}
