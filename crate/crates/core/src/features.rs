//! Per-variable features extracted from the formulation and the root LP.

use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::lp::{lp_relax, lp_relax_capped, LpResult, LpStatus};
use crate::mip::{Assignment, MipInstance};

/// Pseudo cost assigned when fixing a variable makes the LP infeasible.
pub const INFEASIBLE_PSEUDOCOST: f64 = 1e6;
/// Simplex iteration cap for each strong-branching child LP.
pub const DEFAULT_PSEUDOCOST_ITER_CAP: usize = 50;
const FRACTIONAL_TOL: f64 = 1e-6;

const STAT_SUFFIXES: [&str; 5] = ["sum", "mean", "std", "max", "min"];

/// Column names, in matrix order.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = [
        "obj",
        "obj_pos",
        "obj_neg",
        "n_coef_nonzero",
        "n_coef_pos",
        "n_coef_neg",
        "lp_value",
        "lp_frac_down",
        "lp_frac_up",
        "lp_is_fractional",
        "pseudo_up",
        "pseudo_down",
        "pseudo_ratio",
        "pseudo_sum",
        "pseudo_product",
        "reduced_cost",
        "lower_bound",
        "upper_bound",
        "row_degree_mean",
        "row_degree_std",
        "row_degree_min",
        "row_degree_max",
        "lhs_rhs_ratio_max",
        "lhs_rhs_ratio_min",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for group in ["coef_pos", "coef_neg", "coef_unit", "coef_dual", "coef_invsum"] {
        for stat in STAT_SUFFIXES {
            names.push(format!("{group}_{stat}"));
        }
    }
    names
}

pub fn num_features() -> usize {
    NUM_FEATURES
}

pub const NUM_FEATURES: usize = 49;

/// Root LP plus strong-branching pseudo costs.
#[derive(Debug, Clone)]
pub struct RootStats {
    pub lp: LpResult,
    pub pseudo_up: Vec<f64>,
    pub pseudo_down: Vec<f64>,
}

impl RootStats {
    pub fn compute(inst: &MipInstance, iter_cap: usize) -> Result<Self> {
        let lp = lp_relax(inst, &Assignment::free(inst.nvars))?;
        if lp.status != LpStatus::Optimal {
            return Err(Error::InfeasibleRoot);
        }
        let (pseudo_up, pseudo_down) = root_pseudocosts(inst, &lp, iter_cap)?;
        Ok(RootStats {
            lp,
            pseudo_up,
            pseudo_down,
        })
    }
}

fn is_fractional(v: f64) -> bool {
    (v - v.round()).abs() > FRACTIONAL_TOL
}

/// Up/down pseudo costs from capped strong branching at the root: objective
/// degradation (in minimization terms) of the child LP, per unit of change in
/// the variable. Variables integral at the root get `(1, 1)`.
///
/// A child that hits the cap after reaching feasibility contributes its
/// current objective; one that is still in phase one is scored with `|c_j|`,
/// the degradation implied by the objective coefficient alone.
pub fn root_pseudocosts(
    inst: &MipInstance,
    root: &LpResult,
    iter_cap: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if root.status != LpStatus::Optimal {
        return Err(Error::InfeasibleRoot);
    }
    let sign = inst.sense.sign();
    let root_obj = sign * root.objective;
    let free = Assignment::free(inst.nvars);
    let child = |j: usize, value: bool, distance: f64| -> Result<f64> {
        let lp = lp_relax_capped(inst, &free.with(j, value), Some(iter_cap))?;
        Ok(match lp.status {
            LpStatus::Infeasible => INFEASIBLE_PSEUDOCOST,
            LpStatus::IterationLimit if !lp.primal_feasible => inst.obj[j].abs(),
            _ => ((sign * lp.objective - root_obj) / distance).max(0.0),
        })
    };
    let costs: Vec<(f64, f64)> = (0..inst.nvars)
        .into_par_iter()
        .map(|j| {
            let x = root.primal[j];
            if !is_fractional(x) {
                return Ok((1.0, 1.0));
            }
            Ok((child(j, true, 1.0 - x)?, child(j, false, x)?))
        })
        .collect::<Result<_>>()?;
    Ok(costs.into_iter().unzip())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    /// `nvars × nfeat`.
    pub values: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct FeatureDump {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn nvars(&self) -> usize {
        self.values.nrows()
    }

    pub fn nfeat(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.values.column(k).to_vec())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let dump = FeatureDump {
            names: self.names.clone(),
            rows: self.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        io::write_json(path, &dump)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let dump: FeatureDump = io::read_json(path)?;
        let ncols = dump.names.len();
        if dump.rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::parse(path, "feature row width does not match names"));
        }
        let flat: Vec<f64> = dump.rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((dump.rows.len(), ncols), flat)
            .map_err(|e| Error::parse(path, e))?;
        Ok(FeatureMatrix {
            names: dump.names,
            values,
        })
    }
}

/// `(sum, mean, std, max, min)`, all zero for an empty sample.
fn stats(xs: &[f64]) -> [f64; 5] {
    if xs.is_empty() {
        return [0.0; 5];
    }
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    let mean = sum / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    [sum, mean, var.sqrt(), max, min]
}

/// Raw (unnormalized) feature matrix.
pub fn extract_features(inst: &MipInstance, rs: &RootStats) -> Result<FeatureMatrix> {
    if rs.lp.status != LpStatus::Optimal {
        return Err(Error::InfeasibleRoot);
    }
    let n = inst.nvars;
    // Column-wise view of the rows: (row, coef) per variable.
    let mut occurs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in inst.rows.iter().enumerate() {
        for &(j, a) in &row.coefs {
            occurs[j].push((i, a));
        }
    }
    let row_abs_sum: Vec<f64> = inst
        .rows
        .iter()
        .map(|r| r.coefs.iter().map(|&(_, a)| a.abs()).sum())
        .collect();

    let mut values = Array2::zeros((n, NUM_FEATURES));
    for j in 0..n {
        let mut f = Vec::with_capacity(NUM_FEATURES);
        let c = inst.obj[j];
        f.extend([c, c.max(0.0), (-c).max(0.0)]);

        let pos: Vec<f64> = occurs[j].iter().map(|&(_, a)| a).filter(|&a| a > 0.0).collect();
        let neg: Vec<f64> = occurs[j].iter().map(|&(_, a)| a).filter(|&a| a < 0.0).map(f64::abs).collect();
        f.extend([occurs[j].len() as f64, pos.len() as f64, neg.len() as f64]);

        let x = rs.lp.primal[j];
        f.extend([x, x - x.floor(), x.ceil() - x, if is_fractional(x) { 1.0 } else { 0.0 }]);

        let (up, down) = (rs.pseudo_up[j], rs.pseudo_down[j]);
        let ratio = if down > 0.0 {
            up / down
        } else if up > 0.0 {
            INFEASIBLE_PSEUDOCOST
        } else {
            0.0
        };
        f.extend([up, down, ratio, up + down, up * down, rs.lp.reduced_costs[j]]);

        f.extend([0.0, 1.0]);

        let degrees: Vec<f64> = occurs[j].iter().map(|&(i, _)| inst.rows[i].coefs.len() as f64).collect();
        let [_, mean, std, max, min] = stats(&degrees);
        f.extend([mean, std, min, max]);

        let ratios: Vec<f64> = occurs[j]
            .iter()
            .map(|&(i, a)| {
                let rhs = inst.rows[i].rhs;
                if rhs == 0.0 { 0.0 } else { a / rhs }
            })
            .collect();
        let [_, _, _, rmax, rmin] = stats(&ratios);
        f.extend([rmax, rmin]);

        f.extend(stats(&pos));
        f.extend(stats(&neg));

        let unit: Vec<f64> = occurs[j].iter().map(|&(_, a)| a).collect();
        let dual: Vec<f64> = occurs[j].iter().map(|&(i, a)| rs.lp.duals[i] * a).collect();
        let invsum: Vec<f64> = occurs[j].iter().map(|&(i, a)| a / row_abs_sum[i]).collect();
        f.extend(stats(&unit));
        f.extend(stats(&dual));
        f.extend(stats(&invsum));

        debug_assert_eq!(f.len(), NUM_FEATURES);
        for (k, v) in f.into_iter().enumerate() {
            values[[j, k]] = if v.is_finite() { v } else { 0.0 };
        }
    }
    Ok(FeatureMatrix {
        names: feature_names(),
        values,
    })
}

/// Per-column `(v - min) / (max - min)`; constant columns become 0.
pub fn minmax_normalize(f: &FeatureMatrix) -> FeatureMatrix {
    let mut values = f.values.clone();
    for mut col in values.columns_mut() {
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        if range > 0.0 && range.is_finite() {
            col.mapv_inplace(|v| ((v - min) / range).clamp(0.0, 1.0));
        } else {
            col.fill(0.0);
        }
    }
    FeatureMatrix {
        names: f.names.clone(),
        values,
    }
}

/// Root statistics, raw extraction, and normalization in one call.
pub fn instance_features(inst: &MipInstance) -> Result<FeatureMatrix> {
    let rs = RootStats::compute(inst, DEFAULT_PSEUDOCOST_ITER_CAP)?;
    Ok(minmax_normalize(&extract_features(inst, &rs)?))
}
