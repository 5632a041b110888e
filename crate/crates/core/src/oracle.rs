//! Slow, independent reference implementations used only to check the fast
//! code paths: exhaustive enumeration, vertex enumeration, threshold sweeps
//! and finite differences.

use ndarray::Array2;

use crate::mip::{Assignment, MipInstance, Relation};
use crate::predictor::metrics::PROB_CLAMP;

/// Optimum over all `2^n` assignments, keeping the first one found on ties
/// (enumeration order is the binary counter with variable 0 as lowest bit).
pub fn brute_force(inst: &MipInstance) -> Option<(Assignment, f64)> {
    let n = inst.nvars;
    assert!(n <= 24, "brute force limited to 24 variables");
    let mut best: Option<(u64, f64)> = None;
    let mut x = vec![0.0; n];
    for mask in 0..(1u64 << n) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = ((mask >> j) & 1) as f64;
        }
        let ok = inst.rows.iter().all(|r| {
            let lhs: f64 = r.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            match r.relation {
                Relation::Le => lhs <= r.rhs + 1e-9,
                Relation::Ge => lhs >= r.rhs - 1e-9,
                Relation::Eq => (lhs - r.rhs).abs() <= 1e-9,
            }
        });
        if !ok {
            continue;
        }
        let obj: f64 = inst.obj.iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.is_none_or(|(_, b)| inst.sense.improves(obj, b, 0.0)) {
            best = Some((mask, obj));
        }
    }
    best.map(|(mask, obj)| (Assignment::from_bools((0..n).map(|j| (mask >> j) & 1 == 1)), obj))
}

/// LP relaxation optimum by enumerating every basic solution of the system
/// formed by the rows and the bounds `0 <= x <= 1`. Exponential; tiny
/// instances only. `None` when the relaxation is infeasible.
pub fn lp_vertex_enumeration(inst: &MipInstance) -> Option<f64> {
    let n = inst.nvars;
    // Each candidate tight constraint as a dense (a, b) with a·x = b.
    let mut tight: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &inst.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coefs {
            a[j] = v;
        }
        tight.push((a, r.rhs));
    }
    for j in 0..n {
        for b in [0.0, 1.0] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            tight.push((a, b));
        }
    }
    let feasible = |x: &[f64]| {
        x.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v))
            && inst.rows.iter().all(|r| {
                let lhs: f64 = r.coefs.iter().map(|&(j, a)| a * x[j]).sum();
                match r.relation {
                    Relation::Le => lhs <= r.rhs + 1e-9,
                    Relation::Ge => lhs >= r.rhs - 1e-9,
                    Relation::Eq => (lhs - r.rhs).abs() <= 1e-9,
                }
            })
    };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    combinations(tight.len(), n, &mut pick, &mut |idx| {
        let mut m: Vec<Vec<f64>> = idx
            .iter()
            .map(|&k| {
                let mut row = tight[k].0.clone();
                row.push(tight[k].1);
                row
            })
            .collect();
        if let Some(x) = gauss_solve(&mut m, n) {
            if feasible(&x) {
                let obj: f64 = inst.obj.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.is_none_or(|b| inst.sense.improves(obj, b, 0.0)) {
                    best = Some(obj);
                }
            }
        }
    });
    best
}

fn combinations(total: usize, k: usize, pick: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        visit(pick);
        return;
    }
    let start = pick.last().map_or(0, |&l| l + 1);
    for i in start..total {
        if total - i < k - pick.len() {
            break;
        }
        pick.push(i);
        combinations(total, k, pick, visit);
        pick.pop();
    }
}

/// Solves the square system held as an augmented matrix; `None` if singular.
fn gauss_solve(m: &mut [Vec<f64>], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (x, p) in m[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Average precision by sweeping every distinct score as a threshold:
/// predicted positives are those scoring at least the threshold, and each
/// threshold contributes its precision times the recall it adds.
pub fn average_precision_sweep(p: &[f64], y: &[f64]) -> Option<f64> {
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    if positives == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = p.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let predicted = p.iter().filter(|&&v| v >= t).count();
        let hits = p.iter().zip(y).filter(|(&v, &l)| v >= t && l > 0.5).count();
        let recall = hits as f64 / positives as f64;
        let precision = hits as f64 / predicted as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

/// Mean clamped cross-entropy of a GCN written with dense matrices, applying
/// the same layer rule as the model: `act(L·H·W + H)` with the residual only
/// on square non-output layers, ReLU inside and sigmoid at the output.
pub fn gcn_loss_dense(weights: &[Array2<f64>], lap: &Array2<f64>, x: &Array2<f64>, y: &[f64]) -> f64 {
    let mut h = x.clone();
    let last = weights.len() - 1;
    for (l, w) in weights.iter().enumerate() {
        let mut z = lap.dot(&h).dot(w);
        if l != last && w.nrows() == w.ncols() {
            z += &h;
        }
        h = if l == last {
            z.mapv(|v| 1.0 / (1.0 + (-v).exp()))
        } else {
            z.mapv(|v| v.max(0.0))
        };
    }
    let n = y.len() as f64;
    h.column(0)
        .iter()
        .zip(y)
        .map(|(&p, &t)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

/// Central finite-difference gradient of `loss` with respect to every entry
/// of every weight matrix.
pub fn finite_difference_gradients(
    weights: &[Array2<f64>],
    h: f64,
    loss: impl Fn(&[Array2<f64>]) -> f64,
) -> Vec<Array2<f64>> {
    let mut work = weights.to_vec();
    let mut grads = Vec::with_capacity(weights.len());
    for l in 0..weights.len() {
        let mut g = Array2::zeros(weights[l].raw_dim());
        for idx in ndarray::indices(weights[l].raw_dim()) {
            let orig = work[l][idx];
            work[l][idx] = orig + h;
            let up = loss(&work);
            work[l][idx] = orig - h;
            let down = loss(&work);
            work[l][idx] = orig;
            g[idx] = (up - down) / (2.0 * h);
        }
        grads.push(g);
    }
    grads
}
