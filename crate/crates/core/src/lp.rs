//! LP relaxation of a binary MIP under partial fixings.
//!
//! Bounded-variable primal simplex on a dense tableau. Fixed variables are
//! substituted out before the tableau is built, rows left without free
//! variables are checked directly, `>=` rows are negated into `<=` form and
//! `=` rows become a `<=`/`>=` pair. Phase one minimizes the sum of
//! artificial variables added for rows violated at the all-zero start.
//!
//! Pricing is Dantzig (largest reduced cost) until `5 * (n + m)` iterations,
//! then Bland's rule. Every tie is broken by lowest column index, so identical
//! input gives a bitwise-identical result.

use crate::error::{Error, Result};
use crate::mip::{dot, Assignment, MipInstance, Relation};

pub const PRIMAL_FEAS_TOL: f64 = 1e-7;
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-12;
const DROP_TOL: f64 = 1e-13;
const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Only produced when an iteration cap is given.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Values in `[0, 1]`; fixed variables carry their fixed value exactly.
    pub primal: Vec<f64>,
    /// `c·primal` in the instance's own sense; `±inf` (the worst value for the
    /// sense) when infeasible.
    pub objective: f64,
    /// `c_j - y·A_j` in the instance's own sense.
    pub reduced_costs: Vec<f64>,
    /// Sensitivity of the reported objective to each row's rhs.
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// False while phase one is unfinished (capped runs) or when infeasible.
    pub primal_feasible: bool,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn lp_relax(inst: &MipInstance, fixings: &Assignment) -> Result<LpResult> {
    lp_relax_capped(inst, fixings, None)
}

/// As [`lp_relax`], stopping with [`LpStatus::IterationLimit`] after
/// `iter_cap` simplex iterations (pivots plus bound flips).
pub fn lp_relax_capped(
    inst: &MipInstance,
    fixings: &Assignment,
    iter_cap: Option<usize>,
) -> Result<LpResult> {
    if fixings.len() != inst.nvars {
        return Err(Error::LengthMismatch {
            expected: inst.nvars,
            got: fixings.len(),
        });
    }
    let sign = inst.sense.sign();

    let mut local = vec![usize::MAX; inst.nvars];
    let mut free_cols = Vec::new();
    let mut base = vec![0.0; inst.nvars];
    for (j, v) in fixings.iter().enumerate() {
        match v {
            Some(true) => base[j] = 1.0,
            Some(false) => {}
            None => {
                local[j] = free_cols.len();
                free_cols.push(j);
            }
        }
    }

    // Internal rows in `a·x <= b` form over local columns.
    let mut rows: Vec<InternalRow> = Vec::new();
    for (i, row) in inst.rows.iter().enumerate() {
        let mut fixed = 0.0;
        let mut coefs = Vec::new();
        for &(j, a) in &row.coefs {
            if local[j] == usize::MAX {
                fixed += a * base[j];
            } else {
                coefs.push((local[j], a));
            }
        }
        let rhs = row.rhs - fixed;
        if coefs.is_empty() {
            if !row.relation.holds(0.0, rhs, PRIMAL_FEAS_TOL) {
                return Ok(infeasible(inst, 0));
            }
            continue;
        }
        if matches!(row.relation, Relation::Le | Relation::Eq) {
            rows.push(InternalRow {
                coefs: coefs.clone(),
                rhs,
                origin: i,
                orient: 1.0,
            });
        }
        if matches!(row.relation, Relation::Ge | Relation::Eq) {
            rows.push(InternalRow {
                coefs: coefs.iter().map(|&(k, a)| (k, -a)).collect(),
                rhs: -rhs,
                origin: i,
                orient: -1.0,
            });
        }
    }

    let cost: Vec<f64> = free_cols.iter().map(|&j| sign * inst.obj[j]).collect();
    let mut tab = Tableau::new(free_cols.len(), &rows, &cost);
    let outcome = tab.solve(iter_cap)?;

    let mut primal = base;
    for (k, &j) in free_cols.iter().enumerate() {
        let v = tab.value(k).clamp(0.0, 1.0);
        let r = v.round();
        primal[j] = if (v - r).abs() < SNAP_TOL { r } else { v };
    }

    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Infeasible => return Ok(infeasible(inst, tab.iterations)),
        Outcome::Capped => LpStatus::IterationLimit,
    };

    let mut duals = vec![0.0; inst.nrows()];
    if status == LpStatus::Optimal {
        for (r, row) in rows.iter().enumerate() {
            // y_r = -d(slack_r); back to the original row orientation and sense.
            let y = -tab.d[tab.nstruct + r];
            duals[row.origin] += sign * row.orient * y;
        }
    }
    let mut reduced_costs = inst.obj.clone();
    for (i, row) in inst.rows.iter().enumerate() {
        if duals[i] != 0.0 {
            for &(j, a) in &row.coefs {
                reduced_costs[j] -= duals[i] * a;
            }
        }
    }

    Ok(LpResult {
        status,
        objective: dot(&inst.obj, &primal),
        primal,
        reduced_costs,
        duals,
        iterations: tab.iterations,
        primal_feasible: status == LpStatus::Optimal || !tab.in_phase_one,
    })
}

fn infeasible(inst: &MipInstance, iterations: usize) -> LpResult {
    LpResult {
        status: LpStatus::Infeasible,
        primal: vec![0.0; inst.nvars],
        objective: inst.sense.sign() * f64::INFINITY,
        reduced_costs: vec![0.0; inst.nvars],
        duals: vec![0.0; inst.nrows()],
        iterations,
        primal_feasible: false,
    }
}

struct InternalRow {
    coefs: Vec<(usize, f64)>,
    rhs: f64,
    origin: usize,
    orient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
}

enum Outcome {
    Optimal,
    Infeasible,
    Capped,
}

/// Columns: structurals `0..nstruct`, one slack per row, then artificials.
struct Tableau {
    m: usize,
    nstruct: usize,
    ncols: usize,
    t: Vec<f64>,
    d: Vec<f64>,
    beta: Vec<f64>,
    head: Vec<usize>,
    state: Vec<ColState>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    /// Row rhs after substitution, used to refresh basic values.
    rhs: Vec<f64>,
    art_start: usize,
    iterations: usize,
    bland_after: usize,
    in_phase_one: bool,
}

impl Tableau {
    fn new(nstruct: usize, rows: &[InternalRow], cost: &[f64]) -> Self {
        let m = rows.len();
        let needs_art: Vec<bool> = rows.iter().map(|r| r.rhs < -PRIMAL_FEAS_TOL).collect();
        let nart = needs_art.iter().filter(|&&b| b).count();
        let art_start = nstruct + m;
        let ncols = art_start + nart;

        let mut t = vec![0.0; m * ncols];
        let mut beta = vec![0.0; m];
        let mut head = vec![0; m];
        let mut state = vec![ColState::AtLower; ncols];
        let mut lb = vec![0.0; ncols];
        let mut ub = vec![1.0; ncols];
        for u in ub.iter_mut().skip(nstruct) {
            *u = f64::INFINITY;
        }
        let mut full_cost = vec![0.0; ncols];
        full_cost[..nstruct].copy_from_slice(cost);

        let mut next_art = art_start;
        for (i, row) in rows.iter().enumerate() {
            let line = &mut t[i * ncols..(i + 1) * ncols];
            let s = if needs_art[i] { -1.0 } else { 1.0 };
            for &(k, a) in &row.coefs {
                line[k] = s * a;
            }
            line[nstruct + i] = s;
            if needs_art[i] {
                line[next_art] = 1.0;
                head[i] = next_art;
                beta[i] = -row.rhs;
                next_art += 1;
            } else {
                head[i] = nstruct + i;
                beta[i] = row.rhs;
            }
            state[head[i]] = ColState::Basic;
        }
        lb.iter_mut().for_each(|l| *l = 0.0);

        Tableau {
            m,
            nstruct,
            ncols,
            t,
            d: vec![0.0; ncols],
            beta,
            head,
            state,
            lb,
            ub,
            cost: full_cost,
            rhs: rows.iter().map(|r| r.rhs).collect(),
            art_start,
            iterations: 0,
            bland_after: 5 * (nstruct + m),
            in_phase_one: nart > 0,
        }
    }

    fn value(&self, col: usize) -> f64 {
        match self.state[col] {
            ColState::Basic => {
                let r = self.head.iter().position(|&h| h == col).expect("basic column in head");
                self.beta[r]
            }
            ColState::AtLower => self.lb[col],
            ColState::AtUpper => self.ub[col],
        }
    }

    fn solve(&mut self, iter_cap: Option<usize>) -> Result<Outcome> {
        if self.in_phase_one {
            let phase_cost: Vec<f64> = (0..self.ncols)
                .map(|j| if j >= self.art_start { 1.0 } else { 0.0 })
                .collect();
            self.price_from(&phase_cost);
            match self.iterate(iter_cap)? {
                Outcome::Capped => return Ok(Outcome::Capped),
                Outcome::Infeasible => unreachable!(),
                Outcome::Optimal => {}
            }
            self.refresh_basic_values();
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.head[i] >= self.art_start)
                .map(|i| self.beta[i].max(0.0))
                .sum();
            if infeasibility > PRIMAL_FEAS_TOL {
                return Ok(Outcome::Infeasible);
            }
            for j in self.art_start..self.ncols {
                self.ub[j] = 0.0;
            }
            for i in 0..self.m {
                if self.head[i] >= self.art_start {
                    self.beta[i] = 0.0;
                }
            }
            self.in_phase_one = false;
        }
        let cost = self.cost.clone();
        self.price_from(&cost);
        let outcome = self.iterate(iter_cap)?;
        if matches!(outcome, Outcome::Optimal) {
            self.refresh_basic_values();
        }
        Ok(outcome)
    }

    /// Reduced costs `d_j = c_j - c_B·T_j` for the given column costs.
    fn price_from(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.head[i]];
            if cb == 0.0 {
                continue;
            }
            let line = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (dj, &tij) in self.d.iter_mut().zip(line) {
                *dj -= cb * tij;
            }
        }
        for i in 0..self.m {
            self.d[self.head[i]] = 0.0;
        }
    }

    /// Recomputes basic values from the original rhs: the slack columns of the
    /// current tableau hold the basis inverse (up to the row signs they started
    /// with, which cancel against the sign applied to the rhs).
    fn refresh_basic_values(&mut self) {
        let nb: Vec<(usize, f64)> = (0..self.ncols)
            .filter_map(|j| match self.state[j] {
                ColState::AtUpper if self.ub[j] != 0.0 => Some((j, self.ub[j])),
                _ => None,
            })
            .collect();
        for i in 0..self.m {
            let line = &self.t[i * self.ncols..(i + 1) * self.ncols];
            let mut v = 0.0;
            for (k, &r) in self.rhs.iter().enumerate() {
                v += line[self.nstruct + k] * r;
            }
            for &(j, x) in &nb {
                v -= line[j] * x;
            }
            self.beta[i] = v;
        }
    }

    fn entering(&self) -> Option<usize> {
        let bland = self.iterations >= self.bland_after;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            let score = match self.state[j] {
                ColState::Basic => continue,
                _ if self.ub[j] - self.lb[j] <= 0.0 => continue,
                ColState::AtLower if self.d[j] < -OPT_TOL => -self.d[j],
                ColState::AtUpper if self.d[j] > OPT_TOL => self.d[j],
                _ => continue,
            };
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn iterate(&mut self, iter_cap: Option<usize>) -> Result<Outcome> {
        loop {
            let Some(q) = self.entering() else {
                return Ok(Outcome::Optimal);
            };
            if iter_cap.is_some_and(|cap| self.iterations >= cap) {
                return Ok(Outcome::Capped);
            }
            self.iterations += 1;

            let dir = if self.state[q] == ColState::AtLower { 1.0 } else { -1.0 };
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, ColState)> = None;
            for i in 0..self.m {
                let alpha = dir * self.t[i * self.ncols + q];
                let h = self.head[i];
                let (limit, to) = if alpha > PIVOT_TOL {
                    ((self.beta[i] - self.lb[h]) / alpha, ColState::AtLower)
                } else if alpha < -PIVOT_TOL && self.ub[h].is_finite() {
                    ((self.ub[h] - self.beta[i]) / -alpha, ColState::AtUpper)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leave {
                    None => true,
                    Some((r, _)) => {
                        limit < step - RATIO_TIE_TOL
                            || (limit <= step + RATIO_TIE_TOL && h < self.head[r])
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, to));
                }
            }

            let range = self.ub[q] - self.lb[q];
            if range <= step {
                // Bound flip; the basis is unchanged.
                self.shift_basics(q, dir * range);
                self.state[q] = if dir > 0.0 { ColState::AtUpper } else { ColState::AtLower };
                continue;
            }
            let Some((r, to)) = leave else {
                return Err(Error::Lp("unbounded ray in a bounded LP".into()));
            };
            self.shift_basics(q, dir * step);
            let entering_value = if dir > 0.0 { self.lb[q] + step } else { self.ub[q] - step };
            let out = self.head[r];
            self.state[out] = to;
            self.state[q] = ColState::Basic;
            self.head[r] = q;
            self.beta[r] = entering_value;
            self.pivot(r, q);
        }
    }

    fn shift_basics(&mut self, q: usize, delta: f64) {
        for i in 0..self.m {
            let a = self.t[i * self.ncols + q];
            if a != 0.0 {
                self.beta[i] -= delta * a;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.ncols;
        let piv = self.t[r * n + q];
        let mut nz = Vec::new();
        for k in 0..n {
            let v = &mut self.t[r * n + k];
            if *v != 0.0 {
                *v /= piv;
                if v.abs() < DROP_TOL {
                    *v = 0.0;
                } else {
                    nz.push(k);
                }
            }
        }
        self.t[r * n + q] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        let eliminate = |line: &mut [f64]| {
            let f = line[q];
            if f == 0.0 {
                return;
            }
            for &k in &nz {
                let v = line[k] - f * prow[k];
                line[k] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            line[q] = 0.0;
        };
        before.chunks_exact_mut(n).for_each(eliminate);
        after.chunks_exact_mut(n).for_each(eliminate);
        let f = self.d[q];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * prow[k];
            }
            self.d[q] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::{ConstraintRow, Sense};

    fn graph_instance(n: usize, edges: &[(usize, usize)], sense: Sense, rel: Relation) -> MipInstance {
        let rows = edges
            .iter()
            .map(|&(u, v)| ConstraintRow::new([(u, 1.0), (v, 1.0)], rel, 1.0))
            .collect();
        MipInstance::new("g", sense, vec![1.0; n], rows)
    }

    #[test]
    fn triangle_vertex_cover_is_half_integral() {
        let inst = graph_instance(3, &[(0, 1), (0, 2), (1, 2)], Sense::Minimize, Relation::Ge);
        let lp = lp_relax(&inst, &Assignment::free(3)).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        assert!((lp.objective - 1.5).abs() < 1e-9);
        for v in &lp.primal {
            assert!((v - 0.5).abs() < 1e-9);
        }
        // Each row has dual 0.5 (min with >= rows: increasing rhs increases cost).
        for y in &lp.duals {
            assert!((y - 0.5).abs() < 1e-9, "{:?}", lp.duals);
        }
        for rc in &lp.reduced_costs {
            assert!(rc.abs() < 1e-9);
        }
    }

    #[test]
    fn single_edge_independent_set() {
        let inst = graph_instance(2, &[(0, 1)], Sense::Maximize, Relation::Le);
        let lp = lp_relax(&inst, &Assignment::free(2)).unwrap();
        assert!((lp.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_fixings_are_infeasible() {
        let inst = graph_instance(2, &[(0, 1)], Sense::Minimize, Relation::Ge);
        let lp = lp_relax(&inst, &Assignment::from_bits(&[0, 0])).unwrap();
        assert_eq!(lp.status, LpStatus::Infeasible);
        let lp = lp_relax(&inst, &Assignment::from_bits(&[0, 1])).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        assert_eq!(lp.objective, 1.0);
    }

    #[test]
    fn equality_and_mixed_rows() {
        // min x0 + 2 x1 + 3 x2, x0 + x1 + x2 = 2, x0 - x2 >= 0
        let inst = MipInstance::new(
            "mixed",
            Sense::Minimize,
            vec![1.0, 2.0, 3.0],
            vec![
                ConstraintRow::new([(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Eq, 2.0),
                ConstraintRow::new([(0, 1.0), (2, -1.0)], Relation::Ge, 0.0),
            ],
        );
        let lp = lp_relax(&inst, &Assignment::free(3)).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        assert!((lp.objective - 3.0).abs() < 1e-9);
        assert_eq!(lp.primal, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn no_rows_uses_bound_flips() {
        let inst = MipInstance::new("free", Sense::Maximize, vec![2.0, -1.0, 0.5], vec![]);
        let lp = lp_relax(&inst, &Assignment::free(3)).unwrap();
        assert_eq!(lp.primal, vec![1.0, 0.0, 1.0]);
        assert_eq!(lp.objective, 2.5);
    }

    #[test]
    fn iteration_cap_stops_early() {
        let edges: Vec<_> = (0..12).map(|i| (i, (i + 1) % 12)).collect();
        let inst = graph_instance(12, &edges, Sense::Minimize, Relation::Ge);
        let lp = lp_relax_capped(&inst, &Assignment::free(12), Some(2)).unwrap();
        assert_eq!(lp.status, LpStatus::IterationLimit);
        assert_eq!(lp.iterations, 2);
    }
}
