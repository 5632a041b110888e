//! Best-bound branch and bound with most-fractional branching.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::Result;
use crate::lp::{lp_relax, LpStatus};
use crate::mip::{Assignment, MipInstance};

use super::{integral_point, Bounding, SearchStats, INTEGRALITY_TOL};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactLimits {
    pub node_limit: Option<usize>,
    pub time_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub solution: Option<Assignment>,
    pub objective: Option<f64>,
    /// The queue was exhausted, so the solution (or infeasibility) is proven.
    pub proved_optimal: bool,
    pub stats: SearchStats,
}

struct Open {
    bound: f64,
    seq: usize,
    fixings: Assignment,
    primal: Vec<f64>,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    /// Max-heap order: smallest bound first, newest node on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Most fractional unfixed variable, lowest index on ties.
fn most_fractional(primal: &[f64], fixings: &Assignment) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in fixings.unfixed() {
        let frac = (primal[j] - primal[j].floor()).min(primal[j].ceil() - primal[j]);
        if frac <= INTEGRALITY_TOL {
            continue;
        }
        if best.is_none_or(|(_, f)| frac > f) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

pub fn solve_exact(inst: &MipInstance, limits: ExactLimits) -> Result<ExactResult> {
    inst.ensure_valid()?;
    let clock = Instant::now();
    let bounding = Bounding::new(inst);
    let mut stats = SearchStats::default();
    let mut best: Option<(Assignment, f64)> = None;
    let mut best_internal: Option<f64> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut stopped = false;

    // Solves a node's LP and either records an incumbent or queues it.
    let mut evaluate = |fixings: Assignment,
                        stats: &mut SearchStats,
                        heap: &mut BinaryHeap<Open>,
                        best: &mut Option<(Assignment, f64)>,
                        best_internal: &mut Option<f64>|
     -> Result<()> {
        let lp = lp_relax(inst, &fixings)?;
        stats.nodes += 1;
        stats.lp_solves += 1;
        if lp.status == LpStatus::Infeasible {
            stats.infeasible_nodes += 1;
            return Ok(());
        }
        let bound = bounding.internal(lp.objective);
        if !bounding.can_improve(bound, *best_internal) {
            stats.pruned_by_bound += 1;
            return Ok(());
        }
        if let Some(point) = integral_point(&lp.primal) {
            if inst.is_feasible(&point) {
                let objective = inst.objective_value(&point)?;
                let internal = bounding.internal(objective);
                if best_internal.is_none_or(|b| internal < b) {
                    *best_internal = Some(internal);
                    *best = Some((point, objective));
                }
                return Ok(());
            }
        }
        seq += 1;
        heap.push(Open {
            bound,
            seq,
            fixings,
            primal: lp.primal,
        });
        Ok(())
    };

    evaluate(
        Assignment::free(inst.nvars),
        &mut stats,
        &mut heap,
        &mut best,
        &mut best_internal,
    )?;

    while let Some(node) = heap.pop() {
        if !bounding.can_improve(node.bound, best_internal) {
            stats.pruned_by_bound += 1;
            continue;
        }
        let over_nodes = limits.node_limit.is_some_and(|l| stats.nodes >= l);
        let over_time = limits
            .time_limit
            .is_some_and(|t| clock.elapsed().as_secs_f64() >= t);
        if over_nodes || over_time {
            heap.push(node);
            stopped = true;
            break;
        }
        // An LP point that is integral but infeasible within the strict check
        // still has unfixed variables to branch on.
        let var = most_fractional(&node.primal, &node.fixings)
            .or_else(|| node.fixings.unfixed().next());
        let Some(var) = var else { continue };
        for value in [true, false] {
            evaluate(
                node.fixings.with(var, value),
                &mut stats,
                &mut heap,
                &mut best,
                &mut best_internal,
            )?;
        }
    }

    stats.wall_time_s = clock.elapsed().as_secs_f64();
    stats.proved_optimal = !stopped;
    let (solution, objective) = match best {
        Some((s, o)) => (Some(s), Some(o)),
        None => (None, None),
    };
    Ok(ExactResult {
        solution,
        objective,
        proved_optimal: !stopped,
        stats,
    })
}
