//! Depth-first branch and bound driven by per-variable scores and child
//! preferences. With scores from a probability vector this is PB-DFS; with
//! constant scores and 1-first children it is the plain DFS baseline.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::lp::{lp_relax, LpStatus};
use crate::mip::{Assignment, MipInstance};
use crate::predictor::ProbabilityVector;

use super::{
    integral_point, preferred_child, score, select_branch_var, Bounding, Incumbent, ScoreVariant,
    SearchOutcome, SearchStats, Termination, Trajectory,
};

/// Branching scores `z` and the value each variable is fixed to first.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPolicy {
    pub scores: Vec<f64>,
    pub prefer_one: Vec<bool>,
}

impl BranchPolicy {
    pub fn from_probabilities(p: &[f64], variant: ScoreVariant) -> Self {
        BranchPolicy {
            scores: score(p, variant),
            prefer_one: p.iter().map(|&pi| preferred_child(pi, variant)).collect(),
        }
    }

    /// Lowest unfixed index first, value 1 before 0.
    pub fn lowest_index(n: usize) -> Self {
        BranchPolicy {
            scores: vec![0.0; n],
            prefer_one: vec![true; n],
        }
    }
}

struct Node {
    fixings: Assignment,
    depth: usize,
    /// Internal (minimization) LP bound of the parent.
    parent_bound: f64,
    preferred: bool,
}

pub fn pb_dfs(
    inst: &MipInstance,
    probs: &ProbabilityVector,
    variant: ScoreVariant,
    term: Termination,
) -> Result<SearchOutcome> {
    if probs.len() != inst.nvars {
        return Err(Error::LengthMismatch {
            expected: inst.nvars,
            got: probs.len(),
        });
    }
    guided_dfs(inst, &BranchPolicy::from_probabilities(probs.as_slice(), variant), term)
}

pub fn baseline_dfs(inst: &MipInstance, term: Termination) -> Result<SearchOutcome> {
    guided_dfs(inst, &BranchPolicy::lowest_index(inst.nvars), term)
}

/// Every node solves its LP; infeasible nodes and nodes whose bound cannot
/// beat the incumbent are pruned; integral LP points become incumbents;
/// otherwise the highest-scoring unfixed variable is branched on and the
/// preferred child is explored first. The stack always pops the deepest
/// unexplored node, most recently pushed first.
pub fn guided_dfs(inst: &MipInstance, policy: &BranchPolicy, term: Termination) -> Result<SearchOutcome> {
    let clock = Instant::now();
    let n = inst.nvars;
    if policy.scores.len() != n || policy.prefer_one.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: policy.scores.len(),
        });
    }
    let bounding = Bounding::new(inst);
    let mut stats = SearchStats::default();
    let mut trajectory = Trajectory::default();
    let mut history: Vec<Incumbent> = Vec::new();
    let mut best_internal: Option<f64> = None;

    let mut stack = vec![Node {
        fixings: Assignment::free(n),
        depth: 0,
        parent_bound: f64::NEG_INFINITY,
        preferred: true,
    }];
    let mut just_branched = false;
    let mut stopped = false;

    while !stack.is_empty() {
        let out_of_budget = match term {
            Termination::TimeLimit(limit) => clock.elapsed().as_secs_f64() >= limit,
            Termination::NodeLimit(limit) => stats.nodes >= limit,
            Termination::FirstFeasible | Termination::None => false,
        };
        if out_of_budget {
            stopped = true;
            break;
        }
        let node = stack.pop().expect("stack is non-empty");
        debug_assert!(stack.iter().all(|s| s.depth <= node.depth));
        if !(just_branched && node.preferred) && node.depth > 0 {
            stats.backtracks += 1;
        }
        just_branched = false;

        if !bounding.can_improve(node.parent_bound, best_internal) {
            stats.pruned_by_bound += 1;
            continue;
        }
        let lp = lp_relax(inst, &node.fixings)?;
        stats.nodes += 1;
        stats.lp_solves += 1;
        if lp.status == LpStatus::Infeasible {
            stats.infeasible_nodes += 1;
            continue;
        }
        let bound = bounding.internal(lp.objective);
        if !bounding.can_improve(bound, best_internal) {
            stats.pruned_by_bound += 1;
            continue;
        }

        if let Some(point) = integral_point(&lp.primal) {
            if inst.is_feasible(&point) {
                let objective = inst.objective_value(&point)?;
                let internal = bounding.internal(objective);
                if best_internal.is_none_or(|b| internal < b) {
                    let found_at = clock.elapsed().as_secs_f64();
                    trajectory.push_incumbent(found_at, objective);
                    best_internal = Some(internal);
                    history.push(Incumbent {
                        solution: point,
                        objective,
                        found_at,
                    });
                    if term == Termination::FirstFeasible {
                        stopped = true;
                        break;
                    }
                }
                continue;
            }
        }

        let Ok(var) = select_branch_var(&policy.scores, node.fixings.unfixed()) else {
            // Fully fixed but not feasible within tolerance.
            continue;
        };
        if !bounding.can_improve(bound, best_internal) {
            stats.expanded_past_bound += 1;
        }
        let first = policy.prefer_one[var];
        stack.push(Node {
            fixings: node.fixings.with(var, !first),
            depth: node.depth + 1,
            parent_bound: bound,
            preferred: false,
        });
        stack.push(Node {
            fixings: node.fixings.with(var, first),
            depth: node.depth + 1,
            parent_bound: bound,
            preferred: true,
        });
        just_branched = true;
    }

    let elapsed = clock.elapsed().as_secs_f64();
    stats.wall_time_s = elapsed;
    stats.proved_optimal = !stopped && stack.is_empty();
    trajectory.close(elapsed);
    Ok(SearchOutcome {
        incumbent: history.last().cloned(),
        history,
        trajectory,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{formulate_dsp, formulate_misp, formulate_vcp, gen_graph, UGraph};
    use crate::oracle::brute_force;

    #[test]
    fn oracle_probabilities_dive_straight_to_the_optimum() {
        for seed in 0..6 {
            let g = gen_graph(12, 4, seed).unwrap();
            for inst in [formulate_misp(&g), formulate_dsp(&g), formulate_vcp(&g)] {
                let (opt, value) = brute_force(&inst).unwrap();
                let p = ProbabilityVector(opt.to_values().unwrap());
                let out = pb_dfs(&inst, &p, ScoreVariant::MaxP1mp, Termination::FirstFeasible).unwrap();
                let inc = out.incumbent.expect("incumbent");
                assert_eq!(inc.objective, value);
                assert_eq!(out.stats.backtracks, 0);
                assert!(out.stats.nodes <= inst.nvars + 1);
            }
        }
    }

    #[test]
    fn uniform_probabilities_find_a_feasible_point() {
        let inst = formulate_misp(&UGraph::new(2, [(0, 1)]).unwrap());
        let out = pb_dfs(&inst, &ProbabilityVector(vec![0.5, 0.5]), ScoreVariant::MaxP1mp, Termination::FirstFeasible)
            .unwrap();
        let inc = out.incumbent.unwrap();
        assert!(inc.objective == 0.0 || inc.objective == 1.0);
        assert!(inst.is_feasible(&inc.solution));
        assert!(!out.trajectory.is_empty());
    }

    #[test]
    fn zero_time_budget_does_nothing() {
        let inst = formulate_vcp(&gen_graph(20, 4, 1).unwrap());
        let out = pb_dfs(&inst, &ProbabilityVector(vec![0.3; 20]), ScoreVariant::MaxP1mp, Termination::TimeLimit(0.0))
            .unwrap();
        assert!(out.incumbent.is_none());
        assert!(out.trajectory.is_empty());
        assert_eq!(out.stats.nodes, 0);
    }

    #[test]
    fn run_to_completion_is_exact() {
        for seed in 0..4 {
            let inst = formulate_dsp(&gen_graph(10, 3, seed).unwrap());
            let (_, value) = brute_force(&inst).unwrap();
            let out = baseline_dfs(&inst, Termination::None).unwrap();
            assert!(out.stats.proved_optimal);
            assert_eq!(out.incumbent.unwrap().objective, value);
            assert_eq!(out.stats.expanded_past_bound, 0);
            out.trajectory.check(inst.sense).unwrap();
        }
    }

    #[test]
    fn node_limit_one_with_integral_root() {
        // Edgeless MISP: the root LP is already integral.
        let inst = formulate_misp(&UGraph::new(4, []).unwrap());
        let out = baseline_dfs(&inst, Termination::NodeLimit(1)).unwrap();
        assert_eq!(out.incumbent.unwrap().objective, 4.0);
        assert_eq!(out.stats.nodes, 1);
    }

    #[test]
    fn baseline_finds_feasible_points() {
        let g = gen_graph(30, 4, 2).unwrap();
        for inst in [formulate_misp(&g), formulate_dsp(&g), formulate_vcp(&g)] {
            let out = baseline_dfs(&inst, Termination::FirstFeasible).unwrap();
            assert!(inst.is_feasible(&out.incumbent.unwrap().solution));
        }
    }
}
