//! Branch-and-bound search: exact solving for labels, probabilistic branching
//! with guided depth-first search as a primal heuristic, and two baselines.

mod dfs;
mod exact;
mod rounding;
mod trajectory;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_with::{DeserializeFromStr, SerializeDisplay};

pub use dfs::{baseline_dfs, guided_dfs, pb_dfs, BranchPolicy};
pub use exact::{solve_exact, ExactLimits, ExactResult};
pub use rounding::{lp_rounding, round_point};
pub use trajectory::{Event, Trajectory, TrajectoryPoint};

use crate::error::{Error, Result};
use crate::mip::{Assignment, MipInstance};

/// Slack used when comparing LP bounds against the incumbent.
pub const BOUND_TOL: f64 = 1e-6;
/// LP values within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, SerializeDisplay, DeserializeFromStr)]
pub enum ScoreVariant {
    /// `max(p, 1 - p)`, child by rounding `p`.
    MaxP1mp,
    /// `p`, always fix to 1 first.
    P,
    /// `1 - p`, always fix to 0 first.
    OneMinusP,
}

impl ScoreVariant {
    pub const ALL: [ScoreVariant; 3] = [ScoreVariant::MaxP1mp, ScoreVariant::P, ScoreVariant::OneMinusP];
}

impl fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreVariant::MaxP1mp => "max_p_1mp",
            ScoreVariant::P => "p",
            ScoreVariant::OneMinusP => "one_minus_p",
        })
    }
}

impl FromStr for ScoreVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_p_1mp" | "max" => Ok(ScoreVariant::MaxP1mp),
            "p" => Ok(ScoreVariant::P),
            "one_minus_p" | "1-p" => Ok(ScoreVariant::OneMinusP),
            other => Err(Error::InvalidArgument(format!("unknown score variant {other:?}"))),
        }
    }
}

pub fn score(p: &[f64], variant: ScoreVariant) -> Vec<f64> {
    p.iter()
        .map(|&p| match variant {
            ScoreVariant::MaxP1mp => p.max(1.0 - p),
            ScoreVariant::P => p,
            ScoreVariant::OneMinusP => 1.0 - p,
        })
        .collect()
}

/// Argmax of `z` over `candidates`, lowest index on ties.
pub fn select_branch_var(z: &[f64], candidates: impl IntoIterator<Item = usize>) -> Result<usize> {
    let mut best: Option<usize> = None;
    for i in candidates {
        match best {
            Some(b) if z[i] < z[b] || (z[i] == z[b] && i > b) => {}
            _ => best = Some(i),
        }
    }
    best.ok_or(Error::EmptyCandidates)
}

/// Child explored first: the rounded probability for the max score (0.5 goes
/// to 1), always 1 for `p`, always 0 for `1 - p`.
pub fn preferred_child(p: f64, variant: ScoreVariant) -> bool {
    match variant {
        ScoreVariant::MaxP1mp => p >= 0.5,
        ScoreVariant::P => true,
        ScoreVariant::OneMinusP => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, SerializeDisplay, DeserializeFromStr)]
pub enum Termination {
    FirstFeasible,
    TimeLimit(f64),
    NodeLimit(usize),
    /// Run until the tree is exhausted.
    None,
}

impl FromStr for Termination {
    type Err = Error;
    /// `first_feasible`, `time:<seconds>`, `nodes:<count>`, or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad termination {s:?}"));
        match s.split_once(':') {
            None if s == "first_feasible" => Ok(Termination::FirstFeasible),
            None if s == "none" => Ok(Termination::None),
            Some(("time", v)) => v.parse().map(Termination::TimeLimit).map_err(|_| bad()),
            Some(("nodes", v)) => v.parse().map(Termination::NodeLimit).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::FirstFeasible => f.write_str("first_feasible"),
            Termination::TimeLimit(t) => write!(f, "time:{t}"),
            Termination::NodeLimit(n) => write!(f, "nodes:{n}"),
            Termination::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub solution: Assignment,
    pub objective: f64,
    /// Seconds since the search started.
    pub found_at: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Nodes whose LP was solved.
    pub nodes: usize,
    pub lp_solves: usize,
    pub backtracks: usize,
    pub pruned_by_bound: usize,
    pub infeasible_nodes: usize,
    /// Nodes branched on although their bound could not beat the incumbent;
    /// must stay zero.
    pub expanded_past_bound: usize,
    pub wall_time_s: f64,
    pub proved_optimal: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub incumbent: Option<Incumbent>,
    /// Every incumbent in the order found; the last one is `incumbent`.
    pub history: Vec<Incumbent>,
    pub trajectory: Trajectory,
    pub stats: SearchStats,
}

/// On-disk stats summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub nodes: usize,
    pub lp_solves: usize,
    pub backtracks: usize,
    pub best_objective: Option<f64>,
    pub best_time_s: Option<f64>,
    pub proved_optimal: bool,
}

impl SearchOutcome {
    pub fn stats_file(&self) -> StatsFile {
        StatsFile {
            nodes: self.stats.nodes,
            lp_solves: self.stats.lp_solves,
            backtracks: self.stats.backtracks,
            best_objective: self.incumbent.as_ref().map(|i| i.objective),
            best_time_s: self.incumbent.as_ref().map(|i| i.found_at),
            proved_optimal: self.stats.proved_optimal,
        }
    }
}

/// Bound tests in minimization terms, with integral rounding when every 0/1
/// solution has an integral objective.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bounding {
    pub sign: f64,
    pub integral: bool,
}

impl Bounding {
    pub fn new(inst: &MipInstance) -> Self {
        Bounding {
            sign: inst.sense.sign(),
            integral: inst.has_integral_objective(),
        }
    }

    /// Internal (minimization) value of an objective.
    pub fn internal(&self, objective: f64) -> f64 {
        self.sign * objective
    }

    /// Whether a node with internal bound `bound` may hold a solution strictly
    /// better than internal incumbent value `incumbent`.
    pub fn can_improve(&self, bound: f64, incumbent: Option<f64>) -> bool {
        let Some(inc) = incumbent else { return true };
        if self.integral {
            (bound - BOUND_TOL).ceil() <= inc - 1.0 + BOUND_TOL
        } else {
            bound < inc - BOUND_TOL
        }
    }
}

/// Rounds an LP point that is integral within tolerance.
pub(crate) fn integral_point(primal: &[f64]) -> Option<Assignment> {
    primal
        .iter()
        .map(|&v| {
            let r = v.round();
            ((v - r).abs() <= INTEGRALITY_TOL).then_some(r != 0.0)
        })
        .collect::<Option<Vec<bool>>>()
        .map(Assignment::from_bools)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_examples() {
        let p = [0.9, 0.2, 0.5];
        let z = score(&p, ScoreVariant::MaxP1mp);
        assert!((z[0] - 0.9).abs() < 1e-15 && (z[1] - 0.8).abs() < 1e-15 && z[2] == 0.5);
        assert_eq!(score(&p, ScoreVariant::P), p.to_vec());
        let flipped: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
        assert_eq!(score(&p, ScoreVariant::MaxP1mp), score(&flipped, ScoreVariant::MaxP1mp));
    }

    #[test]
    fn branch_variable_selection() {
        let z = [0.9, 0.8, 0.5];
        assert_eq!(select_branch_var(&z, [0, 1, 2]).unwrap(), 0);
        assert_eq!(select_branch_var(&z, [1, 2]).unwrap(), 1);
        assert_eq!(select_branch_var(&[0.7, 0.7], [1, 0]).unwrap(), 0);
        assert!(matches!(select_branch_var(&z, []), Err(Error::EmptyCandidates)));
    }

    #[test]
    fn child_preference() {
        assert!(!preferred_child(0.2, ScoreVariant::MaxP1mp));
        assert!(preferred_child(0.5, ScoreVariant::MaxP1mp));
        assert!(preferred_child(0.2, ScoreVariant::P));
        assert!(!preferred_child(0.9, ScoreVariant::OneMinusP));
    }

    #[test]
    fn termination_tokens() {
        for t in [
            Termination::FirstFeasible,
            Termination::TimeLimit(20.0),
            Termination::NodeLimit(7),
            Termination::None,
        ] {
            assert_eq!(t.to_string().parse::<Termination>().unwrap(), t);
        }
        assert!("time:x".parse::<Termination>().is_err());
    }

    #[test]
    fn integral_bounding() {
        let b = Bounding { sign: 1.0, integral: true };
        assert!(b.can_improve(3.2, None));
        // Bound 3.2 rounds to 4, which cannot beat 4.
        assert!(!b.can_improve(3.2, Some(4.0)));
        assert!(b.can_improve(3.0, Some(4.0)));
        assert!(b.can_improve(3.0000000001, Some(4.0)));
        let c = Bounding { sign: 1.0, integral: false };
        assert!(c.can_improve(3.2, Some(4.0)));
        assert!(!c.can_improve(4.0, Some(4.0)));
    }

    proptest::proptest! {
        #[test]
        fn argmax_survives_monotone_transforms(z in proptest::collection::vec(0.0f64..1.0, 1..20), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let cands: Vec<usize> = (0..z.len()).collect();
            let t: Vec<f64> = z.iter().map(|v| (v * scale + shift).exp()).collect();
            proptest::prop_assert_eq!(select_branch_var(&z, cands.clone()).unwrap(), select_branch_var(&t, cands).unwrap());
        }
    }
}
