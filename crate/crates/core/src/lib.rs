//! Learned primal heuristics for pure binary MIPs.
//!
//! Instances are generated and solved exactly to produce labels, a graph
//! convolutional network over the variable linkage graph predicts the
//! probability that each variable is 1 in an optimal solution, and a guided
//! depth-first branch and bound (PB-DFS) uses those probabilities to reach
//! good feasible solutions early.

pub mod bench;
pub mod error;
pub mod features;
pub mod generate;
pub mod io;
pub mod linkage;
pub mod lp;
pub mod mip;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod predictor;
pub mod search;

pub use error::{Error, Result};
pub use mip::{Assignment, ConstraintRow, MipInstance, Relation, Sense};
pub use predictor::{Model, ProbabilityVector};
pub use search::{pb_dfs, solve_exact, ScoreVariant, Termination};
