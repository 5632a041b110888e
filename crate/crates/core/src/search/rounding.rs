use std::time::Instant;

use crate::error::Result;
use crate::lp::lp_relax;
use crate::mip::{Assignment, MipInstance};

use super::Incumbent;

/// Rounds the root LP solution to the nearest integer (0.5 goes to 1) and
/// keeps it only if it is feasible.
pub fn lp_rounding(inst: &MipInstance) -> Result<Option<Incumbent>> {
    let clock = Instant::now();
    let lp = lp_relax(inst, &Assignment::free(inst.nvars))?;
    if !lp.is_optimal() {
        return Ok(None);
    }
    let Some(point) = round_point(inst, &lp.primal) else {
        return Ok(None);
    };
    Ok(Some(Incumbent {
        objective: inst.objective_value(&point)?,
        solution: point,
        found_at: clock.elapsed().as_secs_f64(),
    }))
}

/// Nearest-integer rounding of an LP point, kept only when feasible.
pub fn round_point(inst: &MipInstance, primal: &[f64]) -> Option<Assignment> {
    let point = Assignment::from_bools(primal.iter().map(|&v| v >= 0.5));
    inst.is_feasible(&point).then_some(point)
}
