use rayon::prelude::*;

use super::division::{divide_into, ProjectionPlan};
use super::BetaTable;
use crate::error::{Error, Result};
use crate::model::{Solution, SolutionId};
use crate::sample_set::SampleSet;

/// Number of projection rounds `L` for `n` solutions at error bound `epsilon`:
/// `ceil(ln(n) / epsilon^2) + 1`, which keeps `L > ln(n) / epsilon^2` strict.
pub fn required_projections(n: usize, epsilon: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 solutions, got {n}")));
    }
    projection_bound(n as f64, epsilon)
}

/// [`required_projections`] for a real-valued sample count.
pub fn projection_bound(n: f64, epsilon: f64) -> Result<usize> {
    if !(n >= 2.0) {
        return Err(Error::Config(format!("need at least 2 solutions, got {n}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let bound = n.ln() / (epsilon * epsilon);
    // Absorb rounding noise so exact integers are not pushed up a step.
    let nearest = bound.round();
    let ceil = if (bound - nearest).abs() < 1e-9 {
        nearest
    } else {
        bound.ceil()
    };
    Ok(ceil as usize + 1)
}

/// Merges `rounds` independent division rounds, each over the full variable
/// set. Rounds run in parallel; the result does not depend on scheduling.
pub fn cnbsrp(
    samples: &SampleSet,
    rounds: usize,
    leaf_size: usize,
    seed: u64,
) -> Result<BetaTable> {
    run_rounds(samples, rounds, leaf_size, seed, None)
}

/// [`cnbsrp`] for a local sample, with the center-subset re-split enabled.
pub fn cnbsrp_local(
    samples: &SampleSet,
    rounds: usize,
    leaf_size: usize,
    seed: u64,
    center: &Solution,
) -> Result<BetaTable> {
    run_rounds(samples, rounds, leaf_size, seed, Some(center))
}

fn run_rounds(
    samples: &SampleSet,
    rounds: usize,
    leaf_size: usize,
    seed: u64,
    center: Option<&Solution>,
) -> Result<BetaTable> {
    if rounds == 0 {
        return Err(Error::Config("at least one projection round".into()));
    }
    // Validate the configuration once before fanning out.
    ProjectionPlan::new(samples.dim(), leaf_size, seed)?;
    if samples.is_empty() {
        return Ok(BetaTable::empty(samples));
    }
    let ids: Vec<SolutionId> = samples.ids().collect();
    let dim = samples.dim();
    (0..rounds as u64)
        .into_par_iter()
        .try_fold(
            || BetaTable::empty(samples),
            |mut acc, round| -> Result<BetaTable> {
                let plan = ProjectionPlan::for_round(dim, leaf_size, seed, round)?;
                divide_into(samples, &ids, plan, center, &mut acc)?;
                Ok(acc)
            },
        )
        .try_reduce(|| BetaTable::empty(samples), |a, b| a.merge(&b))
}
