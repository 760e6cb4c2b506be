//! Empirical stabilization certificates from simulated trajectories.

mod envelope;
mod fit;
mod hoeffding;
mod mean_as;
mod overshoot;

pub use envelope::{uniform_envelope, EnvelopeConfig, StabilizationCertificate, Verdict};
pub use fit::{dominates, fit_exp_bound, FittedBound, LAMBDA_MAX};
pub use hoeffding::{hoeffding_n, hoeffding_radius};
pub use mean_as::{mean_to_as_check, MeanAsReport};
pub use overshoot::{check_overshoot, OvershootRow, OvershootTable};

use rayon::prelude::*;

use crate::chain::{derive_seed, simulate_batch, ChainModel, GoalSet, Policy, TrajectoryBatch};
use crate::error::Result;

/// Fits every trajectory of a batch against its own initial distance.
pub fn fit_batch(batch: &TrajectoryBatch, lambda_max: f64) -> Result<Vec<FittedBound>> {
    (0..batch.n_traj)
        .map(|k| {
            let d = batch.dists(k);
            fit_exp_bound(k, d, d[0], lambda_max)
        })
        .collect()
}

/// One trajectory from each initial state, fitted against its own start.
///
/// Trajectory `k` uses seed `derive_seed(seed, k)`, so the fits are a pure
/// function of the inputs.
pub fn fit_initial_states(
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    states: &[Vec<f64>],
    horizon: usize,
    seed: u64,
    lambda_max: f64,
) -> Result<Vec<FittedBound>> {
    states
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let b = simulate_batch(model, policy, goal, s, horizon, 1, derive_seed(seed, k as u64))?;
            let d = b.dists(0);
            fit_exp_bound(k, d, d[0], lambda_max)
        })
        .collect()
}

/// Product grid with `per_axis` evenly spaced points on each `[lo_i, hi_i]`
/// (the midpoint when `per_axis` is 1), first axis slowest.
pub fn grid_states(lo: &[f64], hi: &[f64], per_axis: usize) -> Result<Vec<Vec<f64>>> {
    if lo.is_empty() || lo.len() != hi.len() || per_axis < 1 || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
        return Err(crate::Error::Config("state box needs matching nonempty bounds lo ≤ hi and per_axis ≥ 1".into()));
    }
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for (&a, &b) in lo.iter().zip(hi) {
        let pts: Vec<f64> = (0..per_axis)
            .map(|k| if per_axis == 1 { 0.5 * (a + b) } else { a + (b - a) * k as f64 / (per_axis - 1) as f64 })
            .collect();
        out = out.into_iter().flat_map(|p| pts.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    Ok(out)
}
