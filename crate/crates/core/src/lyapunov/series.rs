use serde::{Deserialize, Serialize};

use super::estimate::LyapunovEstimate;
use crate::chain::{simulate_batch, ChainModel, GoalSet, Policy, TrajectoryBatch};
use crate::error::{Error, Result};
use crate::kappa::{KLFunction, Kappa};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbLfValue {
    pub value: f64,
    pub covered: usize,
    pub n_traj: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanLfValue {
    pub value: f64,
    pub std_error: f64,
    pub n_traj: usize,
}

/// Running mean and variance. Identical inputs give their value back exactly.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
    }
}

/// `Σ_{t ≤ T} ρ′(d_t)` for one trajectory.
pub(crate) fn series(rho: &Kappa, dists: &[f64], horizon: usize) -> f64 {
    dists[..=horizon].iter().fold(0.0, |acc, &d| acc + rho.at(d))
}

fn run(est: &LyapunovEstimate, s0: &[f64], model: &ChainModel, policy: &Policy, goal: &GoalSet, n_traj: usize, seed: u64) -> Result<TrajectoryBatch> {
    simulate_batch(model, policy, goal, s0, est.horizon_t.max(1), n_traj, seed)
}

/// Probabilistic Lyapunov value at `s0`: the largest truncated series over
/// trajectories that stay inside `envelope(dist′(s0) + c0′, t)`.
#[allow(clippy::too_many_arguments)]
pub fn prob_lf(
    est: &LyapunovEstimate,
    s0: &[f64],
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    envelope: &KLFunction,
    n_traj: usize,
    seed: u64,
) -> Result<ProbLfValue> {
    let b = run(est, s0, model, policy, goal, n_traj, seed)?;
    let v = goal.dist_prime(s0) + est.c0_prime;
    let bound: Vec<f64> = (0..=b.horizon).map(|t| envelope.at(v, t as f64)).collect();
    let mut covered = 0;
    let mut value = f64::NEG_INFINITY;
    for k in 0..b.n_traj {
        let d = b.dists(k);
        if b.diverged[k] || d.iter().zip(&bound).any(|(x, y)| x > y) {
            continue;
        }
        covered += 1;
        value = value.max(series(&est.rho_prime, d, est.horizon_t));
    }
    if covered == 0 {
        return Err(Error::NoCoverage { covered, total: b.n_traj });
    }
    Ok(ProbLfValue { value, covered, n_traj: b.n_traj })
}

/// Mean Lyapunov value at `s0`: Monte Carlo mean of the truncated series.
pub fn mean_lf(
    est: &LyapunovEstimate,
    s0: &[f64],
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    n_traj: usize,
    seed: u64,
) -> Result<MeanLfValue> {
    let b = run(est, s0, model, policy, goal, n_traj, seed)?;
    let mut w = Welford::default();
    for k in 0..b.n_traj {
        w.push(series(&est.rho_prime, b.dists(k), est.horizon_t));
    }
    Ok(MeanLfValue { value: w.mean(), std_error: w.std_error(), n_traj: b.n_traj })
}
