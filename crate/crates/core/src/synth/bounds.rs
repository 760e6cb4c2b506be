use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{hoeffding_radius, Verdict};
use crate::chain::{trajectory_rng, ChainModel, GoalSet, Policy};
use crate::error::{Error, Result};
use crate::kappa::Kappa;

/// `κ_low⁻¹(κ_up(‖s₀‖)) + diam(G)`.
pub fn stability_radius(kappa_low: &Kappa, kappa_up: &Kappa, s0_norm: f64, goal_diam: f64) -> Result<f64> {
    if !kappa_low.is_strict() {
        return Err(Error::Contract("stability radius needs a strict lower bound".into()));
    }
    Ok(kappa_low.invert(kappa_up.eval(s0_norm)?)? + goal_diam)
}

/// `T_L = (κ_up(dist(s₀)) − κ_low(d_min)) / ν(d_min)`, floored at 0.
///
/// `d_min` is the smallest distance outside the inflated goal.
pub fn reaching_time_bound(kappa_up: &Kappa, kappa_low: &Kappa, nu: &Kappa, dist_s0: f64, inf_dist_outside: f64) -> Result<f64> {
    if !(inf_dist_outside > 0.0) {
        return Err(Error::Domain(format!("distance floor must be positive, got {inf_dist_outside}")));
    }
    let den = nu.eval(inf_dist_outside)?;
    if !(den > 0.0) {
        return Err(Error::Domain("ν vanishes at the distance floor".into()));
    }
    Ok(((kappa_up.eval(dist_s0)? - kappa_low.eval(inf_dist_outside)?) / den).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachingReport {
    pub state: Vec<f64>,
    pub dist_prime: f64,
    pub t_l: usize,
    pub n_traj: usize,
    /// Latest first entry among the trajectories that entered.
    pub max_entry_time: Option<usize>,
    pub frequency: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Fraction of trajectories from `s0` entering the inflated goal within `t_l`
/// steps. PASS needs `≥ 1 − η − r`. Trajectories stop at entry.
#[allow(clippy::too_many_arguments)]
pub fn verify_reaching(
    model: &ChainModel,
    policy: &Policy,
    goal_prime: &GoalSet,
    s0: &[f64],
    t_l: usize,
    eta: f64,
    n_traj: usize,
    seed: u64,
    confidence: f64,
) -> Result<ReachingReport> {
    if n_traj < 1 {
        return Err(Error::Config("n_traj must be at least 1".into()));
    }
    if s0.len() != model.dim {
        return Err(Error::Config(format!("initial state has {} components, chain has {}", s0.len(), model.dim)));
    }
    let entries: Vec<Option<usize>> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(seed, k as u64);
            let mut s = s0.to_vec();
            let mut next = vec![0.0; model.dim];
            let mut w = vec![0.0; model.dim];
            for t in 0..=t_l {
                if goal_prime.dist_prime(&s) == 0.0 {
                    return Some(t);
                }
                if t == t_l {
                    break;
                }
                let a = policy.act(&s);
                model.noise.draw(&mut rng, &mut w);
                model.step(&s, &a, &w, &mut next);
                if next.iter().any(|x| !x.is_finite()) {
                    return None;
                }
                std::mem::swap(&mut s, &mut next);
            }
            None
        })
        .collect();
    let hits = entries.iter().flatten().count();
    let frequency = hits as f64 / n_traj as f64;
    let threshold = 1.0 - eta - hoeffding_radius(n_traj, confidence);
    Ok(ReachingReport {
        state: s0.to_vec(),
        dist_prime: goal_prime.dist_prime(s0),
        t_l,
        n_traj,
        max_entry_time: entries.iter().flatten().copied().max(),
        frequency,
        threshold,
        verdict: Verdict::from_bool(frequency >= threshold),
    })
}
