use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::hoeffding_radius;
use crate::chain::{norm, ActionRule, ChainModel, GoalSet, Policy};
use crate::error::{Error, Result};
use crate::kappa::Kappa;
use crate::lyapunov::{DecayConfig, LyapunovFn};

/// Finite action set and sampling budget for steepest-descent synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub candidates: Vec<Vec<f64>>,
    pub n_mc_per_action: usize,
    pub eta: f64,
    pub confidence: f64,
}

impl SynthesisConfig {
    pub fn new(candidates: Vec<Vec<f64>>, n_mc_per_action: usize, eta: f64) -> Self {
        Self { candidates, n_mc_per_action, eta, confidence: 0.05 }
    }

    /// Tensor grid with `per_axis` evenly spaced points on each `[lo_i, hi_i]`.
    pub fn box_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Result<Vec<Vec<f64>>> {
        crate::certify::grid_states(lo, hi, per_axis)
    }

    pub fn validate(&self, action_dim: usize) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::Config("candidate action list is empty".into()));
        }
        if self.candidates.iter().any(|a| a.len() != action_dim || a.iter().any(|x| !x.is_finite())) {
            return Err(Error::Config(format!("every candidate must be a finite vector of length {action_dim}")));
        }
        if self.n_mc_per_action < 1 {
            return Err(Error::Config("n_mc_per_action must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta must lie in [0, 1), got {}", self.eta)));
        }
        Ok(())
    }
}

/// The action picked at one state, with the per-candidate evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub index: usize,
    pub action: Vec<f64>,
    /// Empirical decay frequency for each candidate.
    pub frequencies: Vec<f64>,
    /// Hoeffding radius shared by all frequencies.
    pub confidence_radius: f64,
    /// No candidate ever decayed; the best expected `L(X₊)` was used instead.
    pub fallback: bool,
}

/// Greedy maximizer of the estimated decay probability.
///
/// The noise draws are fixed at synthesis and shared by every candidate and
/// state, so the policy is a deterministic function of the state.
pub struct SteepestDescent {
    model: ChainModel,
    goal: GoalSet,
    lf: Arc<dyn LyapunovFn>,
    nu: Kappa,
    cfg: SynthesisConfig,
    decay: DecayConfig,
    noise: Vec<Vec<f64>>,
    fallbacks: AtomicUsize,
}

impl SteepestDescent {
    pub fn choose(&self, s: &[f64]) -> Choice {
        let l_now = self.lf.value(s, 0).unwrap_or(f64::INFINITY);
        let nu = self.nu.at(self.goal.dist_prime(s));
        let n = self.cfg.n_mc_per_action;
        let stats: Vec<(usize, f64)> = self
            .cfg
            .candidates
            .par_iter()
            .map(|a| {
                let mut next = vec![0.0; self.model.dim];
                let (mut hits, mut sum) = (0, 0.0);
                for (k, w) in self.noise.iter().enumerate() {
                    self.model.step(s, a, w, &mut next);
                    let l = if next.iter().all(|x| x.is_finite()) {
                        self.lf.value(&next, k as u64 + 1).unwrap_or(f64::INFINITY)
                    } else {
                        f64::INFINITY
                    };
                    hits += self.decay.decays(l, l_now, nu) as usize;
                    sum += l;
                }
                (hits, sum / n as f64)
            })
            .collect();
        let best_hits = stats.iter().map(|x| x.0).max().unwrap_or(0);
        let fallback = best_hits == 0;
        let index = if fallback {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
            let mut best = 0;
            for (i, st) in stats.iter().enumerate() {
                if st.1 < stats[best].1 {
                    best = i;
                }
            }
            best
        } else {
            let mut best: Option<usize> = None;
            for (i, st) in stats.iter().enumerate() {
                if st.0 != best_hits {
                    continue;
                }
                if best.is_none_or(|b| norm(&self.cfg.candidates[i]) < norm(&self.cfg.candidates[b])) {
                    best = Some(i);
                }
            }
            best.expect("some candidate attains the maximum")
        };
        Choice {
            index,
            action: self.cfg.candidates[index].clone(),
            frequencies: stats.iter().map(|x| x.0 as f64 / n as f64).collect(),
            confidence_radius: hoeffding_radius(n, self.cfg.confidence),
            fallback,
        }
    }

    /// Number of `choose` calls that had to fall back so far.
    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }
}

impl ActionRule for SteepestDescent {
    fn action(&self, state: &[f64]) -> Vec<f64> {
        self.choose(state).action
    }
}

/// Builds the steepest-descent rule; wrap it with [`into_policy`].
pub fn steepest_descent_policy(
    model: &ChainModel,
    goal: &GoalSet,
    lf: Arc<dyn LyapunovFn>,
    nu: &Kappa,
    cfg: &SynthesisConfig,
    decay: DecayConfig,
    seed: u64,
) -> Result<Arc<SteepestDescent>> {
    cfg.validate(model.action_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (0..cfg.n_mc_per_action)
        .map(|_| {
            let mut w = vec![0.0; model.dim];
            model.noise.draw(&mut rng, &mut w);
            w
        })
        .collect();
    Ok(Arc::new(SteepestDescent {
        model: model.clone(),
        goal: *goal,
        lf,
        nu: nu.clone(),
        cfg: cfg.clone(),
        decay,
        noise,
        fallbacks: AtomicUsize::new(0),
    }))
}

pub fn into_policy(rule: &Arc<SteepestDescent>) -> Policy {
    Policy::SteepestDescent(rule.clone())
}
