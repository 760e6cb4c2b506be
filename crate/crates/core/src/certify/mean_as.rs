use serde::{Deserialize, Serialize};

use super::envelope::Verdict;
use super::hoeffding::hoeffding_radius;
use crate::chain::TrajectoryBatch;

/// Mean-distance curve against the almost-sure convergence frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanAsReport {
    pub mean_curve: Vec<f64>,
    pub mean_tol: f64,
    pub as_tol: f64,
    /// The mean curve ends at or below `mean_tol`.
    pub mean_converged: bool,
    /// Fraction of trajectories whose final distance is at most `as_tol`.
    pub as_frequency: f64,
    pub confidence_radius: f64,
    /// `mean_converged ⇒ as_frequency ≥ 1 − radius`.
    pub verdict: Verdict,
}

/// Empirical check that mean convergence comes with almost-sure convergence.
///
/// Distances are to the goal ball itself (not the inflated one).
pub fn mean_to_as_check(batch: &TrajectoryBatch, mean_tol: f64, as_tol: f64, confidence: f64) -> MeanAsReport {
    let n = batch.n_traj;
    let mut mean_curve = vec![0.0; batch.horizon + 1];
    for (t, m) in mean_curve.iter_mut().enumerate() {
        *m = (0..n).map(|k| batch.goal.dist(batch.state(k, t))).sum::<f64>() / n as f64;
    }
    let last = mean_curve[batch.horizon];
    let mean_converged = last <= mean_tol;
    let hits = (0..n).filter(|&k| batch.goal.dist(batch.state(k, batch.horizon)) <= as_tol).count();
    let as_frequency = hits as f64 / n as f64;
    let confidence_radius = hoeffding_radius(n, confidence);
    let verdict = Verdict::from_bool(!mean_converged || as_frequency >= 1.0 - confidence_radius);
    MeanAsReport {
        mean_curve,
        mean_tol,
        as_tol,
        mean_converged,
        as_frequency,
        confidence_radius,
        verdict,
    }
}
