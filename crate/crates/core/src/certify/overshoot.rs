use serde::{Deserialize, Serialize};

use super::envelope::Verdict;
use super::hoeffding::hoeffding_radius;
use crate::chain::TrajectoryBatch;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvershootRow {
    pub eps: f64,
    pub delta: f64,
    pub frequency: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvershootTable {
    pub eta: f64,
    pub rows: Vec<OvershootRow>,
    pub verdict: Verdict,
}

/// Frequency of `dist(X_t) ≤ eps` for all `t`, one batch per `(eps, delta)` row.
///
/// Each batch must start within `delta` of the goal. A row passes when the
/// frequency is at least `1 − η − r` with `r` the Hoeffding radius.
pub fn check_overshoot(rows: &[(f64, f64)], batches: &[TrajectoryBatch], eta: f64, confidence: f64) -> Result<OvershootTable> {
    if rows.len() != batches.len() {
        return Err(Error::Config(format!("{} overshoot rows but {} batches", rows.len(), batches.len())));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, (&(eps, delta), b)) in rows.iter().zip(batches).enumerate() {
        let d0 = b.goal.dist(&b.initial_state);
        if d0 > delta {
            return Err(Error::Config(format!("row {i}: batch starts at distance {d0} > delta = {delta}")));
        }
        let ok = (0..b.n_traj)
            .filter(|&k| !b.diverged[k] && (0..=b.horizon).all(|t| b.goal.dist(b.state(k, t)) <= eps))
            .count();
        let frequency = ok as f64 / b.n_traj as f64;
        let threshold = 1.0 - eta - hoeffding_radius(b.n_traj, confidence);
        out.push(OvershootRow {
            eps,
            delta,
            frequency,
            threshold,
            verdict: Verdict::from_bool(frequency >= threshold),
        });
    }
    let verdict = Verdict::from_bool(out.iter().all(|r| r.verdict.is_pass()));
    Ok(OvershootTable { eta, rows: out, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{linear_uniform_chain, simulate_batch, GoalSet, Policy};
    use nalgebra::DMatrix;

    fn batch(f: f64, k: f64, s0: f64) -> TrajectoryBatch {
        let m = linear_uniform_chain(DMatrix::from_element(1, 1, f), DMatrix::from_element(1, 1, 1.0), 0.0).unwrap();
        simulate_batch(&m, &Policy::scalar_gain(k), &GoalSet::origin(), &[s0], 20, 10, 1).unwrap()
    }

    #[test]
    fn contraction_never_overshoots() {
        let rows: Vec<(f64, f64)> = [0.5, 1.0, 2.0].iter().map(|&e| (e, e)).collect();
        let batches: Vec<TrajectoryBatch> = rows.iter().map(|r| batch(1.2, -0.9, r.1)).collect();
        let t = check_overshoot(&rows, &batches, 0.0, 0.05).unwrap();
        assert!(t.rows.iter().all(|r| r.frequency == 1.0));
        assert_eq!(t.verdict, Verdict::Pass);
    }

    #[test]
    fn origin_start() {
        let rows = [(0.0, 0.0), (0.1, 0.0)];
        let batches = [batch(1.2, 0.0, 0.0), batch(1.2, 0.0, 0.0)];
        let t = check_overshoot(&rows, &batches, 0.0, 0.05).unwrap();
        assert!(t.rows.iter().all(|r| r.frequency == 1.0));
    }

    #[test]
    fn expansion_fails() {
        let t = check_overshoot(&[(1.5, 1.0)], &[batch(1.2, 0.0, 1.0)], 0.0, 0.05).unwrap();
        assert_eq!(t.rows[0].frequency, 0.0);
        assert_eq!(t.verdict, Verdict::Fail);
    }

    #[test]
    fn pairing_checked() {
        assert!(matches!(check_overshoot(&[(1.0, 1.0)], &[], 0.0, 0.05), Err(Error::Config(_))));
        assert!(matches!(check_overshoot(&[(1.0, 0.5)], &[batch(0.5, 0.0, 1.0)], 0.0, 0.05), Err(Error::Config(_))));
    }
}
