use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on fitted decay rates.
pub const LAMBDA_MAX: f64 = 50.0;

/// Per-trajectory exponential bound `d_t ≤ C·d₀·e^{−λt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedBound {
    pub traj_id: usize,
    pub c: f64,
    pub lambda: f64,
    pub valid: bool,
}

impl FittedBound {
    pub fn theta(&self) -> [f64; 2] {
        [self.c, self.lambda]
    }

    /// Whether `(c, lambda)` dominates this fit pairwise.
    pub fn covered_by(&self, c: f64, lambda: f64) -> bool {
        self.valid && self.c <= c && self.lambda >= lambda
    }
}

/// Whether `C·d₀·e^{−λt}` dominates every entry, evaluated as the KL bound is.
pub fn dominates(dists: &[f64], d0: f64, c: f64, lambda: f64) -> bool {
    dists.iter().enumerate().all(|(t, &d)| d <= c * d0 * (-lambda * t as f64).exp())
}

/// Smallest `C`, then largest `λ ≤ lambda_max`, with `C·d₀·e^{−λt}` above the trajectory.
///
/// The fit is valid when `λ > 0`. Rounding is corrected by single ulps so the
/// returned pair dominates in floating point exactly.
pub fn fit_exp_bound(traj_id: usize, dists: &[f64], d0: f64, lambda_max: f64) -> Result<FittedBound> {
    if d0.is_nan() || d0 < 0.0 {
        return Err(Error::Domain(format!("initial distance must be nonnegative, got {d0}")));
    }
    let invalid = FittedBound { traj_id, c: 1.0, lambda: 0.0, valid: false };
    if dists.iter().any(|d| !d.is_finite()) {
        return Ok(invalid);
    }
    if d0 == 0.0 {
        let all_zero = dists.iter().all(|&d| d == 0.0);
        return Ok(if all_zero {
            FittedBound { traj_id, c: 1.0, lambda: lambda_max, valid: true }
        } else {
            invalid
        });
    }
    let mut c = dists.iter().fold(1.0f64, |m, &d| m.max(d / d0));
    while dists.iter().any(|&d| c * d0 < d) {
        c = c.next_up();
    }
    let mut lambda = lambda_max;
    for (t, &d) in dists.iter().enumerate().skip(1) {
        if d > 0.0 {
            lambda = lambda.min((c * d0 / d).ln() / t as f64);
        }
    }
    // An ulp of a tiny λ barely moves e^{−λt}, so back off geometrically.
    let mut step = f64::EPSILON;
    while lambda > 0.0 && !dominates(dists, d0, c, lambda) {
        lambda = (lambda - step).min(lambda.next_down());
        step *= 2.0;
    }
    let lambda = lambda.max(0.0);
    Ok(FittedBound { traj_id, c, lambda, valid: lambda > 0.0 })
}
