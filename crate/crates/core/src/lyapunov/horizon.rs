use std::f64::consts::E;

fn tail_bound(kappa2_sup: f64, t: i64) -> f64 {
    kappa2_sup * (1.0 - t as f64).exp() / (1.0 - (-1.0f64).exp())
}

/// Smallest `T ≥ 0` with `κ₂·e^{1−T}/(1 − e^{−1}) ≤ tol`.
///
/// `kappa2_sup ≤ 0` gives 0.
pub fn truncation_horizon(kappa2_sup: f64, tol: f64) -> usize {
    if !(kappa2_sup > 0.0) {
        return 0;
    }
    let guess = (1.0 - (tol * (1.0 - 1.0 / E) / kappa2_sup).ln()).ceil();
    let mut t = if guess.is_finite() { guess.max(0.0) as i64 } else { 0 };
    while t > 0 && tail_bound(kappa2_sup, t - 1) <= tol {
        t -= 1;
    }
    while tail_bound(kappa2_sup, t) > tol {
        t += 1;
    }
    t as usize
}
