use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::horizon::truncation_horizon;
use crate::error::{Error, Result};
use crate::kappa::{concave_inverse, convex_majorant, Kappa, SontagPair};

/// `κ_up = e²/(e−1)·κ₂`.
pub const KAPPA_UP_FACTOR: f64 = E * E / (E - 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LfKind {
    Probabilistic,
    Mean,
}

/// One tabulated Lyapunov value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfPoint {
    pub state: Vec<f64>,
    pub dist_prime: f64,
    pub value: f64,
    /// Monte Carlo standard error (mean LF only).
    pub std_error: Option<f64>,
    /// Trajectories inside the certificate envelope (probabilistic LF only).
    pub covered: Option<usize>,
    pub n_traj: usize,
}

/// Comparison functions and truncation data shared by one Lyapunov function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub kind: LfKind,
    pub sontag: SontagPair,
    pub rho_prime: Kappa,
    pub kappa_low: Kappa,
    pub kappa_up: Kappa,
    pub nu: Kappa,
    pub horizon_t: usize,
    pub c0_prime: f64,
    pub tol: f64,
    pub values: Vec<LfPoint>,
}

fn check_common(c0_prime: f64, v_max: f64, tol: f64) -> Result<()> {
    if !(c0_prime.is_finite() && c0_prime >= 0.0) {
        return Err(Error::Config(format!("c0_prime must be finite and nonnegative, got {c0_prime}")));
    }
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(Error::Config(format!("v_max must be positive, got {v_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("truncation tolerance must be positive, got {tol}")));
    }
    Ok(())
}

impl LyapunovEstimate {
    fn build(kind: LfKind, sontag: SontagPair, rho_prime: Kappa, c0_prime: f64, v_max: f64, tol: f64) -> Result<Self> {
        let kappa_up = sontag.kappa2.scaled(KAPPA_UP_FACTOR)?;
        let horizon_t = truncation_horizon(sontag.kappa2.at(v_max + c0_prime), tol);
        Ok(Self {
            kind,
            kappa_low: rho_prime.clone(),
            nu: rho_prime.clone(),
            rho_prime,
            kappa_up,
            horizon_t,
            c0_prime,
            tol,
            sontag,
            values: Vec::new(),
        })
    }

    /// Series of `κ₁⁻¹∘dist′`. The horizon covers initial distances up to `v_max`.
    pub fn probabilistic(sontag: SontagPair, c0_prime: f64, v_max: f64, tol: f64) -> Result<Self> {
        check_common(c0_prime, v_max, tol)?;
        let rho = sontag.kappa1.inverse()?;
        Self::build(LfKind::Probabilistic, sontag, rho, c0_prime, v_max, tol)
    }

    /// Series of `(κ₁′)⁻¹∘dist′` where `κ₁′` is the convex majorant of `κ₁`
    /// above `vbar`, sampled on `grid`.
    pub fn mean(sontag: SontagPair, c0_prime: f64, v_max: f64, tol: f64, vbar: f64, grid: &[f64]) -> Result<Self> {
        check_common(c0_prime, v_max, tol)?;
        let k1 = sontag.kappa1.to_piecewise(grid)?;
        let rho = concave_inverse(&convex_majorant(&k1, vbar)?)?;
        Self::build(LfKind::Mean, sontag, Kappa::Piecewise(rho), c0_prime, v_max, tol)
    }

    pub fn with_values(mut self, values: Vec<LfPoint>) -> Self {
        self.values = values;
        self
    }

    /// `κ_low(d) ≤ L ≤ κ_up(d)`, loosened by `3·se` for Monte Carlo values.
    pub fn sandwich_holds(&self, p: &LfPoint) -> bool {
        let slack = 3.0 * p.std_error.unwrap_or(0.0);
        let lo = self.kappa_low.at(p.dist_prime);
        let hi = self.kappa_up.at(p.dist_prime);
        lo <= p.value + slack && p.value <= hi + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::{sontag_factorize, KLFunction, SontagConfig};

    fn pair(c: f64, l: f64) -> SontagPair {
        sontag_factorize(&KLFunction::exponential(c, l).unwrap(), &SontagConfig::default()).unwrap()
    }

    #[test]
    fn factor_value() {
        assert!((KAPPA_UP_FACTOR - 4.30026).abs() < 1e-5);
    }

    #[test]
    fn probabilistic_uses_inverse_of_kappa1() {
        let e = LyapunovEstimate::probabilistic(pair(1.0, 1.0), 0.0, 1.0, 1e-6).unwrap();
        assert_eq!(e.rho_prime, Kappa::identity());
        assert_eq!(e.kappa_low, e.nu);
        assert_eq!(e.horizon_t, 16);
        assert!((e.kappa_up.at(1.0) - KAPPA_UP_FACTOR).abs() < 1e-15);

        let e = LyapunovEstimate::probabilistic(pair(2.0, 0.5), 0.0, 1.0, 1e-6).unwrap();
        // κ₁(w) = √w so ρ′(d) = d²
        assert!((e.rho_prime.at(3.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn mean_rho_is_concave() {
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let e = LyapunovEstimate::mean(pair(1.0, 1.2), 0.0, 5.0, 1e-6, 0.05, &grid).unwrap();
        let Kappa::Piecewise(r) = &e.rho_prime else { panic!() };
        assert!(r.is_concave(1e-12));
        // κ₁(w) = w^1.2 is already convex, so ρ′ ≈ w^{1/1.2} above κ₁(vbar)
        for y in [0.5, 1.0, 4.0, 9.0] {
            assert!((r.at(y) - y.powf(1.0 / 1.2)).abs() < 1e-2, "y={y}");
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(LyapunovEstimate::probabilistic(pair(1.0, 1.0), -1.0, 1.0, 1e-6).is_err());
        assert!(LyapunovEstimate::probabilistic(pair(1.0, 1.0), 0.0, 1.0, 0.0).is_err());
    }
}
