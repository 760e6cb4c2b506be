use serde::{Deserialize, Serialize};

use super::piecewise::PiecewiseKappa;
use crate::error::{Error, Result};

/// A K∞ function, either in closed form or as a piecewise-linear table.
///
/// The closed form `v ↦ coef·v^exponent` keeps exponential KL bounds exact
/// under factorization, which a grid cannot do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Kappa {
    Power { coef: f64, exponent: f64 },
    Piecewise(PiecewiseKappa),
}

impl Kappa {
    pub fn identity() -> Self {
        Kappa::Power { coef: 1.0, exponent: 1.0 }
    }

    pub fn linear(slope: f64) -> Self {
        Kappa::Power { coef: slope, exponent: 1.0 }
    }

    pub fn power(coef: f64, exponent: f64) -> Result<Self> {
        if !(coef.is_finite() && coef > 0.0 && exponent.is_finite() && exponent > 0.0) {
            return Err(Error::Contract(format!(
                "power function needs positive finite coef and exponent, got {coef}, {exponent}"
            )));
        }
        Ok(Kappa::Power { coef, exponent })
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Domain(format!("comparison functions take v >= 0, got {v}")));
        }
        Ok(self.at(v))
    }

    pub(crate) fn at(&self, v: f64) -> f64 {
        match self {
            Kappa::Power { coef, exponent } => coef * v.max(0.0).powf(*exponent),
            Kappa::Piecewise(p) => p.at(v),
        }
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        match self {
            Kappa::Power { coef, exponent } => {
                if y.is_nan() || y < 0.0 {
                    return Err(Error::Domain(format!("value {y} is below f(0) = 0")));
                }
                Ok((y / coef).powf(1.0 / exponent))
            }
            Kappa::Piecewise(p) => p.invert(y),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        match self {
            Kappa::Power { coef, exponent } => Kappa::power(coef.powf(-1.0 / exponent), 1.0 / exponent),
            Kappa::Piecewise(p) => Ok(Kappa::Piecewise(p.inverse()?)),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self {
            Kappa::Power { coef, exponent } => Kappa::power(coef * factor, *exponent),
            Kappa::Piecewise(p) => Ok(Kappa::Piecewise(p.scaled(factor)?)),
        }
    }

    /// Piecewise-linear interpolant on `xs` (which must start at zero).
    ///
    /// The tail continues with the secant slope of the last grid cell.
    pub fn to_piecewise(&self, xs: &[f64]) -> Result<PiecewiseKappa> {
        match self {
            Kappa::Piecewise(p) => Ok(p.clone()),
            Kappa::Power { .. } => {
                let n = xs.len();
                if n < 2 {
                    return Err(Error::Contract("need at least two abscissae to sample".into()));
                }
                let slope = (self.at(xs[n - 1]) - self.at(xs[n - 2])) / (xs[n - 1] - xs[n - 2]);
                PiecewiseKappa::from_fn(xs, |v| self.at(v), slope)
            }
        }
    }

    pub fn is_strict(&self) -> bool {
        match self {
            Kappa::Power { .. } => true,
            Kappa::Piecewise(p) => p.is_strict(),
        }
    }
}

impl From<PiecewiseKappa> for Kappa {
    fn from(p: PiecewiseKappa) -> Self {
        Kappa::Piecewise(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_inverse_round_trip() {
        let k = Kappa::power(4.0, 2.0).unwrap();
        assert_eq!(k.eval(1.0).unwrap(), 4.0);
        assert_eq!(k.invert(4.0).unwrap(), 1.0);
        let inv = k.inverse().unwrap();
        assert!((inv.at(k.at(0.37)) - 0.37).abs() < 1e-15);
    }

    #[test]
    fn sampled_power_matches_at_knots() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let p = Kappa::power(1.0, 2.0).unwrap().to_piecewise(&xs).unwrap();
        assert_eq!(p.eval(3.0).unwrap(), 9.0);
        assert_eq!(p.extension_slope(), 19.0);
    }

    #[test]
    fn rejects_nonpositive_power() {
        assert!(Kappa::power(0.0, 1.0).is_err());
        assert!(Kappa::power(1.0, -1.0).is_err());
    }
}
