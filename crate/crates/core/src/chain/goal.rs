use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Origin-centred ball goal with an inflated companion ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSet {
    pub radius: f64,
    pub inflation: f64,
}

impl GoalSet {
    pub fn new(radius: f64, inflation: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0 && inflation.is_finite() && inflation >= 0.0) {
            return Err(Error::Config(format!(
                "goal radius and inflation must be finite and nonnegative, got {radius}, {inflation}"
            )));
        }
        Ok(Self { radius, inflation })
    }

    /// The goal `{0}` with no inflation.
    pub fn origin() -> Self {
        Self { radius: 0.0, inflation: 0.0 }
    }

    pub fn with_inflation(self, inflation: f64) -> Result<Self> {
        Self::new(self.radius, inflation)
    }

    /// Distance to the goal ball.
    pub fn dist(&self, s: &[f64]) -> f64 {
        (norm(s) - self.radius).max(0.0)
    }

    /// Distance to the inflated ball.
    pub fn dist_prime(&self, s: &[f64]) -> f64 {
        (norm(s) - self.radius - self.inflation).max(0.0)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Euclidean norm, scaled so large finite states do not overflow.
pub fn norm(s: &[f64]) -> f64 {
    let big = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    big * s.iter().map(|x| (x / big) * (x / big)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distances() {
        let g = GoalSet::new(0.5, 0.25).unwrap();
        assert_eq!(g.dist(&[3.0, 4.0]), 4.5);
        assert_eq!(g.dist_prime(&[3.0, 4.0]), 4.25);
        assert_eq!(g.dist(&[0.1]), 0.0);
        assert!(GoalSet::new(-1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn inflation_never_increases_distance(x in -10.0f64..10.0, y in -10.0f64..10.0, r in 0.0f64..3.0, a in 0.0f64..2.0, b in 0.0f64..2.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = [x, y];
            let g = GoalSet::new(r, lo).unwrap();
            prop_assert!(g.dist_prime(&s) <= g.dist(&s));
            prop_assert!(g.with_inflation(hi).unwrap().dist_prime(&s) <= g.dist_prime(&s));
        }
    }
}
