use crate::error::{Error, Result};

/// Samples needed so an empirical frequency is within `eps` of its
/// probability with confidence `1 − delta`: `⌈ln(2/δ) / (2ε²)⌉`.
pub fn hoeffding_n(eps: f64, delta: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("accuracy and confidence must lie in (0, 1), got {eps}, {delta}")));
    }
    Ok(((2.0 / delta).ln() / (2.0 * eps * eps)).ceil() as usize)
}

/// Two-sided deviation bound `√(ln(2/δ) / (2n))` for `n` samples.
pub fn hoeffding_radius(n: usize, delta: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sample_sizes() {
        // ⌈ln 40 / 0.005⌉ = ⌈737.78⌉ and ⌈ln 20 / 0.02⌉ = ⌈149.79⌉
        assert_eq!(hoeffding_n(0.05, 0.05).unwrap(), 738);
        assert_eq!(hoeffding_n(0.1, 0.1).unwrap(), 150);
        assert_eq!(hoeffding_n(0.999_999, 0.5).unwrap(), 1);
        assert!(hoeffding_n(0.0, 0.5).is_err());
        assert!(hoeffding_n(0.5, 1.0).is_err());
    }

    #[test]
    fn radius_inverts_size() {
        let n = hoeffding_n(0.05, 0.05).unwrap();
        assert!(hoeffding_radius(n, 0.05) <= 0.05);
        assert!(hoeffding_radius(n - 1, 0.05) > 0.05);
    }

    proptest! {
        #[test]
        fn monotone_in_both_arguments(e1 in 0.01f64..0.99, e2 in 0.01f64..0.99, d1 in 0.01f64..0.99, d2 in 0.01f64..0.99) {
            let (elo, ehi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let (dlo, dhi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(hoeffding_n(ehi, dlo).unwrap() <= hoeffding_n(elo, dlo).unwrap());
            prop_assert!(hoeffding_n(elo, dhi).unwrap() <= hoeffding_n(elo, dlo).unwrap());
        }
    }
}
