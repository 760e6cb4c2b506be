use super::piecewise::PiecewiseKappa;
use crate::error::{Error, Result};

fn slope(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    (y1 - y0) / (x1 - x0)
}

/// Convex K∞ function lying above `k` on `[vbar, ∞)`.
///
/// The chain starts with the chord from the origin to `(vbar, k(vbar))` and
/// then follows `k`'s knots with the running maximum of the slopes. Knot
/// values are nudged up by single ulps where rounding would otherwise make a
/// recomputed slope dip, so the output slopes are nondecreasing exactly.
pub fn convex_majorant(k: &PiecewiseKappa, vbar: f64) -> Result<PiecewiseKappa> {
    if !k.is_strict() {
        return Err(Error::Contract("convex majorant requires a K∞ input".into()));
    }
    if !(vbar.is_finite() && vbar > 0.0) {
        return Err(Error::Domain(format!("vbar must be positive, got {vbar}")));
    }
    let (last_x, _) = k.last_knot();
    let mut xs = vec![0.0, vbar];
    let mut ys = vec![0.0, k.at(vbar)];
    // Past k's last knot the tail is k's own extension line, anchored at a
    // different point; lift value and slope so rounding cannot undercut it.
    let beyond = vbar > last_x;
    if beyond {
        ys[1] = (ys[1] * (1.0 + 8.0 * f64::EPSILON)).next_up();
    }
    let mut s = ys[1] / vbar;
    let mut prev_slope = s;
    let src_slopes = k.slopes();
    let start = k.xs().partition_point(|&x| x <= vbar);
    for idx in start..k.len() {
        // slope of k on the segment ending at this knot
        s = s.max(src_slopes[idx - 1]);
        let x = k.xs()[idx];
        let (xl, yl) = (xs[xs.len() - 1], ys[ys.len() - 1]);
        let mut y = (yl + s * (x - xl)).max(k.ys()[idx]);
        while slope(xl, yl, x, y) < prev_slope {
            y = y.next_up();
        }
        prev_slope = slope(xl, yl, x, y);
        xs.push(x);
        ys.push(y);
    }
    let mut ext = s.max(k.extension_slope()).max(prev_slope);
    if beyond {
        ext *= 1.0 + 8.0 * f64::EPSILON;
    }
    PiecewiseKappa::from_parts(xs, ys, ext)
}

/// Inverse of a convex K∞ function; concave by construction.
pub fn concave_inverse(kconv: &PiecewiseKappa) -> Result<PiecewiseKappa> {
    if !kconv.is_strict() {
        return Err(Error::Contract("concave inverse requires a strict K∞ input".into()));
    }
    if !kconv.is_convex(1e-12) {
        return Err(Error::Contract("concave inverse requires a convex input".into()));
    }
    let xs: Vec<f64> = kconv.ys().to_vec();
    let mut ys: Vec<f64> = kconv.xs().to_vec();
    let mut prev = f64::INFINITY;
    for i in 1..xs.len() {
        while slope(xs[i - 1], ys[i - 1], xs[i], ys[i]) > prev && ys[i].next_down() > ys[i - 1] {
            ys[i] = ys[i].next_down();
        }
        prev = slope(xs[i - 1], ys[i - 1], xs[i], ys[i]);
    }
    let ext = (1.0 / kconv.extension_slope()).min(prev);
    PiecewiseKappa::from_parts(xs, ys, ext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sampled(f: impl Fn(f64) -> f64, top: f64, n: usize, ext: f64) -> PiecewiseKappa {
        let xs: Vec<f64> = (0..=n).map(|k| top * k as f64 / n as f64).collect();
        PiecewiseKappa::from_fn(&xs, f, ext).unwrap()
    }

    fn slopes_nondecreasing(k: &PiecewiseKappa) -> bool {
        k.slopes().windows(2).all(|w| w[1] >= w[0])
    }

    #[test]
    fn sqrt_majorant_dominates_above_vbar() {
        let k = sampled(f64::sqrt, 100.0, 1000, 0.05);
        let m = convex_majorant(&k, 1.0).unwrap();
        assert!(slopes_nondecreasing(&m));
        for &x in k.xs().iter().filter(|&&x| x >= 1.0) {
            assert!(m.at(x) >= k.at(x));
        }
        // the chord slope at vbar is 1, which dominates every later slope of √v
        assert!((m.at(50.0) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn convex_input_is_reproduced() {
        let k = sampled(|v| v * v, 10.0, 100, 20.0);
        let m = convex_majorant(&k, 1.0).unwrap();
        for &x in k.xs().iter().filter(|&&x| x >= 1.0) {
            assert!((m.at(x) - k.at(x)).abs() <= 1e-9);
        }
        let lin = PiecewiseKappa::linear(3.0);
        let m = convex_majorant(&lin, 0.5).unwrap();
        for x in [0.0, 0.5, 1.0, 4.0] {
            assert_eq!(m.at(x), 3.0 * x);
        }
    }

    #[test]
    fn inverse_of_linear_and_square() {
        let r = concave_inverse(&PiecewiseKappa::linear(2.0)).unwrap();
        assert_eq!(r.eval(3.0).unwrap(), 1.5);
        assert_eq!(r.eval(0.0).unwrap(), 0.0);

        let sq = sampled(|v| v * v, 10.0, 1000, 20.0);
        let r = concave_inverse(&sq).unwrap();
        assert!(r.is_concave(0.0));
        for k in 0..=100 {
            let y = k as f64;
            assert!((r.at(y) - y.sqrt()).abs() < 5e-3, "y={y}");
        }
        for &x in sq.xs() {
            assert!((sq.at(r.at(x)) - x).abs() <= 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn nonconvex_input_rejected() {
        let k = sampled(f64::sqrt, 4.0, 16, 0.25);
        assert!(matches!(concave_inverse(&k), Err(Error::Contract(_))));
    }

    fn strict_kappa() -> impl Strategy<Value = PiecewiseKappa> {
        prop::collection::vec((0.01f64..3.0, 0.01f64..3.0), 1..15).prop_map(|steps| {
            let mut knots = vec![(0.0, 0.0)];
            let (mut x, mut y) = (0.0, 0.0);
            for (dx, dy) in steps {
                x += dx;
                y += dy;
                knots.push((x, y));
            }
            PiecewiseKappa::new(knots, 0.3).unwrap()
        })
    }

    proptest! {
        #[test]
        fn majorant_is_convex_and_dominates(k in strict_kappa(), vbar in 0.05f64..5.0) {
            let m = convex_majorant(&k, vbar).unwrap();
            prop_assert!(m.is_strict());
            prop_assert!(slopes_nondecreasing(&m));
            for &x in k.xs().iter().filter(|&&x| x >= vbar) {
                prop_assert!(m.at(x) >= k.at(x));
            }
            prop_assert!(m.at(vbar * 40.0 + 100.0) >= k.at(vbar * 40.0 + 100.0));
        }

        #[test]
        fn majorant_past_last_knot_stays_above_tail(k in strict_kappa(), past in 0.0f64..5.0, probe in 0.0f64..1e6) {
            let vbar = k.last_knot().0 + past + 1e-3;
            let m = convex_majorant(&k, vbar).unwrap();
            for x in [vbar, vbar * (1.0 + 1e-12), vbar + probe, vbar + probe * 1e-9] {
                prop_assert!(m.at(x) >= k.at(x), "x = {}", x);
            }
        }

        #[test]
        fn concave_inverse_slopes_nonincreasing(k in strict_kappa(), vbar in 0.05f64..5.0) {
            let m = convex_majorant(&k, vbar).unwrap();
            let r = concave_inverse(&m).unwrap();
            prop_assert!(r.slopes().windows(2).all(|w| w[1] <= w[0]));
            for &x in m.xs() {
                prop_assert!((m.at(r.at(m.at(x))) - m.at(x)).abs() <= 1e-9 * (1.0 + m.at(x)));
            }
        }
    }
}
