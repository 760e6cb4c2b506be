use serde::{Deserialize, Serialize};

use super::piecewise::{running_max, PiecewiseKappa};
use crate::error::{Error, Result};

/// Tabulated overshoot certificate: initial distance at most `delta(eps)`
/// keeps the trajectory within `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCertificate {
    pub table: Vec<(f64, f64)>,
    /// Right edge of the leading zero set of `delta`.
    pub v0: f64,
    /// The argument offset `δ⁻¹(0)`, equal to `v0`.
    pub c0: f64,
}

impl DeltaCertificate {
    /// Table rows `(eps, delta)`; eps must start at 0 and increase strictly.
    pub fn from_table(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Contract("delta table needs at least two rows".into()));
        }
        if table[0].0 != 0.0 {
            return Err(Error::Contract(format!("delta table must start at eps = 0, got {}", table[0].0)));
        }
        for (i, &(e, d)) in table.iter().enumerate() {
            if !(e.is_finite() && d.is_finite() && e >= 0.0 && d >= 0.0) {
                return Err(Error::Contract(format!("delta row {i} = ({e}, {d}) is not finite and nonnegative")));
            }
            if i > 0 && e <= table[i - 1].0 {
                return Err(Error::Contract(format!("delta table eps not strictly increasing at row {i}")));
            }
        }
        let v0 = table.iter().take_while(|&&(_, d)| d == 0.0).map(|&(e, _)| e).last().unwrap_or(0.0);
        Ok(Self { table, v0, c0: v0 })
    }

    pub fn from_fn(eps: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_table(eps.iter().map(|&e| (e, f(e))).collect())
    }

    pub fn eps(&self) -> impl Iterator<Item = f64> + '_ {
        self.table.iter().map(|r| r.0)
    }

    /// Running maximum over eps.
    pub fn monotone_envelope(&self) -> Result<Self> {
        if self.table.is_empty() {
            return Err(Error::Contract("empty delta table".into()));
        }
        let ds = running_max(self.table.iter().map(|r| r.1).collect());
        Self::from_table(self.eps().zip(ds).collect())
    }

    pub fn is_monotone(&self) -> bool {
        self.table.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    /// Whether `delta(eps) <= eps` on every row.
    pub fn is_bounded_by_eps(&self) -> bool {
        self.table.iter().all(|&(e, d)| d <= e)
    }

    /// The table as a nondecreasing piecewise-linear function.
    ///
    /// The tail continues the last segment. A flat last segment falls back to
    /// the secant from the origin so that the function stays unbounded.
    pub fn to_kappa(&self) -> Result<PiecewiseKappa> {
        if !self.is_monotone() {
            return Err(Error::Contract("delta table must be monotone; apply monotone_envelope".into()));
        }
        let n = self.table.len();
        let (e1, d1) = self.table[n - 1];
        let (e0, d0) = self.table[n - 2];
        let mut slope = (d1 - d0) / (e1 - e0);
        if slope <= 0.0 {
            slope = d1 / e1;
        }
        if slope <= 0.0 {
            return Err(Error::Contract("delta is identically zero on its table; it must be unbounded".into()));
        }
        PiecewiseKappa::new(self.table.clone(), slope)
    }
}

/// `δ̂(ε) = (1/(ε+1)) ∫₀^ε δ`, sampled on the table refined `refine`-fold.
///
/// The integral of the piecewise-linear `δ` is accumulated exactly by the
/// trapezoid rule, so `δ̂` is exact at every output knot.
pub fn riemann_smooth(d: &DeltaCertificate, refine: usize) -> Result<PiecewiseKappa> {
    let delta = d.to_kappa()?;
    let refine = refine.max(1);
    let mut xs = vec![0.0];
    let mut ints = vec![0.0];
    let mut acc = 0.0;
    for w in d.table.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        let mut prev = a;
        let mut prev_y = delta.at(a);
        for k in 1..=refine {
            let x = if k == refine { b } else { a + (b - a) * (k as f64 / refine as f64) };
            let y = delta.at(x);
            acc += 0.5 * (prev_y + y) * (x - prev);
            xs.push(x);
            ints.push(acc);
            prev = x;
            prev_y = y;
        }
    }
    let ys: Vec<f64> = running_max(xs.iter().zip(&ints).map(|(&x, &i)| i / (x + 1.0)).collect());
    let n = xs.len() - 1;
    let (xn, in_) = (xs[n], ints[n]);
    let dn = delta.at(xn);
    let tangent = (dn * (xn + 1.0) - in_) / ((xn + 1.0) * (xn + 1.0));
    let slope = tangent.min(delta.extension_slope());
    if slope <= 0.0 {
        return Err(Error::Contract("smoothed delta has no positive tail slope".into()));
    }
    PiecewiseKappa::from_parts(xs, ys, slope)
}

/// Polygonal chain through `(0, d₁), (1, d₁), (2, d₂), …` where `d_{k+1}`
/// is the minimum of `δ` over `[k, k+1]`.
///
/// Only unit intervals fully covered by the table are used.
pub fn polygonal_delta(d: &DeltaCertificate) -> Result<PiecewiseKappa> {
    let delta = d.to_kappa()?;
    let top = d.table.last().map(|r| r.0).unwrap_or(0.0).floor() as usize;
    if top < 1 {
        return Err(Error::Contract("delta table must cover at least [0, 1]".into()));
    }
    let mut ds = Vec::with_capacity(top);
    for k in 0..top {
        let (lo, hi) = (k as f64, (k + 1) as f64);
        let inner = d.eps().filter(|&e| e > lo && e < hi).map(|e| delta.at(e));
        let m = inner.fold(delta.at(lo).min(delta.at(hi)), f64::min);
        ds.push(m);
    }
    let mut knots = vec![(0.0, ds[0])];
    knots.extend(ds.iter().enumerate().map(|(k, &dk)| ((k + 1) as f64, dk)));
    let ys = running_max(knots.iter().map(|k| k.1).collect());
    let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
    let slope = if top >= 2 { (ys[top] - ys[top - 1]).max(0.0) } else { 0.0 };
    PiecewiseKappa::from_parts(xs, ys, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(top: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| top * k as f64 / n as f64).collect()
    }

    #[test]
    fn envelope_examples() {
        let d = DeltaCertificate::from_table(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.3), (3.0, 0.8)]).unwrap();
        let m = d.monotone_envelope().unwrap();
        let ds: Vec<f64> = m.table.iter().map(|r| r.1).collect();
        assert_eq!(ds, vec![0.0, 0.5, 0.5, 0.8]);
        assert_eq!(m.monotone_envelope().unwrap(), m);

        let d = DeltaCertificate::from_table(vec![(0.0, 0.2), (1.0, 0.1)]).unwrap();
        let ds: Vec<f64> = d.monotone_envelope().unwrap().table.iter().map(|r| r.1).collect();
        assert_eq!(ds, vec![0.2, 0.2]);
    }

    #[test]
    fn zero_set_edge() {
        let d = DeltaCertificate::from_fn(&grid(4.0, 8), |e| (e - 1.0).max(0.0)).unwrap();
        assert_eq!(d.v0, 1.0);
        assert_eq!(d.c0, 1.0);
        let pos = DeltaCertificate::from_fn(&grid(4.0, 8), |e| e).unwrap();
        assert_eq!(pos.c0, 0.0);
    }

    #[test]
    fn riemann_identity_closed_form() {
        let d = DeltaCertificate::from_fn(&grid(10.0, 100), |e| e).unwrap();
        let s = riemann_smooth(&d, 1).unwrap();
        // ε²/(2(ε+1)); the trapezoid rule is exact on linear integrands
        assert!((s.eval(1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((s.eval(3.0).unwrap() - 1.125).abs() < 1e-12);
    }

    #[test]
    fn riemann_keeps_zero_set() {
        let d = DeltaCertificate::from_fn(&grid(4.0, 40), |e| (e - 0.5).max(0.0)).unwrap();
        let s = riemann_smooth(&d, 2).unwrap();
        for k in 0..=5 {
            assert_eq!(s.eval(0.1 * k as f64).unwrap(), 0.0);
        }
        assert!(s.eval(0.6).unwrap() > 0.0);
        assert_eq!(s.upper_inverse(0.0).unwrap(), 0.5);
    }

    #[test]
    fn polygonal_examples() {
        let d = DeltaCertificate::from_fn(&grid(6.0, 60), |e| e).unwrap();
        let p = polygonal_delta(&d).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 0.0);
        assert_eq!(p.eval(2.0).unwrap(), 1.0);

        let c = DeltaCertificate::from_fn(&grid(6.0, 60), |_| 0.7).unwrap();
        let p = polygonal_delta(&c).unwrap();
        for v in [0.0, 0.5, 3.3, 9.0] {
            assert_eq!(p.eval(v).unwrap(), 0.7);
        }

        let d2 = DeltaCertificate::from_fn(&grid(6.0, 60), |e| 2.0 * e).unwrap();
        assert_eq!(polygonal_delta(&d2).unwrap().eval(2.0).unwrap(), 2.0);
    }

    fn monotone_table() -> impl Strategy<Value = DeltaCertificate> {
        (prop::collection::vec(0.0f64..1.0, 8..40), 0usize..4).prop_map(|(steps, zeros)| {
            let mut rows = Vec::new();
            let mut d = 0.0;
            for (k, s) in steps.iter().enumerate() {
                if k > zeros {
                    d += s;
                }
                rows.push((k as f64 * 0.5, d));
            }
            rows.push((steps.len() as f64 * 0.5, d + 1.0));
            DeltaCertificate::from_table(rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn smoothed_is_below_delta(d in monotone_table()) {
            let delta = d.to_kappa().unwrap();
            let s = riemann_smooth(&d, 3).unwrap();
            for &x in s.xs() {
                prop_assert!(s.at(x) <= delta.at(x) + 1e-12);
            }
        }

        #[test]
        fn smoothed_quarter_bound(d in monotone_table()) {
            let delta = d.to_kappa().unwrap();
            let s = riemann_smooth(&d, 3).unwrap();
            for &x in s.xs().iter().filter(|&&x| x >= 1.0) {
                prop_assert!(s.at(x) >= 0.25 * delta.at(x / 2.0) - 1e-12);
            }
        }

        #[test]
        fn polygonal_is_below_delta(d in monotone_table()) {
            let delta = d.to_kappa().unwrap();
            let p = polygonal_delta(&d).unwrap();
            let top = p.last_knot().0;
            for e in d.eps().filter(|&e| e <= top) {
                prop_assert!(p.at(e) <= delta.at(e) + 1e-12);
            }
        }
    }
}
