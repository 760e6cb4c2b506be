use serde::{Deserialize, Serialize};

use super::kappa_fn::Kappa;
use super::kl::{Family, KLFunction, KlGrid};
use super::piecewise::{running_max, PiecewiseKappa};
use crate::error::{Error, Result};

/// `β(v, t) ≤ κ₁(κ₂(v)·e^{−t})` with `κ₁, κ₂ ∈ K∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SontagPair {
    pub kappa1: Kappa,
    pub kappa2: Kappa,
    /// Largest ratio `κ₁(κ₂(v)e^{−t}) / β(v, t)` over the checked grid (1 when exact).
    pub slack: f64,
}

impl SontagPair {
    pub fn eval(&self, v: f64, t: f64) -> f64 {
        self.kappa1.at(self.kappa2.at(v) * (-t).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SontagConfig {
    /// Reject grid factorizations whose slack exceeds this ratio.
    pub slack_bound: f64,
    /// Exponents `p` tried for `κ₂(v) = β(v, 0)^p`, log-spaced over this range.
    pub p_range: (f64, f64),
    pub p_count: usize,
    /// Grid used for parametric families without a closed form.
    pub v_max: f64,
    pub t_max: f64,
    pub grid_points: usize,
}

impl Default for SontagConfig {
    fn default() -> Self {
        Self {
            slack_bound: 10.0,
            p_range: (0.1, 10.0),
            p_count: 41,
            v_max: 10.0,
            t_max: 40.0,
            grid_points: 200,
        }
    }
}

/// Factorizes `beta` as `κ₁(κ₂(v)e^{−t})`.
///
/// Exponential bounds `C·v·e^{−λt}` factor exactly with `κ₁(w) = w^λ` and
/// `κ₂(v) = (Cv)^{1/λ}`. Grid bounds get an upper factorization that holds
/// at every grid node; its slack is reported and checked against the bound.
pub fn sontag_factorize(beta: &KLFunction, cfg: &SontagConfig) -> Result<SontagPair> {
    match beta {
        KLFunction::Exponential { c, lambda } => exponential_pair(*c, *lambda),
        KLFunction::ParamFamily { family: Family::Exponential, theta } => exponential_pair(theta[0], theta[1]),
        KLFunction::ParamFamily { .. } => {
            let n = cfg.grid_points.max(2);
            let vs: Vec<f64> = (0..=n).map(|k| cfg.v_max * k as f64 / n as f64).collect();
            let ts: Vec<f64> = (0..=n).map(|k| cfg.t_max * k as f64 / n as f64).collect();
            let vals = vs.iter().flat_map(|&v| ts.iter().map(move |&t| (v, t))).map(|(v, t)| beta.at(v, t)).collect();
            grid_pair(&KlGrid::new(vs, ts, vals)?, cfg)
        }
        KLFunction::Grid(g) => grid_pair(g, cfg),
    }
}

fn exponential_pair(c: f64, lambda: f64) -> Result<SontagPair> {
    if !(c > 0.0 && lambda > 0.0) {
        return Err(Error::Contract(format!("exponential bound needs C, λ > 0, got {c}, {lambda}")));
    }
    Ok(SontagPair {
        kappa1: Kappa::power(1.0, lambda)?,
        kappa2: Kappa::power(c.powf(1.0 / lambda), 1.0 / lambda)?,
        slack: 1.0,
    })
}

fn grid_pair(g: &KlGrid, cfg: &SontagConfig) -> Result<SontagPair> {
    let ax = g.axioms();
    if !ax.all() {
        return Err(Error::Contract(format!("input is not KL on its grid ({})", ax.failures().join(", "))));
    }
    let (lo, hi) = cfg.p_range;
    let count = cfg.p_count.max(1);
    let mut best: Option<SontagPair> = None;
    for k in 0..count {
        let p = if count == 1 { lo } else { lo * (hi / lo).powf(k as f64 / (count - 1) as f64) };
        let pair = pair_for_exponent(g, p)?;
        if best.as_ref().is_none_or(|b| pair.slack < b.slack) {
            best = Some(pair);
        }
    }
    let best = best.expect("at least one exponent tried");
    if best.slack > cfg.slack_bound {
        return Err(Error::SlackExceeded { slack: best.slack, bound: cfg.slack_bound });
    }
    Ok(best)
}

fn pair_for_exponent(g: &KlGrid, p: f64) -> Result<SontagPair> {
    let vs = g.v_grid();
    let ts = g.t_grid();
    let m = ts.len();
    let k2_vals: Vec<f64> = (0..vs.len()).map(|i| g.value(i, 0).powf(p)).collect();
    let k2_vals = strictly_increasing(running_max(k2_vals));
    let n = vs.len();
    let k2_tail = (k2_vals[n - 1] - k2_vals[n - 2]) / (vs[n - 1] - vs[n - 2]);
    let kappa2 = PiecewiseKappa::from_parts(vs.to_vec(), k2_vals.clone(), k2_tail)?;

    let decay: Vec<f64> = ts.iter().map(|t| (-t).exp()).collect();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n * m);
    for i in 1..n {
        for j in 0..m {
            pts.push((k2_vals[i] * decay[j], g.value(i, j)));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = vec![0.0];
    let mut ys: Vec<f64> = vec![0.0];
    for (w, b) in pts {
        if w <= 0.0 {
            continue;
        }
        let last = ys.len() - 1;
        if w == xs[last] {
            ys[last] = ys[last].max(b);
        } else {
            xs.push(w);
            ys.push(b.max(ys[last]));
        }
    }
    let ys = strictly_increasing(ys);
    let l = xs.len();
    let k1_tail = ((ys[l - 1] - ys[l - 2]) / (xs[l - 1] - xs[l - 2])).max(ys[l - 1] / xs[l - 1]);
    let kappa1 = PiecewiseKappa::from_parts(xs, ys, k1_tail)?;

    let mut slack: f64 = 1.0;
    for (i, &k2) in k2_vals.iter().enumerate().skip(1) {
        for j in 0..m {
            let b = g.value(i, j);
            if b > 0.0 {
                slack = slack.max(kappa1.at(k2 * decay[j]) / b);
            }
        }
    }
    Ok(SontagPair {
        kappa1: Kappa::Piecewise(kappa1),
        kappa2: Kappa::Piecewise(kappa2),
        slack,
    })
}

/// Lifts flat stretches of a nondecreasing sequence by a relative hair so it
/// becomes strictly increasing; entry 0 is left alone.
fn strictly_increasing(mut ys: Vec<f64>) -> Vec<f64> {
    for i in 1..ys.len() {
        if ys[i] <= ys[i - 1] {
            ys[i] = ys[i - 1].next_up().max(ys[i - 1] * (1.0 + 1e-12));
        }
    }
    ys
}
