use serde::{Deserialize, Serialize};

use super::delta::{polygonal_delta, riemann_smooth, DeltaCertificate};
use super::kl::{KLFunction, KlGrid};
use super::piecewise::PiecewiseKappa;
use super::reach::ReachCertificate;
use crate::error::{Error, Result};

/// How the overshoot table is made continuous and invertible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Running-average integral, strictly increasing off the zero set.
    #[default]
    Riemann,
    /// Polygonal chain through unit-interval minima.
    Polygonal,
    /// The monotone envelope as given.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructConfig {
    /// Weight of the strict-decrease term `c1·v·e^{−c2·τ}`.
    pub c1: f64,
    /// Its rate; lowered when the reach horizon is so long that the term
    /// would underflow.
    pub c2: f64,
    pub smoothing: Smoothing,
    /// Subdivisions per table cell for the smoothed overshoot function.
    pub refine: usize,
    pub v_max: f64,
    pub v_step: f64,
    pub t_step: f64,
    /// End of the uniform part of the time grid; geometric beyond.
    pub t_uniform_end: f64,
    pub t_ratio: f64,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        Self {
            c1: 1e-3,
            c2: 1.0,
            smoothing: Smoothing::Riemann,
            refine: 4,
            v_max: 10.0,
            v_step: 0.05,
            t_step: 0.05,
            t_uniform_end: 5.0,
            t_ratio: 1.02,
        }
    }
}

/// Largest ball radius for which the factor `2^i` stays far from overflow.
pub const MAX_RADIUS_INDEX: usize = 900;

/// Nonincreasing polygonal bound in time, constant past its last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayChain {
    knots: Vec<(f64, f64)>,
}

impl DecayChain {
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let k = &self.knots;
        let j = k.partition_point(|&(t, _)| t <= tau);
        if j == 0 {
            return k[0].1;
        }
        if j == k.len() {
            return k[k.len() - 1].1;
        }
        let ((t0, y0), (t1, y1)) = (k[j - 1], k[j]);
        y0 + (y1 - y0) * ((tau - t0) / (t1 - t0))
    }

    pub fn last_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }
}

/// Builds the time chain through `(0, ε₁), (1, ε₁), (2, ε₂), …` for one reach row.
///
/// `ε_j` for `j ≥ 2` is the smallest grid eps certified from time `j − 1`,
/// clamped so the sequence never increases. Uncertified (infinite) entries end
/// the descent.
pub fn decay_chain(eps1: f64, eps_grid: &[f64], times: &[f64]) -> DecayChain {
    let mut knots = vec![(0.0, eps1), (1.0, eps1)];
    let mut cur = eps1;
    for k in (0..eps_grid.len()).rev() {
        let t = times[k];
        if !t.is_finite() {
            break;
        }
        let e = eps_grid[k];
        if e >= cur {
            continue;
        }
        let j = (t.ceil() + 1.0).max(2.0);
        let last = knots.len() - 1;
        if knots[last].0 == j {
            knots[last].1 = e;
        } else {
            if knots[last].0 < j - 1.0 {
                knots.push((j - 1.0, cur));
            }
            knots.push((j, e));
        }
        cur = e;
    }
    DecayChain { knots }
}

/// Overshoot bound in terms of the offset distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Xi {
    pub delta: PiecewiseKappa,
    pub c0: f64,
}

impl Xi {
    /// Generalized inverse of the smoothed overshoot function; zero below its range.
    pub fn delta_inv(&self, y: f64) -> f64 {
        if y < self.delta.ys()[0] {
            0.0
        } else {
            self.delta.upper_inverse(y).unwrap_or(f64::INFINITY)
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v < self.c0 {
            v
        } else {
            self.delta_inv(v - self.c0)
        }
    }
}

/// Exact (grid-free) evaluator of the constructed bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructedKl {
    /// `chains[i − 1]` is the chain for ball radius `i`.
    pub chains: Vec<DecayChain>,
    pub xi: Xi,
    pub c1: f64,
    pub c2: f64,
}

impl ConstructedKl {
    fn chain_bound(&self, i: usize, tau: f64) -> f64 {
        self.chains[i - 1].eval(tau) + self.c1 * i as f64 * (-self.c2 * tau).exp()
    }

    fn beta_star(&self, j: usize, v: f64, tau: f64, xi_v: f64) -> f64 {
        self.chain_bound(j, tau).min(xi_v) + self.c1 * v * (-self.c2 * tau).exp()
    }

    fn beta_i(&self, i: usize, v: f64, tau: f64, xi_v: f64) -> f64 {
        let m = (1..=i).map(|j| self.beta_star(j, v, tau, xi_v)).fold(0.0, f64::max);
        (2.0f64).powi(i as i32) * m
    }

    /// `(v − ⌊v⌋)·β_{⌊v⌋+2} + (⌊v⌋ + 1 − v)·β_{⌊v⌋+1}`.
    pub fn eval(&self, v: f64, tau: f64) -> f64 {
        let fl = v.floor();
        let i = fl as usize + 1;
        let xi_v = self.xi.eval(v);
        let lo = self.beta_i(i, v, tau, xi_v);
        let w = v - fl;
        if w == 0.0 {
            return lo;
        }
        w * self.beta_i(i + 1, v, tau, xi_v) + (1.0 - w) * lo
    }

    pub fn max_radius(&self) -> f64 {
        self.chains.len() as f64 - 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlConstruction {
    pub beta: KLFunction,
    pub c0: f64,
    pub exact: ConstructedKl,
}

/// Builds a KL bound from reach and overshoot certificates.
///
/// The returned grid is stored one cell ahead in both directions (each node
/// holds the exact value at the next node up in `v` and the previous node in
/// `t`), so bilinear interpolation never undercuts the exact construction.
pub fn construct_kl_from_certificate(
    reach: &ReachCertificate,
    delta: &DeltaCertificate,
    cfg: &ConstructConfig,
) -> Result<KlConstruction> {
    if !(cfg.c1 > 0.0 && cfg.c2 > 0.0) {
        return Err(Error::Config(format!("c1 and c2 must be positive, got {} and {}", cfg.c1, cfg.c2)));
    }
    if !(cfg.v_max > 0.0 && cfg.v_step > 0.0 && cfg.t_step > 0.0 && cfg.t_ratio > 1.0 && cfg.t_uniform_end > 0.0) {
        return Err(Error::Config("grid spec needs positive v_max, v_step, t_step, t_uniform_end and t_ratio > 1".into()));
    }
    let env = delta.monotone_envelope()?;
    let smoothed = match cfg.smoothing {
        Smoothing::Riemann => riemann_smooth(&env, cfg.refine)?,
        Smoothing::Polygonal => polygonal_delta(&env)?,
        Smoothing::None => env.to_kappa()?,
    };
    let mut xi = Xi { delta: smoothed, c0: 0.0 };
    xi.c0 = xi.delta_inv(0.0);
    let c0 = xi.c0;

    let n_v = (cfg.v_max / cfg.v_step).round() as usize;
    let v_grid: Vec<f64> = (0..=n_v).map(|k| k as f64 * cfg.v_step).collect();
    let v_virtual = v_grid[n_v] + cfg.v_step;
    let top = v_virtual.floor() as usize + 2;
    if top > MAX_RADIUS_INDEX {
        return Err(Error::Config(format!(
            "v range needs radius index {top}; the factor 2^i is capped at i = {MAX_RADIUS_INDEX}"
        )));
    }

    let reach = reach.envelope();
    let mut chains = Vec::with_capacity(top);
    for i in 1..=top {
        let row = reach.row_at_least(i as f64).ok_or_else(|| {
            Error::Config(format!(
                "grid too coarse to resolve reach support: no reach row at v >= {i} (largest is {})",
                reach.v_grid().last().copied().unwrap_or(0.0)
            ))
        })?;
        let eps1 = xi.delta_inv(i as f64);
        if !eps1.is_finite() {
            return Err(Error::Config(format!("overshoot bound is unbounded at radius {i}")));
        }
        chains.push(decay_chain(eps1, reach.eps_grid(), reach.row(row)));
    }
    // Past the last chain knot only c1·v·e^{−c2τ} keeps β decreasing, so it
    // must stay resolvable against the chain floor out to the grid end.
    let last_knot = chains.iter().map(DecayChain::last_time).fold(0.0, f64::max);
    let floor = reach.eps_grid().iter().copied().filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
    let budget = ((cfg.c1 * 1e6 / floor).ln() - (1e4f64).ln()).max(1.0);
    let c2 = if last_knot > 0.0 { cfg.c2.min(budget / last_knot) } else { cfg.c2 };
    let exact = ConstructedKl { chains, xi, c1: cfg.c1, c2 };

    let t_max = (last_knot + (1e4f64).ln() / c2).max(cfg.t_uniform_end);
    let t_grid = time_grid(cfg.t_step, cfg.t_uniform_end, cfg.t_ratio, t_max);

    // exact values on the v grid plus one virtual row
    let mut vs_ext = v_grid.clone();
    vs_ext.push(v_virtual);
    let shifted_row = |v: f64| -> Vec<f64> {
        let f: Vec<f64> = t_grid.iter().map(|&t| exact.eval(v, t)).collect();
        let mut out = Vec::with_capacity(f.len());
        out.push(f[0] * (1.0 + 1e-6));
        out.extend_from_slice(&f[..f.len() - 1]);
        out
    };
    let m = t_grid.len();
    let mut values = vec![0.0; v_grid.len() * m];
    for k in 1..v_grid.len() {
        values[k * m..(k + 1) * m].copy_from_slice(&shifted_row(vs_ext[k + 1]));
    }
    let grid = KlGrid::new(v_grid, t_grid, values)?;
    let axioms = grid.axioms();
    if !axioms.all() {
        return Err(Error::Config(format!(
            "constructed bound fails KL checks ({}); refine the eps grid or extend the reach table",
            axioms.failures().join(", ")
        )));
    }
    Ok(KlConstruction {
        beta: KLFunction::Grid(grid),
        c0,
        exact,
    })
}

fn time_grid(step: f64, uniform_end: f64, ratio: f64, t_max: f64) -> Vec<f64> {
    let n = (uniform_end / step).round() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let mut t = ts[n];
    while t < t_max {
        t *= ratio;
        ts.push(t);
    }
    ts
}
