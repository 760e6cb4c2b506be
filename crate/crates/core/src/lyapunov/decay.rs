use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::LyapunovEstimate;
use super::function::LyapunovFn;
use super::series::{mean_lf, series, Welford};
use crate::certify::{hoeffding_radius, Verdict};
use crate::chain::{derive_seed, simulate_into, trajectory_rng, ChainModel, GoalSet, Policy};
use crate::error::{Error, Result};
use crate::kappa::Kappa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    /// Row value is the empirical frequency of the decay event.
    Frequency,
    /// Row value is the telescoping residual.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub state: Vec<f64>,
    pub dist_prime: f64,
    pub value: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: DecayKind,
    pub n_mc: usize,
    pub rows: Vec<DecayRow>,
    /// Test states inside the inflated goal, left out of the check.
    pub skipped: Vec<Vec<f64>>,
    pub verdict: Verdict,
}

impl DecayReport {
    fn new(kind: DecayKind, n_mc: usize, rows: Vec<DecayRow>, skipped: Vec<Vec<f64>>) -> Self {
        let verdict = Verdict::from_bool(rows.iter().all(|r| r.verdict.is_pass()));
        Self { kind, n_mc, rows, skipped, verdict }
    }

    /// Columns `x0.., dist_prime, value, threshold, verdict`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let dim = self.rows.first().map_or(0, |r| r.state.len());
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        header.extend(["dist_prime", "value", "threshold", "verdict"].map(String::from));
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.state.iter().map(|x| x.to_string()).collect();
            rec.push(r.dist_prime.to_string());
            rec.push(r.value.to_string());
            rec.push(r.threshold.to_string());
            rec.push(if r.verdict.is_pass() { "PASS" } else { "FAIL" }.into());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Sampling setup for the one-step probabilistic decay check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub n_mc: usize,
    pub seed: u64,
    pub confidence: f64,
    /// Absolute slack on the decay inequality; use twice the truncation
    /// tolerance when `L` is a truncated series.
    pub abs_slack: f64,
    /// Relative slack, scaled by the magnitudes involved.
    pub rel_slack: f64,
}

impl DecayConfig {
    pub fn new(n_mc: usize, seed: u64) -> Self {
        Self { n_mc, seed, confidence: 0.05, abs_slack: 0.0, rel_slack: 1e-9 }
    }

    pub fn for_estimate(est: &LyapunovEstimate, n_mc: usize, seed: u64) -> Self {
        Self { abs_slack: 2.0 * est.tol, ..Self::new(n_mc, seed) }
    }

    /// `L(X₊) − L(s) ≤ −ν` up to the configured slack.
    pub fn decays(&self, l_next: f64, l_now: f64, nu: f64) -> bool {
        let scale = l_next.abs().max(l_now.abs()).max(nu.abs());
        l_next - l_now <= -nu + self.abs_slack + self.rel_slack * scale
    }
}

fn one_step(model: &ChainModel, policy: &Policy, s: &[f64], seed: u64, k: usize) -> Vec<f64> {
    let mut rng = trajectory_rng(seed, k as u64);
    let mut states = vec![0.0; 2 * model.dim];
    let mut dists = [0.0; 2];
    simulate_into(model, policy, &GoalSet::origin(), s, &mut rng, &mut states, &mut dists);
    states.split_off(model.dim)
}

/// Frequency of `L(X₊) − L(s) ≤ −ν(dist′(s))` over `n_mc` successors of each
/// test state. PASS needs `≥ 1 − η − η′ − r` at every state.
#[allow(clippy::too_many_arguments)]
pub fn verify_decay_prob(
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    lf: &dyn LyapunovFn,
    nu: &Kappa,
    eta: f64,
    eta_prime: f64,
    test_states: &[Vec<f64>],
    cfg: &DecayConfig,
) -> Result<DecayReport> {
    if cfg.n_mc < 1 {
        return Err(Error::Config("n_mc must be at least 1".into()));
    }
    let threshold = 1.0 - eta - eta_prime - hoeffding_radius(cfg.n_mc, cfg.confidence);
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (i, s) in test_states.iter().enumerate() {
        let d = goal.dist_prime(s);
        if d == 0.0 {
            skipped.push(s.clone());
            continue;
        }
        let seed = derive_seed(cfg.seed, i as u64);
        let l_now = lf.value(s, 0)?;
        let nu_d = nu.at(d);
        let hits = (0..cfg.n_mc)
            .into_par_iter()
            .map(|k| {
                let next = one_step(model, policy, s, seed, k);
                let l_next = if next.iter().all(|x| x.is_finite()) { lf.value(&next, k as u64 + 1)? } else { f64::INFINITY };
                Ok(cfg.decays(l_next, l_now, nu_d) as usize)
            })
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum::<usize>();
        let value = hits as f64 / cfg.n_mc as f64;
        rows.push(DecayRow { state: s.clone(), dist_prime: d, value, threshold, verdict: Verdict::from_bool(value >= threshold) });
    }
    Ok(DecayReport::new(DecayKind::Frequency, cfg.n_mc, rows, skipped))
}

/// Telescoping residual `Ê[L(X₁)] − L(s₀) + ρ′(dist′(s₀))` for the mean LF.
///
/// Each of the `n_mc` outer trajectories runs `T + 1` steps; `L(X₁)` is the
/// mean series over `n_inner` fresh trajectories from its first successor,
/// and `L(s₀) − ρ′(dist′(s₀))` is the outer series from step 1 to `T + 1`.
/// Both use horizon `T`, so the identity holds without a truncation term and
/// is exactly zero on deterministic chains. PASS needs
/// `|residual| ≤ 3·√(se₁² + se₂²)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_decay_mean(
    est: &LyapunovEstimate,
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    test_states: &[Vec<f64>],
    n_mc: usize,
    n_inner: usize,
    seed: u64,
) -> Result<DecayReport> {
    if n_mc < 1 || n_inner < 1 {
        return Err(Error::Config("n_mc and n_inner must be at least 1".into()));
    }
    let t = est.horizon_t;
    let n = model.dim;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (i, s) in test_states.iter().enumerate() {
        let d0 = goal.dist_prime(s);
        if d0 == 0.0 {
            skipped.push(s.clone());
            continue;
        }
        let seed_s = derive_seed(seed, i as u64);
        let pairs = (0..n_mc)
            .into_par_iter()
            .map(|k| {
                let mut rng = trajectory_rng(seed_s, k as u64);
                let mut states = vec![0.0; (t + 2) * n];
                let mut dists = vec![0.0; t + 2];
                simulate_into(model, policy, goal, s, &mut rng, &mut states, &mut dists);
                let g = series(&est.rho_prime, &dists[1..], t);
                let x1 = &states[n..2 * n];
                let a = if x1.iter().all(|x| x.is_finite()) {
                    mean_lf(est, x1, model, policy, goal, n_inner, derive_seed(seed_s, k as u64))?.value
                } else {
                    f64::INFINITY
                };
                Ok((a, g))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (mut wa, mut wg) = (Welford::default(), Welford::default());
        for (a, g) in pairs {
            wa.push(a);
            wg.push(g);
        }
        let residual = wa.mean() - wg.mean();
        let threshold = 3.0 * wa.std_error().hypot(wg.std_error());
        rows.push(DecayRow {
            state: s.clone(),
            dist_prime: d0,
            value: residual,
            threshold,
            verdict: Verdict::from_bool(residual.abs() <= threshold),
        });
    }
    Ok(DecayReport::new(DecayKind::Residual, n_mc, rows, skipped))
}
