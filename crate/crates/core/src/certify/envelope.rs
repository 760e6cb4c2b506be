use serde::{Deserialize, Serialize};

use super::fit::FittedBound;
use super::hoeffding::hoeffding_radius;
use crate::error::{Error, Result};
use crate::kappa::{Family, KLFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// Parameter lattice and offset schedule for envelope extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    pub c_range: (f64, f64),
    pub c_count: usize,
    pub lambda_range: (f64, f64),
    pub lambda_count: usize,
    /// Ratio of the geometric offset schedule, in `(0, 1)`.
    pub lambda_kappa: f64,
    /// `ξ(1)` of the family; 1 for exponentials.
    pub xi_one: f64,
    /// Confidence level used for the reported Hoeffding radius.
    pub confidence: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            c_range: (1.0, 1e3),
            c_count: 16,
            lambda_range: (1e-3, 5.0),
            lambda_count: 16,
            lambda_kappa: 0.01,
            xi_one: 1.0,
            confidence: 0.05,
        }
    }
}

/// Empirical ω-uniform stabilization certificate.
///
/// Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationCertificate {
    pub eta: f64,
    pub eta_prime: f64,
    pub c0: f64,
    pub family: Family,
    pub theta: Vec<f64>,
    pub covered_fraction: f64,
    pub n_traj: usize,
    pub confidence_radius: f64,
    pub verdict: Verdict,
}

impl StabilizationCertificate {
    pub fn envelope(&self) -> Result<KLFunction> {
        KLFunction::exponential(self.theta[0], self.theta[1])
    }

    /// Coverage beyond the required `1 − η`.
    pub fn eta_k(&self) -> f64 {
        self.covered_fraction - (1.0 - self.eta)
    }

    pub fn covers(&self, fit: &FittedBound) -> bool {
        fit.covered_by(self.theta[0], self.theta[1])
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

/// Lattice values: the log-spaced box plus observed values inside it, sorted, deduplicated.
fn axis(lo: f64, hi: f64, n: usize, observed: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v = log_space(lo, hi, n);
    v.extend(observed.filter(|&x| x >= lo && x <= hi));
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Picks one exponential envelope covering at least `⌈(1 − η − η′)·n⌉` fits.
///
/// Lattice elements `(C′, λ′)` are visited in increasing `ln C′ − ln λ′`
/// (ties toward smaller `C′`); the first that covers enough fits is taken.
/// Coverage is pairwise domination `C ≤ C′, λ ≥ λ′`. The offset follows the
/// geometric schedule `ξ(1)·Σ_{j≤k} λ_κ^{j+1}` for lattice position `k`, and
/// is reported as the argument shift `c0 = offset / C′`.
pub fn uniform_envelope(fits: &[FittedBound], eta: f64, eta_prime: f64, cfg: &EnvelopeConfig) -> Result<StabilizationCertificate> {
    if fits.is_empty() {
        return Err(Error::Contract("no fitted bounds".into()));
    }
    if !(eta >= 0.0 && eta_prime > 0.0 && eta + eta_prime < 1.0) {
        return Err(Error::Config(format!("need eta >= 0, eta_prime > 0, eta + eta_prime < 1; got {eta}, {eta_prime}")));
    }
    if !(cfg.lambda_kappa > 0.0 && cfg.lambda_kappa < 1.0) {
        return Err(Error::Config(format!("lambda_kappa must lie in (0, 1), got {}", cfg.lambda_kappa)));
    }
    let n = fits.len();
    let required = ((1.0 - eta - eta_prime) * n as f64).ceil() as usize;
    let cs = axis(cfg.c_range.0, cfg.c_range.1, cfg.c_count, fits.iter().filter(|f| f.valid).map(|f| f.c));
    let ls = axis(
        cfg.lambda_range.0,
        cfg.lambda_range.1,
        cfg.lambda_count,
        fits.iter().filter(|f| f.valid).map(|f| f.lambda),
    );

    let mut valid: Vec<FittedBound> = fits.iter().copied().filter(|f| f.valid).collect();
    valid.sort_by(|a, b| a.c.total_cmp(&b.c));

    // For each C′ the best λ′ is the largest lattice λ not above the
    // required-th largest λ among fits with C ≤ C′.
    let mut best: Option<(f64, f64, f64)> = None;
    let mut lambdas: Vec<f64> = Vec::new();
    let mut next = 0;
    for &c in &cs {
        while next < valid.len() && valid[next].c <= c {
            let pos = lambdas.partition_point(|&l| l > valid[next].lambda);
            lambdas.insert(pos, valid[next].lambda);
            next += 1;
        }
        if required == 0 || lambdas.len() < required {
            continue;
        }
        let target = lambdas[required - 1];
        let li = ls.partition_point(|&l| l <= target);
        if li == 0 {
            continue;
        }
        let l = ls[li - 1];
        let key = c.ln() - l.ln();
        if best.is_none_or(|(bk, bc, _)| key < bk || (key == bk && c < bc)) {
            best = Some((key, c, l));
        }
    }

    let radius = hoeffding_radius(n, cfg.confidence);
    let count = |c: f64, l: f64| fits.iter().filter(|f| f.covered_by(c, l)).count();
    match best {
        Some((key, c, l)) => {
            // lattice position: elements strictly earlier in the visiting order
            let mut k = 0usize;
            for &ci in &cs {
                let bound = ci.ln() - key;
                k += ls.iter().filter(|&&li| li.ln() > bound || (li.ln() == bound && ci < c)).count();
            }
            let lk = cfg.lambda_kappa;
            let offset = cfg.xi_one * lk * (1.0 - lk.powi(k as i32 + 1)) / (1.0 - lk);
            Ok(StabilizationCertificate {
                eta,
                eta_prime,
                c0: offset / c,
                family: Family::Exponential,
                theta: vec![c, l],
                covered_fraction: count(c, l) as f64 / n as f64,
                n_traj: n,
                confidence_radius: radius,
                verdict: Verdict::Pass,
            })
        }
        None => {
            let (c, l) = (cs[cs.len() - 1], ls[0]);
            Ok(StabilizationCertificate {
                eta,
                eta_prime,
                c0: 0.0,
                family: Family::Exponential,
                theta: vec![c, l],
                covered_fraction: count(c, l) as f64 / n as f64,
                n_traj: n,
                confidence_radius: radius,
                verdict: Verdict::Fail,
            })
        }
    }
}
