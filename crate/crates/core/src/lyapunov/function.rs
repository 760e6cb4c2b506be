use super::estimate::LyapunovEstimate;
use super::series::{mean_lf, prob_lf};
use crate::chain::{derive_seed, ChainModel, GoalSet, Policy};
use crate::error::{Error, Result};
use crate::kappa::{KLFunction, Kappa};

/// A Lyapunov function that can be queried at arbitrary states.
///
/// `stream` selects independent Monte Carlo randomness for sampled
/// estimates; exact functions ignore it.
pub trait LyapunovFn: Send + Sync {
    fn value(&self, s: &[f64], stream: u64) -> Result<f64>;
}

impl<F> LyapunovFn for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, s: &[f64], _stream: u64) -> Result<f64> {
        Ok(self(s))
    }
}

/// The probabilistic LF evaluated on demand by simulation.
#[derive(Debug, Clone)]
pub struct ProbLf {
    pub estimate: LyapunovEstimate,
    pub model: ChainModel,
    pub policy: Policy,
    pub goal: GoalSet,
    pub envelope: KLFunction,
    pub n_traj: usize,
    pub seed: u64,
}

impl LyapunovFn for ProbLf {
    fn value(&self, s: &[f64], stream: u64) -> Result<f64> {
        let seed = derive_seed(self.seed, stream);
        Ok(prob_lf(&self.estimate, s, &self.model, &self.policy, &self.goal, &self.envelope, self.n_traj, seed)?.value)
    }
}

/// The mean LF evaluated on demand by simulation.
#[derive(Debug, Clone)]
pub struct MeanLf {
    pub estimate: LyapunovEstimate,
    pub model: ChainModel,
    pub policy: Policy,
    pub goal: GoalSet,
    pub n_traj: usize,
    pub seed: u64,
}

impl LyapunovFn for MeanLf {
    fn value(&self, s: &[f64], stream: u64) -> Result<f64> {
        let seed = derive_seed(self.seed, stream);
        Ok(mean_lf(&self.estimate, s, &self.model, &self.policy, &self.goal, self.n_traj, seed)?.value)
    }
}

/// Radial table: `L(s)` interpolated in `dist′(s)`, extended linearly past
/// the last knot.
///
/// With a `base` function only `L − base` is interpolated and `base(dist′)`
/// is added back exactly. Passing `ρ′` keeps the leading series term exact,
/// which plain interpolation would undercut where `ρ′` is concave.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TabulatedLf {
    pub goal: GoalSet,
    pub dists: Vec<f64>,
    pub values: Vec<f64>,
    pub base: Option<Kappa>,
}

impl TabulatedLf {
    pub fn new(goal: GoalSet, dists: Vec<f64>, values: Vec<f64>, base: Option<Kappa>) -> Result<Self> {
        if dists.len() < 2 || dists.len() != values.len() || dists[0] != 0.0 || dists.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("table needs ≥ 2 strictly increasing distances starting at 0, one value each".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("table values must be finite".into()));
        }
        Ok(Self { goal, dists, values, base })
    }

    /// Samples `lf` along the ray through `direction` at the given `dist′` values.
    pub fn tabulate(lf: &dyn LyapunovFn, goal: GoalSet, direction: &[f64], dists: Vec<f64>, base: Option<Kappa>) -> Result<Self> {
        let n = crate::chain::norm(direction);
        if !(n > 0.0) {
            return Err(Error::Domain("direction must be nonzero".into()));
        }
        let r = goal.radius + goal.inflation;
        let values = dists
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let s: Vec<f64> = direction.iter().map(|x| x / n * (r + d)).collect();
                lf.value(&s, i as u64)
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(goal, dists, values, base)
    }

    /// The same table with values and base multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let base = self.base.as_ref().map(|b| b.scaled(c)).transpose()?;
        Self::new(self.goal, self.dists.clone(), self.values.iter().map(|v| v * c).collect(), base)
    }

    pub fn at_dist(&self, d: f64) -> f64 {
        let b = |x: f64| self.base.as_ref().map_or(0.0, |k| k.at(x));
        let (xs, ys) = (&self.dists, &self.values);
        let n = xs.len();
        let i = if d >= xs[n - 1] { n - 1 } else { xs.partition_point(|&x| x <= d).max(1) };
        let w = (d - xs[i - 1]) / (xs[i] - xs[i - 1]);
        let (y0, y1) = (ys[i - 1] - b(xs[i - 1]), ys[i] - b(xs[i]));
        b(d) + y0 + (y1 - y0) * w
    }
}

impl LyapunovFn for TabulatedLf {
    fn value(&self, s: &[f64], _stream: u64) -> Result<f64> {
        Ok(self.at_dist(self.goal.dist_prime(s)))
    }
}
