use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use stochlyap::certify::EnvelopeConfig;
use stochlyap::chain::{linear_uniform_chain, ChainModel, GoalSet, Policy};
use stochlyap::{Error, Result};

/// One experiment: a linear chain `s₊ = F·s + G·a + w` under feedback `a = K·s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub chain: ChainSpec,
    pub goal: GoalSpec,
    pub policy: PolicySpec,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    pub simulate: SimulateSpec,
    pub certify: CertifySpec,
    pub lyapunov: LyapunovSpec,
    pub decay: DecaySpec,
    pub synthesis: SynthesisSpec,
    pub reaching: ReachingSpec,
}

fn default_confidence() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    /// Row-major `F`.
    pub f: Vec<Vec<f64>>,
    /// Row-major `G`.
    pub g: Vec<Vec<f64>>,
    pub wbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub radius: f64,
    /// Inflation used by the certificate and the Lyapunov function.
    pub inflation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    /// Row-major `K`.
    pub gain: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub s0: Vec<f64>,
    pub horizon: usize,
    pub n_traj: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    pub initial_states: StateBox,
    pub horizon: usize,
    pub eta: f64,
    pub eta_prime: f64,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    /// Largest `dist′` the truncation horizon must cover.
    pub v_max: f64,
    pub tol: f64,
    /// Trajectories per probabilistic-LF evaluation.
    pub n_traj: usize,
    /// Ray along which the LF is tabulated.
    pub direction: Vec<f64>,
    pub table_step: f64,
    pub table_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub test_states: Vec<Vec<f64>>,
    pub n_mc: usize,
    pub mean_n_mc: usize,
    pub mean_n_inner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    pub action_lo: Vec<f64>,
    pub action_hi: Vec<f64>,
    pub per_axis: usize,
    pub n_mc_per_action: usize,
    /// States at which the chosen action is reported.
    pub probe_states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachingSpec {
    pub s0: Vec<f64>,
    /// Inflations of the reach target, each above `goal.inflation`.
    pub inflations: Vec<f64>,
    pub n_traj: usize,
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{field}: expected a nonempty rectangular matrix")));
    }
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.chain.f.len()
    }

    pub fn model(&self) -> Result<ChainModel> {
        linear_uniform_chain(matrix(&self.chain.f, "chain.f")?, matrix(&self.chain.g, "chain.g")?, self.chain.wbar)
    }

    pub fn feedback(&self) -> Result<Policy> {
        Ok(Policy::LinearFeedback(matrix(&self.policy.gain, "policy.gain")?))
    }

    pub fn lf_goal(&self) -> Result<GoalSet> {
        GoalSet::new(self.goal.radius, self.goal.inflation)
    }

    /// `v̄` for the convex majorant: the gap between `G` and `G′`, or a tenth
    /// of the radius when there is no inflation.
    pub fn vbar(&self) -> f64 {
        if self.goal.inflation > 0.0 {
            self.goal.inflation
        } else {
            0.1 * self.goal.radius
        }
    }

    /// Every check that can fail before any simulation starts.
    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        let n = model.dim;
        let k = matrix(&self.policy.gain, "policy.gain")?;
        check(k.nrows() == model.action_dim && k.ncols() == n, || {
            format!("policy.gain: expected {}×{n}, got {}×{}", model.action_dim, k.nrows(), k.ncols())
        })?;
        self.lf_goal()?;
        check(self.confidence > 0.0 && self.confidence < 1.0, || "confidence: must lie in (0, 1)".into())?;
        let state = |s: &[f64], field: &str| check(s.len() == n && s.iter().all(|x| x.is_finite()), || format!("{field}: expected {n} finite components"));

        state(&self.simulate.s0, "simulate.s0")?;
        check(self.simulate.horizon >= 1 && self.simulate.n_traj >= 1, || "simulate: horizon and n_traj must be at least 1".into())?;

        let c = &self.certify;
        state(&c.initial_states.lo, "certify.initial_states.lo")?;
        state(&c.initial_states.hi, "certify.initial_states.hi")?;
        stochlyap::certify::grid_states(&c.initial_states.lo, &c.initial_states.hi, c.initial_states.per_axis)
            .map_err(|e| Error::Config(format!("certify.initial_states: {e}")))?;
        check(c.horizon >= 1, || "certify.horizon: must be at least 1".into())?;
        check(c.eta >= 0.0 && c.eta_prime > 0.0, || "certify: need eta ≥ 0 and eta_prime > 0".into())?;
        check(c.eta + c.eta_prime < 1.0, || format!("certify: eta + eta_prime must be < 1, got {}", c.eta + c.eta_prime))?;

        let l = &self.lyapunov;
        check(l.v_max > 0.0 && l.tol > 0.0 && l.n_traj >= 1, || "lyapunov: v_max, tol and n_traj must be positive".into())?;
        state(&l.direction, "lyapunov.direction")?;
        check(l.direction.iter().any(|&x| x != 0.0), || "lyapunov.direction: must be nonzero".into())?;
        check(l.table_step > 0.0 && l.table_max >= l.table_step, || "lyapunov: need 0 < table_step ≤ table_max".into())?;
        check(self.vbar() > 0.0, || "goal: need a positive radius or inflation for the mean LF".into())?;

        let d = &self.decay;
        for (i, s) in d.test_states.iter().enumerate() {
            state(s, &format!("decay.test_states[{i}]"))?;
        }
        check(d.n_mc >= 1 && d.mean_n_mc >= 1 && d.mean_n_inner >= 1, || "decay: sample sizes must be at least 1".into())?;

        let s = &self.synthesis;
        check(s.action_lo.len() == model.action_dim && s.action_hi.len() == model.action_dim, || {
            format!("synthesis: action bounds need {} components", model.action_dim)
        })?;
        stochlyap::synth::SynthesisConfig::box_grid(&s.action_lo, &s.action_hi, s.per_axis).map_err(|e| Error::Config(format!("synthesis: {e}")))?;
        check(s.n_mc_per_action >= 1, || "synthesis.n_mc_per_action: must be at least 1".into())?;
        for (i, p) in s.probe_states.iter().enumerate() {
            state(p, &format!("synthesis.probe_states[{i}]"))?;
        }

        let r = &self.reaching;
        state(&r.s0, "reaching.s0")?;
        check(r.n_traj >= 1, || "reaching.n_traj: must be at least 1".into())?;
        check(!r.inflations.is_empty() && r.inflations.iter().all(|&x| x.is_finite() && x > self.goal.inflation), || {
            format!("reaching.inflations: need at least one value above goal.inflation = {}", self.goal.inflation)
        })?;
        Ok(())
    }
}
