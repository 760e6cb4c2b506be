use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use stochlyap::certify::{fit_initial_states, grid_states, uniform_envelope, FittedBound, StabilizationCertificate, Verdict, LAMBDA_MAX};
use stochlyap::chain::{derive_seed, simulate_batch, GoalSet};
use stochlyap::kappa::{sontag_factorize, SontagConfig};
use stochlyap::lyapunov::{
    prob_lf, verify_decay_mean, verify_decay_prob, DecayConfig, DecayReport, LfPoint, LyapunovEstimate, ProbLf, TabulatedLf,
};
use stochlyap::synth::{into_policy, reaching_time_bound, steepest_descent_policy, verify_reaching, Choice, ReachingReport, SteepestDescent, SynthesisConfig};
use stochlyap::{Error, Result};

use crate::config::ExperimentConfig;

/// Seed tags, one per stage.
const TAG_SIMULATE: u64 = 1;
const TAG_CERTIFY: u64 = 2;
const TAG_LF: u64 = 3;
const TAG_DECAY: u64 = 4;
const TAG_DECAY_MEAN: u64 = 5;
const TAG_SYNTH: u64 = 6;
const TAG_REACH: u64 = 7;

/// Simulation cap for reaching checks whose time bound is huge or infinite.
const MAX_REACH_STEPS: usize = 100_000;

/// Common envelope of every stage artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub stage: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub verdict: Verdict,
    pub result: T,
}

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
}

pub struct StageOutcome {
    pub stage: &'static str,
    pub verdict: Verdict,
    pub detail: String,
}

impl Ctx {
    fn stage_seed(&self, tag: u64) -> u64 {
        derive_seed(self.seed, tag)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_artifact<T: Serialize>(&self, stage: &str, file: &str, verdict: Verdict, result: T) -> Result<()> {
        let a = Artifact { stage: stage.to_string(), config: self.cfg.clone(), seed: self.seed, verdict, result };
        let mut bytes = serde_json::to_vec_pretty(&a)?;
        bytes.push(b'\n');
        std::fs::write(self.path(file), bytes)?;
        Ok(())
    }

    fn read_artifact<T: DeserializeOwned>(&self, file: &str, producer: &str) -> Result<Artifact<T>> {
        let p = self.path(file);
        let text = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e} (run `{producer}` first)", p.display())))?;
        let a: Artifact<T> = serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        if a.config != self.cfg || a.seed != self.seed {
            return Err(Error::Config(format!("{} was produced with a different config or seed; rerun `{producer}`", p.display())));
        }
        Ok(a)
    }

    fn csv(&self, file: &str) -> Result<csv::Writer<BufWriter<File>>> {
        Ok(csv::Writer::from_writer(BufWriter::new(File::create(self.path(file))?)))
    }
}

fn header(dim: usize, prefix: &str, rest: &[&str]) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).chain(rest.iter().map(|s| s.to_string())).collect()
}

/// Round-trip text, in exponent form outside `[1e-5, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn cells(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().copied().map(num)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateResult {
    pub s0: Vec<f64>,
    pub horizon: usize,
    pub n_traj: usize,
    pub n_diverged: usize,
    pub mean_final_dist: f64,
    pub max_final_dist: f64,
}

pub fn simulate(ctx: &Ctx) -> Result<StageOutcome> {
    let c = &ctx.cfg;
    let goal = c.lf_goal()?;
    let spec = &c.simulate;
    let b = simulate_batch(&c.model()?, &c.feedback()?, &goal, &spec.s0, spec.horizon, spec.n_traj, ctx.stage_seed(TAG_SIMULATE))?;
    let finals: Vec<f64> = (0..b.n_traj).map(|k| b.dists(k)[b.horizon]).collect();
    let n_div = b.n_diverged();
    let res = SimulateResult {
        s0: spec.s0.clone(),
        horizon: spec.horizon,
        n_traj: spec.n_traj,
        n_diverged: n_div,
        mean_final_dist: if n_div == 0 { finals.iter().sum::<f64>() / finals.len() as f64 } else { f64::MAX },
        max_final_dist: if n_div == 0 { finals.iter().copied().fold(0.0, f64::max) } else { f64::MAX },
    };
    let verdict = Verdict::from_bool(n_div == 0);
    let detail = format!("{} trajectories, {} diverged, mean final dist′ {:.4}", res.n_traj, n_div, res.mean_final_dist);
    b.write_csv(BufWriter::new(File::create(ctx.path("trajectories.csv"))?))?;
    ctx.write_artifact("simulate", "simulate.json", verdict, res)?;
    Ok(StageOutcome { stage: "simulate", verdict, detail })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertifyResult {
    pub n_states: usize,
    pub certificate: StabilizationCertificate,
}

pub fn certify(ctx: &Ctx) -> Result<StageOutcome> {
    let c = &ctx.cfg;
    let spec = &c.certify;
    let b = &spec.initial_states;
    let states = grid_states(&b.lo, &b.hi, b.per_axis)?;
    let goal = c.lf_goal()?;
    let fits = fit_initial_states(&c.model()?, &c.feedback()?, &goal, &states, spec.horizon, ctx.stage_seed(TAG_CERTIFY), LAMBDA_MAX)?;
    let cert = uniform_envelope(&fits, spec.eta, spec.eta_prime, &spec.envelope)?;

    let mut w = ctx.csv("fits.csv")?;
    w.write_record(header(c.dim(), "x", &["c", "lambda", "valid", "covered"]))?;
    for (s, f) in states.iter().zip(&fits) {
        let covered = cert.covers(f);
        w.write_record(cells(s).chain(fit_cells(f)).chain([covered.to_string()]))?;
    }
    w.flush()?;

    let verdict = cert.verdict;
    let detail = format!("{} states, covered {:.4}, θ = ({:.4}, {:.4}), c0 {:.3e}", states.len(), cert.covered_fraction, cert.theta[0], cert.theta[1], cert.c0);
    ctx.write_artifact("certify", "certificate.json", verdict, CertifyResult { n_states: states.len(), certificate: cert })?;
    Ok(StageOutcome { stage: "certify", verdict, detail })
}

fn fit_cells(f: &FittedBound) -> [String; 3] {
    [num(f.c), num(f.lambda), f.valid.to_string()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LfResult {
    pub certificate: StabilizationCertificate,
    pub estimate: LyapunovEstimate,
    pub table: TabulatedLf,
}

impl LfResult {
    fn prob_lf(&self, cfg: &ExperimentConfig, seed: u64) -> Result<ProbLf> {
        Ok(ProbLf {
            estimate: self.estimate.clone(),
            model: cfg.model()?,
            policy: cfg.feedback()?,
            goal: cfg.lf_goal()?,
            envelope: self.certificate.envelope()?,
            n_traj: cfg.lyapunov.n_traj,
            seed,
        })
    }
}

fn table_dists(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// The probabilistic LF from the certificate, tabulated along a ray.
pub fn construct_lf(ctx: &Ctx) -> Result<StageOutcome> {
    let c = &ctx.cfg;
    let cert = ctx.read_artifact::<CertifyResult>("certificate.json", "certify")?.result.certificate;
    let spec = &c.lyapunov;
    let pair = sontag_factorize(&cert.envelope()?, &SontagConfig::default())?;
    let est = LyapunovEstimate::probabilistic(pair, cert.c0, spec.v_max, spec.tol)?;
    let goal = c.lf_goal()?;
    let (model, policy, envelope) = (c.model()?, c.feedback()?, cert.envelope()?);
    let seed = ctx.stage_seed(TAG_LF);

    let n = stochlyap::chain::norm(&spec.direction);
    let r = goal.radius + goal.inflation;
    let dists = table_dists(spec.table_max, spec.table_step);
    let mut points = Vec::with_capacity(dists.len());
    for (i, &d) in dists.iter().enumerate() {
        let s: Vec<f64> = spec.direction.iter().map(|x| x / n * (r + d)).collect();
        // Stream i matches what ProbLf::value(s, i) would draw.
        let v = prob_lf(&est, &s, &model, &policy, &goal, &envelope, spec.n_traj, derive_seed(seed, i as u64))
            .map_err(|e| Error::Contract(format!("LF at {s:?}: {e}")))?;
        points.push(LfPoint { dist_prime: goal.dist_prime(&s), state: s, value: v.value, std_error: None, covered: Some(v.covered), n_traj: v.n_traj });
    }
    let table = TabulatedLf::new(goal, dists, points.iter().map(|p| p.value).collect(), Some(est.rho_prime.clone()))?;
    let est = est.with_values(points);
    let sandwich = est.values.iter().filter(|p| est.sandwich_holds(p)).count();

    let mut w = ctx.csv("lf_table.csv")?;
    w.write_record(header(c.dim(), "x", &["dist_prime", "value", "kappa_low", "kappa_up", "covered", "n_traj", "sandwich"]))?;
    for p in &est.values {
        let extra = [
            num(p.dist_prime),
            num(p.value),
            num(est.kappa_low.eval(p.dist_prime)?),
            num(est.kappa_up.eval(p.dist_prime)?),
            p.covered.unwrap_or(0).to_string(),
            p.n_traj.to_string(),
            est.sandwich_holds(p).to_string(),
        ];
        w.write_record(cells(&p.state).chain(extra))?;
    }
    w.flush()?;

    let verdict = Verdict::from_bool(sandwich == est.values.len());
    let detail = format!("T = {}, {} table points, sandwich holds at {sandwich}", est.horizon_t, est.values.len());
    ctx.write_artifact("construct-lf", "lyapunov.json", verdict, LfResult { certificate: cert, estimate: est, table })?;
    Ok(StageOutcome { stage: "construct-lf", verdict, detail })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecayResult {
    pub probabilistic: DecayReport,
    pub mean: DecayReport,
}

/// Decay of the probabilistic LF (frequency) and of the mean LF (residual).
pub fn verify_decay(ctx: &Ctx) -> Result<StageOutcome> {
    let c = &ctx.cfg;
    let lf = ctx.read_artifact::<LfResult>("lyapunov.json", "construct-lf")?.result;
    let spec = &c.decay;
    let (model, policy, goal) = (c.model()?, c.feedback()?, c.lf_goal()?);
    let cert = &lf.certificate;
    let est = &lf.estimate;

    let plf = lf.prob_lf(c, ctx.stage_seed(TAG_LF))?;
    let dcfg = DecayConfig { confidence: c.confidence, ..DecayConfig::for_estimate(est, spec.n_mc, ctx.stage_seed(TAG_DECAY)) };
    let prob = verify_decay_prob(&model, &policy, &goal, &plf, &est.nu, cert.eta, cert.eta_prime, &spec.test_states, &dcfg)?;

    let grid = table_dists(c.lyapunov.v_max, c.lyapunov.v_max / 400.0);
    let mest = LyapunovEstimate::mean(est.sontag.clone(), cert.c0, c.lyapunov.v_max, c.lyapunov.tol, c.vbar(), &grid)?;
    let mean = verify_decay_mean(&mest, &model, &policy, &goal, &spec.test_states, spec.mean_n_mc, spec.mean_n_inner, ctx.stage_seed(TAG_DECAY_MEAN))?;

    prob.write_csv(BufWriter::new(File::create(ctx.path("decay.csv"))?))?;
    mean.write_csv(BufWriter::new(File::create(ctx.path("decay_mean.csv"))?))?;
    let verdict = Verdict::from_bool(prob.verdict.is_pass() && mean.verdict.is_pass());
    let min_freq = prob.rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let worst = mean.rows.iter().map(|r| r.value.abs() / r.threshold.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let detail = format!(
        "{} states; min decay frequency {min_freq:.4} ({:?}); worst mean residual/3σ {worst:.3} ({:?})",
        prob.rows.len(),
        prob.verdict,
        mean.verdict
    );
    ctx.write_artifact("verify-decay", "decay.json", verdict, DecayResult { probabilistic: prob, mean })?;
    Ok(StageOutcome { stage: "verify-decay", verdict, detail })
}

fn synthesize_rule(ctx: &Ctx, lf: &LfResult) -> Result<Arc<SteepestDescent>> {
    let c = &ctx.cfg;
    let s = &c.synthesis;
    let cands = SynthesisConfig::box_grid(&s.action_lo, &s.action_hi, s.per_axis)?;
    let cfg = SynthesisConfig { confidence: c.confidence, ..SynthesisConfig::new(cands, s.n_mc_per_action, lf.certificate.eta) };
    let seed = ctx.stage_seed(TAG_SYNTH);
    let decay = DecayConfig { confidence: c.confidence, ..DecayConfig::for_estimate(&lf.estimate, s.n_mc_per_action, seed) };
    steepest_descent_policy(&c.model()?, &c.lf_goal()?, Arc::new(lf.table.clone()), &lf.estimate.nu, &cfg, decay, seed)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub n_candidates: usize,
    pub probes: Vec<Probe>,
    pub fallbacks: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Probe {
    pub state: Vec<f64>,
    pub choice: Choice,
}

/// Steepest-descent policy on the tabulated LF, reported at the probe states.
pub fn synthesize(ctx: &Ctx) -> Result<StageOutcome> {
    let c = &ctx.cfg;
    let lf = ctx.read_artifact::<LfResult>("lyapunov.json", "construct-lf")?.result;
    let rule = synthesize_rule(ctx, &lf)?;
    let probes: Vec<Probe> = c.synthesis.probe_states.iter().map(|s| Probe { state: s.clone(), choice: rule.choose(s) }).collect();
    let fallbacks = probes.iter().filter(|p| p.choice.fallback).count();

    let adim = c.synthesis.action_lo.len();
    let mut w = ctx.csv("policy.csv")?;
    let mut h = header(c.dim(), "x", &[]);
    h.extend(header(adim, "a", &["index", "max_frequency", "fallback"]));
    w.write_record(h)?;
    for p in &probes {
        let best = p.choice.frequencies[p.choice.index];
        let extra = [p.choice.index.to_string(), num(best), p.choice.fallback.to_string()];
        w.write_record(cells(&p.state).chain(cells(&p.choice.action)).chain(extra))?;
    }
    w.flush()?;

    let verdict = Verdict::from_bool(fallbacks == 0);
    let n_candidates = candidate_count(c)?;
    let detail = format!("{n_candidates} candidates, {} probes, {fallbacks} fallbacks", probes.len());
    ctx.write_artifact("synthesize", "synthesis.json", verdict, SynthesisResult { n_candidates, probes, fallbacks })?;
    Ok(StageOutcome { stage: "synthesize", verdict, detail })
}

fn candidate_count(c: &ExperimentConfig) -> Result<usize> {
    let s = &c.synthesis;
    Ok(SynthesisConfig::box_grid(&s.action_lo, &s.action_hi, s.per_axis)?.len())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReachingLevel {
    pub inflation: f64,
    /// `None` when the bound overflows.
    pub t_l_bound: Option<f64>,
    /// Steps simulated: `⌈T_L⌉` capped at the simulation limit.
    pub steps: usize,
    pub report: ReachingReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReachingResult {
    pub levels: Vec<ReachingLevel>,
    pub fallbacks: usize,
}

/// Reaching times of the synthesized policy against the Lyapunov bound.
pub fn verify_reaching_stage(ctx: &Ctx) -> Result<StageOutcome> {
    let c = &ctx.cfg;
    ctx.read_artifact::<SynthesisResult>("synthesis.json", "synthesize")?;
    let lf = ctx.read_artifact::<LfResult>("lyapunov.json", "construct-lf")?.result;
    let rule = synthesize_rule(ctx, &lf)?;
    let policy = into_policy(&rule);
    let (model, goal) = (c.model()?, c.lf_goal()?);
    let est = &lf.estimate;
    let spec = &c.reaching;
    let seed = ctx.stage_seed(TAG_REACH);

    let mut levels = Vec::new();
    for &infl in &spec.inflations {
        let goal_prime = GoalSet::new(goal.radius, infl)?;
        let t_l = reaching_time_bound(&est.kappa_up, &est.kappa_low, &est.nu, goal.dist_prime(&spec.s0), infl - goal.inflation)?;
        let steps = if t_l.is_finite() { (t_l.ceil() as usize).min(MAX_REACH_STEPS) } else { MAX_REACH_STEPS };
        let report = verify_reaching(&model, &policy, &goal_prime, &spec.s0, steps, lf.certificate.eta, spec.n_traj, seed, c.confidence)?;
        levels.push(ReachingLevel { inflation: infl, t_l_bound: t_l.is_finite().then_some(t_l), steps, report });
    }

    let mut w = ctx.csv("reaching.csv")?;
    w.write_record(["inflation", "t_l_bound", "steps", "max_entry_time", "frequency", "threshold", "verdict"])?;
    for l in &levels {
        let r = &l.report;
        w.write_record([
            num(l.inflation),
            l.t_l_bound.map_or("inf".to_string(), num),
            l.steps.to_string(),
            r.max_entry_time.map_or(String::new(), |t| t.to_string()),
            num(r.frequency),
            num(r.threshold),
            if r.verdict.is_pass() { "PASS" } else { "FAIL" }.to_string(),
        ])?;
    }
    w.flush()?;

    let verdict = Verdict::from_bool(levels.iter().all(|l| l.report.verdict.is_pass()));
    let detail = levels
        .iter()
        .map(|l| match l.t_l_bound {
            Some(t) if t < 1e6 => format!("inflation {}: T_L {t:.1}, freq {:.4}", l.inflation, l.report.frequency),
            Some(t) => format!("inflation {}: T_L {t:.2e}, freq {:.4}", l.inflation, l.report.frequency),
            None => format!("inflation {}: T_L inf, freq {:.4}", l.inflation, l.report.frequency),
        })
        .collect::<Vec<_>>()
        .join("; ");
    let fallbacks = rule.fallback_count();
    ctx.write_artifact("verify-reaching", "reaching.json", verdict, ReachingResult { levels, fallbacks })?;
    Ok(StageOutcome { stage: "verify-reaching", verdict, detail })
}

pub fn ensure_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))
}
