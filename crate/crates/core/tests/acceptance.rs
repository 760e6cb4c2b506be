//! Acceptance suite: one PASS/FAIL line per criterion, then a determinism
//! rerun. Runs as a plain binary (`harness = false`). Set
//! `STOCHLYAP_ACCEPTANCE_OUT=<dir>` to keep the per-criterion JSON reports.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use stochlyap::certify::{fit_initial_states, mean_to_as_check, grid_states, uniform_envelope, EnvelopeConfig, StabilizationCertificate, LAMBDA_MAX};
use stochlyap::chain::{linear_uniform_chain, simulate_batch, ChainModel, GoalSet, Policy};
use stochlyap::kappa::{
    construct_kl_from_certificate, riemann_smooth, sontag_factorize, ConstructConfig, DeltaCertificate, KLFunction, Kappa,
    KlGrid, ReachCertificate, SontagConfig,
};
use stochlyap::lyapunov::{
    prob_lf, verify_decay_mean, verify_decay_prob, DecayConfig, LfPoint, LyapunovEstimate, ProbLf, TabulatedLf,
};
use stochlyap::synth::{into_policy, reaching_time_bound, steepest_descent_policy, verify_reaching, SynthesisConfig};

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
    report: Value,
}

fn example3(wbar: f64) -> ChainModel {
    linear_uniform_chain(DMatrix::from_element(1, 1, 1.2), DMatrix::from_element(1, 1, 1.0), wbar).unwrap()
}

fn log_eps(lo_exp: i32, hi_exp: f64) -> Vec<f64> {
    let n = ((hi_exp - lo_exp as f64) * 20.0) as usize;
    (0..=n).map(|k| 10f64.powf(lo_exp as f64 + k as f64 / 20.0)).collect()
}

fn c1_construction(_seed: u64) -> Outcome {
    type Phi = fn(f64, f64) -> f64;
    type Reach = fn(f64, f64) -> f64;
    let cases: [(&str, Phi, Reach); 3] = [
        ("v*exp(-t)", |v, t| v * (-t).exp(), |v, e| (v / e).ln().max(0.0)),
        ("v*exp(-2t)", |v, t| v * (-2.0 * t).exp(), |v, e| 0.5 * (v / e).ln().max(0.0)),
        ("v/(1+t)^2", |v, t| v / ((1.0 + t) * (1.0 + t)), |v, e| ((v / e).sqrt() - 1.0).max(0.0)),
    ];
    let vs: Vec<f64> = (0..=14).map(|k| k as f64).collect();
    let table: Vec<f64> = (0..=400).map(|k| k as f64 * 0.1).collect();
    let delta = DeltaCertificate::from_fn(&table, |e| e).unwrap();
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, phi, reach) in cases {
        let reach = ReachCertificate::from_fn(vs.clone(), log_eps(-12, 1.5), reach).unwrap();
        let out = match construct_kl_from_certificate(&reach, &delta, &ConstructConfig::default()) {
            Ok(o) => o,
            Err(e) => {
                pass = false;
                rows.push(json!({"phi": name, "error": e.to_string()}));
                continue;
            }
        };
        let KLFunction::Grid(g) = &out.beta else { unreachable!() };
        let axioms = g.axioms();
        let mut violations = 0usize;
        let mut min_margin = f64::INFINITY;
        for a in 0..50 {
            for b in 0..50 {
                let v = 10.0 * a as f64 / 49.0;
                let t = 20.0 * b as f64 / 49.0;
                let bv = out.beta.eval(v + out.c0, t).unwrap();
                let p = phi(v, t);
                if bv < p {
                    violations += 1;
                }
                min_margin = min_margin.min(bv - p);
            }
        }
        pass &= violations == 0 && axioms.all();
        rows.push(json!({"phi": name, "c0": out.c0, "violations": violations, "min_margin": min_margin, "axioms": axioms}));
    }
    let detail = rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ");
    Outcome { pass, detail, report: json!(rows) }
}

fn c2_delta_hat(_seed: u64) -> Outcome {
    type D = fn(f64) -> f64;
    let cases: [(&str, D); 3] = [
        ("eps", |e| e),
        ("eps^2/(1+eps)", |e| e * e / (1.0 + e)),
        ("max(eps-0.5,0)", |e| (e - 0.5).max(0.0)),
    ];
    let table: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, f) in cases {
        let d = DeltaCertificate::from_fn(&table, f).unwrap();
        let dk = d.to_kappa().unwrap();
        let hat = riemann_smooth(&d, 4).unwrap();
        let fine: Vec<f64> = (0..=800).map(|k| k as f64 * 0.025).collect();
        let below = fine.iter().all(|&x| hat.eval(x).unwrap() <= dk.eval(x).unwrap());
        let quarter = table
            .iter()
            .enumerate()
            .filter(|&(i, &x)| x >= 1.0 && i % 2 == 0)
            .all(|(i, &x)| hat.eval(x).unwrap() >= 0.25 * f(table[i / 2]));
        let strict = fine.windows(2).all(|w| {
            let (a, b) = (hat.eval(w[0]).unwrap(), hat.eval(w[1]).unwrap());
            b == 0.0 || b > a
        });
        let zero_set_end = fine.iter().rev().find(|&&x| hat.eval(x).unwrap() == 0.0).copied().unwrap_or(0.0);
        pass &= below && quarter && strict;
        rows.push(json!({"delta": name, "below": below, "quarter": quarter, "strict": strict, "zero_set_end": zero_set_end}));
    }
    Outcome { pass, detail: "δ̂ ≤ δ, ¼δ(ε/2) bound, strict increase".into(), report: json!(rows) }
}

fn c3_sontag(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    for _ in 0..10 {
        let c = 10f64.powf(rng.random_range(-1.0..2.0));
        let l = 10f64.powf(rng.random_range(-1.5..1.0));
        let beta = KLFunction::exponential(c, l).unwrap();
        let p = sontag_factorize(&beta, &SontagConfig::default()).unwrap();
        for a in 0..100 {
            for b in 0..100 {
                let v = 10.0 * a as f64 / 99.0;
                let t = 20.0 * b as f64 / 99.0;
                let want = c * v * (-l * t).exp();
                if want > 0.0 {
                    worst = worst.max((p.eval(v, t) - want).abs() / want);
                }
            }
        }
        pairs.push(json!([c, l]));
    }
    let vs: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
    let ts: Vec<f64> = (0..=100).map(|k| k as f64 * 0.5).collect();
    let vals = vs.iter().flat_map(|&v| ts.iter().map(move |&t| 2.0 * v / (1.0 + t).powi(2))).collect();
    let g = KlGrid::new(vs.clone(), ts.clone(), vals).unwrap();
    let (grid_ok, slack) = match sontag_factorize(&KLFunction::Grid(g.clone()), &SontagConfig { slack_bound: f64::INFINITY, ..Default::default() }) {
        Ok(p) => {
            let dom = vs.iter().enumerate().all(|(i, &v)| ts.iter().enumerate().all(|(j, &t)| p.eval(v, t) >= g.value(i, j)));
            (dom, p.slack)
        }
        Err(_) => (false, f64::NAN),
    };
    let pass = worst <= 1e-9 && grid_ok && slack.is_finite();
    Outcome {
        pass,
        detail: format!("max rel err {worst:.2e}, grid slack {slack:.3}"),
        report: json!({"pairs": pairs, "max_rel_err": worst, "grid_dominates": grid_ok, "grid_slack": slack}),
    }
}

const S0: [f64; 1] = [2.0];

fn compact(n: usize) -> Vec<Vec<f64>> {
    grid_states(&[-4.5], &[4.5], n).unwrap()
}

fn certify_example3(seed: u64, goal: &GoalSet, eta: f64, eta_prime: f64) -> (StabilizationCertificate, usize) {
    let n = stochlyap::certify::hoeffding_n(0.05, 0.05).unwrap();
    let fits = fit_initial_states(&example3(0.05), &Policy::scalar_gain(-0.9), goal, &compact(n), 30, seed, LAMBDA_MAX).unwrap();
    (uniform_envelope(&fits, eta, eta_prime, &EnvelopeConfig::default()).unwrap(), n)
}

fn c4_certificate(seed: u64) -> Outcome {
    let goal = GoalSet::new(0.5, 0.0).unwrap();
    let (cert, n) = certify_example3(seed, &goal, 0.02, 0.03);
    let fits = fit_initial_states(&example3(0.05), &Policy::scalar_gain(-0.9), &goal, &compact(n), 30, seed ^ 0x5eed, LAMBDA_MAX).unwrap();
    let refrac = fits.iter().filter(|f| cert.covers(f)).count() as f64 / n as f64;
    let pass = n == 738 && cert.verdict.is_pass() && cert.covered_fraction >= 0.95 && refrac >= cert.covered_fraction - 0.10;
    Outcome {
        pass,
        detail: format!("n={n}, covered {:.4}, fresh {refrac:.4}", cert.covered_fraction),
        report: json!({"certificate": cert, "fresh_fraction": refrac}),
    }
}

fn exact_pair() -> stochlyap::kappa::SontagPair {
    sontag_factorize(&KLFunction::exponential(1.0, 1.0).unwrap(), &SontagConfig::default()).unwrap()
}

fn c5_prob_lf(seed: u64) -> Outcome {
    let model = example3(0.0);
    let policy = Policy::scalar_gain(-0.9);
    let goal = GoalSet::origin();
    let envelope = KLFunction::exponential(1.0, 1.0).unwrap();
    let est = LyapunovEstimate::probabilistic(exact_pair(), 0.0, 5.0, 1e-6).unwrap();
    let at1 = prob_lf(&est, &[1.0], &model, &policy, &goal, &envelope, 8, seed).unwrap();
    let err = (at1.value - 1.0 / 0.7).abs();
    let states: Vec<Vec<f64>> = (0..20).map(|k| vec![-5.0 + 10.0 * (k as f64 + 0.5) / 20.0]).collect();
    let mut points = Vec::new();
    for s in &states {
        let r = prob_lf(&est, s, &model, &policy, &goal, &envelope, 8, seed).unwrap();
        points.push(LfPoint { state: s.clone(), dist_prime: goal.dist_prime(s), value: r.value, std_error: None, covered: Some(r.covered), n_traj: r.n_traj });
    }
    let est = est.with_values(points);
    let sandwich = est.values.iter().all(|p| est.sandwich_holds(p));
    let lf = ProbLf { estimate: est.clone(), model: model.clone(), policy: policy.clone(), goal, envelope, n_traj: 8, seed };
    let decay = verify_decay_prob(&model, &policy, &goal, &lf, &est.nu, 0.0, 0.0, &states, &DecayConfig::for_estimate(&est, 16, seed)).unwrap();
    let freq_one = decay.rows.iter().all(|r| r.value == 1.0);
    let pass = err <= 1e-6 && sandwich && freq_one;
    Outcome {
        pass,
        detail: format!("|L(1) − 1/0.7| = {err:.2e}, sandwich {sandwich}, decay freq 1: {freq_one}"),
        report: json!({"l_at_1": at1, "estimate": est, "decay": decay}),
    }
}

fn c6_mean_lf(seed: u64) -> Outcome {
    let pair = sontag_factorize(&KLFunction::exponential(1.0, 1.2).unwrap(), &SontagConfig::default()).unwrap();
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.025).collect();
    let goal = GoalSet::new(0.0, 0.02).unwrap();
    let est = LyapunovEstimate::mean(pair, 0.0, 5.0, 1e-6, goal.inflation, &grid).unwrap();
    let states: Vec<Vec<f64>> = (0..10).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 } * (0.7 + 0.4 * k as f64)]).collect();
    let policy = Policy::scalar_gain(-0.9);
    let exact = verify_decay_mean(&est, &example3(0.0), &policy, &goal, &states, 64, 4, seed).unwrap();
    let noisy = verify_decay_mean(&est, &example3(0.05), &policy, &goal, &states, 10_000, 8, seed).unwrap();
    let zero = exact.rows.len() == 10 && exact.rows.iter().all(|r| r.value == 0.0);
    let within = noisy.rows.len() == 10 && noisy.verdict.is_pass();
    let worst = noisy.rows.iter().map(|r| r.value.abs() / r.threshold.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    Outcome {
        pass: zero && within,
        detail: format!("exact zero {zero}, noisy worst |res|/3σ = {worst:.3}"),
        report: json!({"deterministic": exact, "noisy": noisy}),
    }
}

fn c7_reverse(seed: u64) -> Outcome {
    let model = example3(0.05);
    let stabilizer = Policy::scalar_gain(-0.9);
    let lf_goal = GoalSet::new(0.5, 0.02).unwrap();
    let (cert, _) = certify_example3(seed, &lf_goal, 0.02, 0.03);
    if !cert.verdict.is_pass() {
        return Outcome { pass: false, detail: "source certificate failed".into(), report: json!({"certificate": cert}) };
    }
    let envelope = cert.envelope().unwrap();
    let pair = sontag_factorize(&envelope, &SontagConfig::default()).unwrap();
    let est = LyapunovEstimate::probabilistic(pair, cert.c0, 4.0, 1e-6).unwrap();
    let lf = ProbLf { estimate: est.clone(), model: model.clone(), policy: stabilizer, goal: lf_goal, envelope, n_traj: 200, seed };
    let dists: Vec<f64> = (0..=80).map(|k| k as f64 * 0.05).collect();
    let table = TabulatedLf::tabulate(&lf, lf_goal, &[1.0], dists, Some(est.rho_prime.clone())).unwrap();
    let cands = SynthesisConfig::box_grid(&[-4.0], &[4.0], 81).unwrap();
    let cfg = SynthesisConfig::new(cands.clone(), 32, cert.eta);
    let decay = DecayConfig::for_estimate(&est, 32, seed);
    let rule = steepest_descent_policy(&model, &lf_goal, Arc::new(table.clone()), &est.nu, &cfg, decay, seed).unwrap();
    let policy = into_policy(&rule);

    let mut levels = Vec::new();
    let mut pass = true;
    for frac in [0.4, 0.2, 0.1] {
        let goal_prime = GoalSet::new(0.5, frac * 0.5).unwrap();
        let floor = goal_prime.inflation - lf_goal.inflation;
        let t_l = reaching_time_bound(&est.kappa_up, &est.kappa_low, &est.nu, lf_goal.dist_prime(&S0), floor).unwrap();
        let steps = t_l.ceil() as usize;
        let r = verify_reaching(&model, &policy, &goal_prime, &S0, steps, cert.eta, 738, seed, 0.05).unwrap();
        let ok = r.frequency >= 1.0 - cert.eta - 0.05;
        pass &= ok;
        levels.push(json!({"inflation": goal_prime.inflation, "t_l": t_l, "report": r, "pass": ok}));
    }

    let scale = 3.7;
    let scaled_table = table.scaled(scale).unwrap();
    let scaled_nu: Kappa = est.nu.scaled(scale).unwrap();
    let scaled = steepest_descent_policy(&model, &lf_goal, Arc::new(scaled_table), &scaled_nu, &cfg, decay, seed).unwrap();
    let test_states: Vec<f64> = (0..=40).map(|k| -3.0 + 0.15 * k as f64).collect();
    let invariant = test_states.iter().all(|&s| rule.choose(&[s]).index == scaled.choose(&[s]).index);
    pass &= invariant;
    Outcome {
        pass,
        detail: format!("eta {:.3}, 3 inflation levels, argmax invariant {invariant}", cert.eta),
        report: json!({"certificate": cert, "levels": levels, "argmax_invariant": invariant, "fallbacks": rule.fallback_count()}),
    }
}

fn c8_remark1(seed: u64) -> Outcome {
    let configs = [
        (1.2, -0.9, 0.0, GoalSet::origin()),
        (1.2, -0.9, 0.05, GoalSet::new(0.5, 0.0).unwrap()),
        (1.2, -0.5, 0.1, GoalSet::new(0.5, 0.0).unwrap()),
        (1.2, -1.1, 0.05, GoalSet::new(0.3, 0.0).unwrap()),
        (1.2, -0.9, 0.1, GoalSet::origin()),
        (1.2, 0.0, 0.0, GoalSet::new(0.5, 0.0).unwrap()),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (i, (f, k, w, goal)) in configs.into_iter().enumerate() {
        let m = linear_uniform_chain(DMatrix::from_element(1, 1, f), DMatrix::from_element(1, 1, 1.0), w).unwrap();
        let b = simulate_batch(&m, &Policy::scalar_gain(k), &goal, &[2.0], 40, 500, seed.wrapping_add(i as u64)).unwrap();
        let r = mean_to_as_check(&b, 1e-3, 1e-3, 0.05);
        pass &= r.verdict.is_pass();
        rows.push(json!({"f": f, "gain": k, "wbar": w, "goal": goal, "mean_converged": r.mean_converged, "as_frequency": r.as_frequency, "verdict": r.verdict}));
    }
    Outcome { pass, detail: format!("{} configurations", rows.len()), report: json!(rows) }
}

type Criterion = fn(u64) -> Outcome;

fn main() -> ExitCode {
    let criteria: [(usize, &str, Criterion, Duration); 8] = [
        (1, "KL construction", c1_construction, Duration::from_secs(5)),
        (2, "smoothed overshoot", c2_delta_hat, Duration::from_secs(1)),
        (3, "Sontag factorization", c3_sontag, Duration::from_secs(5)),
        (4, "certificate round trip", c4_certificate, Duration::from_secs(30)),
        (5, "probabilistic LF", c5_prob_lf, Duration::from_secs(10)),
        (6, "mean LF telescoping", c6_mean_lf, Duration::from_secs(60)),
        (7, "reverse direction", c7_reverse, Duration::from_secs(60)),
        (8, "mean vs a.s. convergence", c8_remark1, Duration::from_secs(10)),
    ];
    let mut all = true;
    let mut reports = Vec::new();
    for (id, name, f, limit) in criteria {
        let start = Instant::now();
        let out = f(SEED);
        let took = start.elapsed();
        let ok = out.pass && took < limit;
        all &= ok;
        println!(
            "criterion {id} [{name}]: {} ({}; {:.2}s, limit {}s)",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
        let bytes = serde_json::to_string(&out.report).unwrap();
        if let Some(dir) = std::env::var_os("STOCHLYAP_ACCEPTANCE_OUT") {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(std::path::Path::new(&dir).join(format!("criterion{id}.json")), &bytes).unwrap();
        }
        reports.push((f, bytes));
    }
    let start = Instant::now();
    let identical = reports.iter().all(|(f, bytes)| serde_json::to_string(&f(SEED).report).unwrap() == *bytes);
    all &= identical;
    println!(
        "criterion 9 [determinism]: {} (reports of 1-8 byte-identical on rerun: {identical}; {:.2}s)",
        if identical { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
