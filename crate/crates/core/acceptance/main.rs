//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Criterion numbers given as arguments
//! restrict the run to those criteria.

#[path = "../tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    characteristic_polynomial, gradient_check, polynomial_roots, random_hermitian, random_vec,
    GradCheck,
};
use precoding_core::agents::DqnAgent;
use precoding_core::baselines::svd_precoder;
use precoding_core::codebook::{exhaustive_search, min_distance};
use precoding_core::harness::{
    run_evaluation, run_training, sweep_snr, AgentChoice, Environment, Evaluation,
    ExperimentConfig, Policy, Scale,
};
use precoding_core::link::{
    measure_ber, observation_len, reward_from_ber, LinkConfig, Modulation, Observation,
};
use precoding_core::neuralnet::OutputActivation;
use precoding_core::numerics::{complex_gaussian, hermitian_evd, random_unit_vector, SimRng};
use precoding_core::{channel, CMat, CVec};

const GRAD_TOL: f64 = 1e-5;
const GRAD_NETS: usize = 50;
/// Sampled coordinates per weight or bias block on the wide nets.
const GRAD_SAMPLES_PER_BLOCK: usize = 24;
const EVD_MATRICES: usize = 200;
const EVD_RESIDUAL_TOL: f64 = 1e-9;
const EVD_ROOT_TOL: f64 = 1e-8;
const SVD_INSTANCES: usize = 20;
const SVD_PROBES: usize = 100_000;
const SVD_SLACK: f64 = 1e-9;
const MINUTE: Duration = Duration::from_secs(60);
const DEEP_NOISE_SNR_DB: f64 = -40.0;
const DEEP_NOISE_RES: usize = 10_000;
const DEEP_NOISE_BAND: (f64, f64) = (0.45, 0.55);
const REWARD_TOL: f64 = 1e-9;
const RANDOM_CODEBOOKS: usize = 100;
const SEARCH_MATRICES: usize = 1000;
const DQN_RATIO_MIN: f64 = 0.95;
const DDPG_RATIO_MIN: f64 = 0.90;
const ENV2_REWARD_SLACK: f64 = 0.005;
const SWEEP_SNRS: [f64; 4] = [0.0, 4.0, 8.0, 12.0];
const MIXTURE_EPSILONS: [f64; 2] = [0.2, 0.5];
const MIXTURE_DRAWS: usize = 20_000;
const MIXTURE_SIGMAS: f64 = 3.0;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(limit: Duration, started: Instant) -> (bool, String) {
    let t = started.elapsed();
    (
        t < limit,
        format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()),
    )
}

fn gradient_oracle() -> Verdict {
    let started = Instant::now();
    let d1 = observation_len(4, 2, 1);
    let d2 = observation_len(4, 2, 3);
    let h1 = ExperimentConfig::preset(Environment::EnvI, AgentChoice::Dqn, Scale::Desk).hidden_dims;
    let h2 =
        ExperimentConfig::preset(Environment::EnvII, AgentChoice::Dqn, Scale::Desk).hidden_dims;
    let dims = |input: usize, hidden: &[usize], out: usize| [&[input], hidden, &[out]].concat();
    let archs: Vec<(Vec<usize>, OutputActivation)> = vec![
        (dims(d1, &h1, 64), OutputActivation::Linear),
        (dims(d2, &h2, 64), OutputActivation::Linear),
        (dims(d1, &h1, 8), OutputActivation::UnitNormalize),
        (dims(d2, &h2, 8), OutputActivation::UnitNormalize),
        (dims(d1 + 8, &h1, 1), OutputActivation::Linear),
        (dims(d2 + 8, &h2, 1), OutputActivation::Linear),
    ];
    let mut rng = SimRng::new(1, 0);
    let mut total = GradCheck::default();
    for k in 0..GRAD_NETS {
        let (d, act) = &archs[k % archs.len()];
        let net = common::random_net(d, *act, &mut rng);
        let x = random_vec(d[0], &mut rng);
        let c = random_vec(*d.last().unwrap(), &mut rng);
        let per_block = if d[1] > 1000 {
            Some(GRAD_SAMPLES_PER_BLOCK)
        } else {
            None
        };
        total.merge(gradient_check(&net, &x, &c, per_block, &mut rng));
    }
    let (fast, time) = within(MINUTE, started);
    Verdict::new(
        total.max_rel_err < GRAD_TOL && fast,
        format!(
            "max rel err {:.2e} < {GRAD_TOL:e} over {} coordinates ({} skipped at ReLU kinks), {time}",
            total.max_rel_err, total.checked, total.skipped
        ),
    )
}

fn evd_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = SimRng::new(2, 0);
    let (mut worst_resid, mut worst_root) = (0.0f64, 0.0f64);
    for _ in 0..EVD_MATRICES {
        let a = random_hermitian(4, &mut rng);
        let eig = hermitian_evd(&a).unwrap();
        for (l, v) in eig.values.iter().zip(&eig.vectors) {
            let resid = a
                .mul_vec(v)
                .unwrap()
                .sub(&v.scale(num_complex::Complex::new(*l, 0.0)))
                .norm();
            worst_resid = worst_resid.max(resid);
        }
        for (l, r) in eig
            .values
            .iter()
            .zip(polynomial_roots(&characteristic_polynomial(&a)))
        {
            worst_root = worst_root.max((l - r.re).abs());
        }
    }
    let mut beaten = 0usize;
    for _ in 0..SVD_INSTANCES {
        let h: CMat = complex_gaussian(2, 4, 1.0, &mut rng).unwrap();
        let best = h.mul_vec(svd_precoder(&h).unwrap().w()).unwrap().norm_sqr();
        for _ in 0..SVD_PROBES {
            let u: CVec = random_unit_vector(4, &mut rng);
            if h.mul_vec(&u).unwrap().norm_sqr() > best + SVD_SLACK {
                beaten += 1;
            }
        }
    }
    let (fast, time) = within(MINUTE, started);
    Verdict::new(
        worst_resid < EVD_RESIDUAL_TOL && worst_root < EVD_ROOT_TOL && beaten == 0 && fast,
        format!(
            "residual {worst_resid:.1e} < {EVD_RESIDUAL_TOL:e}, root gap {worst_root:.1e} < {EVD_ROOT_TOL:e}, \
             {beaten} of {} probes beat SVD, {time}",
            SVD_INSTANCES * SVD_PROBES
        ),
    )
}

fn link_chain() -> Verdict {
    let mut rng = SimRng::new(3, 0);
    let mut worst_noiseless = (0.0f64, 0.5f64);
    for (spec, subband, modulation) in [
        (
            channel::ChannelSpec::flat(4, 2),
            precoding_core::link::SubbandSpec::env1(),
            Modulation::Qam16,
        ),
        (
            channel::ChannelSpec::tdl2(4, 2),
            precoding_core::link::SubbandSpec::env2(),
            Modulation::Qam4,
        ),
    ] {
        for _ in 0..20 {
            let state = channel::sample(&spec, &subband, &mut rng).unwrap();
            let w = precoding_core::link::Precoder::continuous(random_unit_vector(4, &mut rng))
                .unwrap();
            let r = measure_ber(
                &state,
                &w,
                &LinkConfig::noiseless(modulation),
                &subband,
                &mut rng,
            )
            .unwrap();
            worst_noiseless = (worst_noiseless.0.max(r.ber), worst_noiseless.1.min(r.value));
        }
    }
    let mut subband = precoding_core::link::SubbandSpec::env1();
    subband.data_re_budget = DEEP_NOISE_RES;
    let state = channel::sample(&channel::ChannelSpec::flat(4, 2), &subband, &mut rng).unwrap();
    let w = svd_precoder(&state.data_channels[0]).unwrap();
    let deep = measure_ber(
        &state,
        &w,
        &LinkConfig::new(DEEP_NOISE_SNR_DB, Modulation::Qam16),
        &subband,
        &mut rng,
    )
    .unwrap()
    .ber;
    let r0 = reward_from_ber(0.0).unwrap();
    let r_half = reward_from_ber(0.5).unwrap();
    let r_quarter = reward_from_ber(0.25).unwrap();
    let exact_quarter = 0.75f64.ln() / std::f64::consts::LN_2 + 0.5;
    let pass = worst_noiseless == (0.0, 0.5)
        && (DEEP_NOISE_BAND.0..=DEEP_NOISE_BAND.1).contains(&deep)
        && (r0 - 0.5).abs() < REWARD_TOL
        && (r_half + 0.5).abs() < REWARD_TOL
        && (r_quarter - exact_quarter).abs() < REWARD_TOL
        && format!("{r_quarter:.6}") == "0.084963";
    Verdict::new(
        pass,
        format!(
            "noiseless max BER {} min reward {}, BER at {DEEP_NOISE_SNR_DB} dB {deep:.4} in [{}, {}], \
             r(0)={r0} r(0.5)={r_half} r(0.25)={r_quarter:.10}",
            worst_noiseless.0, worst_noiseless.1, DEEP_NOISE_BAND.0, DEEP_NOISE_BAND.1
        ),
    )
}

fn codebook_quality() -> Verdict {
    let started = Instant::now();
    let cfg = ExperimentConfig::preset(Environment::EnvI, AgentChoice::Dqn, Scale::Desk);
    let cb = cfg.resolve_codebook().unwrap();
    let mut rng = SimRng::new(4, 0);
    let best_random = (0..RANDOM_CODEBOOKS)
        .map(|_| {
            let words: Vec<CVec> = (0..cb.len())
                .map(|_| random_unit_vector(4, &mut rng))
                .collect();
            min_distance(&words)
        })
        .fold(0.0, f64::max);
    let words: Vec<CVec> = cb.words().iter().map(|p| p.w().clone()).collect();
    let mut mismatches = 0;
    for _ in 0..SEARCH_MATRICES {
        let a = random_hermitian(4, &mut rng);
        let gain = |w: &CVec| a.quadratic_form(w).unwrap().abs();
        let mut oracle = 0;
        for (i, w) in words.iter().enumerate() {
            if gain(w) > gain(&words[oracle]) {
                oracle = i;
            }
        }
        if exhaustive_search(&a, &cb).unwrap().0 != oracle {
            mismatches += 1;
        }
    }
    let (fast, time) = within(5 * MINUTE, started);
    Verdict::new(
        cb.min_chordal_distance() > best_random && mismatches == 0 && fast,
        format!(
            "N={} min distance {:.4} > best random {best_random:.4}, {mismatches} search mismatches, {time}",
            cb.len(),
            cb.min_chordal_distance()
        ),
    )
}

fn train_and_evaluate(
    environment: Environment,
    agent: AgentChoice,
    root: &Path,
) -> (Evaluation, Duration) {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::preset(environment, agent, Scale::Desk);
    cfg.output_dir = root.join(format!("{environment:?}-{agent:?}"));
    let (outcome, _) = run_training(&cfg, |_| {}).unwrap();
    let eval = run_evaluation(
        &cfg,
        &Policy::Agent(outcome.agent),
        &cfg.output_dir.join("eval"),
    )
    .unwrap();
    (eval, started.elapsed())
}

fn env1_dqn(eval: &Evaluation, took: Duration) -> Verdict {
    let ratio = eval.summary.mean_gain_ratio_codebook;
    Verdict::new(
        ratio >= DQN_RATIO_MIN,
        format!(
            "gain ratio to codebook optimum {ratio:.4}, need >= {DQN_RATIO_MIN}, over {} states, {:.0}s",
            eval.summary.states,
            took.as_secs_f64()
        ),
    )
}

fn env1_ddpg(root: &Path) -> Verdict {
    let (eval, took) = train_and_evaluate(Environment::EnvI, AgentChoice::Ddpg, root);
    let ratio = eval.summary.mean_gain_ratio;
    Verdict::new(
        ratio >= DDPG_RATIO_MIN,
        format!(
            "gain ratio to SVD {ratio:.4}, need >= {DDPG_RATIO_MIN}, over {} states, {:.0}s",
            eval.summary.states,
            took.as_secs_f64()
        ),
    )
}

fn baseline_reward(eval: &Evaluation, name: &str) -> f64 {
    eval.summary
        .baselines
        .iter()
        .find(|b| b.name == name)
        .unwrap()
        .mean_reward
}

fn env2_robustness(root: &Path) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (agent, baseline) in [(AgentChoice::Dqn, "codebook"), (AgentChoice::Ddpg, "evd")] {
        let (eval, took) = train_and_evaluate(Environment::EnvII, agent, root);
        let ours = eval.summary.mean_reward;
        let theirs = baseline_reward(&eval, baseline);
        pass &= ours >= theirs - ENV2_REWARD_SLACK;
        parts.push(format!(
            "{agent:?} reward {ours:.5}, need >= {baseline} {theirs:.5} - {ENV2_REWARD_SLACK} = {:.5} \
             (strictly better: {}, {:.0}s)",
            theirs - ENV2_REWARD_SLACK,
            ours > theirs,
            took.as_secs_f64()
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn behavioral_sanity() -> Verdict {
    let mut cfg =
        ExperimentConfig::preset(Environment::EnvI, AgentChoice::BaselineSvdEvd, Scale::Desk);
    let rows = sweep_snr(&cfg, &Policy::Analytic, &SWEEP_SNRS).unwrap();
    let svd: Vec<_> = rows.iter().filter(|r| r.policy == "svd").collect();
    let monotone = svd
        .windows(2)
        .all(|w| w[1].mean_ber <= w[0].mean_ber + w[0].ci95_halfwidth + w[1].ci95_halfwidth);
    let bers: Vec<String> = svd.iter().map(|r| format!("{:.2e}", r.mean_ber)).collect();

    cfg.agent = AgentChoice::Dqn;
    let cb = cfg.resolve_codebook().unwrap();
    let n = cb.len() as f64;
    let mut rng = SimRng::new(8, 0);
    let mut agent = DqnAgent::init(
        cfg.state_dim(),
        &cfg.hidden_dims,
        cb,
        false,
        0.0,
        1e-3,
        &mut rng,
    )
    .unwrap();
    let s = Observation {
        values: random_vec(cfg.state_dim(), &mut rng),
    };
    let greedy = agent.greedy_index(&s).unwrap();
    let mut mixture_ok = true;
    let mut zs = Vec::new();
    for eps in MIXTURE_EPSILONS {
        agent.set_epsilon(eps).unwrap();
        let hits = (0..MIXTURE_DRAWS)
            .filter(|_| agent.act(&s, &mut rng).unwrap() == greedy)
            .count() as f64;
        let p = 1.0 - eps + eps / n;
        let draws = MIXTURE_DRAWS as f64;
        let z = (hits - draws * p) / (draws * p * (1.0 - p)).sqrt();
        mixture_ok &= z.abs() < MIXTURE_SIGMAS;
        zs.push(format!("eps {eps}: z={z:+.2}"));
    }
    Verdict::new(
        monotone && mixture_ok,
        format!(
            "SVD BER over {SWEEP_SNRS:?} dB = [{}] nonincreasing within CI: {monotone}; {} within {MIXTURE_SIGMAS} sigma",
            bers.join(", "),
            zs.join(", ")
        ),
    )
}

fn read_tree(dir: &Path, prefix: &str, out: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let name = format!("{prefix}{}", path.file_name().unwrap().to_string_lossy());
        if path.is_dir() {
            read_tree(&path, &format!("{name}/"), out);
        } else if name.ends_with(".json") && !name.ends_with("metadata.json")
            || name.ends_with(".csv")
        {
            out.insert(name, std::fs::read(&path).unwrap());
        }
    }
}

/// Runs `cfg` twice into the same directory and compares every checkpoint,
/// config and CSV byte for byte. Returns the file count and the first run's
/// evaluation.
fn runs_identical(
    cfg: &ExperimentConfig,
    root: &Path,
    tag: &str,
) -> (Result<usize, String>, Evaluation) {
    let mut c = cfg.clone();
    c.output_dir = root.join(tag);
    let mut trees = Vec::new();
    let mut evals = Vec::new();
    for _ in 0..2 {
        if c.output_dir.exists() {
            std::fs::remove_dir_all(&c.output_dir).unwrap();
        }
        let (outcome, _) = run_training(&c, |_| {}).unwrap();
        evals.push(
            run_evaluation(
                &c,
                &Policy::Agent(outcome.agent),
                &c.output_dir.join("eval"),
            )
            .unwrap(),
        );
        let mut tree = BTreeMap::new();
        read_tree(&c.output_dir, "", &mut tree);
        trees.push(tree);
    }
    let differing: Vec<&str> = trees[0]
        .keys()
        .chain(trees[1].keys())
        .filter(|k| trees[0].get(*k) != trees[1].get(*k))
        .map(String::as_str)
        .collect();
    let same = if differing.is_empty() {
        Ok(trees[0].len())
    } else {
        Err(format!("{tag} differs in {differing:?}"))
    };
    (same, evals.swap_remove(0))
}

fn determinism(root: &Path) -> (Verdict, Evaluation, Duration) {
    let mut checked = Vec::new();
    let mut failures = Vec::new();
    let started = Instant::now();
    let full = ExperimentConfig::preset(Environment::EnvI, AgentChoice::Dqn, Scale::Desk);
    let (same, eval) = runs_identical(&full, root, "full-EnvI-Dqn");
    match same {
        Ok(files) => checked.push(format!("full EnvI Dqn preset ({files} files)")),
        Err(e) => failures.push(e),
    }
    let took = started.elapsed() / 2;
    for env in [Environment::EnvI, Environment::EnvII] {
        for agent in [AgentChoice::Dqn, AgentChoice::Ddpg] {
            let mut cfg = ExperimentConfig::preset(env, agent, Scale::Desk);
            cfg.episodes = 2;
            cfg.steps_per_episode = 100;
            cfg.eval_states = 50;
            let tag = format!("short-{env:?}-{agent:?}");
            match runs_identical(&cfg, root, &tag).0 {
                Ok(_) => checked.push(tag),
                Err(e) => failures.push(e),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "byte-identical checkpoints and CSVs: {}",
            checked.join(", ")
        )
    } else {
        failures.join(", ")
    };
    (Verdict::new(failures.is_empty(), detail), eval, took)
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let scratch = tempfile::tempdir().unwrap();
    let root = scratch.path();
    let mut verdicts: Vec<(usize, Verdict)> = Vec::new();
    let mut record = |n: usize, v: Verdict| {
        println!(
            "criterion {n}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        verdicts.push((n, v));
    };
    if wanted(1) {
        record(1, gradient_oracle());
    }
    if wanted(2) {
        record(2, evd_oracle());
    }
    if wanted(3) {
        record(3, link_chain());
    }
    if wanted(4) {
        record(4, codebook_quality());
    }
    let det = (wanted(5) || wanted(9)).then(|| determinism(root));
    if let (true, Some((_, eval, took))) = (wanted(5), &det) {
        record(5, env1_dqn(eval, *took));
    }
    if wanted(6) {
        record(6, env1_ddpg(root));
    }
    if wanted(7) {
        record(7, env2_robustness(root));
    }
    if wanted(8) {
        record(8, behavioral_sanity());
    }
    if let (true, Some((verdict, _, _))) = (wanted(9), det) {
        record(9, verdict);
    }
    let failed: Vec<usize> = verdicts
        .iter()
        .filter(|(_, v)| !v.pass)
        .map(|(n, _)| *n)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", verdicts.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
