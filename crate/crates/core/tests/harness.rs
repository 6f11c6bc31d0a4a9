use precoding_core::agents::Agent;
use precoding_core::harness::{
    evaluate, run_evaluation, run_training, sweep_snr, train, AgentChoice, Environment,
    ExperimentConfig, Policy, Scale, EVAL_FILE,
};
use precoding_core::link::{reward_from_ber, LinkConfig};

fn tiny(environment: Environment, agent: AgentChoice) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(environment, agent, Scale::Desk);
    cfg.episodes = 1;
    cfg.steps_per_episode = 10;
    cfg.eval_states = 20;
    cfg.codebook_size = 16;
    cfg.codebook_iterations = 200;
    cfg.hidden_dims = vec![16, 8];
    cfg.log_interval = 5;
    cfg
}

#[test]
fn short_runs_are_deterministic() {
    for env in [Environment::EnvI, Environment::EnvII] {
        for agent in [AgentChoice::Dqn, AgentChoice::Ddpg] {
            let cfg = tiny(env, agent);
            let a = train(&cfg).unwrap();
            let b = train(&cfg).unwrap();
            assert_eq!(a.agent, b.agent, "{env:?} {agent:?}");
            assert_eq!(a.log, b.log);
            let ea = evaluate(&cfg, &Policy::Agent(a.agent)).unwrap();
            let eb = evaluate(&cfg, &Policy::Agent(b.agent)).unwrap();
            assert_eq!(ea.records, eb.records);
        }
    }
}

#[test]
fn training_log_has_one_row_per_interval() {
    let cfg = tiny(Environment::EnvI, AgentChoice::Dqn);
    let out = train(&cfg).unwrap();
    assert_eq!(
        out.log.iter().map(|e| e.step).collect::<Vec<_>>(),
        vec![5, 10]
    );
    assert!(matches!(out.agent, Agent::Dqn(_)));
}

#[test]
fn noiseless_evaluation_is_error_free() {
    for env in [Environment::EnvI, Environment::EnvII] {
        let mut cfg = tiny(env, AgentChoice::Ddpg);
        cfg.link = LinkConfig::noiseless(cfg.link.modulation);
        let agent = train(&cfg).unwrap().agent;
        let eval = evaluate(&cfg, &Policy::Agent(agent)).unwrap();
        for r in &eval.records {
            assert_eq!(
                (r.agent_ber, r.codebook_ber, r.analytic_ber),
                (0.0, 0.0, 0.0)
            );
            assert_eq!(r.agent_reward, 0.5);
        }
    }
}

#[test]
fn analytic_policy_attains_the_gain_bound_in_a_flat_channel() {
    let mut cfg = tiny(Environment::EnvI, AgentChoice::BaselineSvdEvd);
    cfg.eval_states = 200;
    let eval = evaluate(&cfg, &Policy::Analytic).unwrap();
    for r in &eval.records {
        assert!((r.gain_ratio - 1.0).abs() < 1e-9, "{}", r.gain_ratio);
        assert!(r.gain_ratio_codebook >= 1.0 - 1e-9);
    }
    assert_eq!(eval.summary.policy, "svd");
}

#[test]
fn gain_ratios_never_exceed_one() {
    for env in [Environment::EnvI, Environment::EnvII] {
        let mut cfg = tiny(env, AgentChoice::Dqn);
        cfg.eval_states = 100;
        let agent = train(&cfg).unwrap().agent;
        for policy in [Policy::Agent(agent), Policy::Analytic] {
            for r in evaluate(&cfg, &policy).unwrap().records {
                assert!(r.gain_ratio <= 1.0 + 1e-9 && r.gain_ratio > 0.0);
                assert!(r.effective_gain_codebook <= r.effective_gain_bound * (1.0 + 1e-9));
            }
        }
    }
}

#[test]
fn sweep_ber_falls_with_snr_within_confidence() {
    let mut cfg = tiny(Environment::EnvI, AgentChoice::BaselineSvdEvd);
    cfg.eval_states = 200;
    let snrs = [-5.0, 0.0, 5.0, 10.0];
    let rows = sweep_snr(&cfg, &Policy::Analytic, &snrs).unwrap();
    for name in ["svd", "codebook"] {
        let series: Vec<_> = rows.iter().filter(|r| r.policy == name).collect();
        assert_eq!(series.len(), snrs.len());
        for w in series.windows(2) {
            assert!(w[1].mean_ber <= w[0].mean_ber + w[0].ci95_halfwidth + w[1].ci95_halfwidth);
        }
        assert!(series[0].mean_ber > series[3].mean_ber);
    }
}

#[test]
fn written_reward_column_is_derived_from_ber() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(Environment::EnvII, AgentChoice::Dqn);
    cfg.output_dir = dir.path().join("run");
    let (outcome, checkpoint) = run_training(&cfg, |_| {}).unwrap();
    assert!(checkpoint.join("agent.json").exists());
    let out = dir.path().join("eval");
    run_evaluation(&cfg, &Policy::Agent(outcome.agent), &out).unwrap();
    let mut reader = csv::Reader::from_path(out.join(EVAL_FILE)).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (reward, ber) = (col("agent_reward"), col("agent_ber"));
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let r: f64 = rec[reward].parse().unwrap();
        let b: f64 = rec[ber].parse().unwrap();
        assert!((r - reward_from_ber(b).unwrap()).abs() < 1e-12);
        rows += 1;
    }
    assert_eq!(rows, cfg.eval_states);
}

#[test]
fn overrides_reach_the_config() {
    let cfg = ExperimentConfig::from_json_str_with_overrides(
        r#"{"environment": "EnvII", "agent": "Ddpg"}"#,
        &["eta_actor=0.002".into(), "link.snr_db=3".into()],
    )
    .unwrap();
    assert_eq!(cfg.eta_actor, 0.002);
    assert_eq!(cfg.link.snr_db, 3.0);
    assert!(
        ExperimentConfig::from_json_str_with_overrides("{}", &["no_such_key=1".into()]).is_err()
    );
}
