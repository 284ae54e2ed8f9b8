//! End-to-end behaviour of the multi-parameter algorithm.

use ldp_bandit_core::{presets, run_multi, EstimatorKind, MultiAlgoConfig, PrivacyBudget};

#[test]
fn noiseless_warmup_eliminates_suboptimal_arm() {
    let env = presets::multi_separated::<f64>(3, 0.1).unwrap();
    let sub = env.known_suboptimal()[0];
    let mut cfg = MultiAlgoConfig::new(
        EstimatorKind::PrivateOls,
        PrivacyBudget::new(1.0, 0.1).unwrap(),
        20_000,
        env.known_gap().unwrap(),
    );
    cfg.noiseless = true;
    cfg.s0 = Some(200);
    for seed in 0..3 {
        let run = run_multi(&cfg, &env, seed).unwrap();
        assert_eq!(run.warmup_rounds, 600);
        assert_eq!(run.main_phase_pulls(3)[sub], 0, "seed {seed}");
    }
}

#[test]
fn every_main_round_updates_all_arms_privately() {
    let env = presets::multi_separated::<f64>(3, 0.1).unwrap();
    for kind in [EstimatorKind::PrivateOls, EstimatorKind::PrivateSgd] {
        let mut cfg = MultiAlgoConfig::new(kind, PrivacyBudget::new(5.0, 0.1).unwrap(), 3_000, 0.8);
        cfg.s0 = Some(100);
        let run = run_multi(&cfg, &env, 1).unwrap();
        assert_eq!(run.records.len(), 3_000);
        assert!(run.snapshot.is_some());
        assert_eq!(run.solve_failures, 0);
        let mut prev = 0.0;
        for r in &run.records {
            assert!(r.cum_regret >= prev);
            prev = r.cum_regret;
        }
    }
}

#[test]
fn shared_parameter_arms_match_single_arm_behaviour() {
    // With one shared parameter every arm is optimal for every context, so
    // the multi-parameter run and the one-arm single-parameter run both
    // incur no regret.
    use ldp_bandit_core::{run_single, ContextLaw, EnvSpec, LinkFunction, Mode, NoiseKind, SingleAlgoConfig};
    let th = vec![0.0, 0.6, 0.8];
    let multi_env = EnvSpec::new(
        Mode::MultiParam,
        4,
        vec![th.clone(); 4],
        LinkFunction::identity(),
        ContextLaw::UnitSphere,
        NoiseKind::TruncatedGaussian { sigma: 0.1 },
        1.0,
        1.3,
    )
    .unwrap();
    let single_env = EnvSpec::new(
        Mode::SingleParam,
        1,
        vec![th],
        LinkFunction::identity(),
        ContextLaw::UnitSphere,
        NoiseKind::TruncatedGaussian { sigma: 0.1 },
        1.0,
        1.3,
    )
    .unwrap();
    let budget = PrivacyBudget::new(1.0, 0.1).unwrap();
    let mut mcfg = MultiAlgoConfig::new(EstimatorKind::PrivateOls, budget, 2_000, 1e6);
    mcfg.s0 = Some(50);
    let scfg = SingleAlgoConfig::new(EstimatorKind::PrivateOls, budget, 2_000);
    for seed in 0..10 {
        assert_eq!(run_multi(&mcfg, &multi_env, seed).unwrap().total_regret(), 0.0);
        assert_eq!(run_single(&scfg, &single_env, seed).unwrap().total_regret(), 0.0);
    }
}
