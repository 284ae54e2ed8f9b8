//! Multi-parameter LDP contextual bandit with warm-up, elimination and
//! synthetic updates.
//!
//! Rounds `1..=K·s0` pull arms round-robin and update only the pulled arm.
//! At `t = K·s0` every arm's estimate is frozen into a snapshot. Afterwards
//! each round keeps the arms whose snapshot score is within `h/2` of the
//! best, pulls the survivor with the highest current `μ(Xᵀθ̂_a)`, and sends
//! one private message per arm: the real `(X, r)` for the pulled arm and
//! `(0, 0)` for every other arm, so the server cannot tell which arm was
//! played. Mechanisms run at `(ε/2, δ/2)`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::Rng;

use crate::envs::{argmax_lowest, EnvSpec, Mode};
use crate::error::{invalid, Error, Result};
use crate::estimators::{base_sigma, default_c_tilde, ArmEstimator, ObservationBuilder, PrivateObservation};
use crate::linalg::{dot, norm};
use crate::privacy::PrivacyBudget;
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::single::{EstimatorKind, RunRngs};
use crate::trace::RoundRecord;

/// How the SGD step size is indexed during warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmupStepRule {
    /// `η = c0 / n_a` with `n_a` the arm's own update count.
    #[default]
    PerArmCount,
    /// `η = c0 / ((t mod K) + 1)`.
    RoundIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warmup,
    Main,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiAlgoConfig<F> {
    pub estimator: EstimatorKind,
    /// Full budget; the mechanisms run at half of it.
    pub budget: PrivacyBudget<F>,
    pub horizon: usize,
    /// Warm-up pulls per arm; defaults to [`default_s0`].
    pub s0: Option<usize>,
    /// Elimination gap on the linear score scale.
    pub h: F,
    pub sgd_c0: Option<F>,
    /// Guess of the number of possibly-optimal arms; defaults to `K`.
    pub k_opt_guess: Option<usize>,
    pub alpha: F,
    pub noiseless: bool,
    pub c_tilde_override: Option<F>,
    pub warmup_step: WarmupStepRule,
    pub project_unit_ball: bool,
}

impl<F: Scalar> MultiAlgoConfig<F> {
    pub fn new(estimator: EstimatorKind, budget: PrivacyBudget<F>, horizon: usize, h: F) -> Self {
        Self {
            estimator,
            budget,
            horizon,
            s0: None,
            h,
            sgd_c0: None,
            k_opt_guess: None,
            alpha: F::of(0.05),
            noiseless: false,
            c_tilde_override: None,
            warmup_step: WarmupStepRule::default(),
            project_unit_ball: false,
        }
    }

    /// Half of the budget in both components.
    pub fn mechanism_budget(&self) -> PrivacyBudget<F> {
        self.budget.split(2)
    }

    pub fn resolved_s0(&self, k: usize, d: usize) -> usize {
        self.s0
            .unwrap_or_else(|| default_s0(k, d, self.horizon, self.alpha, self.budget.epsilon()))
    }

    pub fn validate(&self, k: usize, d: usize) -> Result<()> {
        if !(self.h > F::zero()) {
            return Err(invalid("h", "elimination gap must be positive"));
        }
        if self.estimator == EstimatorKind::PrivateOls && !self.noiseless && self.budget.delta() <= F::zero() {
            return Err(Error::GaussianRequiresDelta);
        }
        if !(self.alpha > F::zero() && self.alpha < F::one()) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        let s0 = self.resolved_s0(k, d);
        if s0 == 0 {
            return Err(invalid("s0", "warm-up needs at least one pull per arm"));
        }
        if k * s0 > self.horizon {
            return Err(invalid("s0", format!("K·s0 = {} exceeds the horizon {}", k * s0, self.horizon)));
        }
        if self.k_opt_guess == Some(0) {
            return Err(invalid("k_opt_guess", "must be positive"));
        }
        Ok(())
    }
}

/// `min(ceil(25 K (d + ln(T K/α)) / ε²), floor(T/(4K)))`, at least 1.
pub fn default_s0<F: Scalar>(k: usize, d: usize, horizon: usize, alpha: F, epsilon: F) -> usize {
    let (kf, df, tf) = (k as f64, d as f64, horizon.max(1) as f64);
    let eps = epsilon.as_f64();
    let shape = (25.0 * kf * (df + (tf * kf / alpha.as_f64()).ln()) / (eps * eps)).ceil();
    let cap = horizon / (4 * k.max(1));
    (shape as usize).min(cap).max(1)
}

/// Warm-up arm for round `t` (1-based rounds, 0-based arms): `t mod K`.
pub fn warmup_arm(t: usize, k: usize) -> usize {
    t % k
}

/// Arms whose snapshot score exceeds `max score − h/2`. Never empty: the
/// snapshot argmax always survives.
pub fn eliminate<F: Scalar>(context: &[F], snapshot: &[Vec<F>], h: F) -> Vec<usize> {
    let scores: Vec<F> = snapshot.iter().map(|th| dot(context, th)).collect();
    let best = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let threshold = best - h / F::of(2.0);
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(a, _)| a)
        .collect()
}

/// One message per arm: `(X, r)` for `chosen`, the zero pair for the rest.
/// Arm `i` draws its noise from substream `i` of `rng`.
pub fn synthetic_observations<F: Scalar, R: Rng + ?Sized>(
    x: &[F],
    r: F,
    chosen: usize,
    thetas: &[&[F]],
    builder: &ObservationBuilder<F>,
    rng: &mut R,
) -> Result<Vec<PrivateObservation<F>>> {
    let k = thetas.len();
    if chosen >= k {
        return Err(Error::ArmOutOfRange { arm: chosen, arms: k });
    }
    let zero = vec![F::zero(); x.len()];
    let mut streams: Vec<_> = (0..k).map(|i| substream(rng, i as u64)).collect();
    (0..k)
        .map(|i| {
            if i == chosen {
                builder.observe(x, r, thetas[i], &mut streams[i])
            } else {
                builder.observe(&zero, F::zero(), thetas[i], &mut streams[i])
            }
        })
        .collect()
}

/// SGD step size for round `t`.
///
/// Warm-up: `c0 / n` with `n` the arm's update count including this one
/// (or `(t mod K) + 1` under [`WarmupStepRule::RoundIndex`]). Main phase:
/// `c0 · K_opt / (t − (K−1) s0)`.
pub fn multi_sgd_stepsize<F: Scalar>(
    t: usize,
    k: usize,
    s0: usize,
    k_opt_guess: usize,
    c0: F,
    per_arm_update_count: usize,
    rule: WarmupStepRule,
) -> F {
    if t <= k * s0 {
        let n = match rule {
            WarmupStepRule::PerArmCount => per_arm_update_count.max(1),
            WarmupStepRule::RoundIndex => t % k + 1,
        };
        c0 / F::of_usize(n)
    } else {
        c0 * F::of_usize(k_opt_guess) / F::of_usize(t - (k - 1) * s0)
    }
}

/// Server state: per-arm estimators and the frozen warm-up snapshot.
#[derive(Debug, Clone)]
pub struct MultiServerState<F> {
    arms: Vec<ArmEstimator<F>>,
    snapshot: Option<Vec<Vec<F>>>,
    snapshot_fingerprint: u64,
}

impl<F: Scalar> MultiServerState<F> {
    pub fn arms(&self) -> &[ArmEstimator<F>] {
        &self.arms
    }

    pub fn snapshot(&self) -> Option<&[Vec<F>]> {
        self.snapshot.as_deref()
    }

    fn freeze(&mut self) {
        debug_assert!(self.snapshot.is_none(), "snapshot is written once");
        let snap: Vec<Vec<F>> = self.arms.iter().map(|a| a.theta().to_vec()).collect();
        self.snapshot_fingerprint = fingerprint(&snap);
        self.snapshot = Some(snap);
    }

    /// True if the snapshot still matches the fingerprint taken at freeze.
    pub fn snapshot_intact(&self) -> bool {
        self.snapshot
            .as_ref()
            .is_none_or(|s| fingerprint(s) == self.snapshot_fingerprint)
    }
}

fn fingerprint<F: Scalar>(rows: &[Vec<F>]) -> u64 {
    let mut h = DefaultHasher::new();
    for r in rows {
        for v in r {
            v.as_f64().to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Extra bookkeeping for one multi-parameter round.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRoundInfo {
    pub phase: Phase,
    /// `|K̂_t|` in the main phase, `K` during warm-up.
    pub survivors: usize,
    pub updated_arms: usize,
}

/// Running state of one multi-parameter run.
#[derive(Debug, Clone)]
pub struct MultiBandit<F> {
    builder: ObservationBuilder<F>,
    server: MultiServerState<F>,
    k: usize,
    s0: usize,
    h: F,
    c0: F,
    k_opt: usize,
    rule: WarmupStepRule,
    horizon: usize,
    t: usize,
    cum_regret: F,
}

impl<F: Scalar> MultiBandit<F> {
    pub fn new(config: &MultiAlgoConfig<F>, env: &EnvSpec<F>) -> Result<Self> {
        if env.mode() != Mode::MultiParam {
            return Err(invalid("env", "the multi-parameter algorithm needs a multi-parameter environment"));
        }
        let (k, d) = (env.arms(), env.dim());
        config.validate(k, d)?;
        let half = config.mechanism_budget();
        let (cb, cr) = (env.context_bound(), env.reward_bound());
        let c0 = config.sgd_c0.unwrap_or_else(|| F::of_usize(d));
        let (builder, arms) = match config.estimator {
            EstimatorKind::PrivateOls => {
                let builder = ObservationBuilder::ols((!config.noiseless).then_some(&half), cb, cr)?;
                let c_tilde = match (config.c_tilde_override, config.noiseless) {
                    (Some(c), _) => c,
                    (None, true) => F::zero(),
                    (None, false) => {
                        let alpha_k = config.alpha / F::of_usize(k);
                        default_c_tilde(base_sigma(&half)?, d, config.horizon, alpha_k)?
                    }
                };
                let arms = (0..k).map(|_| ArmEstimator::ols(d, c_tilde)).collect::<Result<_>>()?;
                (builder, arms)
            }
            EstimatorKind::PrivateSgd => {
                let eps = (!config.noiseless).then_some(half.epsilon());
                let builder = ObservationBuilder::sgd(*env.link(), eps, d, cb, cr)?;
                let arms = (0..k)
                    .map(|_| ArmEstimator::sgd(d, c0, config.project_unit_ball))
                    .collect::<Result<_>>()?;
                (builder, arms)
            }
        };
        Ok(Self {
            builder,
            server: MultiServerState {
                arms,
                snapshot: None,
                snapshot_fingerprint: 0,
            },
            k,
            s0: config.resolved_s0(k, d),
            h: config.h,
            c0,
            k_opt: config.k_opt_guess.unwrap_or(k),
            rule: config.warmup_step,
            horizon: config.horizon,
            t: 0,
            cum_regret: F::zero(),
        })
    }

    pub fn server(&self) -> &MultiServerState<F> {
        &self.server
    }

    pub fn s0(&self) -> usize {
        self.s0
    }

    pub fn warmup_rounds(&self) -> usize {
        self.k * self.s0
    }

    pub fn phase(&self) -> Phase {
        if self.t < self.warmup_rounds() {
            Phase::Warmup
        } else {
            Phase::Main
        }
    }

    /// Plays round `t + 1`.
    pub fn multi_round(&mut self, env: &EnvSpec<F>, rngs: &mut RunRngs) -> Result<(RoundRecord<F>, MultiRoundInfo)> {
        if self.t >= self.horizon {
            return Err(invalid("t", format!("horizon {} already reached", self.horizon)));
        }
        let t = self.t + 1;
        let sample = env.draw_round(&mut rngs.env);
        let x = sample.contexts[0].clone();

        let info = if t <= self.warmup_rounds() {
            let arm = warmup_arm(t, self.k);
            let r = env.realize_reward(&x, arm, &mut rngs.env)?;
            let est = &mut self.server.arms[arm];
            let obs = self.builder.observe(&x, r, est.theta(), &mut rngs.mech)?;
            let eta = multi_sgd_stepsize(t, self.k, self.s0, self.k_opt, self.c0, est.updates() + 1, self.rule);
            est.update(&obs, eta)?;
            if t == self.warmup_rounds() {
                self.server.freeze();
            }
            (arm, MultiRoundInfo {
                phase: Phase::Warmup,
                survivors: self.k,
                updated_arms: 1,
            })
        } else {
            let snapshot = self.server.snapshot.as_ref().expect("snapshot frozen after warm-up");
            let survivors = eliminate(&x, snapshot, self.h);
            let link = env.link();
            let pick = argmax_lowest(
                survivors
                    .iter()
                    .map(|&a| link.eval(dot(&x, self.server.arms[a].theta()))),
            )
            .expect("survivor set is never empty");
            let arm = survivors[pick];
            let r = env.realize_reward(&x, arm, &mut rngs.env)?;
            let thetas: Vec<&[F]> = self.server.arms.iter().map(ArmEstimator::theta).collect();
            let messages = synthetic_observations(&x, r, arm, &thetas, &self.builder, &mut rngs.mech)?;
            let eta = multi_sgd_stepsize(t, self.k, self.s0, self.k_opt, self.c0, 0, self.rule);
            for (est, obs) in self.server.arms.iter_mut().zip(&messages) {
                est.update(obs, eta)?;
            }
            (arm, MultiRoundInfo {
                phase: Phase::Main,
                survivors: survivors.len(),
                updated_arms: self.k,
            })
        };
        let (arm, info) = info;

        self.t = t;
        let regret = env.instant_regret(&sample, arm)?;
        self.cum_regret += regret;
        let err = self
            .server
            .arms
            .iter()
            .enumerate()
            .map(|(a, est)| {
                let diff: Vec<F> = est.theta().iter().zip(env.arm_param(a)).map(|(p, q)| *p - *q).collect();
                norm(&diff)
            })
            .fold(F::zero(), |s, e| s + e)
            / F::of_usize(self.k);
        Ok((
            RoundRecord {
                t,
                chosen_arm: arm,
                instant_regret: regret,
                cum_regret: self.cum_regret,
                estimate_error: Some(err),
            },
            info,
        ))
    }
}

/// Output of [`run_multi`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRun<F> {
    pub records: Vec<RoundRecord<F>>,
    pub s0: usize,
    pub warmup_rounds: usize,
    pub snapshot: Option<Vec<Vec<F>>>,
    pub fallback_ridges: usize,
    pub solve_failures: usize,
}

impl<F: Scalar> MultiRun<F> {
    pub fn total_regret(&self) -> F {
        self.records.last().map_or(F::zero(), |r| r.cum_regret)
    }

    /// Pulls of each arm after warm-up.
    pub fn main_phase_pulls(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for r in &self.records[self.warmup_rounds.min(self.records.len())..] {
            counts[r.chosen_arm] += 1;
        }
        counts
    }
}

/// Runs `config.horizon` rounds from `seed`.
pub fn run_multi<F: Scalar>(config: &MultiAlgoConfig<F>, env: &EnvSpec<F>, seed: u64) -> Result<MultiRun<F>> {
    let mut bandit = MultiBandit::new(config, env)?;
    let mut rngs = RunRngs::from_seed(seed);
    let mut records = Vec::with_capacity(config.horizon);
    for _ in 0..config.horizon {
        records.push(bandit.multi_round(env, &mut rngs)?.0);
    }
    if !bandit.server.snapshot_intact() {
        return Err(invalid("snapshot", "warm-up snapshot changed after freeze"));
    }
    let arms = &bandit.server.arms;
    Ok(MultiRun {
        records,
        s0: bandit.s0,
        warmup_rounds: bandit.warmup_rounds(),
        snapshot: bandit.server.snapshot.clone(),
        fallback_ridges: arms.iter().map(ArmEstimator::fallback_ridges).sum(),
        solve_failures: arms.iter().map(ArmEstimator::solve_failures).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::presets;
    use crate::rng::rng_from_seed;
    use crate::single::RunRngs;
    use proptest::prelude::*;

    fn budget(e: f64) -> PrivacyBudget<f64> {
        PrivacyBudget::new(e, 0.1).unwrap()
    }

    #[test]
    fn warmup_arm_examples() {
        // 1-based arm 2 and arm 1.
        assert_eq!(warmup_arm(1, 3), 1);
        assert_eq!(warmup_arm(3, 3), 0);
        let (k, s0) = (4, 7);
        let mut counts = vec![0; k];
        for t in 1..=k * s0 {
            counts[warmup_arm(t, k)] += 1;
        }
        assert!(counts.iter().all(|&c| c == s0));
    }

    #[test]
    fn eliminate_examples() {
        let snap = vec![vec![1.0], vec![0.8], vec![0.2]];
        assert_eq!(eliminate(&[1.0], &snap, 0.5), vec![0, 1]);
        assert_eq!(eliminate(&[1.0], &snap, 10.0), vec![0, 1, 2]);
        let flat = vec![vec![0.3], vec![0.3]];
        assert_eq!(eliminate(&[1.0], &flat, 1e-9), vec![0, 1]);
    }

    #[test]
    fn stepsize_examples() {
        let (k, s0) = (3, 10);
        assert_eq!(
            multi_sgd_stepsize(k * s0 + 1, k, s0, 1, 1.0, 0, WarmupStepRule::PerArmCount),
            1.0 / (s0 + 1) as f64
        );
        assert_eq!(multi_sgd_stepsize(2, k, s0, 3, 2.0, 1, WarmupStepRule::PerArmCount), 2.0);
        assert_eq!(multi_sgd_stepsize(2, k, s0, 3, 2.0, 1, WarmupStepRule::RoundIndex), 2.0 / 3.0);
        let seq: Vec<f64> = (1..=s0).map(|n| multi_sgd_stepsize(1, k, s0, 3, 1.0, n, WarmupStepRule::PerArmCount)).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        let main: Vec<f64> = (k * s0 + 1..k * s0 + 50)
            .map(|t| multi_sgd_stepsize(t, k, s0, 3, 1.0, 0, WarmupStepRule::PerArmCount))
            .collect();
        assert!(main.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn default_s0_shape_and_cap() {
        // ceil(25·3·(5 + ln(3e5/0.05))/25)
        let expected = (3.0f64 * (5.0 + (1e5f64 * 3.0 / 0.05).ln())).ceil() as usize;
        assert_eq!(default_s0(3, 5, 100_000, 0.05, 5.0), expected);
        assert_eq!(default_s0(3, 5, 1000, 0.05, 0.5), 1000 / 12);
    }

    #[test]
    fn synthetic_noiseless_ols() {
        let builder = ObservationBuilder::<f64>::ols(None, 1.0, 1.0).unwrap();
        let th = vec![0.0; 2];
        let thetas: Vec<&[f64]> = vec![&th, &th, &th];
        let x = [0.6, 0.8];
        let obs = synthetic_observations(&x, 0.5, 1, &thetas, &builder, &mut rng_from_seed(0)).unwrap();
        for (i, o) in obs.iter().enumerate() {
            let PrivateObservation::Ols(o) = o else { unreachable!() };
            if i == 1 {
                assert_eq!(o.matrix().get(0, 1), 0.6 * 0.8);
                assert_eq!(o.vector(), &[0.3, 0.4]);
            } else {
                assert!(o.matrix().as_slice().iter().all(|&v| v == 0.0));
                assert!(o.vector().iter().all(|&v| v == 0.0));
            }
        }
        assert!(synthetic_observations(&x, 0.5, 3, &thetas, &builder, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn synthetic_sgd_norms_are_identical() {
        let link = crate::link::LinkFunction::identity();
        let builder = ObservationBuilder::<f64>::sgd(link, Some(1.0), 3, 1.0, 1.0).unwrap();
        let th = vec![0.1, 0.2, 0.3];
        let thetas: Vec<&[f64]> = vec![&th, &th, &th, &th];
        let obs = synthetic_observations(&[0.0, 0.6, 0.8], 0.9, 2, &thetas, &builder, &mut rng_from_seed(1)).unwrap();
        let norms: Vec<f64> = obs
            .iter()
            .map(|o| match o {
                PrivateObservation::Sgd(z) => norm(z),
                _ => unreachable!(),
            })
            .collect();
        for n in &norms {
            assert!((n - norms[0]).abs() < 1e-9 * norms[0]);
        }
    }

    #[test]
    fn unselected_messages_do_not_depend_on_choice() {
        let builder = ObservationBuilder::<f64>::ols(Some(&budget(1.0)), 1.0, 1.0).unwrap();
        let th = vec![0.0; 2];
        let thetas: Vec<&[f64]> = vec![&th, &th, &th];
        let a = synthetic_observations(&[0.6, 0.8], 0.5, 0, &thetas, &builder, &mut rng_from_seed(5)).unwrap();
        let b = synthetic_observations(&[-0.8, 0.6], -0.3, 1, &thetas, &builder, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a[2], b[2]);
    }

    #[test]
    fn warmup_only_touches_played_arm() {
        let env = presets::multi_separated::<f64>(3, 0.1).unwrap();
        let mut cfg = MultiAlgoConfig::new(EstimatorKind::PrivateOls, budget(2.0), 60, 0.5);
        cfg.s0 = Some(10);
        let mut bandit = MultiBandit::new(&cfg, &env).unwrap();
        let mut rngs = RunRngs::from_seed(3);
        for _ in 0..30 {
            let before: Vec<ArmEstimator<f64>> = bandit.server().arms().to_vec();
            let (rec, info) = bandit.multi_round(&env, &mut rngs).unwrap();
            assert_eq!(info.phase, Phase::Warmup);
            assert_eq!(info.updated_arms, 1);
            for (a, (old, new)) in before.iter().zip(bandit.server().arms()).enumerate() {
                if a == rec.chosen_arm {
                    assert_ne!(old, new);
                } else {
                    assert_eq!(old, new);
                }
            }
        }
        assert!(bandit.server().snapshot().is_some());
        let frozen = bandit.server().snapshot().unwrap().to_vec();
        for _ in 0..30 {
            let (_, info) = bandit.multi_round(&env, &mut rngs).unwrap();
            assert_eq!(info.phase, Phase::Main);
            assert_eq!(info.updated_arms, 3);
            assert!(info.survivors >= 1);
        }
        assert_eq!(bandit.server().snapshot().unwrap(), &frozen[..]);
        assert!(bandit.server().snapshot_intact());
    }

    #[test]
    fn vanishing_gap_leaves_one_survivor() {
        let env = presets::multi_separated::<f64>(3, 0.0).unwrap();
        let mut cfg = MultiAlgoConfig::new(EstimatorKind::PrivateOls, budget(1.0), 400, 1e-9);
        cfg.noiseless = true;
        cfg.s0 = Some(100);
        let mut bandit = MultiBandit::new(&cfg, &env).unwrap();
        let mut rngs = RunRngs::from_seed(2);
        for _ in 0..300 {
            bandit.multi_round(&env, &mut rngs).unwrap();
        }
        for _ in 0..100 {
            let (rec, info) = bandit.multi_round(&env, &mut rngs).unwrap();
            assert_eq!(info.survivors, 1);
            assert_ne!(rec.chosen_arm, 2);
        }
    }

    #[test]
    fn pure_warmup_run() {
        let env = presets::multi_separated::<f64>(3, 0.1).unwrap();
        let mut cfg = MultiAlgoConfig::new(EstimatorKind::PrivateSgd, budget(1.0), 30, 0.5);
        cfg.s0 = Some(10);
        let run = run_multi(&cfg, &env, 4).unwrap();
        let mut counts = [0; 3];
        for r in &run.records {
            counts[r.chosen_arm] += 1;
        }
        assert_eq!(counts, [10, 10, 10]);
        assert!(run.snapshot.is_some());
        cfg.s0 = Some(11);
        assert!(run_multi(&cfg, &env, 4).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let env = presets::multi_separated::<f64>(3, 0.1).unwrap();
        for kind in [EstimatorKind::PrivateOls, EstimatorKind::PrivateSgd] {
            let mut cfg = MultiAlgoConfig::new(kind, budget(1.0), 500, 0.5);
            cfg.s0 = Some(20);
            assert_eq!(run_multi(&cfg, &env, 8).unwrap(), run_multi(&cfg, &env, 8).unwrap());
        }
    }

    #[test]
    fn rejects_single_param_env() {
        let env = presets::single_sphere::<f64>(3, 3, 0.1).unwrap();
        let cfg = MultiAlgoConfig::new(EstimatorKind::PrivateOls, budget(1.0), 100, 0.5);
        assert!(MultiBandit::new(&cfg, &env).is_err());
    }

    #[test]
    fn identical_arms_have_zero_regret() {
        // All arms share one parameter: any policy is optimal.
        let th = vec![0.6, 0.8, 0.0];
        let env = EnvSpec::new(
            Mode::MultiParam,
            3,
            vec![th.clone(), th.clone(), th],
            crate::link::LinkFunction::identity(),
            crate::envs::ContextLaw::UnitSphere,
            crate::envs::NoiseKind::TruncatedGaussian { sigma: 0.1 },
            1.0,
            1.3,
        )
        .unwrap();
        let mut cfg = MultiAlgoConfig::new(EstimatorKind::PrivateOls, budget(1.0), 2000, 1e6);
        cfg.s0 = Some(50);
        let run = run_multi(&cfg, &env, 5).unwrap();
        assert_eq!(run.total_regret(), 0.0);
    }

    proptest! {
        #[test]
        fn survivors_contain_snapshot_argmax(
            seed in any::<u64>(), k in 1usize..8, h in 1e-6f64..3.0
        ) {
            let mut rng = rng_from_seed(seed);
            let snap: Vec<Vec<f64>> = (0..k).map(|_| crate::rng::unit_sphere(3, &mut rng)).collect();
            let x: Vec<f64> = crate::rng::unit_sphere(3, &mut rng);
            let kept = eliminate(&x, &snap, h);
            let best = argmax_lowest(snap.iter().map(|th| dot(&x, th))).unwrap();
            prop_assert!(!kept.is_empty());
            prop_assert!(kept.contains(&best));
        }
    }
}
