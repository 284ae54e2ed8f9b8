//! Greedy single-parameter LDP contextual bandit.
//!
//! Each round: draw the `K` arm contexts, pull `argmax_a x_{t,a}ᵀθ̂_{t−1}`,
//! realize the reward, privatize `(x_{t,a_t}, r_t)` on the user side, and
//! update the server estimator from the private message alone. The server
//! broadcasting `θ̂_{t−1}` before the context arrives is equivalent to this
//! ordering.
//!
//! Selection maximizes the linear score even for the logistic link; a
//! monotone link preserves the argmax.

use rand::Rng;

use crate::envs::{argmax_lowest, EnvSpec};
use crate::error::{invalid, Error, Result};
use crate::estimators::{base_sigma, default_c_tilde, ArmEstimator, ObservationBuilder};
use crate::linalg::{dot, norm};
use crate::privacy::PrivacyBudget;
use crate::rng::{mix_seed, rng_from_seed, SimRng};
use crate::scalar::Scalar;
use crate::trace::RoundRecord;

/// Which mechanism/estimator pair is plugged in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Gaussian-mechanism OLS, `(ε, δ)`-LDP.
    PrivateOls,
    /// ℓ2-ball-mechanism SGD, ε-LDP.
    PrivateSgd,
}

/// Independent generators for the environment and for the privacy noise.
///
/// Keeping them apart means two runs with the same seed see the same
/// contexts and reward noise up to the point where their decisions differ.
#[derive(Debug, Clone)]
pub struct RunRngs {
    pub env: SimRng,
    pub mech: SimRng,
}

impl RunRngs {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            env: rng_from_seed(mix_seed(seed, 0)),
            mech: rng_from_seed(mix_seed(seed, 1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleAlgoConfig<F> {
    pub estimator: EstimatorKind,
    /// `δ` is ignored by the SGD estimator.
    pub budget: PrivacyBudget<F>,
    pub horizon: usize,
    /// Replaces the default `c̃ = 2σ(4√d + 2 ln(2T/α))`.
    pub c_tilde_override: Option<F>,
    /// Numerator of `η_t = c0/t`; defaults to `d`.
    pub sgd_c0: Option<F>,
    pub alpha: F,
    /// Disables every privacy noise source.
    pub noiseless: bool,
    pub project_unit_ball: bool,
}

impl<F: Scalar> SingleAlgoConfig<F> {
    pub fn new(estimator: EstimatorKind, budget: PrivacyBudget<F>, horizon: usize) -> Self {
        Self {
            estimator,
            budget,
            horizon,
            c_tilde_override: None,
            sgd_c0: None,
            alpha: F::of(0.05),
            noiseless: false,
            project_unit_ball: false,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noiseless = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.estimator == EstimatorKind::PrivateOls && !self.noiseless && self.budget.delta() <= F::zero() {
            return Err(Error::GaussianRequiresDelta);
        }
        if !(self.alpha > F::zero() && self.alpha < F::one()) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        if let Some(c) = self.c_tilde_override {
            if !(c >= F::zero()) {
                return Err(invalid("c_tilde", "must be nonnegative"));
            }
        }
        if let Some(c0) = self.sgd_c0 {
            if !(c0 > F::zero()) {
                return Err(invalid("sgd_c0", "must be positive"));
            }
        }
        Ok(())
    }
}

/// `argmax_a contexts[a]ᵀθ̂` with lowest-index tie-break.
pub fn select_arm_greedy<F: Scalar>(theta_hat: &[F], contexts: &[Vec<F>]) -> usize {
    argmax_lowest(contexts.iter().map(|x| dot(x, theta_hat))).unwrap_or(0)
}

/// Running state of one single-parameter run.
#[derive(Debug, Clone)]
pub struct SingleBandit<F> {
    builder: ObservationBuilder<F>,
    estimator: ArmEstimator<F>,
    c0: F,
    horizon: usize,
    t: usize,
    cum_regret: F,
}

impl<F: Scalar> SingleBandit<F> {
    pub fn new(config: &SingleAlgoConfig<F>, env: &EnvSpec<F>) -> Result<Self> {
        config.validate()?;
        let d = env.dim();
        let (cb, cr) = (env.context_bound(), env.reward_bound());
        let c0 = config.sgd_c0.unwrap_or_else(|| F::of_usize(d));
        let (builder, estimator) = match config.estimator {
            EstimatorKind::PrivateOls => {
                let budget = (!config.noiseless).then_some(&config.budget);
                let builder = ObservationBuilder::ols(budget, cb, cr)?;
                let c_tilde = match (config.c_tilde_override, config.noiseless) {
                    (Some(c), _) => c,
                    (None, true) => F::zero(),
                    (None, false) => default_c_tilde(base_sigma(&config.budget)?, d, config.horizon.max(1), config.alpha)?,
                };
                (builder, ArmEstimator::ols(d, c_tilde)?)
            }
            EstimatorKind::PrivateSgd => {
                let eps = (!config.noiseless).then_some(config.budget.epsilon());
                let builder = ObservationBuilder::sgd(*env.link(), eps, d, cb, cr)?;
                (builder, ArmEstimator::sgd(d, c0, config.project_unit_ball)?)
            }
        };
        Ok(Self {
            builder,
            estimator,
            c0,
            horizon: config.horizon,
            t: 0,
            cum_regret: F::zero(),
        })
    }

    pub fn theta(&self) -> &[F] {
        self.estimator.theta()
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn estimator(&self) -> &ArmEstimator<F> {
        &self.estimator
    }

    /// Plays round `t + 1`.
    pub fn single_round(&mut self, env: &EnvSpec<F>, rngs: &mut RunRngs) -> Result<RoundRecord<F>> {
        if self.t >= self.horizon {
            return Err(invalid("t", format!("horizon {} already reached", self.horizon)));
        }
        let sample = env.draw_round(&mut rngs.env);
        let arm = select_arm_greedy(self.estimator.theta(), &sample.contexts);
        let x = sample.context(arm);
        let r = env.realize_reward(x, arm, &mut rngs.env)?;

        let obs = user_side(&self.builder, x, r, self.estimator.theta(), &mut rngs.mech)?;

        let eta = self.c0 / F::of_usize(self.estimator.updates() + 1);
        self.estimator.update(&obs, eta)?;

        self.t += 1;
        let regret = env.instant_regret(&sample, arm)?;
        self.cum_regret += regret;
        let err: Vec<F> = self
            .estimator
            .theta()
            .iter()
            .zip(env.arm_param(0))
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(RoundRecord {
            t: self.t,
            chosen_arm: arm,
            instant_regret: regret,
            cum_regret: self.cum_regret,
            estimate_error: Some(norm(&err)),
        })
    }
}

/// The user's half of a round: the raw pair goes in, only the private
/// message comes out.
fn user_side<F: Scalar, R: Rng + ?Sized>(
    builder: &ObservationBuilder<F>,
    x: &[F],
    r: F,
    theta_hat: &[F],
    rng: &mut R,
) -> Result<crate::estimators::PrivateObservation<F>> {
    builder.observe(x, r, theta_hat, rng)
}

/// Output of [`run_single`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun<F> {
    pub records: Vec<RoundRecord<F>>,
    pub final_theta: Vec<F>,
    pub fallback_ridges: usize,
    pub solve_failures: usize,
}

impl<F: Scalar> SingleRun<F> {
    pub fn total_regret(&self) -> F {
        self.records.last().map_or(F::zero(), |r| r.cum_regret)
    }
}

/// Runs `config.horizon` rounds from `seed`.
pub fn run_single<F: Scalar>(config: &SingleAlgoConfig<F>, env: &EnvSpec<F>, seed: u64) -> Result<SingleRun<F>> {
    let mut bandit = SingleBandit::new(config, env)?;
    let mut rngs = RunRngs::from_seed(seed);
    let mut records = Vec::with_capacity(config.horizon);
    for _ in 0..config.horizon {
        records.push(bandit.single_round(env, &mut rngs)?);
    }
    Ok(SingleRun {
        records,
        final_theta: bandit.theta().to_vec(),
        fallback_ridges: bandit.estimator.fallback_ridges(),
        solve_failures: bandit.estimator.solve_failures(),
    })
}
