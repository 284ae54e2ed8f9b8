//! Synthetic ground-truth environments.
//!
//! Arms are indexed from 0. In the single-parameter mode every arm has its
//! own context `x_{t,a}` and all arms share one parameter `θ*`; in the
//! multi-parameter mode one context `X_t` is shared and every arm has its
//! own `θ*_a`.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::link::{LinkFunction, LinkKind};
use crate::linalg::{dot, norm};
use crate::rng::{std_normal, uniform01, unit_sphere};
use crate::scalar::Scalar;

/// Slack on the `‖θ*‖ ≤ 1` and context-bound checks.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SingleParam,
    MultiParam,
}

/// Which quantity the pricing environment's regret is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PricingObjective {
    /// Acceptance probability `μ((x, p x)ᵀθ*)`.
    #[default]
    Acceptance,
    /// Expected revenue `p · μ((x, p x)ᵀθ*)`.
    Revenue,
}

/// Where pricing customers' feature vectors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource<F> {
    /// Rows sampled uniformly with replacement.
    Table(Vec<Vec<F>>),
    /// Uniform on the unit sphere of the given dimension.
    UnitSphere(usize),
}

impl<F: Scalar> FeatureSource<F> {
    fn dim(&self) -> usize {
        match self {
            FeatureSource::Table(rows) => rows.first().map_or(0, Vec::len),
            FeatureSource::UnitSphere(d) => *d,
        }
    }

    fn max_norm(&self) -> F {
        match self {
            FeatureSource::Table(rows) => rows.iter().fold(F::zero(), |m, r| m.max(norm(r))),
            FeatureSource::UnitSphere(_) => F::one(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        match self {
            FeatureSource::Table(rows) => rows[rng.random_range(0..rows.len())].clone(),
            FeatureSource::UnitSphere(d) => unit_sphere(*d, rng),
        }
    }
}

/// Discretized price menu. Arm `i` offers `prices[i]`; its decision context
/// is `(x, (p_i / price_scale) x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingGrid<F> {
    pub prices: Vec<F>,
    pub price_scale: F,
    pub features: FeatureSource<F>,
    pub objective: PricingObjective,
}

impl<F: Scalar> PricingGrid<F> {
    fn arm_context(&self, x: &[F], arm: usize) -> Vec<F> {
        let p = self.prices[arm] / self.price_scale;
        x.iter().copied().chain(x.iter().map(|&v| p * v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextLaw<F> {
    /// Uniform on `S^{d-1}` (normalized Gaussian).
    UnitSphere,
    /// Isotropic Gaussian with the given std, rescaled onto the `C_B` ball
    /// when it falls outside.
    GaussianIsotropic { std: F },
    /// `(1/√2, z/√2)` with `z` uniform on `S^{d-2}`: unit-norm contexts with
    /// a constant intercept coordinate.
    InterceptSphere,
    Pricing(PricingGrid<F>),
    /// Replays the same rows every round (single mode: one row per arm;
    /// multi mode: the first row). For fixtures.
    Fixed(Vec<Vec<F>>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind<F> {
    /// Gaussian with std `sigma`, truncated to `±3 sigma`, added to the mean
    /// reward; the result is clipped to `[-c_r, c_r]`.
    TruncatedGaussian { sigma: F },
    /// `r ∈ {0, 1}` with success probability equal to the mean reward.
    Bernoulli,
}

/// Ground truth for one bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec<F> {
    mode: Mode,
    d: usize,
    k: usize,
    theta_star: Vec<Vec<F>>,
    link: LinkFunction<F>,
    context_law: ContextLaw<F>,
    noise: NoiseKind<F>,
    context_bound: F,
    reward_bound: F,
    known_gap: Option<F>,
    known_suboptimal: Vec<usize>,
}

/// Contexts of one round plus the ground-truth optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSample<F> {
    /// Single mode: row `a` is `x_{t,a}`. Multi mode: one shared row.
    pub contexts: Vec<Vec<F>>,
    /// Ground-truth value of every arm.
    pub values: Vec<F>,
    pub optimal_arm: usize,
    pub optimal_value: F,
}

impl<F: Scalar> RoundSample<F> {
    pub fn context(&self, arm: usize) -> &[F] {
        if self.contexts.len() == 1 {
            &self.contexts[0]
        } else {
            &self.contexts[arm]
        }
    }
}

/// Index of the largest value with lowest-index tie-break.
pub fn argmax_lowest<F: Scalar>(values: impl IntoIterator<Item = F>) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

impl<F: Scalar> EnvSpec<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: Mode,
        k: usize,
        theta_star: Vec<Vec<F>>,
        link: LinkFunction<F>,
        context_law: ContextLaw<F>,
        noise: NoiseKind<F>,
        context_bound: F,
        reward_bound: F,
    ) -> Result<Self> {
        if k == 0 {
            return Err(invalid("K", "at least one arm is required"));
        }
        let expected_params = match mode {
            Mode::SingleParam => 1,
            Mode::MultiParam => k,
        };
        if theta_star.len() != expected_params {
            return Err(Error::DimensionMismatch {
                expected: expected_params,
                found: theta_star.len(),
            });
        }
        let d = theta_star[0].len();
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        for th in &theta_star {
            if th.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: th.len(),
                });
            }
            if norm(th) > F::one() + F::of(BOUND_SLACK) {
                return Err(invalid("theta_star", "every arm parameter must satisfy ‖θ*‖ ≤ 1"));
            }
        }
        if !(context_bound > F::zero()) || !context_bound.is_finite() {
            return Err(invalid("C_B", format!("must be positive, got {context_bound}")));
        }
        if !(reward_bound > F::zero()) || !reward_bound.is_finite() {
            return Err(invalid("c_r", format!("must be positive, got {reward_bound}")));
        }
        match &context_law {
            ContextLaw::UnitSphere | ContextLaw::InterceptSphere => {
                if context_bound < F::one() {
                    return Err(invalid("C_B", "unit-norm context laws need C_B ≥ 1"));
                }
                if matches!(context_law, ContextLaw::InterceptSphere) && d < 2 {
                    return Err(invalid("d", "the intercept law needs d ≥ 2"));
                }
            }
            ContextLaw::GaussianIsotropic { std } => {
                if !(*std > F::zero()) {
                    return Err(invalid("std", "context std must be positive"));
                }
            }
            ContextLaw::Pricing(grid) => {
                if mode != Mode::SingleParam || grid.prices.len() != k {
                    return Err(invalid("prices", "pricing needs single mode with one arm per price"));
                }
                if 2 * grid.features.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: 2 * grid.features.dim(),
                    });
                }
                if let FeatureSource::Table(rows) = &grid.features {
                    if rows.is_empty() || rows.iter().any(|r| r.len() != d / 2) {
                        return Err(invalid("features", "table must be non-empty and rectangular"));
                    }
                }
            }
            ContextLaw::Fixed(rows) => {
                let needed = match mode {
                    Mode::SingleParam => k,
                    Mode::MultiParam => 1,
                };
                if rows.len() < needed {
                    return Err(invalid("contexts", format!("fixture needs {needed} rows")));
                }
                for r in rows {
                    if r.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: r.len(),
                        });
                    }
                    if norm(r) > context_bound * F::of(1.0 + BOUND_SLACK) {
                        return Err(invalid("contexts", "fixture row exceeds C_B"));
                    }
                }
            }
        }
        if let ContextLaw::Pricing(grid) = &context_law {
            let max_p = grid.prices.iter().fold(F::zero(), |m, &p| m.max(p / grid.price_scale));
            let needed = grid.features.max_norm() * (F::one() + max_p * max_p).sqrt();
            if needed > context_bound * F::of(1.0 + BOUND_SLACK) {
                return Err(invalid("C_B", format!("pricing contexts reach norm {needed}")));
            }
        }
        if matches!(noise, NoiseKind::Bernoulli) && reward_bound < F::one() {
            return Err(invalid("c_r", "Bernoulli rewards need c_r ≥ 1"));
        }
        if let NoiseKind::TruncatedGaussian { sigma } = noise {
            if !(sigma >= F::zero()) {
                return Err(invalid("sigma_noise", "must be nonnegative"));
            }
        }
        Ok(Self {
            mode,
            d,
            k,
            theta_star,
            link,
            context_law,
            noise,
            context_bound,
            reward_bound,
            known_gap: None,
            known_suboptimal: Vec::new(),
        })
    }

    /// Records the sub-optimality gap and the arms that are never optimal,
    /// when the construction makes them known.
    pub fn with_known_gap(mut self, gap: F, suboptimal: Vec<usize>) -> Self {
        self.known_gap = Some(gap);
        self.known_suboptimal = suboptimal;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn arms(&self) -> usize {
        self.k
    }

    pub fn link(&self) -> &LinkFunction<F> {
        &self.link
    }

    pub fn context_law(&self) -> &ContextLaw<F> {
        &self.context_law
    }

    pub fn noise(&self) -> NoiseKind<F> {
        self.noise
    }

    pub fn context_bound(&self) -> F {
        self.context_bound
    }

    pub fn reward_bound(&self) -> F {
        self.reward_bound
    }

    pub fn known_gap(&self) -> Option<F> {
        self.known_gap
    }

    pub fn known_suboptimal(&self) -> &[usize] {
        &self.known_suboptimal
    }

    pub fn theta_star(&self) -> &[Vec<F>] {
        &self.theta_star
    }

    /// Ground-truth parameter that scores `arm`.
    pub fn arm_param(&self, arm: usize) -> &[F] {
        match self.mode {
            Mode::SingleParam => &self.theta_star[0],
            Mode::MultiParam => &self.theta_star[arm],
        }
    }

    /// Expected reward `μ(xᵀθ*_arm)`.
    pub fn mean_reward(&self, context: &[F], arm: usize) -> F {
        self.link.eval(dot(context, self.arm_param(arm)))
    }

    fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        match &self.context_law {
            ContextLaw::UnitSphere => unit_sphere(self.d, rng),
            ContextLaw::GaussianIsotropic { std } => {
                let mut x: Vec<F> = (0..self.d).map(|_| *std * std_normal::<F, _>(rng)).collect();
                let n = norm(&x);
                if n > self.context_bound {
                    let s = self.context_bound / n;
                    x.iter_mut().for_each(|v| *v *= s);
                }
                x
            }
            ContextLaw::InterceptSphere => {
                let h = F::of(std::f64::consts::FRAC_1_SQRT_2);
                let z: Vec<F> = unit_sphere(self.d - 1, rng);
                std::iter::once(h).chain(z.into_iter().map(|v| v * h)).collect()
            }
            ContextLaw::Pricing(_) | ContextLaw::Fixed(_) => unreachable!("handled by draw_round"),
        }
    }

    /// Draws one round: `K` contexts (single mode) or one shared context
    /// (multi mode), and the ground-truth optimum.
    pub fn draw_round<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundSample<F> {
        let contexts: Vec<Vec<F>> = match (&self.context_law, self.mode) {
            (ContextLaw::Fixed(rows), Mode::SingleParam) => rows[..self.k].to_vec(),
            (ContextLaw::Fixed(rows), Mode::MultiParam) => vec![rows[0].clone()],
            (ContextLaw::Pricing(grid), _) => {
                let x = grid.features.draw(rng);
                (0..self.k).map(|a| grid.arm_context(&x, a)).collect()
            }
            (_, Mode::SingleParam) => (0..self.k).map(|_| self.draw_one(rng)).collect(),
            (_, Mode::MultiParam) => vec![self.draw_one(rng)],
        };
        let mut sample = RoundSample {
            contexts,
            values: Vec::new(),
            optimal_arm: 0,
            optimal_value: F::zero(),
        };
        sample.values = (0..self.k).map(|a| self.arm_value(&sample, a)).collect();
        sample.optimal_arm = argmax_lowest(sample.values.iter().copied()).unwrap_or(0);
        sample.optimal_value = sample.values[sample.optimal_arm];
        sample
    }

    fn arm_value(&self, sample: &RoundSample<F>, arm: usize) -> F {
        let mu = self.mean_reward(sample.context(arm), arm);
        match &self.context_law {
            ContextLaw::Pricing(grid) if grid.objective == PricingObjective::Revenue => grid.prices[arm] * mu,
            _ => mu,
        }
    }

    /// Realizes a bounded reward for `arm` at `context`.
    pub fn realize_reward<R: Rng + ?Sized>(&self, context: &[F], arm: usize, rng: &mut R) -> Result<F> {
        if arm >= self.k {
            return Err(Error::ArmOutOfRange { arm, arms: self.k });
        }
        let mean = self.mean_reward(context, arm);
        let r = match self.noise {
            NoiseKind::TruncatedGaussian { sigma } => {
                let mut eps = F::zero();
                if sigma > F::zero() {
                    loop {
                        let z: F = std_normal(rng);
                        if z.abs() <= F::of(3.0) {
                            eps = sigma * z;
                            break;
                        }
                    }
                }
                mean + eps
            }
            NoiseKind::Bernoulli => {
                let p = mean.max(F::zero()).min(F::one()).as_f64();
                if uniform01(rng) < p {
                    F::one()
                } else {
                    F::zero()
                }
            }
        };
        Ok(r.max(-self.reward_bound).min(self.reward_bound))
    }

    /// `value(optimal) − value(chosen)`, never negative.
    pub fn instant_regret(&self, sample: &RoundSample<F>, chosen: usize) -> Result<F> {
        if chosen >= self.k {
            return Err(Error::ArmOutOfRange {
                arm: chosen,
                arms: self.k,
            });
        }
        Ok((sample.optimal_value - sample.values[chosen]).max(F::zero()))
    }
}

/// Reward bound `c_r = C_B + 3σ` used by the Gaussian presets.
pub fn default_reward_bound<F: Scalar>(context_bound: F, sigma_noise: F) -> F {
    context_bound + F::of(3.0) * sigma_noise
}

/// `n` prices uniformly spaced on `[lo, hi]`.
pub fn uniform_price_grid<F: Scalar>(lo: F, hi: F, n: usize) -> Vec<F> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * F::of_usize(i) / F::of_usize(n - 1))
        .collect()
}

/// Upper end of the feasible price interval.
pub const MAX_PRICE: f64 = 25_000.0;

/// Logit-demand pricing environment: one arm per price, Bernoulli "apply"
/// rewards with probability `logistic((x, p x)ᵀθ*)`.
pub fn make_pricing_env<F: Scalar>(
    theta_star: Vec<F>,
    prices: Vec<F>,
    features: FeatureSource<F>,
    price_scale: F,
    objective: PricingObjective,
) -> Result<EnvSpec<F>> {
    if prices.is_empty() {
        return Err(invalid("prices", "grid must be non-empty"));
    }
    for w in prices.windows(2) {
        if !(w[1] > w[0]) {
            return Err(invalid("prices", "grid must be strictly increasing"));
        }
    }
    if prices[0] < F::zero() || *prices.last().unwrap() > F::of(MAX_PRICE) {
        return Err(invalid("prices", format!("grid must lie within [0, {MAX_PRICE}]")));
    }
    if !(price_scale > F::zero()) {
        return Err(invalid("price_scale", "must be positive"));
    }
    let max_p = *prices.last().unwrap() / price_scale;
    let context_bound = features.max_norm().max(F::of(1e-12)) * (F::one() + max_p * max_p).sqrt();
    let link = LinkFunction::new(LinkKind::Logistic, context_bound)?;
    let k = prices.len();
    EnvSpec::new(
        Mode::SingleParam,
        k,
        vec![theta_star],
        link,
        ContextLaw::Pricing(PricingGrid {
            prices,
            price_scale,
            features,
            objective,
        }),
        NoiseKind::Bernoulli,
        context_bound,
        F::one(),
    )
}

/// Ready-made environments used by the benchmarks.
pub mod presets {
    use super::*;

    /// `(1, …, 1)/√d`.
    pub fn diagonal_unit<F: Scalar>(d: usize) -> Vec<F> {
        let v = F::one() / F::of_usize(d).sqrt();
        vec![v; d]
    }

    /// Single-parameter linear bandit with unit-sphere contexts.
    pub fn single_sphere<F: Scalar>(d: usize, k: usize, sigma_noise: F) -> Result<EnvSpec<F>> {
        EnvSpec::new(
            Mode::SingleParam,
            k,
            vec![diagonal_unit(d)],
            LinkFunction::identity(),
            ContextLaw::UnitSphere,
            NoiseKind::TruncatedGaussian { sigma: sigma_noise },
            F::one(),
            default_reward_bound(F::one(), sigma_noise),
        )
    }

    /// Single-parameter logistic bandit with Bernoulli rewards.
    pub fn single_logistic<F: Scalar>(d: usize, k: usize) -> Result<EnvSpec<F>> {
        EnvSpec::new(
            Mode::SingleParam,
            k,
            vec![diagonal_unit(d)],
            LinkFunction::logistic(F::one())?,
            ContextLaw::UnitSphere,
            NoiseKind::Bernoulli,
            F::one(),
            F::one(),
        )
    }

    /// Three-arm multi-parameter instance with a margin.
    ///
    /// Contexts are `(1/√2, z/√2)`. Arms 0 and 1 are `(0.6, ±0.8, 0, …)` and
    /// split the sphere between them; arm 2 is `(−1, 0, …)` and trails the
    /// best arm by at least `1.6/√2` for every context. Pairwise parameter
    /// distances are ≥ 1.6.
    pub fn multi_separated<F: Scalar>(d: usize, sigma_noise: F) -> Result<EnvSpec<F>> {
        if d < 2 {
            return Err(invalid("d", "separated preset needs d ≥ 2"));
        }
        let mut a = vec![F::zero(); d];
        let mut b = vec![F::zero(); d];
        let mut c = vec![F::zero(); d];
        a[0] = F::of(0.6);
        a[1] = F::of(0.8);
        b[0] = F::of(0.6);
        b[1] = F::of(-0.8);
        c[0] = F::of(-1.0);
        let gap = F::of(1.6 * std::f64::consts::FRAC_1_SQRT_2);
        Ok(EnvSpec::new(
            Mode::MultiParam,
            3,
            vec![a, b, c],
            LinkFunction::identity(),
            ContextLaw::InterceptSphere,
            NoiseKind::TruncatedGaussian { sigma: sigma_noise },
            F::one(),
            default_reward_bound(F::one(), sigma_noise),
        )?
        .with_known_gap(gap, vec![2]))
    }

    /// Multi-parameter instance with arm parameters uniform on the unit sphere.
    pub fn multi_random<F: Scalar, R: Rng + ?Sized>(
        d: usize,
        k: usize,
        sigma_noise: F,
        rng: &mut R,
    ) -> Result<EnvSpec<F>> {
        let params = (0..k).map(|_| unit_sphere(d, rng)).collect();
        EnvSpec::new(
            Mode::MultiParam,
            k,
            params,
            LinkFunction::identity(),
            ContextLaw::UnitSphere,
            NoiseKind::TruncatedGaussian { sigma: sigma_noise },
            F::one(),
            default_reward_bound(F::one(), sigma_noise),
        )
    }

    /// Pricing instance with synthetic unit-sphere customer features.
    ///
    /// `θ* = (w, …, w, −w, …, −w)` with `w = 0.5/√f`: the price block has the
    /// opposite sign of the base block. Prices are divided by 25000 so the
    /// price-interaction block stays O(1).
    pub fn pricing_synthetic<F: Scalar>(feature_dim: usize) -> Result<EnvSpec<F>> {
        if feature_dim == 0 {
            return Err(invalid("feature_dim", "must be positive"));
        }
        let mut theta = vec![F::zero(); 2 * feature_dim];
        let w = F::of(0.5) / F::of_usize(feature_dim).sqrt();
        for i in 0..feature_dim {
            theta[i] = w;
            theta[feature_dim + i] = -w;
        }
        make_pricing_env(
            theta,
            uniform_price_grid(F::zero(), F::of(MAX_PRICE), 25),
            FeatureSource::UnitSphere(feature_dim),
            F::of(MAX_PRICE),
            PricingObjective::Acceptance,
        )
    }
}
