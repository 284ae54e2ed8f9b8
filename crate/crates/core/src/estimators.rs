//! User-side observation builders and server-side incremental estimators.
//!
//! The user turns a raw pair `(x, r)` into a [`PrivateObservation`]; the
//! server only ever sees that message. Two families are implemented:
//!
//! * **OLS**: the user releases `M = x xᵀ + W` and `u = r x + ξ` (Gaussian
//!   mechanism); the server keeps `A = Σ M`, `b = Σ u` and solves
//!   `(A + c̃ √t I) θ̂ = b`.
//! * **SGD**: the user releases `Ψ_{ε,R}((μ(xᵀθ̂) − r) x)` with
//!   `R = 2 c_r C_B`; the server steps `θ̂ ← θ̂ − η z`.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::link::LinkFunction;
use crate::linalg::{all_finite, axpy, dot, norm, scale, CompensatedVec, SymMatrix};
use crate::privacy::{add_symmetric_noise, gaussian_sigma, BallMechanism, PrivacyBudget};
use crate::rng::std_normal;
use crate::scalar::Scalar;

/// Sensitivity used for the base noise scale `σ_{ε,δ} = 2 sqrt(2 ln(1.25/δ))/ε`.
pub const BASE_SENSITIVITY: f64 = 2.0;

/// Relative size of the one-shot fallback ridge, times `1 + ‖A‖_max`.
pub const FALLBACK_RIDGE: f64 = 1e-8;

/// `σ_{ε,δ}` for a budget.
pub fn base_sigma<F: Scalar>(budget: &PrivacyBudget<F>) -> Result<F> {
    gaussian_sigma(budget, F::of(BASE_SENSITIVITY))
}

/// Privatized OLS sufficient statistics `(M, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsObservation<F> {
    m: SymMatrix<F>,
    u: Vec<F>,
}

impl<F: Scalar> OlsObservation<F> {
    pub fn new(m: SymMatrix<F>, u: Vec<F>) -> Result<Self> {
        if m.dim() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                found: u.len(),
            });
        }
        Ok(Self { m, u })
    }

    pub fn matrix(&self) -> &SymMatrix<F> {
        &self.m
    }

    pub fn vector(&self) -> &[F] {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

/// The only message that crosses from user to server.
#[derive(Debug, Clone, PartialEq)]
pub enum PrivateObservation<F> {
    Ols(OlsObservation<F>),
    /// Privatized gradient on the sphere of radius `r_{ε,d}`.
    Sgd(Vec<F>),
}

impl<F: Scalar> PrivateObservation<F> {
    pub fn dim(&self) -> usize {
        match self {
            PrivateObservation::Ols(o) => o.dim(),
            PrivateObservation::Sgd(z) => z.len(),
        }
    }
}

fn check_bounds<F: Scalar>(x: &[F], r: F, context_bound: F, reward_bound: F) -> Result<()> {
    if !all_finite(x) || !r.is_finite() {
        return Err(Error::NonFinite("observation"));
    }
    let n = norm(x);
    if n > context_bound * (F::one() + crate::privacy::norm_slack::<F>()) {
        return Err(Error::NormExceedsBound {
            norm: n.as_f64(),
            bound: context_bound.as_f64(),
        });
    }
    if r.abs() > reward_bound {
        return Err(Error::RewardOutOfRange {
            reward: r.as_f64(),
            bound: reward_bound.as_f64(),
        });
    }
    Ok(())
}

/// `M = x xᵀ + W`, `u = r x + ξ`, with `W` entries of std `2 C_B σ` and `ξ`
/// coordinates of std `C_B c_r σ`. `sigma_base = 0` gives the noiseless pair.
pub fn make_ols_observation<F: Scalar, R: Rng + ?Sized>(
    x: &[F],
    r: F,
    sigma_base: F,
    context_bound: F,
    reward_bound: F,
    rng: &mut R,
) -> Result<OlsObservation<F>> {
    check_bounds(x, r, context_bound, reward_bound)?;
    if !(sigma_base >= F::zero()) {
        return Err(invalid("sigma", format!("must be nonnegative, got {sigma_base}")));
    }
    let mut m = SymMatrix::outer(x);
    let mut u: Vec<F> = x.iter().map(|&v| r * v).collect();
    if sigma_base > F::zero() {
        add_symmetric_noise(&mut m, F::of(2.0) * context_bound * sigma_base, rng);
        let s = context_bound * reward_bound * sigma_base;
        for v in u.iter_mut() {
            *v += s * std_normal::<F, _>(rng);
        }
    }
    Ok(OlsObservation { m, u })
}

/// Raw GLM gradient `(μ(xᵀθ̂) − r) x`.
///
/// The prediction is clamped to `[-c_r, c_r]` so the gradient norm never
/// exceeds `2 c_r C_B`, the bound the ball mechanism is calibrated for.
pub fn glm_gradient<F: Scalar>(x: &[F], r: F, theta_hat: &[F], link: &LinkFunction<F>, reward_bound: F) -> Vec<F> {
    let pred = link.eval(dot(x, theta_hat)).max(-reward_bound).min(reward_bound);
    let resid = pred - r;
    x.iter().map(|&v| resid * v).collect()
}

/// `Ψ_{ε,R}(g)` with `g` the clamped GLM gradient, or `g` itself when
/// `mechanism` is `None`.
#[allow(clippy::too_many_arguments)]
pub fn make_sgd_observation<F: Scalar, R: Rng + ?Sized>(
    x: &[F],
    r: F,
    theta_hat: &[F],
    link: &LinkFunction<F>,
    mechanism: Option<&BallMechanism<F>>,
    context_bound: F,
    reward_bound: F,
    rng: &mut R,
) -> Result<Vec<F>> {
    check_bounds(x, r, context_bound, reward_bound)?;
    if theta_hat.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: theta_hat.len(),
        });
    }
    let g = glm_gradient(x, r, theta_hat, link, reward_bound);
    match mechanism {
        Some(mech) => mech.privatize(&g, rng),
        None => Ok(g),
    }
}

/// `2σ (4√d + 2 ln(2T/α))`.
pub fn default_c_tilde<F: Scalar>(sigma: F, d: usize, horizon: usize, alpha: F) -> Result<F> {
    if !(sigma >= F::zero()) {
        return Err(invalid("sigma", format!("must be nonnegative, got {sigma}")));
    }
    if d == 0 || horizon == 0 {
        return Err(invalid("d/T", "must be positive"));
    }
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let two = F::of(2.0);
    let log_term = (two * F::of_usize(horizon) / alpha).ln();
    Ok(two * sigma * (F::of(4.0) * F::of_usize(d).sqrt() + two * log_term))
}

/// User-side builder bound to one estimator family and calibration.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationBuilder<F> {
    Ols {
        sigma_base: F,
        context_bound: F,
        reward_bound: F,
    },
    Sgd {
        link: LinkFunction<F>,
        mechanism: Option<BallMechanism<F>>,
        context_bound: F,
        reward_bound: F,
    },
}

impl<F: Scalar> ObservationBuilder<F> {
    /// OLS builder; `budget = None` selects noiseless mode.
    pub fn ols(budget: Option<&PrivacyBudget<F>>, context_bound: F, reward_bound: F) -> Result<Self> {
        let sigma_base = match budget {
            Some(b) => base_sigma(b)?,
            None => F::zero(),
        };
        Ok(Self::Ols {
            sigma_base,
            context_bound,
            reward_bound,
        })
    }

    /// SGD builder; `epsilon = None` selects noiseless mode.
    pub fn sgd(
        link: LinkFunction<F>,
        epsilon: Option<F>,
        d: usize,
        context_bound: F,
        reward_bound: F,
    ) -> Result<Self> {
        let mechanism = match epsilon {
            Some(e) => Some(BallMechanism::new(
                e,
                d,
                F::of(2.0) * reward_bound * context_bound,
            )?),
            None => None,
        };
        Ok(Self::Sgd {
            link,
            mechanism,
            context_bound,
            reward_bound,
        })
    }

    pub fn is_noiseless(&self) -> bool {
        match self {
            Self::Ols { sigma_base, .. } => *sigma_base == F::zero(),
            Self::Sgd { mechanism, .. } => mechanism.is_none(),
        }
    }

    pub fn observe<R: Rng + ?Sized>(
        &self,
        x: &[F],
        r: F,
        theta_hat: &[F],
        rng: &mut R,
    ) -> Result<PrivateObservation<F>> {
        match self {
            Self::Ols {
                sigma_base,
                context_bound,
                reward_bound,
            } => make_ols_observation(x, r, *sigma_base, *context_bound, *reward_bound, rng)
                .map(PrivateObservation::Ols),
            Self::Sgd {
                link,
                mechanism,
                context_bound,
                reward_bound,
            } => make_sgd_observation(
                x,
                r,
                theta_hat,
                link,
                mechanism.as_ref(),
                *context_bound,
                *reward_bound,
                rng,
            )
            .map(PrivateObservation::Sgd),
        }
    }
}

/// Result of an OLS solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution<F> {
    pub theta: Vec<F>,
    /// The shifted matrix needed the extra fallback ridge.
    pub used_fallback: bool,
}

/// Server-side OLS accumulators. Sums are Neumaier-compensated, and only the
/// upper triangle of `A` is stored so the materialized matrix is symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsState<F> {
    d: usize,
    a_upper: CompensatedVec<F>,
    b: CompensatedVec<F>,
    t: usize,
    c_tilde: F,
}

impl<F: Scalar> OlsState<F> {
    pub fn new(d: usize, c_tilde: F) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(c_tilde >= F::zero()) || !c_tilde.is_finite() {
            return Err(invalid("c_tilde", format!("must be nonnegative, got {c_tilde}")));
        }
        Ok(Self {
            d,
            a_upper: CompensatedVec::zeros(d * (d + 1) / 2),
            b: CompensatedVec::zeros(d),
            t: 0,
            c_tilde,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn count(&self) -> usize {
        self.t
    }

    pub fn c_tilde(&self) -> F {
        self.c_tilde
    }

    /// `A = Σ M_i` as a symmetric matrix.
    pub fn gram(&self) -> SymMatrix<F> {
        let d = self.d;
        let mut m = SymMatrix::zeros(d);
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                m.set_sym(i, j, self.a_upper.value_at(k));
                k += 1;
            }
        }
        m
    }

    /// `b = Σ u_i`.
    pub fn moment(&self) -> Vec<F> {
        self.b.value()
    }

    pub fn ingest(&mut self, obs: &OlsObservation<F>) -> Result<()> {
        if obs.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: obs.dim(),
            });
        }
        let mut k = 0;
        for i in 0..self.d {
            for j in i..self.d {
                self.a_upper.add_at(k, obs.m.get(i, j));
                k += 1;
            }
        }
        self.b.add(&obs.u);
        self.t += 1;
        Ok(())
    }

    /// Solves `(A + c̃ √t I) θ̂ = b`, retrying once with an extra ridge of
    /// `1e-8 (1 + ‖A‖_max)` if the shifted matrix is not positive definite.
    pub fn point_estimate(&self) -> Result<OlsSolution<F>> {
        if self.t == 0 {
            return Err(Error::NoData);
        }
        let mut a = self.gram();
        let b = self.moment();
        a.shift_diagonal(self.c_tilde * F::of_usize(self.t).sqrt());
        if let Some(ch) = a.cholesky() {
            return Ok(OlsSolution {
                theta: ch.solve(&b),
                used_fallback: false,
            });
        }
        let ridge = F::of(FALLBACK_RIDGE) * (F::one() + a.max_abs());
        a.shift_diagonal(ridge);
        log::debug!("OLS fallback ridge {ridge} at t={}", self.t);
        match a.cholesky() {
            Some(ch) => Ok(OlsSolution {
                theta: ch.solve(&b),
                used_fallback: true,
            }),
            None => Err(Error::SolveFailed),
        }
    }
}

/// Server-side SGD iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState<F> {
    theta: Vec<F>,
    step_count: usize,
    c0: F,
    project_unit_ball: bool,
}

impl<F: Scalar> SgdState<F> {
    /// Starts at `θ̂_0 = 0`.
    pub fn new(d: usize, c0: F, project_unit_ball: bool) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(c0 > F::zero()) || !c0.is_finite() {
            return Err(invalid("sgd_c0", format!("must be positive, got {c0}")));
        }
        Ok(Self {
            theta: vec![F::zero(); d],
            step_count: 0,
            c0,
            project_unit_ball,
        })
    }

    pub fn theta(&self) -> &[F] {
        &self.theta
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn c0(&self) -> F {
        self.c0
    }

    /// `η_t = c0 / t` for the next step.
    pub fn next_step_size(&self) -> F {
        self.c0 / F::of_usize(self.step_count + 1)
    }

    /// `θ̂ ← θ̂ − η z`, optionally projected onto the unit ball.
    pub fn step(&mut self, z: &[F], eta: F) -> Result<()> {
        if z.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                found: z.len(),
            });
        }
        if !(eta > F::zero()) || !eta.is_finite() {
            return Err(invalid("eta", format!("must be positive, got {eta}")));
        }
        axpy(-eta, z, &mut self.theta);
        self.step_count += 1;
        if self.project_unit_ball {
            let n = norm(&self.theta);
            if n > F::one() {
                scale(F::one() / n, &mut self.theta);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum EstimatorState<F> {
    Ols(OlsState<F>),
    Sgd(SgdState<F>),
}

/// Per-arm server estimator: consumes [`PrivateObservation`]s only and
/// caches the current `θ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmEstimator<F> {
    state: EstimatorState<F>,
    theta: Vec<F>,
    fallback_ridges: usize,
    solve_failures: usize,
}

impl<F: Scalar> ArmEstimator<F> {
    pub fn ols(d: usize, c_tilde: F) -> Result<Self> {
        Ok(Self {
            state: EstimatorState::Ols(OlsState::new(d, c_tilde)?),
            theta: vec![F::zero(); d],
            fallback_ridges: 0,
            solve_failures: 0,
        })
    }

    pub fn sgd(d: usize, c0: F, project_unit_ball: bool) -> Result<Self> {
        Ok(Self {
            state: EstimatorState::Sgd(SgdState::new(d, c0, project_unit_ball)?),
            theta: vec![F::zero(); d],
            fallback_ridges: 0,
            solve_failures: 0,
        })
    }

    pub fn theta(&self) -> &[F] {
        &self.theta
    }

    /// Number of observations consumed.
    pub fn updates(&self) -> usize {
        match &self.state {
            EstimatorState::Ols(s) => s.count(),
            EstimatorState::Sgd(s) => s.step_count(),
        }
    }

    pub fn fallback_ridges(&self) -> usize {
        self.fallback_ridges
    }

    pub fn solve_failures(&self) -> usize {
        self.solve_failures
    }

    /// Consumes one message. `eta` is the SGD step size and is ignored by OLS.
    /// An OLS solve failure keeps the previous `θ̂` and is counted.
    pub fn update(&mut self, obs: &PrivateObservation<F>, eta: F) -> Result<()> {
        match (&mut self.state, obs) {
            (EstimatorState::Ols(state), PrivateObservation::Ols(o)) => {
                state.ingest(o)?;
                match state.point_estimate() {
                    Ok(sol) => {
                        if sol.used_fallback {
                            self.fallback_ridges += 1;
                        }
                        self.theta = sol.theta;
                    }
                    Err(Error::SolveFailed) => {
                        self.solve_failures += 1;
                        log::warn!("OLS solve failed at t={}; keeping previous estimate", state.count());
                    }
                    Err(e) => return Err(e),
                }
            }
            (EstimatorState::Sgd(state), PrivateObservation::Sgd(z)) => {
                state.step(z, eta)?;
                self.theta.copy_from_slice(state.theta());
            }
            _ => return Err(invalid("observation", "estimator and observation families differ")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_from_seed, unit_sphere};
    use approx::assert_relative_eq;

    fn ols_obs(m: Vec<Vec<f64>>, u: Vec<f64>) -> OlsObservation<f64> {
        OlsObservation::new(SymMatrix::from_rows(&m, 1e-12).unwrap(), u).unwrap()
    }

    #[test]
    fn ols_observation_noiseless() {
        let mut rng = rng_from_seed(0);
        let o = make_ols_observation(&[1.0, 0.0], 3.0, 0.0, 1.0, 3.0, &mut rng).unwrap();
        assert_eq!(o.matrix().rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(o.vector(), &[3.0, 0.0]);
    }

    #[test]
    fn ols_observation_rejects_out_of_bounds() {
        let mut rng = rng_from_seed(0);
        assert!(matches!(
            make_ols_observation(&[2.0, 0.0], 0.0, 0.0, 1.0, 1.0, &mut rng),
            Err(Error::NormExceedsBound { .. })
        ));
        assert!(matches!(
            make_ols_observation(&[1.0, 0.0], 1.5, 0.0, 1.0, 1.0, &mut rng),
            Err(Error::RewardOutOfRange { .. })
        ));
    }

    #[test]
    fn ols_observation_zero_input_is_centered_noise() {
        let n = 100_000;
        let mut rng = rng_from_seed(1);
        let (mut m01, mut u0) = (0.0, 0.0);
        for _ in 0..n {
            let o = make_ols_observation(&[0.0, 0.0], 0.0, 1.0, 1.0, 1.0, &mut rng).unwrap();
            m01 += o.matrix().get(0, 1);
            u0 += o.vector()[0];
        }
        let root = (n as f64).sqrt();
        assert!((m01 / n as f64).abs() < 5.0 * 2.0 / root);
        assert!((u0 / n as f64).abs() < 5.0 * 1.0 / root);
    }

    #[test]
    fn ols_observation_noise_scales() {
        let n = 100_000;
        let mut rng = rng_from_seed(2);
        let mut m00 = Vec::with_capacity(n);
        let mut m01 = Vec::with_capacity(n);
        for _ in 0..n {
            let o = make_ols_observation(&[1.0, 0.0], 1.0, 1.0, 1.0, 1.0, &mut rng).unwrap();
            m00.push(o.matrix().get(0, 0));
            m01.push(o.matrix().get(0, 1));
        }
        let mean = m00.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 5.0 * 2.0 / (n as f64).sqrt());
        let mu = m01.iter().sum::<f64>() / n as f64;
        let sd = (m01.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd - 2.0).abs() < 0.05 * 2.0, "std {sd}");
    }

    #[test]
    fn ingest_accumulates() {
        let mut s = OlsState::new(2, 0.0).unwrap();
        let o = ols_obs(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]);
        s.ingest(&o).unwrap();
        assert_eq!(s.gram().rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(s.moment(), vec![1.0, 0.0]);
        assert_eq!(s.count(), 1);
        s.ingest(&o).unwrap();
        assert_eq!(s.gram().rows(), vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(s.moment(), vec![2.0, 0.0]);
        assert_eq!(s.count(), 2);
        let bad = ols_obs(vec![vec![1.0]], vec![1.0]);
        assert!(matches!(s.ingest(&bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ingest_order_is_irrelevant_under_compensation() {
        let mut rng = rng_from_seed(3);
        let obs: Vec<_> = (0..10)
            .map(|_| {
                let x: Vec<f64> = unit_sphere(4, &mut rng);
                make_ols_observation(&x, 0.7, 3.0, 1.0, 1.0, &mut rng).unwrap()
            })
            .collect();
        let mut fwd = OlsState::new(4, 0.0).unwrap();
        let mut rev = OlsState::new(4, 0.0).unwrap();
        let mut shuffled = OlsState::new(4, 0.0).unwrap();
        for o in &obs {
            fwd.ingest(o).unwrap();
        }
        for o in obs.iter().rev() {
            rev.ingest(o).unwrap();
        }
        for i in [3, 7, 1, 0, 9, 2, 5, 8, 4, 6] {
            shuffled.ingest(&obs[i]).unwrap();
        }
        for other in [&rev, &shuffled] {
            for (a, b) in fwd.gram().as_slice().iter().zip(other.gram().as_slice()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
            for (a, b) in fwd.moment().iter().zip(other.moment()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
        assert!(fwd.gram().is_exactly_symmetric());
    }

    #[test]
    fn point_estimate_examples() {
        let mut s = OlsState::new(2, 1.0).unwrap();
        assert_eq!(s.point_estimate(), Err(Error::NoData));
        s.ingest(&ols_obs(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![3.0, 0.0])).unwrap();
        let sol = s.point_estimate().unwrap();
        assert_relative_eq!(sol.theta[0], 1.5, max_relative = 1e-15);
        assert_eq!(sol.theta[1], 0.0);
        assert!(!sol.used_fallback);

        let mut z = OlsState::new(2, 1.0).unwrap();
        z.ingest(&ols_obs(vec![vec![2.0, 0.3], vec![0.3, 1.0]], vec![0.0, 0.0])).unwrap();
        assert_eq!(z.point_estimate().unwrap().theta, vec![0.0, 0.0]);
    }

    #[test]
    fn point_estimate_uses_fallback_on_singular_matrix() {
        let mut s = OlsState::new(2, 0.0).unwrap();
        s.ingest(&ols_obs(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![1.0, 0.0])).unwrap();
        let sol = s.point_estimate().unwrap();
        assert!(sol.used_fallback);
        assert_relative_eq!(sol.theta[0], 1.0, max_relative = 1e-6);

        let mut neg = OlsState::new(2, 0.0).unwrap();
        neg.ingest(&ols_obs(vec![vec![-5.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0])).unwrap();
        assert_eq!(neg.point_estimate(), Err(Error::SolveFailed));
    }

    #[test]
    fn c_tilde_examples() {
        assert_eq!(default_c_tilde(0.0, 4, 1000, 0.05).unwrap(), 0.0);
        let c = default_c_tilde(1.0, 4, 1000, 0.05).unwrap();
        assert_relative_eq!(c, 58.386_538_932_384_293, max_relative = 1e-14);
        assert_relative_eq!(default_c_tilde(2.0, 4, 1000, 0.05).unwrap(), 2.0 * c, max_relative = 1e-15);
        assert!(default_c_tilde(1.0, 4, 1000, 1.0).is_err());
        assert!(default_c_tilde(-1.0, 4, 1000, 0.5).is_err());
    }

    #[test]
    fn sgd_observation_examples() {
        let mut rng = rng_from_seed(4);
        let id = LinkFunction::identity();
        let g = make_sgd_observation(&[1.0, 0.0], 1.0, &[0.0, 0.0], &id, None, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(g, vec![-1.0, 0.0]);
        let lg = LinkFunction::logistic(1.0).unwrap();
        let g = make_sgd_observation(&[1.0, 0.0], 1.0, &[0.0, 0.0], &lg, None, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(g, vec![-0.5, 0.0]);

        let builder = ObservationBuilder::sgd(id, Some(1.0), 3, 1.0, 1.0).unwrap();
        let ObservationBuilder::Sgd { mechanism: Some(mech), .. } = &builder else {
            unreachable!()
        };
        assert_relative_eq!(mech.radius(), crate::privacy::ball_radius(1.0, 3, 2.0).unwrap());
        for _ in 0..100 {
            let x: Vec<f64> = unit_sphere(3, &mut rng);
            let PrivateObservation::Sgd(z) = builder.observe(&x, 0.3, &[5.0, -5.0, 5.0], &mut rng).unwrap() else {
                unreachable!()
            };
            assert!((norm(&z) - mech.radius()).abs() < 1e-9 * mech.radius());
        }
    }

    #[test]
    fn sgd_step_examples() {
        let mut s = SgdState::new(2, 1.0, false).unwrap();
        s.step(&[-1.0, 0.0], 0.5).unwrap();
        assert_eq!(s.theta(), &[0.5, 0.0]);
        assert_eq!(s.step_count(), 1);
        s.step(&[0.0, 0.0], 0.5).unwrap();
        assert_eq!(s.theta(), &[0.5, 0.0]);
        assert_eq!(s.step_count(), 2);
        assert!(s.step(&[0.0, 0.0], 0.0).is_err());
        assert!(s.step(&[0.0], 0.1).is_err());
    }

    #[test]
    fn sgd_projection() {
        let mut s = SgdState::new(2, 1.0, true).unwrap();
        s.step(&[-3.0, -4.0], 1.0).unwrap();
        assert_relative_eq!(s.theta()[0], 0.6);
        assert_relative_eq!(s.theta()[1], 0.8);
    }

    #[test]
    fn noiseless_sgd_matches_scalar_recursion() {
        let link = LinkFunction::identity();
        let mut s = SgdState::new(1, 1.0, false).unwrap();
        let mut reference = 0.0f64;
        let mut prev_err = f64::INFINITY;
        let mut rng = rng_from_seed(0);
        for t in 1..=100 {
            let g = make_sgd_observation(&[1.0], 1.0, s.theta(), &link, None, 1.0, 1.0, &mut rng).unwrap();
            let eta = s.next_step_size();
            s.step(&g, eta).unwrap();
            reference -= (1.0 / t as f64) * (reference - 1.0);
            assert_eq!(s.theta()[0], reference);
            let err = (1.0 - s.theta()[0]).abs();
            if t > 1 {
                assert!(err <= prev_err);
            }
            prev_err = err;
        }
    }

    #[test]
    fn arm_estimator_rejects_mixed_families() {
        let mut est = ArmEstimator::<f64>::sgd(2, 1.0, false).unwrap();
        let o = PrivateObservation::Ols(ols_obs(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]));
        assert!(est.update(&o, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // ℓ(θ) = ∫_0^{xᵀθ} (μ(s) − r) ds.
        fn loss(link: &LinkFunction<f64>, x: &[f64], r: f64, th: &[f64]) -> f64 {
            let s = dot(x, th);
            match link.kind() {
                crate::link::LinkKind::Identity => 0.5 * s * s - r * s,
                crate::link::LinkKind::Logistic => (1.0 + s.exp()).ln() - r * s,
            }
        }
        let mut rng = rng_from_seed(5);
        for link in [LinkFunction::identity(), LinkFunction::logistic(1.0).unwrap()] {
            for _ in 0..10 {
                let x: Vec<f64> = unit_sphere(4, &mut rng);
                let th: Vec<f64> = unit_sphere(4, &mut rng);
                let r = 0.3;
                let g = glm_gradient(&x, r, &th, &link, 10.0);
                let h = 1e-5;
                for k in 0..4 {
                    let mut p = th.clone();
                    let mut m = th.clone();
                    p[k] += h;
                    m[k] -= h;
                    let fd = (loss(&link, &x, r, &p) - loss(&link, &x, r, &m)) / (2.0 * h);
                    assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-3), "{fd} vs {}", g[k]);
                }
            }
        }
    }
}
