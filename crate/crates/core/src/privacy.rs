//! Local randomizers and budget accounting.
//!
//! Two mechanisms are provided:
//!
//! * the Gaussian mechanism, which adds `N(0, σ²)` noise with
//!   `σ = Δ₂ · sqrt(2 ln(1.25/δ)) / ε` and gives `(ε, δ)`-LDP;
//! * the ℓ2-ball mechanism `Ψ_{ε,R}`, which maps a vector of norm at most
//!   `R` to a point on the sphere of radius `r_{ε,d}` and gives pure ε-LDP
//!   with `E[Ψ(x)] = x`.
//!
//! All routines take an explicit generator and hold no state.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, dot, norm, SymMatrix};
use crate::rng::{std_normal, uniform01, unit_sphere};
use crate::scalar::Scalar;

/// Relative slack tolerated on input norm bounds (in `f64`).
pub const NORM_SLACK: f64 = 1e-9;

/// [`NORM_SLACK`], widened to a few ulps for lower-precision scalars.
pub fn norm_slack<F: Scalar>() -> F {
    F::of(NORM_SLACK).max(F::epsilon() * F::of(16.0))
}

/// Relative tolerance used when checking a matrix for symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// An `(ε, δ)` privacy level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget<F> {
    epsilon: F,
    delta: F,
}

impl<F: Scalar> PrivacyBudget<F> {
    pub fn new(epsilon: F, delta: F) -> Result<Self> {
        if !(epsilon > F::zero()) || !epsilon.is_finite() {
            return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(delta >= F::zero() && delta < F::one()) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    /// Pure ε-LDP budget (`δ = 0`).
    pub fn pure(epsilon: F) -> Result<Self> {
        Self::new(epsilon, F::zero())
    }

    pub fn epsilon(&self) -> F {
        self.epsilon
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    /// Sequential composition: both components add.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            epsilon: self.epsilon + other.epsilon,
            delta: self.delta + other.delta,
        }
    }

    /// Budget scaled by `1/parts` in both components.
    pub fn split(&self, parts: usize) -> Self {
        let k = F::of_usize(parts.max(1));
        Self {
            epsilon: self.epsilon / k,
            delta: self.delta / k,
        }
    }
}

/// Noise scale of the Gaussian mechanism for a given sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCalibration<F> {
    pub sigma: F,
    pub sensitivity: F,
}

impl<F: Scalar> NoiseCalibration<F> {
    pub fn gaussian(budget: &PrivacyBudget<F>, sensitivity: F) -> Result<Self> {
        Ok(Self {
            sigma: gaussian_sigma(budget, sensitivity)?,
            sensitivity,
        })
    }
}

/// `sensitivity · sqrt(2 ln(1.25/δ)) / ε`.
pub fn gaussian_sigma<F: Scalar>(budget: &PrivacyBudget<F>, sensitivity: F) -> Result<F> {
    if !(sensitivity >= F::zero()) || !sensitivity.is_finite() {
        return Err(invalid(
            "sensitivity",
            format!("must be nonnegative, got {sensitivity}"),
        ));
    }
    if budget.delta <= F::zero() {
        return Err(Error::GaussianRequiresDelta);
    }
    if sensitivity == F::zero() {
        return Ok(F::zero());
    }
    let log_term = (F::of(1.25) / budget.delta).ln();
    Ok(sensitivity * (F::of(2.0) * log_term).sqrt() / budget.epsilon)
}

/// `v + g` with `g` i.i.d. `N(0, sigma²)` per coordinate.
pub fn perturb_vector<F: Scalar, R: Rng + ?Sized>(v: &[F], sigma: F, rng: &mut R) -> Result<Vec<F>> {
    check_sigma(sigma)?;
    if !all_finite(v) {
        return Err(Error::NonFinite("vector"));
    }
    let mut out = v.to_vec();
    if sigma > F::zero() {
        for x in out.iter_mut() {
            *x += sigma * std_normal::<F, _>(rng);
        }
    }
    Ok(out)
}

/// `M + W` where the upper triangle of `W` (diagonal included) is i.i.d.
/// `N(0, sigma²)` and the lower triangle mirrors it.
pub fn perturb_symmetric_matrix<F: Scalar, R: Rng + ?Sized>(
    m: &SymMatrix<F>,
    sigma: F,
    rng: &mut R,
) -> Result<SymMatrix<F>> {
    check_sigma(sigma)?;
    let mut out = m.clone();
    add_symmetric_noise(&mut out, sigma, rng);
    Ok(out)
}

/// Rows-based entry point that validates squareness and symmetry.
pub fn perturb_symmetric_rows<F: Scalar, R: Rng + ?Sized>(
    rows: &[Vec<F>],
    sigma: F,
    rng: &mut R,
) -> Result<SymMatrix<F>> {
    let m = SymMatrix::from_rows(rows, F::of(SYMMETRY_TOL))?;
    perturb_symmetric_matrix(&m, sigma, rng)
}

pub(crate) fn add_symmetric_noise<F: Scalar, R: Rng + ?Sized>(m: &mut SymMatrix<F>, sigma: F, rng: &mut R) {
    if sigma == F::zero() {
        return;
    }
    let n = m.dim();
    for i in 0..n {
        for j in i..n {
            let v = m.get(i, j) + sigma * std_normal::<F, _>(rng);
            m.set_sym(i, j, v);
        }
    }
}

fn check_sigma<F: Scalar>(sigma: F) -> Result<()> {
    if !(sigma >= F::zero()) || !sigma.is_finite() {
        return Err(invalid("sigma", format!("must be nonnegative, got {sigma}")));
    }
    Ok(())
}

/// `r_{ε,d} = R (√π/2) ((e^ε+1)/(e^ε−1)) d Γ((d+1)/2) / Γ(d/2+1)`.
///
/// The gamma ratio goes through `lgamma` and the ε factor through
/// `1/tanh(ε/2)`, so the result stays finite for large `d` and `ε`.
pub fn ball_radius<F: Scalar>(epsilon: F, d: usize, bound: F) -> Result<F> {
    if !(epsilon > F::zero()) || !epsilon.is_finite() {
        return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    if !(bound > F::zero()) || !bound.is_finite() {
        return Err(invalid("R", format!("must be positive, got {bound}")));
    }
    let eps = epsilon.as_f64();
    let df = d as f64;
    let gamma_ratio = (libm::lgamma((df + 1.0) / 2.0) - libm::lgamma(df / 2.0 + 1.0)).exp();
    let coth = 1.0 / (eps / 2.0).tanh();
    Ok(bound * F::of(PI.sqrt() / 2.0 * coth * df * gamma_ratio))
}

/// Parameters of `Ψ_{ε,R}` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMechanism<F> {
    epsilon: F,
    bound: F,
    d: usize,
    radius: F,
}

impl<F: Scalar> BallMechanism<F> {
    pub fn new(epsilon: F, d: usize, bound: F) -> Result<Self> {
        let radius = ball_radius(epsilon, d, bound)?;
        Ok(Self {
            epsilon,
            bound,
            d,
            radius,
        })
    }

    pub fn epsilon(&self) -> F {
        self.epsilon
    }

    /// Input norm bound `R`.
    pub fn bound(&self) -> F {
        self.bound
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Output sphere radius `r_{ε,d}`.
    pub fn radius(&self) -> F {
        self.radius
    }

    /// Probability of sampling from the halfspace aligned with `X̃`.
    pub fn aligned_probability(&self) -> f64 {
        let e = self.epsilon.as_f64();
        // e^ε/(1+e^ε) written to avoid overflow.
        1.0 / (1.0 + (-e).exp())
    }

    pub fn privatize<R: Rng + ?Sized>(&self, x: &[F], rng: &mut R) -> Result<Vec<F>> {
        l2_ball_privatize(x, self, rng)
    }
}

/// Samples `Ψ_{ε,R}(x)`.
///
/// The output lies on the sphere of radius [`BallMechanism::radius`] and is
/// unbiased for `x`. Inputs are never clipped: `‖x‖ > R(1 + 1e-9)` is an
/// error, and inputs inside the slack are rescaled to norm `R`.
pub fn l2_ball_privatize<F: Scalar, R: Rng + ?Sized>(
    x: &[F],
    params: &BallMechanism<F>,
    rng: &mut R,
) -> Result<Vec<F>> {
    if x.len() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: x.len(),
        });
    }
    if !all_finite(x) {
        return Err(Error::NonFinite("vector"));
    }
    let bound = params.bound;
    let mut x_norm = norm(x);
    let mut signed: Vec<F> = x.to_vec();
    if x_norm > bound {
        if x_norm > bound * (F::one() + norm_slack::<F>()) {
            return Err(Error::NormExceedsBound {
                norm: x_norm.as_f64(),
                bound: bound.as_f64(),
            });
        }
        let s = bound / x_norm;
        for v in signed.iter_mut() {
            *v *= s;
        }
        x_norm = bound;
    }

    // X̃ = (2b − 1) x with b ~ Bernoulli(1/2 + ‖x‖/(2R)).
    let keep_sign = uniform01(rng) < 0.5 + (x_norm / bound).as_f64() / 2.0;
    if !keep_sign {
        for v in signed.iter_mut() {
            *v = -*v;
        }
    }
    let aligned = uniform01(rng) < params.aligned_probability();

    let mut z: Vec<F> = unit_sphere(params.d, rng);
    if x_norm > F::zero() {
        loop {
            let side = dot(&z, &signed);
            if aligned {
                if side > F::zero() {
                    break;
                }
                if side < F::zero() {
                    z.iter_mut().for_each(|v| *v = -*v);
                    break;
                }
            } else {
                // The equator belongs to the closed halfspace zᵀX̃ ≤ 0.
                if side > F::zero() {
                    z.iter_mut().for_each(|v| *v = -*v);
                }
                break;
            }
            z = unit_sphere(params.d, rng);
        }
    }
    // Renormalize so the norm identity holds to rounding.
    let s = params.radius / norm(&z);
    for v in z.iter_mut() {
        *v *= s;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn budget(e: f64, d: f64) -> PrivacyBudget<f64> {
        PrivacyBudget::new(e, d).unwrap()
    }

    #[test]
    fn budget_validation() {
        assert!(PrivacyBudget::new(0.0, 0.1).is_err());
        assert!(PrivacyBudget::new(-1.0, 0.1).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(1.0, -0.1).is_err());
        assert!(PrivacyBudget::<f64>::pure(1.0).is_ok());
    }

    #[test]
    fn sigma_examples() {
        // 2·sqrt(2 ln 12.5), evaluated with mpmath at 40 digits.
        let s = gaussian_sigma(&budget(1.0, 0.1), 2.0).unwrap();
        assert_relative_eq!(s, 4.495_089_448_994_985_6, max_relative = 1e-14);
        assert_eq!(gaussian_sigma(&budget(1.0, 0.1), 0.0).unwrap(), 0.0);
        let half = gaussian_sigma(&budget(2.0, 0.1), 2.0).unwrap();
        assert_relative_eq!(half, s / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn sigma_rejects_zero_delta() {
        assert_eq!(
            gaussian_sigma(&budget(1.0, 0.0), 2.0),
            Err(Error::GaussianRequiresDelta)
        );
        assert!(gaussian_sigma(&budget(1.0, 0.1), -1.0).is_err());
    }

    #[test]
    fn radius_examples() {
        let r = ball_radius(3f64.ln(), 1, 1.0).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 1e-14);
        let e = std::f64::consts::E;
        let r3 = ball_radius(1.0, 3, 1.0).unwrap();
        assert_relative_eq!(r3, 2.0 * (e + 1.0) / (e - 1.0), max_relative = 1e-14);
        assert_relative_eq!(ball_radius(1.0, 3, 5.0).unwrap(), 5.0 * r3, max_relative = 1e-15);
        assert!(ball_radius(0.0, 3, 1.0).is_err());
        assert!(ball_radius(1.0, 0, 1.0).is_err());
        assert!(ball_radius(1.0, 3, 0.0).is_err());
    }

    #[test]
    fn radius_is_finite_in_high_dimension() {
        let r: f64 = ball_radius(50.0, 10_000, 1.0).unwrap();
        assert!(r.is_finite() && r > 1.0);
    }

    #[test]
    fn perturb_vector_zero_sigma_is_identity() {
        let mut rng = rng_from_seed(1);
        assert_eq!(perturb_vector(&[1.0, 2.0], 0.0, &mut rng).unwrap(), vec![1.0, 2.0]);
        assert!(perturb_vector(&[f64::NAN], 1.0, &mut rng).is_err());
        assert!(perturb_vector(&[1.0], -1.0, &mut rng).is_err());
    }

    #[test]
    fn perturb_vector_moments() {
        let n = 100_000;
        let mut rng = rng_from_seed(2);
        let (mut m, mut s) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let z = perturb_vector(&[0.0, 0.0], 1.0, &mut rng).unwrap();
            for k in 0..2 {
                m[k] += z[k];
            }
        }
        for v in m {
            assert!((v / n as f64).abs() < 5.0 / (n as f64).sqrt());
        }
        let mut rng = rng_from_seed(3);
        let mut mean = [0.0; 2];
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| perturb_vector(&[3.0, -1.0], 2.0, &mut rng).unwrap())
            .collect();
        for z in &draws {
            for k in 0..2 {
                mean[k] += z[k] / n as f64;
            }
        }
        for z in &draws {
            for k in 0..2 {
                s[k] += (z[k] - mean[k]).powi(2) / (n - 1) as f64;
            }
        }
        for v in s {
            assert!((v - 4.0).abs() < 0.05 * 4.0, "variance {v}");
        }
    }

    #[test]
    fn perturb_matrix_examples() {
        let mut rng = rng_from_seed(4);
        let eye = SymMatrix::<f64>::identity(3);
        assert_eq!(perturb_symmetric_matrix(&eye, 0.0, &mut rng).unwrap(), eye);
        let z = perturb_symmetric_matrix(&SymMatrix::<f64>::zeros(2), 1.0, &mut rng).unwrap();
        assert_eq!(z.get(0, 1).to_bits(), z.get(1, 0).to_bits());
        assert!(perturb_symmetric_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]], 1.0, &mut rng).is_err());
        assert!(perturb_symmetric_rows(&[vec![0.0, 1.0]], 1.0, &mut rng).is_err());
    }

    #[test]
    fn perturb_matrix_entry_means() {
        let n = 100_000;
        let mut rng = rng_from_seed(5);
        let zero = SymMatrix::<f64>::zeros(3);
        let mut acc = vec![0.0; 9];
        for _ in 0..n {
            let w = perturb_symmetric_matrix(&zero, 1.0, &mut rng).unwrap();
            for (a, v) in acc.iter_mut().zip(w.as_slice()) {
                *a += v;
            }
        }
        for a in acc {
            assert!((a / n as f64).abs() < 5.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn ball_rejects_out_of_bound_input() {
        let mech = BallMechanism::new(1.0, 2, 1.0).unwrap();
        let mut rng = rng_from_seed(6);
        assert!(matches!(
            mech.privatize(&[1.0, 0.01], &mut rng),
            Err(Error::NormExceedsBound { .. })
        ));
        assert!(matches!(
            mech.privatize(&[1.0], &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
        // Within slack: accepted.
        let z = mech.privatize(&[1.0 + 1e-12, 0.0], &mut rng).unwrap();
        assert_relative_eq!(norm(&z), mech.radius(), max_relative = 1e-12);
    }

    #[test]
    fn ball_zero_input_is_centered() {
        let mech = BallMechanism::new(1.0, 4, 1.0).unwrap();
        let mut rng = rng_from_seed(7);
        let n = 200_000;
        let mut mean = vec![0.0; 4];
        for _ in 0..n {
            let z = mech.privatize(&[0.0; 4], &mut rng).unwrap();
            for (m, v) in mean.iter_mut().zip(&z) {
                *m += v / n as f64;
            }
        }
        let tol = 5.0 * mech.radius() / (n as f64).sqrt();
        for m in mean {
            assert!(m.abs() < tol);
        }
    }

    #[test]
    fn ball_branch_frequency() {
        let mech = BallMechanism::new(1.0, 3, 1.0).unwrap();
        let x = [1.0, 0.0, 0.0];
        let mut rng = rng_from_seed(8);
        let n = 200_000;
        // ‖x‖ = R so X̃ = x almost surely.
        let hits = (0..n)
            .filter(|_| mech.privatize(&x, &mut rng).unwrap()[0] > 0.0)
            .count();
        let freq = hits as f64 / n as f64;
        let e = std::f64::consts::E;
        assert!((freq - e / (1.0 + e)).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn ball_is_deterministic_per_seed() {
        let mech = BallMechanism::new(0.7, 5, 2.0).unwrap();
        let x = [0.3, -0.2, 0.1, 0.0, 0.5];
        let a = mech.privatize(&x, &mut rng_from_seed(11)).unwrap();
        let b = mech.privatize(&x, &mut rng_from_seed(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ball_works_in_f32() {
        let mech = BallMechanism::<f32>::new(1.0, 3, 1.0).unwrap();
        let z = mech.privatize(&[0.5, 0.5, 0.0], &mut rng_from_seed(12)).unwrap();
        assert!((norm(&z) - mech.radius()).abs() < 1e-5 * mech.radius());
    }

    proptest! {
        #[test]
        fn composition_adds(e1 in 0.01f64..10.0, d1 in 0.0f64..0.4, e2 in 0.01f64..10.0, d2 in 0.0f64..0.4) {
            let c = budget(e1, d1).compose(&budget(e2, d2));
            prop_assert_eq!(c.epsilon(), e1 + e2);
            prop_assert_eq!(c.delta(), d1 + d2);
        }

        #[test]
        fn sigma_is_homogeneous(eps in 0.05f64..10.0, delta in 1e-6f64..0.9, s in 0.01f64..10.0, c in 0.1f64..10.0) {
            let base = gaussian_sigma(&budget(eps, delta), s).unwrap();
            let scaled_s = gaussian_sigma(&budget(eps, delta), c * s).unwrap();
            let scaled_e = gaussian_sigma(&budget(c * eps, delta), s).unwrap();
            prop_assert!((scaled_s - c * base).abs() <= 1e-12 * c * base);
            prop_assert!((scaled_e - base / c).abs() <= 1e-12 * base / c);
        }

        #[test]
        fn radius_dominates_bound(eps in 0.01f64..30.0, d in 1usize..200, r in 0.01f64..100.0) {
            prop_assert!(ball_radius(eps, d, r).unwrap() >= r);
        }

        #[test]
        fn matrix_noise_is_bitwise_symmetric(n in 1usize..8, sigma in 0.0f64..5.0, seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let out = perturb_symmetric_matrix(&SymMatrix::identity(n), sigma, &mut rng).unwrap();
            prop_assert!(out.is_exactly_symmetric());
        }

        #[test]
        fn ball_output_norm_is_radius(
            d in 1usize..12, eps in 0.1f64..8.0, frac in 0.0f64..=1.0, seed in any::<u64>()
        ) {
            let mut rng = rng_from_seed(seed);
            let dir: Vec<f64> = unit_sphere(d, &mut rng);
            let x: Vec<f64> = dir.iter().map(|v| v * frac * 2.0).collect();
            let mech = BallMechanism::new(eps, d, 2.0).unwrap();
            let z = mech.privatize(&x, &mut rng).unwrap();
            prop_assert!((norm(&z) - mech.radius()).abs() <= 1e-9 * mech.radius());
        }
    }
}
