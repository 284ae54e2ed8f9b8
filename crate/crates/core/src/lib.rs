//! Contextual bandits under local differential privacy.
//!
//! Users privatize their `(context, reward)` pair before it leaves the
//! device; the server only ever sees the private message. Two
//! mechanism/estimator pairs are provided:
//!
//! * Gaussian mechanism + regularized OLS, `(ε, δ)`-LDP, linear rewards.
//! * ℓ2-ball mechanism + SGD on the GLM loss, ε-LDP, linear or logistic
//!   rewards.
//!
//! Both plug into a greedy single-parameter algorithm ([`single`]) and a
//! multi-parameter algorithm with warm-up and arm elimination ([`multi`]).
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below fix the common case.
//!
//! ```
//! use ldp_bandit_core::{presets, run_single, EstimatorKind, PrivacyBudgetF64, SingleAlgoConfigF64};
//!
//! let env = presets::single_sphere::<f64>(3, 5, 0.1).unwrap();
//! let budget = PrivacyBudgetF64::new(1.0, 0.1).unwrap();
//! let config = SingleAlgoConfigF64::new(EstimatorKind::PrivateOls, budget, 1000);
//! let run = run_single(&config, &env, 42).unwrap();
//! assert_eq!(run.records.len(), 1000);
//! ```

pub mod envs;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod link;
pub mod multi;
pub mod privacy;
pub mod rng;
pub mod scalar;
pub mod single;
pub mod trace;

pub use envs::{presets, ContextLaw, EnvSpec, FeatureSource, Mode, NoiseKind, PricingGrid, PricingObjective, RoundSample};
pub use error::{Error, Result};
pub use estimators::{ArmEstimator, ObservationBuilder, OlsObservation, OlsState, PrivateObservation, SgdState};
pub use link::{LinkFunction, LinkKind};
pub use multi::{run_multi, MultiAlgoConfig, MultiBandit, MultiRun, Phase, WarmupStepRule};
pub use privacy::{BallMechanism, PrivacyBudget};
pub use scalar::Scalar;
pub use single::{run_single, EstimatorKind, RunRngs, SingleAlgoConfig, SingleBandit, SingleRun};
pub use trace::{RegretTrace, RoundRecord, TraceMeta};

pub type PrivacyBudgetF64 = PrivacyBudget<f64>;
pub type BallMechanismF64 = BallMechanism<f64>;
pub type LinkFunctionF64 = LinkFunction<f64>;
pub type OlsStateF64 = OlsState<f64>;
pub type SgdStateF64 = SgdState<f64>;
pub type ArmEstimatorF64 = ArmEstimator<f64>;
pub type EnvSpecF64 = EnvSpec<f64>;
pub type SingleAlgoConfigF64 = SingleAlgoConfig<f64>;
pub type MultiAlgoConfigF64 = MultiAlgoConfig<f64>;
pub type SingleRunF64 = SingleRun<f64>;
pub type MultiRunF64 = MultiRun<f64>;
pub type RoundRecordF64 = RoundRecord<f64>;

pub type PrivacyBudgetF32 = PrivacyBudget<f32>;
pub type EnvSpecF32 = EnvSpec<f32>;
pub type SingleAlgoConfigF32 = SingleAlgoConfig<f32>;
pub type MultiAlgoConfigF32 = MultiAlgoConfig<f32>;
