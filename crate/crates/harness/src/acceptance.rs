//! Acceptance checks.
//!
//! Each criterion is a function returning a [`CriterionOutcome`]; suites
//! group them for `ldp-bandit check --suite <name>`. Reference values for
//! the closed-form checks were evaluated once with mpmath at 40 digits and
//! are frozen here.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use ldp_bandit_core::estimators::{glm_gradient, make_ols_observation, ObservationBuilder, PrivateObservation};
use ldp_bandit_core::linalg::{dot, norm};
use ldp_bandit_core::multi::synthetic_observations;
use ldp_bandit_core::privacy::{ball_radius, gaussian_sigma};
use ldp_bandit_core::rng::{mix_seed, rng_from_seed, unit_sphere};
use ldp_bandit_core::{BallMechanism, LinkFunction, LinkKind, OlsState, PrivacyBudget, SgdState};

use crate::config::{parse_config, ExperimentConfig};
use crate::presets::build_env;
use crate::report::{growth_metric, write_traces};
use crate::runner::{execute, replication_seed, run_experiment, AlgoRun};
use crate::stats::{ks_two_sample, mean_std};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

type Check = fn() -> anyhow::Result<(bool, String)>;

struct Criterion {
    id: u8,
    name: &'static str,
    run: Check,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "ball mechanism identities", run: mechanism_identities },
    Criterion { id: 2, name: "Gaussian noise calibration", run: noise_calibration },
    Criterion { id: 3, name: "estimator oracle equivalence", run: oracle_equivalence },
    Criterion { id: 4, name: "GLM gradient check", run: gradient_check },
    Criterion { id: 5, name: "single-parameter regret growth", run: single_growth },
    Criterion { id: 6, name: "privacy-cost ordering", run: privacy_ordering },
    Criterion { id: 7, name: "multi-parameter margin flattening", run: multi_flattening },
    Criterion { id: 8, name: "synthetic-update opacity", run: synthetic_opacity },
    Criterion { id: 9, name: "determinism and parallel equivalence", run: determinism },
    Criterion { id: 10, name: "performance", run: performance },
];

/// Suite names accepted by [`suite_ids`].
pub const SUITES: [&str; 4] = ["all", "quick", "statistical", "perf"];

/// Criterion ids of a suite; a bare number selects one criterion.
pub fn suite_ids(suite: &str) -> Option<Vec<u8>> {
    match suite {
        "all" => Some((1..=10).collect()),
        "quick" => Some(vec![1, 2, 3, 4, 8, 9]),
        "statistical" => Some(vec![5, 6, 7]),
        "perf" => Some(vec![10]),
        other => other.parse::<u8>().ok().filter(|id| (1..=10).contains(id)).map(|id| vec![id]),
    }
}

pub fn run_criterion(id: u8) -> CriterionOutcome {
    let c = CRITERIA.iter().find(|c| c.id == id).expect("criterion id in 1..=10");
    let start = Instant::now();
    let (passed, detail) = match (c.run)() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}")),
    };
    CriterionOutcome {
        id: c.id,
        name: c.name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Runs `ids` in order, calling `report` after each criterion.
pub fn run_suite(ids: &[u8], mut report: impl FnMut(&CriterionOutcome)) -> Vec<CriterionOutcome> {
    ids.iter()
        .map(|&id| {
            let o = run_criterion(id);
            report(&o);
            o
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Output norms, unbiasedness and halfspace frequency of the ℓ2-ball
/// mechanism.
pub fn mechanism_identities() -> anyhow::Result<(bool, String)> {
    const N: usize = 200_000;
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_mean = 0.0f64;
    let mut worst_freq = 0.0f64;
    let mut rng = rng_from_seed(0xB411);
    for d in [2usize, 5, 20] {
        for eps in [0.5, 1.0, 5.0] {
            let mech = BallMechanism::new(eps, d, 1.0)?;
            let r = mech.radius();
            let p = mech.aligned_probability();
            for x_norm in [0.0, 0.5, 1.0] {
                let dir: Vec<f64> = unit_sphere(d, &mut rng);
                let x: Vec<f64> = dir.iter().map(|v| v * x_norm).collect();
                let mut mean = vec![0.0; d];
                let mut aligned = 0usize;
                let mut worst_norm = 0.0f64;
                for _ in 0..N {
                    let z = mech.privatize(&x, &mut rng)?;
                    worst_norm = worst_norm.max(rel_err(norm(&z), r));
                    if dot(&z, &dir) > 0.0 {
                        aligned += 1;
                    }
                    for (m, v) in mean.iter_mut().zip(&z) {
                        *m += v;
                    }
                }
                let tol = 5.0 * r / (N as f64).sqrt();
                let mean_dev = mean
                    .iter()
                    .zip(&x)
                    .map(|(m, xi)| (m / N as f64 - xi).abs())
                    .fold(0.0, f64::max);
                worst_mean = worst_mean.max(mean_dev / tol);
                let case = format!("d={d} ε={eps} ‖x‖={x_norm}");
                if worst_norm > 1e-9 {
                    failures.push(format!("{case}: norm rel err {worst_norm:.2e}"));
                }
                if mean_dev > tol {
                    failures.push(format!("{case}: mean off by {mean_dev:.3e} > {tol:.3e}"));
                }
                if x_norm > 0.0 {
                    // The sign flip keeps the direction of x with
                    // probability q = 1/2 + ‖x‖/2R; the halfspace draw then
                    // agrees with the kept direction with probability p.
                    let q = 0.5 + x_norm / 2.0;
                    let expected = q * p + (1.0 - q) * (1.0 - p);
                    let freq = aligned as f64 / N as f64;
                    worst_freq = worst_freq.max((freq - expected).abs());
                    if (freq - expected).abs() > 0.01 {
                        failures.push(format!("{case}: aligned frequency {freq:.4} vs {expected:.4}"));
                    }
                }
            }
        }
    }
    for (eps, d, expected) in RADIUS_TABLE {
        let r = ball_radius(eps, d, 1.0)?;
        if rel_err(r, expected) > 1e-12 {
            failures.push(format!("radius ε={eps} d={d}: {r} vs {expected}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(30) {
        failures.push(format!("runtime {:.1}s > 30s", elapsed.as_secs_f64()));
    }
    let detail = format!(
        "27 cases × {N} draws; worst mean deviation {:.2} of tolerance, worst halfspace frequency error {worst_freq:.4}; {} radius references{}",
        worst_mean,
        RADIUS_TABLE.len(),
        summarize(&failures)
    );
    Ok((failures.is_empty(), detail))
}

/// `(ε, d, r_{ε,d})` at `R = 1`.
const RADIUS_TABLE: [(f64, usize, f64); 18] = [
    (0.5, 1, 4.082988165073596568262207),
    (0.5, 2, 6.413542812044640497810982),
    (0.5, 3, 8.165976330147193136524414),
    (0.5, 5, 10.88796844019625751536589),
    (0.5, 20, 22.60094672741164397837764),
    (0.5, 100, 51.04489813606549099427352),
    (1.0, 1, 2.163953413738652848770004),
    (1.0, 2, 3.399130073655953071792289),
    (1.0, 3, 4.327906827477305697540008),
    (1.0, 5, 5.770542436636407596720011),
    (1.0, 20, 11.9783339669872143885051),
    (1.0, 100, 27.05341703421020775809038),
    (5.0, 1, 1.01356730981260846219204),
    (5.0, 2, 1.592107807213030348821194),
    (5.0, 3, 2.02713461962521692438408),
    (5.0, 5, 2.702846159500289232512106),
    (5.0, 20, 5.610494042004597380195781),
    (5.0, 100, 12.67146462142585108887626),
];

/// `(ε, δ, sensitivity, σ)`.
const SIGMA_TABLE: [(f64, f64, f64, f64); 20] = [
    (0.1, 0.1, 2.0, 44.95089448994985630070636),
    (0.1, 0.01, 2.0, 62.15022920184479013183124),
    (0.1, 1e-5, 2.0, 96.89610525210778842517284),
    (0.1, 0.5, 1.5, 20.30593089083506605571556),
    (0.5, 0.1, 2.0, 8.990178897989971260141272),
    (0.5, 0.01, 2.0, 12.43004584036895802636625),
    (0.5, 1e-5, 2.0, 19.37922105042155768503457),
    (0.5, 0.5, 1.5, 4.061186178167013211143111),
    (1.0, 0.1, 2.0, 4.495089448994985630070636),
    (1.0, 0.01, 2.0, 6.215022920184479013183124),
    (1.0, 1e-5, 2.0, 9.689610525210778842517284),
    (1.0, 0.5, 1.5, 2.030593089083506605571556),
    (2.0, 0.1, 2.0, 2.247544724497492815035318),
    (2.0, 0.01, 2.0, 3.107511460092239506591562),
    (2.0, 1e-5, 2.0, 4.844805262605389421258642),
    (2.0, 0.5, 1.5, 1.015296544541753302785778),
    (5.0, 0.1, 2.0, 0.8990178897989971260141272),
    (5.0, 0.01, 2.0, 1.243004584036895802636625),
    (5.0, 1e-5, 2.0, 1.937922105042155768503457),
    (5.0, 0.5, 1.5, 0.4061186178167013211143111),
];

pub fn noise_calibration() -> anyhow::Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (eps, delta, sens, expected) in SIGMA_TABLE {
        let s = gaussian_sigma(&PrivacyBudget::new(eps, delta)?, sens)?;
        let e = rel_err(s, expected);
        worst = worst.max(e);
        if e > 1e-12 {
            failures.push(format!("ε={eps} δ={delta}: {s} vs {expected}"));
        }
    }
    Ok((
        failures.is_empty(),
        format!("{} cases, worst relative error {worst:.2e}{}", SIGMA_TABLE.len(), summarize(&failures)),
    ))
}

/// Noiseless OLS against dense normal equations; noiseless SGD against the
/// hand recursion.
pub fn oracle_equivalence() -> anyhow::Result<(bool, String)> {
    let start = Instant::now();
    let (n, d) = (500, 8);
    let mut rng = rng_from_seed(0x0015);
    let theta: Vec<f64> = unit_sphere(d, &mut rng);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| unit_sphere(d, &mut rng)).collect();
    let rs: Vec<f64> = xs
        .iter()
        .map(|x| (dot(x, &theta) + 0.1 * (rng.random::<f64>() - 0.5)).clamp(-1.0, 1.0))
        .collect();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for c_tilde in [0.0, 1.5] {
        let mut state = OlsState::new(d, c_tilde)?;
        for (x, &r) in xs.iter().zip(&rs) {
            state.ingest(&make_ols_observation(x, r, 0.0, 1.0, 1.0, &mut rng)?)?;
        }
        let est = state.point_estimate()?.theta;
        let xm = DMatrix::from_fn(n, d, |i, j| xs[i][j]);
        let a = xm.transpose() * &xm + DMatrix::identity(d, d) * (c_tilde * (n as f64).sqrt());
        let reference = a
            .lu()
            .solve(&(xm.transpose() * DVector::from_column_slice(&rs)))
            .ok_or_else(|| anyhow::anyhow!("reference solve failed"))?;
        let err = est.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / reference.norm();
        worst = worst.max(err);
        if err > 1e-9 {
            failures.push(format!("OLS c̃={c_tilde}: relative error {err:.2e}"));
        }
    }

    let mut sgd = SgdState::new(1, 3.0, false)?;
    let mut hand = 0.0f64;
    for t in 1..=1000 {
        let z: f64 = rng.random::<f64>() - 0.5;
        let eta = 3.0 / t as f64;
        sgd.step(&[z], eta)?;
        hand -= eta * z;
        if sgd.theta()[0] != hand {
            failures.push(format!("SGD recursion differs at step {t}"));
            break;
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        failures.push(format!("runtime {:.1}s > 5s", elapsed.as_secs_f64()));
    }
    Ok((
        failures.is_empty(),
        format!(
            "OLS on {n} observations: worst relative error {worst:.2e}; SGD recursion exact over 1000 steps{}",
            summarize(&failures)
        ),
    ))
}

/// GLM loss whose gradient is `(μ(xᵀθ) − r) x`.
fn glm_loss(kind: LinkKind, x: &[f64], r: f64, theta: &[f64]) -> f64 {
    let s = dot(x, theta);
    match kind {
        LinkKind::Identity => 0.5 * s * s - r * s,
        LinkKind::Logistic => {
            // ln(1 + e^s), stable for either sign.
            s.max(0.0) + (-s.abs()).exp().ln_1p() - r * s
        }
    }
}

pub fn gradient_check() -> anyhow::Result<(bool, String)> {
    let start = Instant::now();
    let d = 6;
    let h = 1e-5;
    let mut rng = rng_from_seed(0x6AD);
    let mut worst = 0.0f64;
    for link in [LinkFunction::identity(), LinkFunction::logistic(1.0)?] {
        for _ in 0..10 {
            let x: Vec<f64> = unit_sphere(d, &mut rng);
            let theta: Vec<f64> = unit_sphere::<f64, _>(d, &mut rng)
                .into_iter()
                .map(|v| v * rng.random::<f64>())
                .collect();
            let r = match link.kind() {
                LinkKind::Identity => rng.random_range(-1.3..1.3),
                LinkKind::Logistic => f64::from(u8::from(rng.random_bool(0.5))),
            };
            let g = glm_gradient(&x, r, &theta, &link, 1.3);
            let fd: Vec<f64> = (0..d)
                .map(|k| {
                    let mut p = theta.clone();
                    let mut m = theta.clone();
                    p[k] += h;
                    m[k] -= h;
                    (glm_loss(link.kind(), &x, r, &p) - glm_loss(link.kind(), &x, r, &m)) / (2.0 * h)
                })
                .collect();
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&diff) / norm(&g).max(1e-12));
        }
    }
    let mut passed = worst <= 1e-6;
    let elapsed = start.elapsed();
    let mut detail = format!("2 links × 10 points, worst relative error {worst:.2e}");
    if elapsed > Duration::from_secs(1) {
        passed = false;
        detail.push_str(&format!("; runtime {:.1}s > 1s", elapsed.as_secs_f64()));
    }
    Ok((passed, detail))
}

const HORIZON: usize = 100_000;

fn experiment(text: &str) -> anyhow::Result<ExperimentConfig> {
    Ok(parse_config(text)?)
}

/// Config of the single-parameter growth benchmark.
pub const SINGLE_GROWTH_CONFIG: &str = r#"
horizon = 100000
replications = 10
base_seed = 0
log_stride = 100

[env]
preset = "single_sphere"
d = 5
k = 10

[[algo]]
kind = "single_ols"
epsilon = 5.0

[[algo]]
kind = "single_sgd"
epsilon = 5.0
project_unit_ball = true
"#;

/// Per-round regret of pulling a uniformly random arm, by Monte Carlo.
pub fn uniform_policy_regret(cfg: &ExperimentConfig, rounds: usize, seed: u64) -> anyhow::Result<f64> {
    let env = build_env(&cfg.env.params())?;
    let mut rng = rng_from_seed(seed);
    let mut total = 0.0;
    for _ in 0..rounds {
        let s = env.draw_round(&mut rng);
        let mean = s.values.iter().sum::<f64>() / s.values.len() as f64;
        total += s.optimal_value - mean;
    }
    Ok(total / rounds as f64)
}

pub fn single_growth() -> anyhow::Result<(bool, String)> {
    let start = Instant::now();
    let cfg = experiment(SINGLE_GROWTH_CONFIG)?;
    let out = run_experiment(&cfg, crate::runner::resolve_parallelism(None))?;
    anyhow::ensure!(out.failures.is_empty(), "{} replications failed", out.failures.len());
    let uniform = uniform_policy_regret(&cfg, 100_000, 0x0F)?;
    let mut passed = true;
    let mut parts = vec![format!("uniform-arm regret {uniform:.4}/round")];
    for algo in &cfg.algos {
        let traces: Vec<_> = out.traces.iter().filter(|t| t.meta.algo == algo.label()).collect();
        let growth: Vec<f64> = traces.iter().map(|t| growth_metric(t, HORIZON)).collect::<Result<_, _>>()?;
        let totals: Vec<f64> = traces.iter().map(|t| t.total()).collect();
        let (g, g_sd) = mean_std(&growth);
        let (m, _) = mean_std(&totals);
        let per_round = m / HORIZON as f64;
        let ok_growth = (1.2..=1.7).contains(&g);
        let ok_regret = per_round < 0.1 * uniform;
        passed &= ok_growth && ok_regret;
        parts.push(format!(
            "{}: growth {g:.3} (sd {g_sd:.3}, {}), regret {per_round:.4}/round ({})",
            algo.label(),
            if ok_growth { "in [1.2, 1.7]" } else { "outside [1.2, 1.7]" },
            if ok_regret { "< 10% of uniform" } else { "≥ 10% of uniform" },
        ));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        passed = false;
        parts.push(format!("runtime {:.0}s > 600s", elapsed.as_secs_f64()));
    }
    Ok((passed, parts.join("; ")))
}

pub const PRIVACY_ORDERING_CONFIG: &str = r#"
horizon = 100000
replications = 10
base_seed = 0
log_stride = 100

[env]
preset = "single_sphere"
d = 5
k = 10

[[algo]]
kind = "single_ols"
epsilon = 1.0

[[algo]]
kind = "single_ols"
epsilon = 5.0

[[algo]]
kind = "single_ols"
label = "single_ols_noiseless"
epsilon = 5.0
noiseless = true
"#;

pub fn privacy_ordering() -> anyhow::Result<(bool, String)> {
    let cfg = experiment(PRIVACY_ORDERING_CONFIG)?;
    let out = run_experiment(&cfg, crate::runner::resolve_parallelism(None))?;
    anyhow::ensure!(out.failures.is_empty(), "{} replications failed", out.failures.len());
    let stats: Vec<(String, f64, f64)> = cfg
        .algos
        .iter()
        .map(|a| {
            let totals: Vec<f64> = out
                .traces
                .iter()
                .filter(|t| t.meta.algo == a.label() && t.meta.epsilon == a.epsilon)
                .map(|t| t.total())
                .collect();
            let (m, s) = mean_std(&totals);
            let name = if a.noiseless() { "noiseless".to_string() } else { format!("ε={}", a.epsilon) };
            (name, m, s)
        })
        .collect();
    let mut passed = true;
    let mut parts: Vec<String> = stats.iter().map(|(n, m, s)| format!("{n}: {m:.1} ± {s:.1}")).collect();
    for w in stats.windows(2) {
        let pooled = ((w[0].2.powi(2) + w[1].2.powi(2)) / 2.0).sqrt();
        let gap = w[0].1 - w[1].1;
        let ok = gap >= -pooled;
        passed &= ok;
        parts.push(format!("gap {} − {} = {gap:.1} (pooled std {pooled:.1}){}", w[0].0, w[1].0, if ok { "" } else { " too negative" }));
    }
    Ok((passed, parts.join("; ")))
}

/// Config of the multi-parameter flattening benchmark. The warm-up length
/// is set explicitly: the default `s0` formula leaves the warm-up
/// estimates dominated by the OLS shift at this horizon.
pub const MULTI_FLATTENING_CONFIG: &str = r#"
horizon = 100000
replications = 10
base_seed = 0
log_stride = 100

[env]
preset = "multi_separated"
d = 3

[[algo]]
kind = "multi_ols"
epsilon = 5.0
s0 = 2000
"#;

pub fn multi_flattening() -> anyhow::Result<(bool, String)> {
    let cfg = experiment(MULTI_FLATTENING_CONFIG)?;
    let env = build_env(&cfg.env.params())?;
    let sub = env.known_suboptimal()[0];
    let algo = &cfg.algos[0];
    let runs: Vec<anyhow::Result<(f64, usize)>> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(crate::runner::resolve_parallelism(None))
            .build()?;
        pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    let seed = replication_seed(cfg.base_seed, rep);
                    let AlgoRun::Multi(run) = execute(algo, &env, cfg.horizon, seed)? else {
                        anyhow::bail!("expected a multi-parameter run");
                    };
                    let total = run.total_regret();
                    let half = run.records[cfg.horizon / 2 - 1].cum_regret;
                    let g = if total == 0.0 && half == 0.0 { 1.0 } else { total / half };
                    Ok((g, run.main_phase_pulls(env.arms())[sub]))
                })
                .collect()
        })
    };
    let runs: Vec<(f64, usize)> = runs.into_iter().collect::<anyhow::Result<_>>()?;
    let growth: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (g, _) = mean_std(&growth);
    let clean = runs.iter().filter(|r| r.1 == 0).count();
    let passed = g < 1.35 && clean * 10 >= 9 * runs.len();
    Ok((
        passed,
        format!(
            "s0 = {}, mean growth {g:.3} (< 1.35: {}); sub-optimal arm unplayed after warm-up in {clean}/{} seeds (pulls {:?})",
            algo.s0.unwrap_or(0),
            g < 1.35,
            runs.len(),
            runs.iter().map(|r| r.1).collect::<Vec<_>>()
        ),
    ))
}

/// The message for an arm that was not pulled must not depend on the pulled
/// arm or on the user's data.
pub fn synthetic_opacity() -> anyhow::Result<(bool, String)> {
    const N: usize = 10_000;
    let (d, k) = (4, 3);
    let half = PrivacyBudget::new(1.0, 0.1)?.split(2);
    let builders = [
        ("OLS", ObservationBuilder::ols(Some(&half), 1.0, 1.3)?),
        ("SGD", ObservationBuilder::sgd(LinkFunction::identity(), Some(half.epsilon()), d, 1.0, 1.3)?),
    ];
    let first_coord = |o: &PrivateObservation<f64>| match o {
        PrivateObservation::Ols(o) => o.vector()[0],
        PrivateObservation::Sgd(z) => z[0],
    };
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, builder) in &builders {
        let mut data = rng_from_seed(0x5EED);
        let thetas: Vec<Vec<f64>> = (0..k).map(|_| unit_sphere::<f64, _>(d, &mut data).iter().map(|v| 0.5 * v).collect()).collect();
        let refs: Vec<&[f64]> = thetas.iter().map(Vec::as_slice).collect();
        let (mut a, mut b) = (Vec::with_capacity(N), Vec::with_capacity(N));
        let mut identical = true;
        for i in 0..N {
            let xa: Vec<f64> = unit_sphere(d, &mut data);
            let xb: Vec<f64> = unit_sphere(d, &mut data);
            let (ra, rb) = (data.random_range(-1.3..1.3), data.random_range(-1.3..1.3));
            let oa = synthetic_observations(&xa, ra, 0, &refs, builder, &mut rng_from_seed(mix_seed(1, i as u64)))?;
            let ob = synthetic_observations(&xb, rb, 1, &refs, builder, &mut rng_from_seed(mix_seed(2, i as u64)))?;
            let same = synthetic_observations(&xb, rb, 1, &refs, builder, &mut rng_from_seed(mix_seed(1, i as u64)))?;
            identical &= same[2] == oa[2];
            a.push(first_coord(&oa[2]));
            b.push(first_coord(&ob[2]));
        }
        let ks = ks_two_sample(&a, &b);
        let ok = ks.p_value > 0.01 && identical;
        passed &= ok;
        parts.push(format!(
            "{name}: KS D = {:.4}, p = {:.3}; same substream gives identical message: {identical}",
            ks.statistic, ks.p_value
        ));
    }
    Ok((passed, parts.join("; ")))
}

const DETERMINISM_SINGLE: &str = r#"
horizon = 3000
replications = 4
base_seed = 7
log_stride = 50

[env]
preset = "single_sphere"

[[algo]]
kind = "single_ols"
epsilon = 1.0

[[algo]]
kind = "single_sgd"
epsilon = 1.0
"#;

const DETERMINISM_MULTI: &str = r#"
horizon = 3000
replications = 4
base_seed = 7
log_stride = 50

[env]
preset = "multi_separated"

[[algo]]
kind = "multi_ols"
epsilon = 1.0
s0 = 100

[[algo]]
kind = "multi_sgd"
epsilon = 1.0
s0 = 100
"#;

/// Regret CSV bytes of a config run at the given parallelism.
pub fn csv_bytes(cfg: &ExperimentConfig, parallelism: usize) -> anyhow::Result<Vec<u8>> {
    let out = run_experiment(cfg, parallelism)?;
    anyhow::ensure!(out.failures.is_empty(), "{} replications failed", out.failures.len());
    let mut buf = Vec::new();
    write_traces(&out.traces, &mut buf)?;
    Ok(buf)
}

pub fn determinism() -> anyhow::Result<(bool, String)> {
    let mut passed = true;
    let mut parts = Vec::new();
    for text in [DETERMINISM_SINGLE, DETERMINISM_MULTI] {
        let cfg = experiment(text)?;
        let reference = csv_bytes(&cfg, 1)?;
        let repeat = csv_bytes(&cfg, 1)?;
        let parallel = csv_bytes(&cfg, 8)?;
        let ok = reference == repeat && reference == parallel;
        passed &= ok;
        parts.push(format!(
            "{}: {} bytes, repeat identical {}, 1 vs 8 threads identical {}",
            cfg.env.preset.as_str(),
            reference.len(),
            reference == repeat,
            reference == parallel
        ));
    }
    Ok((passed, parts.join("; ")))
}

const PERF_SINGLE: &str = r#"
horizon = 100000
replications = 1
[env]
preset = "single_sphere"
d = 10
k = 10
[[algo]]
kind = "single_sgd"
epsilon = 1.0
"#;

const PERF_MULTI: &str = r#"
horizon = 100000
replications = 1
[env]
preset = "multi_random"
d = 10
k = 5
[[algo]]
kind = "multi_ols"
epsilon = 1.0
h = 0.1
"#;

pub fn performance() -> anyhow::Result<(bool, String)> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (text, limit) in [(PERF_SINGLE, 10.0), (PERF_MULTI, 120.0)] {
        let cfg = experiment(text)?;
        let env = build_env(&cfg.env.params())?;
        let start = Instant::now();
        execute(&cfg.algos[0], &env, cfg.horizon, 0)?;
        let secs = start.elapsed().as_secs_f64();
        passed &= secs < limit;
        parts.push(format!(
            "{} d={} K={} T={}: {secs:.2}s (limit {limit:.0}s)",
            cfg.algos[0].label(),
            env.dim(),
            env.arms(),
            cfg.horizon
        ));
    }
    Ok((passed, parts.join("; ")))
}

fn summarize(failures: &[String]) -> String {
    match failures.len() {
        0 => String::new(),
        n => format!("; {n} failures: {}", failures.iter().take(3).cloned().collect::<Vec<_>>().join(", ")),
    }
}
