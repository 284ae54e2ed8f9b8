//! Loan-pricing data: CSV loading, imputed prices and the logit-demand fit.
//!
//! Required columns: `Monthly Payment`, `Term`, `Rate`, `Loan Amount`.
//! An optional `Apply` column (0/1) holds the customer's decision and is
//! needed to fit `θ*`. Every other column is a numeric customer feature
//! (one-hot columns included); `Term` and `Loan Amount` are features too.
//!
//! The imputed price is the net present value of the payments minus the
//! loan, `MP · Σ_{τ=1}^{Term} (1 + Rate)^{−τ} − Loan`. Cells that are empty
//! or `NA` make the row drop out; any other non-numeric cell is an error.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use ldp_bandit_core::envs::MAX_PRICE;
use ldp_bandit_core::rng::rng_from_seed;

pub const MONTHLY_PAYMENT: &str = "Monthly Payment";
pub const TERM: &str = "Term";
pub const RATE: &str = "Rate";
pub const LOAN_AMOUNT: &str = "Loan Amount";
pub const APPLY: &str = "Apply";

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path}: row {row}, column `{column}`: `{value}` is not a number")]
    NonNumeric {
        path: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: row {row}: {reason}")]
    InvalidRow { path: String, row: usize, reason: String },
    #[error("{path}: no usable data rows")]
    Empty { path: String },
    #[error("fitting θ* needs an `{APPLY}` column")]
    NoDecisions,
    #[error("logistic fit did not converge")]
    FitFailed,
}

/// Customer table ready for the pricing environment.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingTable {
    /// Raw feature column names, in file order.
    pub feature_names: Vec<String>,
    /// `(1, min-max scaled features) / √(f + 1)`: unit-norm at most.
    pub features: Vec<Vec<f64>>,
    /// Imputed prices.
    pub prices: Vec<f64>,
    pub apply: Option<Vec<f64>>,
    pub dropped_rows: usize,
}

/// `MP · Σ_{τ=1}^{term} (1 + rate)^{−τ} − loan`.
pub fn npv_price(monthly_payment: f64, term: u32, rate: f64, loan_amount: f64) -> f64 {
    let discount = 1.0 / (1.0 + rate);
    let mut factor = 1.0;
    let mut sum = 0.0;
    for _ in 0..term {
        factor *= discount;
        sum += factor;
    }
    monthly_payment * sum - loan_amount
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

pub fn load_pricing_csv(path: &Path) -> Result<PricingTable, PricingError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|source| PricingError::Io { path: p.clone(), source })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|source| PricingError::Csv { path: p.clone(), source })?
        .clone();
    let find = |name: &'static str| {
        headers.iter().position(|h| h == name).ok_or(PricingError::MissingColumn {
            path: p.clone(),
            column: name,
        })
    };
    let (i_mp, i_term, i_rate, i_loan) = (find(MONTHLY_PAYMENT)?, find(TERM)?, find(RATE)?, find(LOAN_AMOUNT)?);
    let i_apply = headers.iter().position(|h| h == APPLY);
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != i_mp && i != i_rate && Some(i) != i_apply)
        .collect();

    let mut raw = Vec::new();
    let mut prices = Vec::new();
    let mut apply = Vec::new();
    let mut dropped = 0;
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|source| PricingError::Csv { path: p.clone(), source })?;
        if record.iter().any(is_missing) || record.len() < headers.len() {
            dropped += 1;
            continue;
        }
        let values: Vec<f64> = record
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| PricingError::NonNumeric {
                    path: p.clone(),
                    row,
                    column: headers[i].to_string(),
                    value: cell.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        let term = values[i_term];
        if term < 0.0 || term.fract() != 0.0 {
            return Err(PricingError::InvalidRow {
                path: p.clone(),
                row,
                reason: format!("Term must be a nonnegative integer, got {term}"),
            });
        }
        if values[i_rate] <= -1.0 {
            return Err(PricingError::InvalidRow {
                path: p.clone(),
                row,
                reason: "Rate must exceed −1".into(),
            });
        }
        if let Some(i) = i_apply {
            if values[i] != 0.0 && values[i] != 1.0 {
                return Err(PricingError::InvalidRow {
                    path: p.clone(),
                    row,
                    reason: format!("{APPLY} must be 0 or 1"),
                });
            }
            apply.push(values[i]);
        }
        prices.push(npv_price(values[i_mp], term as u32, values[i_rate], values[i_loan]));
        raw.push(feature_cols.iter().map(|&i| values[i]).collect::<Vec<f64>>());
    }
    if raw.is_empty() {
        return Err(PricingError::Empty { path: p });
    }
    if dropped > 0 {
        log::warn!("{p}: dropped {dropped} rows with missing values");
    }
    Ok(PricingTable {
        feature_names: feature_cols.iter().map(|&i| headers[i].to_string()).collect(),
        features: normalize(&raw),
        prices,
        apply: i_apply.map(|_| apply),
        dropped_rows: dropped,
    })
}

/// Min-max scales each column to `[0, 1]`, prepends an intercept and
/// divides by `√(f + 1)`.
fn normalize(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let f = raw[0].len();
    let mut lo = vec![f64::INFINITY; f];
    let mut hi = vec![f64::NEG_INFINITY; f];
    for r in raw {
        for j in 0..f {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let scale = 1.0 / ((f + 1) as f64).sqrt();
    raw.iter()
        .map(|r| {
            std::iter::once(scale)
                .chain((0..f).map(|j| {
                    let span = hi[j] - lo[j];
                    let v = if span > 0.0 { (r[j] - lo[j]) / span } else { 0.0 };
                    v * scale
                }))
                .collect()
        })
        .collect()
}

/// Logistic regression of `Apply` on `(x, (p/25000) x)` by Newton's method
/// with a small ridge, rescaled onto the unit ball if needed.
pub fn fit_theta(table: &PricingTable) -> Result<Vec<f64>, PricingError> {
    let apply = table.apply.as_ref().ok_or(PricingError::NoDecisions)?;
    let n = table.features.len();
    let f = table.features[0].len();
    let dim = 2 * f;
    let design = DMatrix::from_fn(n, dim, |i, j| {
        let x = &table.features[i];
        if j < f {
            x[j]
        } else {
            x[j - f] * table.prices[i].clamp(0.0, MAX_PRICE) / MAX_PRICE
        }
    });
    let y = DVector::from_column_slice(apply);
    let ridge = 1e-6 * n as f64;
    let mut theta = DVector::zeros(dim);
    for _ in 0..100 {
        let eta = &design * &theta;
        let mu = eta.map(logistic);
        let w = mu.map(|m| m * (1.0 - m));
        let grad = design.transpose() * (&mu - &y) + &theta * ridge;
        let mut hess = DMatrix::identity(dim, dim) * ridge;
        for i in 0..n {
            let row = design.row(i);
            hess += row.transpose() * row * w[i];
        }
        let step = hess.cholesky().ok_or(PricingError::FitFailed)?.solve(&grad);
        theta -= &step;
        if step.norm() < 1e-10 * (1.0 + theta.norm()) {
            let norm = theta.norm();
            if norm > 1.0 {
                log::info!("fitted θ* has norm {norm:.3}; rescaled onto the unit ball");
                theta /= norm;
            }
            return Ok(theta.iter().copied().collect());
        }
    }
    Err(PricingError::FitFailed)
}

fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Writes `rows` synthetic loan applications in the loader's schema.
///
/// Payments follow a standard annuity at the customer's annual rate; the
/// `Rate` column is the monthly discount rate used for pricing, so the
/// imputed price is the lender's margin.
pub fn synth_pricing(rows: usize, seed: u64, out: &mut impl Write) -> std::io::Result<()> {
    let mut rng = rng_from_seed(seed);
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record([
        "FICO",
        TERM,
        LOAN_AMOUNT,
        "Prime Rate",
        "Competitor Rate",
        "Car New",
        "Car Used",
        RATE,
        MONTHLY_PAYMENT,
        APPLY,
    ])?;
    for _ in 0..rows {
        let fico: f64 = rng.random_range(600..=850) as f64;
        let term = [36u32, 48, 60, 72][rng.random_range(0..4)];
        let loan: f64 = (rng.random_range(5_000.0..40_000.0f64) / 100.0).round() * 100.0;
        let prime: f64 = rng.random_range(0.02..0.05);
        let competitor = prime + rng.random_range(0.01..0.04);
        let new_car = rng.random_bool(0.5);
        let apr = prime + rng.random_range(0.01..0.06) + (850.0 - fico) / 250.0 * 0.03;
        let i = apr / 12.0;
        let payment = loan * i / (1.0 - (1.0 + i).powi(-(term as i32)));
        let discount = prime / 12.0;
        let price = npv_price(payment, term, discount, loan);
        let v = 1.0 + 2.0 * (fico - 725.0) / 125.0 - 6.0 * price / MAX_PRICE + 20.0 * (competitor - apr);
        let accept = rng.random_bool(logistic(v));
        w.write_record([
            format!("{fico}"),
            format!("{term}"),
            format!("{loan}"),
            format!("{prime:.5}"),
            format!("{competitor:.5}"),
            format!("{}", u8::from(new_car)),
            format!("{}", u8::from(!new_car)),
            format!("{discount:.7}"),
            format!("{payment:.2}"),
            format!("{}", u8::from(accept)),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npv_examples() {
        assert_eq!(npv_price(100.0, 2, 0.0, 50.0), 150.0);
        let p = npv_price(100.0, 1, 0.05, 90.0);
        // 100/1.05 − 90
        assert!((p - 5.238095238095238095).abs() < 1e-12);
        assert_eq!(npv_price(100.0, 0, 0.05, 90.0), -90.0);
    }

    #[test]
    fn normalized_rows_are_bounded() {
        let raw = vec![vec![1.0, 10.0], vec![3.0, 10.0], vec![2.0, 10.0]];
        let n = normalize(&raw);
        for r in &n {
            let norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-12);
        }
        assert_eq!(n[1][1], 1.0 / 3f64.sqrt());
        assert_eq!(n[0][2], 0.0);
    }
}
