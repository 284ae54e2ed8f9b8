//! Long-format regret CSVs, aggregation and growth metrics.
//!
//! Trace files have the columns `env,algo,epsilon,delta,rep,t,cum_regret`,
//! LF line endings and floats printed with 17 significant digits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use ldp_bandit_core::{RegretTrace, TraceMeta};

pub const TRACE_HEADER: [&str; 7] = ["env", "algo", "epsilon", "delta", "rep", "t", "cum_regret"];
pub const SUMMARY_HEADER: [&str; 10] = [
    "env", "algo", "epsilon", "delta", "t", "mean", "std", "count", "band_lo", "band_hi",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("no traces")]
    Empty,
    #[error("group {group}: replication {rep} is logged at different rounds than replication {first}")]
    Misaligned { group: String, rep: usize, first: usize },
    #[error("trace has no point at t = {0}")]
    MissingPoint(usize),
}

/// 17 significant digits, round-trip exact for `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_traces<W: Write>(traces: &[RegretTrace], out: W) -> Result<(), ReportError> {
    let mut w = writer(out);
    w.write_record(TRACE_HEADER)?;
    for tr in traces {
        let m = &tr.meta;
        let (eps, delta, rep) = (fmt_float(m.epsilon), fmt_float(m.delta), m.rep.to_string());
        for &(t, r) in &tr.points {
            w.write_record([
                m.env.as_str(),
                m.algo.as_str(),
                &eps,
                &delta,
                &rep,
                &t.to_string(),
                &fmt_float(r),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV back, one trace per (env, algo, ε, δ, rep) in order of
/// first appearance. The seed is not stored and reads back as 0.
pub fn read_traces<R: Read>(input: R) -> Result<Vec<RegretTrace>, ReportError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(ReportError::Header {
            found: header,
            expected: TRACE_HEADER.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut traces: Vec<RegretTrace> = Vec::new();
    let mut index: BTreeMap<(String, String, u64, u64, usize), usize> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| ReportError::Row { line, reason };
        let num = |i: usize| -> Result<f64, ReportError> {
            rec[i].parse::<f64>().map_err(|_| bad(format!("{}: `{}` is not a number", TRACE_HEADER[i], &rec[i])))
        };
        let int = |i: usize| -> Result<usize, ReportError> {
            rec[i].parse::<usize>().map_err(|_| bad(format!("{}: `{}` is not an integer", TRACE_HEADER[i], &rec[i])))
        };
        let (eps, delta, rep, t, cum) = (num(2)?, num(3)?, int(4)?, int(5)?, num(6)?);
        let key = (rec[0].to_string(), rec[1].to_string(), eps.to_bits(), delta.to_bits(), rep);
        let i = *index.entry(key).or_insert_with(|| {
            traces.push(RegretTrace {
                meta: TraceMeta {
                    env: rec[0].to_string(),
                    algo: rec[1].to_string(),
                    epsilon: eps,
                    delta,
                    rep,
                    seed: 0,
                },
                points: Vec::new(),
            });
            traces.len() - 1
        });
        let tr = &mut traces[i];
        if tr.points.last().is_some_and(|&(prev, _)| prev >= t) {
            return Err(bad(format!("t = {t} is not increasing within its trace")));
        }
        tr.points.push((t, cum));
    }
    Ok(traces)
}

/// Per-round statistics of one (env, algo, ε, δ) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub env: String,
    pub algo: String,
    pub epsilon: f64,
    pub delta: f64,
    pub t: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trace.
    pub std: f64,
    pub count: usize,
}

impl SummaryRow {
    /// `mean ± std/2`.
    pub fn band(&self) -> (f64, f64) {
        (self.mean - 0.5 * self.std, self.mean + 0.5 * self.std)
    }
}

/// Mean and sample standard deviation per logged round, grouped by
/// (env, algo, ε, δ) in order of first appearance.
pub fn aggregate(traces: &[RegretTrace]) -> Result<Vec<SummaryRow>, ReportError> {
    if traces.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut order: Vec<(String, String, u64, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, String, u64, u64), Vec<&RegretTrace>> = BTreeMap::new();
    for tr in traces {
        let m = &tr.meta;
        let key = (m.env.clone(), m.algo.clone(), m.epsilon.to_bits(), m.delta.to_bits());
        let members = groups.entry(key.clone()).or_default();
        if members.is_empty() {
            order.push(key);
        }
        members.push(tr);
    }
    let mut rows = Vec::new();
    for key in order {
        let members = &groups[&key];
        let first = members[0];
        for tr in &members[1..] {
            let aligned = tr.points.len() == first.points.len()
                && tr.points.iter().zip(&first.points).all(|(a, b)| a.0 == b.0);
            if !aligned {
                return Err(ReportError::Misaligned {
                    group: format!("{}/{}/ε={}", key.0, key.1, first.meta.epsilon),
                    rep: tr.meta.rep,
                    first: first.meta.rep,
                });
            }
        }
        let n = members.len();
        for (i, &(t, _)) in first.points.iter().enumerate() {
            let vals: Vec<f64> = members.iter().map(|tr| tr.points[i].1).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                env: first.meta.env.clone(),
                algo: first.meta.algo.clone(),
                epsilon: first.meta.epsilon,
                delta: first.meta.delta,
                t,
                mean,
                std,
                count: n,
            });
        }
    }
    Ok(rows)
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), ReportError> {
    let mut w = writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let (lo, hi) = r.band();
        w.write_record([
            r.env.clone(),
            r.algo.clone(),
            fmt_float(r.epsilon),
            fmt_float(r.delta),
            r.t.to_string(),
            fmt_float(r.mean),
            fmt_float(r.std),
            r.count.to_string(),
            fmt_float(lo),
            fmt_float(hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `cum_regret(T) / cum_regret(T/2)`, with `0/0 = 1`.
pub fn growth_metric(trace: &RegretTrace, horizon: usize) -> Result<f64, ReportError> {
    let full = trace.at(horizon).ok_or(ReportError::MissingPoint(horizon))?;
    let half = trace.at(horizon / 2).ok_or(ReportError::MissingPoint(horizon / 2))?;
    Ok(if full == 0.0 && half == 0.0 { 1.0 } else { full / half })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(algo: &str, rep: usize, points: Vec<(usize, f64)>) -> RegretTrace {
        RegretTrace {
            meta: TraceMeta {
                env: "e".into(),
                algo: algo.into(),
                epsilon: 1.0,
                delta: 0.1,
                rep,
                seed: 0,
            },
            points,
        }
    }

    #[test]
    fn single_trace_has_zero_std() {
        let rows = aggregate(&[trace("a", 0, vec![(1, 1.0), (2, 3.0)])]).unwrap();
        assert!(rows.iter().all(|r| r.std == 0.0 && r.count == 1));
    }

    #[test]
    fn two_traces_mean_and_std() {
        let rows = aggregate(&[trace("a", 0, vec![(5, 2.0)]), trace("a", 1, vec![(5, 4.0)])]).unwrap();
        assert_eq!(rows[0].mean, 3.0);
        assert!((rows[0].std - 2f64.sqrt()).abs() < 1e-15);
        let (lo, hi) = rows[0].band();
        assert!((hi - lo - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_traces_average_to_the_constant() {
        let traces: Vec<_> = (0..10).map(|r| trace("a", r, (1..=20).map(|t| (t * 10, 7.25)).collect())).collect();
        let rows = aggregate(&traces).unwrap();
        assert_eq!(rows.len(), 20);
        assert!(rows.iter().all(|r| r.mean == 7.25 && r.std == 0.0 && r.count == 10));
    }

    #[test]
    fn misaligned_grids_are_rejected() {
        let err = aggregate(&[trace("a", 0, vec![(5, 2.0)]), trace("a", 1, vec![(6, 4.0)])]).unwrap_err();
        assert!(matches!(err, ReportError::Misaligned { .. }));
        // Different groups may use different grids.
        assert!(aggregate(&[trace("a", 0, vec![(5, 2.0)]), trace("b", 0, vec![(6, 4.0)])]).is_ok());
    }

    #[test]
    fn growth_examples() {
        let t = 100_000;
        let grid: Vec<usize> = (1..=1000).map(|i| i * 100).collect();
        let sqrt = trace("a", 0, grid.iter().map(|&s| (s, (s as f64).sqrt())).collect());
        assert!((growth_metric(&sqrt, t).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let log = trace("a", 0, grid.iter().map(|&s| (s, (s as f64).ln())).collect());
        assert!((growth_metric(&log, t).unwrap() - 1.064062974521268050870505).abs() < 1e-12);
        let lin = trace("a", 0, grid.iter().map(|&s| (s, 3.0 * s as f64)).collect());
        assert_eq!(growth_metric(&lin, t).unwrap(), 2.0);
        let zero = trace("a", 0, grid.iter().map(|&s| (s, 0.0)).collect());
        assert_eq!(growth_metric(&zero, t).unwrap(), 1.0);
        assert!(growth_metric(&zero, 100_050).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let traces = vec![
            trace("a", 0, vec![(10, 0.1), (20, 1.0 / 3.0)]),
            trace("a", 1, vec![(10, 0.2), (20, 2.0 / 3.0)]),
        ];
        let mut buf = Vec::new();
        write_traces(&traces, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("env,algo,epsilon,delta,rep,t,cum_regret\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("3.3333333333333331e-1"));
        let back = read_traces(&buf[..]).unwrap();
        assert_eq!(back, traces);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(matches!(
            read_traces("a,b\n1,2\n".as_bytes()),
            Err(ReportError::Header { .. })
        ));
    }
}
