//! Aggregation of trial records into CSV files and a text table.

use std::collections::HashMap;
use std::fmt::Write as _;

use spca_core::sparsity::SparsityClass;
use spca_core::{rate_report, RateReport};

use crate::error::Result;
use crate::grid::TrialRecord;
use crate::spec::EstimatorKind;

/// Aggregate of one (estimator, r, s) cell.
#[derive(Debug, Clone)]
pub struct CellStat {
    pub estimator: EstimatorKind,
    pub r: usize,
    pub s: usize,
    pub mean_loss: f64,
    pub std_error: f64,
    pub n_used: usize,
    pub n_failed: usize,
}

/// Per-cell mean loss and standard error. Whitening and rank failures are
/// counted but contribute no loss. Cells appear in first-occurrence
/// (canonical grid) order.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellStat> {
    let mut order: Vec<(EstimatorKind, usize, usize)> = Vec::new();
    let mut buckets: HashMap<(EstimatorKind, usize, usize), (Vec<f64>, usize)> = HashMap::new();
    for t in records {
        let key = (t.estimator, t.r, t.s);
        let entry = buckets.entry(key).or_insert_with(|| {
            order.push(key);
            (Vec::new(), 0)
        });
        if t.status.counts_toward_mean() {
            entry.0.push(t.loss);
        } else {
            entry.1 += 1;
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (losses, failed) = &buckets[&key];
            let m = losses.len();
            let mean = if m == 0 {
                f64::NAN
            } else {
                losses.iter().sum::<f64>() / m as f64
            };
            let se = if m <= 1 {
                0.0
            } else {
                let var =
                    losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (m - 1) as f64;
                (var / m as f64).sqrt()
            };
            CellStat {
                estimator: key.0,
                r: key.1,
                s: key.2,
                mean_loss: mean,
                std_error: se,
                n_used: m,
                n_failed: *failed,
            }
        })
        .collect()
}

/// Per-trial CSV with the fixed header
/// `estimator,r,s,rep,seed,loss,runtime_ms,status`.
pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("estimator,r,s,rep,seed,loss,runtime_ms,status\n");
    for t in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{}",
            t.estimator, t.r, t.s, t.rep, t.seed, t.loss, t.runtime_ms, t.status
        );
    }
    out
}

/// Per-cell CSV with header
/// `estimator,r,s,mean_loss,std_error,n_used,n_failed`.
pub fn summary_csv(cells: &[CellStat]) -> String {
    let mut out = String::from("estimator,r,s,mean_loss,std_error,n_used,n_failed\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.estimator, c.r, c.s, c.mean_loss, c.std_error, c.n_used, c.n_failed
        );
    }
    out
}

/// Text table, one block per estimator: rows indexed by r, columns by s,
/// mean losses at 4 decimal places.
pub fn table_text(cells: &[CellStat]) -> String {
    let mut estimators: Vec<EstimatorKind> = Vec::new();
    for c in cells {
        if !estimators.contains(&c.estimator) {
            estimators.push(c.estimator);
        }
    }
    let mut out = String::new();
    for est in estimators {
        let block: Vec<&CellStat> = cells.iter().filter(|c| c.estimator == est).collect();
        let mut r_values: Vec<usize> = Vec::new();
        let mut s_values: Vec<usize> = Vec::new();
        for c in &block {
            if !r_values.contains(&c.r) {
                r_values.push(c.r);
            }
            if !s_values.contains(&c.s) {
                s_values.push(c.s);
            }
        }
        let reps = block.iter().map(|c| c.n_used + c.n_failed).max().unwrap_or(0);
        let _ = writeln!(out, "Average loss over {reps} repetitions ({est})");
        let _ = write!(out, "{:>6}", "r\\s");
        for s in &s_values {
            let _ = write!(out, "{:>10}", s);
        }
        out.push('\n');
        for r in &r_values {
            let _ = write!(out, "{:>6}", r);
            for s in &s_values {
                match block.iter().find(|c| c.r == *r && c.s == *s) {
                    Some(c) if c.n_used > 0 => {
                        let _ = write!(out, "{:>10.4}", c.mean_loss);
                    }
                    _ => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        let failed: usize = block.iter().map(|c| c.n_failed).sum();
        if failed > 0 {
            let _ = writeln!(out, "({failed} trial(s) failed and are excluded from means)");
        }
        out.push('\n');
    }
    out
}

/// The theory-side diagnostics for one design, as printable text.
pub fn rates_text(cls: &SparsityClass, n: usize) -> Result<String> {
    let rep: RateReport = rate_report(cls, n)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "design: q={} s={} p={} r={} lambda={} n={}",
        cls.q, cls.s, cls.p, cls.r, cls.lambda, n
    );
    let _ = writeln!(out, "h(lambda)   = {:.6}", rep.h_lambda);
    let _ = writeln!(out, "x_q         = {:.6}", rep.x_q);
    let _ = writeln!(out, "k_q_star    = {}", rep.k_q_star);
    let _ = writeln!(out, "psi(k_q*)   = {:.6e}", rep.psi);
    let _ = writeln!(out, "psi0(k_q*)  = {:.6e}", rep.psi0);
    let _ = writeln!(out, "k_prime     = {}", rep.k_prime);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TrialStatus;

    fn record(est: EstimatorKind, r: usize, s: usize, rep: usize, loss: f64) -> TrialRecord {
        TrialRecord {
            estimator: est,
            r,
            s,
            rep,
            seed: rep as u64,
            loss,
            runtime_ms: 1.0,
            status: TrialStatus::Ok,
        }
    }

    #[test]
    fn singleton_cell_has_zero_standard_error() {
        let cells = summarize(&[record(EstimatorKind::Regspca, 1, 4, 0, 0.5)]);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].mean_loss, 0.5);
        assert_eq!(cells[0].std_error, 0.0);
        assert_eq!(cells[0].n_used, 1);
    }

    #[test]
    fn two_records_average() {
        let cells = summarize(&[
            record(EstimatorKind::Regspca, 1, 4, 0, 0.2),
            record(EstimatorKind::Regspca, 1, 4, 1, 0.4),
        ]);
        assert!((cells[0].mean_loss - 0.3).abs() < 1e-15);
    }

    #[test]
    fn summarize_matches_independent_summation() {
        let mut records = Vec::new();
        let mut oracle_sum = 0.0;
        for rep in 0..50 {
            let loss = 0.01 * (rep as f64) + 0.1;
            oracle_sum += loss;
            records.push(record(EstimatorKind::RegularPca, 2, 8, rep, loss));
        }
        let cells = summarize(&records);
        let mean = oracle_sum / 50.0;
        assert!((cells[0].mean_loss - mean).abs() < 1e-12);
        let var_oracle = (0..50)
            .map(|rep| {
                let l = 0.01 * (rep as f64) + 0.1;
                (l - mean) * (l - mean)
            })
            .sum::<f64>()
            / 49.0;
        assert!((cells[0].std_error - (var_oracle / 50.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn failures_are_excluded_from_means_but_counted() {
        let mut bad = record(EstimatorKind::Regspca, 1, 4, 2, f64::NAN);
        bad.status = TrialStatus::WhiteningFailed;
        let cells = summarize(&[record(EstimatorKind::Regspca, 1, 4, 0, 0.2), bad]);
        assert_eq!(cells[0].n_used, 1);
        assert_eq!(cells[0].n_failed, 1);
        assert!((cells[0].mean_loss - 0.2).abs() < 1e-15);
    }

    #[test]
    fn csv_header_is_the_contract() {
        let csv = records_csv(&[record(EstimatorKind::Regspca, 1, 4, 0, 0.25)]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "estimator,r,s,rep,seed,loss,runtime_ms,status"
        );
        assert!(lines.next().unwrap().starts_with("regspca,1,4,0,0,0.25,"));
    }

    #[test]
    fn table_shapes_rows_by_r_and_columns_by_s() {
        let cells = summarize(&[
            record(EstimatorKind::Regspca, 1, 4, 0, 0.25),
            record(EstimatorKind::Regspca, 1, 8, 0, 0.5),
            record(EstimatorKind::Regspca, 2, 4, 0, 0.125),
            record(EstimatorKind::Regspca, 2, 8, 0, 0.75),
        ]);
        let table = table_text(&cells);
        assert!(table.contains("regspca"));
        assert!(table.contains("0.2500"));
        assert!(table.contains("0.7500"));
        let header_line = table.lines().nth(1).unwrap();
        assert!(header_line.contains('4') && header_line.contains('8'));
    }
}
