//! Penalized least squares for multivariate regression with an orthogonal
//! design and row (group) sparsity.
//!
//! The observation is `Y = Theta + E` with `Y` of shape `p x r`. The
//! complexity penalty over support sizes is
//! `pen(k) = (1+delta)^2 sum_{i<=k} t_i` with
//! `t_k = r + sqrt(2 r beta log(ep/k)) + beta log(ep/k)`, and the estimator
//! keeps whole rows of `Y` selected by the penalized scan.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Penalty parameters; the risk guarantee needs `beta > 2` strictly.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyConfig {
    pub beta: f64,
    pub delta: f64,
}

impl PenaltyConfig {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 2.0 {
            return Err(Error::InvalidParam(format!(
                "beta must be greater than 2, got {beta}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParam(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        Ok(Self { beta, delta })
    }
}

impl Default for PenaltyConfig {
    /// The simulation defaults: `beta = 2.1`, `delta = 0.05`.
    fn default() -> Self {
        Self {
            beta: 2.1,
            delta: 0.05,
        }
    }
}

/// Per-rank penalty level `t_k = r + sqrt(2 r beta log(ep/k)) + beta log(ep/k)`.
///
/// Strictly decreasing in `k` and positive.
pub fn penalty_t(k: usize, p: usize, r: usize, cfg: &PenaltyConfig) -> Result<f64> {
    if k == 0 || k > p {
        return Err(Error::InvalidParam(format!(
            "k must lie in [1, {p}], got {k}"
        )));
    }
    let log_term = (std::f64::consts::E * p as f64 / k as f64).ln();
    Ok(r as f64 + (2.0 * r as f64 * cfg.beta * log_term).sqrt() + cfg.beta * log_term)
}

/// Cumulative penalty `pen(k) = (1+delta)^2 sum_{i=1}^{k} t_i`.
pub fn cumulative_penalty(k: usize, p: usize, r: usize, cfg: &PenaltyConfig) -> Result<f64> {
    if k == 0 || k > p {
        return Err(Error::InvalidParam(format!(
            "k must lie in [1, {p}], got {k}"
        )));
    }
    let mut sum = 0.0;
    for i in 1..=k {
        sum += penalty_t(i, p, r, cfg)?;
    }
    Ok((1.0 + cfg.delta).powi(2) * sum)
}

/// Result of the group-sparse fit.
#[derive(Debug, Clone)]
pub struct GroupEstimate {
    /// Row-thresholded copy of `Y`.
    pub theta_hat: Matrix,
    /// Selected model size, the smallest minimizer of the penalized scan.
    pub k_hat: usize,
    /// Rows kept verbatim (ascending original indices).
    pub kept_rows: Vec<usize>,
    /// Diagnostic `||Y - Theta_hat||_F^2 + pen(max(|kept|, 1))`.
    pub objective_value: f64,
}

/// Fits the row-sparse signal by the penalized scan over sorted row norms.
///
/// `k_hat` is the smallest minimizer over `k` of
/// `pen(k) + sum_{i>k} ||y_(i)||^2` where `y_(i)` are rows in descending
/// norm order (ties broken by ascending original index); a row is kept iff
/// `||y_i||^2 > (1+delta)^2 t_{k_hat}` with an exact floating comparison.
pub fn fit_group_sparse(y: &Matrix, cfg: &PenaltyConfig) -> Result<GroupEstimate> {
    let p = y.rows();
    let r = y.cols();
    let norms_sq = y.row_norms_sq();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        norms_sq[b]
            .partial_cmp(&norms_sq[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let pen_scale = (1.0 + cfg.delta).powi(2);
    let mut t = Vec::with_capacity(p);
    for k in 1..=p {
        t.push(penalty_t(k, p, r, cfg)?);
    }

    // Suffix sums of the sorted squared norms: tail[k] = sum_{i>k} ||y_(i)||^2.
    let mut tail = vec![0.0; p + 1];
    for k in (0..p).rev() {
        tail[k] = tail[k + 1] + norms_sq[order[k]];
    }

    let mut k_hat = 1usize;
    let mut best = f64::INFINITY;
    let mut pen_sum = 0.0;
    for k in 1..=p {
        pen_sum += t[k - 1];
        let objective = pen_scale * pen_sum + tail[k];
        if objective < best {
            best = objective;
            k_hat = k;
        }
    }

    let threshold = pen_scale * t[k_hat - 1];
    let mut theta = Matrix::zeros(p, r);
    let mut kept = Vec::new();
    for (i, &ns) in norms_sq.iter().enumerate() {
        if ns > threshold {
            theta.row_mut(i).copy_from_slice(y.row(i));
            kept.push(i);
        }
    }

    let residual: f64 = norms_sq.iter().filter(|&&ns| ns <= threshold).sum();
    let objective_value = residual + cumulative_penalty(kept.len().max(1), p, r, cfg)?;

    Ok(GroupEstimate {
        theta_hat: theta,
        k_hat,
        kept_rows: kept,
        objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chacha_rng, standard_normal_matrix};
    use rand::Rng;

    /// Direct evaluation of the penalized scan, recomputing every sum.
    fn brute_force_fit(y: &Matrix, cfg: &PenaltyConfig) -> (usize, Vec<usize>) {
        let p = y.rows();
        let r = y.cols();
        let norms_sq = y.row_norms_sq();
        let mut sorted = norms_sq.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut best_k = 0;
        let mut best = f64::INFINITY;
        for k in 1..=p {
            let pen = cumulative_penalty(k, p, r, cfg).unwrap();
            let tail: f64 = sorted[k..].iter().sum();
            if pen + tail < best {
                best = pen + tail;
                best_k = k;
            }
        }
        let thr = (1.0 + cfg.delta).powi(2) * penalty_t(best_k, p, r, cfg).unwrap();
        let kept = (0..p).filter(|&i| norms_sq[i] > thr).collect();
        (best_k, kept)
    }

    #[test]
    fn penalty_collapses_at_k_equals_p() {
        let cfg = PenaltyConfig::new(2.1, 0.05).unwrap();
        let (p, r) = (7, 3);
        let expected = r as f64 + (2.0 * r as f64 * 2.1).sqrt() + 2.1;
        assert!((penalty_t(p, p, r, &cfg).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn penalty_value_small_example() {
        let cfg = PenaltyConfig::new(2.1, 0.05).unwrap();
        let got = penalty_t(1, 3, 1, &cfg).unwrap();
        let log_term = (3.0 * std::f64::consts::E).ln();
        let expected = 1.0 + (2.0 * 2.1 * log_term).sqrt() + 2.1 * log_term;
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 8.376).abs() < 5e-3);
    }

    #[test]
    fn penalty_is_strictly_decreasing() {
        let cfg = PenaltyConfig::new(3.0, 0.3).unwrap();
        for (p, r) in [(2, 1), (10, 4), (50, 2)] {
            let mut prev = f64::INFINITY;
            for k in 1..=p {
                let t = penalty_t(k, p, r, &cfg).unwrap();
                assert!(t > 0.0 && t < prev);
                prev = t;
            }
        }
    }

    #[test]
    fn cumulative_penalty_telescopes() {
        let cfg = PenaltyConfig::new(2.5, 0.1).unwrap();
        let (p, r) = (9, 2);
        assert!(
            (cumulative_penalty(1, p, r, &cfg).unwrap()
                - (1.1f64).powi(2) * penalty_t(1, p, r, &cfg).unwrap())
            .abs()
                < 1e-12
        );
        for k in 2..=p {
            let diff = cumulative_penalty(k, p, r, &cfg).unwrap()
                - cumulative_penalty(k - 1, p, r, &cfg).unwrap();
            let expected = (1.1f64).powi(2) * penalty_t(k, p, r, &cfg).unwrap();
            assert!((diff - expected).abs() < 1e-10);
        }
        let total: f64 = (1..=p)
            .map(|k| penalty_t(k, p, r, &cfg).unwrap())
            .sum::<f64>()
            * (1.1f64).powi(2);
        assert!((cumulative_penalty(p, p, r, &cfg).unwrap() - total).abs() < 1e-10);
        assert!(penalty_t(0, p, r, &cfg).is_err());
        assert!(penalty_t(p + 1, p, r, &cfg).is_err());
    }

    #[test]
    fn zero_signal_selects_k_one_and_empty_support() {
        let cfg = PenaltyConfig::default();
        let y = Matrix::zeros(6, 2);
        let est = fit_group_sparse(&y, &cfg).unwrap();
        assert_eq!(est.k_hat, 1);
        assert!(est.kept_rows.is_empty());
        assert_eq!(est.theta_hat, Matrix::zeros(6, 2));
    }

    #[test]
    fn single_strong_row_is_kept_verbatim() {
        let cfg = PenaltyConfig::new(2.1, 0.05).unwrap();
        let y = Matrix::new(3, 1, vec![10.0, 0.0, 0.0]).unwrap();
        let est = fit_group_sparse(&y, &cfg).unwrap();
        let (k_oracle, kept_oracle) = brute_force_fit(&y, &cfg);
        assert_eq!(est.k_hat, 1);
        assert_eq!(est.k_hat, k_oracle);
        assert_eq!(est.kept_rows, kept_oracle);
        assert_eq!(est.kept_rows, vec![0]);
        assert_eq!(est.theta_hat.get(0, 0), 10.0);
    }

    #[test]
    fn random_instances_match_the_exhaustive_scan() {
        let mut rng = chacha_rng(42);
        for _ in 0..300 {
            let p = rng.random_range(1..=50);
            let r = rng.random_range(1..=5);
            let cfg = PenaltyConfig::new(
                rng.random_range(2.0001..4.0),
                rng.random_range(0.01..0.95),
            )
            .unwrap();
            let scale: f64 = rng.random_range(0.1..40.0);
            let mut y = standard_normal_matrix(p, r, &mut rng).scale(scale);
            // Sprinkle exact zero rows so ties and empty norms occur.
            for i in 0..p {
                if rng.random_range(0.0..1.0) < 0.2 {
                    for j in 0..r {
                        y.set(i, j, 0.0);
                    }
                }
            }
            let est = fit_group_sparse(&y, &cfg).unwrap();
            let (k_oracle, kept_oracle) = brute_force_fit(&y, &cfg);
            assert_eq!(est.k_hat, k_oracle);
            assert_eq!(est.kept_rows, kept_oracle);
        }
    }

    #[test]
    fn remark_ordering_property_holds() {
        let mut rng = chacha_rng(43);
        for _ in 0..100 {
            let p = rng.random_range(2..=30);
            let r = rng.random_range(1..=4);
            let cfg = PenaltyConfig::default();
            let y = standard_normal_matrix(p, r, &mut rng).scale(rng.random_range(0.5..10.0));
            let est = fit_group_sparse(&y, &cfg).unwrap();
            let mut sorted = y.row_norms_sq();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let scale = (1.0 + cfg.delta).powi(2);
            if est.k_hat < p {
                let t_next = penalty_t(est.k_hat + 1, p, r, &cfg).unwrap();
                assert!(sorted[est.k_hat] <= scale * t_next + 1e-12);
            }
            // Support size claim.
            assert!(est.kept_rows.len() <= est.k_hat);
            let t_k = penalty_t(est.k_hat, p, r, &cfg).unwrap();
            if sorted[est.k_hat - 1] > scale * t_k {
                assert_eq!(est.kept_rows.len(), est.k_hat);
            }
        }
    }

    #[test]
    fn row_permutation_equivariance() {
        let mut rng = chacha_rng(44);
        let p = 12;
        let y = standard_normal_matrix(p, 3, &mut rng).scale(4.0);
        let cfg = PenaltyConfig::default();
        let base = fit_group_sparse(&y, &cfg).unwrap();
        let mut perm: Vec<usize> = (0..p).collect();
        for k in (1..p).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let permuted = y.select_rows(&perm);
        let est = fit_group_sparse(&permuted, &cfg).unwrap();
        assert_eq!(est.k_hat, base.k_hat);
        let mut mapped: Vec<usize> = est.kept_rows.iter().map(|&i| perm[i]).collect();
        mapped.sort_unstable();
        assert_eq!(mapped, base.kept_rows);
        for (new_i, &old_i) in perm.iter().enumerate() {
            assert_eq!(est.theta_hat.row(new_i), base.theta_hat.row(old_i));
        }
    }

    #[test]
    fn growing_a_kept_row_never_drops_it() {
        let mut rng = chacha_rng(45);
        for _ in 0..50 {
            let p = rng.random_range(2..=20);
            let r = rng.random_range(1..=3);
            let cfg = PenaltyConfig::default();
            let y = standard_normal_matrix(p, r, &mut rng).scale(rng.random_range(1.0..8.0));
            let est = fit_group_sparse(&y, &cfg).unwrap();
            let Some(&row) = est.kept_rows.first() else {
                continue;
            };
            let mut grown = y.clone();
            for j in 0..r {
                grown.set(row, j, grown.get(row, j) * rng.random_range(1.0..5.0));
            }
            let est2 = fit_group_sparse(&grown, &cfg).unwrap();
            assert!(est2.kept_rows.contains(&row));
        }
    }

    /// Rate-level sanity for the risk bound: exact-sparse signal, standard
    /// normal noise, mean squared error within a factor 10 of
    /// `k'(r + log(ep/k'))`.
    #[test]
    fn risk_tracks_the_group_sparse_rate() {
        let mut rng = chacha_rng(46);
        let (p, r, k) = (100usize, 3usize, 8usize);
        let cfg = PenaltyConfig::new(2.1, 0.05).unwrap();
        let rate = k as f64 * (r as f64 + (std::f64::consts::E * p as f64 / k as f64).ln());
        let mut total = 0.0;
        let reps = 100;
        for _ in 0..reps {
            let mut theta = Matrix::zeros(p, r);
            for i in 0..k {
                // Row norms comfortably above the keep threshold.
                let dir = standard_normal_matrix(1, r, &mut rng);
                let norm = dir.frobenius_norm();
                let target = rng.random_range(8.0..14.0);
                for j in 0..r {
                    theta.set(i, j, dir.get(0, j) / norm * target);
                }
            }
            let noise = standard_normal_matrix(p, r, &mut rng);
            let y = theta.add(&noise).unwrap();
            let est = fit_group_sparse(&y, &cfg).unwrap();
            total += est.theta_hat.sub(&theta).unwrap().frobenius_norm().powi(2);
        }
        let mean = total / reps as f64;
        assert!(
            mean < 10.0 * rate && mean > rate / 10.0,
            "mean risk {mean:.2} vs rate {rate:.2}"
        );
    }
}
