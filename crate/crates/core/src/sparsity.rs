//! Weak-lq row sparsity, the admissible parameter class, and the
//! rate/effective-dimension calculators.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::regression::{penalty_t, PenaltyConfig};

/// Row norms below this count as zero when `q = 0`.
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// Penalty slope used for the `k'` diagnostic when no explicit choice is
/// supplied; matches the simulation default.
pub const DEFAULT_BETA: f64 = 2.1;

/// Weak-lq radius: `max_j j * ||row_(j)||^q` over rows sorted by descending
/// Euclidean norm. At `q = 0` the power is read as a nonzero indicator, so
/// the radius is the number of nonzero rows.
pub fn weak_lq_radius(m: &Matrix, q: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&q) {
        return Err(Error::InvalidParam(format!("q must be in [0,2), got {q}")));
    }
    let mut norms: Vec<f64> = m.row_norms_sq().iter().map(|v| v.sqrt()).collect();
    norms.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if q == 0.0 {
        return Ok(norms.iter().filter(|&&v| v > ZERO_ROW_TOL).count() as f64);
    }
    let mut best = 0.0f64;
    for (j, &v) in norms.iter().enumerate() {
        best = best.max((j + 1) as f64 * v.powf(q));
    }
    Ok(best)
}

/// A weak-lq parameter class for the principal subspace problem.
#[derive(Debug, Clone)]
pub struct SparsityClass {
    pub q: f64,
    pub s: f64,
    pub p: usize,
    pub r: usize,
    pub lambda: f64,
    pub kappa: f64,
}

impl SparsityClass {
    pub fn new(q: f64, s: f64, p: usize, r: usize, lambda: f64, kappa: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&q) {
            return Err(Error::InvalidParam(format!("q must be in [0,2), got {q}")));
        }
        if p == 0 || r == 0 || r > p {
            return Err(Error::InvalidParam(format!(
                "need 1 <= r <= p, got r={r}, p={p}"
            )));
        }
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidParam("s must be positive".into()));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParam("lambda must be positive".into()));
        }
        if !kappa.is_finite() || kappa < 1.0 {
            return Err(Error::InvalidParam("kappa must be at least 1".into()));
        }
        let (lo, hi) = radius_bounds(q, p, r);
        if s < lo * (1.0 - 1e-12) || s > hi * (1.0 + 1e-12) {
            return Err(Error::InvalidParam(format!(
                "radius constraint violated: need {lo:.6} <= s <= {hi:.6}, got s = {s}"
            )));
        }
        Ok(Self {
            q,
            s,
            p,
            r,
            lambda,
            kappa,
        })
    }
}

/// The admissible range `[(2-q)/2 * r, r^{q/2} p^{(2-q)/2}]` for the radius.
pub fn radius_bounds(q: f64, p: usize, r: usize) -> (f64, f64) {
    let lo = (2.0 - q) / 2.0 * r as f64;
    let hi = (r as f64).powf(q / 2.0) * (p as f64).powf((2.0 - q) / 2.0);
    (lo, hi)
}

/// Signal strength `h(lambda) = lambda^2 / (lambda + 1)`.
pub fn h_lambda(lambda: f64) -> f64 {
    lambda * lambda / (lambda + 1.0)
}

/// `(r k + k log(ep/k)) / (n h)`.
pub fn psi_rate(k: usize, p: usize, r: usize, n: usize, lambda: f64) -> f64 {
    let k_f = k as f64;
    let nh = n as f64 * h_lambda(lambda);
    (r as f64 * k_f + k_f * (std::f64::consts::E * p as f64 / k_f).ln()) / nh
}

/// `(r (k - r) + k log(ep/k)) / (n h)`, floored at zero.
pub fn psi0_rate(k: usize, p: usize, r: usize, n: usize, lambda: f64) -> f64 {
    let k_f = k as f64;
    let nh = n as f64 * h_lambda(lambda);
    let raw = (r as f64 * (k_f - r as f64) + k_f * (std::f64::consts::E * p as f64 / k_f).ln()) / nh;
    raw.max(0.0)
}

/// The rate and effective-dimension diagnostics for a class at sample size
/// `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub h_lambda: f64,
    pub psi: f64,
    pub psi0: f64,
    pub x_q: f64,
    pub k_q_star: usize,
    pub k_prime: usize,
}

/// Right-hand side of the effective-dimension fixed point:
/// `phi(x) = s (n h / (r + log(ep/x)))^{q/2}`, increasing in `x`.
fn phi(x: f64, cls: &SparsityClass, nh: f64) -> f64 {
    let denom = cls.r as f64 + (std::f64::consts::E * cls.p as f64 / x).ln();
    cls.s * (nh / denom).powf(cls.q / 2.0)
}

/// Computes `x_q = max{0 <= x <= p : x <= phi(x)}` and `k_q* = ceil(x_q)`.
///
/// `x / phi(x)` is strictly increasing on `(0, p]`, so the feasible set is
/// an interval: an integer binary search pins `ceil(x_q)` exactly and a
/// bisection refines `x_q` itself.
fn effective_dimension(cls: &SparsityClass, n: usize) -> (f64, usize) {
    let nh = n as f64 * h_lambda(cls.lambda);
    let p = cls.p;
    let pred = |j: usize| j as f64 <= phi(j as f64, cls, nh);

    // Largest integer in [1, p] satisfying the fixed-point inequality.
    let last_true = if !pred(1) {
        None
    } else {
        let (mut lo, mut hi) = (1usize, p);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Some(lo)
    };

    let bisect = |mut lo: f64, mut hi: f64| -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= phi(mid, cls, nh) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    match last_true {
        None => {
            // Root below 1; widen the bracket downward until feasible.
            let mut lo = 0.5;
            while lo > 1e-300 && lo > phi(lo, cls, nh) {
                lo *= 0.5;
            }
            let x = bisect(lo, 1.0);
            (x, 1)
        }
        Some(m) if m == p => (p as f64, p),
        Some(m) => {
            let fm = phi(m as f64, cls, nh);
            if fm == m as f64 {
                (m as f64, m)
            } else {
                (bisect(m as f64, (m + 1) as f64), m + 1)
            }
        }
    }
}

/// `k' = min{k in [p] : t_k^{q/2} k >= s}`, or `p` when the set is empty.
pub fn k_prime(cls: &SparsityClass, beta: f64) -> usize {
    let cfg = PenaltyConfig::new(beta, 0.5).expect("fixed valid penalty parameters");
    for k in 1..=cls.p {
        let t = penalty_t(k, cls.p, cls.r, &cfg).expect("k in range");
        if t.powf(cls.q / 2.0) * k as f64 >= cls.s {
            return k;
        }
    }
    cls.p
}

/// All the theory-side diagnostics for a design: `h`, the effective
/// dimension, the rate at the effective dimension, and `k'`.
pub fn rate_report(cls: &SparsityClass, n: usize) -> Result<RateReport> {
    if n == 0 {
        return Err(Error::InvalidParam("need n >= 1".into()));
    }
    let (x_q, k) = effective_dimension(cls, n);
    Ok(RateReport {
        h_lambda: h_lambda(cls.lambda),
        psi: psi_rate(k, cls.p, cls.r, n, cls.lambda),
        psi0: psi0_rate(k, cls.p, cls.r, n, cls.lambda),
        x_q,
        k_q_star: k,
        k_prime: k_prime(cls, DEFAULT_BETA),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chacha_rng, standard_normal_matrix};
    use rand::Rng;

    #[test]
    fn radius_at_q0_counts_nonzero_rows() {
        let block = standard_normal_matrix(5, 2, &mut chacha_rng(1));
        let m = Matrix::embed_rows(12, &[0, 2, 4, 6, 8], &block).unwrap();
        assert_eq!(weak_lq_radius(&m, 0.0).unwrap(), 5.0);
    }

    #[test]
    fn radius_of_unit_column_at_q1() {
        let mut m = Matrix::zeros(4, 1);
        m.set(0, 0, 1.0);
        assert!((weak_lq_radius(&m, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radius_enumeration_example() {
        let m = Matrix::new(3, 1, vec![0.8, 0.6, 0.0]).unwrap();
        // j * norm_(j): 0.8, 1.2, 0 -> 1.2
        assert!((weak_lq_radius(&m, 1.0).unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn radius_is_monotone_and_permutation_invariant() {
        let mut rng = chacha_rng(2);
        for _ in 0..50 {
            let p = rng.random_range(2..10);
            let r = rng.random_range(1..4);
            let m = standard_normal_matrix(p, r, &mut rng);
            let q: f64 = rng.random_range(0.0..2.0);
            let base = weak_lq_radius(&m, q).unwrap();

            let mut grown = m.clone();
            let i = rng.random_range(0..p);
            for j in 0..r {
                grown.set(i, j, grown.get(i, j) * 3.0);
            }
            assert!(weak_lq_radius(&grown, q).unwrap() >= base - 1e-12);

            let mut perm: Vec<usize> = (0..p).collect();
            for k in (1..p).rev() {
                perm.swap(k, rng.random_range(0..=k));
            }
            let shuffled = m.select_rows(&perm);
            let after = weak_lq_radius(&shuffled, q).unwrap();
            assert!((after - base).abs() < 1e-12);
        }
    }

    #[test]
    fn class_rejects_radius_violations() {
        // q = 0 needs r <= s <= p.
        assert!(SparsityClass::new(0.0, 0.5, 10, 1, 1.0, 1.0).is_err());
        assert!(SparsityClass::new(0.0, 11.0, 10, 1, 1.0, 1.0).is_err());
        assert!(SparsityClass::new(0.0, 5.0, 10, 1, 1.0, 1.0).is_ok());
        // General q bounds.
        let (lo, hi) = radius_bounds(0.8, 100, 10);
        assert!(SparsityClass::new(0.8, lo * 0.9, 100, 10, 1.0, 1.0).is_err());
        assert!(SparsityClass::new(0.8, hi * 1.1, 100, 10, 1.0, 1.0).is_err());
    }

    #[test]
    fn exact_sparsity_effective_dimension_is_s() {
        let cls = SparsityClass::new(0.0, 40.0, 2000, 5, 10.0, 2.0).unwrap();
        let rep = rate_report(&cls, 1000).unwrap();
        assert_eq!(rep.k_q_star, 40);
        assert!((rep.x_q - 40.0).abs() < 1e-9);
        assert_eq!(rep.k_prime, 40);
    }

    #[test]
    fn effective_dimension_saturates_at_p_on_large_radius() {
        let p = 50;
        let r = 3;
        let n = 200;
        let lambda = 2.0;
        let q = 1.0;
        let nh = n as f64 * h_lambda(lambda);
        let boundary = p as f64 * ((r as f64 + 1.0) / nh).powf(q / 2.0);
        let cls = SparsityClass::new(q, boundary * 1.5, p, r, lambda, 1.0).unwrap();
        let rep = rate_report(&cls, n).unwrap();
        assert_eq!(rep.k_q_star, p);
    }

    /// Brute-force integer scan of the fixed-point condition.
    fn effective_dimension_oracle(cls: &SparsityClass, n: usize) -> usize {
        let nh = n as f64 * h_lambda(cls.lambda);
        let mut last_true = None;
        for j in 1..=cls.p {
            if j as f64 <= phi(j as f64, cls, nh) {
                last_true = Some(j);
            }
        }
        match last_true {
            None => 1,
            Some(m) if m == cls.p => cls.p,
            Some(m) => {
                if phi(m as f64, cls, nh) == m as f64 {
                    m
                } else {
                    m + 1
                }
            }
        }
    }

    #[test]
    fn figure_defaults_match_integer_scan() {
        // p=100, s=30, r=10, nh=30, q=0.8; lambda chosen so h(lambda) = 1.
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        let cls = SparsityClass::new(0.8, 30.0, 100, 10, golden, 1.0).unwrap();
        let n = 30;
        let rep = rate_report(&cls, n).unwrap();
        assert_eq!(rep.k_q_star, effective_dimension_oracle(&cls, n));
        assert_eq!(rep.k_q_star, rep.x_q.ceil() as usize);
    }

    #[test]
    fn random_classes_match_integer_scan() {
        let mut rng = chacha_rng(5);
        for _ in 0..200 {
            let p = rng.random_range(3..200);
            let r = rng.random_range(1..=p.min(12));
            let q: f64 = rng.random_range(0.05..1.95);
            let (lo, hi) = radius_bounds(q, p, r);
            if lo >= hi {
                continue;
            }
            let s = rng.random_range(lo..hi);
            let lambda = rng.random_range(0.1..30.0);
            let n = rng.random_range(5..5000);
            let cls = match SparsityClass::new(q, s, p, r, lambda, 1.5) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let rep = rate_report(&cls, n).unwrap();
            assert_eq!(
                rep.k_q_star,
                effective_dimension_oracle(&cls, n),
                "p={p} r={r} q={q} s={s} lambda={lambda} n={n}"
            );
            assert!(rep.k_q_star >= 1 && rep.k_q_star <= p);
            assert!(rep.psi >= 0.0 && rep.psi0 >= 0.0);
        }
    }

    #[test]
    fn k_prime_is_p_when_no_k_qualifies() {
        // Huge s with q > 0 so t_k^{q/2} k stays below s for every k.
        let cls = SparsityClass {
            q: 1.0,
            s: 1e9,
            p: 20,
            r: 2,
            lambda: 1.0,
            kappa: 1.0,
        };
        assert_eq!(k_prime(&cls, DEFAULT_BETA), 20);
    }
}
