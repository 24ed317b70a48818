//! Principal subspace estimators: regular PCA, diagonal-thresholding
//! initialization, rank estimation, the reduction-to-regression pipeline
//! with its symmetrized variant, and the exhaustive aggregation estimator.
//!
//! All estimators assume unit noise variance internally; entry points take a
//! `noise_sd` and rescale the data once, so thresholds stated for sigma = 1
//! apply verbatim. After sample generation the two split copies carry noise
//! of variance 2 per entry, and every downstream threshold bakes that factor
//! in.

use crate::error::{Error, Result};
use crate::frame::{leading_eigvecs_of_projection_sum, OrthonormalFrame};
use crate::linalg::{self, symmetric_eigen, thin_svd, top_eigenvalue, RANK_TOL};
use crate::matrix::Matrix;
use crate::model::sample_covariance;
use crate::regression::{fit_group_sparse, GroupEstimate, PenaltyConfig};
use crate::rng::{chacha_rng, standard_normal_matrix};

use std::path::Path;

/// Ceiling returned by the noise-level exponent estimate when the top
/// eigenvalue carries no usable signal; effectively "no alpha inflation".
pub const M0_CEILING: f64 = 1e6;

/// Regular PCA: the `r` leading eigenvectors of the sample covariance.
pub fn regular_pca(x: &Matrix, r: usize) -> Result<OrthonormalFrame> {
    let p = x.cols();
    if r == 0 || r > p {
        return Err(Error::InvalidParam(format!(
            "rank must lie in [1, {p}], got {r}"
        )));
    }
    let s = sample_covariance(x);
    let (_, vecs) = symmetric_eigen(&s)?;
    let top: Vec<usize> = (0..r).collect();
    OrthonormalFrame::new(vecs.select_columns(&top))
}

/// Splits one sample into two sharing the same random effects: draws an
/// auxiliary standard normal matrix and returns `(x - z, x + z)`, so the two
/// copies have independent noise of variance 2 per entry and sum back to
/// `2x` up to rounding.
pub fn split_samples(x: &Matrix, seed: u64) -> (Matrix, Matrix) {
    let z = standard_normal_matrix(x.rows(), x.cols(), &mut chacha_rng(seed));
    let x0 = x.sub(&z).expect("same shape");
    let x1 = x.add(&z).expect("same shape");
    (x0, x1)
}

/// Configuration for diagonal thresholding and the reduction pipeline.
#[derive(Debug, Clone)]
pub struct DiagThreshConfig {
    /// Screening inflation; the simulations use 3.
    pub alpha: f64,
    /// Noise-level exponent, if known. When absent it can be estimated from
    /// the top eigenvalue of the split-sample covariance.
    pub m0: Option<f64>,
    /// Target rank.
    pub r: usize,
    /// Noise standard deviation of the raw data; the pipeline divides the
    /// data by this once on entry.
    pub noise_sd: f64,
}

impl DiagThreshConfig {
    pub fn new(r: usize) -> Self {
        Self {
            alpha: 3.0,
            m0: None,
            r,
            noise_sd: 1.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidParam("alpha must be non-negative".into()));
        }
        if self.r == 0 {
            return Err(Error::InvalidParam("rank must be at least 1".into()));
        }
        if !self.noise_sd.is_finite() || self.noise_sd <= 0.0 {
            return Err(Error::InvalidParam("noise_sd must be positive".into()));
        }
        Ok(())
    }
}

/// Output of the screening step.
#[derive(Debug, Clone)]
pub struct DiagInit {
    /// Sparse initial frame: rows on `j_set` hold the leading eigenvectors
    /// of the screened covariance block, zero elsewhere.
    pub frame: OrthonormalFrame,
    /// Selected coordinates, ascending.
    pub j_set: Vec<usize>,
    /// True when fewer than `r` coordinates passed the threshold and the
    /// set was augmented with the largest-variance coordinates.
    pub fallback: bool,
}

/// Diagonal thresholding on a split sample: keeps coordinates whose sample
/// variance clears `2 (1 + alpha sqrt(log(max(p,n)) / n))` (the noise
/// variance of a split copy is 2), then eigendecomposes the kept block.
pub fn diagonal_threshold_init(x0: &Matrix, cfg: &DiagThreshConfig) -> Result<DiagInit> {
    cfg.validate()?;
    let n = x0.rows();
    let p = x0.cols();
    let r = cfg.r;
    if r > p {
        return Err(Error::InvalidParam(format!(
            "rank {r} exceeds dimension {p}"
        )));
    }

    let mut diag = vec![0.0f64; p];
    for i in 0..n {
        for (d, &v) in diag.iter_mut().zip(x0.row(i)) {
            *d += v * v;
        }
    }
    for d in diag.iter_mut() {
        *d /= n as f64;
    }

    let p_n = p.max(n) as f64;
    let threshold = 2.0 * (1.0 + cfg.alpha * (p_n.ln() / n as f64).sqrt());
    let mut j_set: Vec<usize> = (0..p).filter(|&j| diag[j] >= threshold).collect();

    let fallback = j_set.len() < r;
    if fallback {
        let mut by_variance: Vec<usize> = (0..p).collect();
        by_variance.sort_by(|&a, &b| diag[b].partial_cmp(&diag[a]).unwrap().then(a.cmp(&b)));
        for j in by_variance {
            if j_set.len() >= r {
                break;
            }
            if !j_set.contains(&j) {
                j_set.push(j);
            }
        }
        j_set.sort_unstable();
    }

    let x0_j = x0.select_columns(&j_set);
    let s_jj = x0_j.matmul_tn(&x0_j)?.scale(1.0 / n as f64);
    let (_, vecs) = symmetric_eigen(&s_jj)?;
    let top: Vec<usize> = (0..r).collect();
    let block = vecs.select_columns(&top);
    let basis = Matrix::embed_rows(p, &j_set, &block)?;
    Ok(DiagInit {
        frame: OrthonormalFrame::new(basis)?,
        j_set,
        fallback,
    })
}

/// Noise-level exponent estimate `log n / log(sigma_1(S0) - 2)` from the
/// top eigenvalue of a split-sample covariance.
///
/// When `sigma_1(S0) - 2` does not exceed 1 the denominator is non-positive
/// and the estimate is clamped to `M0_CEILING`, meaning the screening level
/// needs no inflation.
pub fn estimate_m0(s0: &Matrix, n: usize) -> Result<f64> {
    Ok(estimate_m0_from_sigma1(top_eigenvalue(s0)?, n, M0_CEILING))
}

/// Same as `estimate_m0` but from a precomputed top eigenvalue.
pub fn estimate_m0_from_sigma1(sigma1: f64, n: usize, ceiling: f64) -> f64 {
    let excess = sigma1 - 2.0;
    if !excess.is_finite() || excess <= 1.0 + 1e-9 {
        return ceiling;
    }
    let m0 = (n as f64).ln() / excess.ln();
    m0.min(ceiling).max(0.0)
}

/// Output of the rank estimator.
#[derive(Debug, Clone)]
pub struct RankEstimate {
    pub r_hat: usize,
    pub j_set: Vec<usize>,
    /// `2 (1 + delta_m)`, the level an eigenvalue must exceed.
    pub threshold_used: f64,
    pub delta_m: f64,
    pub t_m: f64,
}

/// Estimates the number of spikes from the screened covariance block:
/// counts eigenvalues of `S0_JJ` above `2 (1 + delta_m)` with
/// `delta_m = 2(sqrt(m/n) + t_m) + (sqrt(m/n) + t_m)^2` and
/// `t_m^2 = (2/n)((m+1) log(ep) + (1 + 2/M0) log n)`. Zero when no
/// eigenvalue clears the level.
pub fn estimate_rank(s0: &Matrix, j_set: &[usize], n: usize, m0: f64) -> Result<RankEstimate> {
    if j_set.is_empty() {
        return Err(Error::InvalidParam("j_set must be nonempty".into()));
    }
    let p = s0.cols();
    if s0.rows() != p {
        return Err(Error::DimensionMismatch("covariance must be square".into()));
    }
    let block = s0.select_rows(j_set).select_columns(j_set);
    estimate_rank_from_block(&block, p, j_set, n, m0)
}

/// Rank estimation from an already-extracted `S0_JJ` block; `p` is the
/// ambient dimension entering the `log(ep)` term.
pub fn estimate_rank_from_block(
    s0_jj: &Matrix,
    p: usize,
    j_set: &[usize],
    n: usize,
    m0: f64,
) -> Result<RankEstimate> {
    let m = s0_jj.rows();
    if s0_jj.cols() != m || m != j_set.len() {
        return Err(Error::DimensionMismatch("block does not match j_set".into()));
    }
    if !m0.is_finite() || m0 <= 0.0 {
        return Err(Error::InvalidParam("m0 must be positive".into()));
    }
    let n_f = n as f64;
    let t_m_sq = 2.0 / n_f
        * ((m as f64 + 1.0) * (std::f64::consts::E * p as f64).ln()
            + (1.0 + 2.0 / m0) * n_f.ln());
    let t_m = t_m_sq.sqrt();
    let u = (m as f64 / n_f).sqrt() + t_m;
    let delta_m = 2.0 * u + u * u;
    let threshold = 2.0 * (1.0 + delta_m);
    let (vals, _) = symmetric_eigen(s0_jj)?;
    let r_hat = vals.iter().take_while(|&&v| v > threshold).count();
    Ok(RankEstimate {
        r_hat,
        j_set: j_set.to_vec(),
        threshold_used: threshold,
        delta_m,
        t_m,
    })
}

/// Screens a split sample and estimates the spike count from the kept
/// block, using `cfg.m0` when supplied and the data-driven estimate
/// otherwise.
pub fn screen_and_estimate_rank(
    x0: &Matrix,
    cfg: &DiagThreshConfig,
) -> Result<(DiagInit, RankEstimate)> {
    let n = x0.rows();
    let init = diagonal_threshold_init(x0, cfg)?;
    let cols = x0.select_columns(&init.j_set);
    let block = cols.matmul_tn(&cols)?.scale(1.0 / n as f64);
    let m0 = match cfg.m0 {
        Some(m0) => m0,
        None => estimate_m0_from_sigma1(linalg::top_eigenvalue_gram(x0), n, M0_CEILING),
    };
    let rank = estimate_rank_from_block(&block, x0.cols(), &init.j_set, n, m0)?;
    Ok((init, rank))
}

/// Degradations encountered along the pipeline, reported rather than hidden.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReductionFlags {
    /// Screening returned fewer than `r` coordinates and was augmented.
    pub init_fallback: bool,
    /// The regression estimate had fewer than `r` independent columns and
    /// the basis was padded.
    pub padded: bool,
}

impl ReductionFlags {
    pub fn merge(self, other: ReductionFlags) -> ReductionFlags {
        ReductionFlags {
            init_fallback: self.init_fallback || other.init_fallback,
            padded: self.padded || other.padded,
        }
    }
}

/// Every intermediate of the reduction pipeline, kept for introspection.
#[derive(Debug, Clone)]
pub struct ReductionArtifacts {
    pub x0: Matrix,
    pub x1: Matrix,
    pub v0: OrthonormalFrame,
    pub j_set: Vec<usize>,
    /// `B = X0 V0`, the whitening target.
    pub b: Matrix,
    /// Left singular vectors of `B`.
    pub l: Matrix,
    /// Singular values of `B` as an `r x r` diagonal matrix.
    pub c: Matrix,
    /// Right singular vectors of `B` (`r x r`).
    pub r_mat: Matrix,
    /// Whitened regression observation `(1/sqrt 2) X1' X0 V0 R C^{-1}`.
    pub y: Matrix,
    /// Group-sparse regression output on `y`.
    pub group: GroupEstimate,
    pub v_hat: OrthonormalFrame,
    pub flags: ReductionFlags,
}

impl ReductionArtifacts {
    pub fn theta_hat(&self) -> &Matrix {
        &self.group.theta_hat
    }

    /// Writes all intermediates as matrix text files named
    /// `x0, x1, v0, b, l, c, r, y, theta_hat, v_hat` under `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let items: [(&str, &Matrix); 10] = [
            ("x0", &self.x0),
            ("x1", &self.x1),
            ("v0", self.v0.basis()),
            ("b", &self.b),
            ("l", &self.l),
            ("c", &self.c),
            ("r", &self.r_mat),
            ("y", &self.y),
            ("theta_hat", &self.group.theta_hat),
            ("v_hat", self.v_hat.basis()),
        ];
        for (name, m) in items {
            m.write_file(&dir.join(name))?;
        }
        Ok(())
    }
}

fn rescaled(x: &Matrix, noise_sd: f64) -> Result<Matrix> {
    if !noise_sd.is_finite() || noise_sd <= 0.0 {
        return Err(Error::InvalidParam(
            "noise_sd must be positive to rescale the data".into(),
        ));
    }
    Ok(if noise_sd == 1.0 {
        x.clone()
    } else {
        x.scale(1.0 / noise_sd)
    })
}

/// Full reduction pipeline: split, screen, whiten, regress, orthonormalize.
///
/// The auxiliary noise is drawn from `seed`; the artifacts store the
/// unit-noise rescaling of the data.
pub fn reduce_and_fit(
    x: &Matrix,
    cfg: &DiagThreshConfig,
    pen: &PenaltyConfig,
    seed: u64,
) -> Result<ReductionArtifacts> {
    cfg.validate()?;
    let xs = rescaled(x, cfg.noise_sd)?;
    let (x0, x1) = split_samples(&xs, seed);
    reduce_with_split(&x0, &x1, cfg, pen)
}

/// The deterministic core of the pipeline, taking the two split copies
/// directly. Passing `(x, x)` corresponds to injecting a zero auxiliary
/// matrix. The copies must already be on the unit noise scale.
pub fn reduce_with_split(
    x0: &Matrix,
    x1: &Matrix,
    cfg: &DiagThreshConfig,
    pen: &PenaltyConfig,
) -> Result<ReductionArtifacts> {
    cfg.validate()?;
    let n = x0.rows();
    let p = x0.cols();
    if x1.rows() != n || x1.cols() != p {
        return Err(Error::DimensionMismatch(
            "split copies must have the same shape".into(),
        ));
    }
    let r = cfg.r;
    if r > p || r > n {
        return Err(Error::InvalidParam(format!(
            "rank {r} exceeds the data dimensions {n}x{p}"
        )));
    }

    let init = diagonal_threshold_init(x0, cfg)?;

    // B = X0 V0; V0 is supported on j_set, so multiply on the support only.
    let v0_block = init.frame.basis().select_rows(&init.j_set);
    let b = x0.select_columns(&init.j_set).matmul(&v0_block)?;
    let (l, c_vals, r_mat) = thin_svd(&b)?;

    // Y = (1/sqrt 2) X1' X0 V0 R C^{-1} = (1/sqrt 2) X1' L.
    let y = x1.matmul_tn(&l)?.scale(std::f64::consts::FRAC_1_SQRT_2);

    let group = fit_group_sparse(&y, pen)?;
    let (v_hat, padded) = finalize_basis(&group.theta_hat, r, x0, &init.frame)?;

    Ok(ReductionArtifacts {
        x0: x0.clone(),
        x1: x1.clone(),
        v0: init.frame,
        j_set: init.j_set,
        b,
        l,
        c: Matrix::from_diag(&c_vals),
        r_mat,
        y,
        group,
        v_hat,
        flags: ReductionFlags {
            init_fallback: init.fallback,
            padded,
        },
    })
}

/// Orthonormalizes the regression estimate into an `r`-frame. When the
/// estimate has fewer than `r` independent columns the basis is padded,
/// first with leading eigenvectors of the screened covariance restricted to
/// the estimated support, then with the initializer's columns, and finally
/// with coordinate vectors; the padding is flagged.
fn finalize_basis(
    theta: &Matrix,
    r: usize,
    x0: &Matrix,
    v0: &OrthonormalFrame,
) -> Result<(OrthonormalFrame, bool)> {
    let p = theta.rows();
    let sv = linalg::singular_values(theta)?;
    let full_rank = sv[0] > 0.0 && sv[theta.cols() - 1] > RANK_TOL * sv[0];
    if full_rank && theta.cols() == r {
        return Ok((crate::frame::orthonormalize(theta)?, false));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(r);
    if sv[0] > 0.0 {
        let q = linalg::orth_basis_drop(theta, Some(r))?;
        for j in 0..q.cols() {
            basis.push(q.column(j));
        }
    }

    let support: Vec<usize> = (0..p)
        .filter(|&i| theta.row(i).iter().any(|&v| v != 0.0))
        .collect();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if !support.is_empty() && basis.len() < r {
        let n = x0.rows();
        let cols = x0.select_columns(&support);
        let block = cols.matmul_tn(&cols)?.scale(1.0 / n as f64);
        let (_, vecs) = symmetric_eigen(&block)?;
        let take = vecs.cols().min(r);
        let embedded = Matrix::embed_rows(p, &support, &vecs.select_columns(&(0..take).collect::<Vec<_>>()))?;
        for j in 0..embedded.cols() {
            candidates.push(embedded.column(j));
        }
    }
    for j in 0..v0.rank() {
        candidates.push(v0.basis().column(j));
    }
    for i in 0..p {
        let mut e = vec![0.0; p];
        e[i] = 1.0;
        candidates.push(e);
    }

    for cand in candidates {
        if basis.len() >= r {
            break;
        }
        let mut v = cand;
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    if basis.len() < r {
        return Err(Error::RankDeficient {
            smallest: 0.0,
            largest: 1.0,
        });
    }
    let mut m = Matrix::zeros(p, r);
    for (j, col) in basis.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok((OrthonormalFrame::new(m)?, true))
}

/// The symmetrized pipeline: runs the reduction once, again with the two
/// split copies swapped (same auxiliary draw), and fuses the two estimates
/// through the leading eigenvectors of the summed projections.
pub fn symmetrized_regspca(
    x: &Matrix,
    cfg: &DiagThreshConfig,
    pen: &PenaltyConfig,
    seed: u64,
) -> Result<(OrthonormalFrame, ReductionFlags)> {
    cfg.validate()?;
    let xs = rescaled(x, cfg.noise_sd)?;
    let (x0, x1) = split_samples(&xs, seed);
    let (v1, f1) = {
        let art = reduce_with_split(&x0, &x1, cfg, pen)?;
        (art.v_hat, art.flags)
    };
    let (v2, f2) = {
        let art = reduce_with_split(&x1, &x0, cfg, pen)?;
        (art.v_hat, art.flags)
    };
    let fused = leading_eigvecs_of_projection_sum(&[&v1, &v2], cfg.r)?;
    Ok((fused, f1.merge(f2)))
}

/// Configuration for the exhaustive aggregation estimator.
#[derive(Debug, Clone)]
pub struct AggregationConfig {
    /// Candidate support size.
    pub support_size: usize,
    /// Upper bound on the number of enumerated supports.
    pub max_supports: u64,
    /// When set, the halves are formed from a seeded shuffle of the rows
    /// instead of first-half/second-half.
    pub split_seed: Option<u64>,
}

impl AggregationConfig {
    pub fn new(support_size: usize) -> Self {
        Self {
            support_size,
            max_supports: 1_000_000,
            split_seed: None,
        }
    }
}

/// Number of `k`-subsets of `[p]`, or `None` on overflow.
pub fn binomial(p: usize, k: usize) -> Option<u64> {
    if k > p {
        return Some(0);
    }
    let k = k.min(p - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul((p - i) as u64)?;
        acc /= (i + 1) as u64;
    }
    Some(acc)
}

/// Aggregation by exhaustive support enumeration: candidate subspaces are
/// fitted on the first half of the rows, one per support of the configured
/// size, and the support maximizing the explained variance on the second
/// half is selected.
pub fn aggregate_estimator(
    x: &Matrix,
    r: usize,
    cfg: &AggregationConfig,
) -> Result<OrthonormalFrame> {
    let total = x.rows();
    let p = x.cols();
    let k = cfg.support_size;
    if total < 2 || !total.is_multiple_of(2) {
        return Err(Error::InvalidParam(
            "aggregation needs an even number of rows (two equal halves)".into(),
        ));
    }
    if k == 0 || k > p {
        return Err(Error::InvalidParam(format!(
            "support size must lie in [1, {p}], got {k}"
        )));
    }
    if r == 0 || r > k {
        return Err(Error::InvalidParam(format!(
            "rank must lie in [1, support_size={k}], got {r}"
        )));
    }
    let count = binomial(p, k).unwrap_or(u64::MAX);
    if count > cfg.max_supports {
        return Err(Error::CombinatorialGuard {
            p,
            k,
            count,
            limit: cfg.max_supports,
        });
    }

    let mut order: Vec<usize> = (0..total).collect();
    if let Some(seed) = cfg.split_seed {
        let mut rng = chacha_rng(seed);
        use rand::Rng;
        for i in (1..total).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
    }
    let half = total / 2;
    let x_first = x.select_rows(&order[..half]);
    let x_second = x.select_rows(&order[half..]);
    let s1 = sample_covariance(&x_first);
    let s2 = sample_covariance(&x_second);

    let mut best_score = f64::NEG_INFINITY;
    let mut best: Option<Matrix> = None;
    let mut support: Vec<usize> = (0..k).collect();
    loop {
        let s1_bb = s1.select_rows(&support).select_columns(&support);
        let (_, vecs) = symmetric_eigen(&s1_bb)?;
        let block = vecs.select_columns(&(0..r).collect::<Vec<_>>());
        // Tr(V' S2 V) restricted to the support block.
        let s2_bb = s2.select_rows(&support).select_columns(&support);
        let m = s2_bb.matmul(&block)?;
        let score: f64 = block
            .data()
            .iter()
            .zip(m.data())
            .map(|(a, b)| a * b)
            .sum();
        if score > best_score {
            best_score = score;
            best = Some(Matrix::embed_rows(p, &support, &block)?);
        }
        if !next_combination(&mut support, p) {
            break;
        }
    }
    OrthonormalFrame::new(best.expect("at least one support enumerated"))
}

/// Advances a sorted index combination to its lexicographic successor.
fn next_combination(c: &mut [usize], p: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < p - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
