//! Dense symmetric eigendecomposition, orthonormalization, and thin SVD.
//!
//! Everything here is deterministic: no randomized pivoting, no
//! platform-dependent backends.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative singular-value threshold below which input is treated as
/// rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of the second component. Ties keep the lower original
/// diagonal index first.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut m = a.clone();
    // Symmetrize to wash out representation asymmetry from upstream products.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, s);
            m.set(j, i, s);
        }
    }
    let mut v = Matrix::identity(n);
    if n == 1 {
        return Ok((vec![m.get(0, 0)], v));
    }

    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let stop = (1e-15 * scale) * (1e-15 * scale);
    let max_sweeps = 64;
    for sweep in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let x = m.get(i, j);
                off += x * x;
            }
        }
        if off <= stop {
            break;
        }
        if sweep == max_sweeps - 1 {
            return Err(Error::NoConvergence);
        }
        // In early sweeps only rotate entries above a sweep threshold; this
        // is the classical scheduling and speeds up convergence.
        let tresh = if sweep < 3 {
            0.2 * off.sqrt() / (n as f64)
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tresh || apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Update the two affected rows/columns of the symmetric matrix.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                // Pin the rotated off-diagonal pair to zero.
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.select_columns(&order);
    Ok((values, vectors))
}

/// Leading eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration with Rayleigh-quotient convergence.
pub fn top_eigenvalue(a: &Matrix) -> Result<f64> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch("square matrix required".into()));
    }
    let n = a.rows();
    if n == 1 {
        return Ok(a.get(0, 0));
    }
    // Deterministic start with unequal components so no eigenvector is
    // exactly orthogonal to it by symmetry.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).recip()).collect();
    normalize(&mut v);
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..5000 {
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = a.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / norm;
        }
        if (rayleigh - prev).abs() <= 1e-12 * rayleigh.abs().max(1.0) {
            return Ok(rayleigh);
        }
        prev = rayleigh;
    }
    Ok(prev)
}

/// Leading eigenvalue of `(1/n) X^T X` via the operator form, without
/// materializing the Gram matrix.
pub fn top_eigenvalue_gram(x: &Matrix) -> f64 {
    let n = x.rows();
    let p = x.cols();
    if p == 1 {
        let s: f64 = (0..n).map(|i| x.get(i, 0) * x.get(i, 0)).sum();
        return s / n as f64;
    }
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + (i as f64 + 1.0).recip()).collect();
    normalize(&mut v);
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..5000 {
        let mut xv = vec![0.0; n];
        for (i, xvi) in xv.iter_mut().enumerate() {
            *xvi = x.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut w = vec![0.0; p];
        for (i, &xi) in xv.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (wj, &xij) in w.iter_mut().zip(x.row(i)) {
                *wj += xi * xij;
            }
        }
        for wj in w.iter_mut() {
            *wj /= n as f64;
        }
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / norm;
        }
        if (rayleigh - prev).abs() <= 1e-12 * rayleigh.abs().max(1.0) {
            return rayleigh;
        }
        prev = rayleigh;
    }
    prev
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Singular values of a tall matrix, descending, via its Gram matrix.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let gram = m.matmul_tn(m)?;
    let (mu, _) = symmetric_eigen(&gram)?;
    Ok(mu.into_iter().map(|x| x.max(0.0).sqrt()).collect())
}

/// Column-pivoted modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Fails with `RankDeficient` when the smallest singular value of the input
/// is not above `RANK_TOL` times the largest. Each output column has its
/// first entry of magnitude above 1e-12 made positive. Columns come out in
/// pivot order (largest residual first, ties to the lower index).
pub fn orthonormalize(m: &Matrix) -> Result<Matrix> {
    let p = m.rows();
    let r = m.cols();
    if r > p {
        return Err(Error::DimensionMismatch(format!(
            "cannot orthonormalize {p}x{r}: more columns than rows"
        )));
    }
    let sv = singular_values(m)?;
    let largest = sv[0];
    let smallest = sv[r - 1];
    if smallest <= RANK_TOL * largest {
        return Err(Error::RankDeficient { smallest, largest });
    }
    let q = mgs_pivoted(m, None)?.0;
    Ok(q)
}

/// Pivoted MGS that keeps at most `limit` columns and silently drops columns
/// whose residual falls below `RANK_TOL` of the first pivot. Returns the
/// orthonormal basis and the pivot order used.
pub(crate) fn orth_basis_drop(m: &Matrix, limit: Option<usize>) -> Result<Matrix> {
    Ok(mgs_pivoted(m, Some(limit.unwrap_or(m.cols())))?.0)
}

fn mgs_pivoted(m: &Matrix, drop_with_limit: Option<usize>) -> Result<(Matrix, Vec<usize>)> {
    let p = m.rows();
    let r = m.cols();
    let mut cols: Vec<Vec<f64>> = (0..r).map(|j| m.column(j)).collect();
    let mut picked: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut order: Vec<usize> = Vec::with_capacity(r);
    let mut alive: Vec<bool> = vec![true; r];
    let mut first_pivot = 0.0f64;
    let limit = drop_with_limit.unwrap_or(r).min(r);

    while picked.len() < limit {
        let mut best = usize::MAX;
        let mut best_norm_sq = -1.0;
        for (j, col) in cols.iter().enumerate() {
            if !alive[j] {
                continue;
            }
            let ns: f64 = col.iter().map(|x| x * x).sum();
            if ns > best_norm_sq {
                best_norm_sq = ns;
                best = j;
            }
        }
        if best == usize::MAX {
            break;
        }
        let norm = best_norm_sq.max(0.0).sqrt();
        if picked.is_empty() {
            first_pivot = norm;
        }
        if drop_with_limit.is_some() && norm <= RANK_TOL * first_pivot {
            break;
        }
        if norm == 0.0 {
            return Err(Error::RankDeficient {
                smallest: 0.0,
                largest: first_pivot,
            });
        }
        let mut q = cols[best].clone();
        for x in q.iter_mut() {
            *x /= norm;
        }
        // Second orthogonalization pass against everything already picked.
        for prev in &picked {
            let dot: f64 = q.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, y) in q.iter_mut().zip(prev) {
                *x -= dot * y;
            }
        }
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if qn == 0.0 {
            return Err(Error::RankDeficient {
                smallest: 0.0,
                largest: first_pivot,
            });
        }
        for x in q.iter_mut() {
            *x /= qn;
        }
        alive[best] = false;
        for (j, col) in cols.iter_mut().enumerate() {
            if !alive[j] {
                continue;
            }
            let dot: f64 = col.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (x, y) in col.iter_mut().zip(&q) {
                *x -= dot * y;
            }
        }
        picked.push(q);
        order.push(best);
    }

    if picked.is_empty() {
        return Err(Error::RankDeficient {
            smallest: 0.0,
            largest: first_pivot,
        });
    }
    let mut out = Matrix::zeros(p, picked.len());
    for (j, col) in picked.iter().enumerate() {
        let mut flip = 1.0;
        for &x in col.iter() {
            if x.abs() > 1e-12 {
                if x < 0.0 {
                    flip = -1.0;
                }
                break;
            }
        }
        for (i, &v) in col.iter().enumerate() {
            out.set(i, j, flip * v);
        }
    }
    Ok((out, order))
}

/// Thin SVD `B = L C R^T` of a tall matrix computed through the Gram matrix
/// `B^T B = R C^2 R^T`. Returns `(l, c, r)` with `c` the singular values in
/// descending order. Errors with `WhiteningFailed` when the smallest
/// singular value is not above `RANK_TOL` of the largest.
pub fn thin_svd(b: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let r = b.cols();
    let gram = b.matmul_tn(b)?;
    let (mu, rot) = symmetric_eigen(&gram)?;
    let sigma: Vec<f64> = mu.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let sigma_1 = sigma[0];
    let sigma_r = sigma[r - 1];
    if sigma_r <= RANK_TOL * sigma_1 {
        return Err(Error::WhiteningFailed { sigma_r, sigma_1 });
    }
    // L = B R C^{-1}
    let br = b.matmul(&rot)?;
    let mut l = br;
    for i in 0..l.rows() {
        let row = l.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            *x /= sigma[j];
        }
    }
    Ok((l, sigma, rot))
}
