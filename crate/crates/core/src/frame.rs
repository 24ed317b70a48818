//! Orthonormal frames and the squared projection distance between the
//! subspaces they span.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;

/// Entrywise tolerance on `Q^T Q - I` accepted at construction.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// A `p x r` matrix with orthonormal columns, identified with the subspace
/// its columns span.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame {
    basis: Matrix,
}

impl OrthonormalFrame {
    /// Validates orthonormality (`Q^T Q = I` entrywise within 1e-10) and
    /// `r <= p`.
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(Error::DimensionMismatch(format!(
                "frame must be tall, got {}x{}",
                basis.rows(),
                basis.cols()
            )));
        }
        let gram = basis.matmul_tn(&basis)?;
        let dev = gram.sub(&Matrix::identity(basis.cols()))?.max_abs();
        if dev > ORTHONORMALITY_TOL {
            return Err(Error::InvalidParam(format!(
                "columns are not orthonormal: max |Q^T Q - I| = {dev:.3e}"
            )));
        }
        Ok(Self { basis })
    }

    /// Standard basis vectors `e_{cols[0]}, ..., e_{cols[r-1]}` in `R^p`.
    pub fn coordinate(p: usize, cols: &[usize]) -> Result<Self> {
        let mut m = Matrix::zeros(p, cols.len());
        for (j, &i) in cols.iter().enumerate() {
            if i >= p {
                return Err(Error::DimensionMismatch("index out of range".into()));
            }
            m.set(i, j, 1.0);
        }
        Self::new(m)
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// The projection matrix `Q Q^T`.
    pub fn projection(&self) -> Matrix {
        self.basis
            .matmul(&self.basis.transpose())
            .expect("shape is consistent")
    }
}

/// Orthonormalizes the columns of a full-column-rank matrix.
///
/// Column-pivoted modified Gram-Schmidt; the span is preserved and the
/// output satisfies `Q Q^T = P_span(m)`. Rank-deficient input (smallest
/// singular value not above 1e-10 of the largest) is an error rather than a
/// silently reduced basis.
pub fn orthonormalize(m: &Matrix) -> Result<OrthonormalFrame> {
    let q = linalg::orthonormalize(m)?;
    OrthonormalFrame::new(q)
}

/// Squared projection distance `||A A^T - B B^T||_F^2` between equal-rank
/// frames, evaluated through the Gram identity `2r - 2 ||B^T A||_F^2`.
///
/// This is twice the sum of squared sines of the principal angles and is
/// bounded by `2 min(r, p - r)`.
pub fn subspace_loss(a: &OrthonormalFrame, b: &OrthonormalFrame) -> Result<f64> {
    if a.rank() != b.rank() {
        return Err(Error::DimensionMismatch(format!(
            "frames have ranks {} and {}; use subspace_loss_general for unequal ranks",
            a.rank(),
            b.rank()
        )));
    }
    subspace_loss_general(a, b)
}

/// Squared projection distance for frames of possibly different ranks:
/// `r_a + r_b - 2 ||B^T A||_F^2`.
pub fn subspace_loss_general(a: &OrthonormalFrame, b: &OrthonormalFrame) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "ambient dimensions differ: {} vs {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let cross = b.basis().matmul_tn(a.basis())?;
    let overlap = cross.frobenius_norm().powi(2);
    let loss = (a.rank() + b.rank()) as f64 - 2.0 * overlap;
    Ok(loss.max(0.0))
}

/// Dense evaluation of `||A A^T - B B^T||_F^2` by forming both projection
/// matrices. Quadratic in `p`; intended as the independent cross-check of
/// the Gram identity route.
pub fn subspace_loss_via_projections(a: &OrthonormalFrame, b: &OrthonormalFrame) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch("ambient dimensions differ".into()));
    }
    let diff = a.projection().sub(&b.projection())?;
    Ok(diff.frobenius_norm().powi(2))
}

/// The `r` leading eigenvectors of `sum_i Q_i Q_i^T` for a set of frames in
/// the same ambient space. Used to fuse symmetrized estimates without
/// forming the `p x p` sum.
pub fn leading_eigvecs_of_projection_sum(
    frames: &[&OrthonormalFrame],
    r: usize,
) -> Result<OrthonormalFrame> {
    let p = frames
        .first()
        .ok_or_else(|| Error::InvalidParam("need at least one frame".into()))?
        .ambient_dim();
    let total: usize = frames.iter().map(|f| f.rank()).sum();
    let mut w = Matrix::zeros(p, total);
    let mut col = 0;
    for f in frames {
        if f.ambient_dim() != p {
            return Err(Error::DimensionMismatch("ambient dimensions differ".into()));
        }
        for j in 0..f.rank() {
            for i in 0..p {
                w.set(i, col, f.basis().get(i, j));
            }
            col += 1;
        }
    }
    // Basis Q of span(W); the projection sum is Q (T T^T) Q^T with T = Q^T W.
    let q = linalg::orth_basis_drop(&w, None)?;
    let t = q.matmul_tn(&w)?;
    let g = t.matmul(&t.transpose())?;
    let (_, vecs) = linalg::symmetric_eigen(&g)?;
    if vecs.cols() < r {
        return Err(Error::RankDeficient {
            smallest: 0.0,
            largest: 1.0,
        });
    }
    let top: Vec<usize> = (0..r).collect();
    let y = vecs.select_columns(&top);
    OrthonormalFrame::new(q.matmul(&y)?)
}
