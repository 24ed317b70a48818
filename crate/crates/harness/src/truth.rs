//! Ground-truth construction for simulation grids.

use spca_core::frame::orthonormalize;
use spca_core::matrix::Matrix;
use spca_core::model::SpikedModel;
use spca_core::rng::{chacha_rng, derive_seed, standard_normal_matrix};
use spca_core::Error;

use crate::error::Result;
use crate::spec::{ExperimentSpec, VarianceProfile};

/// `r` equispaced spikes with `lambda_1 = lambda_top` and
/// `lambda_r = lambda_bottom`; the length-1 sequence anchors at
/// `lambda_bottom`.
pub fn equispaced_spikes(r: usize, lambda_top: f64, lambda_bottom: f64) -> Vec<f64> {
    if r == 1 {
        return vec![lambda_bottom];
    }
    let step = (lambda_top - lambda_bottom) / (r - 1) as f64;
    (0..r).map(|i| lambda_top - step * i as f64).collect()
}

/// Draws the truth for one grid cell: a `p x r` loading matrix whose first
/// `s` rows have independent centered Gaussian entries with the configured
/// variance profile (zero beyond row `s`), orthonormalized into the frame,
/// paired with the equispaced spikes.
///
/// The second component flags the probability-zero event that the draw was
/// rank-deficient and had to be regenerated from an incremented sub-seed.
pub fn build_truth(
    spec: &ExperimentSpec,
    r: usize,
    s: usize,
    seed: u64,
) -> Result<(SpikedModel, bool)> {
    let p = spec.p;
    let mut regenerated = false;
    for attempt in 0..8u64 {
        let mut rng = chacha_rng(derive_seed(seed, &[attempt]));
        let g = standard_normal_matrix(s, r, &mut rng);
        let mut m = Matrix::zeros(p, r);
        for i in 0..s {
            let sd = match spec.row_variance_profile {
                VarianceProfile::I4 => ((i + 1) * (i + 1)) as f64,
                VarianceProfile::Flat => 1.0,
            };
            for j in 0..r {
                m.set(i, j, sd * g.get(i, j));
            }
        }
        match orthonormalize(&m) {
            Ok(frame) => {
                let spikes = equispaced_spikes(r, spec.lambda_top, spec.lambda_bottom);
                let model = SpikedModel::new(frame, spikes, spec.sigma)?;
                return Ok((model, regenerated));
            }
            Err(Error::RankDeficient { .. }) => {
                regenerated = true;
                continue;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(crate::error::HarnessError::Config(format!(
        "could not draw a full-rank truth for r={r}, s={s}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use spca_core::weak_lq_radius;

    #[test]
    fn truth_has_exactly_s_nonzero_rows() {
        let spec = ExperimentSpec::benchmark_default();
        let (model, regen) = build_truth(&spec, 5, 40, 11).unwrap();
        assert!(!regen);
        let radius = weak_lq_radius(model.frame().basis(), 0.0).unwrap();
        assert_eq!(radius, 40.0);
        assert_eq!(model.ambient_dim(), 2000);
        assert_eq!(model.rank(), 5);
    }

    #[test]
    fn spike_conventions() {
        assert_eq!(equispaced_spikes(1, 20.0, 10.0), vec![10.0]);
        assert_eq!(
            equispaced_spikes(5, 20.0, 10.0),
            vec![20.0, 17.5, 15.0, 12.5, 10.0]
        );
        let spec = ExperimentSpec::benchmark_default();
        let (model, _) = build_truth(&spec, 1, 40, 3).unwrap();
        assert_eq!(model.spikes(), &[10.0]);
    }

    #[test]
    fn truth_is_deterministic_per_seed() {
        let spec = ExperimentSpec::reduced_gate();
        let (a, _) = build_truth(&spec, 3, 20, 77).unwrap();
        let (b, _) = build_truth(&spec, 3, 20, 77).unwrap();
        assert_eq!(a.frame().basis(), b.frame().basis());
    }
}
