//! Probe for the whiteness of the regression-stage noise.
//!
//! On pure-noise data the signal matrix entering the regression stage is
//! exactly zero, so the whitened observation rows are i.i.d. standard
//! normal vectors in `R^r` and their squared norms are chi-square with `r`
//! degrees of freedom. This is the only way to look at that noise, which is
//! not observable on signal-bearing data.

use spca_core::estimators::{reduce_with_split, split_samples, DiagThreshConfig};
use spca_core::regression::PenaltyConfig;
use spca_core::rng::{chacha_rng, derive_seed, standard_normal_matrix};

use crate::error::Result;

/// Runs the reduction pipeline on `trials` pure-noise datasets and pools
/// the squared row norms of the whitened observation matrix.
pub fn whiteness_samples(
    n: usize,
    p: usize,
    r: usize,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let cfg = DiagThreshConfig::new(r);
    let pen = PenaltyConfig::default();
    let mut pooled = Vec::with_capacity(trials * p);
    for t in 0..trials as u64 {
        let x = standard_normal_matrix(n, p, &mut chacha_rng(derive_seed(master_seed, &[t, 0])));
        let (x0, x1) = split_samples(&x, derive_seed(master_seed, &[t, 1]));
        let art = reduce_with_split(&x0, &x1, &cfg, &pen)?;
        pooled.extend(art.y.row_norms_sq());
    }
    Ok(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_cdf, ks_statistic, KS_COEFF_1PCT};

    #[test]
    fn pure_noise_row_norms_look_chi_square() {
        let r = 3;
        let mut samples = whiteness_samples(150, 200, r, 5, 42).unwrap();
        assert_eq!(samples.len(), 1000);
        let d = ks_statistic(&mut samples, |x| chi_square_cdf(x, r));
        let crit = KS_COEFF_1PCT / (samples.len() as f64).sqrt();
        assert!(d < crit, "KS statistic {d:.4} over critical value {crit:.4}");
    }
}
