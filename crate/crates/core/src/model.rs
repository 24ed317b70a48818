//! The spiked covariance model `Sigma = V Lambda V' + sigma^2 I` and its
//! sampler `X = U D V' + sigma Z`.

use crate::error::{Error, Result};
use crate::frame::OrthonormalFrame;
use crate::matrix::Matrix;
use crate::rng::{chacha_rng, standard_normal_matrix};

/// Generative description of a spiked covariance model.
#[derive(Debug, Clone)]
pub struct SpikedModel {
    frame: OrthonormalFrame,
    spikes: Vec<f64>,
    noise_sd: f64,
}

impl SpikedModel {
    /// `spikes` must be strictly positive and non-increasing; `noise_sd` is
    /// allowed to be zero for noiseless draws.
    pub fn new(frame: OrthonormalFrame, spikes: Vec<f64>, noise_sd: f64) -> Result<Self> {
        if spikes.is_empty() {
            return Err(Error::InvalidParam("at least one spike required".into()));
        }
        if spikes.len() != frame.rank() {
            return Err(Error::DimensionMismatch(format!(
                "{} spikes for a rank-{} frame",
                spikes.len(),
                frame.rank()
            )));
        }
        if spikes.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(Error::InvalidParam("spikes must be positive".into()));
        }
        if spikes.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParam("spikes must be non-increasing".into()));
        }
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(Error::InvalidParam("noise_sd must be non-negative".into()));
        }
        Ok(Self {
            frame,
            spikes,
            noise_sd,
        })
    }

    pub fn frame(&self) -> &OrthonormalFrame {
        &self.frame
    }

    pub fn spikes(&self) -> &[f64] {
        &self.spikes
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.ambient_dim()
    }

    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// Condition ratio `lambda_1 / lambda_r`.
    pub fn kappa(&self) -> f64 {
        self.spikes[0] / self.spikes[self.spikes.len() - 1]
    }

    /// The population covariance `V Lambda V' + sigma^2 I_p`.
    pub fn covariance(&self) -> Matrix {
        let p = self.ambient_dim();
        let v = self.frame.basis();
        let vl = {
            let mut m = v.clone();
            for i in 0..p {
                let row = m.row_mut(i);
                for (j, x) in row.iter_mut().enumerate() {
                    *x *= self.spikes[j];
                }
            }
            m
        };
        let mut sigma = vl.matmul(&v.transpose()).expect("shapes agree");
        let s2 = self.noise_sd * self.noise_sd;
        for i in 0..p {
            sigma.set(i, i, sigma.get(i, i) + s2);
        }
        sigma
    }

    /// Draws `n` rows of `X = U D V' + sigma Z`, with `U` filled before `Z`
    /// from a ChaCha8 stream on `seed`. Deterministic per seed.
    pub fn generate(&self, n: usize, seed: u64, retain_latents: bool) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidParam("need at least one sample".into()));
        }
        let r = self.rank();
        let p = self.ambient_dim();
        let mut rng = chacha_rng(seed);
        let u = standard_normal_matrix(n, r, &mut rng);
        let z = standard_normal_matrix(n, p, &mut rng);

        // U D, with D = diag(sqrt(lambda_i)).
        let mut ud = u.clone();
        let d: Vec<f64> = self.spikes.iter().map(|l| l.sqrt()).collect();
        for i in 0..n {
            let row = ud.row_mut(i);
            for (j, x) in row.iter_mut().enumerate() {
                *x *= d[j];
            }
        }
        let mut x = ud.matmul(&self.frame.basis().transpose())?;
        if self.noise_sd != 0.0 {
            x = x.add(&z.scale(self.noise_sd))?;
        }
        Ok(Dataset {
            x,
            latent_u: retain_latents.then_some(u),
            latent_z: retain_latents.then_some(z),
            seed,
        })
    }
}

/// An observed data matrix, optionally retaining the latent factors for
/// deterministic tests.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub latent_u: Option<Matrix>,
    pub latent_z: Option<Matrix>,
    pub seed: u64,
}

/// Sample covariance `(1/n) X^T X`, without mean-centering: the model is
/// mean-zero.
pub fn sample_covariance(x: &Matrix) -> Matrix {
    sample_covariance_with(x, false)
}

/// Sample covariance with an optional mean-centering pass.
pub fn sample_covariance_with(x: &Matrix, center: bool) -> Matrix {
    let n = x.rows();
    if !center {
        return x.matmul_tn(x).expect("shapes agree").scale(1.0 / n as f64);
    }
    let p = x.cols();
    let mut mean = vec![0.0; p];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    centered
        .matmul_tn(&centered)
        .expect("shapes agree")
        .scale(1.0 / n as f64)
}
