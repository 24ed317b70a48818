//! Experiment descriptions and the flat key=value config format.

use std::fmt;
use std::str::FromStr;

use crate::error::{HarnessError, Result};

/// Which estimator a benchmark trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Regspca,
    RegularPca,
    Aggregate,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimatorKind::Regspca => "regspca",
            EstimatorKind::RegularPca => "regular_pca",
            EstimatorKind::Aggregate => "aggregate",
        };
        f.write_str(s)
    }
}

impl FromStr for EstimatorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "regspca" => Ok(EstimatorKind::Regspca),
            "regular_pca" => Ok(EstimatorKind::RegularPca),
            "aggregate" => Ok(EstimatorKind::Aggregate),
            other => Err(HarnessError::Config(format!(
                "unknown estimator {other:?}; expected regspca, regular_pca or aggregate"
            ))),
        }
    }
}

/// Row-variance profile of the pre-orthonormalization loading matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceProfile {
    /// Row `i` has variance `i^4` (1-based); the simulation default.
    I4,
    /// Unit variance everywhere.
    Flat,
}

impl fmt::Display for VarianceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceProfile::I4 => "i4",
            VarianceProfile::Flat => "flat",
        })
    }
}

impl FromStr for VarianceProfile {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "i4" => Ok(VarianceProfile::I4),
            "flat" => Ok(VarianceProfile::Flat),
            other => Err(HarnessError::Config(format!(
                "unknown row_variance_profile {other:?}; expected i4 or flat"
            ))),
        }
    }
}

/// A full benchmark grid: estimators x ranks x sparsities x repetitions.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub n: usize,
    pub p: usize,
    pub r_values: Vec<usize>,
    pub s_values: Vec<usize>,
    pub lambda_top: f64,
    pub lambda_bottom: f64,
    pub q: f64,
    pub sigma: f64,
    pub estimators: Vec<EstimatorKind>,
    pub reps: usize,
    pub master_seed: u64,
    pub row_variance_profile: VarianceProfile,
}

impl ExperimentSpec {
    /// The reference benchmark protocol: n=1000, p=2000, ranks 1/5/10/20,
    /// sparsities 40..200, equispaced spikes between 10 and 20, 50
    /// repetitions.
    pub fn benchmark_default() -> Self {
        ExperimentSpec {
            n: 1000,
            p: 2000,
            r_values: vec![1, 5, 10, 20],
            s_values: vec![40, 80, 120, 160, 200],
            lambda_top: 20.0,
            lambda_bottom: 10.0,
            q: 0.0,
            sigma: 1.0,
            estimators: vec![EstimatorKind::Regspca],
            reps: 50,
            master_seed: 1_234_567,
            row_variance_profile: VarianceProfile::I4,
        }
    }

    /// Reduced-scale smoke grid: n=500, p=1000, sparsities 20/40/60, 20
    /// repetitions.
    pub fn reduced_gate() -> Self {
        ExperimentSpec {
            n: 500,
            p: 1000,
            s_values: vec![20, 40, 60],
            reps: 20,
            ..Self::benchmark_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(HarnessError::Config("n and p must be positive".into()));
        }
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be at least 1".into()));
        }
        if self.r_values.is_empty() || self.s_values.is_empty() {
            return Err(HarnessError::Config(
                "r_values and s_values must be nonempty".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::Config("estimators must be nonempty".into()));
        }
        if !self.lambda_bottom.is_finite()
            || self.lambda_bottom <= 0.0
            || !self.lambda_top.is_finite()
            || self.lambda_top < self.lambda_bottom
        {
            return Err(HarnessError::Config(
                "need lambda_top >= lambda_bottom > 0".into(),
            ));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(HarnessError::Config("sigma must be positive".into()));
        }
        if !(0.0..2.0).contains(&self.q) {
            return Err(HarnessError::Config("q must lie in [0,2)".into()));
        }
        for &r in &self.r_values {
            if r == 0 {
                return Err(HarnessError::Config("ranks must be positive".into()));
            }
            for &s in &self.s_values {
                if s == 0 || s > self.p || r > s {
                    return Err(HarnessError::Config(format!(
                        "grid cell (r={r}, s={s}) violates r <= s <= p = {}",
                        self.p
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses the flat `key=value` config format: UTF-8 text, one key per
    /// line, `#` starts a comment, list values comma-separated. Keys not
    /// present keep the reference-protocol defaults.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut spec = Self::benchmark_default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                HarnessError::Config(format!("line {}: bad {what}: {value:?}", lineno + 1))
            };
            match key {
                "n" => spec.n = value.parse().map_err(|_| bad("n"))?,
                "p" => spec.p = value.parse().map_err(|_| bad("p"))?,
                "r_values" => spec.r_values = parse_list(value).ok_or_else(|| bad("r_values"))?,
                "s_values" => spec.s_values = parse_list(value).ok_or_else(|| bad("s_values"))?,
                "lambda_top" => spec.lambda_top = value.parse().map_err(|_| bad("lambda_top"))?,
                "lambda_bottom" => {
                    spec.lambda_bottom = value.parse().map_err(|_| bad("lambda_bottom"))?
                }
                "q" => spec.q = value.parse().map_err(|_| bad("q"))?,
                "sigma" => spec.sigma = value.parse().map_err(|_| bad("sigma"))?,
                "estimators" => {
                    spec.estimators = value
                        .split(',')
                        .map(|tok| tok.parse())
                        .collect::<Result<Vec<_>>>()?;
                }
                "reps" => spec.reps = value.parse().map_err(|_| bad("reps"))?,
                "master_seed" => {
                    spec.master_seed = value.parse().map_err(|_| bad("master_seed"))?
                }
                "row_variance_profile" => {
                    spec.row_variance_profile = value.parse()?;
                }
                other => {
                    return Err(HarnessError::Config(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_list(value: &str) -> Option<Vec<usize>> {
    let items: Option<Vec<usize>> = value
        .split(',')
        .map(|tok| tok.trim().parse().ok())
        .collect();
    items.filter(|v: &Vec<usize>| !v.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_with_comments_and_defaults() {
        let text = "\
# reduced run
n = 500
p=1000
s_values = 20, 40, 60   # sparsity grid
reps=20
estimators=regspca,regular_pca
";
        let spec = ExperimentSpec::from_key_values(text).unwrap();
        assert_eq!(spec.n, 500);
        assert_eq!(spec.p, 1000);
        assert_eq!(spec.s_values, vec![20, 40, 60]);
        assert_eq!(spec.reps, 20);
        assert_eq!(
            spec.estimators,
            vec![EstimatorKind::Regspca, EstimatorKind::RegularPca]
        );
        // Defaults kept.
        assert_eq!(spec.r_values, vec![1, 5, 10, 20]);
        assert_eq!(spec.lambda_top, 20.0);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_grids() {
        assert!(ExperimentSpec::from_key_values("bogus=1").is_err());
        assert!(ExperimentSpec::from_key_values("n").is_err());
        // r > s is not a valid cell.
        let err = ExperimentSpec::from_key_values("r_values=30\ns_values=20").unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
        assert!(ExperimentSpec::from_key_values("estimators=magic").is_err());
    }

    #[test]
    fn validation_checks_spike_ordering() {
        let mut spec = ExperimentSpec::benchmark_default();
        spec.lambda_bottom = 30.0;
        assert!(spec.validate().is_err());
    }
}
