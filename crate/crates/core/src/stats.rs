//! Standard errors, covariance matrices and Gaussianity diagnostics.
//!
//! Every sum goes through [`pairwise_sum`] over data in its given order, so
//! results depend only on the input sequence.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`normality_diagnostics`].
pub const MIN_NORMALITY_SAMPLES: usize = 200;

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub replications: usize,
}

impl EstimateWithError {
    pub fn new(value: f64, std_error: f64, replications: usize) -> Self {
        Self {
            value,
            std_error,
            replications,
        }
    }

    /// A known constant: zero error.
    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 1)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.value * c, self.std_error * c.abs(), self.replications)
    }

    /// `self - other` for independent estimates.
    pub fn minus(&self, other: &Self) -> Self {
        Self::new(
            self.value - other.value,
            combined_se(self.std_error, other.std_error),
            self.replications.min(other.replications),
        )
    }

    /// `|self - other| <= k * sqrt(se1^2 + se2^2)`.
    pub fn agrees_with(&self, other: &Self, k: f64) -> bool {
        (self.value - other.value).abs() <= k * combined_se(self.std_error, other.std_error)
    }

    /// Distance to `other` in units of the combined standard error.
    pub fn z_score(&self, other: &Self) -> f64 {
        let se = combined_se(self.std_error, other.std_error);
        if se == 0.0 {
            if self.value == other.value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - other.value) / se
        }
    }
}

pub fn combined_se(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Cascade summation: round-off grows like `log n` rather than `n`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

fn require(needed: usize, got: usize) -> Result<()> {
    if got < needed {
        Err(Error::TooFewSamples { needed, got })
    } else {
        Ok(())
    }
}

/// Sample mean and `sd / sqrt(R)`.
pub fn mean_and_se(xs: &[f64]) -> Result<EstimateWithError> {
    require(2, xs.len())?;
    let r = xs.len() as f64;
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (r - 1.0);
    Ok(EstimateWithError::new(m, (var / r).sqrt(), xs.len()))
}

/// Unbiased sample covariance with its delta-method standard error: the
/// estimator is asymptotically the mean of `(x - mx)(y - my)`, so its SE is
/// the standard deviation of those products over `sqrt(R)`.
pub fn covariance(x: &[f64], y: &[f64]) -> Result<EstimateWithError> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    require(2, x.len())?;
    let r = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let psi: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let value = pairwise_sum(&psi) / (r - 1.0);
    let m_psi = pairwise_sum(&psi) / r;
    let dev: Vec<f64> = psi.iter().map(|p| (p - m_psi) * (p - m_psi)).collect();
    let var_psi = pairwise_sum(&dev) / (r - 1.0);
    Ok(EstimateWithError::new(value, (var_psi / r).sqrt(), x.len()))
}

/// Symmetric covariance matrix with per-entry standard errors (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub dim: usize,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub replications: usize,
}

impl CovarianceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> EstimateWithError {
        EstimateWithError::new(self.get(i, j), self.std_errors[i * self.dim + j], self.replications)
    }
}

fn columns(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = samples.first().map_or(0, |s| s.len());
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok((0..dim).map(|k| samples.iter().map(|s| s[k]).collect()).collect())
}

pub fn covariance_matrix(samples: &[Vec<f64>]) -> Result<CovarianceMatrix> {
    require(2, samples.len())?;
    let cols = columns(samples)?;
    let dim = cols.len();
    let mut values = vec![0.0; dim * dim];
    let mut std_errors = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let c = covariance(&cols[i], &cols[j])?;
            for (a, b) in [(i, j), (j, i)] {
                values[a * dim + b] = c.value;
                std_errors[a * dim + b] = c.std_error;
            }
        }
    }
    Ok(CovarianceMatrix {
        dim,
        values,
        std_errors,
        replications: samples.len(),
    })
}

/// Moment and quantile diagnostics of a vector sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub replications: usize,
    pub skewness: Vec<f64>,
    /// Asymptotic SE `sqrt(6 / R)`.
    pub skewness_se: f64,
    pub excess_kurtosis: Vec<f64>,
    /// Asymptotic SE `sqrt(24 / R)`.
    pub kurtosis_se: f64,
    /// Per coordinate `R (S^2 / 6 + K^2 / 24)`; about chi-square(2) under
    /// normality.
    pub omnibus: Vec<f64>,
    /// Correlation between sorted data and normal quantiles.
    pub qq_correlation: Vec<f64>,
    /// Coordinates with zero variance (their moments are reported as 0).
    pub degenerate: Vec<bool>,
    /// Frobenius distance between sample covariance and target, if given.
    pub covariance_distance: Option<EstimateWithError>,
}

impl NormalityReport {
    pub fn coordinate_passes(&self, k: usize, se_multiplier: f64, qq_min: f64) -> bool {
        !self.degenerate[k]
            && self.skewness[k].abs() < se_multiplier * self.skewness_se
            && self.excess_kurtosis[k].abs() < se_multiplier * self.kurtosis_se
            && self.qq_correlation[k] > qq_min
    }

    pub fn passes(&self, se_multiplier: f64, qq_min: f64) -> bool {
        (0..self.skewness.len()).all(|k| self.coordinate_passes(k, se_multiplier, qq_min))
    }
}

struct Moments {
    skew: f64,
    kurt: f64,
    degenerate: bool,
}

fn moments(xs: &[f64]) -> Moments {
    let m = mean(xs);
    let pow = |k: i32| mean(&xs.iter().map(|x| (x - m).powi(k)).collect::<Vec<_>>());
    let m2 = pow(2);
    if m2 <= 1e-24 * m.abs().max(1.0).powi(2) {
        return Moments {
            skew: 0.0,
            kurt: 0.0,
            degenerate: true,
        };
    }
    Moments {
        skew: pow(3) / m2.powf(1.5),
        kurt: pow(4) / (m2 * m2) - 3.0,
        degenerate: false,
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy = pairwise_sum(&x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let sxx = pairwise_sum(&x.iter().map(|a| (a - mx) * (a - mx)).collect::<Vec<_>>());
    let syy = pairwise_sum(&y.iter().map(|b| (b - my) * (b - my)).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Blom plotting positions `(i - 3/8) / (R + 1/4)` mapped through the normal
/// quantile function.
pub fn normal_scores(r: usize) -> Vec<f64> {
    let normal = Normal::standard();
    (1..=r)
        .map(|i| normal.inverse_cdf((i as f64 - 0.375) / (r as f64 + 0.25)))
        .collect()
}

pub fn qq_correlation(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    pearson(&sorted, &normal_scores(xs.len()))
}

fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Number of bootstrap resamples for the covariance distance.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Skewness, excess kurtosis, omnibus and QQ correlation per coordinate, plus
/// the distance of the sample covariance to `target` (row-major) with a
/// bootstrap SE drawn from `rng`.
pub fn normality_diagnostics<R: Rng + ?Sized>(
    samples: &[Vec<f64>],
    target: Option<&[f64]>,
    rng: &mut R,
) -> Result<NormalityReport> {
    require(MIN_NORMALITY_SAMPLES, samples.len())?;
    let cols = columns(samples)?;
    let r = samples.len();
    let mut report = NormalityReport {
        replications: r,
        skewness: Vec::new(),
        skewness_se: (6.0 / r as f64).sqrt(),
        excess_kurtosis: Vec::new(),
        kurtosis_se: (24.0 / r as f64).sqrt(),
        omnibus: Vec::new(),
        qq_correlation: Vec::new(),
        degenerate: Vec::new(),
        covariance_distance: None,
    };
    for col in &cols {
        let m = moments(col);
        report.skewness.push(m.skew);
        report.excess_kurtosis.push(m.kurt);
        report
            .omnibus
            .push(r as f64 * (m.skew * m.skew / 6.0 + m.kurt * m.kurt / 24.0));
        report
            .qq_correlation
            .push(if m.degenerate { 0.0 } else { qq_correlation(col) });
        report.degenerate.push(m.degenerate);
    }
    if let Some(target) = target {
        let dim = cols.len();
        if target.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: target.len(),
            });
        }
        let observed = frobenius(&covariance_matrix(samples)?.values, target);
        let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        let mut resample = Vec::with_capacity(r);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            resample.clear();
            resample.extend((0..r).map(|_| samples[rng.random_range(0..r)].clone()));
            boot.push(frobenius(&covariance_matrix(&resample)?.values, target));
        }
        let spread = mean_and_se(&boot)?;
        let sd = spread.std_error * (BOOTSTRAP_RESAMPLES as f64).sqrt();
        report.covariance_distance = Some(EstimateWithError::new(observed, sd, r));
    }
    Ok(report)
}

/// Bootstrap standard error of `statistic` over resamples of `xs`.
pub fn bootstrap_se<R: Rng + ?Sized>(
    xs: &[f64],
    resamples: usize,
    rng: &mut R,
    statistic: impl Fn(&[f64]) -> f64,
) -> f64 {
    let r = xs.len();
    let mut buf = vec![0.0; r];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = xs[rng.random_range(0..r)];
            }
            statistic(&buf)
        })
        .collect();
    let m = mean(&stats);
    let dev: Vec<f64> = stats.iter().map(|s| (s - m) * (s - m)).collect();
    (pairwise_sum(&dev) / (resamples as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::MasterSeed;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    #[test]
    fn mean_and_se_examples() {
        let e = mean_and_se(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
        let e = mean_and_se(&[0.0, 2.0]).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 1.0));
        assert!(mean_and_se(&[3.0]).is_err());
    }

    #[test]
    fn gaussian_mean_is_near_zero() {
        let mut rng = MasterSeed(1).aux(0);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = mean_and_se(&xs).unwrap();
        assert!(e.value.abs() < 3.0 / (1e5f64).sqrt());
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs = vec![0.1; 1_000_000];
        assert!((pairwise_sum(&xs) - 100_000.0).abs() < 1e-12 * 100_000.0);
    }

    #[test]
    fn covariance_matrix_examples() {
        let same = vec![vec![1.0, 2.0]; 10];
        let c = covariance_matrix(&same).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));

        let mut rng = MasterSeed(2).aux(0);
        let coins: Vec<Vec<f64>> = (0..100_000)
            .map(|_| {
                let a = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
                vec![a, b]
            })
            .collect();
        let c = covariance_matrix(&coins).unwrap();
        let off = c.entry(0, 1);
        assert!(off.value.abs() < 3.0 * off.std_error);
        assert_eq!(c.get(0, 1), c.get(1, 0));

        let scaled: Vec<Vec<f64>> = coins.iter().map(|v| vec![3.0 * v[0], 3.0 * v[1]]).collect();
        let s = covariance_matrix(&scaled).unwrap();
        for k in 0..4 {
            assert!((s.values[k] - 9.0 * c.values[k]).abs() < 1e-12);
        }
        assert!(covariance_matrix(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn normality_on_gaussian_and_exponential() {
        let mut rng = MasterSeed(3).aux(0);
        let r = 10_000;
        let gauss: Vec<Vec<f64>> = (0..r).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
        let rep = normality_diagnostics(&gauss, None, &mut rng).unwrap();
        assert!(rep.skewness[0].abs() < 3.0 * (6.0 / r as f64).sqrt());
        assert!(rep.excess_kurtosis[0].abs() < 3.0 * (24.0 / r as f64).sqrt());
        assert!(rep.qq_correlation[0] > 0.999);

        let expo: Vec<Vec<f64>> = (0..r).map(|_| vec![Exp1.sample(&mut rng)]).collect();
        let rep = normality_diagnostics(&expo, None, &mut rng).unwrap();
        assert!((rep.skewness[0] - 2.0).abs() < 0.3);
        assert!(rep.qq_correlation[0] < 0.99);
    }

    #[test]
    fn degenerate_sample_is_flagged() {
        let flat = vec![vec![4.0]; 300];
        let rep = normality_diagnostics(&flat, Some(&[0.0]), &mut MasterSeed(0).aux(0)).unwrap();
        assert!(rep.degenerate[0]);
        assert!(!rep.passes(3.0, 0.99));
        assert_eq!(rep.covariance_distance.unwrap().value, 0.0);
        assert!(normality_diagnostics(&flat[..10], None, &mut MasterSeed(0).aux(0)).is_err());
    }

    #[test]
    fn covariance_distance_to_truth_is_small() {
        let mut rng = MasterSeed(4).aux(0);
        let xs: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                vec![a, a + b]
            })
            .collect();
        let target = [1.0, 1.0, 1.0, 2.0];
        let rep = normality_diagnostics(&xs, Some(&target), &mut rng).unwrap();
        let d = rep.covariance_distance.unwrap();
        assert!(d.std_error > 0.0);
        assert!(d.value < 4.0 * d.std_error + 0.05);
    }
}
