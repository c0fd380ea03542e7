//! Deterministic sampling, Gaussian special functions and the
//! statistical tests shared by the rest of the crate.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod erf;
mod kolmogorov;
mod stream;

pub use kolmogorov::{kolmogorov_sf, ks_two_sample_statistic};
pub use stream::RandomStream;

/// Mean and variance of a Gaussian distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be >= 0, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }
}

/// Summary moments of a sample.
///
/// `variance` is the unbiased (n-1) estimator and is absent for fewer
/// than two observations; `skewness` and `excess_kurtosis` need at
/// least four observations and a nonzero second moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Moment and goodness-of-fit diagnostics against a fitted Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_p_vs_fitted_gaussian: f64,
}

/// Draw `n` values of `g* = g·sigma + mu`. A zero-variance distribution
/// collapses to its mean and consumes no randomness.
pub fn sample_gaussian<R: Rng>(params: &GaussianParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(params.variance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be >= 0, got {}",
            params.variance
        )));
    }
    if params.variance == 0.0 {
        return Ok(vec![params.mean; n]);
    }
    let normal = Normal::new(params.mean, params.variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((0..n).map(|_| normal.sample(rng)).collect())
}

/// CDF of a zero-mean Gaussian with the given variance,
/// `1/2 (1 + erf(x / sqrt(2 sigma^2)))`. Absolute error below 1e-12.
pub fn gaussian_cdf(x: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be > 0, got {variance}"
        )));
    }
    Ok(0.5 * (1.0 + erf::erf(x / (2.0 * variance).sqrt())))
}

/// Tail function of the standard Gaussian, `Q(x) = Pr(g > x)`.
/// Evaluated through `erfc` so the far tail keeps relative accuracy.
pub fn q_function(x: f64) -> f64 {
    0.5 * erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Two-pass sample moments.
pub fn empirical_stats(samples: &[f64]) -> Result<SampleStats> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = samples.len();
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        min = min.min(x);
        max = max.max(x);
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = (n >= 2).then(|| m2 * nf / (nf - 1.0));
    let shaped = n >= 4 && m2 > 0.0;
    Ok(SampleStats {
        count: n,
        mean,
        variance,
        skewness: shaped.then(|| m3 / m2.powf(1.5)),
        excess_kurtosis: shaped.then(|| m4 / (m2 * m2) - 3.0),
        min,
        max,
    })
}

/// One-sample KS test against Uniform[0,1] with the asymptotic
/// Kolmogorov p-value.
pub fn ks_uniformity_test(samples: &[f64]) -> Result<KsTest> {
    if samples.len() < 10 {
        return Err(Error::InsufficientSamples {
            needed: 10,
            got: samples.len(),
        });
    }
    if samples.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain(
            "uniformity test requires values in [0, 1]".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let statistic = kolmogorov::ks_statistic_sorted(&sorted);
    let p_value = kolmogorov_sf((samples.len() as f64).sqrt() * statistic);
    Ok(KsTest { statistic, p_value })
}

/// Two-sample KS test with the asymptotic p-value at the effective
/// sample size `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample_test(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let statistic = ks_two_sample_statistic(a, b);
    let ne = a.len() as f64 * b.len() as f64 / (a.len() + b.len()) as f64;
    let p_value = kolmogorov_sf(ne.sqrt() * statistic);
    Ok(KsTest { statistic, p_value })
}

/// Fit a Gaussian to the sample (moment matching) and report shape
/// diagnostics plus the KS p-value against the fitted distribution.
pub fn normality_check(samples: &[f64]) -> Result<NormalityReport> {
    if samples.len() < 100 {
        return Err(Error::InsufficientSamples {
            needed: 100,
            got: samples.len(),
        });
    }
    let stats = empirical_stats(samples)?;
    let variance = stats.variance.unwrap_or(0.0);
    if variance <= 0.0 {
        return Err(Error::InsufficientVariation(
            "sample variance is zero; cannot fit a Gaussian".into(),
        ));
    }
    let mut transformed: Vec<f64> = samples
        .iter()
        .map(|&x| gaussian_cdf(x - stats.mean, variance))
        .collect::<Result<_>>()?;
    transformed.sort_by(f64::total_cmp);
    let statistic = kolmogorov::ks_statistic_sorted(&transformed);
    let p = kolmogorov_sf((samples.len() as f64).sqrt() * statistic);
    Ok(NormalityReport {
        skewness: stats.skewness.unwrap_or(0.0),
        excess_kurtosis: stats.excess_kurtosis.unwrap_or(0.0),
        ks_p_vs_fitted_gaussian: p,
    })
}
