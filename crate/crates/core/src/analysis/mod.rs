//! Channel-conversion and performance metrics: normality diagnostics of
//! the converted logical channel, norm-concentration statistics of
//! high-dimensional Gaussian blocks, capacities, reconciliation
//! efficiency and the key-rate formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconciliation::{Alphabet, ReconcileOutcome};
use crate::stats::{
    empirical_stats, normality_check, sample_gaussian, GaussianParams, RandomStream,
};

mod capacity;
mod special;

pub use capacity::biawgn_capacity;
pub use special::{beta as beta_function, ln_gamma};

/// Empirical Lyapunov-condition ratio for one block dimension:
/// `sum_i E|x_i|^(2+L) / (sqrt(sum_i var x_i))^(2+L)`, estimated
/// per unit position over blocks of `d` consecutive samples.
///
/// For i.i.d. unit noise the ratio scales as `d^(-L/2)`; decay across
/// d certifies the condition driving the block-noise normality.
pub fn lyapunov_ratio(unit_noise: &[f64], d: usize, ell: f64) -> Result<f64> {
    if !(ell > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lyapunov exponent must be > 0, got {ell}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if unit_noise.len() < 1000 {
        return Err(Error::InsufficientSamples {
            needed: 1000,
            got: unit_noise.len(),
        });
    }
    if !unit_noise.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch(format!(
            "{} samples do not tile into blocks of {d}",
            unit_noise.len()
        )));
    }
    let blocks = unit_noise.len() / d;
    if blocks < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2 * d,
            got: unit_noise.len(),
        });
    }
    let nf = blocks as f64;
    let mut moment_sum = 0.0;
    let mut variance_sum = 0.0;
    for i in 0..d {
        let mut mean = 0.0;
        for j in 0..blocks {
            mean += unit_noise[j * d + i];
        }
        mean /= nf;
        let mut abs_moment = 0.0;
        let mut sq = 0.0;
        for j in 0..blocks {
            let c = unit_noise[j * d + i] - mean;
            abs_moment += c.abs().powf(2.0 + ell);
            sq += c * c;
        }
        moment_sum += abs_moment / nf;
        variance_sum += sq / (nf - 1.0);
    }
    Ok(moment_sum / variance_sum.sqrt().powf(2.0 + ell))
}

/// Block-noise sample for one dimension, as fed to
/// [`clt_convergence_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct CltGroup {
    pub dimension: usize,
    pub block_noise: Vec<f64>,
    /// Per-unit noise, block-major; enables the scaled-variance
    /// comparison against the physical channel.
    pub unit_noise: Option<Vec<f64>>,
}

/// Normality diagnostics of the block noise at one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltGroupReport {
    pub dimension: usize,
    pub blocks: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub ks_p_vs_fitted_gaussian: Option<f64>,
    /// `d * var(unit noise)`, the block-variance reconstruction from
    /// unit level, when unit noise was supplied.
    pub scaled_unit_variance: Option<f64>,
    /// Physical second-channel noise variance, echoed for comparison.
    pub physical_noise: Option<f64>,
    /// True when the block noise is identically zero (noiseless run).
    pub degenerate: bool,
}

/// Per-dimension normality diagnostics of the converted logical
/// channel. Needs at least 1e4 blocks per dimension.
pub fn clt_convergence_report(
    groups: &[CltGroup],
    physical_noise: Option<f64>,
) -> Result<Vec<CltGroupReport>> {
    groups
        .iter()
        .map(|g| {
            if g.block_noise.len() < 10_000 {
                return Err(Error::InsufficientSamples {
                    needed: 10_000,
                    got: g.block_noise.len(),
                });
            }
            let stats = empirical_stats(&g.block_noise)?;
            let variance = stats.variance.unwrap_or(0.0);
            let degenerate = variance == 0.0;
            let diag = if degenerate {
                None
            } else {
                Some(normality_check(&g.block_noise)?)
            };
            let scaled_unit_variance = g.unit_noise.as_ref().map(|units| {
                let s = empirical_stats(units).expect("unit noise nonempty");
                g.dimension as f64 * s.variance.unwrap_or(0.0)
            });
            Ok(CltGroupReport {
                dimension: g.dimension,
                blocks: g.block_noise.len(),
                mean: stats.mean,
                variance,
                skewness: diag.map(|d| d.skewness),
                excess_kurtosis: diag.map(|d| d.excess_kurtosis),
                ks_p_vs_fitted_gaussian: diag.map(|d| d.ks_p_vs_fitted_gaussian),
                scaled_unit_variance,
                physical_noise,
                degenerate,
            })
        })
        .collect()
}

/// Norm statistics of d-dimensional Gaussian blocks.
///
/// The analytic fields describe the un-normalized block norm: the
/// approximate mean `sigma sqrt(d - 1/2)`, the exact mean
/// `sqrt(2) Γ((d+1)/2)/Γ(d/2) sigma` and the exact variance
/// `d sigma^2 - 2 pi sigma^2 / B(d/2, 1/2)^2`. The empirical fields
/// describe the norm of blocks normalized by `sqrt(d sigma^2)`, which
/// concentrates at one as `d` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub dimension: usize,
    pub mean_norm: f64,
    pub mean_norm_exact: f64,
    pub variance_bound: f64,
    pub empirical_mean_norm: f64,
    pub empirical_variance: f64,
    pub samples: usize,
}

impl NormStats {
    /// Exact mean of the normalized norm, for comparison with
    /// `empirical_mean_norm`.
    pub fn normalized_mean_exact(&self, sigma_sq: f64) -> f64 {
        self.mean_norm_exact / (self.dimension as f64 * sigma_sq).sqrt()
    }
}

pub fn normalized_norm_stats(
    d: usize,
    sigma_sq: f64,
    n_samples: usize,
    stream: RandomStream,
) -> Result<NormStats> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be > 0, got {sigma_sq}"
        )));
    }
    if n_samples < 1000 {
        return Err(Error::InsufficientSamples {
            needed: 1000,
            got: n_samples,
        });
    }
    let sigma = sigma_sq.sqrt();
    let df = d as f64;
    let mean_norm = sigma * (df - 0.5).sqrt();
    let gamma_ratio = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp();
    let mean_norm_exact = std::f64::consts::SQRT_2 * gamma_ratio * sigma;
    let b = beta_function(df / 2.0, 0.5);
    let variance_bound = df * sigma_sq - 2.0 * std::f64::consts::PI * sigma_sq / (b * b);

    let mut rng = stream.rng();
    let params = GaussianParams::new(0.0, sigma_sq)?;
    let scale = (df * sigma_sq).sqrt();
    let mut norms = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let block = sample_gaussian(&params, d, &mut rng)?;
        let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
        norms.push(norm / scale);
    }
    let stats = empirical_stats(&norms)?;
    Ok(NormStats {
        dimension: d,
        mean_norm,
        mean_norm_exact,
        variance_bound,
        empirical_mean_norm: stats.mean,
        empirical_variance: stats.variance.unwrap_or(0.0),
        samples: n_samples,
    })
}

/// The sharpening Gaussian the norm distribution approaches,
/// `(sqrt(d)/sqrt(pi)) exp(-d (x - r)^2)`. Integrates to one.
pub fn dirac_density(x: f64, d: usize, r: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let df = d as f64;
    Ok((df / std::f64::consts::PI).sqrt() * (-df * (x - r) * (x - r)).exp())
}

/// Eight raw-data units arranged as octonion coefficients, the d = 8
/// ceiling of the multidimensional approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Octonion {
    pub re: f64,
    pub im: [f64; 7],
}

pub fn octonion_pack(units: &[f64]) -> Result<Octonion> {
    if units.len() != 8 {
        return Err(Error::InvalidParameter(format!(
            "octonion packing needs exactly 8 units, got {}",
            units.len()
        )));
    }
    Ok(Octonion {
        re: units[0],
        im: [
            units[1], units[2], units[3], units[4], units[5], units[6], units[7],
        ],
    })
}

impl Octonion {
    pub fn unpack(&self) -> [f64; 8] {
        [
            self.re, self.im[0], self.im[1], self.im[2], self.im[3], self.im[4], self.im[5],
            self.im[6],
        ]
    }
}

/// SNR of the physical channel: modulation variance over the second
/// channel's noise variance.
pub fn snr_physical(modulation_variance: f64, n2_variance: f64) -> Result<f64> {
    if !(n2_variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "channel noise variance must be > 0, got {n2_variance}"
        )));
    }
    Ok(modulation_variance / n2_variance)
}

/// `I(A:B) = 1/2 log2(1 + SNR)` bits per pulse.
pub fn mutual_information(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snr must be >= 0, got {snr}"
        )));
    }
    Ok(0.5 * (1.0 + snr).log2())
}

/// Converted-channel metrics for one reconciliation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalChannelReport {
    pub dimension: usize,
    pub sigma_delta_sq: f64,
    pub physical_noise: f64,
    pub snr_physical: f64,
    pub snr_logical: f64,
    pub beta: f64,
    pub biawgn_capacity: f64,
    pub awgn_capacity: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub ks_p_vs_fitted_gaussian: Option<f64>,
}

/// Map a reconciliation run onto the equivalent binary-input channel
/// and score the conversion.
///
/// The decoder faces signal amplitude `|a-b|/2` in block noise of
/// variance `sigma_delta_sq`, so the logical SNR is their ratio of
/// squares; the efficiency is the logical channel's binary-input
/// capacity over the physical channel's Gaussian mutual information,
/// clamped into [0, 1]. A noiseless run scores `beta = 1` by
/// convention.
pub fn logical_channel_report(
    outcome: &ReconcileOutcome,
    alphabet: &Alphabet,
    dimension: usize,
    modulation_variance: f64,
    physical_noise: f64,
) -> Result<LogicalChannelReport> {
    if outcome.report.blocks == 0 || outcome.noise.block_noise.is_empty() {
        return Err(Error::InvalidInput(
            "reconciliation output carries no blocks".into(),
        ));
    }
    let sigma_delta_sq = outcome.noise.sigma_delta_sq;
    let half_gap = 0.5 * (alphabet.a - alphabet.b).abs();

    let diag = if sigma_delta_sq > 0.0 && outcome.noise.block_noise.len() >= 100 {
        Some(normality_check(&outcome.noise.block_noise)?)
    } else {
        None
    };

    if physical_noise == 0.0 || sigma_delta_sq == 0.0 {
        return Ok(LogicalChannelReport {
            dimension,
            sigma_delta_sq,
            physical_noise,
            snr_physical: f64::INFINITY,
            snr_logical: f64::INFINITY,
            beta: 1.0,
            biawgn_capacity: 1.0,
            awgn_capacity: f64::INFINITY,
            skewness: diag.map(|d| d.skewness),
            excess_kurtosis: diag.map(|d| d.excess_kurtosis),
            ks_p_vs_fitted_gaussian: diag.map(|d| d.ks_p_vs_fitted_gaussian),
        });
    }

    let snr_phys = snr_physical(modulation_variance, physical_noise)?;
    let snr_logical = half_gap * half_gap / sigma_delta_sq;
    let cap_logical = biawgn_capacity(snr_logical)?;
    let cap_physical = mutual_information(snr_phys)?;
    let beta = if cap_physical > 0.0 {
        (cap_logical / cap_physical).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LogicalChannelReport {
        dimension,
        sigma_delta_sq,
        physical_noise,
        snr_physical: snr_phys,
        snr_logical,
        beta,
        biawgn_capacity: cap_logical,
        awgn_capacity: cap_physical,
        skewness: diag.map(|d| d.skewness),
        excess_kurtosis: diag.map(|d| d.excess_kurtosis),
        ks_p_vs_fitted_gaussian: diag.map(|d| d.ks_p_vs_fitted_gaussian),
    })
}

/// Excess noise from modulation variance and transmittance:
/// `(sigma_w^2 - 1)(1 - T)/T`.
pub fn excess_noise(modulation_variance: f64, transmittance: f64) -> Result<f64> {
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmittance must be in (0, 1], got {transmittance}"
        )));
    }
    Ok((modulation_variance - 1.0) * (1.0 - transmittance) / transmittance)
}

/// Which entropy the modulation term `H(sigma_w^2)` of the key-rate
/// formula uses. The choice shifts absolute rates, never the
/// T-dependence; every output records it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyConvention {
    /// Differential entropy of a Gaussian, `1/2 log2(2 pi e sigma^2)`.
    DifferentialGaussian,
    /// Bosonic entropy `g((V-1)/2)` with
    /// `g(x) = (x+1) log2(x+1) - x log2 x`.
    BosonicG,
}

impl EntropyConvention {
    pub fn modulation_entropy(&self, variance: f64) -> Result<f64> {
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be > 0, got {variance}"
            )));
        }
        match self {
            EntropyConvention::DifferentialGaussian => Ok(0.5
                * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2()),
            EntropyConvention::BosonicG => {
                let x = (variance - 1.0) / 2.0;
                if x < 0.0 {
                    return Err(Error::Domain(format!(
                        "bosonic entropy needs variance >= 1, got {variance}"
                    )));
                }
                if x == 0.0 {
                    return Ok(0.0);
                }
                Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EntropyConvention::DifferentialGaussian => "differential-gaussian",
            EntropyConvention::BosonicG => "bosonic-g",
        }
    }
}

/// Inputs of the key-rate formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateInputs {
    pub transmittance: f64,
    pub modulation_variance: f64,
    pub excess_noise: f64,
    pub entropy_convention: EntropyConvention,
    pub fiber_loss_db_per_km: f64,
}

/// Secret key rate of the two-way protocol with homodyne measurements
/// and reverse reconciliation:
/// `R = 1/2 log2((1 - T + T^2)/(1 - T)^2) - H(sigma_w^2)`.
pub fn secret_key_rate(inputs: &KeyRateInputs) -> Result<f64> {
    let t = inputs.transmittance;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "key-rate formula needs transmittance in (0, 1), got {t}"
        )));
    }
    let channel_term = 0.5 * ((1.0 - t + t * t) / ((1.0 - t) * (1.0 - t))).log2();
    let entropy = inputs
        .entropy_convention
        .modulation_entropy(inputs.modulation_variance)?;
    Ok(channel_term - entropy)
}

/// Fiber transmittance at a distance: `T = 10^(-loss L / 10)`.
pub fn distance_to_transmittance(distance_km: f64, loss_db_per_km: f64) -> f64 {
    debug_assert!(loss_db_per_km >= 0.0 && distance_km >= 0.0);
    10f64.powf(-loss_db_per_km * distance_km / 10.0)
}

#[cfg(test)]
mod tests;
