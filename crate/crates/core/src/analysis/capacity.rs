//! Capacity of the binary-input AWGN channel by quadrature.

use crate::error::{Error, Result};

/// `log(1 + e^t)` without overflow.
fn ln_1p_exp(t: f64) -> f64 {
    if t > 36.0 {
        t
    } else if t < -745.0 {
        0.0
    } else {
        t.exp().ln_1p()
    }
}

/// Capacity in bits per channel use of a binary-input AWGN channel at
/// the given SNR (symbol energy over noise variance):
/// `C = 1 - E_z[log2(1 + exp(-2 snr - 2 sqrt(snr) z))]`, `z ~ N(0,1)`.
///
/// Composite Simpson over z in [-40, 40] with 2^15 panels keeps the
/// absolute error well below 1e-9 across the whole SNR axis, inside
/// the 1e-6 budget.
pub fn biawgn_capacity(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snr must be >= 0, got {snr}"
        )));
    }
    if snr == 0.0 {
        return Ok(0.0);
    }
    if snr.is_infinite() {
        return Ok(1.0);
    }
    let sqrt_snr = snr.sqrt();
    let ln2 = std::f64::consts::LN_2;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| -> f64 {
        norm * (-0.5 * z * z).exp() * ln_1p_exp(-2.0 * snr - 2.0 * sqrt_snr * z) / ln2
    };
    const Z_MAX: f64 = 40.0;
    const PANELS: usize = 1 << 15;
    let h = 2.0 * Z_MAX / PANELS as f64;
    let mut acc = f(-Z_MAX) + f(Z_MAX);
    for k in 1..PANELS {
        let z = -Z_MAX + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 * f(z) } else { 2.0 * f(z) };
    }
    let expected_loss = acc * h / 3.0;
    Ok((1.0 - expected_loss).clamp(0.0, 1.0))
}
