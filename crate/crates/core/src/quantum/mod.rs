//! Phase-space simulation of the two-way prepare-and-measure protocol
//! with reverse reconciliation.
//!
//! Bob prepares a Gaussian-modulated coherent state and sends it through
//! the first channel; Alice couples it with her own state on a
//! beamsplitter, homodynes one mode and returns the other through the
//! second channel; Bob homodynes and calibrates with his prepared
//! quadrature. Rounds where the two parties measured different
//! quadratures are sifted out. Only the second channel's noise survives
//! on the raw-data level: per sifted round `X' = X + delta` with
//! `delta` the second channel's noise in the measured quadrature.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::RandomStream;

mod io;
pub use io::{read_session_csv, write_session_csv, SessionMeta};

/// Gaussian modulation variance in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelLabel {
    N1,
    N2,
}

/// Additive Gaussian noise channel acting on a phase-space point.
///
/// Without a `scale_transform` the noise is isotropic with
/// `noise_variance` per quadrature. With one, the noise is `A·g` for a
/// standard 2D Gaussian `g`, so its covariance is `A·Aᵀ` and
/// `noise_variance` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub noise_variance: f64,
    pub scale_transform: Option<[[f64; 2]; 2]>,
    pub label: ChannelLabel,
}

impl ChannelModel {
    pub fn isotropic(label: ChannelLabel, noise_variance: f64) -> Result<Self> {
        if !(noise_variance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "channel noise variance must be >= 0, got {noise_variance}"
            )));
        }
        Ok(Self {
            noise_variance,
            scale_transform: None,
            label,
        })
    }

    pub fn elliptical(label: ChannelLabel, scale_transform: [[f64; 2]; 2]) -> Self {
        Self {
            noise_variance: 0.0,
            scale_transform: Some(scale_transform),
            label,
        }
    }

    pub fn noiseless(label: ChannelLabel) -> Self {
        Self {
            noise_variance: 0.0,
            scale_transform: None,
            label,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.scale_transform.is_none() && self.noise_variance == 0.0
    }

    /// Noise covariance matrix: `A·Aᵀ` in elliptical mode, `sigma^2·I`
    /// otherwise.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        match self.scale_transform {
            Some(a) => {
                let c00 = a[0][0] * a[0][0] + a[0][1] * a[0][1];
                let c01 = a[0][0] * a[1][0] + a[0][1] * a[1][1];
                let c11 = a[1][0] * a[1][0] + a[1][1] * a[1][1];
                [[c00, c01], [c01, c11]]
            }
            None => [[self.noise_variance, 0.0], [0.0, self.noise_variance]],
        }
    }

    /// Average per-quadrature noise variance, `tr(cov)/2`. Equals
    /// `noise_variance` for isotropic channels.
    pub fn mean_quadrature_variance(&self) -> f64 {
        let c = self.covariance();
        0.5 * (c[0][0] + c[1][1])
    }

    /// One noise draw `(dx, dp)`. Noiseless channels consume no
    /// randomness.
    pub fn draw_noise(&self, rng: &mut ChaCha12Rng) -> (f64, f64) {
        if self.is_noiseless() {
            return (0.0, 0.0);
        }
        match self.scale_transform {
            Some(a) => {
                let g0: f64 = standard_normal(rng);
                let g1: f64 = standard_normal(rng);
                (a[0][0] * g0 + a[0][1] * g1, a[1][0] * g0 + a[1][1] * g1)
            }
            None => {
                let sigma = self.noise_variance.sqrt();
                (sigma * standard_normal(rng), sigma * standard_normal(rng))
            }
        }
    }
}

fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    // Normal::new(0, 1) cannot fail.
    Normal::new(0.0, 1.0).unwrap().sample(rng)
}

/// A point in single-mode phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    P,
}

impl Basis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Basis::X => "X",
            Basis::P => "P",
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" => Ok(Basis::X),
            "P" => Ok(Basis::P),
            other => Err(Error::Format(format!("unknown basis {other:?}"))),
        }
    }
}

/// Sum and difference modes leaving the beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModes {
    pub sum_mode: PhasePoint,
    pub diff_mode: PhasePoint,
}

/// Un-normalized beamsplitter coupling: the sum mode stays with Alice,
/// the difference mode travels back to Bob.
pub fn couple_modes(alice: &PhasePoint, bob_arrived: &PhasePoint) -> CoupledModes {
    CoupledModes {
        sum_mode: PhasePoint {
            x: alice.x + bob_arrived.x,
            p: alice.p + bob_arrived.p,
        },
        diff_mode: PhasePoint {
            x: alice.x - bob_arrived.x,
            p: alice.p - bob_arrived.p,
        },
    }
}

/// Send a state through a channel. Noiseless channels return the input
/// unchanged (bit for bit) and consume no randomness.
pub fn apply_channel(
    state: &PhasePoint,
    channel: &ChannelModel,
    rng: &mut ChaCha12Rng,
) -> PhasePoint {
    if channel.is_noiseless() {
        return *state;
    }
    let (dx, dp) = channel.draw_noise(rng);
    PhasePoint {
        x: state.x + dx,
        p: state.p + dp,
    }
}

/// Homodyne abstraction: project onto the chosen quadrature.
pub fn measure_quadrature(state: &PhasePoint, basis: Basis) -> f64 {
    match basis {
        Basis::X => state.x,
        Basis::P => state.p,
    }
}

/// Bob's calibration of a measured difference-mode value with the
/// quadrature his mode carried into the beamsplitter:
/// `X' = Y' + 2q`.
pub fn calibrate(measured: f64, bob_quadrature: f64) -> f64 {
    measured + 2.0 * bob_quadrature
}

/// Per-quadrature channel noise variance from line parameters:
/// `(1 - T)/T + excess` in shot-noise units.
pub fn noise_from_line_params(transmittance: f64, excess_noise: f64) -> Result<f64> {
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmittance must be in (0, 1], got {transmittance}"
        )));
    }
    if !(excess_noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "excess noise must be >= 0, got {excess_noise}"
        )));
    }
    Ok((1.0 - transmittance) / transmittance + excess_noise)
}

/// Parameters a session was generated with, echoed in every session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub modulation_variance: f64,
    pub n1: ChannelModel,
    pub n2: ChannelModel,
    pub seed: u64,
    pub stream_id: u64,
}

/// Correlated raw data of the two parties after sifting.
///
/// `alice_units[i]` pairs with `bob_units[i]`; both were measured in
/// `bases[i]`. Variances are the empirical variances of the stored
/// units (the calibration a real run would perform).
#[derive(Debug, Clone, PartialEq)]
pub struct RawSession {
    pub alice_units: Vec<f64>,
    pub bob_units: Vec<f64>,
    pub bases: Vec<Basis>,
    pub sifted_fraction: f64,
    pub var_alice: f64,
    pub var_bob: f64,
    pub config: SessionConfig,
}

impl RawSession {
    pub fn len(&self) -> usize {
        self.alice_units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_units.is_empty()
    }

    /// Per-unit channel noise `X' - X`.
    pub fn deltas(&self) -> Vec<f64> {
        self.alice_units
            .iter()
            .zip(&self.bob_units)
            .map(|(a, b)| b - a)
            .collect()
    }
}

fn unbiased_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Simulate rounds until `target_n` sifted pairs exist.
///
/// Per round: Bob prepares, the first channel acts, Alice prepares and
/// couples, both parties choose independent fair-coin bases, the second
/// channel acts on the difference mode, and mismatched-basis rounds are
/// discarded. Bob's stored unit is computed as `X + delta` with `delta`
/// the second channel's noise in the shared basis; this is the exact
/// algebraic value of measuring the noisy difference mode and
/// calibrating with the quadrature his mode carried at the
/// beamsplitter, and it makes noiseless channels compose to the
/// identity bit for bit (see the `literal_measurement_chain_agrees`
/// test).
pub fn run_session(
    modulation: &ModulationConfig,
    n1: &ChannelModel,
    n2: &ChannelModel,
    target_n: usize,
    stream: RandomStream,
) -> Result<RawSession> {
    if target_n == 0 {
        return Err(Error::InvalidParameter(
            "session needs at least one sifted pair".into(),
        ));
    }
    if !(modulation.variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "modulation variance must be > 0, got {}",
            modulation.variance
        )));
    }
    let mut rng = stream.rng();
    let sigma = modulation.variance.sqrt();
    let n2_noiseless = n2.is_noiseless();

    let mut alice_units = Vec::with_capacity(target_n);
    let mut bob_units = Vec::with_capacity(target_n);
    let mut bases = Vec::with_capacity(target_n);
    let mut rounds: u64 = 0;

    while alice_units.len() < target_n {
        rounds += 1;
        let bob = PhasePoint {
            x: sigma * standard_normal(&mut rng),
            p: sigma * standard_normal(&mut rng),
        };
        let bob_arrived = apply_channel(&bob, n1, &mut rng);
        let alice = PhasePoint {
            x: sigma * standard_normal(&mut rng),
            p: sigma * standard_normal(&mut rng),
        };
        let modes = couple_modes(&alice, &bob_arrived);
        let basis_alice = if rng.gen::<bool>() { Basis::X } else { Basis::P };
        let basis_bob = if rng.gen::<bool>() { Basis::X } else { Basis::P };
        let n2_noise = n2.draw_noise(&mut rng);
        if basis_alice != basis_bob {
            continue;
        }
        let x = measure_quadrature(&modes.sum_mode, basis_alice);
        let x_bob = if n2_noiseless {
            x
        } else {
            x + match basis_alice {
                Basis::X => n2_noise.0,
                Basis::P => n2_noise.1,
            }
        };
        alice_units.push(x);
        bob_units.push(x_bob);
        bases.push(basis_alice);
    }

    Ok(RawSession {
        sifted_fraction: target_n as f64 / rounds as f64,
        var_alice: unbiased_variance(&alice_units),
        var_bob: unbiased_variance(&bob_units),
        alice_units,
        bob_units,
        bases,
        config: SessionConfig {
            modulation_variance: modulation.variance,
            n1: *n1,
            n2: *n2,
            seed: stream.seed,
            stream_id: stream.stream_id,
        },
    })
}
