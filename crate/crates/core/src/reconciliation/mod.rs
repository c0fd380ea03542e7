//! Logical-layer reconciliation: CDF uniformization of the raw data,
//! granulation of the public alphabet into per-unit key vectors, the
//! classical wire message, per-unit decoding and the three
//! maximum-likelihood correction rules.
//!
//! The protocol, reverse-reconciliation form: Bob uniformizes his raw
//! block with his own CDF, multiplies it elementwise with the key
//! vector for his secret choice and sends the product. Alice divides by
//! her own CDF-transformed block, sums the recovered units and decides
//! which alphabet value is nearest. Per-unit division is the canonical
//! decode rule here; the ratio-of-sums form is offered separately as a
//! diagnostic (see [`decode_units_ratio_of_sums`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::RawSession;
use crate::stats::{gaussian_cdf, q_function, RandomStream};

/// Clamp bound for CDF-transformed units; keeps every later division
/// well-defined.
pub const CDF_CLAMP: f64 = 1e-12;

/// The two public alphabet values Bob chooses between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    pub a: f64,
    pub b: f64,
}

impl Alphabet {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a == b || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alphabet values must be distinct finite reals, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn value(&self, choice: KeyChoice) -> f64 {
        match choice {
            KeyChoice::A => self.a,
            KeyChoice::B => self.b,
        }
    }

    /// Deterministic tie-break: the slot holding the smaller value.
    fn min_choice(&self) -> KeyChoice {
        if self.a <= self.b {
            KeyChoice::A
        } else {
            KeyChoice::B
        }
    }
}

/// Bob's secret per-block selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyChoice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GranulationMode {
    /// Shared zero-sum offsets on top of the uniform split, so
    /// `A_i - B_i` is constant across units.
    Affine,
    /// The two codewords are drawn separately: d-1 jittered units plus
    /// a balancing unit.
    Independent,
}

/// Public codeword pair: `A` sums to the alphabet's `a`, `B` to `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Granulation {
    pub a_units: Vec<f64>,
    pub b_units: Vec<f64>,
    pub mode: GranulationMode,
}

impl Granulation {
    pub fn dimension(&self) -> usize {
        self.a_units.len()
    }

    pub fn codeword(&self, choice: KeyChoice) -> &[f64] {
        match choice {
            KeyChoice::A => &self.a_units,
            KeyChoice::B => &self.b_units,
        }
    }
}

/// Split both alphabet values into `d` public units with the default
/// jitter half-width `|a - b| / (4d)`, which keeps codewords
/// scale-equivariant: scaling the alphabet by λ scales every unit by λ.
pub fn granulate(
    alphabet: &Alphabet,
    d: usize,
    mode: GranulationMode,
    stream: RandomStream,
) -> Result<Granulation> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "granulation dimension must be >= 1".into(),
        ));
    }
    granulate_with_jitter(
        alphabet,
        d,
        mode,
        (alphabet.a - alphabet.b).abs() / (4.0 * d as f64),
        stream,
    )
}

/// [`granulate`] with an explicit jitter half-width. Zero jitter gives
/// the plain uniform split `a/d`, `b/d`.
///
/// Offsets come from the supplied stream only, so any party holding the
/// public per-block stream reconstructs the same pair; Bob's choice
/// stays the only secret.
pub fn granulate_with_jitter(
    alphabet: &Alphabet,
    d: usize,
    mode: GranulationMode,
    jitter: f64,
    stream: RandomStream,
) -> Result<Granulation> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "granulation dimension must be >= 1".into(),
        ));
    }
    if !(jitter >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "jitter must be >= 0, got {jitter}"
        )));
    }
    let mut rng = stream.rng();
    let (a_units, b_units) = match mode {
        GranulationMode::Affine => {
            let mut offsets: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0) * jitter).collect();
            let mean = offsets.iter().sum::<f64>() / d as f64;
            for r in &mut offsets {
                *r -= mean;
            }
            let a_units: Vec<f64> = offsets
                .iter()
                .map(|r| alphabet.a / d as f64 + r)
                .collect();
            let b_units: Vec<f64> = offsets
                .iter()
                .map(|r| alphabet.b / d as f64 + r)
                .collect();
            (a_units, b_units)
        }
        GranulationMode::Independent => {
            let mut draw = |target: f64| {
                let mut units: Vec<f64> = (0..d.saturating_sub(1))
                    .map(|_| target / d as f64 + rng.gen_range(-1.0..1.0) * jitter)
                    .collect();
                let balance = target - units.iter().sum::<f64>();
                units.push(balance);
                units
            };
            (draw(alphabet.a), draw(alphabet.b))
        }
    };
    Ok(Granulation {
        a_units,
        b_units,
        mode,
    })
}

/// Outcome of CDF-transforming one block.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfBlock {
    pub values: Vec<f64>,
    pub clamped: usize,
}

/// Elementwise Gaussian CDF of a block, clamped to
/// `[CDF_CLAMP, 1 - CDF_CLAMP]` with the clamp occurrences counted.
pub fn cdf_transform_block(block: &[f64], variance: f64) -> Result<CdfBlock> {
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "CDF variance must be > 0, got {variance}"
        )));
    }
    let mut clamped = 0;
    let values = block
        .iter()
        .map(|&x| {
            let c = gaussian_cdf(x, variance)?;
            if c < CDF_CLAMP {
                clamped += 1;
                Ok(CDF_CLAMP)
            } else if c > 1.0 - CDF_CLAMP {
                clamped += 1;
                Ok(1.0 - CDF_CLAMP)
            } else {
                Ok(c)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CdfBlock { values, clamped })
}

/// The d-dimensional payload Bob puts on the classical channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub block_index: usize,
    pub payload: Vec<f64>,
}

/// `payload_i = C(X'_i) · U_i`.
pub fn encode_message(cdf_block: &[f64], key_units: &[f64], block_index: usize) -> Result<WireMessage> {
    if cdf_block.len() != key_units.len() {
        return Err(Error::DimensionMismatch(format!(
            "CDF block has {} units, key vector {}",
            cdf_block.len(),
            key_units.len()
        )));
    }
    Ok(WireMessage {
        block_index,
        payload: cdf_block
            .iter()
            .zip(key_units)
            .map(|(c, u)| c * u)
            .collect(),
    })
}

/// Per-unit decode: `U'_i = payload_i / C(X_i)`. Safe by the clamp on
/// the CDF block.
pub fn decode_units(msg: &WireMessage, alice_cdf_block: &[f64]) -> Result<Vec<f64>> {
    if msg.payload.len() != alice_cdf_block.len() {
        return Err(Error::DimensionMismatch(format!(
            "payload has {} units, CDF block {}",
            msg.payload.len(),
            alice_cdf_block.len()
        )));
    }
    Ok(msg
        .payload
        .iter()
        .zip(alice_cdf_block)
        .map(|(p, c)| p / c)
        .collect())
}

/// Diagnostic alternative to [`decode_units`]: scale the whole block by
/// the ratio of CDF sums instead of dividing per unit. Disagrees with
/// the per-unit rule whenever the units are not constant.
pub fn decode_units_ratio_of_sums(msg: &WireMessage, alice_cdf_block: &[f64]) -> Result<Vec<f64>> {
    if msg.payload.len() != alice_cdf_block.len() {
        return Err(Error::DimensionMismatch(format!(
            "payload has {} units, CDF block {}",
            msg.payload.len(),
            alice_cdf_block.len()
        )));
    }
    let denom: f64 = alice_cdf_block.iter().sum();
    Ok(msg.payload.iter().map(|p| p / denom * msg.payload.len() as f64).collect())
}

/// Nearest alphabet value to the unit sum; exact midpoint ties go to
/// the smaller value.
pub fn scalar_decode(units: &[f64], alphabet: &Alphabet) -> KeyChoice {
    let sum: f64 = units.iter().sum();
    let da = (sum - alphabet.a).abs();
    let db = (sum - alphabet.b).abs();
    if da < db {
        KeyChoice::A
    } else if db < da {
        KeyChoice::B
    } else {
        alphabet.min_choice()
    }
}

/// Nearest-codeword rule in the vector space.
pub fn vector_nn_decode(
    units: &[f64],
    gran: &Granulation,
    alphabet: &Alphabet,
) -> Result<KeyChoice> {
    if units.len() != gran.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "received {} units, granulation dimension {}",
            units.len(),
            gran.dimension()
        )));
    }
    let mut da = 0.0;
    let mut db = 0.0;
    for ((u, a), b) in units.iter().zip(&gran.a_units).zip(&gran.b_units) {
        let ea = u - a;
        let eb = u - b;
        da += ea * ea;
        db += eb * eb;
    }
    Ok(if da < db {
        KeyChoice::A
    } else if db < da {
        KeyChoice::B
    } else {
        alphabet.min_choice()
    })
}

/// Decision plus the signed distance along the codeword axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionDecision {
    pub choice: KeyChoice,
    pub projection_value: f64,
}

/// Project the received block onto the normalized codeword difference
/// and decide by the sign: centered on the midpoint, `A` lies at
/// `+|A - B|/2` and `B` at the mirror image.
pub fn projection_decode(
    units: &[f64],
    gran: &Granulation,
    alphabet: &Alphabet,
) -> Result<ProjectionDecision> {
    if units.len() != gran.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "received {} units, granulation dimension {}",
            units.len(),
            gran.dimension()
        )));
    }
    let norm_sq: f64 = gran
        .a_units
        .iter()
        .zip(&gran.b_units)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if norm_sq == 0.0 {
        return Err(Error::DegenerateCodewords(
            "codewords coincide; no direction to project onto".into(),
        ));
    }
    let norm = norm_sq.sqrt();
    let mut dot = 0.0;
    for ((u, a), b) in units.iter().zip(&gran.a_units).zip(&gran.b_units) {
        let axis = (a - b) / norm;
        let centered = u - 0.5 * (a + b);
        dot += axis * centered;
    }
    let choice = if dot > 0.0 {
        KeyChoice::A
    } else if dot < 0.0 {
        KeyChoice::B
    } else {
        alphabet.min_choice()
    };
    Ok(ProjectionDecision {
        choice,
        projection_value: dot,
    })
}

/// Raw and CDF-level block pair with the variances each party uses for
/// its own transform.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPair {
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
    pub var_alice: f64,
    pub var_bob: f64,
}

/// Per-unit and per-block noise quantities of one block.
///
/// `unit_noise` is the key-unit noise computed from ground truth,
/// `unit_noise_received` the identical quantity recomputed from the
/// received units; the two agree to rounding. `block_noise` and
/// `block_noise_received` are their sums.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseAccounting {
    pub delta: Vec<f64>,
    pub cdf_delta: Vec<f64>,
    pub unit_noise: Vec<f64>,
    pub unit_noise_received: Vec<f64>,
    pub block_noise: f64,
    pub block_noise_received: f64,
    pub clamp_count: usize,
}

/// Evaluate every noise quantity of a block against ground truth.
pub fn noise_accounting(block: &BlockPair, key_units: &[f64]) -> Result<NoiseAccounting> {
    let d = key_units.len();
    if block.alice.len() != d || block.bob.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "block has {}/{} units, key vector {}",
            block.alice.len(),
            block.bob.len(),
            d
        )));
    }
    let alice_cdf = cdf_transform_block(&block.alice, block.var_alice)?;
    let bob_cdf = cdf_transform_block(&block.bob, block.var_bob)?;
    let delta: Vec<f64> = block
        .alice
        .iter()
        .zip(&block.bob)
        .map(|(a, b)| b - a)
        .collect();
    let cdf_delta: Vec<f64> = alice_cdf
        .values
        .iter()
        .zip(&bob_cdf.values)
        .map(|(a, b)| b - a)
        .collect();
    let mut unit_noise = Vec::with_capacity(d);
    let mut unit_noise_received = Vec::with_capacity(d);
    for i in 0..d {
        let noise = key_units[i] / alice_cdf.values[i] * cdf_delta[i];
        let received_unit = bob_cdf.values[i] * key_units[i] / alice_cdf.values[i];
        let noise_received = received_unit / bob_cdf.values[i] * cdf_delta[i];
        unit_noise.push(noise);
        unit_noise_received.push(noise_received);
    }
    Ok(NoiseAccounting {
        block_noise: unit_noise.iter().sum(),
        block_noise_received: unit_noise_received.iter().sum(),
        delta,
        cdf_delta,
        unit_noise,
        unit_noise_received,
        clamp_count: alice_cdf.clamped + bob_cdf.clamped,
    })
}

/// Predicted block error probability `Q(|a - b| / 2η)` for key-noise
/// standard deviation `η`.
pub fn predict_error_probability(alphabet: &Alphabet, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be > 0, got {eta} (a noiseless run has error probability 0 by convention)"
        )));
    }
    Ok(q_function((alphabet.a - alphabet.b).abs() / (2.0 * eta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorProbabilityBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Analytic envelope of the Q tail, valid for `|a - b| > 2η`:
/// `(1/√(2π) z)(1 - 1/z²) e^{-z²/2} ≤ Q(z) ≤ e^{-z²/2}`.
pub fn error_probability_bounds(alphabet: &Alphabet, eta: f64) -> Result<ErrorProbabilityBounds> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let gap = (alphabet.a - alphabet.b).abs();
    if gap <= 2.0 * eta {
        return Err(Error::ConditionNotMet(format!(
            "bounds require |a - b| > 2 eta, got |a - b| = {gap}, 2 eta = {}",
            2.0 * eta
        )));
    }
    let z = gap / (2.0 * eta);
    let e = (-z * z / 2.0).exp();
    Ok(ErrorProbabilityBounds {
        lower: e / ((2.0 * std::f64::consts::PI).sqrt() * z) * (1.0 - 1.0 / (z * z)),
        upper: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMethod {
    Scalar,
    Vector,
    Projection,
}

/// Reconciliation settings for a full session run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconcileConfig {
    pub dimension: usize,
    pub alphabet: Alphabet,
    pub mode: GranulationMode,
    pub method: DecodeMethod,
    /// CDF variance overrides; empirical session variances otherwise.
    pub var_alice: Option<f64>,
    pub var_bob: Option<f64>,
}

impl ReconcileConfig {
    pub fn new(dimension: usize, alphabet: Alphabet, mode: GranulationMode, method: DecodeMethod) -> Self {
        Self {
            dimension,
            alphabet,
            mode,
            method,
            var_alice: None,
            var_bob: None,
        }
    }
}

/// Per-session decode summary. The JSON form carries the scalar fields
/// only; the per-block vectors stay in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub blocks: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub eta_hat: f64,
    pub predicted_pe: f64,
    pub clamp_count: usize,
    pub method: DecodeMethod,
    pub granulation_mode: GranulationMode,
    pub dropped_units: usize,
    /// Decoded alphabet value per block.
    #[serde(skip)]
    pub decoded_values: Vec<f64>,
    /// Recovered unit sum `U'_j` per block.
    #[serde(skip)]
    pub block_sums: Vec<f64>,
}

/// Session-level noise aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSummary {
    /// `delta_j` per block.
    pub block_noise: Vec<f64>,
    /// `delta_{j,i}` per unit, block-major.
    pub unit_noise: Vec<f64>,
    /// Unbiased variance of the per-block noise.
    pub sigma_delta_sq: f64,
    /// `sqrt(sigma_delta_sq)`.
    pub eta: f64,
    /// Unbiased variance of the per-unit noise.
    pub unit_noise_variance: f64,
}

/// Everything a reconciliation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileOutcome {
    pub report: DecodeReport,
    pub noise: NoiseSummary,
    /// Bob's secret choices (simulation ground truth).
    pub ground_truth: Vec<KeyChoice>,
    /// The wire payloads, kept for audit and distinguishability tests.
    pub messages: Vec<WireMessage>,
}

fn variance_of(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Run the full logical-layer protocol over a session.
///
/// The raw data is cut into `floor(N/d)` blocks (the remainder is
/// dropped and counted). Per block: a public granulation pair is
/// derived from the per-block stream, Bob draws his secret choice,
/// encodes and sends; Alice CDF-transforms her block with her own
/// variance, decodes per unit and corrects with the selected method.
/// Per-block streams derive deterministically from the session stream
/// and the block index, so blocks may be processed in any order.
pub fn reconcile_session(
    session: &RawSession,
    cfg: &ReconcileConfig,
    stream: RandomStream,
) -> Result<ReconcileOutcome> {
    let d = cfg.dimension;
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if session.len() < d {
        return Err(Error::InsufficientData(format!(
            "session has {} units, need at least d = {}",
            session.len(),
            d
        )));
    }
    let var_alice = cfg.var_alice.unwrap_or(session.var_alice);
    let var_bob = cfg.var_bob.unwrap_or(session.var_bob);
    if !(var_alice > 0.0) || !(var_bob > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "CDF variances must be > 0, got alice {var_alice}, bob {var_bob}"
        )));
    }

    let blocks = session.len() / d;
    let dropped_units = session.len() % d;
    let mut bit_errors = 0usize;
    let mut clamp_count = 0usize;
    let mut decoded_values = Vec::with_capacity(blocks);
    let mut block_sums = Vec::with_capacity(blocks);
    let mut block_noise = Vec::with_capacity(blocks);
    let mut unit_noise = Vec::with_capacity(blocks * d);
    let mut ground_truth = Vec::with_capacity(blocks);
    let mut messages = Vec::with_capacity(blocks);

    for j in 0..blocks {
        let lo = j * d;
        let hi = lo + d;
        let alice_block = &session.alice_units[lo..hi];
        let bob_block = &session.bob_units[lo..hi];

        // The granulation pair lives on its own child stream so anyone
        // holding the public session stream reconstructs it; Bob's
        // choice draws from a sibling stream and stays the only secret.
        let block_stream = stream.derive(j as u64);
        let gran = granulate(&cfg.alphabet, d, cfg.mode, block_stream.derive(0))?;
        let choice = if block_stream.derive(1).rng().gen::<bool>() {
            KeyChoice::A
        } else {
            KeyChoice::B
        };
        let key_units = gran.codeword(choice);

        let bob_cdf = cdf_transform_block(bob_block, var_bob)?;
        let alice_cdf = cdf_transform_block(alice_block, var_alice)?;
        clamp_count += bob_cdf.clamped + alice_cdf.clamped;

        let msg = encode_message(&bob_cdf.values, key_units, j)?;
        let received = decode_units(&msg, &alice_cdf.values)?;

        let decoded = match cfg.method {
            DecodeMethod::Scalar => scalar_decode(&received, &cfg.alphabet),
            DecodeMethod::Vector => vector_nn_decode(&received, &gran, &cfg.alphabet)?,
            DecodeMethod::Projection => {
                projection_decode(&received, &gran, &cfg.alphabet)?.choice
            }
        };
        if decoded != choice {
            bit_errors += 1;
        }
        decoded_values.push(cfg.alphabet.value(decoded));
        block_sums.push(received.iter().sum());
        ground_truth.push(choice);

        let mut noise_sum = 0.0;
        for ((u, ca), cb) in key_units
            .iter()
            .zip(&alice_cdf.values)
            .zip(&bob_cdf.values)
        {
            let nu = u / ca * (cb - ca);
            unit_noise.push(nu);
            noise_sum += nu;
        }
        block_noise.push(noise_sum);
        messages.push(msg);
    }

    let sigma_delta_sq = variance_of(&block_noise);
    let eta = sigma_delta_sq.sqrt();
    let predicted_pe = if eta > 0.0 {
        predict_error_probability(&cfg.alphabet, eta)?
    } else {
        0.0
    };

    Ok(ReconcileOutcome {
        report: DecodeReport {
            blocks,
            bit_errors,
            ber: bit_errors as f64 / blocks as f64,
            eta_hat: eta,
            predicted_pe,
            clamp_count,
            method: cfg.method,
            granulation_mode: cfg.mode,
            dropped_units,
            decoded_values,
            block_sums,
        },
        noise: NoiseSummary {
            sigma_delta_sq,
            eta,
            unit_noise_variance: variance_of(&unit_noise),
            block_noise,
            unit_noise,
        },
        ground_truth,
        messages,
    })
}

/// Probability that a blind guess reproduces the full key:
/// `2^{-floor(N/d)}`, tracked in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyGuessProbability {
    pub log2_probability: f64,
}

impl KeyGuessProbability {
    /// The linear-space value; underflows to zero for large key
    /// lengths, which is why the log form is primary.
    pub fn probability(&self) -> f64 {
        self.log2_probability.exp2()
    }
}

pub fn key_guess_probability(n_units: usize, d: usize) -> Result<KeyGuessProbability> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if n_units < d {
        return Err(Error::InvalidParameter(format!(
            "need at least one block: N = {n_units}, d = {d}"
        )));
    }
    let blocks = n_units / d;
    Ok(KeyGuessProbability {
        log2_probability: -(blocks as f64),
    })
}

/// Empirical comparison of wire payload populations conditioned on the
/// two choices: a diagnostic, not a security proof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityReport {
    pub ks_two_sample_p: f64,
    pub mean_gap: f64,
}

pub fn payload_distinguishability_test(
    payload_a: &[f64],
    payload_b: &[f64],
) -> Result<DistinguishabilityReport> {
    const MIN: usize = 1000;
    let got = payload_a.len().min(payload_b.len());
    if got < MIN {
        return Err(Error::InsufficientSamples { needed: MIN, got });
    }
    let ks = crate::stats::ks_two_sample_test(payload_a, payload_b)?;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(DistinguishabilityReport {
        ks_two_sample_p: ks.p_value,
        mean_gap: mean(payload_a) - mean(payload_b),
    })
}

/// Write wire messages as `j,i,payload` rows, 17 significant digits so
/// every payload value round-trips to the identical double.
pub fn write_wire_csv(
    messages: &[WireMessage],
    mut w: impl std::io::Write,
    comment: Option<&str>,
) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "j,i,payload")?;
    for msg in messages {
        for (i, p) in msg.payload.iter().enumerate() {
            writeln!(w, "{},{},{:.16e}", msg.block_index, i, p)?;
        }
    }
    Ok(())
}

/// Read wire messages back from their CSV form. Rows must be grouped by
/// block with unit indices in order.
pub fn read_wire_csv(r: impl std::io::BufRead) -> Result<Vec<WireMessage>> {
    let mut messages: Vec<WireMessage> = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "j,i,payload" {
                return Err(Error::Format(format!(
                    "line {}: expected wire header, got {line:?}",
                    lineno + 1
                )));
            }
            saw_header = true;
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!(
                "line {}: expected 3 fields, got {}",
                lineno + 1,
                parts.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
        };
        let j: usize = parts[0]
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        let i: usize = parts[1]
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        let value = parse(parts[2])?;
        if messages.last().map(|m| m.block_index) != Some(j) {
            messages.push(WireMessage {
                block_index: j,
                payload: Vec::new(),
            });
        }
        let msg = messages.last_mut().unwrap();
        if msg.payload.len() != i {
            return Err(Error::Format(format!(
                "line {}: unit index {} out of order in block {}",
                lineno + 1,
                i,
                j
            )));
        }
        msg.payload.push(value);
    }
    Ok(messages)
}
