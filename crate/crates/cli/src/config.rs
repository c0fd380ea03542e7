//! Experiment configuration: TOML file, flag overrides, validation
//! that reports every violation at once, and a content hash stamped on
//! all outputs.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use recon_core::analysis::EntropyConvention;
use recon_core::quantum::{noise_from_line_params, ChannelLabel, ChannelModel, ModulationConfig};
use recon_core::reconciliation::{Alphabet, DecodeMethod, GranulationMode};

/// All violations found in a config, each naming the offending key.
#[derive(Debug)]
pub struct ConfigViolations(pub Vec<String>);

impl std::fmt::Display for ConfigViolations {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.0 {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigViolations {}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DimensionSpec {
    One(usize),
    Many(Vec<usize>),
}

impl Default for DimensionSpec {
    fn default() -> Self {
        DimensionSpec::One(16)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulationSection {
    variance: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSpec {
    noise_variance: Option<f64>,
    transmittance: Option<f64>,
    excess_noise: Option<f64>,
    scale_transform: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelsSection {
    #[serde(default)]
    n1: ChannelSpec,
    #[serde(default)]
    n2: ChannelSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetSection {
    a: f64,
    b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ReconciliationSection {
    granulation: GranulationMode,
    method: DecodeMethod,
    cdf_variance_alice: Option<f64>,
    cdf_variance_bob: Option<f64>,
}

impl Default for ReconciliationSection {
    fn default() -> Self {
        Self {
            granulation: GranulationMode::Affine,
            method: DecodeMethod::Scalar,
            cdf_variance_alice: None,
            cdf_variance_bob: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AnalysisSection {
    entropy_convention: EntropyConvention,
    fiber_loss_db_per_km: f64,
    /// Correlation of the two channel attacks; accepted for provenance,
    /// drives nothing in this simulator.
    channel_correlation: Option<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            entropy_convention: EntropyConvention::BosonicG,
            fiber_loss_db_per_km: 0.2,
            channel_correlation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyrateGrid {
    pub min_km: f64,
    pub max_km: f64,
    pub step_km: f64,
}

impl Default for KeyrateGrid {
    fn default() -> Self {
        Self {
            min_km: 2.0,
            max_km: 200.0,
            step_km: 2.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HistSection {
    bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputSection {
    directory: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    units: usize,
    #[serde(default)]
    dimension: DimensionSpec,
    modulation: ModulationSection,
    #[serde(default)]
    channel: ChannelsSection,
    alphabet: AlphabetSection,
    #[serde(default)]
    reconciliation: ReconciliationSection,
    #[serde(default)]
    analysis: AnalysisSection,
    #[serde(default)]
    keyrate: KeyrateGrid,
    #[serde(default)]
    hist: HistSection,
    #[serde(default)]
    output: OutputSection,
}

/// Command-line overrides; flags win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dimensions: Option<Vec<usize>>,
    pub method: Option<DecodeMethod>,
}

/// Fully resolved, validated experiment description. The serialized
/// form (output directory excluded) feeds the config hash.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub units: usize,
    pub dimensions: Vec<usize>,
    pub modulation: ModulationConfig,
    pub n1: ChannelModel,
    pub n2: ChannelModel,
    pub alphabet: Alphabet,
    pub granulation: GranulationMode,
    pub method: DecodeMethod,
    pub cdf_variance_alice: Option<f64>,
    pub cdf_variance_bob: Option<f64>,
    pub entropy_convention: EntropyConvention,
    pub fiber_loss_db_per_km: f64,
    pub channel_correlation: Option<f64>,
    pub keyrate: KeyrateGrid,
    pub hist_bins: Option<usize>,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// First 16 hex digits of the SHA-256 of the canonical serialized
    /// experiment (seed and parameters; the output directory never
    /// affects results, so it is excluded).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in &digest[..8] {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// `# seed=.. config_hash=..` stamped as the first line of every
    /// output file.
    pub fn stamp(&self) -> String {
        format!("seed={} config_hash={}", self.seed, self.hash())
    }
}

fn resolve_channel(
    spec: &ChannelSpec,
    label: ChannelLabel,
    key: &str,
    violations: &mut Vec<String>,
) -> ChannelModel {
    if let Some(a) = spec.scale_transform {
        if spec.noise_variance.is_some() || spec.transmittance.is_some() {
            violations.push(format!(
                "{key}.scale_transform excludes noise_variance and transmittance"
            ));
        }
        if a.iter().flatten().any(|v| !v.is_finite()) {
            violations.push(format!("{key}.scale_transform entries must be finite"));
        }
        return ChannelModel::elliptical(label, a);
    }
    let from_line = match (spec.transmittance, spec.excess_noise) {
        (Some(t), excess) => {
            if !(t > 0.0 && t <= 1.0) {
                violations.push(format!("{key}.transmittance must be in (0, 1], got {t}"));
                None
            } else {
                match noise_from_line_params(t, excess.unwrap_or(0.0)) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        violations.push(format!("{key}.excess_noise: {e}"));
                        None
                    }
                }
            }
        }
        (None, Some(_)) => {
            violations.push(format!("{key}.excess_noise needs {key}.transmittance"));
            None
        }
        (None, None) => None,
    };
    let variance = match (spec.noise_variance, from_line) {
        (Some(direct), Some(derived)) => {
            if (direct - derived).abs() > 1e-9 * (1.0 + derived.abs()) {
                violations.push(format!(
                    "{key}: noise_variance {direct} conflicts with transmittance/excess_noise (implies {derived})"
                ));
            }
            direct
        }
        (Some(direct), None) => {
            if !(direct >= 0.0) {
                violations.push(format!("{key}.noise_variance must be >= 0, got {direct}"));
                0.0
            } else {
                direct
            }
        }
        (None, Some(derived)) => derived,
        (None, None) => 0.0,
    };
    ChannelModel::isotropic(label, variance.max(0.0)).unwrap_or_else(|_| {
        ChannelModel::noiseless(label)
    })
}

/// Parse and validate. Returns either the resolved config or every
/// violation found.
pub fn parse_config(
    text: &str,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigViolations> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| ConfigViolations(vec![format!("parse error: {e}")]))?;

    let mut violations = Vec::new();
    let seed = overrides.seed.unwrap_or(raw.seed);
    let dimensions = overrides.dimensions.clone().unwrap_or_else(|| match &raw.dimension {
        DimensionSpec::One(d) => vec![*d],
        DimensionSpec::Many(ds) => ds.clone(),
    });
    let method = overrides.method.unwrap_or(raw.reconciliation.method);

    if raw.units == 0 {
        violations.push("units must be >= 1".into());
    }
    if dimensions.is_empty() {
        violations.push("dimension list must not be empty".into());
    }
    for &d in &dimensions {
        if d == 0 {
            violations.push("dimension entries must be >= 1".into());
        } else if d > raw.units {
            violations.push(format!(
                "dimension {d} exceeds units {} (no full block)",
                raw.units
            ));
        }
    }
    if !(raw.modulation.variance > 0.0) {
        violations.push(format!(
            "modulation.variance must be > 0, got {}",
            raw.modulation.variance
        ));
    }

    let n1 = resolve_channel(&raw.channel.n1, ChannelLabel::N1, "channel.n1", &mut violations);
    let n2 = resolve_channel(&raw.channel.n2, ChannelLabel::N2, "channel.n2", &mut violations);

    let alphabet = match Alphabet::new(raw.alphabet.a, raw.alphabet.b) {
        Ok(a) => a,
        Err(e) => {
            violations.push(format!("alphabet: {e}"));
            Alphabet { a: 0.0, b: 1.0 }
        }
    };

    for (key, value) in [
        (
            "reconciliation.cdf_variance_alice",
            raw.reconciliation.cdf_variance_alice,
        ),
        (
            "reconciliation.cdf_variance_bob",
            raw.reconciliation.cdf_variance_bob,
        ),
    ] {
        if let Some(v) = value {
            if !(v > 0.0) {
                violations.push(format!("{key} must be > 0, got {v}"));
            }
        }
    }

    if !(raw.analysis.fiber_loss_db_per_km >= 0.0) {
        violations.push(format!(
            "analysis.fiber_loss_db_per_km must be >= 0, got {}",
            raw.analysis.fiber_loss_db_per_km
        ));
    }
    if let Some(nc) = raw.analysis.channel_correlation {
        if !(0.0..=1.0).contains(&nc) {
            violations.push(format!(
                "analysis.channel_correlation must be in [0, 1], got {nc}"
            ));
        }
    }
    if raw.analysis.entropy_convention == EntropyConvention::BosonicG
        && raw.modulation.variance < 1.0
    {
        violations.push(format!(
            "analysis.entropy_convention = bosonic-g needs modulation.variance >= 1, got {}",
            raw.modulation.variance
        ));
    }

    let k = raw.keyrate;
    if !(k.min_km > 0.0) {
        violations.push(format!(
            "keyrate.min_km must be > 0 (transmittance 1 is singular), got {}",
            k.min_km
        ));
    }
    if !(k.step_km > 0.0) {
        violations.push(format!("keyrate.step_km must be > 0, got {}", k.step_km));
    }
    if k.max_km < k.min_km {
        violations.push(format!(
            "keyrate.max_km {} is below keyrate.min_km {}",
            k.max_km, k.min_km
        ));
    }
    if let Some(bins) = raw.hist.bins {
        if bins == 0 {
            violations.push("hist.bins must be >= 1".into());
        }
    }

    if !violations.is_empty() {
        return Err(ConfigViolations(violations));
    }

    let out_dir = overrides
        .out
        .clone()
        .or(raw.output.directory)
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(ExperimentConfig {
        seed,
        units: raw.units,
        dimensions,
        modulation: ModulationConfig {
            variance: raw.modulation.variance,
        },
        n1,
        n2,
        alphabet,
        granulation: raw.reconciliation.granulation,
        method,
        cdf_variance_alice: raw.reconciliation.cdf_variance_alice,
        cdf_variance_bob: raw.reconciliation.cdf_variance_bob,
        entropy_convention: raw.analysis.entropy_convention,
        fiber_loss_db_per_km: raw.analysis.fiber_loss_db_per_km,
        channel_correlation: raw.analysis.channel_correlation,
        keyrate: raw.keyrate,
        hist_bins: raw.hist.bins,
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
units = 1000
[modulation]
variance = 1.06
[alphabet]
a = -400.0
b = 400.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL, &Overrides::default()).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.dimensions, vec![16]);
        assert_eq!(cfg.granulation, GranulationMode::Affine);
        assert_eq!(cfg.method, DecodeMethod::Scalar);
        assert!(cfg.n1.is_noiseless());
        assert!(cfg.n2.is_noiseless());
        assert_eq!(cfg.entropy_convention, EntropyConvention::BosonicG);
        assert_eq!(cfg.fiber_loss_db_per_km, 0.2);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn line_params_resolve_to_noise() {
        let text = r#"
units = 1000
[modulation]
variance = 1.06
[channel.n2]
transmittance = 0.8
excess_noise = 0.015
[alphabet]
a = -1.0
b = 1.0
"#;
        let cfg = parse_config(text, &Overrides::default()).unwrap();
        assert!((cfg.n2.noise_variance - 0.265).abs() < 1e-12);
    }

    #[test]
    fn bad_transmittance_names_the_key() {
        let text = r#"
units = 1000
[modulation]
variance = 1.06
[channel.n2]
transmittance = 1.2
[alphabet]
a = -1.0
b = 1.0
"#;
        let err = parse_config(text, &Overrides::default()).unwrap_err();
        assert!(err.0.iter().any(|v| v.contains("channel.n2.transmittance")));
    }

    #[test]
    fn conflicting_channel_keys_rejected() {
        let text = r#"
units = 1000
[modulation]
variance = 1.06
[channel.n2]
noise_variance = 0.5
transmittance = 0.8
excess_noise = 0.015
[alphabet]
a = -1.0
b = 1.0
"#;
        let err = parse_config(text, &Overrides::default()).unwrap_err();
        assert!(err.0.iter().any(|v| v.contains("conflicts")));
    }

    #[test]
    fn consistent_channel_keys_accepted() {
        let text = r#"
units = 1000
[modulation]
variance = 1.06
[channel.n2]
noise_variance = 0.265
transmittance = 0.8
excess_noise = 0.015
[alphabet]
a = -1.0
b = 1.0
"#;
        assert!(parse_config(text, &Overrides::default()).is_ok());
    }

    #[test]
    fn all_violations_reported_at_once() {
        let text = r#"
units = 0
dimension = 0
[modulation]
variance = -1.0
[channel.n1]
transmittance = 2.0
[alphabet]
a = 1.0
b = 1.0
"#;
        let err = parse_config(text, &Overrides::default()).unwrap_err();
        assert!(err.0.len() >= 4, "got {:?}", err.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\nmystery = 3\n");
        assert!(parse_config(&text, &Overrides::default()).is_err());
    }

    #[test]
    fn overrides_win_and_hash_ignores_out_dir() {
        let with_flags = parse_config(
            MINIMAL,
            &Overrides {
                seed: Some(99),
                out: Some(PathBuf::from("elsewhere")),
                dimensions: Some(vec![4, 8]),
                method: Some(DecodeMethod::Projection),
            },
        )
        .unwrap();
        assert_eq!(with_flags.seed, 99);
        assert_eq!(with_flags.dimensions, vec![4, 8]);
        assert_eq!(with_flags.method, DecodeMethod::Projection);

        let mut a = parse_config(MINIMAL, &Overrides::default()).unwrap();
        let b = parse_config(MINIMAL, &Overrides::default()).unwrap();
        assert_eq!(a.hash(), b.hash());
        a.out_dir = PathBuf::from("moved");
        assert_eq!(a.hash(), b.hash());
        let seeded = parse_config(
            MINIMAL,
            &Overrides {
                seed: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(seeded.hash(), b.hash());
    }
}
