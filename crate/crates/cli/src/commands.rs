//! The five subcommands and their file outputs.

use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use recon_core::analysis::{
    logical_channel_report, secret_key_rate, distance_to_transmittance, KeyRateInputs,
};
use recon_core::quantum::{
    read_session_csv, run_session, write_session_csv, RawSession, SessionMeta,
};
use recon_core::reconciliation::{
    reconcile_session, write_wire_csv, DecodeReport, ReconcileConfig, ReconcileOutcome,
};
use recon_core::stats::RandomStream;

use crate::config::ExperimentConfig;
use crate::table::{emit_all, fmt17, CsvTable};

// Stream roots per command, so rerunning any subcommand with the same
// seed regenerates identical data while distinct commands stay
// decorrelated.
const STREAM_SIMULATE: u64 = 0;
const STREAM_RECONCILE: u64 = 1;
const STREAM_SWEEP: u64 = 2;

fn simulate_stream(seed: u64) -> RandomStream {
    RandomStream::with_stream(seed, STREAM_SIMULATE)
}

fn reconcile_stream(seed: u64) -> RandomStream {
    RandomStream::with_stream(seed, STREAM_RECONCILE)
}

fn sweep_point_stream(seed: u64, dimension: usize) -> RandomStream {
    RandomStream::with_stream(seed, STREAM_SWEEP).derive(dimension as u64)
}

/// JSON sidecar of a session CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSidecar {
    pub seed: u64,
    pub config_hash: String,
    #[serde(flatten)]
    pub meta: SessionMeta,
}

/// JSON form of a decode report, stamped with provenance.
#[derive(Debug, Serialize, Deserialize)]
pub struct DecodeReportFile {
    pub seed: u64,
    pub config_hash: String,
    #[serde(flatten)]
    pub report: DecodeReport,
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn run_configured_session(cfg: &ExperimentConfig, stream: RandomStream) -> Result<RawSession> {
    run_session(&cfg.modulation, &cfg.n1, &cfg.n2, cfg.units, stream)
        .context("simulating session")
}

fn reconcile_configured(
    cfg: &ExperimentConfig,
    session: &RawSession,
    dimension: usize,
    stream: RandomStream,
) -> Result<ReconcileOutcome> {
    let rc = ReconcileConfig {
        dimension,
        alphabet: cfg.alphabet,
        mode: cfg.granulation,
        method: cfg.method,
        var_alice: cfg.cdf_variance_alice,
        var_bob: cfg.cdf_variance_bob,
    };
    reconcile_session(session, &rc, stream).context("reconciling session")
}

pub fn session_csv_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("raw_session.csv")
}

/// `simulate`: raw-session CSV plus JSON sidecar.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let session = run_configured_session(cfg, simulate_stream(cfg.seed))?;
    let mut csv = Vec::new();
    write_session_csv(&session, &mut csv, Some(&cfg.stamp()))?;
    let sidecar = SessionSidecar {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        meta: SessionMeta::of(&session),
    };
    let files = vec![
        (session_csv_path(cfg), csv),
        (cfg.out_dir.join("raw_session.json"), json_bytes(&sidecar)?),
    ];
    emit_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn load_session(csv_path: &Path) -> Result<RawSession> {
    let sidecar_path = csv_path.with_extension("json");
    let sidecar: SessionSidecar = serde_json::from_reader(BufReader::new(
        std::fs::File::open(&sidecar_path)
            .with_context(|| format!("opening sidecar {}", sidecar_path.display()))?,
    ))
    .with_context(|| format!("parsing sidecar {}", sidecar_path.display()))?;
    let file = std::fs::File::open(csv_path)
        .with_context(|| format!("opening session {}", csv_path.display()))?;
    Ok(read_session_csv(BufReader::new(file), &sidecar.meta)?)
}

/// `reconcile`: decode-report JSON plus per-block noise CSV; wire
/// payloads optionally.
pub fn reconcile(
    cfg: &ExperimentConfig,
    session_path: Option<&Path>,
    wire_out: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let default_path = session_csv_path(cfg);
    let session = load_session(session_path.unwrap_or(&default_path))?;
    let dimension = cfg.dimensions[0];
    let outcome = reconcile_configured(cfg, &session, dimension, reconcile_stream(cfg.seed))?;

    let report_file = DecodeReportFile {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        report: outcome.report.clone(),
    };

    let mut noise = CsvTable::new(cfg.stamp(), &["j", "delta_j", "u_prime_j", "decoded_value"]);
    for j in 0..outcome.report.blocks {
        noise.push_row(vec![
            j.to_string(),
            fmt17(outcome.noise.block_noise[j]),
            fmt17(outcome.report.block_sums[j]),
            fmt17(outcome.report.decoded_values[j]),
        ]);
    }

    let mut files = vec![
        (
            cfg.out_dir.join("decode_report.json"),
            json_bytes(&report_file)?,
        ),
        (cfg.out_dir.join("noise.csv"), noise.render()?),
    ];
    if let Some(path) = wire_out {
        let mut wire = Vec::new();
        write_wire_csv(&outcome.messages, &mut wire, Some(&cfg.stamp()))?;
        files.push((path.to_path_buf(), wire));
    }
    emit_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

fn option_f64(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt17(x),
        None => "nan".into(),
    }
}

/// `sweep`: one logical-channel report per dimension, optionally in
/// parallel; rows are sorted by dimension so the output is independent
/// of scheduling.
pub fn sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<PathBuf>> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let mut points: Vec<_> = pool.install(|| {
        cfg.dimensions
            .par_iter()
            .map(|&d| -> Result<_> {
                let point = sweep_point_stream(cfg.seed, d);
                let session = run_configured_session(cfg, point.derive(0))?;
                let outcome = reconcile_configured(cfg, &session, d, point.derive(1))?;
                let report = logical_channel_report(
                    &outcome,
                    &cfg.alphabet,
                    d,
                    cfg.modulation.variance,
                    cfg.n2.mean_quadrature_variance(),
                )?;
                Ok((d, report))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    points.sort_by_key(|(d, _)| *d);

    let mut table = CsvTable::new(
        cfg.stamp(),
        &["d", "sigma_delta_sq", "snr_logical", "beta", "kurtosis", "ks_p"],
    );
    for (d, r) in &points {
        table.push_row(vec![
            d.to_string(),
            fmt17(r.sigma_delta_sq),
            fmt17(r.snr_logical),
            fmt17(r.beta),
            option_f64(r.excess_kurtosis),
            option_f64(r.ks_p_vs_fitted_gaussian),
        ]);
    }
    let files = vec![(cfg.out_dir.join("sweep.csv"), table.render()?)];
    emit_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

struct Histogram {
    edges: Vec<f64>,
    counts: Vec<usize>,
    total: usize,
}

/// Freedman–Diaconis binning unless the config pins a bin count.
fn histogram(data: &[f64], bins_override: Option<usize>) -> Histogram {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let quartile = |q: f64| -> f64 {
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 < n {
            sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
        } else {
            sorted[lo]
        }
    };
    let bins = bins_override.unwrap_or_else(|| {
        let iqr = quartile(0.75) - quartile(0.25);
        let width = 2.0 * iqr / (n as f64).cbrt();
        if width <= 0.0 || max <= min {
            1
        } else {
            (((max - min) / width).ceil() as usize).clamp(1, 4096)
        }
    });
    let span = if max > min { max - min } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in data {
        let idx = (((x - min) / span) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let edges = (0..=bins)
        .map(|k| min + span * k as f64 / bins as f64)
        .collect();
    Histogram {
        edges,
        counts,
        total: n,
    }
}

fn histogram_table(cfg: &ExperimentConfig, data: &[f64]) -> Result<Vec<u8>> {
    let h = histogram(data, cfg.hist_bins);
    let mut table = CsvTable::new(cfg.stamp(), &["bin_left", "bin_right", "count", "density"]);
    for k in 0..h.counts.len() {
        let width = h.edges[k + 1] - h.edges[k];
        let density = h.counts[k] as f64 / (h.total as f64 * width);
        table.push_row(vec![
            fmt17(h.edges[k]),
            fmt17(h.edges[k + 1]),
            h.counts[k].to_string(),
            fmt17(density),
        ]);
    }
    table.render()
}

/// `hist`: binned distributions of the raw units, their CDF transforms,
/// the channel noise, its CDF-level image, and the per-unit and
/// per-block key noise. Uses the same streams as `simulate` and
/// `reconcile`, so the histograms describe exactly the session those
/// commands would emit.
pub fn hist(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    use recon_core::reconciliation::cdf_transform_block;

    let session = run_configured_session(cfg, simulate_stream(cfg.seed))?;
    let dimension = cfg.dimensions[0];
    let outcome = reconcile_configured(cfg, &session, dimension, reconcile_stream(cfg.seed))?;

    let var_alice = cfg.cdf_variance_alice.unwrap_or(session.var_alice);
    let var_bob = cfg.cdf_variance_bob.unwrap_or(session.var_bob);
    let alice_cdf = cdf_transform_block(&session.alice_units, var_alice)?;
    let bob_cdf = cdf_transform_block(&session.bob_units, var_bob)?;
    let cdf_delta: Vec<f64> = alice_cdf
        .values
        .iter()
        .zip(&bob_cdf.values)
        .map(|(a, b)| b - a)
        .collect();

    let files = vec![
        (
            cfg.out_dir.join("hist_raw_alice.csv"),
            histogram_table(cfg, &session.alice_units)?,
        ),
        (
            cfg.out_dir.join("hist_cdf_alice.csv"),
            histogram_table(cfg, &alice_cdf.values)?,
        ),
        (
            cfg.out_dir.join("hist_channel_noise.csv"),
            histogram_table(cfg, &session.deltas())?,
        ),
        (
            cfg.out_dir.join("hist_cdf_noise.csv"),
            histogram_table(cfg, &cdf_delta)?,
        ),
        (
            cfg.out_dir.join("hist_unit_noise.csv"),
            histogram_table(cfg, &outcome.noise.unit_noise)?,
        ),
        (
            cfg.out_dir.join("hist_block_noise.csv"),
            histogram_table(cfg, &outcome.noise.block_noise)?,
        ),
    ];
    emit_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// `keyrate`: distance, transmittance and secret key rate over the
/// configured fiber grid.
pub fn keyrate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut table = CsvTable::new(
        format!(
            "{} entropy_convention={}",
            cfg.stamp(),
            cfg.entropy_convention.as_str()
        ),
        &["distance_km", "T", "R"],
    );
    let grid = cfg.keyrate;
    let steps = ((grid.max_km - grid.min_km) / grid.step_km).floor() as usize;
    for k in 0..=steps {
        let distance = grid.min_km + k as f64 * grid.step_km;
        let t = distance_to_transmittance(distance, cfg.fiber_loss_db_per_km);
        let inputs = KeyRateInputs {
            transmittance: t,
            modulation_variance: cfg.modulation.variance,
            excess_noise: recon_core::analysis::excess_noise(cfg.modulation.variance, t)?,
            entropy_convention: cfg.entropy_convention,
            fiber_loss_db_per_km: cfg.fiber_loss_db_per_km,
        };
        let rate = secret_key_rate(&inputs)?;
        table.push_row(vec![fmt17(distance), fmt17(t), fmt17(rate)]);
    }
    let files = vec![(cfg.out_dir.join("keyrate.csv"), table.render()?)];
    emit_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
