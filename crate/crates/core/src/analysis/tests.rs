use super::*;
use crate::quantum::{run_session, ChannelLabel, ChannelModel, ModulationConfig};
use crate::reconciliation::{
    reconcile_session, DecodeMethod, GranulationMode, ReconcileConfig,
};

const E_ABS_G3: f64 = 1.5957691216057307; // E|g|^3 = 2 sqrt(2/pi)

#[test]
fn lyapunov_ratio_iid_gaussian() {
    let mut rng = RandomStream::new(1).rng();
    let params = GaussianParams::new(0.0, 1.0).unwrap();
    let units = sample_gaussian(&params, 256 * 4000, &mut rng).unwrap();

    let r16 = lyapunov_ratio(&units, 16, 1.0).unwrap();
    let want = E_ABS_G3 / 4.0;
    assert!((r16 - want).abs() / want <= 0.03, "ratio {r16}, want {want}");

    // halves when d quadruples
    let r64 = lyapunov_ratio(&units, 64, 1.0).unwrap();
    assert!((r64 / r16 - 0.5).abs() <= 0.02, "r64/r16 = {}", r64 / r16);

    // strictly decreasing across dimensions
    let mut prev = f64::INFINITY;
    for d in [4usize, 16, 64, 256] {
        let r = lyapunov_ratio(&units, d, 1.0).unwrap();
        assert!(r < prev, "d = {d}");
        prev = r;
    }

    assert!(lyapunov_ratio(&units, 16, 0.0).is_err());
    assert!(lyapunov_ratio(&units[..500], 16, 1.0).is_err());
    assert!(lyapunov_ratio(&units[..1001], 16, 1.0).is_err());
}

#[test]
fn lyapunov_scaling_matches_theory_within_ten_percent() {
    let mut rng = RandomStream::new(2).rng();
    let params = GaussianParams::new(0.0, 1.0).unwrap();
    let units = sample_gaussian(&params, 256 * 2000, &mut rng).unwrap();
    let r4 = lyapunov_ratio(&units, 4, 1.0).unwrap();
    for d in [16usize, 64, 256] {
        let r = lyapunov_ratio(&units, d, 1.0).unwrap();
        let predicted = r4 * (4.0 / d as f64).sqrt();
        assert!(
            (r - predicted).abs() / predicted <= 0.10,
            "d = {d}: {r} vs {predicted}"
        );
    }
}

fn demo_outcome(d: usize, blocks: usize, seed: u64) -> ReconcileOutcome {
    let session = run_session(
        &ModulationConfig { variance: 50.0 },
        &ChannelModel::noiseless(ChannelLabel::N1),
        &ChannelModel::isotropic(ChannelLabel::N2, 4.0).unwrap(),
        d * blocks,
        RandomStream::new(seed),
    )
    .unwrap();
    let cfg = ReconcileConfig::new(
        d,
        Alphabet::new(-400.0, 400.0).unwrap(),
        GranulationMode::Affine,
        DecodeMethod::Scalar,
    );
    reconcile_session(&session, &cfg, RandomStream::new(seed ^ 0xabcd)).unwrap()
}

#[test]
fn clt_report_on_demo_channel() {
    let out = demo_outcome(16, 12_000, 3);
    let groups = vec![CltGroup {
        dimension: 16,
        block_noise: out.noise.block_noise.clone(),
        unit_noise: Some(out.noise.unit_noise.clone()),
    }];
    let reports = clt_convergence_report(&groups, Some(4.0)).unwrap();
    let r = &reports[0];
    assert!(!r.degenerate);
    assert!(r.mean.abs() < 1.0);
    // The independent-units reconstruction d*var(unit) tracks the block
    // variance but sits below it: units inside a block share the choice
    // sign, and the variance-mismatch bias of C(Delta)/C(X) makes them
    // positively correlated. The gap is the point of reporting both.
    let scaled = r.scaled_unit_variance.unwrap();
    let ratio = scaled / r.variance;
    assert!((0.6..=1.1).contains(&ratio), "ratio {ratio}");
    assert!(r.excess_kurtosis.is_some());
    assert_eq!(r.physical_noise, Some(4.0));
}

#[test]
fn clt_report_degenerate_and_short_groups() {
    let groups = vec![CltGroup {
        dimension: 4,
        block_noise: vec![0.0; 10_000],
        unit_noise: None,
    }];
    let reports = clt_convergence_report(&groups, None).unwrap();
    assert!(reports[0].degenerate);
    assert!(reports[0].ks_p_vs_fitted_gaussian.is_none());

    let short = vec![CltGroup {
        dimension: 4,
        block_noise: vec![0.0; 100],
        unit_noise: None,
    }];
    assert!(matches!(
        clt_convergence_report(&short, None),
        Err(Error::InsufficientSamples { .. })
    ));
}

#[test]
fn kurtosis_shrinks_with_dimension() {
    // medians over a few seeds, coarse version of the full sweep
    let mut medians = Vec::new();
    for d in [2usize, 8, 32] {
        let mut kurts = Vec::new();
        for seed in 0..3 {
            let out = demo_outcome(d, 10_000, 100 + seed);
            let groups = vec![CltGroup {
                dimension: d,
                block_noise: out.noise.block_noise,
                unit_noise: None,
            }];
            let r = clt_convergence_report(&groups, None).unwrap();
            kurts.push(r[0].excess_kurtosis.unwrap().abs());
        }
        kurts.sort_by(f64::total_cmp);
        medians.push(kurts[1]);
    }
    assert!(
        medians[0] >= medians[1] && medians[1] >= medians[2],
        "medians {medians:?}"
    );
}

#[test]
fn norm_stats_analytic_values() {
    let s = normalized_norm_stats(2, 1.0, 1000, RandomStream::new(4)).unwrap();
    assert!((s.mean_norm_exact - 1.2533141373155003).abs() <= 1e-9);
    assert!((s.mean_norm - 1.224744871391589).abs() <= 1e-12);

    let s = normalized_norm_stats(8, 1.0, 1000, RandomStream::new(5)).unwrap();
    assert!((s.mean_norm_exact - 2.7416246753776568).abs() <= 1e-9);

    // exact variance equals E||X||^2 - (E||X||)^2 and respects the
    // sigma^2/2 envelope
    for d in [1usize, 2, 8, 64] {
        let s = normalized_norm_stats(d, 1.0, 1000, RandomStream::new(6)).unwrap();
        let direct = d as f64 - s.mean_norm_exact * s.mean_norm_exact;
        assert!((s.variance_bound - direct).abs() <= 1e-9);
        assert!(s.variance_bound <= 0.5 + 1e-12);
        assert!(s.variance_bound > 0.0);
    }
}

#[test]
fn norm_concentration_with_dimension() {
    // normalized norms concentrate at one
    let s = normalized_norm_stats(1024, 2.5, 2000, RandomStream::new(7)).unwrap();
    assert!((s.empirical_mean_norm - 1.0).abs() <= 0.01);
    assert!(s.empirical_variance <= 1e-3);

    // empirical mean within 3 standard errors of the exact value
    for d in [2usize, 16, 128] {
        let s = normalized_norm_stats(d, 3.0, 4000, RandomStream::new(8)).unwrap();
        let want = s.normalized_mean_exact(3.0);
        let se = (s.empirical_variance / s.samples as f64).sqrt();
        assert!(
            (s.empirical_mean_norm - want).abs() <= 3.0 * se,
            "d = {d}: {} vs {want} (se {se})",
            s.empirical_mean_norm
        );
    }

    assert!(normalized_norm_stats(0, 1.0, 1000, RandomStream::new(9)).is_err());
    assert!(normalized_norm_stats(4, 1.0, 10, RandomStream::new(9)).is_err());
}

#[test]
fn dirac_density_peak_and_mass() {
    for d in [1usize, 4, 16, 64] {
        let peak = dirac_density(0.7, d, 0.7).unwrap();
        assert!((peak - (d as f64 / std::f64::consts::PI).sqrt()).abs() <= 1e-12);

        // Simpson quadrature over [r - 10a, r + 10a], a = 1/sqrt(d)
        let a = 1.0 / (d as f64).sqrt();
        let (lo, hi) = (0.7 - 10.0 * a, 0.7 + 10.0 * a);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut acc = dirac_density(lo, d, 0.7).unwrap() + dirac_density(hi, d, 0.7).unwrap();
        for k in 1..n {
            let x = lo + k as f64 * h;
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * dirac_density(x, d, 0.7).unwrap();
        }
        let integral = acc * h / 3.0;
        assert!((integral - 1.0).abs() <= 1e-6, "d = {d}: {integral}");
    }
    // peak grows like sqrt(d)
    let p4 = dirac_density(0.0, 4, 0.0).unwrap();
    let p16 = dirac_density(0.0, 16, 0.0).unwrap();
    assert!((p16 / p4 - 2.0).abs() <= 1e-12);
}

#[test]
fn octonion_roundtrip() {
    let o = octonion_pack(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(o.re, 1.0);
    assert!(o.im.iter().all(|&v| v == 0.0));

    let mut rng = RandomStream::new(10).rng();
    let params = GaussianParams::new(0.0, 4.0).unwrap();
    for _ in 0..50 {
        let units = sample_gaussian(&params, 8, &mut rng).unwrap();
        let o = octonion_pack(&units).unwrap();
        assert_eq!(o.unpack().to_vec(), units);

        // a noisy counterpart differs componentwise by the added units
        let noise = sample_gaussian(&params, 8, &mut rng).unwrap();
        let noisy: Vec<f64> = units.iter().zip(&noise).map(|(u, n)| u + n).collect();
        let on = octonion_pack(&noisy).unwrap();
        for (i, (clean, dirty)) in o.unpack().iter().zip(on.unpack()).enumerate() {
            assert!((dirty - clean - noise[i]).abs() <= 1e-12 * (1.0 + noise[i].abs()));
        }
    }

    assert!(octonion_pack(&[0.0; 7]).is_err());
    assert!(octonion_pack(&[0.0; 9]).is_err());
}

#[test]
fn snr_and_mutual_information() {
    assert_eq!(snr_physical(1.06, 1.06).unwrap(), 1.0);
    let n2 = crate::quantum::noise_from_line_params(0.8, 0.015).unwrap();
    assert!((snr_physical(1.06, n2).unwrap() - 4.0).abs() <= 1e-12);
    assert!(snr_physical(1.0, 0.0).is_err());
    assert!((snr_physical(1.0, 1e9).unwrap()).abs() < 1e-8);

    assert_eq!(mutual_information(0.0).unwrap(), 0.0);
    assert_eq!(mutual_information(1.0).unwrap(), 0.5);
    assert!((mutual_information(3.0).unwrap() - 1.0).abs() <= 1e-15);
    assert!(mutual_information(-0.5).is_err());
}

#[test]
fn biawgn_stays_below_gaussian_capacity() {
    for k in 1..=1000 {
        let snr = k as f64 * 0.004; // up to 4.0
        let bi = biawgn_capacity(snr).unwrap();
        let mi = mutual_information(snr).unwrap();
        assert!(bi <= mi, "snr {snr}: {bi} > {mi}");
        assert!(bi <= 1.0);
    }
    // low-SNR coincidence
    for k in 1..=100 {
        let snr = k as f64 * 0.0015;
        let bi = biawgn_capacity(snr).unwrap();
        let mi = mutual_information(snr).unwrap();
        assert!((mi - bi) / mi <= 0.01, "snr {snr}");
    }
}

#[test]
fn logical_report_noiseless_convention() {
    let session = run_session(
        &ModulationConfig { variance: 1.0 },
        &ChannelModel::noiseless(ChannelLabel::N1),
        &ChannelModel::noiseless(ChannelLabel::N2),
        3200,
        RandomStream::new(11),
    )
    .unwrap();
    let ab = Alphabet::new(-400.0, 400.0).unwrap();
    let cfg = ReconcileConfig::new(16, ab, GranulationMode::Affine, DecodeMethod::Scalar);
    let out = reconcile_session(&session, &cfg, RandomStream::new(12)).unwrap();
    let r = logical_channel_report(&out, &ab, 16, 1.0, 0.0).unwrap();
    assert_eq!(r.beta, 1.0);
    assert_eq!(r.sigma_delta_sq, 0.0);
}

#[test]
fn logical_report_at_operating_point() {
    // reference operating regime: sigma_w^2 = 1.06, T = 0.8, excess 0.015
    let n2 = crate::quantum::noise_from_line_params(0.8, 0.015).unwrap();
    let session = run_session(
        &ModulationConfig { variance: 1.06 },
        &ChannelModel::isotropic(ChannelLabel::N1, n2).unwrap(),
        &ChannelModel::isotropic(ChannelLabel::N2, n2).unwrap(),
        16 * 4000,
        RandomStream::new(13),
    )
    .unwrap();
    let ab = Alphabet::new(-400.0, 400.0).unwrap();
    let cfg = ReconcileConfig::new(16, ab, GranulationMode::Affine, DecodeMethod::Scalar);
    let out = reconcile_session(&session, &cfg, RandomStream::new(14)).unwrap();
    let r = logical_channel_report(&out, &ab, 16, 1.06, n2).unwrap();
    assert!((r.snr_physical - 4.0).abs() <= 1e-12);
    assert!((r.awgn_capacity - 1.1609640474436813).abs() <= 1e-12);
    assert!(r.beta > 0.5 && r.beta <= 1.0, "beta {}", r.beta);
    assert!(r.snr_logical > r.snr_physical);
    assert!(r.biawgn_capacity <= 1.0);
}

#[test]
fn excess_noise_examples() {
    let v = excess_noise(1.06, 0.8).unwrap();
    assert!((v - 0.015).abs() <= 1e-12);
    assert_eq!(excess_noise(1.0, 0.37).unwrap(), 0.0);
    assert_eq!(excess_noise(1.7, 1.0).unwrap(), 0.0);
    assert!(excess_noise(1.06, 0.0).is_err());
    assert!(excess_noise(1.06, 1.5).is_err());

    // closes against the line-parameter route
    for t in [0.3, 0.5, 0.8, 0.95] {
        for excess in [0.0, 0.015, 0.1] {
            let sigma = 1.0 + excess * t / (1.0 - t);
            let back = excess_noise(sigma, t).unwrap();
            assert!((back - excess).abs() <= 1e-12);
        }
    }
}

#[test]
fn key_rate_monotone_and_conventions() {
    let mut inputs = KeyRateInputs {
        transmittance: 0.5,
        modulation_variance: 1.06,
        excess_noise: 0.015,
        entropy_convention: EntropyConvention::BosonicG,
        fiber_loss_db_per_km: 0.2,
    };

    // strictly increasing in T on (0.5, 0.99)
    let mut prev = f64::NEG_INFINITY;
    for k in 0..=49 {
        inputs.transmittance = 0.5 + k as f64 * 0.01;
        let r = secret_key_rate(&inputs).unwrap();
        assert!(r > prev, "T = {}", inputs.transmittance);
        prev = r;
    }

    // pole at T -> 1
    inputs.transmittance = 0.999999;
    assert!(secret_key_rate(&inputs).unwrap() > 9.0);
    inputs.transmittance = 1.0;
    assert!(matches!(secret_key_rate(&inputs), Err(Error::Domain(_))));

    // the two conventions differ by a T-independent constant
    let mut gaps = Vec::new();
    for t in [0.3, 0.6, 0.9] {
        inputs.transmittance = t;
        inputs.entropy_convention = EntropyConvention::BosonicG;
        let rb = secret_key_rate(&inputs).unwrap();
        inputs.entropy_convention = EntropyConvention::DifferentialGaussian;
        let rg = secret_key_rate(&inputs).unwrap();
        gaps.push(rb - rg);
    }
    assert!((gaps[0] - gaps[1]).abs() <= 1e-12);
    assert!((gaps[1] - gaps[2]).abs() <= 1e-12);
    assert!(gaps[0].abs() > 1e-6);
}

#[test]
fn entropy_conventions() {
    let g = EntropyConvention::BosonicG;
    assert_eq!(g.modulation_entropy(1.0).unwrap(), 0.0);
    let v = g.modulation_entropy(1.06).unwrap();
    // g(0.03) = 1.03 log2(1.03) - 0.03 log2(0.03)
    let want = 1.03f64 * 1.03f64.log2() - 0.03 * 0.03f64.log2();
    assert!((v - want).abs() <= 1e-12);
    assert!(g.modulation_entropy(0.5).is_err());

    let dg = EntropyConvention::DifferentialGaussian;
    let v = dg.modulation_entropy(1.0).unwrap();
    assert!((v - 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2()).abs() <= 1e-12);
}

#[test]
fn distance_examples() {
    assert_eq!(distance_to_transmittance(0.0, 0.2), 1.0);
    assert!((distance_to_transmittance(50.0, 0.2) - 0.1).abs() <= 1e-15);
    assert!((distance_to_transmittance(15.0, 0.2) - 0.5011872336272722).abs() <= 1e-12);
}
