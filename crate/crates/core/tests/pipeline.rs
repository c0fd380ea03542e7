//! End-to-end protocol run through the public API: simulate, uniformize,
//! reconcile, then score the converted channel.

use recon_core::analysis::{clt_convergence_report, logical_channel_report, CltGroup};
use recon_core::quantum::{
    run_session, write_session_csv, ChannelLabel, ChannelModel, ModulationConfig, SessionMeta,
};
use recon_core::reconciliation::{
    payload_distinguishability_test, reconcile_session, write_wire_csv, Alphabet, DecodeMethod,
    GranulationMode, KeyChoice, ReconcileConfig,
};
use recon_core::stats::ks_uniformity_test;
use recon_core::RandomStream;

#[test]
fn full_protocol_round() {
    let d = 16;
    let blocks = 12_000;
    let modulation = ModulationConfig { variance: 50.0 };
    let n1 = ChannelModel::noiseless(ChannelLabel::N1);
    let n2 = ChannelModel::isotropic(ChannelLabel::N2, 4.0).unwrap();
    let session = run_session(&modulation, &n1, &n2, d * blocks, RandomStream::new(2024))
        .unwrap();

    assert_eq!(session.len(), d * blocks);
    assert!((session.var_alice - 100.0).abs() / 100.0 <= 0.02);
    assert!((session.var_bob - 104.0).abs() / 104.0 <= 0.02);

    let alphabet = Alphabet::new(-400.0, 400.0).unwrap();
    let cfg = ReconcileConfig::new(d, alphabet, GranulationMode::Affine, DecodeMethod::Scalar);
    let outcome = reconcile_session(&session, &cfg, RandomStream::new(5)).unwrap();

    assert_eq!(outcome.report.blocks, blocks);
    assert_eq!(outcome.report.bit_errors, 0);
    assert!(outcome.report.eta_hat > 0.0);

    // both parties' uniformized data and the payload populations
    let report = logical_channel_report(&outcome, &alphabet, d, 50.0, 4.0).unwrap();
    assert!(report.beta > 0.0 && report.beta <= 1.0);
    assert!(report.snr_logical.is_finite());

    let clt = clt_convergence_report(
        &[CltGroup {
            dimension: d,
            block_noise: outcome.noise.block_noise.clone(),
            unit_noise: Some(outcome.noise.unit_noise.clone()),
        }],
        Some(4.0),
    )
    .unwrap();
    assert!(!clt[0].degenerate);
    assert!(clt[0].variance > 0.0);

    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    for (msg, truth) in outcome.messages.iter().zip(&outcome.ground_truth) {
        match truth {
            KeyChoice::A => pa.extend_from_slice(&msg.payload),
            KeyChoice::B => pb.extend_from_slice(&msg.payload),
        }
    }
    let audit = payload_distinguishability_test(&pa, &pb).unwrap();
    assert!(audit.ks_two_sample_p.is_finite());

    // every serialized surface stays consistent
    let mut csv = Vec::new();
    write_session_csv(&session, &mut csv, Some("pipeline")).unwrap();
    let meta = SessionMeta::of(&session);
    let back = recon_core::quantum::read_session_csv(csv.as_slice(), &meta).unwrap();
    assert_eq!(back, session);

    let mut wire = Vec::new();
    write_wire_csv(&outcome.messages[..4], &mut wire, None).unwrap();
    let parsed = recon_core::reconciliation::read_wire_csv(wire.as_slice()).unwrap();
    assert_eq!(parsed, outcome.messages[..4]);

    // the CDF image of each side is uniform
    let alice =
        recon_core::reconciliation::cdf_transform_block(&session.alice_units, session.var_alice)
            .unwrap();
    assert!(ks_uniformity_test(&alice.values).unwrap().p_value >= 0.01);
}
