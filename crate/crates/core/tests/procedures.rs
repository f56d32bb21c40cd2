mod common;

use common::*;
use rand::Rng;
use sepeval::dsa::{dsa_grid_run, dsa_synthesize, DsaConfig, DsaGrid, DsaItem, DsaManifest, ScalingTriple};
use sepeval::enhance::oracle_wiener;
use sepeval::loss::{absdr_loss, DenomFloor, LossConfig};
use sepeval::metrics::{evaluate, sar_improvement, sxr};
use sepeval::oa::{oa_additive, oa_interpolate, oa_sweep, sari_closed_form};
use sepeval::stft::StftConfig;
use sepeval::wav::{read_wav, write_wav};
use sepeval::wer::{edit_distance, Transcript, WerStats};
use sepeval::{decompose, synth, AbSdrLoss, Db, Projectors};

#[test]
fn sar_gain_closed_form_matches_decomposition() {
    let mut r = rng(1);
    for case in 0..40 {
        let len = r.gen_range(48..200);
        let refs = random_refs(&mut r, len, case % 2 == 0);
        let enh = random_enhanced(&mut r, &refs);
        let p = Projectors::new(&refs, 3).unwrap();
        for w in [0.1, 0.5, 0.9] {
            let direct = sar_improvement(&enh, &oa_interpolate(&enh, &refs.observed, w).unwrap(), &refs, 3).unwrap();
            let closed = sari_closed_form(&p, &enh, &refs.observed, w).unwrap();
            let (Db::Finite(a), Db::Finite(b)) = (direct, closed) else { panic!("{direct:?} {closed:?}") };
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn additive_form_has_interpolated_metrics() {
    let mut r = rng(2);
    let refs = random_refs(&mut r, 128, true);
    let enh = random_enhanced(&mut r, &refs);
    let w = 0.6;
    let add = evaluate(&oa_additive(&enh, &refs.observed, w).unwrap(), &refs, 4).unwrap();
    let interp = evaluate(&oa_interpolate(&enh, &refs.observed, w / (1.0 + w)).unwrap(), &refs, 4).unwrap();
    for (a, b) in [
        (add.sdr_db, interp.sdr_db),
        (add.sir_db, interp.sir_db),
        (add.snr_db, interp.snr_db),
        (add.sar_db, interp.sar_db),
    ] {
        assert!((a.finite().unwrap() - b.finite().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn sweep_endpoints_match_direct_evaluation() {
    let refs = synth::mixture(3000, 16000, 0.0, None, 2).unwrap();
    let enh = oracle_wiener(&refs, StftConfig::default()).unwrap();
    let sweep = oa_sweep(&enh, &refs, 16, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(sweep[0].report, evaluate(&enh, &refs, 16).unwrap());
    assert_eq!(sweep[2].report, evaluate(&refs.observed, &refs, 16).unwrap());
    // The observed signal lies in the reference span.
    assert_eq!(sweep[2].report.sar_db, Db::PosInf);
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let mut r = rng(3);
    for (case, alpha) in [1.0, 1.5, 2.0, 3.5].into_iter().enumerate() {
        let refs = random_refs(&mut r, 64, case % 2 == 1);
        let enh = random_enhanced(&mut r, &refs);
        let cfg = LossConfig { alpha, num_delays: 2, denom_floor: DenomFloor::NONE };
        let loss = AbSdrLoss::new(&refs, &cfg).unwrap();
        let (_, g) = loss.loss_and_gradient(&enh).unwrap();
        let f = |x: &[f64]| loss.loss(&wave(x.to_vec())).unwrap();
        let fd = fd_gradient(f, enh.samples(), 1e-5 * rms(enh.samples()));
        let err = fd.iter().zip(g.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err / max_abs(g.samples()) < 1e-5, "alpha {alpha}: {err}");
    }
}

#[test]
fn loss_at_alpha_one_is_negative_sdr() {
    let mut r = rng(4);
    let refs = random_refs(&mut r, 100, true);
    let enh = random_enhanced(&mut r, &refs);
    let cfg = LossConfig { alpha: 1.0, num_delays: 3, denom_floor: DenomFloor::NONE };
    let sdr = evaluate(&enh, &refs, 3).unwrap().sdr_db.finite().unwrap();
    assert!((absdr_loss(&enh, &refs, &cfg).unwrap() + sdr).abs() < 1e-10);
}

#[test]
fn dsa_identity_and_artifact_axis() {
    let mut r = rng(5);
    let refs = random_refs(&mut r, 150, true);
    let enh = random_enhanced(&mut r, &refs);
    let d = decompose(&enh, &refs, 4).unwrap();
    let same = dsa_synthesize(&d, ScalingTriple::IDENTITY).unwrap();
    assert!(rel_err(same.samples(), enh.samples()) <= 1e-10);
    let quieter = dsa_synthesize(&d, ScalingTriple::new(1.0, 1.0, 0.1).unwrap()).unwrap();
    let gain = evaluate(&quieter, &refs, 4).unwrap().sar_db.minus(sxr(&d).sar_db);
    assert!((gain.finite().unwrap() - 20.0).abs() < 1e-6, "{gain:?}");
}

#[test]
fn dsa_run_writes_signals_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let items: Vec<DsaItem> = (0..3)
        .map(|k| DsaItem {
            id: format!("utt{k}"),
            refs: synth::mixture(2048, 16000, 5.0, (k == 2).then_some(5.0), k).unwrap(),
            transcript: None,
        })
        .collect();
    let mut cfg = DsaConfig::new(dir.path(), 4);
    cfg.grid = DsaGrid::uniform(vec![0.5, 1.0]);
    let manifest = dsa_grid_run(&items, |item| oracle_wiener(&item.refs, StftConfig::default()), &cfg).unwrap();
    // Two single-talker utterances collapse the interference axis.
    assert_eq!(manifest.entries.len(), 4 + 4 + 8);
    let first = &manifest.entries[0];
    let back = read_wav(&first.path).unwrap();
    assert_eq!(back.len(), 2048);
    let mut buf = Vec::new();
    manifest.write_jsonl(&mut buf).unwrap();
    assert_eq!(DsaManifest::read_jsonl(&buf[..]).unwrap(), manifest);
}

#[test]
fn wer_matches_brute_force_on_small_alphabet() {
    let seqs = all_sequences(3, 4);
    for a in &seqs {
        for b in &seqs {
            assert_eq!(edit_distance(a, b), brute_edit_distance(a, b));
        }
    }
    let r = Transcript::parse("the cat sat on the mat");
    let h = Transcript::parse("the cat sat mat extra");
    let st = WerStats::between(&r, &h).unwrap();
    assert_eq!(st.edits, 3);
    assert!((st.rate() - 0.5).abs() < 1e-15);
}

#[test]
fn wav_round_trip_for_f32_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.wav");
    let mut r = rng(6);
    let x: Vec<f64> = noise_vec(&mut r, 777).into_iter().map(|v| f64::from(v as f32)).collect();
    let w = wave(x);
    write_wav(&path, &w).unwrap();
    assert_eq!(read_wav(&path).unwrap(), w);
}
