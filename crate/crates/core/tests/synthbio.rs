// SPDX-License-Identifier: Apache-2.0

use bioledger::ecc::LinearCode;
use bioledger::synthbio::{
    acquire, analytic_error_rates, binomial_upper_tail, generate_template, FarKind, NoiseModel, SynthError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

#[test]
fn frr_matches_frozen_values() {
    // sum_{j=2}^{7} C(7,j) p^j (1-p)^(7-j), evaluated in exact rational
    // arithmetic outside this crate
    let code = LinearCode::hamming(3).unwrap();
    let at = |p| analytic_error_rates(&code, &NoiseModel::new(p).unwrap()).frr;
    assert!((at(0.01) - 0.002031041634940084).abs() < 1e-15);
    assert!((at(0.05) - 0.0443805421875).abs() < 1e-15);
    assert_eq!(at(0.0), 0.0);
}

#[test]
fn tail_agrees_with_statrs() {
    for (n, t) in [(3, 1), (7, 1), (15, 1), (23, 3), (24, 3), (31, 1)] {
        for p in [0.001, 0.01, 0.05, 0.1, 0.3, 0.49] {
            let oracle = 1.0 - Binomial::new(p, n as u64).unwrap().cdf(t as u64);
            let ours = binomial_upper_tail(n, t, p);
            assert!((ours - oracle).abs() < 1e-12, "n={n} t={t} p={p}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn far_kind_follows_perfection() {
    let noise = NoiseModel::new(0.01).unwrap();
    let h = analytic_error_rates(&LinearCode::hamming(3).unwrap(), &noise);
    assert_eq!((h.far, h.far_kind), (0.0625, FarKind::Exact));
    let r = analytic_error_rates(&LinearCode::repetition(5).unwrap(), &noise);
    assert_eq!((r.far, r.far_kind), (0.5, FarKind::Exact));
    let short = LinearCode::from_generator(&["10111".parse().unwrap(), "01101".parse().unwrap()]).unwrap();
    let s = analytic_error_rates(&short, &noise);
    assert_eq!((s.far, s.far_kind), (0.25, FarKind::UpperBound));
}

#[test]
fn noise_flip_rate() {
    let noise = NoiseModel::new(0.2).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let template = generate_template(&mut rng, 1000, 1).unwrap();
    let reading = acquire(&template, &noise, &mut rng);
    assert_eq!(reading.modality, 1);
    let flips = template.bits.distance(&reading.bits) as f64;
    // 1000 trials at p = 0.2: sigma ~ 12.6
    assert!((flips - 200.0).abs() < 4.0 * 12.65, "{flips}");
}

#[test]
fn noiseless_acquisition_is_identity() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let template = generate_template(&mut rng, 64, 2).unwrap();
    assert_eq!(acquire(&template, &NoiseModel::noiseless(), &mut rng), template);
}

#[test]
fn invalid_noise() {
    for p in [-0.1, 0.5, 0.9, f64::NAN] {
        assert!(matches!(NoiseModel::new(p), Err(SynthError::InvalidFlipProbability(_))), "{p}");
    }
    assert!(serde_json::from_str::<NoiseModel>(r#"{"flipProbability":0.7}"#).is_err());
    let ok: NoiseModel = serde_json::from_str(r#"{"flipProbability":0.05}"#).unwrap();
    assert_eq!(ok.flip_probability(), 0.05);
}
