// SPDX-License-Identifier: Apache-2.0

use bioledger::ecc::{LinearCode, Witness};
use bioledger::fcs::{commit, commit_with_witness, open, open_detailed, Commitment, Digest, FcsError, FeatureVector, Opening};
use bioledger::Bits;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest as _, Sha256};

fn fv(s: &str) -> FeatureVector {
    FeatureVector::new(s.parse().unwrap())
}

/// Every witness, every error pattern: accept exactly when weight(e) <= t.
fn exhaustive(code: &LinearCode, x: &Bits) -> usize {
    let mut cases = 0;
    for m in 0u64..(1 << code.k()) {
        let w = Witness::new(Bits::from_word(m, code.k()));
        let c = commit_with_witness(code, &FeatureVector::new(x.clone()), &w).unwrap();
        for e in 0u64..(1 << code.n()) {
            let e = Bits::from_word(e, code.n());
            let reading = FeatureVector::new(x ^ &e);
            assert_eq!(open(code, &c, &reading).unwrap(), e.weight() <= code.t(), "w={w} e={e}");
            cases += 1;
        }
    }
    cases
}

#[test]
fn hamming74_exhaustive() {
    let code = LinearCode::hamming(3).unwrap();
    for x in ["0000000", "1011001", "1111111"] {
        assert_eq!(exhaustive(&code, &x.parse().unwrap()), 16 * 128);
    }
}

#[test]
fn repetition3_exhaustive() {
    let code = LinearCode::repetition(3).unwrap();
    for x in ["000", "101"] {
        assert_eq!(exhaustive(&code, &x.parse().unwrap()), 2 * 8);
    }
}

#[test]
fn digest_is_sha256_of_ascii_witness() {
    let code = LinearCode::hamming(3).unwrap();
    let w = Witness::new("0110".parse().unwrap());
    let c = commit_with_witness(&code, &fv("0000000"), &w).unwrap();
    let expected = hex::encode(Sha256::digest(b"0110"));
    assert_eq!(c.digest.as_str(), expected);
    assert_eq!(c.digest, Digest::of_witness(&w));
    // offset of the zero vector is the codeword itself
    assert_eq!(c.offset, code.encode(&w).unwrap().into_bits());
}

#[test]
fn offset_is_codeword_xor_template() {
    let code = LinearCode::hamming(3).unwrap();
    let x = fv("1100101");
    let w = Witness::new("1000".parse().unwrap());
    let c = commit_with_witness(&code, &x, &w).unwrap();
    // 1000110 xor 1100101
    assert_eq!(c.offset.to_string(), "0100011");
}

#[test]
fn failure_reasons() {
    let code = LinearCode::hamming(3).unwrap();
    let x = fv("1100101");
    let c = commit(&code, &x, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
    assert_eq!(open_detailed(&code, &c, &x).unwrap(), Opening::Matched);
    assert_eq!(open_detailed(&code, &c, &fv("0000101")).unwrap(), Opening::DigestMismatch);

    // (5,2) code leaves 8 syndromes without a leader
    let short = LinearCode::from_generator(&["10111".parse().unwrap(), "01101".parse().unwrap()]).unwrap();
    let x = fv("00000");
    let c = commit_with_witness(&short, &x, &Witness::new("00".parse().unwrap())).unwrap();
    let reasons: Vec<Opening> = (0u64..32)
        .map(|e| open_detailed(&short, &c, &FeatureVector::new(Bits::from_word(e, 5))).unwrap())
        .collect();
    assert_eq!(reasons.iter().filter(|r| **r == Opening::DecodingFailure).count(), 8);
    assert_eq!(reasons.iter().filter(|r| **r == Opening::Matched).count(), 6);
}

#[test]
fn input_errors() {
    let code = LinearCode::hamming(3).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    assert_eq!(
        commit(&code, &fv("101"), &mut rng).unwrap_err(),
        FcsError::LengthMismatch { expected: 7, actual: 3 }
    );
    let c = commit(&code, &fv("1010101"), &mut rng).unwrap();
    assert!(matches!(open(&code, &c, &fv("10101")), Err(FcsError::LengthMismatch { .. })));
    let trivial = LinearCode::from_generator(&["11".parse().unwrap()]).unwrap();
    assert_eq!(trivial.t(), 0);
    assert_eq!(commit(&trivial, &fv("11"), &mut rng).unwrap_err(), FcsError::NoCorrectionCapability);
}

#[test]
fn commitment_wire_format() {
    let code = LinearCode::hamming(3).unwrap();
    let c = commit(&code, &fv("1010101"), &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
    let json = serde_json::to_value(&c).unwrap();
    assert_eq!(json["n"], 7);
    assert_eq!(json["offset"].as_str().unwrap().len(), 7);
    let back: Commitment = serde_json::from_value(json.clone()).unwrap();
    assert_eq!(back, c);

    let mut wrong_n = json.clone();
    wrong_n["n"] = 8.into();
    assert!(serde_json::from_value::<Commitment>(wrong_n).is_err());
    let mut bad_digest = json.clone();
    bad_digest["digest"] = "ABC".into();
    assert!(serde_json::from_value::<Commitment>(bad_digest).is_err());
    let mut extra = json;
    extra["witness"] = "1011".into();
    assert!(serde_json::from_value::<Commitment>(extra).is_err());
}

#[test]
fn fresh_witness_per_commit() {
    let code = LinearCode::hamming(4).unwrap();
    let x = FeatureVector::new(Bits::zeros(15));
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let a = commit(&code, &x, &mut rng).unwrap();
    let b = commit(&code, &x, &mut rng).unwrap();
    assert_ne!(a, b);
    assert!(open(&code, &a, &x).unwrap() && open(&code, &b, &x).unwrap());
}
