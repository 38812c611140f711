// SPDX-License-Identifier: Apache-2.0

//! Fuzzy commitment: bind a random witness to a noisy binary feature vector.
//!
//! `commit` draws a witness `w`, encodes it to `c`, and publishes
//! `(SHA-256(w), c ^ x)`. `open` xors a fresh reading back onto the offset,
//! decodes, and compares digests. The witness is hashed as its ASCII
//! `'0'/'1'` string so digests agree across implementations.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::bits::Bits;
use crate::ecc::{EccError, LinearCode, Witness};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FcsError {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("witness length must be at least 1")]
    EmptyWitness,
    #[error("code corrects no errors (t = 0)")]
    NoCorrectionCapability,
    #[error("malformed digest {0:?}")]
    MalformedDigest(String),
}

/// A lowercase hex SHA-256 digest.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Digest(String);

impl Digest {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        Digest(hex::encode(Sha256::digest(bytes)))
    }

    pub fn of_witness(w: &Witness) -> Self {
        Self::of_bytes(w.to_string().as_bytes())
    }

    pub fn parse(s: &str) -> Result<Self, FcsError> {
        let ok = s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if !ok {
            return Err(FcsError::MalformedDigest(s.to_string()));
        }
        Ok(Digest(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub const ZERO: &'static str = "0000000000000000000000000000000000000000000000000000000000000000";
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.0)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Digest::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A binary feature vector of code length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Bits);

impl FeatureVector {
    pub fn new(bits: Bits) -> Self {
        FeatureVector(bits)
    }

    pub fn bits(&self) -> &Bits {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Bits> for FeatureVector {
    fn from(bits: Bits) -> Self {
        FeatureVector(bits)
    }
}

/// Public half of a fuzzy commitment. This is what goes on-chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub digest: Digest,
    pub offset: Bits,
}

impl Commitment {
    pub fn n(&self) -> usize {
        self.offset.len()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitmentWire {
    digest: Digest,
    offset: Bits,
    n: usize,
}

impl Serialize for Commitment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CommitmentWire { digest: self.digest.clone(), offset: self.offset.clone(), n: self.n() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Commitment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = CommitmentWire::deserialize(deserializer)?;
        if wire.offset.len() != wire.n {
            return Err(serde::de::Error::custom(format!(
                "offset has {} bits but n = {}",
                wire.offset.len(),
                wire.n
            )));
        }
        Ok(Commitment { digest: wire.digest, offset: wire.offset })
    }
}

/// Why an opening succeeded or failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Opening {
    Matched,
    DigestMismatch,
    DecodingFailure,
}

impl Opening {
    pub fn accepted(self) -> bool {
        self == Opening::Matched
    }
}

pub fn generate_witness<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<Witness, FcsError> {
    if k == 0 {
        return Err(FcsError::EmptyWitness);
    }
    Ok(Witness::new(Bits::random(rng, k)))
}

pub fn commit<R: Rng + ?Sized>(
    code: &LinearCode,
    x: &FeatureVector,
    rng: &mut R,
) -> Result<Commitment, FcsError> {
    if code.t() == 0 {
        return Err(FcsError::NoCorrectionCapability);
    }
    check_len(x.bits(), code.n())?;
    let w = generate_witness(rng, code.k())?;
    commit_with_witness(code, x, &w)
}

/// Deterministic commitment to a caller-chosen witness. The security of the
/// scheme rests on `w` being uniform and secret; this exists for test
/// vectors and exhaustive checks.
pub fn commit_with_witness(code: &LinearCode, x: &FeatureVector, w: &Witness) -> Result<Commitment, FcsError> {
    if code.t() == 0 {
        return Err(FcsError::NoCorrectionCapability);
    }
    check_len(x.bits(), code.n())?;
    let c = code.encode(w).map_err(from_ecc)?;
    let offset = c.bits() ^ x.bits();
    Ok(Commitment { digest: Digest::of_witness(w), offset })
}

pub fn open(code: &LinearCode, commitment: &Commitment, x_prime: &FeatureVector) -> Result<bool, FcsError> {
    open_detailed(code, commitment, x_prime).map(Opening::accepted)
}

pub fn open_detailed(
    code: &LinearCode,
    commitment: &Commitment,
    x_prime: &FeatureVector,
) -> Result<Opening, FcsError> {
    check_len(&commitment.offset, code.n())?;
    check_len(x_prime.bits(), code.n())?;
    let noisy = x_prime.bits() ^ &commitment.offset;
    match code.decode(&noisy) {
        Ok(w) if Digest::of_witness(&w) == commitment.digest => Ok(Opening::Matched),
        Ok(_) => Ok(Opening::DigestMismatch),
        Err(EccError::DecodingFailure) => Ok(Opening::DecodingFailure),
        Err(e) => Err(from_ecc(e)),
    }
}

fn check_len(bits: &Bits, expected: usize) -> Result<(), FcsError> {
    if bits.len() != expected {
        return Err(FcsError::LengthMismatch { expected, actual: bits.len() });
    }
    Ok(())
}

fn from_ecc(e: EccError) -> FcsError {
    match e {
        EccError::LengthMismatch { expected, actual } => FcsError::LengthMismatch { expected, actual },
        other => unreachable!("unexpected code error during commitment: {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn hamming74() -> LinearCode {
        LinearCode::hamming(3).unwrap()
    }

    fn fv(s: &str) -> FeatureVector {
        FeatureVector::new(s.parse().unwrap())
    }

    /// An rng whose bool draws replay a fixed witness.
    struct Scripted(Vec<bool>, usize);

    impl rand::RngCore for Scripted {
        fn next_u32(&mut self) -> u32 {
            let b = self.0[self.1 % self.0.len()];
            self.1 += 1;
            // gen::<bool>() tests the top bit of a u32
            if b { u32::MAX } else { 0 }
        }
        fn next_u64(&mut self) -> u64 {
            u64::from(self.next_u32())
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            rand_core_fill(self, dest)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            rand_core_fill(self, dest);
            Ok(())
        }
    }

    fn rand_core_fill(rng: &mut Scripted, dest: &mut [u8]) {
        for b in dest {
            *b = rand::RngCore::next_u32(rng) as u8;
        }
    }

    fn witness_1011() -> Scripted {
        Scripted(vec![true, false, true, true], 0)
    }

    #[test]
    fn seeded_witness_is_deterministic() {
        let a = generate_witness(&mut ChaCha20Rng::seed_from_u64(42), 4).unwrap();
        let b = generate_witness(&mut ChaCha20Rng::seed_from_u64(42), 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn empty_witness_is_rejected() {
        let err = generate_witness(&mut ChaCha20Rng::seed_from_u64(1), 0).unwrap_err();
        assert_eq!(err, FcsError::EmptyWitness);
    }

    #[test]
    fn secure_source_covers_all_patterns() {
        let mut seen = [false; 16];
        let mut rng = rand::rngs::OsRng;
        for _ in 0..4096 {
            let w = generate_witness(&mut rng, 4).unwrap();
            seen[w.bits().to_word() as usize] = true;
        }
        assert!(seen.iter().all(|&s| s), "missing witness patterns: {seen:?}");
    }

    #[test]
    fn scripted_rng_yields_1011() {
        let w = generate_witness(&mut witness_1011(), 4).unwrap();
        assert_eq!(w.to_string(), "1011");
    }

    #[test]
    fn commit_zero_vector_publishes_codeword() {
        let code = hamming74();
        let c = commit(&code, &fv("0000000"), &mut witness_1011()).unwrap();
        assert_eq!(c, commit_with_witness(&code, &fv("0000000"), &Witness::new("1011".parse().unwrap())).unwrap());
        assert_eq!(c.offset.to_string(), "1011010");
        // sha256("1011"), computed with coreutils sha256sum before the build
        assert_eq!(
            c.digest.as_str(),
            "3dd9c0995d54c0abd51a90f1d57b1ce77bc885fc8a7cea52dcad3c2540dda5ee"
        );
    }

    #[test]
    fn commit_on_codeword_gives_zero_offset() {
        let c = commit(&hamming74(), &fv("1011010"), &mut witness_1011()).unwrap();
        assert_eq!(c.offset.to_string(), "0000000");
    }

    #[test]
    fn commit_rejects_wrong_length() {
        let err = commit(&hamming74(), &fv("000000"), &mut witness_1011()).unwrap_err();
        assert_eq!(err, FcsError::LengthMismatch { expected: 7, actual: 6 });
    }

    #[test]
    fn commit_requires_correcting_code() {
        let rep1 = LinearCode::repetition(1).unwrap();
        let err = commit(&rep1, &fv("1"), &mut witness_1011()).unwrap_err();
        assert_eq!(err, FcsError::NoCorrectionCapability);
    }

    #[test]
    fn open_checks_lengths() {
        let code = hamming74();
        let c = commit(&code, &fv("0000000"), &mut witness_1011()).unwrap();
        assert!(matches!(open(&code, &c, &fv("00")), Err(FcsError::LengthMismatch { .. })));
        let short = Commitment { digest: c.digest.clone(), offset: "101".parse().unwrap() };
        assert!(matches!(open(&code, &short, &fv("0000000")), Err(FcsError::LengthMismatch { .. })));
    }

    #[test]
    fn decoding_failure_is_a_rejection() {
        // (5,2) code with d_min = 3: six correctable patterns, eight syndromes.
        let code = LinearCode::from_generator(&["10111".parse().unwrap(), "01101".parse().unwrap()])
            .unwrap();
        assert_eq!(code.t(), 1);
        assert!(!code.is_perfect());
        let x = fv("00000");
        let c = commit(&code, &x, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let mut outcomes = std::collections::BTreeSet::new();
        for word in 0u64..32 {
            let probe = FeatureVector::new(Bits::from_word(word, 5));
            outcomes.insert(format!("{:?}", open_detailed(&code, &c, &probe).unwrap()));
        }
        assert!(outcomes.contains("DecodingFailure"));
        assert!(outcomes.contains("Matched"));
    }

    #[test]
    fn commitment_json_shape() {
        let c = commit(&hamming74(), &fv("0000000"), &mut witness_1011()).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["offset"], "1011010");
        assert_eq!(v["n"], 7);
        assert_eq!(v["digest"].as_str().unwrap().len(), 64);
        let back: Commitment = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);

        let bad = serde_json::json!({"digest": c.digest, "offset": "101", "n": 7});
        assert!(serde_json::from_value::<Commitment>(bad).is_err());
        let upper = serde_json::json!({"digest": c.digest.as_str().to_uppercase(), "offset": "1011010", "n": 7});
        assert!(serde_json::from_value::<Commitment>(upper).is_err());
    }
}
