// SPDX-License-Identifier: Apache-2.0

//! Synthetic biometrics: uniform reference templates, a binary symmetric
//! channel for re-acquisition, and closed-form FRR/FAR for a code under
//! that channel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::ecc::LinearCode;
use crate::fcs::FeatureVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("flip probability must lie in [0, 0.5), got {0}")]
    InvalidFlipProbability(f64),
    #[error("template length must be at least 1")]
    EmptyTemplate,
    #[error("modality index must be at least 1")]
    InvalidModality,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BiometricTemplate {
    pub bits: Bits,
    /// 1-based modality index.
    pub modality: usize,
}

/// Independent bit flips with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NoiseModel {
    flip_probability: f64,
}

impl NoiseModel {
    pub fn new(flip_probability: f64) -> Result<Self, SynthError> {
        if !(0.0..0.5).contains(&flip_probability) {
            return Err(SynthError::InvalidFlipProbability(flip_probability));
        }
        Ok(NoiseModel { flip_probability })
    }

    pub fn noiseless() -> Self {
        NoiseModel { flip_probability: 0.0 }
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }

    /// Draws an error pattern of `len` bits.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Bits {
        Bits::from_bools((0..len).map(|_| rng.gen_bool(self.flip_probability)))
    }
}

impl<'de> Deserialize<'de> for NoiseModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(rename_all = "camelCase")]
        struct Raw {
            flip_probability: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        NoiseModel::new(raw.flip_probability).map_err(serde::de::Error::custom)
    }
}

pub fn generate_template<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    modality: usize,
) -> Result<BiometricTemplate, SynthError> {
    if n == 0 {
        return Err(SynthError::EmptyTemplate);
    }
    if modality == 0 {
        return Err(SynthError::InvalidModality);
    }
    Ok(BiometricTemplate { bits: Bits::random(rng, n), modality })
}

/// A fresh noisy reading of `template`.
pub fn acquire<R: Rng + ?Sized>(
    template: &BiometricTemplate,
    noise: &NoiseModel,
    rng: &mut R,
) -> BiometricTemplate {
    let error = noise.sample(rng, template.bits.len());
    BiometricTemplate { bits: &template.bits ^ &error, modality: template.modality }
}

/// Turns a raw acquisition into the binary vector fed to the commitment.
pub trait FeatureExtractor {
    fn extract(&self, acquisition: &BiometricTemplate) -> FeatureVector;
}

/// The synthetic model treats the template itself as the feature vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn extract(&self, acquisition: &BiometricTemplate) -> FeatureVector {
        FeatureVector::new(acquisition.bits.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarKind {
    /// Perfect code: acceptance regions tile the space, FAR is exactly `2^-k`.
    Exact,
    /// Non-perfect code: `2^-k` bounds the acceptance probability from above.
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub frr: f64,
    pub far: f64,
    pub far_kind: FarKind,
}

/// FRR is the binomial tail `P[Bin(n, p) > t]`; FAR is `2^-k` against a
/// uniformly random impostor vector.
pub fn analytic_error_rates(code: &LinearCode, noise: &NoiseModel) -> ErrorRates {
    let frr = binomial_upper_tail(code.n(), code.t(), noise.flip_probability());
    let far = 0.5f64.powi(code.k() as i32);
    let far_kind = if code.is_perfect() { FarKind::Exact } else { FarKind::UpperBound };
    ErrorRates { frr, far, far_kind }
}

/// `P[Bin(n, p) > t]`, summed term by term in log space.
pub fn binomial_upper_tail(n: usize, t: usize, p: f64) -> f64 {
    if p == 0.0 || t >= n {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_choose = 0.0;
    let mut tail = 0.0;
    for j in 1..=n {
        log_choose += ((n - j + 1) as f64).ln() - (j as f64).ln();
        if j > t {
            tail += (log_choose + j as f64 * lp + (n - j) as f64 * lq).exp();
        }
    }
    tail.min(1.0)
}
