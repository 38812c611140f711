// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo FAR/FRR sweeps against the analytic rates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ecc::{CodeFamily, LinearCode};
use crate::fcs::{self, FcsError, FeatureVector};
use crate::scenario::substream;
use crate::synthbio::{analytic_error_rates, NoiseModel, SynthError};
use crate::Bits;

pub const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("at least {MIN_TRIALS} trials are required, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Noise(#[from] SynthError),
    #[error(transparent)]
    Fcs(#[from] FcsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: CodeFamily,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub p: f64,
    pub frr_analytic: f64,
    pub frr_empirical: f64,
    pub far_analytic: f64,
    pub far_empirical: f64,
    pub trials: usize,
}

/// Fraction of genuine readings at flip rate `p` that fail to open.
pub fn empirical_frr<R: Rng + ?Sized>(
    code: &LinearCode,
    noise: &NoiseModel,
    trials: usize,
    rng: &mut R,
) -> Result<f64, FcsError> {
    let mut rejected = 0usize;
    for _ in 0..trials {
        let x = Bits::random(rng, code.n());
        let c = fcs::commit(code, &FeatureVector::new(x.clone()), rng)?;
        let reading = &x ^ &noise.sample(rng, code.n());
        if !fcs::open(code, &c, &FeatureVector::new(reading))? {
            rejected += 1;
        }
    }
    Ok(rejected as f64 / trials as f64)
}

/// Fraction of independent uniform vectors accepted against a commitment.
pub fn empirical_far<R: Rng + ?Sized>(code: &LinearCode, trials: usize, rng: &mut R) -> Result<f64, FcsError> {
    let mut accepted = 0usize;
    for _ in 0..trials {
        let x = FeatureVector::new(Bits::random(rng, code.n()));
        let c = fcs::commit(code, &x, rng)?;
        let impostor = FeatureVector::new(Bits::random(rng, code.n()));
        if fcs::open(code, &c, &impostor)? {
            accepted += 1;
        }
    }
    Ok(accepted as f64 / trials as f64)
}

/// One row per (code, p). Each row draws from its own substream of `seed`.
pub fn far_frr_sweep(
    codes: &[LinearCode],
    p_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, SweepError> {
    if trials < MIN_TRIALS {
        return Err(SweepError::TooFewTrials(trials));
    }
    let mut rows = Vec::with_capacity(codes.len() * p_grid.len());
    for code in codes {
        for &p in p_grid {
            let noise = NoiseModel::new(p)?;
            let label = format!("sweep/{:?}/{}/{}/{p}", code.family(), code.n(), code.k());
            let mut rng = substream(seed, &label);
            let analytic = analytic_error_rates(code, &noise);
            rows.push(SweepRow {
                family: code.family(),
                n: code.n(),
                k: code.k(),
                t: code.t(),
                p,
                frr_analytic: analytic.frr,
                frr_empirical: empirical_frr(code, &noise, trials, &mut rng)?,
                far_analytic: analytic.far,
                far_empirical: empirical_far(code, trials, &mut rng)?,
                trials,
            });
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "family", "n", "k", "t", "p", "frr_analytic", "frr_empirical", "far_analytic", "far_empirical", "trials",
        ])
        .expect("in-memory write");
    }
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
