// SPDX-License-Identifier: Apache-2.0

//! Binary linear block codes in systematic form `[I_k | P]` with
//! bounded-distance syndrome decoding.
//!
//! Every supported code keeps its redundancy `n - k` at or below
//! [`MAX_REDUNDANCY`] so syndromes pack into a `u32` and the coset-leader
//! table can be indexed directly. A codeword is laid out as
//! `message || parity`, so recovering the message after correction is a
//! prefix slice.

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;

/// Largest supported `n - k`; the syndrome table has `2^(n-k)` slots.
pub const MAX_REDUNDANCY: usize = 16;

/// Largest dimension for which the minimum distance of an arbitrary
/// generator matrix is computed by enumerating all `2^k` codewords.
pub const MAX_ENUMERABLE_DIMENSION: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EccError {
    #[error("invalid code parameters: {0}")]
    InvalidParameters(String),
    #[error("generator matrix cannot be row-reduced to systematic form [I | P]")]
    NonSystematicMatrix,
    #[error("generator matrix has rank {rank} but {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("code too large for table decoding (n - k = {redundancy}, k = {dimension})")]
    TableTooLarge { redundancy: usize, dimension: usize },
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("syndrome has no coset leader within the correction radius")]
    DecodingFailure,
    #[error("code description inconsistent with its generator: {0}")]
    DescriptionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeFamily {
    Repetition,
    Hamming,
    GeneratorMatrix,
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeFamily::Repetition => "repetition",
            CodeFamily::Hamming => "hamming",
            CodeFamily::GeneratorMatrix => "generator-matrix",
        })
    }
}

/// Parameters selecting a code to build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CodeSpec {
    /// `n`-fold repetition of a single bit; `n` must be odd.
    Repetition { n: usize },
    /// Hamming code with `r` parity bits, `n = 2^r - 1`.
    Hamming { r: usize },
    /// Explicit `k x n` generator matrix, one bitstring per row.
    GeneratorMatrix { generator: Vec<Bits> },
}

impl CodeSpec {
    pub fn build(&self) -> Result<LinearCode, EccError> {
        LinearCode::build(self)
    }
}

/// The JSON description of a built code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDescription {
    pub family: CodeFamily,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub generator: Vec<Bits>,
}

/// A k-bit message encoded by the code; the FCS witness.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Witness(Bits);

impl Witness {
    pub fn new(bits: Bits) -> Self {
        Witness(bits)
    }

    pub fn bits(&self) -> &Bits {
        &self.0
    }

    pub fn into_bits(self) -> Bits {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An n-bit codeword of some [`LinearCode`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Codeword(Bits);

impl Codeword {
    pub fn bits(&self) -> &Bits {
        &self.0
    }

    pub fn into_bits(self) -> Bits {
        self.0
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone)]
pub struct LinearCode {
    family: CodeFamily,
    n: usize,
    k: usize,
    d_min: usize,
    t: usize,
    /// Row `i` of `P`, bit `j` set when `P[i][j] = 1`.
    parity: Vec<u32>,
    /// Syndrome of the unit vector at each codeword position (columns of `H`).
    columns: Vec<u32>,
    /// Minimum-weight coset leader per syndrome, as error positions.
    /// Only leaders of weight at most `t` are stored.
    leaders: Vec<Option<Box<[usize]>>>,
}

impl fmt::Debug for LinearCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearCode")
            .field("family", &self.family)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("d_min", &self.d_min)
            .field("t", &self.t)
            .finish()
    }
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.n == other.n && self.parity == other.parity
    }
}

impl LinearCode {
    pub fn build(spec: &CodeSpec) -> Result<Self, EccError> {
        match spec {
            CodeSpec::Repetition { n } => Self::repetition(*n),
            CodeSpec::Hamming { r } => Self::hamming(*r),
            CodeSpec::GeneratorMatrix { generator } => Self::from_generator(generator),
        }
    }

    pub fn repetition(n: usize) -> Result<Self, EccError> {
        if n == 0 || n % 2 == 0 {
            return Err(EccError::InvalidParameters(format!(
                "repetition length must be odd, got {n}"
            )));
        }
        check_size(n - 1, 1)?;
        let all_ones = if n == 1 { 0 } else { u32::MAX >> (32 - (n - 1)) };
        Self::assemble(CodeFamily::Repetition, n, vec![all_ones], n)
    }

    pub fn hamming(r: usize) -> Result<Self, EccError> {
        if r < 2 {
            return Err(EccError::InvalidParameters(format!(
                "hamming codes need r >= 2, got {r}"
            )));
        }
        check_size(r, 1)?;
        let n = (1usize << r) - 1;
        // Message columns take every syndrome of weight >= 2, ordered by weight
        // and then descending when read with syndrome bit 0 as the leading
        // digit. For r = 3 this gives p1 = m1^m2^m4, p2 = m1^m3^m4,
        // p3 = m2^m3^m4.
        let reversed = |v: u32| v.reverse_bits() >> (32 - r);
        let parity = (1u32..(1 << r))
            .filter(|v| v.count_ones() >= 2)
            .sorted_by_key(|&v| (v.count_ones(), std::cmp::Reverse(reversed(v))))
            .collect::<Vec<_>>();
        Self::assemble(CodeFamily::Hamming, n, parity, 3)
    }

    /// Builds a code from an explicit generator matrix, row-reducing it to
    /// systematic form and computing the minimum distance exhaustively.
    pub fn from_generator(rows: &[Bits]) -> Result<Self, EccError> {
        let k = rows.len();
        if k == 0 {
            return Err(EccError::InvalidParameters("generator matrix has no rows".into()));
        }
        let n = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(EccError::LengthMismatch { expected: n, actual: bad.len() });
        }
        if n < k {
            return Err(EccError::RankDeficient { rank: n, rows: k });
        }
        check_size(n - k, k)?;
        if k > MAX_ENUMERABLE_DIMENSION {
            return Err(EccError::TableTooLarge { redundancy: n - k, dimension: k });
        }

        let mut packed: Vec<u64> = rows.iter().map(Bits::to_word).collect();
        let rank = gf2_rank(packed.clone());
        if rank < k {
            return Err(EccError::RankDeficient { rank, rows: k });
        }
        for col in 0..k {
            let pivot = (col..k)
                .find(|&r| packed[r] >> col & 1 == 1)
                .ok_or(EccError::NonSystematicMatrix)?;
            packed.swap(col, pivot);
            let pivot_row = packed[col];
            for (r, row) in packed.iter_mut().enumerate() {
                if r != col && *row >> col & 1 == 1 {
                    *row ^= pivot_row;
                }
            }
        }
        let parity: Vec<u32> = packed.iter().map(|&row| (row >> k) as u32).collect();

        let mut d_min = usize::MAX;
        let (mut message, mut check) = (0u32, 0u32);
        for i in 1u64..(1 << k) {
            let bit = i.trailing_zeros() as usize;
            message ^= 1 << bit;
            check ^= parity[bit];
            d_min = d_min.min((message.count_ones() + check.count_ones()) as usize);
        }
        Self::assemble(CodeFamily::GeneratorMatrix, n, parity, d_min)
    }

    /// Rebuilds a code from its JSON description and checks the stated
    /// parameters against the computed ones.
    pub fn from_description(desc: &CodeDescription) -> Result<Self, EccError> {
        let code = match desc.family {
            CodeFamily::Repetition => Self::repetition(desc.n)?,
            CodeFamily::Hamming => {
                if desc.k >= desc.n {
                    return Err(EccError::DescriptionMismatch("k must be below n".into()));
                }
                Self::hamming(desc.n - desc.k)?
            }
            CodeFamily::GeneratorMatrix => Self::from_generator(&desc.generator)?,
        };
        if (code.n, code.k, code.t) != (desc.n, desc.k, desc.t) {
            return Err(EccError::DescriptionMismatch(format!(
                "stated (n, k, t) = ({}, {}, {}), computed ({}, {}, {})",
                desc.n, desc.k, desc.t, code.n, code.k, code.t
            )));
        }
        if desc.family != CodeFamily::GeneratorMatrix && desc.generator != code.generator() {
            return Err(EccError::DescriptionMismatch("generator rows differ".into()));
        }
        Ok(code)
    }

    fn assemble(family: CodeFamily, n: usize, parity: Vec<u32>, d_min: usize) -> Result<Self, EccError> {
        let k = parity.len();
        let t = (d_min - 1) / 2;
        let columns: Vec<u32> = parity
            .iter()
            .copied()
            .chain((0..n - k).map(|j| 1u32 << j))
            .collect();

        let mut leaders: Vec<Option<Box<[usize]>>> = vec![None; 1 << (n - k)];
        for weight in 0..=t {
            for positions in (0..n).combinations(weight) {
                let s = positions.iter().fold(0u32, |acc, &p| acc ^ columns[p]);
                let slot = &mut leaders[s as usize];
                if slot.is_some() {
                    // Two patterns of weight <= t sharing a syndrome means t
                    // was overestimated.
                    return Err(EccError::InvalidParameters(format!(
                        "correction radius {t} is not unique-decodable"
                    )));
                }
                *slot = Some(positions.into_boxed_slice());
            }
        }

        Ok(LinearCode { family, n, k, d_min, t, parity, columns, leaders })
    }

    pub fn family(&self) -> CodeFamily {
        self.family
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Guaranteed number of correctable errors, `floor((d_min - 1) / 2)`.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    /// True when the radius-`t` balls around codewords tile the space, so
    /// every syndrome has a stored coset leader.
    pub fn is_perfect(&self) -> bool {
        self.leaders.iter().all(Option::is_some)
    }

    /// Rows of the systematic generator matrix `[I_k | P]`.
    pub fn generator(&self) -> Vec<Bits> {
        let r = self.n - self.k;
        (0..self.k)
            .map(|i| {
                let mut row = Bits::zeros(self.k);
                row.set(i, true);
                row.concat(&Bits::from_word(u64::from(self.parity[i]), r))
            })
            .collect()
    }

    /// Rows of the parity-check matrix `[P^T | I_(n-k)]`.
    pub fn parity_check(&self) -> Vec<Bits> {
        (0..self.n - self.k)
            .map(|j| Bits::from_bools(self.columns.iter().map(|c| c >> j & 1 == 1)))
            .collect()
    }

    pub fn description(&self) -> CodeDescription {
        CodeDescription {
            family: self.family,
            n: self.n,
            k: self.k,
            t: self.t,
            generator: self.generator(),
        }
    }

    /// Parameters that rebuild this code.
    pub fn spec(&self) -> CodeSpec {
        match self.family {
            CodeFamily::Repetition => CodeSpec::Repetition { n: self.n },
            CodeFamily::Hamming => CodeSpec::Hamming { r: self.n - self.k },
            CodeFamily::GeneratorMatrix => CodeSpec::GeneratorMatrix { generator: self.generator() },
        }
    }

    /// `y * H^T`, packed with syndrome bit `j` at position `j`.
    pub fn syndrome(&self, y: &Bits) -> Result<u32, EccError> {
        self.check_len(y, self.n)?;
        Ok(y.ones().fold(0, |acc, p| acc ^ self.columns[p]))
    }

    pub fn is_codeword(&self, y: &Bits) -> bool {
        matches!(self.syndrome(y), Ok(0))
    }

    pub fn encode(&self, w: &Witness) -> Result<Codeword, EccError> {
        self.check_len(w.bits(), self.k)?;
        let check = w.bits().ones().fold(0u32, |acc, i| acc ^ self.parity[i]);
        let tail = Bits::from_word(u64::from(check), self.n - self.k);
        Ok(Codeword(w.bits().concat(&tail)))
    }

    /// Corrects `y` to the unique codeword within distance `t`, if any, and
    /// returns its message part.
    pub fn decode(&self, y: &Bits) -> Result<Witness, EccError> {
        let s = self.syndrome(y)?;
        let leader = self.leaders[s as usize].as_ref().ok_or(EccError::DecodingFailure)?;
        let mut message = y.slice(0, self.k);
        for &p in leader.iter().filter(|&&p| p < self.k) {
            message.flip(p);
        }
        Ok(Witness(message))
    }

    fn check_len(&self, bits: &Bits, expected: usize) -> Result<(), EccError> {
        if bits.len() != expected {
            return Err(EccError::LengthMismatch { expected, actual: bits.len() });
        }
        Ok(())
    }
}

fn check_size(redundancy: usize, dimension: usize) -> Result<(), EccError> {
    if redundancy > MAX_REDUNDANCY {
        return Err(EccError::TableTooLarge { redundancy, dimension });
    }
    Ok(())
}

fn gf2_rank(mut rows: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank];
        for row in rows.iter_mut().skip(rank + 1) {
            if *row >> bit & 1 == 1 {
                *row ^= p;
            }
        }
        rank += 1;
    }
    rank
}
