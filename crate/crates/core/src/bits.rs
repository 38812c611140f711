// SPDX-License-Identifier: Apache-2.0

//! Binary vectors with the ASCII `'0'/'1'` wire format used throughout the
//! crate (leftmost character is index 0).

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid bit character {found:?} at position {position}")]
pub struct ParseBitsError {
    pub position: usize,
    pub found: char,
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bits(BitVec<u64, Lsb0>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(bitvec![u64, Lsb0; 0; len])
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }

    /// Low `len` bits of `word`, bit 0 first.
    pub fn from_word(word: u64, len: usize) -> Self {
        assert!(len <= 64);
        Self::from_bools((0..len).map(|i| (word >> i) & 1 == 1))
    }

    /// Uniform random vector of `len` bits.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self::from_bools((0..len).map(|_| rng.gen::<bool>()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.0.set(index, value);
    }

    pub fn flip(&mut self, index: usize) {
        let v = self.0[index];
        self.0.set(index, !v);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.0.count_ones()
    }

    pub fn distance(&self, other: &Bits) -> usize {
        (self ^ other).weight()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().by_vals()
    }

    /// Indices of the set bits.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter_ones()
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits(self.0[start..end].to_bitvec())
    }

    pub fn concat(&self, tail: &Bits) -> Bits {
        let mut out = self.0.clone();
        out.extend_from_bitslice(&tail.0);
        Bits(out)
    }

    /// Packs the vector into a word, index 0 in the least significant bit.
    pub fn to_word(&self) -> u64 {
        assert!(self.len() <= 64, "vector too long to pack");
        self.ones().fold(0u64, |acc, i| acc | (1 << i))
    }
}

impl BitXor for &Bits {
    type Output = Bits;

    /// Panics on length mismatch; callers validate lengths first.
    fn bitxor(self, rhs: &Bits) -> Bits {
        assert_eq!(self.len(), rhs.len(), "xor of vectors with different lengths");
        let mut out = self.0.clone();
        out ^= &rhs.0;
        Bits(out)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl FromStr for Bits {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(position, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(ParseBitsError { position, found }),
            })
            .collect::<Result<BitVec<u64, Lsb0>, _>>()
            .map(Bits)
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
