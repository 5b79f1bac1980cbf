//! Fixed-length classical bitstrings, written left to right as qubit 1 … n.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// A classical bitstring. Position 0 is qubit 1, the most significant bit of
/// the basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(n: usize) -> Self {
        BitString(alloc::vec![false; n])
    }

    /// The `n`-bit string whose basis index is `index`.
    pub fn from_index(n: usize, index: usize) -> Self {
        BitString((0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect())
    }

    /// Basis index with bit 1 as the most significant bit.
    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Bit of qubit `q` (1-based).
    pub fn bit(&self, q: usize) -> bool {
        self.0[q - 1]
    }

    pub fn flipped(&self, q: usize) -> Self {
        let mut out = self.clone();
        out.0[q - 1] = !out.0[q - 1];
        out
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::input(alloc::format!(
                "xor of bitstrings with lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(BitString(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => {
                    Err(Error::input(alloc::format!("bitstring contains {other:?}; only '0' and '1' are allowed")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}
