use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid hex message: {0}")]
    InvalidHex(String),
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
    #[error("{bits} bits requested from {available} available")]
    TooShort { bits: usize, available: usize },
}

/// An exact-length bit sequence, most significant bit first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    /// First `len_bits` bits of `bytes`, MSB first within each byte.
    pub fn from_bytes(bytes: &[u8], len_bits: usize) -> Result<Self, BitsError> {
        if len_bits > bytes.len() * 8 {
            return Err(BitsError::TooShort {
                bits: len_bits,
                available: bytes.len() * 8,
            });
        }
        let bits = (0..len_bits)
            .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
            .collect();
        Ok(Self { bits })
    }

    /// Packs into bytes, zero-padding the last byte on the right.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    /// Four bits per hex digit, so the length is always a multiple of four.
    pub fn from_hex(hex: &str) -> Result<Self, BitsError> {
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.trim().chars() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| BitsError::InvalidHex(hex.to_string()))?;
            bits.extend((0..4).rev().map(|k| v >> k & 1 == 1));
        }
        Ok(Self { bits })
    }

    /// Lowercase hex, zero-padding the final nibble on the right.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|nib| {
                let v = (0..4).fold(0u32, |acc, k| acc << 1 | u32::from(*nib.get(k).unwrap_or(&false)));
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }

    /// `width` bits starting at `start` as an integer; positions past the end read as zero.
    pub fn chunk_at(&self, start: usize, width: u32) -> u64 {
        (0..width as usize).fold(0u64, |acc, k| {
            acc << 1 | u64::from(*self.bits.get(start + k).unwrap_or(&false))
        })
    }

    /// Appends the low `width` bits of `value`, MSB first.
    pub fn push_chunk(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            self.bits.push(value >> k & 1 == 1);
        }
    }

    /// Bits `start..end` as a new string.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            bits: self.bits[start..end].to_vec(),
        }
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    /// Parses a string of `0` and `1` characters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
