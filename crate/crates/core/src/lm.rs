//! The next-token model interface shared by sender and receiver.
//!
//! Scores are exact rationals. Both parties must rank candidates identically,
//! so nothing on the query path touches floating point.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::bridge::BridgeError;
use crate::vocab::TokenId;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("score arithmetic overflowed 128 bits")]
    ScoreOverflow,
    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: TokenId, vocab_size: usize },
    #[error("insufficient candidates: model returned no scored tokens")]
    InsufficientCandidates,
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// A non-negative exact rational `numer / denom`.
#[derive(Debug, Clone, Copy)]
pub struct Score {
    numer: u128,
    denom: u128,
}

impl Score {
    pub const ZERO: Score = Score { numer: 0, denom: 1 };

    /// Panics if `denom` is zero.
    pub fn new(numer: u128, denom: u128) -> Self {
        assert!(denom != 0, "zero denominator");
        Self { numer, denom }
    }

    pub fn numer(&self) -> u128 {
        self.numer
    }

    pub fn denom(&self) -> u128 {
        self.denom
    }

    /// Reduced form.
    pub fn to_ratio(self) -> Ratio<u128> {
        Ratio::new(self.numer, self.denom)
    }

    /// Parses a plain or scientific decimal such as `0.0125` or `1.25e-2`.
    pub fn from_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut numer: u128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            numer = numer.checked_mul(10)?.checked_add(u128::from(b - b'0'))?;
        }
        let scale = frac_part.len() as i32 - exp;
        if scale >= 0 {
            Some(Self::new(numer, 10u128.checked_pow(scale as u32)?))
        } else {
            let numer = numer.checked_mul(10u128.checked_pow((-scale) as u32)?)?;
            Some(Self::new(numer, 1))
        }
    }
}

impl From<Ratio<u128>> for Score {
    fn from(r: Ratio<u128>) -> Self {
        Self::new(*r.numer(), *r.denom())
    }
}

impl FromStr for Score {
    type Err = String;

    /// Accepts `NUM/DEN`, an integer, or a decimal.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((n, d)) = s.split_once('/') {
            let n: u128 = n.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let d: u128 = d.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            if d == 0 {
                return Err(format!("{s}: zero denominator"));
            }
            return Ok(Self::new(n, d));
        }
        Self::from_decimal(s).ok_or_else(|| format!("{s}: not a rational"))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.to_ratio();
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.denom == other.denom {
            return self.numer.cmp(&other.numer);
        }
        mul_wide(self.numer, other.denom).cmp(&mul_wide(other.numer, self.denom))
    }
}

/// Full 256-bit product as `(high, low)`.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);
    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;
    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let low = (ll & MASK) | (mid << 64);
    let high = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (high, low)
}

/// Scores over a shared denominator. Tokens absent from `entries` score zero.
///
/// In-process models list every token; bridge models list only tokens at or
/// above the server-side cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    denominator: u128,
    entries: Vec<(TokenId, u128)>,
}

impl Distribution {
    /// Panics if `denominator` is zero.
    pub fn new(denominator: u128, entries: Vec<(TokenId, u128)>) -> Self {
        assert!(denominator != 0, "zero denominator");
        Self {
            denominator,
            entries,
        }
    }

    /// Uniform over `vocab_size` tokens.
    pub fn uniform(vocab_size: usize) -> Self {
        let entries = (0..vocab_size as TokenId).map(|id| (id, 1)).collect();
        Self::new(vocab_size as u128, entries)
    }

    /// Rescales individual scores onto their least common denominator.
    pub fn from_scores(scores: Vec<(TokenId, Score)>) -> Result<Self, LmError> {
        let mut denominator: u128 = 1;
        for (_, s) in &scores {
            let d = s.to_ratio().denom().to_owned();
            denominator = lcm(denominator, d).ok_or(LmError::ScoreOverflow)?;
        }
        let entries = scores
            .into_iter()
            .map(|(id, s)| {
                let r = s.to_ratio();
                let factor = denominator / r.denom();
                r.numer()
                    .checked_mul(factor)
                    .map(|n| (id, n))
                    .ok_or(LmError::ScoreOverflow)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::new(denominator, entries))
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    /// `(token, numerator)` pairs in model order.
    pub fn entries(&self) -> &[(TokenId, u128)] {
        &self.entries
    }

    pub fn score(&self, id: TokenId) -> Score {
        self.entries
            .iter()
            .find(|(t, _)| *t == id)
            .map(|&(_, n)| Score::new(n, self.denominator))
            .unwrap_or(Score::ZERO)
    }

    /// Sum of all listed scores, reduced. `None` on overflow.
    pub fn total(&self) -> Option<Ratio<u128>> {
        let mut sum: u128 = 0;
        for &(_, n) in &self.entries {
            sum = sum.checked_add(n)?;
        }
        Some(Ratio::new(sum, self.denominator))
    }

    pub fn is_normalized(&self) -> bool {
        self.total() == Some(Ratio::from_integer(1))
    }
}

fn lcm(a: u128, b: u128) -> Option<u128> {
    let mut x = a;
    let mut y = b;
    while y != 0 {
        (x, y) = (y, x % y);
    }
    (a / x).checked_mul(b)
}

/// A deterministic conditional distribution over a fixed vocabulary.
///
/// Implementations must be pure: the same context yields the same
/// distribution on every call and every platform.
pub trait NextTokenModel {
    fn vocab_size(&self) -> usize;

    fn distribution(&self, context: &[TokenId]) -> Result<Distribution, LmError>;
}

impl<M: NextTokenModel + ?Sized> NextTokenModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn distribution(&self, context: &[TokenId]) -> Result<Distribution, LmError> {
        (**self).distribution(context)
    }
}

impl<M: NextTokenModel + ?Sized> NextTokenModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn distribution(&self, context: &[TokenId]) -> Result<Distribution, LmError> {
        (**self).distribution(context)
    }
}
