use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::SCORE_DIGITS;
use crate::lm::Score;
use crate::vocab::TokenId;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum RequestBody {
    Hello { proto: u32 },
    Dist(DistRequest),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistRequest {
    pub context: Vec<TokenId>,
    pub min_score: String,
    pub max_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenScore {
    pub id: TokenId,
    pub score: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(flatten)]
    pub body: ResponseBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseBody {
    Error {
        error: String,
    },
    Hello {
        vocab_size: usize,
        fingerprint: String,
        model: String,
    },
    Dist {
        tokens: Vec<TokenScore>,
    },
}

impl Response {
    pub fn error(id: u64, message: impl Into<String>) -> Self {
        Self {
            id,
            body: ResponseBody::Error {
                error: message.into(),
            },
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

impl Request {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

/// Rounds `score` to [`SCORE_DIGITS`] significant digits (half up) as a
/// plain decimal, e.g. `0.0123456789012345679`.
pub fn format_score(score: Score) -> String {
    let r = score.to_ratio();
    let (numer, denom) = (BigUint::from(*r.numer()), BigUint::from(*r.denom()));
    if numer == BigUint::ZERO {
        return "0".to_string();
    }
    let ten = BigUint::from(10u32);
    // exponent e with 10^e <= x < 10^(e+1)
    let mut e: i64 = 0;
    if numer >= denom {
        while numer >= &denom * ten.pow((e + 1) as u32) {
            e += 1;
        }
    } else {
        while &numer * ten.pow((-e) as u32) < denom {
            e -= 1;
        }
    }
    let shift = SCORE_DIGITS as i64 - 1 - e;
    let (num, den) = if shift >= 0 {
        (numer * ten.pow(shift as u32), denom)
    } else {
        (numer, denom * ten.pow((-shift) as u32))
    };
    let mut mantissa = (&num * 2u32 + &den) / (&den * 2u32);
    let mut shift = shift;
    if mantissa >= ten.pow(SCORE_DIGITS as u32) {
        mantissa /= 10u32;
        shift -= 1;
    }
    let digits = mantissa.to_string();
    if shift <= 0 {
        return format!("{digits}{}", "0".repeat((-shift) as usize));
    }
    let shift = shift as usize;
    if shift >= digits.len() {
        format!("0.{}{digits}", "0".repeat(shift - digits.len()))
    } else {
        let (int, frac) = digits.split_at(digits.len() - shift);
        format!("{int}.{frac}")
    }
}
