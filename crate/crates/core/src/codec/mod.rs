//! Block encoding of secret bits into generated tokens.
//!
//! Each step queries the shared model, keeps the tokens scoring at least the
//! threshold, optionally drops every candidate that is a byte prefix of
//! another (the proposed method), and assigns `n`-bit chunks to the top `2^n`
//! survivors in rank order. The sender emits the token whose chunk matches
//! the next message bits.
//!
//! Two receivers are provided. [`decode_unaware`] retokenizes the cover with
//! the greedy tokenizer and looks each token up, which breaks whenever the
//! retokenization differs from what the sender generated. [`decode_proposed`]
//! replays the sender's loop and matches one candidate at a time against the
//! remaining cover bytes; prefix-freeness makes that match unique.

mod candidates;
mod decode;
mod encode;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::lm::{LmError, Score};
use crate::vocab::TokenId;

pub use candidates::{
    assign_chunks, block_size, candidate_filter, disambiguate, plan_step, Candidate,
    ChunkAssignment, StepPlan,
};
pub use decode::{decode_proposed, decode_unaware, ProposedDecoding, UnawareDecoding};
pub use encode::{encode, Encoded};

/// Generation stops with an error after this many steps without finishing.
pub const DEFAULT_MAX_STEPS: usize = 65_536;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("threshold {0} must be below 1")]
    InvalidThreshold(Score),
    #[error("message length must be at least one bit")]
    InvalidMessageLength,
    #[error("message has {actual} bits but the parameters say {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("model vocabulary has {model} tokens but the vocabulary has {vocab}")]
    VocabSizeMismatch { model: usize, vocab: usize },
    #[error("codec method is {0} but this operation needs the other method")]
    MethodMismatch(Method),
    #[error("block size of an empty candidate set")]
    EmptyCandidateSet,
    #[error("insufficient candidates: the model scored no tokens")]
    InsufficientCandidates,
    #[error("model scored unknown token {id}")]
    TokenOutOfRange { id: TokenId },
    #[error("message not embedded after {0} steps")]
    StepLimit(usize),
    #[error("desynchronized at step {step}: no candidate matches cover offset {offset}")]
    Desynchronized { step: usize, offset: usize },
    #[error("truncated cover: exhausted at step {step} with {missing} bits missing")]
    TruncatedCover { step: usize, missing: usize },
    #[error("token not in candidate set: token {token} at step {step}")]
    TokenNotInCandidateSet { step: usize, token: TokenId },
    #[error(transparent)]
    Lm(#[from] LmError),
}

/// Which protocol both parties follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain block encoding, receiver retokenizes greedily.
    Unaware,
    /// Prefix-free candidate sets, receiver tokenizes stepwise.
    Proposed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Unaware => "unaware",
            Method::Proposed => "proposed",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unaware" => Ok(Method::Unaware),
            "proposed" => Ok(Method::Proposed),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

/// Parameters both parties agree on out of band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecParams {
    threshold: Score,
    method: Method,
    msg_len_bits: usize,
    max_steps: usize,
}

impl CodecParams {
    /// Threshold defaults to 1/100.
    pub fn new(method: Method, msg_len_bits: usize) -> Result<Self, CodecError> {
        if msg_len_bits == 0 {
            return Err(CodecError::InvalidMessageLength);
        }
        Ok(Self {
            threshold: Score::new(1, 100),
            method,
            msg_len_bits,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    pub fn with_threshold(mut self, p: Score) -> Result<Self, CodecError> {
        if p >= Score::new(1, 1) {
            return Err(CodecError::InvalidThreshold(p));
        }
        self.threshold = p;
        Ok(self)
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn threshold(&self) -> Score {
        self.threshold
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn msg_len_bits(&self) -> usize {
        self.msg_len_bits
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }
}

/// One generation (or replay) step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Threshold survivors in rank order.
    pub candidates: Vec<TokenId>,
    /// Survivors after prefix removal; equal to `candidates` for the unaware method.
    pub disambiguated: Vec<TokenId>,
    pub n: u32,
    pub chosen: TokenId,
    /// Message bits carried by this step; shorter than `n` only on a padded final step.
    pub bits: BitString,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn chosen_tokens(&self) -> Vec<TokenId> {
        self.steps.iter().map(|s| s.chosen).collect()
    }
}
