//! Seeded trials measuring decoding error rate and payload capacity.
//!
//! Each trial takes the next corpus line as its prompt, draws a random
//! message from a per-trial generator, encodes it with every configured
//! method and runs that method's decoder. Trials are independent, and each
//! derives its message from `(seed, trial index)` alone, so serial and
//! parallel runs produce identical reports.

mod report;

use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::codec::{decode_proposed, decode_unaware, encode, CodecError, CodecParams, Method};
use crate::lm::{NextTokenModel, Score};
use crate::vocab::{TokenId, Vocabulary};

pub use report::{emit_report, parse_report, Exemplar, MethodSummary, ReportFormat, TrialReport};

/// Identifier of the message generator, stored in every report.
///
/// Trial `i` under seed `s` reads the ChaCha8 keystream (nonce 0, block
/// counter 0) keyed by `le64(s) || le64(i) || 0^16`, taking message bits MSB
/// first from successive keystream bytes.
pub const PRNG_ID: &str = "chacha8-le64seed-le64trial-v1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus has no non-empty lines")]
    EmptyCorpus,
    #[error("invalid trial config: {0}")]
    Config(String),
    #[error("trial {trial} ({method}): {source}")]
    Codec {
        trial: usize,
        method: Method,
        #[source]
        source: CodecError,
    },
}

fn default_msg_len() -> usize {
    64
}

fn default_threshold() -> String {
    "1/100".into()
}

fn default_methods() -> Vec<Method> {
    vec![Method::Proposed, Method::Unaware]
}

fn default_exemplars() -> usize {
    3
}

fn default_prng() -> String {
    PRNG_ID.into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: usize,
    #[serde(default = "default_msg_len")]
    pub msg_len_bits: usize,
    pub seed: u64,
    /// Codec threshold as `NUM/DEN` or a decimal.
    #[serde(default = "default_threshold")]
    pub threshold: String,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Prompts are cut to at most this many bytes.
    #[serde(default)]
    pub max_prompt_bytes: Option<usize>,
    /// Failing trials kept per method as exemplars.
    #[serde(default = "default_exemplars")]
    pub exemplars: usize,
    #[serde(default = "default_prng")]
    pub prng: String,
}

impl TrialConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            msg_len_bits: default_msg_len(),
            seed,
            threshold: default_threshold(),
            methods: default_methods(),
            max_prompt_bytes: None,
            exemplars: default_exemplars(),
            prng: default_prng(),
        }
    }

    pub fn params(&self, method: Method) -> Result<CodecParams, HarnessError> {
        let p: Score = self.threshold.parse().map_err(HarnessError::Config)?;
        CodecParams::new(method, self.msg_len_bits)
            .and_then(|c| c.with_threshold(p))
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.prng != PRNG_ID {
            return Err(HarnessError::Config(format!("unknown prng {:?}", self.prng)));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Config("no methods".into()));
        }
        for &m in &self.methods {
            self.params(m)?;
        }
        Ok(())
    }
}

/// The secret message for one trial.
pub fn trial_message(seed: u64, trial: usize, len_bits: usize) -> BitString {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(trial as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    let mut bytes = vec![0u8; len_bits.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitString::from_bytes(&bytes, len_bits).expect("enough keystream")
}

/// Non-empty corpus lines, each cut to `max_bytes`.
pub fn corpus_prompts(corpus: &[u8], max_bytes: Option<usize>) -> Vec<Vec<u8>> {
    corpus
        .split(|&b| b == b'\n')
        .map(|line| line.strip_suffix(b"\r").unwrap_or(line))
        .filter(|line| !line.is_empty())
        .map(|line| {
            let cut = max_bytes.map_or(line.len(), |m| m.min(line.len()));
            line[..cut].to_vec()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// The receiver recovered a different token sequence.
    RetokenizationMismatch,
    /// A received token was not among the step's chunk-assigned candidates,
    /// or no candidate matched the remaining cover.
    CandidateMiss,
    /// The cover ran out before the message was complete.
    Truncated,
    /// Same tokens, different bits. Never expected.
    BitMismatch,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::RetokenizationMismatch => "retokenization-mismatch",
            FailureKind::CandidateMiss => "candidate-miss",
            FailureKind::Truncated => "truncated",
            FailureKind::BitMismatch => "bit-mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub method: Method,
    pub failure: Option<FailureKind>,
    pub prompt: Vec<u8>,
    pub message: BitString,
    pub decoded: Option<BitString>,
    pub sender_tokens: Vec<TokenId>,
    /// Tokens the receiver ended up with, when it got that far.
    pub receiver_tokens: Vec<TokenId>,
    pub cover: Vec<u8>,
    pub bits: usize,
}

impl TrialOutcome {
    pub fn success(&self) -> bool {
        self.failure.is_none()
    }

    pub fn tokens(&self) -> usize {
        self.sender_tokens.len()
    }

    pub fn bits_per_token(&self) -> num_rational::Ratio<u64> {
        num_rational::Ratio::new(self.bits as u64, self.tokens().max(1) as u64)
    }
}

fn classify(err: CodecError, trial: usize, method: Method) -> Result<FailureKind, HarnessError> {
    match err {
        CodecError::Desynchronized { .. } | CodecError::TokenNotInCandidateSet { .. } => {
            Ok(FailureKind::CandidateMiss)
        }
        CodecError::TruncatedCover { .. } => Ok(FailureKind::Truncated),
        source => Err(HarnessError::Codec {
            trial,
            method,
            source,
        }),
    }
}

/// Encodes and decodes one message with one method.
pub fn run_trial<M: NextTokenModel + ?Sized>(
    trial: usize,
    prompt: &[u8],
    message: &BitString,
    lm: &M,
    vocab: &Vocabulary,
    params: &CodecParams,
) -> Result<TrialOutcome, HarnessError> {
    let method = params.method();
    let wrap = |source| HarnessError::Codec {
        trial,
        method,
        source,
    };
    let sent = encode(message, prompt, lm, vocab, params).map_err(wrap)?;

    let decoded = match method {
        Method::Proposed => decode_proposed(&sent.cover, prompt, lm, vocab, params)
            .map(|d| (d.message, d.tokens)),
        Method::Unaware => decode_unaware(&sent.cover, prompt, lm, vocab, params)
            .map(|d| (d.message, d.retokenization)),
    };
    let (failure, decoded, receiver_tokens) = match decoded {
        Ok((bits, tokens)) => {
            let failure = if tokens != sent.tokens {
                Some(FailureKind::RetokenizationMismatch)
            } else if bits != *message {
                Some(FailureKind::BitMismatch)
            } else {
                None
            };
            (failure, Some(bits), tokens)
        }
        Err(e) => {
            let kind = classify(e, trial, method)?;
            let tokens = match method {
                Method::Unaware => crate::vocab::greedy_tokenize(&sent.cover, vocab),
                Method::Proposed => Vec::new(),
            };
            // the sequence mismatch is what the failure criterion counts
            let kind = if method == Method::Unaware && tokens != sent.tokens {
                FailureKind::RetokenizationMismatch
            } else {
                kind
            };
            (Some(kind), None, tokens)
        }
    };

    Ok(TrialOutcome {
        trial,
        method,
        failure,
        prompt: prompt.to_vec(),
        message: message.clone(),
        decoded,
        sender_tokens: sent.tokens,
        receiver_tokens,
        cover: sent.cover,
        bits: message.len(),
    })
}

/// Runs every configured method over `config.trials` seeded trials.
///
/// A proposed-method failure does not abort the run; the report flags it as
/// a protocol violation instead.
pub fn run_trials<M: NextTokenModel + Sync + ?Sized>(
    config: &TrialConfig,
    corpus: &[u8],
    lm: &M,
    vocab: &Vocabulary,
    parallel: bool,
) -> Result<TrialReport, HarnessError> {
    config.validate()?;
    let prompts = corpus_prompts(corpus, config.max_prompt_bytes);
    if prompts.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }

    let one = |trial: usize| -> Result<Vec<TrialOutcome>, HarnessError> {
        let prompt = &prompts[trial % prompts.len()];
        let message = trial_message(config.seed, trial, config.msg_len_bits);
        config
            .methods
            .iter()
            .map(|&m| run_trial(trial, prompt, &message, lm, vocab, &config.params(m)?))
            .collect()
    };
    let per_trial: Vec<Vec<TrialOutcome>> = if parallel {
        (0..config.trials).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..config.trials).map(one).collect::<Result<_, _>>()?
    };

    let wraparounds = (config.trials - 1) / prompts.len();
    Ok(TrialReport::build(
        config,
        prompts.len(),
        wraparounds,
        per_trial.into_iter().flatten().collect(),
        vocab,
    ))
}
