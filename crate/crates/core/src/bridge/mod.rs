//! Next-token models served by an external process.
//!
//! The wire protocol is newline-delimited JSON over a subprocess's stdio or a
//! TCP socket:
//!
//! ```text
//! -> {"id":1,"op":"hello","proto":1}
//! <- {"id":1,"vocab_size":V,"fingerprint":"<hex>","model":"<name>"}
//! -> {"id":2,"op":"dist","context":[ids...],"min_score":"<decimal>","max_candidates":K}
//! <- {"id":2,"tokens":[{"id":t,"score":"<decimal>"},...]}
//! <- {"id":N,"error":"<message>"}
//! ```
//!
//! Scores travel as decimal strings with 18 significant digits and are parsed
//! into exact rationals, so the only floating point sits on the server side.
//! Encoder and decoder agree only if both query the same server build.

mod client;
mod mock;
mod protocol;

use std::time::Duration;

use thiserror::Error;

use crate::lm::Score;

pub use client::BridgeClient;
pub use mock::{MockServer, RecordedDist, Recording, ReplayServer, Responder};
pub use protocol::{
    format_score, DistRequest, Request, RequestBody, Response, ResponseBody, TokenScore,
    PROTOCOL_VERSION,
};

/// Significant digits used for scores on the wire.
pub const SCORE_DIGITS: usize = 18;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("bridge I/O: {0}")]
    Io(String),
    #[error("bridge request {0} timed out")]
    Timeout(u64),
    #[error("bridge connection closed")]
    Closed,
    #[error("malformed bridge response: {0}")]
    Malformed(String),
    #[error("response id {got} does not echo request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("vocabulary mismatch: server has {server_size} tokens ({server_fingerprint}), local has {local_size} ({local_fingerprint})")]
    VocabularyMismatch {
        server_size: usize,
        server_fingerprint: String,
        local_size: usize,
        local_fingerprint: String,
    },
    #[error("insufficient candidates: server returned an empty token list")]
    InsufficientCandidates,
    #[error("server error: {0}")]
    Server(String),
    #[error("invalid bridge config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// Spawn `program args...` and speak over its stdin/stdout.
    Stdio { program: String, args: Vec<String> },
    /// `host:port`
    Tcp(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeConfig {
    pub transport: Transport,
    pub timeout: Duration,
    /// Server-side cutoff; must not exceed the codec threshold.
    pub min_score: Score,
    pub max_candidates: usize,
}

impl BridgeConfig {
    pub fn new(transport: Transport) -> Self {
        Self {
            transport,
            timeout: Duration::from_secs(30),
            min_score: Score::new(1, 100),
            max_candidates: 4096,
        }
    }

    /// Checks the config against the codec threshold `p` it will serve.
    pub fn validate(&self, p: Score) -> Result<(), BridgeError> {
        if self.timeout.is_zero() {
            return Err(BridgeError::Config("timeout must be positive".into()));
        }
        if self.min_score > p {
            return Err(BridgeError::Config(format!(
                "min_score {} exceeds codec threshold {p}",
                self.min_score
            )));
        }
        if self.max_candidates == 0 {
            return Err(BridgeError::Config("max_candidates must be positive".into()));
        }
        Ok(())
    }
}
