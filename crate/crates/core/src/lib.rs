//! Linguistic steganography with block encoding that survives
//! detokenization.
//!
//! A sender hides bits in text generated by a shared next-token model and
//! sends the detokenized cover. A receiver that simply retokenizes the cover
//! can recover different tokens than the sender generated, and then decodes
//! garbage. This crate implements both that ambiguity-unaware baseline and a
//! protocol that cannot fail: candidate sets are made prefix-free at every
//! step and the receiver tokenizes stepwise by matching candidates against
//! the remaining cover bytes.
//!
//! Modules:
//! - [`vocab`]: byte-surface vocabularies, a small BPE trainer, greedy retokenization
//! - [`ngram`]: an exact-rational n-gram model for in-process experiments
//! - [`lm`]: the [`NextTokenModel`] interface and exact [`Score`]s
//! - [`codec`]: encoder and both decoders
//! - [`harness`]: seeded trials, error rates, bits/token reports
//! - [`bridge`]: a [`NextTokenModel`] served by an external process

pub mod bits;
pub mod bridge;
pub mod codec;
pub mod harness;
pub mod lm;
pub mod ngram;
pub mod vocab;

pub use bits::BitString;
pub use codec::{
    decode_proposed, decode_unaware, encode, CodecError, CodecParams, Encoded, Method, Trace,
};
pub use lm::{Distribution, NextTokenModel, Score};
pub use ngram::{train_ngram, NGramModel};
pub use vocab::{detokenize, greedy_tokenize, train_bpe, TokenId, Vocabulary};
