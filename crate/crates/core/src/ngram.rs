//! Exact-arithmetic interpolated n-gram model.
//!
//! For the longest available context suffix `ctx`,
//! `score(t) = (count(ctx -> t) + score_backoff(t)) / (total(ctx) + 1)`,
//! recursing down to the uniform distribution `1 / vocab_size`. Every level
//! multiplies the shared denominator by `total + 1`, so a query returns
//! integer numerators over one common denominator and sums to exactly one.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::{Distribution, LmError, NextTokenModel};
use crate::vocab::TokenId;

const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NGramError {
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("vocabulary size must be positive")]
    EmptyVocabulary,
    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: TokenId, vocab_size: usize },
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("model I/O: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ContextCounts {
    total: u64,
    next: BTreeMap<TokenId, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramModel {
    order: usize,
    vocab_size: usize,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
}

/// Counts every m-gram context `0 <= m < order` left to right.
pub fn train_ngram(
    corpus_tokens: &[TokenId],
    order: usize,
    vocab_size: usize,
) -> Result<NGramModel, NGramError> {
    if order < 1 {
        return Err(NGramError::InvalidOrder);
    }
    if vocab_size == 0 {
        return Err(NGramError::EmptyVocabulary);
    }
    if let Some(&id) = corpus_tokens.iter().find(|&&id| id as usize >= vocab_size) {
        return Err(NGramError::TokenOutOfRange { id, vocab_size });
    }
    let mut counts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
    counts.insert(Vec::new(), ContextCounts::default());
    for (i, &next) in corpus_tokens.iter().enumerate() {
        for m in 0..order.min(i + 1) {
            let entry = counts.entry(corpus_tokens[i - m..i].to_vec()).or_default();
            entry.total += 1;
            *entry.next.entry(next).or_insert(0) += 1;
        }
    }
    Ok(NGramModel {
        order,
        vocab_size,
        counts,
    })
}

impl NGramModel {
    /// A model with no observations; every query is uniform.
    pub fn untrained(order: usize, vocab_size: usize) -> Result<Self, NGramError> {
        train_ngram(&[], order, vocab_size)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored contexts, including the empty one.
    pub fn num_contexts(&self) -> usize {
        self.counts.len()
    }

    /// Observed count of `next` after exactly `context`.
    pub fn count(&self, context: &[TokenId], next: TokenId) -> u64 {
        self.counts
            .get(context)
            .and_then(|c| c.next.get(&next))
            .copied()
            .unwrap_or(0)
    }

    pub fn context_total(&self, context: &[TokenId]) -> u64 {
        self.counts.get(context).map_or(0, |c| c.total)
    }

    fn query(&self, context: &[TokenId]) -> Result<Distribution, LmError> {
        let keep = (self.order - 1).min(context.len());
        let suffix = &context[context.len() - keep..];

        let mut numerators = vec![1u128; self.vocab_size];
        let mut denominator = self.vocab_size as u128;
        for m in 0..=keep {
            let Some(level) = self.counts.get(&suffix[keep - m..]) else {
                // no longer suffix can be present either
                break;
            };
            if level.total == 0 {
                continue;
            }
            for (&id, &count) in &level.next {
                let n = &mut numerators[id as usize];
                *n = u128::from(count)
                    .checked_mul(denominator)
                    .and_then(|c| c.checked_add(*n))
                    .ok_or(LmError::ScoreOverflow)?;
            }
            denominator = denominator
                .checked_mul(u128::from(level.total) + 1)
                .ok_or(LmError::ScoreOverflow)?;
        }
        Ok(Distribution::new(
            denominator,
            numerators
                .into_iter()
                .enumerate()
                .map(|(id, n)| (id as TokenId, n))
                .collect(),
        ))
    }
}

impl NextTokenModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn distribution(&self, context: &[TokenId]) -> Result<Distribution, LmError> {
        self.query(context)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u64,
    order: usize,
    vocab_size: usize,
    counts: Vec<ContextEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextEntry {
    ctx: Vec<TokenId>,
    next: Vec<(TokenId, u64)>,
}

/// Canonical model document, contexts sorted, then next ids ascending.
pub fn model_to_json(model: &NGramModel) -> Vec<u8> {
    let mut counts: Vec<ContextEntry> = model
        .counts
        .iter()
        .map(|(ctx, c)| ContextEntry {
            ctx: ctx.clone(),
            next: c.next.iter().map(|(&id, &n)| (id, n)).collect(),
        })
        .collect();
    counts.sort_by(|a, b| a.ctx.cmp(&b.ctx));
    let file = ModelFile {
        version: FORMAT_VERSION,
        order: model.order,
        vocab_size: model.vocab_size,
        counts,
    };
    serde_json::to_vec(&file).expect("model serializes")
}

pub fn model_from_json(data: &[u8]) -> Result<NGramModel, NGramError> {
    let file: ModelFile =
        serde_json::from_slice(data).map_err(|e| NGramError::Malformed(e.to_string()))?;
    if file.version != FORMAT_VERSION {
        return Err(NGramError::UnsupportedVersion(file.version));
    }
    if file.order < 1 {
        return Err(NGramError::InvalidOrder);
    }
    if file.vocab_size == 0 {
        return Err(NGramError::EmptyVocabulary);
    }
    let vocab_size = file.vocab_size;
    let check = |id: TokenId| {
        if (id as usize) < vocab_size {
            Ok(())
        } else {
            Err(NGramError::TokenOutOfRange { id, vocab_size })
        }
    };

    let mut counts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
    counts.insert(Vec::new(), ContextCounts::default());
    let mut seen = HashSet::new();
    for entry in file.counts {
        if entry.ctx.len() >= file.order {
            return Err(NGramError::Malformed(format!(
                "context of length {} in an order-{} model",
                entry.ctx.len(),
                file.order
            )));
        }
        entry.ctx.iter().copied().try_for_each(check)?;
        let mut level = ContextCounts::default();
        for (id, n) in entry.next {
            check(id)?;
            if n == 0 {
                return Err(NGramError::Malformed(format!("zero count in context {:?}", entry.ctx)));
            }
            if level.next.insert(id, n).is_some() {
                return Err(NGramError::Malformed(format!(
                    "duplicate next id {id} in context {:?}",
                    entry.ctx
                )));
            }
            level.total = level
                .total
                .checked_add(n)
                .ok_or_else(|| NGramError::Malformed("count overflow".into()))?;
        }
        if !seen.insert(entry.ctx.clone()) {
            return Err(NGramError::Malformed(format!("duplicate context {:?}", entry.ctx)));
        }
        counts.insert(entry.ctx, level);
    }
    for ctx in counts.keys() {
        if !ctx.is_empty() && !counts.contains_key(&ctx[1..]) {
            return Err(NGramError::Malformed(format!(
                "context {ctx:?} has no backoff context"
            )));
        }
    }
    Ok(NGramModel {
        order: file.order,
        vocab_size,
        counts,
    })
}

pub fn save_model(model: &NGramModel, path: impl AsRef<Path>) -> Result<(), NGramError> {
    fs::write(path.as_ref(), model_to_json(model))
        .map_err(|e| NGramError::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NGramModel, NGramError> {
    let data = fs::read(path.as_ref())
        .map_err(|e| NGramError::Io(format!("{}: {e}", path.as_ref().display())))?;
    model_from_json(&data)
}
