//! Subword vocabularies over canonical byte surfaces.
//!
//! Every token is exactly the bytes it contributes to the running text, so
//! continuation markers such as WordPiece `##` or SentencePiece `▁` are
//! resolved before a [`Vocabulary`] is built. Detokenization is therefore
//! plain concatenation, and "prefix" always means byte prefix.

mod bpe;
mod io;

use std::collections::HashMap;

use thiserror::Error;

pub use bpe::train_bpe;
pub use io::{load_vocab, save_vocab, vocab_from_json, vocab_to_json};

/// Dense token identifier, `0..vocab.len()`.
pub type TokenId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("target size {0} is below the 256 byte tokens")]
    TargetTooSmall(usize),
    #[error("token {0} has an empty surface")]
    EmptySurface(TokenId),
    #[error("duplicate token id {0}")]
    DuplicateId(TokenId),
    #[error("token ids are not dense and ascending: expected {expected}, found {found}")]
    NonDenseIds { expected: TokenId, found: TokenId },
    #[error("incomplete byte coverage: no single-byte token for 0x{0:02x}")]
    IncompleteByteCoverage(u8),
    #[error("unsupported vocabulary file version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed vocabulary file: {0}")]
    Malformed(String),
    #[error("vocabulary I/O: {0}")]
    Io(String),
}

/// A subword unit and the bytes it contributes to detokenized text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub id: TokenId,
    pub surface: Vec<u8>,
}

/// An immutable, id-ordered token list covering every byte value.
///
/// Duplicate surfaces are allowed; lookups return all ids sharing a surface
/// in ascending order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<Token>,
    by_surface: HashMap<Vec<u8>, Vec<TokenId>>,
    max_surface_len: usize,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    /// Builds a vocabulary whose ids follow the order of `surfaces`.
    pub fn from_surfaces<I, S>(surfaces: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<Vec<u8>>,
    {
        let tokens = surfaces
            .into_iter()
            .enumerate()
            .map(|(i, s)| Token {
                id: i as TokenId,
                surface: s.into(),
            })
            .collect();
        Self::from_tokens(tokens)
    }

    /// Builds a vocabulary from explicit tokens, checking every invariant.
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self, VocabError> {
        let mut by_surface: HashMap<Vec<u8>, Vec<TokenId>> = HashMap::with_capacity(tokens.len());
        let mut max_surface_len = 0;
        for (expected, token) in tokens.iter().enumerate() {
            let expected = expected as TokenId;
            if token.id != expected {
                if expected > 0 && token.id == expected - 1 {
                    return Err(VocabError::DuplicateId(token.id));
                }
                return Err(VocabError::NonDenseIds {
                    expected,
                    found: token.id,
                });
            }
            if token.surface.is_empty() {
                return Err(VocabError::EmptySurface(token.id));
            }
            max_surface_len = max_surface_len.max(token.surface.len());
            by_surface
                .entry(token.surface.clone())
                .or_default()
                .push(token.id);
        }
        for b in 0..=255u8 {
            if !by_surface.contains_key(&[b][..]) {
                return Err(VocabError::IncompleteByteCoverage(b));
            }
        }
        Ok(Self {
            tokens,
            by_surface,
            max_surface_len,
        })
    }

    /// The 256 single-byte tokens, id = byte value.
    pub fn byte_level() -> Self {
        Self::from_surfaces((0..=255u8).map(|b| vec![b])).expect("byte vocabulary is complete")
    }

    /// The byte-level base followed by `extra` surfaces, in order.
    pub fn byte_level_with<I, S>(extra: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<Vec<u8>>,
    {
        let base = (0..=255u8).map(|b| vec![b]);
        Self::from_surfaces(base.chain(extra.into_iter().map(Into::into)))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn get(&self, id: TokenId) -> Option<&Token> {
        self.tokens.get(id as usize)
    }

    /// Surface of `id`. Panics on an out-of-range id.
    pub fn surface(&self, id: TokenId) -> &[u8] {
        &self.tokens[id as usize].surface
    }

    /// All ids with exactly this surface, ascending.
    pub fn ids_for(&self, surface: &[u8]) -> &[TokenId] {
        self.by_surface
            .get(surface)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Smallest id with exactly this surface.
    pub fn id_for(&self, surface: &[u8]) -> Option<TokenId> {
        self.ids_for(surface).first().copied()
    }

    pub fn max_surface_len(&self) -> usize {
        self.max_surface_len
    }

    /// Concatenates the surfaces of `ids`.
    pub fn detokenize_ids(&self, ids: &[TokenId]) -> Vec<u8> {
        let mut out = Vec::with_capacity(ids.len() * 4);
        for &id in ids {
            out.extend_from_slice(self.surface(id));
        }
        out
    }

    /// Hex SHA-256 of the canonical vocabulary file.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(vocab_to_json(self)))
    }
}

/// Concatenates token surfaces in order.
pub fn detokenize<'a, I>(tokens: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a Token>,
{
    let mut out = Vec::new();
    for token in tokens {
        out.extend_from_slice(&token.surface);
    }
    out
}

/// Left-to-right maximal munch, the way an off-the-shelf retokenizer sees a
/// detokenized text.
///
/// At each position the longest surface that prefixes the remaining bytes
/// wins; among equal surfaces the smallest id wins. Total because every byte
/// has a single-byte token.
pub fn greedy_tokenize(text: &[u8], vocab: &Vocabulary) -> Vec<TokenId> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let longest = vocab.max_surface_len().min(rest.len());
        let (len, id) = (1..=longest)
            .rev()
            .find_map(|len| vocab.id_for(&rest[..len]).map(|id| (len, id)))
            .expect("vocabulary covers every byte");
        out.push(id);
        pos += len;
    }
    out
}
