use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{Token, TokenId, VocabError, Vocabulary};

const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    version: u64,
    tokens: Vec<TokenEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenEntry {
    id: TokenId,
    bytes: String,
}

/// Canonical vocabulary document: `{"version":1,"tokens":[{"id":..,"bytes":"<base64>"},..]}`.
pub fn vocab_to_json(vocab: &Vocabulary) -> Vec<u8> {
    let file = VocabFile {
        version: FORMAT_VERSION,
        tokens: vocab
            .tokens()
            .iter()
            .map(|t| TokenEntry {
                id: t.id,
                bytes: BASE64.encode(&t.surface),
            })
            .collect(),
    };
    serde_json::to_vec(&file).expect("vocabulary serializes")
}

pub fn vocab_from_json(data: &[u8]) -> Result<Vocabulary, VocabError> {
    let file: VocabFile =
        serde_json::from_slice(data).map_err(|e| VocabError::Malformed(e.to_string()))?;
    if file.version != FORMAT_VERSION {
        return Err(VocabError::UnsupportedVersion(file.version));
    }
    let tokens = file
        .tokens
        .into_iter()
        .map(|entry| {
            let surface = BASE64.decode(entry.bytes.as_bytes()).map_err(|e| {
                VocabError::Malformed(format!("token {}: bad base64: {e}", entry.id))
            })?;
            Ok(Token {
                id: entry.id,
                surface,
            })
        })
        .collect::<Result<Vec<_>, VocabError>>()?;
    Vocabulary::from_tokens(tokens)
}

pub fn save_vocab(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<(), VocabError> {
    fs::write(path.as_ref(), vocab_to_json(vocab))
        .map_err(|e| VocabError::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary, VocabError> {
    let data = fs::read(path.as_ref())
        .map_err(|e| VocabError::Io(format!("{}: {e}", path.as_ref().display())))?;
    vocab_from_json(&data)
}
