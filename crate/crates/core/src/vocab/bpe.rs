use std::collections::HashMap;

use super::{TokenId, VocabError, Vocabulary};

/// Pairs seen fewer times than this are never merged.
const MIN_PAIR_FREQUENCY: usize = 2;

/// Trains a byte-level BPE vocabulary on `corpus` treated as one byte stream.
///
/// Starts from the 256 byte tokens and repeatedly merges the most frequent
/// adjacent pair; ties go to the lexicographically smallest merged surface,
/// then to the smallest `(left, right)` id pair. Stops at `target_size`
/// tokens or when no pair occurs at least twice. A merge whose surface is
/// already in the vocabulary reuses the existing token.
pub fn train_bpe(corpus: &[u8], target_size: usize) -> Result<Vocabulary, VocabError> {
    if corpus.is_empty() {
        return Err(VocabError::EmptyCorpus);
    }
    if target_size < 256 {
        return Err(VocabError::TargetTooSmall(target_size));
    }

    let mut surfaces: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut index: HashMap<Vec<u8>, TokenId> = surfaces
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as TokenId))
        .collect();
    let mut seq: Vec<TokenId> = corpus.iter().map(|&b| TokenId::from(b)).collect();

    while surfaces.len() < target_size && seq.len() > 1 {
        let mut counts: HashMap<(TokenId, TokenId), usize> = HashMap::new();
        for w in seq.windows(2) {
            *counts.entry((w[0], w[1])).or_insert(0) += 1;
        }

        let mut best: Option<((TokenId, TokenId), usize, Vec<u8>)> = None;
        for (&pair, &count) in &counts {
            if count < MIN_PAIR_FREQUENCY {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bp, bc, bm)) => {
                    if count != *bc {
                        count > *bc
                    } else {
                        let merged = concat(&surfaces, pair);
                        (merged.as_slice(), pair) < (bm.as_slice(), *bp)
                    }
                }
            };
            if better {
                best = Some((pair, count, concat(&surfaces, pair)));
            }
        }
        let Some((pair, _, merged)) = best else {
            break;
        };

        let new_id = match index.get(&merged) {
            Some(&id) => id,
            None => {
                let id = surfaces.len() as TokenId;
                index.insert(merged.clone(), id);
                surfaces.push(merged);
                id
            }
        };
        seq = apply_merge(&seq, pair, new_id);
    }

    Vocabulary::from_surfaces(surfaces)
}

fn concat(surfaces: &[Vec<u8>], (l, r): (TokenId, TokenId)) -> Vec<u8> {
    let mut m = surfaces[l as usize].clone();
    m.extend_from_slice(&surfaces[r as usize]);
    m
}

fn apply_merge(seq: &[TokenId], (l, r): (TokenId, TokenId), new_id: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == l && seq[i + 1] == r {
            out.push(new_id);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    out
}
