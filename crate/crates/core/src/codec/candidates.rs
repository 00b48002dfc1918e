use super::{CodecError, CodecParams, Method};
use crate::lm::{Distribution, Score};
use crate::vocab::{TokenId, Vocabulary};

/// A token admitted at one step, with its rank after sorting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate<'v> {
    pub token_id: TokenId,
    pub surface: &'v [u8],
    pub score: Score,
    pub rank: usize,
}

/// Tokens scoring at least `p`, sorted by score descending then id ascending.
///
/// When nothing reaches `p`, the single best token is returned alone so the
/// step is forced rather than empty.
pub fn candidate_filter<'v>(
    dist: &Distribution,
    vocab: &'v Vocabulary,
    p: Score,
) -> Result<Vec<Candidate<'v>>, CodecError> {
    let denom = dist.denominator();
    let make = |&(id, numer): &(TokenId, u128)| -> Result<Candidate<'v>, CodecError> {
        let token = vocab.get(id).ok_or(CodecError::TokenOutOfRange { id })?;
        Ok(Candidate {
            token_id: id,
            surface: &token.surface,
            score: Score::new(numer, denom),
            rank: 0,
        })
    };
    let by_rank = |a: &Candidate, b: &Candidate| b.score.cmp(&a.score).then(a.token_id.cmp(&b.token_id));

    let mut out = Vec::new();
    for entry in dist.entries() {
        if Score::new(entry.1, denom) >= p {
            out.push(make(entry)?);
        }
    }
    if out.is_empty() {
        let best = dist
            .entries()
            .iter()
            .min_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)))
            .ok_or(CodecError::InsufficientCandidates)?;
        out.push(make(best)?);
    }
    out.sort_by(by_rank);
    rerank(&mut out);
    Ok(out)
}

fn rerank(cands: &mut [Candidate<'_>]) {
    for (i, c) in cands.iter_mut().enumerate() {
        c.rank = i;
    }
}

/// Removes every candidate whose surface is a byte prefix of another
/// candidate's surface. Of two equal surfaces the lower-ranked one goes.
/// Survivors keep their relative order and are re-ranked densely.
pub fn disambiguate<'v>(candidates: &[Candidate<'v>]) -> Vec<Candidate<'v>> {
    let mut out: Vec<Candidate<'v>> = candidates
        .iter()
        .enumerate()
        .filter(|&(i, c)| {
            !candidates.iter().enumerate().any(|(j, other)| {
                i != j
                    && other.surface.starts_with(c.surface)
                    && (other.surface.len() > c.surface.len() || j < i)
            })
        })
        .map(|(_, c)| c.clone())
        .collect();
    rerank(&mut out);
    out
}

/// Largest `n` with `2^n <= count`.
pub fn block_size(count: usize) -> Result<u32, CodecError> {
    if count == 0 {
        return Err(CodecError::EmptyCandidateSet);
    }
    Ok(count.ilog2())
}

/// The top `2^n` candidates; chunk value `k` (read MSB first) maps to rank `k`.
#[derive(Debug, Clone, Copy)]
pub struct ChunkAssignment<'a, 'v> {
    n: u32,
    tokens: &'a [Candidate<'v>],
}

impl<'a, 'v> ChunkAssignment<'a, 'v> {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, chunk: u64) -> &'a Candidate<'v> {
        &self.tokens[chunk as usize]
    }

    pub fn chunk_of(&self, id: TokenId) -> Option<u64> {
        self.tokens
            .iter()
            .position(|c| c.token_id == id)
            .map(|i| i as u64)
    }

    /// `(chunk, candidate)` pairs in chunk order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &'a Candidate<'v>)> + '_ {
        self.tokens.iter().enumerate().map(|(i, c)| (i as u64, c))
    }
}

/// Panics if fewer than `2^n` candidates are supplied.
pub fn assign_chunks<'a, 'v>(candidates: &'a [Candidate<'v>], n: u32) -> ChunkAssignment<'a, 'v> {
    let size = 1usize << n;
    assert!(candidates.len() >= size, "{} candidates cannot carry {n} bits", candidates.len());
    ChunkAssignment {
        n,
        tokens: &candidates[..size],
    }
}

/// Everything one step needs, built identically on both sides.
#[derive(Debug, Clone)]
pub struct StepPlan<'v> {
    pub before: Vec<TokenId>,
    pub candidates: Vec<Candidate<'v>>,
    pub n: u32,
}

impl<'v> StepPlan<'v> {
    pub fn chunks(&self) -> ChunkAssignment<'_, 'v> {
        assign_chunks(&self.candidates, self.n)
    }

    pub fn after(&self) -> Vec<TokenId> {
        self.candidates.iter().map(|c| c.token_id).collect()
    }
}

/// Threshold filter, then prefix removal for the proposed method, then the
/// block size from the survivor count.
pub fn plan_step<'v>(
    dist: &Distribution,
    vocab: &'v Vocabulary,
    params: &CodecParams,
) -> Result<StepPlan<'v>, CodecError> {
    let filtered = candidate_filter(dist, vocab, params.threshold())?;
    let before = filtered.iter().map(|c| c.token_id).collect();
    let candidates = match params.method() {
        Method::Unaware => filtered,
        Method::Proposed => disambiguate(&filtered),
    };
    let n = block_size(candidates.len())?;
    Ok(StepPlan {
        before,
        candidates,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> Vocabulary {
        Vocabulary::byte_level_with(["a", "b", "c", "d"]).unwrap()
    }

    fn cand<'v>(vocab: &'v Vocabulary, id: TokenId, rank: usize) -> Candidate<'v> {
        Candidate {
            token_id: id,
            surface: vocab.surface(id),
            score: Score::ZERO,
            rank,
        }
    }

    fn surfaces<'a>(cands: &'a [Candidate<'_>]) -> Vec<&'a [u8]> {
        cands.iter().map(|c| c.surface).collect()
    }

    #[test]
    fn threshold_filter() {
        let v = abcd();
        // a:1/2 b:3/10 c:3/20 d:1/20 over ids 256..=259, everything else zero
        let mut entries: Vec<(TokenId, u128)> = (0..256).map(|id| (id, 0)).collect();
        entries.extend([(256, 10), (257, 6), (258, 3), (259, 1)]);
        let dist = Distribution::new(20, entries);
        let out = candidate_filter(&dist, &v, Score::new(1, 10)).unwrap();
        assert_eq!(out.iter().map(|c| c.token_id).collect::<Vec<_>>(), vec![256, 257, 258]);
        assert_eq!(out.iter().map(|c| c.rank).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(out[0].score, Score::new(1, 2));
    }

    #[test]
    fn ties_break_by_id() {
        let v = Vocabulary::byte_level();
        let dist = Distribution::new(4, vec![(9, 1), (3, 1), (7, 1), (5, 1)]);
        let out = candidate_filter(&dist, &v, Score::new(1, 100)).unwrap();
        assert_eq!(out.iter().map(|c| c.token_id).collect::<Vec<_>>(), vec![3, 5, 7, 9]);
    }

    #[test]
    fn forced_fallback() {
        let v = Vocabulary::byte_level();
        let dist = Distribution::new(1000, vec![(1, 4), (2, 9), (3, 9)]);
        let out = candidate_filter(&dist, &v, Score::new(1, 10)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].token_id, 2);
        let empty = Distribution::new(1, vec![]);
        assert!(matches!(
            candidate_filter(&empty, &v, Score::ZERO),
            Err(CodecError::InsufficientCandidates)
        ));
        let bogus = Distribution::new(1, vec![(999, 1)]);
        assert!(matches!(
            candidate_filter(&bogus, &v, Score::ZERO),
            Err(CodecError::TokenOutOfRange { id: 999 })
        ));
    }

    #[test]
    fn drops_prefixes() {
        let v = Vocabulary::byte_level_with(["us", "usable", "cat", "dog", "ab", "abc"]).unwrap();
        let us = vec![cand(&v, 256, 0), cand(&v, 257, 1)];
        assert_eq!(surfaces(&disambiguate(&us)), vec![&b"usable"[..]]);

        let pets = vec![cand(&v, 258, 0), cand(&v, 259, 1)];
        assert_eq!(disambiguate(&pets), pets);

        let chain = vec![
            cand(&v, u32::from(b'a'), 0),
            cand(&v, 260, 1),
            cand(&v, 261, 2),
            cand(&v, u32::from(b'b'), 3),
        ];
        let out = disambiguate(&chain);
        assert_eq!(surfaces(&out), vec![&b"abc"[..], &b"b"[..]]);
        assert_eq!(out.iter().map(|c| c.rank).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn equal_surfaces_keep_higher_rank() {
        let v = Vocabulary::byte_level_with(["x"]).unwrap();
        let dup = vec![cand(&v, 256, 0), cand(&v, u32::from(b'x'), 1)];
        let out = disambiguate(&dup);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].token_id, 256);
    }

    #[test]
    fn block_sizes() {
        assert_eq!(block_size(5).unwrap(), 2);
        assert_eq!(block_size(1).unwrap(), 0);
        assert_eq!(block_size(8).unwrap(), 3);
        assert!(matches!(block_size(0), Err(CodecError::EmptyCandidateSet)));
    }

    #[test]
    fn chunk_assignment() {
        let v = abcd();
        let four: Vec<_> = (0..4).map(|i| cand(&v, 256 + i, i as usize)).collect();
        let a = assign_chunks(&four, 2);
        let pairs: Vec<(u64, TokenId)> = a.iter().map(|(k, c)| (k, c.token_id)).collect();
        assert_eq!(pairs, vec![(0b00, 256), (0b01, 257), (0b10, 258), (0b11, 259)]);

        let forced = assign_chunks(&four[..1], 0);
        assert_eq!(forced.len(), 1);
        assert_eq!(forced.token(0).token_id, 256);

        let mut five = four.clone();
        five.push(cand(&v, 97, 4));
        let a = assign_chunks(&five, 2);
        assert_eq!(a.len(), 4);
        assert_eq!(a.chunk_of(97), None);
    }
}
