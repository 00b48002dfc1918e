mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{id, surfaces, unusable_vocab, CORPUS};
use subword_stego::vocab::{load_vocab, save_vocab, vocab_from_json, vocab_to_json};
use subword_stego::{detokenize, greedy_tokenize, train_bpe, TokenId, Vocabulary};

/// Reference BPE working on surface strings, recounting every pair from
/// scratch each round.
fn reference_bpe(corpus: &[u8], target: usize) -> Vec<Vec<u8>> {
    let mut table: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut seq: Vec<Vec<u8>> = corpus.iter().map(|&b| vec![b]).collect();
    let pos = |table: &[Vec<u8>], s: &[u8]| table.iter().position(|t| t == s).unwrap();
    while table.len() < target {
        let mut pairs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
        for i in 0..seq.len().saturating_sub(1) {
            pairs.push((seq[i].clone(), seq[i + 1].clone()));
        }
        let mut best: Option<(usize, Vec<u8>, usize, usize, (Vec<u8>, Vec<u8>))> = None;
        for pair in &pairs {
            let count = pairs.iter().filter(|p| *p == pair).count();
            if count < 2 {
                continue;
            }
            let merged = [pair.0.clone(), pair.1.clone()].concat();
            let key = (count, merged, pos(&table, &pair.0), pos(&table, &pair.1));
            let wins = match &best {
                None => true,
                Some((c, m, l, r, _)) => {
                    key.0 > *c || (key.0 == *c && (&key.1, key.2, key.3) < (m, *l, *r))
                }
            };
            if wins {
                best = Some((key.0, key.1, key.2, key.3, pair.clone()));
            }
        }
        let Some((_, merged, _, _, (l, r))) = best else {
            break;
        };
        if !table.contains(&merged) {
            table.push(merged.clone());
        }
        let mut next = Vec::new();
        let mut i = 0;
        while i < seq.len() {
            if i + 1 < seq.len() && seq[i] == l && seq[i + 1] == r {
                next.push(merged.clone());
                i += 2;
            } else {
                next.push(seq[i].clone());
                i += 1;
            }
        }
        seq = next;
    }
    table
}

fn surface_list(v: &Vocabulary) -> Vec<Vec<u8>> {
    v.tokens().iter().map(|t| t.surface.clone()).collect()
}

#[test]
fn banana_merges_match_hand_count() {
    // round 1: an=4 na=4, "an" < "na"
    // round 2: (b,an) (an,an) (an,a) all 2, "ana" is smallest
    // round 3: (b,an) (an,ana) both 2, "anana" < "ban"
    // round 4: (b,anana) is the only repeated pair
    let v = train_bpe(b"banana banana", 260).unwrap();
    let merged: Vec<&[u8]> = v.tokens()[256..].iter().map(|t| t.surface.as_slice()).collect();
    assert_eq!(merged, vec![&b"an"[..], b"ana", b"anana", b"banana"]);
}

#[test]
fn bpe_matches_reference_on_random_corpora() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..60 {
        let len = rng.gen_range(1..48);
        let corpus: Vec<u8> = (0..len).map(|_| b"ab c"[rng.gen_range(0..4)]).collect();
        let target = 256 + rng.gen_range(0..12);
        let got = train_bpe(&corpus, target).unwrap();
        assert_eq!(
            surface_list(&got),
            reference_bpe(&corpus, target),
            "corpus {:?}",
            String::from_utf8_lossy(&corpus)
        );
    }
}

#[test]
fn bpe_is_deterministic_on_bundled_corpus() {
    let a = train_bpe(CORPUS, 1000).unwrap();
    let b = train_bpe(CORPUS, 1000).unwrap();
    assert_eq!(a.len(), 1000);
    assert_eq!(vocab_to_json(&a), vocab_to_json(&b));
}

/// Positionwise brute force over every token in the vocabulary.
fn reference_greedy(text: &[u8], vocab: &Vocabulary) -> Vec<TokenId> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let mut best: Option<(usize, TokenId)> = None;
        for t in vocab.tokens() {
            if text[pos..].starts_with(&t.surface) {
                let cand = (t.surface.len(), t.id);
                best = match best {
                    Some((l, i)) if l > cand.0 || (l == cand.0 && i < cand.1) => Some((l, i)),
                    _ => Some(cand),
                };
            }
        }
        let (len, id) = best.unwrap();
        out.push(id);
        pos += len;
    }
    out
}

fn random_vocab(rng: &mut StdRng) -> Vocabulary {
    let extra: Vec<Vec<u8>> = (0..44)
        .map(|_| {
            let len = rng.gen_range(2..6);
            (0..len).map(|_| b"abc"[rng.gen_range(0..3)]).collect()
        })
        .collect();
    Vocabulary::byte_level_with(extra).unwrap()
}

#[test]
fn greedy_matches_brute_force_oracle() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..40 {
        let vocab = random_vocab(&mut rng);
        assert_eq!(vocab.len(), 300);
        for _ in 0..50 {
            let len = rng.gen_range(0..=16);
            let text: Vec<u8> = (0..len).map(|_| b"abcx"[rng.gen_range(0..4)]).collect();
            assert_eq!(greedy_tokenize(&text, &vocab), reference_greedy(&text, &vocab));
        }
    }
}

#[test]
fn unusable_retokenizes_differently() {
    let v = unusable_vocab();
    let sent = [id(&v, "un"), id(&v, "us"), id(&v, "able")];
    let text = v.detokenize_ids(&sent);
    assert_eq!(text, b"unusable");
    let back = greedy_tokenize(&text, &v);
    assert_eq!(surfaces(&v, &back), vec!["un", "usable"]);
    assert!(greedy_tokenize(b"", &v).is_empty());
}

#[test]
fn detokenize_basics() {
    let v = unusable_vocab();
    assert_eq!(detokenize(std::iter::empty()), b"");
    let a = v.get(id(&v, "a")).unwrap();
    assert_eq!(detokenize([a]), b"a");
}

#[test]
fn trained_vocab_roundtrips_through_file() {
    let v = &common::trained().vocab;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.json");
    save_vocab(v, &path).unwrap();
    let back = load_vocab(&path).unwrap();
    assert_eq!(back.len(), v.len());
    for (a, b) in v.tokens().iter().zip(back.tokens()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.surface, b.surface);
    }
    assert_eq!(back.fingerprint(), v.fingerprint());
}

#[test]
fn base_vocab_roundtrips() {
    let v = Vocabulary::byte_level();
    assert_eq!(vocab_from_json(&vocab_to_json(&v)).unwrap(), v);
}

#[test]
fn trained_vocab_has_prefix_pairs() {
    let v = &common::trained().vocab;
    let nested = v.tokens()[256..]
        .iter()
        .any(|a| v.tokens()[256..].iter().any(|b| a.id != b.id && b.surface.starts_with(&a.surface)));
    assert!(nested);
}

proptest! {
    #[test]
    fn detokenize_inverts_greedy(text in proptest::collection::vec(any::<u8>(), 0..200)) {
        let v = &common::trained().vocab;
        let ids = greedy_tokenize(&text, v);
        prop_assert_eq!(v.detokenize_ids(&ids), text);
    }

    #[test]
    fn detokenize_inverts_greedy_on_corpus_slices(start in 0usize..20_000, len in 0usize..300) {
        let v = &common::trained().vocab;
        let start = start.min(CORPUS.len());
        let text = &CORPUS[start..(start + len).min(CORPUS.len())];
        prop_assert_eq!(v.detokenize_ids(&greedy_tokenize(text, v)), text);
    }
}
