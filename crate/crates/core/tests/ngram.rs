mod common;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use subword_stego::ngram::{model_from_json, model_to_json};
use subword_stego::{train_ngram, NGramModel, NextTokenModel, TokenId};

type Tally = HashMap<Vec<TokenId>, HashMap<TokenId, u64>>;

fn window_tally(ids: &[TokenId], order: usize) -> Tally {
    let mut tally: Tally = HashMap::new();
    for i in 0..ids.len() {
        for m in 0..order {
            if m > i {
                break;
            }
            *tally
                .entry(ids[i - m..i].to_vec())
                .or_default()
                .entry(ids[i])
                .or_insert(0) += 1;
        }
    }
    tally
}

/// Interpolated add-one recursion evaluated directly in big rationals.
fn reference_score(tally: &Tally, order: usize, vocab: usize, ctx: &[TokenId], t: TokenId) -> BigRational {
    let keep = (order - 1).min(ctx.len());
    let suffix = &ctx[ctx.len() - keep..];
    let mut score = BigRational::new(BigInt::from(1), BigInt::from(vocab));
    for m in 0..=keep {
        let Some(level) = tally.get(&suffix[keep - m..]) else {
            break;
        };
        let total: u64 = level.values().sum();
        let c = level.get(&t).copied().unwrap_or(0);
        score = (BigRational::from_integer(c.into()) + score)
            / BigRational::from_integer((total + 1).into());
    }
    score
}

fn exact(model: &NGramModel, ctx: &[TokenId], t: TokenId) -> BigRational {
    let s = model.distribution(ctx).unwrap().score(t);
    BigRational::new(s.numer().into(), s.denom().into())
}

#[test]
fn counts_match_sliding_window_tally() {
    let mut rng = StdRng::seed_from_u64(3);
    let ids: Vec<TokenId> = (0..10_000).map(|_| rng.gen_range(0..40)).collect();
    let model = train_ngram(&ids, 3, 40).unwrap();
    let tally = window_tally(&ids, 3);
    let with_empty = tally.len() + usize::from(!tally.contains_key(&Vec::new()));
    assert_eq!(model.num_contexts(), with_empty);
    for (ctx, next) in &tally {
        assert_eq!(model.context_total(ctx), next.values().sum::<u64>());
        for (&t, &c) in next {
            assert_eq!(model.count(ctx, t), c, "ctx {ctx:?} next {t}");
        }
    }
}

#[test]
fn two_level_hand_example() {
    let model = train_ngram(&[0, 1, 0, 1], 2, 2).unwrap();
    assert_eq!(model.count(&[0], 1), 2);
    assert_eq!(model.count(&[1], 0), 1);
    let d = model.distribution(&[0]).unwrap();
    assert_eq!(d.score(1).to_ratio(), num_rational::Ratio::new(5, 6));
    assert_eq!(d.score(0).to_ratio(), num_rational::Ratio::new(1, 6));
    assert!(d.is_normalized());
}

#[test]
fn scores_match_big_rational_recursion() {
    let mut rng = StdRng::seed_from_u64(9);
    let vocab = 12;
    let ids: Vec<TokenId> = (0..400).map(|_| rng.gen_range(0..vocab as u32)).collect();
    for order in 1..=4 {
        let model = train_ngram(&ids, order, vocab).unwrap();
        let tally = window_tally(&ids, order);
        for _ in 0..30 {
            let len = rng.gen_range(0..6);
            let ctx: Vec<TokenId> = (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect();
            for t in 0..vocab as u32 {
                assert_eq!(exact(&model, &ctx, t), reference_score(&tally, order, vocab, &ctx, t));
            }
        }
    }
}

#[test]
fn trained_model_survives_file_roundtrip() {
    let lm = &common::trained().lm;
    let json = model_to_json(lm);
    let back = model_from_json(&json).unwrap();
    assert_eq!(&back, lm);
    assert_eq!(model_to_json(&back), json);
}

#[test]
fn untrained_model_is_uniform() {
    let m = NGramModel::untrained(3, 7).unwrap();
    let d = m.distribution(&[1, 2, 3]).unwrap();
    for t in 0..7 {
        assert_eq!(d.score(t).to_ratio(), num_rational::Ratio::new(1, 7));
    }
}

proptest! {
    #[test]
    fn distributions_sum_to_one(
        ids in proptest::collection::vec(0u32..20, 0..300),
        order in 1usize..5,
        ctx in proptest::collection::vec(0u32..20, 0..6),
    ) {
        let model = train_ngram(&ids, order, 20).unwrap();
        let d = model.distribution(&ctx).unwrap();
        prop_assert!(d.is_normalized());
        prop_assert_eq!(d, model.distribution(&ctx).unwrap());
    }

    #[test]
    fn trained_fixture_normalized(start in 0usize..5000, len in 0usize..4) {
        let f = common::trained();
        let ids = subword_stego::greedy_tokenize(common::CORPUS, &f.vocab);
        let start = start.min(ids.len());
        let ctx = &ids[start..(start + len).min(ids.len())];
        prop_assert!(f.lm.distribution(ctx).unwrap().is_normalized());
    }
}
