//! Exact-rational n-gram scores: the top continuations after a context.

use subword_stego::{greedy_tokenize, train_bpe, train_ngram, NextTokenModel};

fn main() {
    let corpus = include_bytes!("../data/corpus.txt");
    let vocab = train_bpe(corpus, 1000).unwrap();
    let lm = train_ngram(&greedy_tokenize(corpus, &vocab), 3, vocab.len()).unwrap();

    // tiny worked example: after [0] in 0 1 0 1 the model gives 5/6 to 1
    let toy = train_ngram(&[0, 1, 0, 1], 2, 2).unwrap();
    let d = toy.distribution(&[0]).unwrap();
    println!("toy: P(1|0) = {}  P(0|0) = {}", d.score(1), d.score(0));

    let context = greedy_tokenize(b"The old clock in the", &vocab);
    let dist = lm.distribution(&context).unwrap();
    assert!(dist.is_normalized());
    let mut ranked: Vec<_> = dist.entries().to_vec();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    println!("after {:?}:", "The old clock in the");
    for &(id, _) in ranked.iter().take(8) {
        let s = dist.score(id);
        println!(
            "  {:>12?}  {:.5}",
            String::from_utf8_lossy(vocab.surface(id)),
            s.numer() as f64 / s.denom() as f64
        );
    }
}
