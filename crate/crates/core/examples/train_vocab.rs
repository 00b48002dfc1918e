//! Trains a byte-level BPE vocabulary and shows how it splits a sentence.
//!
//! cargo run --example train_vocab -- [corpus] [size]

use subword_stego::vocab::vocab_to_json;
use subword_stego::{greedy_tokenize, train_bpe};

fn main() {
    let mut args = std::env::args().skip(1);
    let corpus = match args.next() {
        Some(path) => std::fs::read(path).expect("read corpus"),
        None => include_bytes!("../data/corpus.txt").to_vec(),
    };
    let size = args.next().map_or(1000, |s| s.parse().expect("size"));

    let vocab = train_bpe(&corpus, size).expect("train");
    println!("{} tokens, longest surface {} bytes", vocab.len(), vocab.max_surface_len());
    println!("fingerprint {}", vocab.fingerprint());
    println!("vocab file is {} bytes", vocab_to_json(&vocab).len());

    let text = b"The children were running along the beach.";
    let pieces: Vec<String> = greedy_tokenize(text, &vocab)
        .iter()
        .map(|&id| format!("{:?}", String::from_utf8_lossy(vocab.surface(id))))
        .collect();
    println!("{}", pieces.join(" "));
}
