//! Hides a message with the proposed method and recovers it from the cover.
//!
//! cargo run --example roundtrip -- [hex message] [prompt]

use subword_stego::{
    decode_proposed, encode, greedy_tokenize, train_bpe, train_ngram, BitString, CodecParams,
    Method,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let hex = args.next().unwrap_or_else(|| "5ec12e7c0ffee000".into());
    let prompt = args.next().unwrap_or_else(|| "The river flows past the".into());

    let corpus = include_bytes!("../data/corpus.txt");
    let vocab = train_bpe(corpus, 1000).unwrap();
    let lm = train_ngram(&greedy_tokenize(corpus, &vocab), 3, vocab.len()).unwrap();

    let message = BitString::from_hex(&hex).expect("hex message");
    let params = CodecParams::new(Method::Proposed, message.len()).unwrap();
    let sent = encode(&message, prompt.as_bytes(), &lm, &vocab, &params).unwrap();
    println!("prompt: {prompt}");
    println!("cover:  {}", String::from_utf8_lossy(&sent.cover));
    println!("{} bits in {} tokens", message.len(), sent.tokens.len());

    let got = decode_proposed(&sent.cover, prompt.as_bytes(), &lm, &vocab, &params).unwrap();
    println!("decoded {}", got.message.to_hex());
    assert_eq!(got.message, message);
    assert_eq!(got.trace, sent.trace);
}
