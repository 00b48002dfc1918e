//! The un|us|able failure: the sender emits three tokens, the receiver
//! retokenizes the text into two and decodes the wrong bits.

use subword_stego::lm::LmError;
use subword_stego::{
    decode_proposed, decode_unaware, encode, greedy_tokenize, BitString, CodecParams,
    Distribution, Method, NextTokenModel, TokenId, Vocabulary,
};

/// Equal mass on four tokens, whatever the context.
struct FourWay {
    vocab_size: usize,
    ids: Vec<TokenId>,
}

impl NextTokenModel for FourWay {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn distribution(&self, _context: &[TokenId]) -> Result<Distribution, LmError> {
        Ok(Distribution::new(4, self.ids.iter().map(|&id| (id, 1)).collect()))
    }
}

fn show(vocab: &Vocabulary, ids: &[TokenId]) -> String {
    ids.iter()
        .map(|&id| String::from_utf8_lossy(vocab.surface(id)).into_owned())
        .collect::<Vec<_>>()
        .join(" | ")
}

fn main() {
    let vocab = Vocabulary::byte_level_with(["un", "us", "usable", "able"]).unwrap();
    let ids = ["un", "us", "usable", "able"].map(|s| vocab.id_for(s.as_bytes()).unwrap());
    let lm = FourWay {
        vocab_size: vocab.len(),
        ids: ids.to_vec(),
    };

    let message: BitString = "000111".parse().unwrap();
    let unaware = CodecParams::new(Method::Unaware, 6).unwrap();
    let sent = encode(&message, b"", &lm, &vocab, &unaware).unwrap();
    println!("sender tokens:   {}", show(&vocab, &sent.tokens));
    println!("cover:           {}", String::from_utf8_lossy(&sent.cover));
    println!("receiver tokens: {}", show(&vocab, &greedy_tokenize(&sent.cover, &vocab)));
    match decode_unaware(&sent.cover, b"", &lm, &vocab, &unaware) {
        Ok(d) => println!("unaware decode:  {} (sent {message})", d.message),
        Err(e) => println!("unaware decode:  {e}"),
    }

    let proposed = CodecParams::new(Method::Proposed, 6).unwrap();
    let sent = encode(&message, b"", &lm, &vocab, &proposed).unwrap();
    let got = decode_proposed(&sent.cover, b"", &lm, &vocab, &proposed).unwrap();
    println!("proposed tokens: {} -> {}", show(&vocab, &sent.tokens), got.message);
}
