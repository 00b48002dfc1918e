#![allow(dead_code)]

use std::sync::OnceLock;

use subword_stego::{greedy_tokenize, train_bpe, train_ngram, NGramModel, Vocabulary};

pub const CORPUS: &[u8] = include_bytes!("../../data/corpus.txt");

pub struct Fixture {
    pub vocab: Vocabulary,
    pub lm: NGramModel,
}

/// 1000-token BPE vocabulary and order-3 model trained on the bundled corpus.
pub fn trained() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let vocab = train_bpe(CORPUS, 1000).expect("train vocab");
        let ids = greedy_tokenize(CORPUS, &vocab);
        let lm = train_ngram(&ids, 3, vocab.len()).expect("train lm");
        Fixture { vocab, lm }
    })
}

pub fn unusable_vocab() -> Vocabulary {
    Vocabulary::byte_level_with(["un", "us", "usable", "able"]).unwrap()
}

pub fn id(vocab: &Vocabulary, surface: &str) -> u32 {
    vocab.id_for(surface.as_bytes()).unwrap()
}

pub fn surfaces(vocab: &Vocabulary, ids: &[u32]) -> Vec<String> {
    ids.iter()
        .map(|&i| String::from_utf8_lossy(vocab.surface(i)).into_owned())
        .collect()
}

/// Returns the same sparse distribution whatever the context.
pub struct FixedLm {
    pub vocab_size: usize,
    pub denominator: u128,
    pub entries: Vec<(u32, u128)>,
}

impl subword_stego::NextTokenModel for FixedLm {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn distribution(
        &self,
        _context: &[u32],
    ) -> Result<subword_stego::Distribution, subword_stego::lm::LmError> {
        Ok(subword_stego::Distribution::new(self.denominator, self.entries.clone()))
    }
}

/// Equal mass on "un", "us", "usable" and "able", nothing elsewhere.
pub fn unusable_lm(vocab: &Vocabulary) -> FixedLm {
    FixedLm {
        vocab_size: vocab.len(),
        denominator: 4,
        entries: ["un", "us", "usable", "able"].iter().map(|s| (id(vocab, s), 1)).collect(),
    }
}

/// Step-by-step reference encoder for a uniform model with `p = 0`, where
/// every token is a candidate and ranks follow ids.
pub fn oracle_encode_uniform(message: &[bool], vocab: &Vocabulary, proposed: bool) -> Vec<u32> {
    let all: Vec<(u32, &[u8])> = vocab.tokens().iter().map(|t| (t.id, t.surface.as_slice())).collect();
    let mut set: Vec<u32> = Vec::new();
    for (i, &(tid, s)) in all.iter().enumerate() {
        let dropped = proposed
            && all.iter().enumerate().any(|(j, &(_, o))| {
                (o.len() > s.len() && &o[..s.len()] == s) || (j < i && o == s)
            });
        if !dropped {
            set.push(tid);
        }
    }
    let mut n = 0;
    while (1usize << (n + 1)) <= set.len() {
        n += 1;
    }
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < message.len() {
        let mut chunk = 0usize;
        for k in 0..n {
            let bit = message.get(pos + k).copied().unwrap_or(false);
            chunk = chunk * 2 + usize::from(bit);
        }
        out.push(set[chunk]);
        pos += n;
    }
    out
}
