//! One step of candidate construction, before and after prefix removal.

use subword_stego::codec::{plan_step, CodecParams, Method};
use subword_stego::{Distribution, TokenId, Vocabulary};

fn main() {
    let words = ["un", "us", "usable", "able", "a", "ab", "b"];
    let vocab = Vocabulary::byte_level_with(words).unwrap();
    let weights = [9u128, 8, 7, 6, 5, 4, 3];
    let entries: Vec<(TokenId, u128)> = words
        .iter()
        .zip(weights)
        .map(|(w, n)| (vocab.id_for(w.as_bytes()).unwrap(), n))
        .collect();
    let dist = Distribution::new(weights.iter().sum(), entries);

    for method in [Method::Unaware, Method::Proposed] {
        let plan = plan_step(&dist, &vocab, &CodecParams::new(method, 8).unwrap()).unwrap();
        println!("{method}: {} candidates, n = {}", plan.candidates.len(), plan.n);
        for (chunk, cand) in plan.chunks().iter() {
            println!(
                "  {chunk:0width$b}  {:?}  {}",
                String::from_utf8_lossy(cand.surface),
                cand.score,
                width = plan.n.max(1) as usize
            );
        }
    }
}
