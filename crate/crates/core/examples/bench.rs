//! Seeded trials for both methods, printed as CSV.
//!
//! cargo run --release --example bench -- [trials] [seed]

use subword_stego::harness::{emit_report, run_trials, ReportFormat, TrialConfig};
use subword_stego::{greedy_tokenize, train_bpe, train_ngram};

fn main() {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map_or(1000, |s| s.parse().expect("trials"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));

    let corpus = include_bytes!("../data/corpus.txt");
    let vocab = train_bpe(corpus, 1000).unwrap();
    let lm = train_ngram(&greedy_tokenize(corpus, &vocab), 3, vocab.len()).unwrap();

    let config = TrialConfig::new(trials, seed);
    let report = run_trials(&config, corpus, &lm, &vocab, true).unwrap();
    print!("{}", String::from_utf8(emit_report(&report, ReportFormat::Csv)).unwrap());
    for (method, m) in &report.methods {
        for ex in m.exemplars.iter().take(1) {
            println!("\n{method} trial {} ({}):", ex.trial, ex.kind);
            println!("  alice: {}", ex.alice);
            println!("  bob:   {}", ex.bob);
        }
    }
}
