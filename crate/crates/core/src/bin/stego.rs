//! `stego`: train a vocabulary and model, hide or recover a message, run trials.
//!
//! Exit codes: 0 success, 2 decode failure, 3 I/O or config error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use subword_stego::bridge::{BridgeClient, BridgeConfig, Transport};
use subword_stego::codec::{CodecError, Trace};
use subword_stego::harness::{emit_report, run_trials, ReportFormat, TrialConfig};
use subword_stego::ngram::{load_model, save_model};
use subword_stego::vocab::{load_vocab, save_vocab};
use subword_stego::{
    decode_proposed, decode_unaware, encode, greedy_tokenize, train_bpe, train_ngram, BitString,
    CodecParams, Method, NextTokenModel, Score, Vocabulary,
};

const EXIT_DECODE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "stego", version, about = "Tokenization-safe linguistic steganography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a byte-level BPE vocabulary on a corpus.
    TrainVocab {
        corpus: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an n-gram model on the greedy tokenization of a corpus.
    TrainLm {
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hide a message; writes the cover text to stdout.
    Encode {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        message_hex: String,
        /// Defaults to four bits per hex digit.
        #[arg(long)]
        msg_len_bits: Option<usize>,
    },
    /// Recover a message from a cover text; prints it as hex.
    Decode {
        #[command(flatten)]
        shared: Shared,
        /// Cover file, stdin when absent.
        #[arg(long)]
        cover: Option<PathBuf>,
        #[arg(long)]
        msg_len_bits: usize,
    },
    /// Run seeded trials and write a report.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the CSV summary here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Args)]
struct Shared {
    #[arg(long)]
    vocab: PathBuf,
    /// n-gram model file; required unless --bridge is given.
    #[arg(long, required_unless_present = "bridge")]
    lm: Option<PathBuf>,
    /// Query a bridge server at host:port instead of a local model.
    #[arg(long, conflicts_with = "lm")]
    bridge: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    bridge_timeout_ms: u64,
    #[arg(long)]
    prompt_file: PathBuf,
    /// Threshold as NUM/DEN or a decimal.
    #[arg(long, default_value = "1/100")]
    p: String,
    #[arg(long, default_value = "proposed")]
    method: Method,
    /// Write the step trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

/// Bench config: a [`TrialConfig`] plus input paths, relative to the config file.
#[derive(Deserialize)]
struct BenchConfig {
    vocab: PathBuf,
    lm: PathBuf,
    corpus: PathBuf,
    #[serde(flatten)]
    trials: TrialConfig,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_IO,
        message: message.to_string(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn codec_failure(e: CodecError) -> Failure {
    let code = match e {
        CodecError::Desynchronized { .. }
        | CodecError::TruncatedCover { .. }
        | CodecError::TokenNotInCandidateSet { .. }
        | CodecError::StepLimit(_) => EXIT_DECODE,
        _ => EXIT_IO,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn open_model(shared: &Shared, vocab: &Vocabulary, p: Score) -> Result<Box<dyn NextTokenModel>, Failure> {
    if let Some(addr) = &shared.bridge {
        let mut config = BridgeConfig::new(Transport::Tcp(addr.clone()));
        config.timeout = Duration::from_millis(shared.bridge_timeout_ms);
        config.min_score = p;
        config.validate(p).map_err(fail)?;
        return Ok(Box::new(BridgeClient::connect(&config, vocab).map_err(fail)?));
    }
    let path = shared.lm.as_ref().expect("clap requires --lm without --bridge");
    Ok(Box::new(load_model(path).map_err(fail)?))
}

fn params(shared: &Shared, msg_len_bits: usize) -> Result<(CodecParams, Score), Failure> {
    let p: Score = shared.p.parse().map_err(fail)?;
    let params = CodecParams::new(shared.method, msg_len_bits)
        .and_then(|c| c.with_threshold(p))
        .map_err(fail)?;
    Ok((params, p))
}

fn save_trace(path: Option<&PathBuf>, trace: &Trace) -> Result<(), Failure> {
    match path {
        Some(path) => write(path, &serde_json::to_vec_pretty(trace).map_err(fail)?),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::TrainVocab { corpus, size, out } => {
            let vocab = train_bpe(&read(&corpus)?, size).map_err(fail)?;
            save_vocab(&vocab, &out).map_err(fail)?;
            eprintln!("{} tokens -> {}", vocab.len(), out.display());
        }
        Command::TrainLm {
            corpus,
            vocab,
            order,
            out,
        } => {
            let vocab = load_vocab(&vocab).map_err(fail)?;
            let ids = greedy_tokenize(&read(&corpus)?, &vocab);
            let model = train_ngram(&ids, order, vocab.len()).map_err(fail)?;
            save_model(&model, &out).map_err(fail)?;
            eprintln!("{} contexts from {} tokens -> {}", model.num_contexts(), ids.len(), out.display());
        }
        Command::Encode {
            shared,
            message_hex,
            msg_len_bits,
        } => {
            let mut digits = message_hex.trim().to_string();
            let len = msg_len_bits.unwrap_or(digits.len() * 4);
            if digits.len() % 2 == 1 {
                digits.push('0');
            }
            let bytes = hex::decode(&digits).map_err(|e| fail(format!("message: {e}")))?;
            let message = BitString::from_bytes(&bytes, len).map_err(fail)?;
            let vocab = load_vocab(&shared.vocab).map_err(fail)?;
            let (params, p) = params(&shared, len)?;
            let lm = open_model(&shared, &vocab, p)?;
            let prompt = read(&shared.prompt_file)?;
            let sent = encode(&message, &prompt, &lm, &vocab, &params).map_err(codec_failure)?;
            save_trace(shared.trace.as_ref(), &sent.trace)?;
            io::stdout()
                .write_all(&sent.cover)
                .and_then(|_| io::stdout().flush())
                .map_err(fail)?;
        }
        Command::Decode {
            shared,
            cover,
            msg_len_bits,
        } => {
            let cover = match &cover {
                Some(path) => read(path)?,
                None => {
                    let mut buf = Vec::new();
                    io::stdin().read_to_end(&mut buf).map_err(fail)?;
                    buf
                }
            };
            let vocab = load_vocab(&shared.vocab).map_err(fail)?;
            let (params, p) = params(&shared, msg_len_bits)?;
            let lm = open_model(&shared, &vocab, p)?;
            let prompt = read(&shared.prompt_file)?;
            let (message, trace) = match shared.method {
                Method::Proposed => {
                    let d = decode_proposed(&cover, &prompt, &lm, &vocab, &params).map_err(codec_failure)?;
                    (d.message, d.trace)
                }
                Method::Unaware => {
                    let d = decode_unaware(&cover, &prompt, &lm, &vocab, &params).map_err(codec_failure)?;
                    (d.message, d.trace)
                }
            };
            save_trace(shared.trace.as_ref(), &trace)?;
            println!("{}", message.to_hex());
        }
        Command::Bench {
            config,
            out,
            csv,
            serial,
        } => {
            let text = read(&config)?;
            let bench: BenchConfig = serde_json::from_slice(&text).map_err(|e| fail(format!("config: {e}")))?;
            let base = config.parent().unwrap_or(Path::new("."));
            let vocab = load_vocab(base.join(&bench.vocab)).map_err(fail)?;
            let lm = load_model(base.join(&bench.lm)).map_err(fail)?;
            let corpus = read(&base.join(&bench.corpus))?;
            let report = run_trials(&bench.trials, &corpus, &lm, &vocab, !serial).map_err(fail)?;
            write(&out, &emit_report(&report, ReportFormat::Json))?;
            let table = emit_report(&report, ReportFormat::Csv);
            match csv {
                Some(path) => write(&path, &table)?,
                None => io::stderr().write_all(&table).map_err(fail)?,
            }
            if report.protocol_violation() {
                eprintln!("protocol violation: the proposed method failed a trial");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_IO);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("stego: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
