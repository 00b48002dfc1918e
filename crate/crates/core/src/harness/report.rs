use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{FailureKind, TrialConfig, TrialOutcome, PRNG_ID};
use crate::codec::Method;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// An exact rational with a fixed-point rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub exact: String,
    pub decimal: String,
}

impl Fraction {
    fn new(r: Ratio<u64>, places: u32) -> Self {
        Self {
            exact: format!("{}/{}", r.numer(), r.denom()),
            decimal: fixed_point(r, places),
        }
    }

    pub fn ratio(&self) -> Option<Ratio<u64>> {
        let (n, d) = self.exact.split_once('/')?;
        let (n, d): (u64, u64) = (n.parse().ok()?, d.parse().ok()?);
        (d != 0).then(|| Ratio::new(n, d))
    }
}

/// Rounds half up to `places` decimals using integer arithmetic only.
pub(crate) fn fixed_point(r: Ratio<u64>, places: u32) -> String {
    let scale = 10u128.pow(places);
    let (n, d) = (u128::from(*r.numer()), u128::from(*r.denom()));
    let scaled = (n * scale * 2 + d) / (2 * d);
    let int = scaled / scale;
    if places == 0 {
        return int.to_string();
    }
    let frac = scaled % scale;
    format!("{int}.{frac:0width$}", width = places as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub trial: usize,
    pub kind: FailureKind,
    pub message: String,
    pub decoded: Option<String>,
    pub prompt: String,
    pub cover: String,
    /// Sender tokens, `|`-separated.
    pub alice: String,
    /// Receiver tokens, `|`-separated.
    pub bob: String,
    pub sender_tokens: Vec<TokenId>,
    pub receiver_tokens: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub trials: usize,
    pub failures: usize,
    pub failure_kinds: BTreeMap<FailureKind, usize>,
    pub error_rate_pct: Fraction,
    pub bits_per_token: Fraction,
    pub total_bits: u64,
    pub total_tokens: u64,
    /// Set when the proposed method fails, which only a bug can cause.
    pub protocol_violation: bool,
    pub exemplars: Vec<Exemplar>,
}

impl MethodSummary {
    pub fn error_rate(&self) -> Ratio<u64> {
        Ratio::new(self.failures as u64, self.trials as u64)
    }

    pub fn bits_per_token_exact(&self) -> Ratio<u64> {
        Ratio::new(self.total_bits, self.total_tokens.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: TrialConfig,
    pub prng: String,
    pub prompts_available: usize,
    pub prompt_wraparounds: usize,
    pub methods: BTreeMap<Method, MethodSummary>,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

fn show_tokens(ids: &[TokenId], vocab: &Vocabulary) -> String {
    ids.iter()
        .map(|&id| String::from_utf8_lossy(vocab.surface(id)).into_owned())
        .collect::<Vec<_>>()
        .join("|")
}

impl TrialReport {
    pub(super) fn build(
        config: &TrialConfig,
        prompts_available: usize,
        prompt_wraparounds: usize,
        outcomes: Vec<TrialOutcome>,
        vocab: &Vocabulary,
    ) -> Self {
        let mut methods = BTreeMap::new();
        for &method in &config.methods {
            let mine: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.method == method).collect();
            let trials = mine.len();
            let failures = mine.iter().filter(|o| !o.success()).count();
            let mut failure_kinds = BTreeMap::new();
            for kind in mine.iter().filter_map(|o| o.failure) {
                *failure_kinds.entry(kind).or_insert(0) += 1;
            }
            let total_bits: u64 = mine.iter().map(|o| o.bits as u64).sum();
            let total_tokens: u64 = mine.iter().map(|o| o.tokens() as u64).sum();
            let exemplars = mine
                .iter()
                .filter_map(|o| o.failure.map(|k| (o, k)))
                .take(config.exemplars)
                .map(|(o, kind)| Exemplar {
                    trial: o.trial,
                    kind,
                    message: o.message.to_hex(),
                    decoded: o.decoded.as_ref().map(|d| d.to_hex()),
                    prompt: String::from_utf8_lossy(&o.prompt).into_owned(),
                    cover: String::from_utf8_lossy(&o.cover).into_owned(),
                    alice: show_tokens(&o.sender_tokens, vocab),
                    bob: show_tokens(&o.receiver_tokens, vocab),
                    sender_tokens: o.sender_tokens.clone(),
                    receiver_tokens: o.receiver_tokens.clone(),
                })
                .collect();
            methods.insert(
                method,
                MethodSummary {
                    trials,
                    failures,
                    failure_kinds,
                    error_rate_pct: Fraction::new(
                        Ratio::new(failures as u64 * 100, trials.max(1) as u64),
                        4,
                    ),
                    bits_per_token: Fraction::new(
                        Ratio::new(total_bits, total_tokens.max(1)),
                        12,
                    ),
                    total_bits,
                    total_tokens,
                    protocol_violation: method == Method::Proposed && failures > 0,
                    exemplars,
                },
            );
        }
        Self {
            config: config.clone(),
            prng: PRNG_ID.to_string(),
            prompts_available,
            prompt_wraparounds,
            methods,
            outcomes,
        }
    }

    pub fn protocol_violation(&self) -> bool {
        self.methods.values().any(|m| m.protocol_violation)
    }
}

/// Canonical bytes: pretty JSON with sorted keys, or one CSV row per method.
pub fn emit_report(report: &TrialReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            // Value maps are ordered, which sorts every key
            let value = serde_json::to_value(report).expect("report serializes");
            let mut out = serde_json::to_vec_pretty(&value).expect("value serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("method,error_rate_pct,bits_per_token,trials,seed\n");
            for (method, m) in &report.methods {
                out.push_str(&format!(
                    "{method},{},{},{},{}\n",
                    m.error_rate_pct.decimal, m.bits_per_token.decimal, m.trials, report.config.seed
                ));
            }
            out.into_bytes()
        }
    }
}

pub fn parse_report(json: &[u8]) -> serde_json::Result<TrialReport> {
    serde_json::from_slice(json)
}
