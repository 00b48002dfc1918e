use super::encode::check_model;
use super::{plan_step, CodecError, CodecParams, Method, StepRecord, Trace};
use crate::bits::BitString;
use crate::lm::NextTokenModel;
use crate::vocab::{greedy_tokenize, TokenId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposedDecoding {
    pub message: BitString,
    /// Cover bytes consumed by the matched tokens.
    pub consumed_bytes: usize,
    pub tokens: Vec<TokenId>,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnawareDecoding {
    pub message: BitString,
    /// Greedy retokenization of the whole cover.
    pub retokenization: Vec<TokenId>,
    pub trace: Trace,
}

/// Stepwise receiver: replays the sender's loop and, at each step, takes the
/// one chunk-assigned candidate whose surface prefixes the unread cover.
pub fn decode_proposed<M: NextTokenModel + ?Sized>(
    cover: &[u8],
    prompt: &[u8],
    lm: &M,
    vocab: &Vocabulary,
    params: &CodecParams,
) -> Result<ProposedDecoding, CodecError> {
    if params.method() != Method::Proposed {
        return Err(CodecError::MethodMismatch(params.method()));
    }
    check_model(lm, vocab)?;

    let want = params.msg_len_bits();
    let mut context = greedy_tokenize(prompt, vocab);
    let prompt_len = context.len();
    let mut message = BitString::new();
    let mut trace = Trace::default();
    let mut offset = 0;

    while message.len() < want {
        let step = trace.len();
        let rest = &cover[offset..];
        if rest.is_empty() {
            return Err(CodecError::TruncatedCover {
                step,
                missing: want - message.len(),
            });
        }
        let dist = lm.distribution(&context)?;
        let plan = plan_step(&dist, vocab, params)?;
        let chunks = plan.chunks();
        let mut matches = chunks.iter().filter(|(_, c)| rest.starts_with(c.surface));
        let Some((chunk, cand)) = matches.next() else {
            return Err(CodecError::Desynchronized { step, offset });
        };
        debug_assert!(matches.next().is_none(), "prefix-free set matched twice");

        let start = message.len();
        message.push_chunk(chunk, plan.n);
        message.truncate(want);
        trace.steps.push(StepRecord {
            step,
            candidates: plan.before.clone(),
            disambiguated: plan.after(),
            n: plan.n,
            chosen: cand.token_id,
            bits: message.slice(start, message.len()),
        });
        offset += cand.surface.len();
        context.push(cand.token_id);
    }

    Ok(ProposedDecoding {
        message,
        consumed_bytes: offset,
        tokens: context.split_off(prompt_len),
        trace,
    })
}

/// Ambiguity-unaware receiver: retokenizes the cover greedily and reads each
/// token's chunk from the replayed candidate set. Returns whatever bits come
/// out, right or wrong.
pub fn decode_unaware<M: NextTokenModel + ?Sized>(
    cover: &[u8],
    prompt: &[u8],
    lm: &M,
    vocab: &Vocabulary,
    params: &CodecParams,
) -> Result<UnawareDecoding, CodecError> {
    if params.method() != Method::Unaware {
        return Err(CodecError::MethodMismatch(params.method()));
    }
    check_model(lm, vocab)?;

    let want = params.msg_len_bits();
    let retokenization = greedy_tokenize(cover, vocab);
    let mut context = greedy_tokenize(prompt, vocab);
    let mut message = BitString::new();
    let mut trace = Trace::default();
    let mut tokens = retokenization.iter();

    while message.len() < want {
        let step = trace.len();
        let Some(&token) = tokens.next() else {
            return Err(CodecError::TruncatedCover {
                step,
                missing: want - message.len(),
            });
        };
        let dist = lm.distribution(&context)?;
        let plan = plan_step(&dist, vocab, params)?;
        let chunk = plan
            .chunks()
            .chunk_of(token)
            .ok_or(CodecError::TokenNotInCandidateSet { step, token })?;

        let start = message.len();
        message.push_chunk(chunk, plan.n);
        message.truncate(want);
        trace.steps.push(StepRecord {
            step,
            candidates: plan.before.clone(),
            disambiguated: plan.after(),
            n: plan.n,
            chosen: token,
            bits: message.slice(start, message.len()),
        });
        context.push(token);
    }

    Ok(UnawareDecoding {
        message,
        retokenization,
        trace,
    })
}
