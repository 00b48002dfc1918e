use super::{plan_step, CodecError, CodecParams, StepRecord, Trace};
use crate::bits::BitString;
use crate::lm::NextTokenModel;
use crate::vocab::{greedy_tokenize, TokenId, Vocabulary};

/// Sender output. The prompt is not part of `tokens` or `cover`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub tokens: Vec<TokenId>,
    pub cover: Vec<u8>,
    pub trace: Trace,
}

pub(super) fn check_model<M: NextTokenModel + ?Sized>(
    lm: &M,
    vocab: &Vocabulary,
) -> Result<(), CodecError> {
    if lm.vocab_size() != vocab.len() {
        return Err(CodecError::VocabSizeMismatch {
            model: lm.vocab_size(),
            vocab: vocab.len(),
        });
    }
    Ok(())
}

/// Generates tokens carrying `message` after `prompt`.
///
/// Each step emits the candidate whose chunk equals the next `n` message
/// bits; a final chunk that runs past the message is zero-padded. Generation
/// stops right after the step that carries the last message bit.
pub fn encode<M: NextTokenModel + ?Sized>(
    message: &BitString,
    prompt: &[u8],
    lm: &M,
    vocab: &Vocabulary,
    params: &CodecParams,
) -> Result<Encoded, CodecError> {
    if message.len() != params.msg_len_bits() {
        return Err(CodecError::LengthMismatch {
            expected: params.msg_len_bits(),
            actual: message.len(),
        });
    }
    check_model(lm, vocab)?;

    let mut context = greedy_tokenize(prompt, vocab);
    let prompt_len = context.len();
    let mut trace = Trace::default();
    let mut pos = 0;

    while pos < message.len() {
        let step = trace.len();
        if step >= params.max_steps() {
            return Err(CodecError::StepLimit(step));
        }
        let dist = lm.distribution(&context)?;
        let plan = plan_step(&dist, vocab, params)?;
        let chunk = message.chunk_at(pos, plan.n);
        let chosen = plan.chunks().token(chunk).token_id;

        let end = (pos + plan.n as usize).min(message.len());
        trace.steps.push(StepRecord {
            step,
            candidates: plan.before.clone(),
            disambiguated: plan.after(),
            n: plan.n,
            chosen,
            bits: message.slice(pos, end),
        });
        pos = end;
        context.push(chosen);
    }

    let tokens = context.split_off(prompt_len);
    let cover = vocab.detokenize_ids(&tokens);
    Ok(Encoded {
        tokens,
        cover,
        trace,
    })
}
