//! Model-driven arithmetic coding of token sequences.
//!
//! Every coding step asks the model for `p(· | context ⊕ payload[..i])`,
//! quantizes it to a [`QuantizedCdf`] and feeds the integer ranges to the
//! coder. [`sequence_nll`] sums the self-information of the same quantized
//! distributions, so `encode(..).len() <= sequence_nll(..) + 2` holds
//! literally.

mod bitstring;
mod cdf;
mod coder;

pub use bitstring::BitString;
pub use cdf::{
    quantize_distribution, QuantizedCdf, DEFAULT_PRECISION, MAX_PRECISION, MIN_PRECISION,
};
pub use coder::{Decoder, Encoder};

use crate::error::{Error, Result};
use crate::toymodel::ProbModel;
use crate::Token;

/// Size estimate in bits; always finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct EstimatedBits(f64);

impl EstimatedBits {
    pub fn new(bits: f64) -> Self {
        assert!(
            bits.is_finite() && bits >= 0.0,
            "invalid bit estimate {bits}"
        );
        Self(bits)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_token(token: Token, vocab: usize) -> Result<usize> {
    if (token as usize) < vocab {
        Ok(token as usize)
    } else {
        Err(Error::UnknownToken {
            token: token as u32,
            vocab,
        })
    }
}

fn step_cdf<M: ProbModel + ?Sized>(
    model: &M,
    history: &[Token],
    precision: u32,
) -> Result<QuantizedCdf> {
    quantize_distribution(&model.next_distribution(history)?, precision)
}

pub fn encode<M: ProbModel + ?Sized>(
    model: &M,
    context: &[Token],
    payload: &[Token],
    precision: u32,
) -> Result<BitString> {
    cdf::check_precision(precision)?;
    let vocab = model.vocab_size();
    for &t in context.iter().chain(payload) {
        check_token(t, vocab)?;
    }
    let mut history = context.to_vec();
    let mut encoder = Encoder::new();
    for &t in payload {
        let cdf = step_cdf(model, &history, precision)?;
        encoder.encode(&cdf, t as usize);
        history.push(t);
    }
    Ok(encoder.finish())
}

/// Decodes tokens until `stop` returns true for the decoded sequence so far.
pub fn decode_until<M, F>(
    model: &M,
    context: &[Token],
    code: &BitString,
    precision: u32,
    mut stop: F,
) -> Result<Vec<Token>>
where
    M: ProbModel + ?Sized,
    F: FnMut(&[Token]) -> bool,
{
    cdf::check_precision(precision)?;
    let mut history = context.to_vec();
    let mut decoder = Decoder::new(code);
    let mut out = Vec::new();
    while !stop(&out) {
        let cdf = step_cdf(model, &history, precision)?;
        let t = decoder.decode(&cdf)? as Token;
        history.push(t);
        out.push(t);
    }
    Ok(out)
}

pub fn decode<M: ProbModel + ?Sized>(
    model: &M,
    context: &[Token],
    code: &BitString,
    n_tokens: usize,
    precision: u32,
) -> Result<Vec<Token>> {
    decode_until(model, context, code, precision, |out| out.len() >= n_tokens)
}

/// Sum of `-log2 q_i` over the quantized per-step probabilities.
pub fn sequence_nll<M: ProbModel + ?Sized>(
    model: &M,
    context: &[Token],
    payload: &[Token],
    precision: u32,
) -> Result<EstimatedBits> {
    cdf::check_precision(precision)?;
    let vocab = model.vocab_size();
    for &t in context.iter().chain(payload) {
        check_token(t, vocab)?;
    }
    let mut history = context.to_vec();
    let mut bits = 0.0;
    for &t in payload {
        bits += step_cdf(model, &history, precision)?.bits(t as usize);
        history.push(t);
    }
    Ok(EstimatedBits::new(bits))
}
