use std::collections::BTreeMap;

use super::{visible_context, ProbModel, Vocab, PAD};
use crate::error::{Error, Result};
use crate::Token;

/// Additively smoothed k-gram model: `p(s | c) = (n(c, s) + α) / (n(c) + α|V|)`.
#[derive(Debug, Clone)]
pub struct KgramModel {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    counts: BTreeMap<Vec<Token>, Vec<u64>>,
}

impl KgramModel {
    pub fn new(vocab: &Vocab, order: usize, alpha: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument(
                "k-gram order must be at least 1".into(),
            ));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            order,
            alpha,
            vocab_size: vocab.size(),
            counts: BTreeMap::new(),
        })
    }

    /// Counts every position of every sequence. Each sequence starts from
    /// an empty (padded) context.
    pub fn fit(vocab: &Vocab, order: usize, alpha: f64, sequences: &[Vec<Token>]) -> Result<Self> {
        let mut model = Self::new(vocab, order, alpha)?;
        for seq in sequences {
            model.observe(seq)?;
        }
        Ok(model)
    }

    pub fn observe(&mut self, seq: &[Token]) -> Result<()> {
        for i in 0..seq.len() {
            let t = seq[i] as usize;
            if t >= self.vocab_size {
                return Err(Error::UnknownToken {
                    token: t as u32,
                    vocab: self.vocab_size,
                });
            }
            let key = self.context_key(&seq[..i]);
            self.counts
                .entry(key)
                .or_insert_with(|| vec![0; self.vocab_size])[t] += 1;
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn context_key(&self, history: &[Token]) -> Vec<Token> {
        let visible = visible_context(history);
        let width = self.order - 1;
        let take = visible.len().min(width);
        let mut key = vec![PAD; width - take];
        key.extend_from_slice(&visible[visible.len() - take..]);
        key
    }
}

impl ProbModel for KgramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&self, history: &[Token]) -> Result<Vec<f64>> {
        if let Some(&t) = history.iter().find(|&&t| t as usize >= self.vocab_size) {
            return Err(Error::UnknownToken {
                token: t as u32,
                vocab: self.vocab_size,
            });
        }
        let v = self.vocab_size as f64;
        Ok(match self.counts.get(&self.context_key(history)) {
            None => vec![1.0 / v; self.vocab_size],
            Some(row) => {
                let total: u64 = row.iter().sum();
                let denom = total as f64 + self.alpha * v;
                row.iter()
                    .map(|&c| (c as f64 + self.alpha) / denom)
                    .collect()
            }
        })
    }
}
