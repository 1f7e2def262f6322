use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{example_rng, SeedSpace};
use super::{ArithConfig, Cipher, CipherConfig};
use crate::error::Result;
use crate::toymodel::{Vocab, EOS};
use crate::Token;

/// Mixture weights and generators for the pretraining corpus. Documents
/// use `:` as their separator, so no task prompt (which ends in `=`)
/// appears verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub grammar_weight: f64,
    pub arith_weight: f64,
    pub cipher_weight: f64,
    pub arith: ArithConfig,
    pub cipher: CipherConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            grammar_weight: 1.0,
            arith_weight: 2.0,
            cipher_weight: 1.0,
            arith: ArithConfig::default(),
            cipher: CipherConfig::default(),
        }
    }
}

fn document(config: &CorpusConfig, cipher: &Cipher, rng: &mut impl Rng) -> String {
    let total = config.grammar_weight + config.arith_weight + config.cipher_weight;
    let u = rng.random::<f64>() * total;
    if u < config.grammar_weight {
        let n = rng.random_range(1..=2);
        let sentences: Vec<String> = (0..n).map(|_| cipher.sample_sentence(rng)).collect();
        sentences.join(" ")
    } else if u < config.grammar_weight + config.arith_weight {
        let (fact, value) = config.arith.sample_fact(rng);
        format!("{fact}:{value}")
    } else {
        let word = cipher.sample_word(rng);
        format!("{word}:{}", cipher.translate_word(word))
    }
}

/// Deterministic stream of exactly `size_tokens` tokens made of
/// end-of-sequence-terminated documents (the last may be cut short).
pub fn make_corpus_with(
    config: &CorpusConfig,
    vocab: &Vocab,
    seed: u64,
    size_tokens: usize,
) -> Result<Vec<Token>> {
    let cipher = Cipher::new(config.cipher.clone());
    let mut stream = Vec::with_capacity(size_tokens + 32);
    let mut index = 0u64;
    while stream.len() < size_tokens {
        let mut rng = example_rng("corpus", SeedSpace::Corpus, seed, index);
        stream.extend(vocab.encode(&document(config, &cipher, &mut rng))?);
        stream.push(EOS);
        index += 1;
    }
    stream.truncate(size_tokens);
    Ok(stream)
}

pub fn make_pretraining_corpus(vocab: &Vocab, seed: u64, size_tokens: usize) -> Result<Vec<Token>> {
    make_corpus_with(&CorpusConfig::default(), vocab, seed, size_tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let v = Vocab::default_charset();
        assert!(make_pretraining_corpus(&v, 1, 0).unwrap().is_empty());
        let a = make_pretraining_corpus(&v, 1, 5000).unwrap();
        assert_eq!(a.len(), 5000);
        assert_eq!(a, make_pretraining_corpus(&v, 1, 5000).unwrap());
        assert_ne!(a, make_pretraining_corpus(&v, 2, 5000).unwrap());
    }

    #[test]
    fn mixes_all_document_kinds() {
        let v = Vocab::default_charset();
        let text = v.decode(&make_pretraining_corpus(&v, 3, 20_000).unwrap());
        let docs: Vec<&str> = text.split('\u{4}').collect();
        assert!(docs.iter().any(|d| d.contains('+') || d.contains('*')));
        assert!(docs.iter().any(|d| d.split(' ').count() >= 3));
        assert!(docs
            .iter()
            .any(|d| d.contains(':') && d.chars().all(|c| c.is_ascii_lowercase() || c == ':')));
        assert!(!text.contains('='));
    }
}
