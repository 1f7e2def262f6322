use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const DETERMINERS: &[&str] = &["a", "the", "my"];
const ADJECTIVES: &[&str] = &["big", "red", "old", "shy"];
const NOUNS: &[&str] = &["cat", "dog", "fox", "owl", "ant", "bee", "elk"];
const VERBS: &[&str] = &["ran", "sat", "hid", "ate", "dug", "sang"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CipherConfig {
    /// Seed of the letter substitution.
    pub key_seed: u64,
    /// Use the identity substitution instead of a seeded one.
    pub identity: bool,
    /// Reverse word order in the translation.
    pub reorder: bool,
    /// Probability that a sentence carries an adjective.
    pub adjective_rate: f64,
}

impl Default for CipherConfig {
    fn default() -> Self {
        Self {
            key_seed: 17,
            identity: false,
            reorder: true,
            adjective_rate: 0.3,
        }
    }
}

/// Fixed letter substitution plus word reordering.
#[derive(Debug, Clone)]
pub struct Cipher {
    config: CipherConfig,
    table: HashMap<char, char>,
}

impl Cipher {
    pub fn new(config: CipherConfig) -> Self {
        let letters: Vec<char> = ('a'..='z').collect();
        let mut image = letters.clone();
        if !config.identity {
            image.shuffle(&mut ChaCha8Rng::seed_from_u64(config.key_seed));
        }
        let table = letters.into_iter().zip(image).collect();
        Self { config, table }
    }

    pub fn sample_sentence(&self, rng: &mut impl Rng) -> String {
        let pick = |rng: &mut dyn rand::RngCore, words: &[&str]| {
            words[rng.random_range(0..words.len())].to_string()
        };
        let mut words = vec![pick(rng, DETERMINERS)];
        if rng.random_bool(self.config.adjective_rate.clamp(0.0, 1.0)) {
            words.push(pick(rng, ADJECTIVES));
        }
        words.push(pick(rng, NOUNS));
        words.push(pick(rng, VERBS));
        words.join(" ")
    }

    pub fn translate_word(&self, word: &str) -> String {
        word.chars()
            .map(|c| *self.table.get(&c).unwrap_or(&c))
            .collect()
    }

    pub fn translate(&self, sentence: &str) -> String {
        let mut words: Vec<String> = sentence
            .split_whitespace()
            .map(|w| self.translate_word(w))
            .collect();
        if self.config.reorder {
            words.reverse();
        }
        words.join(" ")
    }

    /// A source word drawn from the grammar's lexicon.
    pub fn sample_word(&self, rng: &mut impl Rng) -> &'static str {
        let lexicon: Vec<&&str> = DETERMINERS
            .iter()
            .chain(ADJECTIVES)
            .chain(NOUNS)
            .chain(VERBS)
            .collect();
        lexicon[rng.random_range(0..lexicon.len())]
    }
}

/// Clipped unigram overlap divided by the longer word count; 1 exactly when
/// the two word multisets coincide.
pub fn unigram_overlap(output: &str, reference: &str) -> f64 {
    let count = |s: &str| {
        let mut m: HashMap<String, usize> = HashMap::new();
        for w in s.split_whitespace() {
            *m.entry(w.to_string()).or_default() += 1;
        }
        m
    };
    let out = count(output);
    let reference_counts = count(reference);
    let n_out: usize = out.values().sum();
    let n_ref: usize = reference_counts.values().sum();
    let denom = n_out.max(n_ref);
    if denom == 0 {
        return 1.0;
    }
    let overlap: usize = out
        .iter()
        .map(|(w, &c)| c.min(reference_counts.get(w).copied().unwrap_or(0)))
        .sum();
    overlap as f64 / denom as f64
}
