use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintConfig {
    /// Longest subject string `X`.
    pub max_len: usize,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self { max_len: 3 }
    }
}

/// Instruction kinds, written as `<kind>:<X>=`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    /// Write `X` using only lowercase.
    Lower,
    /// Repeat `X` three times, no spaces.
    Repeat,
}

impl Instruction {
    fn prefix(self) -> &'static str {
        match self {
            Instruction::Lower => "low",
            Instruction::Repeat => "rep",
        }
    }
}

pub fn sample_instruction(config: &ConstraintConfig, rng: &mut impl Rng) -> String {
    let kind = if rng.random_bool(0.5) {
        Instruction::Lower
    } else {
        Instruction::Repeat
    };
    let len = rng.random_range(1..=config.max_len.max(1));
    let subject: String = (0..len)
        .map(|_| {
            let c = (b'a' + rng.random_range(0..26u8)) as char;
            match kind {
                Instruction::Lower => c.to_ascii_uppercase(),
                Instruction::Repeat => c,
            }
        })
        .collect();
    format!("{}:{subject}=", kind.prefix())
}

pub fn parse_instruction(input: &str) -> Option<(Instruction, &str)> {
    let body = input.strip_suffix('=').unwrap_or(input);
    let (prefix, subject) = body.split_once(':')?;
    let kind = match prefix {
        "low" => Instruction::Lower,
        "rep" => Instruction::Repeat,
        _ => return None,
    };
    Some((kind, subject))
}

pub fn follow(kind: Instruction, subject: &str) -> String {
    match kind {
        Instruction::Lower => subject.to_lowercase(),
        Instruction::Repeat => subject.repeat(3),
    }
}

/// Each instruction is checked by two verifiable rules: a character rule
/// (no uppercase / no spaces) and an exact content rule.
pub fn rule_results(kind: Instruction, subject: &str, output: &str) -> [bool; 2] {
    let content = output == follow(kind, subject);
    match kind {
        Instruction::Lower => [!output.chars().any(|c| c.is_uppercase()), content],
        Instruction::Repeat => [!output.contains(' '), content],
    }
}

pub fn score(input: &str, output: &str) -> f64 {
    match parse_instruction(input) {
        Some((kind, subject)) => {
            let rules = rule_results(kind, subject, output);
            rules.iter().filter(|&&ok| ok).count() as f64 / rules.len() as f64
        }
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercase_rule_cases() {
        assert_eq!(score("low:ABC=", "abc"), 1.0);
        assert_eq!(score("low:ABC=", "Abc"), 0.0);
        assert_eq!(score("low:ABC=", "abd"), 0.5);
    }

    #[test]
    fn repeat_rule_cases() {
        assert_eq!(score("rep:ab=", "ababab"), 1.0);
        assert_eq!(score("rep:ab=", "ab ab ab"), 0.0);
        assert_eq!(score("rep:ab=", "abab"), 0.5);
        assert_eq!(score("nonsense", "x"), 0.0);
    }
}
