use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArithConfig {
    /// Maximum nesting depth of binary operations.
    pub depth: usize,
    /// Operands are drawn from `0..=max_operand`.
    pub max_operand: u32,
    /// Operator alphabet, a subset of `+-*`.
    pub ops: String,
}

impl Default for ArithConfig {
    fn default() -> Self {
        Self {
            depth: 1,
            max_operand: 9,
            ops: "+-*".into(),
        }
    }
}

impl ArithConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidArgument(
                "arith depth must be at least 1".into(),
            ));
        }
        if self.ops.is_empty() || !self.ops.chars().all(|c| "+-*".contains(c)) {
            return Err(Error::InvalidArgument(format!(
                "bad operator set {:?}",
                self.ops
            )));
        }
        Ok(())
    }

    fn op(&self, rng: &mut impl Rng) -> char {
        let ops: Vec<char> = self.ops.chars().collect();
        ops[rng.random_range(0..ops.len())]
    }

    /// Expression text without the trailing `=`. Compound operands are
    /// parenthesized.
    pub fn sample_expression(&self, rng: &mut impl Rng) -> String {
        self.expression(rng, self.depth).0
    }

    fn expression(&self, rng: &mut impl Rng, depth: usize) -> (String, bool) {
        if depth == 0 {
            return (rng.random_range(0..=self.max_operand).to_string(), false);
        }
        let left_depth = rng.random_range(0..depth);
        let right_depth = rng.random_range(0..depth);
        let (left, lc) = self.expression(rng, left_depth);
        let op = self.op(rng);
        let (right, rc) = self.expression(rng, right_depth);
        let wrap = |s: String, compound: bool| if compound { format!("({s})") } else { s };
        (format!("{}{op}{}", wrap(left, lc), wrap(right, rc)), true)
    }

    /// A single-operation fact `a op b` and its value.
    pub fn sample_fact(&self, rng: &mut impl Rng) -> (String, i64) {
        let a = rng.random_range(0..=self.max_operand) as i64;
        let b = rng.random_range(0..=self.max_operand) as i64;
        let op = self.op(rng);
        let value = match op {
            '+' => a + b,
            '-' => a - b,
            _ => a * b,
        };
        (format!("{a}{op}{b}"), value)
    }
}

/// Evaluates an integer expression over `+ - *` and parentheses with the
/// usual precedence. A trailing `=` is ignored.
pub fn evaluate_expression(text: &str) -> Result<i64> {
    let body = text.strip_suffix('=').unwrap_or(text);
    let mut p = Parser {
        chars: body.chars().collect(),
        pos: 0,
    };
    let v = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(p.error());
    }
    Ok(v)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self) -> Error {
        Error::InvalidArgument(format!(
            "cannot parse expression {:?} at {}",
            self.chars.iter().collect::<String>(),
            self.pos
        ))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<i64> {
        let mut v = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            v = if op == '+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<i64> {
        let mut v = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            v *= self.factor()?;
        }
        Ok(v)
    }

    fn factor(&mut self) -> Result<i64> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                self.chars[start..self.pos]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| self.error())
            }
            _ => Err(self.error()),
        }
    }
}
