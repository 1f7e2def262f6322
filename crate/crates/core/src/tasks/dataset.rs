use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::TaskSpec;
use crate::error::{Error, Result};
use crate::toymodel::{Vocab, EOS};
use crate::Token;

/// Disjoint seed namespaces for training and evaluation draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSpace {
    Train,
    Eval,
    Corpus,
}

impl SeedSpace {
    fn name(self) -> &'static str {
        match self {
            SeedSpace::Train => "train",
            SeedSpace::Eval => "eval",
            SeedSpace::Corpus => "corpus",
        }
    }
}

/// Per-example generator keyed by (task, namespace, seed, index).
pub fn example_rng(task: &str, space: SeedSpace, seed: u64, index: u64) -> ChaCha8Rng {
    let digest = Sha256::new()
        .chain_update(task.as_bytes())
        .chain_update([0])
        .chain_update(space.name().as_bytes())
        .chain_update([0])
        .chain_update(seed.to_le_bytes())
        .chain_update(index.to_le_bytes())
        .finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetProvenance {
    pub task: String,
    pub seed: u64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub provenance: DatasetProvenance,
}

impl Dataset {
    /// `n` i.i.d. (input, reference) pairs from the training namespace.
    pub fn sample(task: &TaskSpec, n: usize, seed: u64) -> Result<Self> {
        let examples = (0..n as u64)
            .map(|i| {
                let input =
                    task.sample_input(&mut example_rng(task.id(), SeedSpace::Train, seed, i));
                let output = task.reference(&input)?;
                Ok(Example { input, output })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            examples,
            provenance: DatasetProvenance {
                task: task.id().to_string(),
                seed,
                size: n,
            },
        })
    }

    /// The first `n` examples, with provenance size `n`. Nested prefixes
    /// give nested subsets.
    pub fn prefix(&self, n: usize) -> Self {
        let examples: Vec<Example> = self.examples.iter().take(n).cloned().collect();
        Self {
            provenance: DatasetProvenance {
                size: examples.len(),
                ..self.provenance.clone()
            },
            examples,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Token sequences `prompt ++ output ++ EOS`, one per example.
    pub fn training_sequences(&self, task: &TaskSpec, vocab: &Vocab) -> Result<Vec<Vec<Token>>> {
        self.examples
            .iter()
            .map(|e| {
                let mut tokens = vocab.encode(&task.format_example(e))?;
                tokens.push(EOS);
                Ok(tokens)
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let p = &self.provenance;
        let mut out = format!("# task={} seed={} n={}\n", p.task, p.seed, p.size);
        for e in &self.examples {
            out.push_str(&e.input);
            out.push('\t');
            out.push_str(&e.output);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |detail: String| Error::format("dataset", detail);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| bad("missing provenance header".into()))?;
        let (mut task, mut seed, mut size) = (None, None, None);
        for field in header.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| bad(format!("bad header field {field:?}")))?;
            match k {
                "task" => task = Some(v.to_string()),
                "seed" => seed = Some(v.parse().map_err(|_| bad(format!("bad seed {v:?}")))?),
                "n" => size = Some(v.parse().map_err(|_| bad(format!("bad size {v:?}")))?),
                _ => return Err(bad(format!("unknown header field {k:?}"))),
            }
        }
        let provenance = DatasetProvenance {
            task: task.ok_or_else(|| bad("header lacks task".into()))?,
            seed: seed.ok_or_else(|| bad("header lacks seed".into()))?,
            size: size.ok_or_else(|| bad("header lacks n".into()))?,
        };
        let examples = lines
            .map(|line| {
                let (input, output) = line
                    .split_once('\t')
                    .ok_or_else(|| bad(format!("no tab in {line:?}")))?;
                Ok(Example {
                    input: input.to_string(),
                    output: output.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if examples.len() != provenance.size {
            return Err(bad(format!(
                "header says {} examples, file has {}",
                provenance.size,
                examples.len()
            )));
        }
        Ok(Self {
            examples,
            provenance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
