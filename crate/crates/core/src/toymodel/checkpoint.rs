//! Checkpoint snapshots and their file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "TBCK", u16 version
//! u32 symbol count, then each symbol as a u32 code point
//! u32 window, u32 embed_dim, u32 hidden_dim
//! u8 provenance
//! u32 tensor count, then (u32 rows, u32 cols) per tensor
//! every tensor entry as an IEEE half float (u16), tensors in order
//! u32 lineage count, then per record: str op, u64 seed, str params-json
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::neural::{NeuralConfig, NeuralLm, Params, TensorId};
use super::tensor::Matrix;
use super::train::{pretrain as pretrain_model, PretrainOptions};
use super::Vocab;
use crate::error::{Error, Result};
use crate::wire::{sha256_hex, ByteReader, ByteWriter};
use crate::Token;

const MAGIC: &[u8; 4] = b"TBCK";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    RandomInit,
    Pretrained,
    Posttrained,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::RandomInit => "random-init",
            Provenance::Pretrained => "pretrained",
            Provenance::Posttrained => "posttrained",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Provenance::RandomInit,
            Provenance::Pretrained,
            Provenance::Posttrained,
        ]
        .into_iter()
        .find(|p| p.name() == s)
    }

    fn code(self) -> u8 {
        match self {
            Provenance::RandomInit => 0,
            Provenance::Pretrained => 1,
            Provenance::Posttrained => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Provenance::RandomInit),
            1 => Ok(Provenance::Pretrained),
            2 => Ok(Provenance::Posttrained),
            _ => Err(Error::format(
                "checkpoint",
                format!("unknown provenance code {c}"),
            )),
        }
    }
}

/// One step of the operation history that produced a checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageRecord {
    pub op: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
}

impl LineageRecord {
    pub fn new(op: &str, seed: u64) -> Self {
        Self {
            op: op.to_string(),
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn param(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format("lineage record", format!("`{}` lacks `{key}`", self.op)))
    }
}

/// Model snapshot at half precision with its vocabulary and history.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    vocab: Vocab,
    model: NeuralLm,
    provenance: Provenance,
    lineage: Vec<LineageRecord>,
}

impl Checkpoint {
    pub fn random_init(
        vocab: Vocab,
        window: usize,
        embed_dim: usize,
        hidden_dim: usize,
        seed: u64,
    ) -> Self {
        let config = NeuralConfig {
            vocab_size: vocab.size(),
            window,
            embed_dim,
            hidden_dim,
        };
        let record = LineageRecord::new("random_init", seed)
            .with("window", window)
            .with("embed_dim", embed_dim)
            .with("hidden_dim", hidden_dim);
        Self {
            vocab,
            model: NeuralLm::random(config, seed).to_half_precision(),
            provenance: Provenance::RandomInit,
            lineage: vec![record],
        }
    }

    /// New checkpoint from a model trained off this one; parameters are
    /// rounded to half precision.
    pub fn derive(
        &self,
        model: &NeuralLm,
        provenance: Provenance,
        record: LineageRecord,
    ) -> Result<Self> {
        if model.config() != self.model.config() {
            return Err(Error::InvalidArgument(
                "derived model changes the architecture".into(),
            ));
        }
        let mut lineage = self.lineage.clone();
        lineage.push(record);
        Ok(Self {
            vocab: self.vocab.clone(),
            model: model.to_half_precision(),
            provenance,
            lineage,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn model(&self) -> &NeuralLm {
        &self.model
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn lineage(&self) -> &[LineageRecord] {
        &self.lineage
    }

    pub fn bit_eq(&self, other: &Checkpoint) -> bool {
        self.to_bytes() == other.to_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u16(VERSION);
        w.u32(self.vocab.size() as u32);
        for &c in self.vocab.symbols() {
            w.u32(c as u32);
        }
        let c = self.model.config();
        w.u32(c.window as u32);
        w.u32(c.embed_dim as u32);
        w.u32(c.hidden_dim as u32);
        w.u8(self.provenance.code());
        w.u32(TensorId::ALL.len() as u32);
        for (_, m) in self.model.params().iter() {
            w.u32(m.rows() as u32);
            w.u32(m.cols() as u32);
        }
        for (_, m) in self.model.params().iter() {
            for &x in m.data() {
                w.u16(half::f16::from_f64(x).to_bits());
            }
        }
        w.u32(self.lineage.len() as u32);
        for r in &self.lineage {
            w.str(&r.op);
            w.u64(r.seed);
            w.str(&serde_json::to_string(&r.params).expect("string map serializes"));
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(data, "checkpoint");
        if r.take(4)? != MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::format(
                "checkpoint",
                format!("unsupported version {version}"),
            ));
        }
        let n_symbols = r.u32()? as usize;
        let symbols = (0..n_symbols)
            .map(|_| {
                let code = r.u32()?;
                char::from_u32(code)
                    .ok_or_else(|| Error::format("checkpoint", format!("bad symbol {code}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let vocab = Vocab::from_symbols(symbols)?;
        let config = NeuralConfig {
            vocab_size: vocab.size(),
            window: r.u32()? as usize,
            embed_dim: r.u32()? as usize,
            hidden_dim: r.u32()? as usize,
        };
        let provenance = Provenance::from_code(r.u8()?)?;
        if r.u32()? as usize != TensorId::ALL.len() {
            return Err(Error::format("checkpoint", "unexpected tensor count"));
        }
        let mut shapes = Vec::new();
        for id in TensorId::ALL {
            let shape = (r.u32()? as usize, r.u32()? as usize);
            if shape != config.shape(id) {
                return Err(Error::format(
                    "checkpoint",
                    format!("{} shape mismatch", id.name()),
                ));
            }
            shapes.push(shape);
        }
        let mut params = Params::zeros(&config);
        for (id, (rows, cols)) in TensorId::ALL.into_iter().zip(shapes) {
            let data = (0..rows * cols)
                .map(|_| Ok(half::f16::from_bits(r.u16()?).to_f64()))
                .collect::<Result<Vec<_>>>()?;
            *params.get_mut(id) = Matrix::from_vec(rows, cols, data);
        }
        let model = NeuralLm::from_params(config, params)?;
        let n_records = r.u32()? as usize;
        let mut lineage = Vec::with_capacity(n_records);
        for _ in 0..n_records {
            let op = r.str()?;
            let seed = r.u64()?;
            let params = serde_json::from_str(&r.str()?)?;
            lineage.push(LineageRecord { op, seed, params });
        }
        r.expect_end()?;
        Ok(Self {
            vocab,
            model,
            provenance,
            lineage,
        })
    }

    /// Hex SHA-256 of the file bytes; programs reference their base by it.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Pretrains from `base` and tags the result `pretrained`. `corpus_seed`
/// is recorded so the lineage can regenerate the corpus.
pub fn pretrain(
    base: &Checkpoint,
    corpus: &[Token],
    corpus_seed: u64,
    opts: &PretrainOptions,
) -> Result<Checkpoint> {
    let model = pretrain_model(base.model(), corpus, opts)?;
    let record = LineageRecord::new("pretrain", opts.seed)
        .with("corpus_seed", corpus_seed)
        .with("corpus_tokens", corpus.len())
        .with("steps", opts.steps)
        .with("batch_size", opts.batch_size)
        .with("schedule", serde_json::to_string(&opts.schedule)?)
        .with("optimizer", serde_json::to_string(&opts.optimizer)?);
    base.derive(&model, Provenance::Pretrained, record)
}
