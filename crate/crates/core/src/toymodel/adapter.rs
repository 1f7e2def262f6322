use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::neural::{NeuralLm, TensorId};
use super::quant::{check_bits, quantize_matrix};
use super::tensor::Matrix;
use crate::error::{Error, Result};
use crate::Token;

/// Weight matrices a low-rank adapter can attach to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixId {
    Embedding,
    Hidden,
    Output,
}

impl MatrixId {
    pub const ALL: [MatrixId; 3] = [MatrixId::Embedding, MatrixId::Hidden, MatrixId::Output];

    pub fn tensor(self) -> TensorId {
        match self {
            MatrixId::Embedding => TensorId::Embedding,
            MatrixId::Hidden => TensorId::HiddenWeight,
            MatrixId::Output => TensorId::OutputWeight,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixId::Embedding => "embedding",
            MatrixId::Hidden => "hidden",
            MatrixId::Output => "output",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// One low-rank factor pair: the adapted weight is `W + A·B`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterFactor {
    pub target: MatrixId,
    pub rank: usize,
    pub bits: u8,
    /// `d_in × r`
    pub a: Matrix,
    /// `r × d_out`
    pub b: Matrix,
}

impl AdapterFactor {
    pub fn d_in(&self) -> usize {
        self.a.rows()
    }

    pub fn d_out(&self) -> usize {
        self.b.cols()
    }

    /// `q · r · (d_in + d_out)`.
    pub fn bit_size(&self) -> u64 {
        self.bits as u64 * (self.rank * (self.d_in() + self.d_out())) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterSpec {
    pub factors: Vec<AdapterFactor>,
}

/// Which matrices to adapt and at what rank and precision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub targets: Vec<MatrixId>,
    pub rank: usize,
    pub bits: u8,
}

impl AdapterConfig {
    pub fn all(rank: usize, bits: u8) -> Self {
        Self {
            targets: MatrixId::ALL.to_vec(),
            rank,
            bits,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument(
                "adapter rank must be at least 1".into(),
            ));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidArgument(
                "adapter needs at least one target matrix".into(),
            ));
        }
        check_bits(self.bits)
    }
}

/// Training schedule shared by adapter, full-model and head-only runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl AdapterSpec {
    /// Fresh adapter: `A` uniform in ±1/√d_in, `B = 0`.
    pub fn init(model: &NeuralLm, config: &AdapterConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut targets = config.targets.clone();
        targets.sort();
        targets.dedup();
        let factors = targets
            .into_iter()
            .map(|target| {
                let (d_in, d_out) = model.config().shape(target.tensor());
                let bound = 1.0 / (d_in as f64).sqrt();
                let a: Vec<f64> = (0..d_in * config.rank)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect();
                AdapterFactor {
                    target,
                    rank: config.rank,
                    bits: config.bits,
                    a: Matrix::from_vec(d_in, config.rank, a),
                    b: Matrix::zeros(config.rank, d_out),
                }
            })
            .collect();
        Ok(Self { factors })
    }

    pub fn bit_size(&self) -> u64 {
        self.factors.iter().map(AdapterFactor::bit_size).sum()
    }

    /// Base model with every factor merged: `W ← W + A·B`.
    pub fn apply(&self, base: &NeuralLm) -> Result<NeuralLm> {
        let mut params = base.params().clone();
        for f in &self.factors {
            let w = params.get_mut(f.target.tensor());
            if w.shape() != (f.d_in(), f.d_out()) {
                return Err(Error::format(
                    "adapter",
                    format!("{} factor shape does not match the model", f.target.name()),
                ));
            }
            w.add_assign(&f.a.matmul(&f.b));
        }
        base.with_params(params)
    }

    /// Rounds each factor onto its own `bits`-bit grid.
    pub fn quantized(&self) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .map(|f| {
                Ok(AdapterFactor {
                    a: quantize_matrix(&f.a, f.bits)?,
                    b: quantize_matrix(&f.b, f.bits)?,
                    ..f.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { factors })
    }
}

/// Trains the factors of a fresh adapter with the base weights frozen, then
/// quantizes them. Batches are taken in dataset order every epoch.
pub fn train_adapter(
    model: &NeuralLm,
    config: &AdapterConfig,
    data: &[Vec<Token>],
    opts: FitOptions,
    seed: u64,
) -> Result<AdapterSpec> {
    let mut spec = AdapterSpec::init(model, config, seed)?;
    let batch_size = opts.batch_size.max(1);
    for _ in 0..opts.epochs {
        for batch in data.chunks(batch_size) {
            let merged = spec.apply(model)?;
            let (loss, grad) = merged.loss_and_grad(batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(loss));
            }
            for f in spec.factors.iter_mut() {
                let g = grad.get(f.target.tensor());
                let grad_a = g.matmul_t(&f.b);
                let grad_b = f.a.t_matmul(g);
                f.a.add_scaled(&grad_a, -opts.lr);
                f.b.add_scaled(&grad_b, -opts.lr);
                if !(f.a.is_finite() && f.b.is_finite()) {
                    return Err(Error::Divergence(f64::NAN));
                }
            }
        }
    }
    spec.quantized()
}
