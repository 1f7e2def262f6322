//! Symmetric linear quantization of parameter tensors.
//!
//! A `q`-bit tensor (q < 16) stores one `f32` scale `m = max|x|` and a
//! `q`-bit code per entry selecting one of `2^q` evenly spaced levels on
//! `[-m, m]`. At `q = 16` entries are stored as IEEE half floats, the
//! native parameter precision.

use super::neural::round_f16;
use super::tensor::Matrix;
use crate::error::{Error, Result};

pub const SUPPORTED_BITS: [u8; 4] = [2, 4, 8, 16];

pub fn check_bits(bits: u8) -> Result<()> {
    if SUPPORTED_BITS.contains(&bits) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "quantization level {bits} not in {SUPPORTED_BITS:?}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub bits: u8,
    pub rows: usize,
    pub cols: usize,
    /// Grid half-width; unused (zero) at 16 bits.
    pub scale: f32,
    pub codes: Vec<u32>,
}

impl QuantizedTensor {
    pub fn encode(m: &Matrix, bits: u8) -> Result<Self> {
        check_bits(bits)?;
        let (rows, cols) = m.shape();
        if bits == 16 {
            let codes = m
                .data()
                .iter()
                .map(|&x| half::f16::from_f64(x).to_bits() as u32)
                .collect();
            return Ok(Self {
                bits,
                rows,
                cols,
                scale: 0.0,
                codes,
            });
        }
        let scale = m.max_abs() as f32;
        let top = (1u32 << bits) - 1;
        let codes = if scale == 0.0 {
            vec![0; m.len()]
        } else {
            let s = scale as f64;
            m.data()
                .iter()
                .map(|&x| {
                    let pos = ((x / s + 1.0) * top as f64 / 2.0).round();
                    pos.clamp(0.0, top as f64) as u32
                })
                .collect()
        };
        Ok(Self {
            bits,
            rows,
            cols,
            scale,
            codes,
        })
    }

    pub fn decode(&self) -> Matrix {
        let data = if self.bits == 16 {
            self.codes
                .iter()
                .map(|&c| half::f16::from_bits(c as u16).to_f64())
                .collect()
        } else {
            let top = ((1u32 << self.bits) - 1) as f64;
            let s = self.scale as f64;
            self.codes
                .iter()
                .map(|&c| s * (2.0 * c as f64 / top - 1.0))
                .collect()
        };
        Matrix::from_vec(self.rows, self.cols, data)
    }

    /// Payload size: `bits` per entry. The scale is framing metadata.
    pub fn payload_bits(&self) -> u64 {
        self.bits as u64 * self.codes.len() as u64
    }
}

/// Rounds a tensor onto its `bits`-bit grid.
pub fn quantize_matrix(m: &Matrix, bits: u8) -> Result<Matrix> {
    if bits == 16 {
        check_bits(bits)?;
        return Ok(m.map(round_f16));
    }
    Ok(QuantizedTensor::encode(m, bits)?.decode())
}
