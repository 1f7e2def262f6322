//! Byte and bit accounting for training corpora and weight deltas.

use serde::Serialize;

/// Bytes per token when each token id is stored in a 32-bit word.
pub const BYTES_PER_TOKEN: f64 = 4.0;

pub fn tokens_to_bytes(tokens: f64) -> f64 {
    tokens * BYTES_PER_TOKEN
}

pub fn bytes_to_bits(bytes: f64) -> f64 {
    bytes * 8.0
}

pub fn params_to_bits(params: f64, bits_per_param: f64) -> f64 {
    params * bits_per_param
}

/// Decimal (SI) rendering: `32 TB`, `150 GB`.
pub fn human_bytes(bytes: f64) -> String {
    const UNITS: [(&str, f64); 5] = [
        ("PB", 1e15),
        ("TB", 1e12),
        ("GB", 1e9),
        ("MB", 1e6),
        ("kB", 1e3),
    ];
    for (unit, scale) in UNITS {
        if bytes >= scale {
            return format!("{} {unit}", trim(bytes / scale));
        }
    }
    format!("{} B", trim(bytes))
}

fn trim(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountingReport {
    pub tokens: Option<f64>,
    pub bytes: Option<f64>,
    pub bits: Option<f64>,
    pub human: Option<String>,
    pub params: Option<f64>,
    pub bits_per_param: Option<f64>,
    pub param_bits: Option<f64>,
    pub dataset_bits: Option<f64>,
    /// `param_bits / dataset_bits`.
    pub ratio: Option<f64>,
}

/// Converts a token count and/or a parameter count. With a dataset size
/// the parameter payload is compared against it.
pub fn cmd_accounting(
    tokens: Option<f64>,
    params: Option<f64>,
    bits_per_param: f64,
    dataset_bits: Option<f64>,
) -> AccountingReport {
    let bytes = tokens.map(tokens_to_bytes);
    let param_bits = params.map(|p| params_to_bits(p, bits_per_param));
    AccountingReport {
        tokens,
        bytes,
        bits: bytes.map(bytes_to_bits),
        human: bytes.map(human_bytes),
        params,
        bits_per_param: params.map(|_| bits_per_param),
        param_bits,
        dataset_bits,
        ratio: match (param_bits, dataset_bits) {
            (Some(p), Some(d)) if d > 0.0 => Some(p / d),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_sizes() {
        assert_eq!(tokens_to_bytes(8e12), 32e12);
        assert_eq!(human_bytes(tokens_to_bytes(8e12)), "32 TB");
        assert_eq!(human_bytes(tokens_to_bytes(37.5e9)), "150 GB");
        assert_eq!(human_bytes(tokens_to_bytes(0.0)), "0 B");
    }

    #[test]
    fn delta_versus_dataset() {
        let r = cmd_accounting(None, Some(3e9), 1.0, Some(3e7));
        assert_eq!(r.ratio, Some(100.0));
    }
}
