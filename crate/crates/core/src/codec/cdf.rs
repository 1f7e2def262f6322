use crate::error::{Error, Result};

pub const MIN_PRECISION: u32 = 8;
pub const MAX_PRECISION: u32 = 30;
pub const DEFAULT_PRECISION: u32 = 16;

const SUM_TOLERANCE: f64 = 1e-9;

/// Integer cumulative distribution with total `2^precision`.
///
/// `bounds` holds `vocab + 1` entries starting at zero; symbol `s` owns the
/// half-open count range `bounds[s]..bounds[s + 1]`, which is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedCdf {
    bounds: Vec<u32>,
    precision: u32,
}

impl QuantizedCdf {
    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn total(&self) -> u32 {
        1 << self.precision
    }

    pub fn vocab_size(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Cumulative upper bound of each symbol; the last entry is the total.
    pub fn cumulative(&self) -> &[u32] {
        &self.bounds[1..]
    }

    pub fn count(&self, symbol: usize) -> u32 {
        self.bounds[symbol + 1] - self.bounds[symbol]
    }

    pub fn range(&self, symbol: usize) -> (u32, u32) {
        (self.bounds[symbol], self.bounds[symbol + 1])
    }

    /// Symbol whose count range contains `target` (`target < total`).
    pub fn symbol_for(&self, target: u32) -> usize {
        debug_assert!(target < self.total());
        self.bounds.partition_point(|&b| b <= target) - 1
    }

    /// Code length in bits of `symbol`: `precision - log2(count)`.
    pub fn bits(&self, symbol: usize) -> f64 {
        self.precision as f64 - (self.count(symbol) as f64).log2()
    }
}

pub(crate) fn check_precision(precision: u32) -> Result<()> {
    if (MIN_PRECISION..=MAX_PRECISION).contains(&precision) {
        Ok(())
    } else {
        Err(Error::PrecisionOutOfRange(precision))
    }
}

/// Exact `floor(p * n)` for a finite nonnegative double `p`.
fn scaled_floor(p: f64, n: u64) -> u64 {
    if p == 0.0 {
        return 0;
    }
    let bits = p.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, shift) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let product = mantissa as u128 * n as u128;
    if shift >= 0 {
        (product << shift) as u64
    } else if -shift >= 128 {
        0
    } else {
        (product >> (-shift)) as u64
    }
}

/// Quantizes `probs` onto an integer grid of total `2^precision`.
///
/// Every symbol receives a floor of one count. The remaining
/// `2^precision - |V|` counts are split as `floor(p_i * free)`, and the
/// rounding leftover goes to the most probable symbol (lowest index on ties).
pub fn quantize_distribution(probs: &[f64], precision: u32) -> Result<QuantizedCdf> {
    check_precision(precision)?;
    let vocab = probs.len();
    let total = 1u64 << precision;
    if vocab == 0 {
        return Err(Error::InvalidDistribution("empty vocabulary".into()));
    }
    if 2 * vocab as u64 > total {
        return Err(Error::VocabTooLarge { vocab, precision });
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }

    let free = total - vocab as u64;
    let mut counts: Vec<u64> = probs.iter().map(|&p| 1 + scaled_floor(p, free)).collect();
    let assigned: u64 = counts.iter().sum();
    let argmax = probs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > probs[best] { i } else { best });
    if assigned <= total {
        counts[argmax] += total - assigned;
    } else {
        let excess = assigned - total;
        debug_assert!(counts[argmax] > excess);
        counts[argmax] -= excess;
    }

    let mut bounds = Vec::with_capacity(vocab + 1);
    let mut acc = 0u64;
    bounds.push(0);
    for c in counts {
        acc += c;
        bounds.push(acc as u32);
    }
    debug_assert_eq!(acc, total);
    Ok(QuantizedCdf { bounds, precision })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};

    /// Independent re-computation of the flooring rule with exact rationals.
    fn oracle_counts(probs: &[f64], precision: u32) -> Vec<u64> {
        let total = 1u64 << precision;
        let free = BigRational::from_integer((total - probs.len() as u64).into());
        let mut counts: Vec<u64> = probs
            .iter()
            .map(|&p| {
                let exact = BigRational::from_float(p).unwrap_or_else(BigRational::zero);
                1 + (exact * &free).floor().to_integer().to_u64().unwrap()
            })
            .collect();
        let mut best = 0;
        for i in 1..probs.len() {
            if BigRational::from_float(probs[i]) > BigRational::from_float(probs[best]) {
                best = i;
            }
        }
        let assigned: u64 = counts.iter().sum();
        counts[best] = counts[best] + total - assigned;
        counts
    }

    fn counts(cdf: &QuantizedCdf) -> Vec<u64> {
        (0..cdf.vocab_size()).map(|s| cdf.count(s) as u64).collect()
    }

    #[test]
    fn even_split() {
        let cdf = quantize_distribution(&[0.5, 0.5], 8).unwrap();
        assert_eq!(cdf.cumulative(), &[128, 256]);
    }

    #[test]
    fn zero_probability_gets_floor_count() {
        let cdf = quantize_distribution(&[1.0, 0.0], 8).unwrap();
        assert_eq!(cdf.cumulative(), &[255, 256]);
    }

    #[test]
    fn three_symbols_match_exact_rational_rule() {
        let probs = [0.7, 0.2, 0.1];
        let cdf = quantize_distribution(&probs, 16).unwrap();
        let got = counts(&cdf);
        assert_eq!(got, oracle_counts(&probs, 16));
        assert_eq!(got.iter().sum::<u64>(), 65536);
        for (c, p) in got.iter().zip(probs) {
            assert!((*c as f64 - p * 65536.0).abs() <= 3.0);
        }
    }

    #[test]
    fn random_vectors_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..80);
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
            let s: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let precision = rng.random_range(8..=30);
            match quantize_distribution(&probs, precision) {
                Ok(cdf) => assert_eq!(counts(&cdf), oracle_counts(&probs, precision)),
                Err(Error::VocabTooLarge { .. }) => assert!(2 * n as u64 > 1 << precision),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            quantize_distribution(&[0.5, 0.5], 7),
            Err(Error::PrecisionOutOfRange(7))
        ));
        assert!(matches!(
            quantize_distribution(&[0.5, 0.5], 31),
            Err(Error::PrecisionOutOfRange(31))
        ));
        let wide = vec![1.0 / 200.0; 200];
        assert!(matches!(
            quantize_distribution(&wide, 8),
            Err(Error::VocabTooLarge { .. })
        ));
        assert!(quantize_distribution(&[0.6, 0.6], 16).is_err());
        assert!(quantize_distribution(&[1.5, -0.5], 16).is_err());
    }

    #[test]
    fn symbol_lookup_inverts_ranges() {
        let cdf = quantize_distribution(&[0.25, 0.0, 0.5, 0.25], 10).unwrap();
        for s in 0..4 {
            let (lo, hi) = cdf.range(s);
            assert!(lo < hi);
            assert_eq!(cdf.symbol_for(lo), s);
            assert_eq!(cdf.symbol_for(hi - 1), s);
        }
    }
}
