//! Binary arithmetic coder over 32-bit integer state.
//!
//! The interval `[low, high]` is kept inside `[0, 2^32)`. Renormalization
//! emits settled leading bits and defers straddling ones as pending bits,
//! which resolve to the complement of the next settled bit. Termination
//! writes the shortest suffix that pins a point inside the final interval;
//! the decoder reads zeros past the end of the code.

use super::bitstring::BitString;
use super::cdf::QuantizedCdf;
use crate::error::{Error, Result};

const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;
const THREE_QUARTERS: u64 = 3 << 30;
const FULL: u64 = 1 << 32;
const STATE_BITS: u32 = 32;

#[derive(Debug)]
pub struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitString,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            high: FULL - 1,
            pending: 0,
            out: BitString::new(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub fn encode(&mut self, cdf: &QuantizedCdf, symbol: usize) {
        let (lo, hi) = cdf.range(symbol);
        let span = self.high - self.low + 1;
        let shift = cdf.precision();
        self.high = self.low + ((span * hi as u64) >> shift) - 1;
        self.low += (span * lo as u64) >> shift;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    pub fn finish(mut self) -> BitString {
        if self.low == 0 && self.pending == 0 {
            return self.out;
        }
        for k in 1..=STATE_BITS {
            let step = 1u64 << (STATE_BITS - k);
            let point = self.low.div_ceil(step) * step;
            if point <= self.high {
                self.emit(point & HALF != 0);
                for i in 1..k {
                    self.out.push(point & (HALF >> i) != 0);
                }
                return self.out;
            }
        }
        unreachable!("renormalized interval always contains a 32-bit point")
    }
}

#[derive(Debug)]
pub struct Decoder<'a> {
    code: &'a BitString,
    low: u64,
    high: u64,
    value: u64,
    read: usize,
    decoded: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(code: &'a BitString) -> Self {
        let mut value = 0;
        for i in 0..STATE_BITS as usize {
            value = (value << 1) | code.get(i).unwrap_or(false) as u64;
        }
        Self {
            code,
            low: 0,
            high: FULL - 1,
            value,
            read: STATE_BITS as usize,
            decoded: 0,
        }
    }

    pub fn decode(&mut self, cdf: &QuantizedCdf) -> Result<usize> {
        if self.value < self.low || self.value > self.high {
            return Err(Error::CorruptCode {
                decoded: self.decoded,
            });
        }
        let span = self.high - self.low + 1;
        let shift = cdf.precision();
        let target = (((self.value - self.low + 1) << shift) - 1) / span;
        let symbol = cdf.symbol_for(target as u32);
        let (lo, hi) = cdf.range(symbol);
        self.high = self.low + ((span * hi as u64) >> shift) - 1;
        self.low += (span * lo as u64) >> shift;
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value = self.value.wrapping_sub(HALF);
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value = self.value.wrapping_sub(QUARTER);
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            let bit = self.code.get(self.read).unwrap_or(false) as u64;
            self.value = (self.value.wrapping_shl(1) | bit) & (FULL - 1);
            self.read += 1;
        }
        self.decoded += 1;
        // Every renormalization step of a valid encoding emits one bit, so
        // a decoder that has shifted past the code length is out of sync.
        if self.read - STATE_BITS as usize > self.code.len() {
            return Err(Error::CodeExhausted {
                decoded: self.decoded,
            });
        }
        Ok(symbol)
    }
}
