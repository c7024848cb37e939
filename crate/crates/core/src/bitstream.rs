//! Sample points of the doubling map as binary digit streams.
//!
//! A point α ∈ [0,1) is represented by its binary digits ε₁ε₂ε₃…, with ε₁ the
//! most significant. Applying T(α) = 2α mod 1 drops the leading digit, so
//! T^k(α) is read off the stream by starting at digit k+1. No floating-point
//! orbit is ever iterated, which is what keeps long orbits from collapsing to 0
//! (in binary64 every orbit reaches exactly 0 in finitely many steps).
//!
//! Digits are packed 64 per word, most significant first: digit `i` (1-based)
//! lives in word `(i-1) / 64` at bit position `63 - (i-1) % 64`.
//!
//! Generated streams draw word `w` as the `w`-th output of a ChaCha8 keystream
//! keyed by the seed. ChaCha is counter based, so each digit is a pure function
//! of `(seed, index)` and a longer stream always extends a shorter one.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest window width that converts to binary64 without rounding.
pub const MAX_WINDOW_WIDTH: u32 = 53;

/// Window width used when a window is materialized as a real number.
pub const DEFAULT_WINDOW_WIDTH: u32 = 53;

/// Odd 64-bit golden-ratio constant used by [`split_seed`].
pub const SEED_SPLIT_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replicate `replicate` derived from a master seed.
///
/// `master_seed XOR (replicate · 0x9E3779B97F4A7C15)` with wrapping
/// multiplication. This rule is part of the reproducibility contract and must
/// not change.
pub fn split_seed(master_seed: u64, replicate: u64) -> u64 {
    master_seed ^ replicate.wrapping_mul(SEED_SPLIT_MULTIPLIER)
}

/// A finite prefix of the binary expansion of a sample point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitStream {
    seed: u64,
    len: usize,
    words: Vec<u64>,
}

/// The first `width` digits of T^offset(α), i.e. digits `offset+1 ..= offset+width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicWindow {
    offset: usize,
    width: u32,
    bits: u64,
}

impl DigitStream {
    /// Generates `count` fair digits from `seed`.
    pub fn generate(seed: u64, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = (0..count.div_ceil(64)).map(|_| rng.next_u64()).collect();
        let mut stream = DigitStream {
            seed,
            len: count,
            words,
        };
        stream.clear_tail();
        stream
    }

    /// Builds a stream from explicit digits (each 0 or 1, `digits[0]` = ε₁).
    ///
    /// The seed of such a stream is 0.
    ///
    /// # Panics
    ///
    /// Panics if a digit is not 0 or 1.
    pub fn from_digits(digits: &[u8]) -> Self {
        let mut words = vec![0u64; digits.len().div_ceil(64)];
        for (i, &d) in digits.iter().enumerate() {
            assert!(d <= 1, "digit {d} at index {} is not binary", i + 1);
            words[i / 64] |= (d as u64) << (63 - i % 64);
        }
        DigitStream {
            seed: 0,
            len: digits.len(),
            words,
        }
    }

    /// Builds a stream from packed words holding `len` digits.
    ///
    /// Bits of the last word past `len` are ignored.
    ///
    /// # Panics
    ///
    /// Panics if `words` holds fewer than `len` bits.
    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() * 64 >= len, "{len} digits need more than {} words", words.len());
        let mut words = words;
        words.truncate(len.div_ceil(64));
        let mut stream = DigitStream { seed: 0, len, words };
        stream.clear_tail();
        stream
    }

    fn clear_tail(&mut self) {
        let used = self.len % 64;
        if used != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX << (64 - used);
            }
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of digits held.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed digits, most significant first.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Digit ε_index (1-based). Returns `None` past the end of the stream.
    pub fn digit(&self, index: usize) -> Option<u8> {
        if index == 0 || index > self.len {
            return None;
        }
        let i = index - 1;
        Some(((self.words[i / 64] >> (63 - i % 64)) & 1) as u8)
    }

    /// The digits `offset+1 ..= offset+width` as an integer, ε_{offset+1} most
    /// significant. Caller guarantees `1 <= width <= 64` and
    /// `offset + width <= len`.
    #[inline]
    pub(crate) fn bits_unchecked(&self, offset: usize, width: u32) -> u64 {
        debug_assert!((1..=64).contains(&width));
        debug_assert!(offset + width as usize <= self.len);
        let word = offset / 64;
        let shift = (offset % 64) as u32;
        let mut hi = self.words[word] << shift;
        if shift != 0 {
            if let Some(next) = self.words.get(word + 1) {
                hi |= next >> (64 - shift);
            }
        }
        hi >> (64 - width)
    }

    /// Reads T^offset(α) to `width` binary digits.
    pub fn window(&self, offset: usize, width: u32) -> Result<DyadicWindow> {
        if width == 0 || width > MAX_WINDOW_WIDTH {
            return Err(Error::InvalidWidth(width));
        }
        let needed = offset
            .checked_add(width as usize)
            .ok_or(Error::InsufficientBits {
                offset,
                width,
                needed: usize::MAX,
                available: self.len,
            })?;
        if needed > self.len {
            return Err(Error::InsufficientBits {
                offset,
                width,
                needed,
                available: self.len,
            });
        }
        Ok(DyadicWindow {
            offset,
            width,
            bits: self.bits_unchecked(offset, width),
        })
    }

    /// The stream of T^n(α): digit `i` of the result is digit `i + n` of `self`.
    ///
    /// The result keeps this stream's seed. Shifting past the end yields an
    /// empty stream.
    pub fn shifted(&self, n: usize) -> DigitStream {
        let len = self.len.saturating_sub(n);
        let words = (0..len.div_ceil(64))
            .map(|w| {
                let start = n + 64 * w;
                let width = (self.len - start).min(64) as u32;
                self.bits_unchecked(start, width) << (64 - width)
            })
            .collect();
        DigitStream {
            seed: self.seed,
            len,
            words,
        }
    }
}

impl DyadicWindow {
    /// Number of doublings applied before reading.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of digits read.
    pub fn width(&self) -> u32 {
        self.width
    }

    /// The digits as an integer in `0 .. 2^width`.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Σ ε_{offset+i} 2^{-i}, exact in binary64 and within 2^{-width} of
    /// T^offset(α).
    pub fn value(&self) -> f64 {
        self.bits as f64 / (1u64 << self.width) as f64
    }

    /// The first `r` digits of the window, i.e. ⌊2^r · value⌋.
    pub fn leading(&self, r: u32) -> Option<u64> {
        (r <= self.width).then(|| self.bits >> (self.width - r))
    }
}
