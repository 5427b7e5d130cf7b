//! Length-preserving functions as explicit tables, orbits and iteration,
//! single-word mutation, and the XOR query transform.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::state::{BitWord, QuantumState};

/// An explicit table of a function `{0,1}^n -> {0,1}^n`.
///
/// One instance holds one width; entry `a` of the table is `f(a)`. Tables
/// need not be bijections (mutated oracles usually are not).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthPreservingFn {
    width: usize,
    table: Vec<u128>,
}

impl LengthPreservingFn {
    pub fn from_table(width: usize, table: Vec<u128>) -> Result<Self> {
        if width == 0 || width > 24 {
            return Err(Error::BadWidth { width });
        }
        let size = 1usize << width;
        if table.len() != size {
            return Err(Error::BadOracleTable);
        }
        let limit = crate::state::section_mask(width);
        if table.iter().any(|&v| v > limit) {
            return Err(Error::BadOracleTable);
        }
        Ok(Self { width, table })
    }

    pub fn identity(width: usize) -> Result<Self> {
        let size = 1u128 << width;
        Self::from_table(width, (0..size).collect())
    }

    /// A seeded random bijection whose orbit from `0^n` is one cycle through
    /// all `2^n` words.
    pub fn random_full_cycle(width: usize, seed: u64) -> Result<Self> {
        if width == 0 || width > 24 {
            return Err(Error::BadWidth { width });
        }
        let size = 1usize << width;
        let mut rest: Vec<u128> = (1..size as u128).collect();
        let mut rng = SplitMix64::new(seed);
        rng.shuffle(&mut rest);
        // cycle 0 -> rest[0] -> rest[1] -> ... -> 0
        let mut table = alloc::vec![0u128; size];
        let mut prev = 0u128;
        for &word in &rest {
            table[prev as usize] = word;
            prev = word;
        }
        table[prev as usize] = 0;
        Ok(Self { width, table })
    }

    /// A seeded random table (no structure guaranteed).
    pub fn random_table(width: usize, rng: &mut SplitMix64) -> Result<Self> {
        if width == 0 || width > 24 {
            return Err(Error::BadWidth { width });
        }
        let size = 1usize << width;
        let table = (0..size)
            .map(|_| u128::from(rng.next_below(size as u64)))
            .collect();
        Self::from_table(width, table)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn table(&self) -> &[u128] {
        &self.table
    }

    pub fn get(&self, a: &BitWord) -> Result<BitWord> {
        if a.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: a.width(),
            });
        }
        BitWord::new(self.width, self.table[a.value() as usize])
    }

    #[inline]
    pub(crate) fn get_value(&self, a: u128) -> u128 {
        self.table[a as usize]
    }

    /// `f^{k}(x)`: `k`-fold application; `k = 0` is the identity.
    pub fn iterate(&self, k: usize, x: &BitWord) -> Result<BitWord> {
        if x.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: x.width(),
            });
        }
        let mut v = x.value();
        for _ in 0..k {
            v = self.table[v as usize];
        }
        BitWord::new(self.width, v)
    }

    /// Copy of `self` with the single entry at `at` replaced by `to`.
    pub fn mutate(&self, at: &BitWord, to: &BitWord) -> Result<Self> {
        if at.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: at.width(),
            });
        }
        if to.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: to.width(),
            });
        }
        let mut table = self.table.clone();
        table[at.value() as usize] = to.value();
        Ok(Self {
            width: self.width,
            table,
        })
    }

    /// Words on which the two tables disagree.
    pub fn disagreements(&self, other: &LengthPreservingFn) -> Result<Vec<u128>> {
        if other.width != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: other.width,
            });
        }
        Ok((0..self.table.len())
            .filter(|&a| self.table[a] != other.table[a])
            .map(|a| a as u128)
            .collect())
    }

    /// Iterates of `start` until the first repetition or `max_len` entries.
    pub fn orbit(&self, start: &BitWord, max_len: usize) -> Result<OrbitCertificate> {
        if start.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: start.width(),
            });
        }
        let mut seen = alloc::vec![false; self.table.len()];
        let mut words = Vec::new();
        let mut v = start.value();
        while words.len() < max_len && !seen[v as usize] {
            seen[v as usize] = true;
            words.push(BitWord::new(self.width, v)?);
            v = self.table[v as usize];
        }
        Ok(OrbitCertificate {
            function: self.clone(),
            start: *start,
            words,
        })
    }

    /// True when the orbit of `0^n` visits all `2^n` words and closes.
    pub fn is_full_cycle(&self) -> bool {
        let size = self.table.len();
        let mut seen = alloc::vec![false; size];
        let mut v = 0u128;
        for _ in 0..size {
            if seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
            v = self.table[v as usize];
        }
        v == 0
    }

    /// FNV-1a over the width and table, for report provenance.
    pub fn hash64(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut mix = |byte: u8| {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for b in (self.width as u64).to_le_bytes() {
            mix(b);
        }
        for &v in &self.table {
            for b in v.to_le_bytes() {
                mix(b);
            }
        }
        h
    }
}

/// A recorded orbit: consecutive entries satisfy `words[i+1] = f(words[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCertificate {
    function: LengthPreservingFn,
    start: BitWord,
    words: Vec<BitWord>,
}

impl OrbitCertificate {
    pub fn function(&self) -> &LengthPreservingFn {
        &self.function
    }

    pub fn start(&self) -> &BitWord {
        &self.start
    }

    pub fn words(&self) -> &[BitWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Whether this orbit visits every word of the width and closes on its
    /// start.
    pub fn is_full_cycle(&self) -> bool {
        let size = 1usize << self.start.width();
        self.words.len() == size
            && self.function.get_value(self.words[size - 1].value()) == self.start.value()
    }
}

/// The query transform: relocate each `|w, a, b⟩` to `|w, a, f(a) ⊕ b⟩`.
///
/// Amplitude values are untouched (keys only move), so the norm is
/// preserved exactly and applying the same query twice is the identity.
pub fn apply_query(state: &QuantumState, f: &LengthPreservingFn) -> Result<QuantumState> {
    let layout = *state.layout();
    if f.width() != layout.query_width() {
        return Err(Error::WidthMismatch {
            expected: layout.query_width(),
            got: f.width(),
        });
    }
    let mut amps = BTreeMap::new();
    for (key, amp) in state.iter() {
        let a = layout.section_value(key, layout.query_range());
        let b = layout.section_value(key, layout.answer_range());
        let new_key = layout.with_section(key, layout.answer_range(), f.get_value(a) ^ b);
        amps.insert(new_key, amp);
    }
    QuantumState::from_relocated(state, amps)
}
