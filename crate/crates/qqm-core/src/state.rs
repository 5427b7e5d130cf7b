//! Register layout, bit words, sparse quantum states, and dense unitaries.
//!
//! Basis states of an `m`-qubit register are bit strings; qubit 0 is the
//! leftmost symbol. Internally a basis string is packed into a `u128` whose
//! binary rendering (width `m`) equals the string, so qubit `i` lives at bit
//! position `m - 1 - i`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::rng::SplitMix64;
use crate::{Complex, DENSE_ARITY_CAP, NORM_TOL, PRUNE_EPS, UNITARY_TOL};

/// A fixed-width word over `{0,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitWord {
    width: usize,
    value: u128,
}

impl BitWord {
    pub fn new(width: usize, value: u128) -> Result<Self> {
        if width == 0 || width > 128 {
            return Err(Error::BadWidth { width });
        }
        if width < 128 && value >> width != 0 {
            return Err(Error::ValueOutOfRange { width, value });
        }
        Ok(Self { width, value })
    }

    /// The all-zero word `0^width`.
    pub fn zero(width: usize) -> Result<Self> {
        Self::new(width, 0)
    }

    /// Parse a string of `0`/`1` symbols, leftmost symbol = qubit 0.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let width = s.len();
        if width == 0 || width > 128 {
            return Err(Error::BadWidth { width });
        }
        let mut value = 0u128;
        for c in s.chars() {
            value <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                _ => return Err(Error::BadParameter("bit string may only contain 0 and 1")),
            }
        }
        Ok(Self { width, value })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    /// Bit at position `i` counted from the left.
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }

    /// Concatenate `self ++ other` (self occupies the leftmost positions).
    pub fn concat(&self, other: &BitWord) -> Result<Self> {
        let width = self.width + other.width;
        if width > 128 {
            return Err(Error::BadWidth { width });
        }
        Ok(Self {
            width,
            value: (self.value << other.width) | other.value,
        })
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            write!(f, "{}", u8::from(self.bit(i)))?;
        }
        Ok(())
    }
}

/// Register split into working, query-word, and answer sections.
///
/// Sections in order: working `[0, w)`, query word `[w, w+n)`, answer
/// `[w+n, w+2n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    working: usize,
    query_width: usize,
}

impl RegisterLayout {
    pub fn new(working: usize, query_width: usize) -> Result<Self> {
        if query_width == 0 {
            return Err(Error::BadWidth { width: query_width });
        }
        let total = working + 2 * query_width;
        if total > 128 {
            return Err(Error::BadWidth { width: total });
        }
        Ok(Self {
            working,
            query_width,
        })
    }

    pub fn working(&self) -> usize {
        self.working
    }

    pub fn query_width(&self) -> usize {
        self.query_width
    }

    pub fn total(&self) -> usize {
        self.working + 2 * self.query_width
    }

    pub fn working_range(&self) -> Range<usize> {
        0..self.working
    }

    pub fn query_range(&self) -> Range<usize> {
        self.working..self.working + self.query_width
    }

    pub fn answer_range(&self) -> Range<usize> {
        self.working + self.query_width..self.total()
    }

    /// Value of a contiguous qubit section inside a packed basis key.
    pub fn section_value(&self, key: u128, section: Range<usize>) -> u128 {
        section_value(key, self.total(), section)
    }

    /// Replace a contiguous qubit section inside a packed basis key.
    pub fn with_section(&self, key: u128, section: Range<usize>, value: u128) -> u128 {
        with_section(key, self.total(), section, value)
    }
}

pub(crate) fn section_mask(len: usize) -> u128 {
    if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    }
}

pub(crate) fn section_value(key: u128, total: usize, section: Range<usize>) -> u128 {
    let len = section.end - section.start;
    (key >> (total - section.end)) & section_mask(len)
}

pub(crate) fn with_section(key: u128, total: usize, section: Range<usize>, value: u128) -> u128 {
    let len = section.end - section.start;
    let shift = total - section.end;
    (key & !(section_mask(len) << shift)) | (value << shift)
}

/// Sparse unit vector over the basis strings of a register.
///
/// Entries with modulus below [`PRUNE_EPS`] are never stored. The map is
/// ordered, so iteration (and therefore every floating point accumulation
/// in the crate) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amps: BTreeMap<u128, Complex>,
}

impl QuantumState {
    /// The basis state `|word⟩`.
    pub fn basis_state(layout: RegisterLayout, word: &BitWord) -> Result<Self> {
        if word.width() != layout.total() {
            return Err(Error::WidthMismatch {
                expected: layout.total(),
                got: word.width(),
            });
        }
        let mut amps = BTreeMap::new();
        amps.insert(word.value(), Complex::new(1.0, 0.0));
        Ok(Self { layout, amps })
    }

    /// Build a state from explicit amplitudes; must be unit norm within
    /// [`NORM_TOL`] after pruning.
    pub fn from_amplitudes<I>(layout: RegisterLayout, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u128, Complex)>,
    {
        let total = layout.total();
        let limit = section_mask(total);
        let mut amps = BTreeMap::new();
        for (key, amp) in entries {
            if key > limit {
                return Err(Error::ValueOutOfRange {
                    width: total,
                    value: key,
                });
            }
            if amp.norm_sqr() >= PRUNE_EPS * PRUNE_EPS {
                amps.insert(key, amp);
            }
        }
        let state = Self { layout, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Internal constructor for exact key relocations: the amplitude values
    /// of `source` were moved to new keys, so no re-validation is needed.
    pub(crate) fn from_relocated(
        source: &QuantumState,
        amps: BTreeMap<u128, Complex>,
    ) -> Result<Self> {
        debug_assert_eq!(source.amps.len(), amps.len());
        Ok(Self {
            layout: source.layout,
            amps,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitude(&self, key: u128) -> Complex {
        self.amps
            .get(&key)
            .copied()
            .unwrap_or_else(|| Complex::new(0.0, 0.0))
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u128, Complex)> + '_ {
        self.amps.iter().map(|(&k, &a)| (k, a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.norm_sqr())
    }

    /// Euclidean distance between two states on the same layout; in `[0, 2]`
    /// for unit vectors.
    pub fn distance(&self, other: &QuantumState) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        let mut sum = 0.0;
        for (&key, &amp) in &self.amps {
            sum += (amp - other.amplitude(key)).norm_sqr();
        }
        for (&key, &amp) in &other.amps {
            if !self.amps.contains_key(&key) {
                sum += amp.norm_sqr();
            }
        }
        Ok(sqrt(sum))
    }

    /// Apply a dense unitary to the listed qubits (identity elsewhere).
    ///
    /// `targets[0]` is the most significant position of the matrix index.
    pub fn apply_working(&self, targets: &[usize], u: &DenseUnitary) -> Result<QuantumState> {
        let total = self.layout.total();
        validate_targets(targets, total)?;
        if targets.len() != u.arity() {
            return Err(Error::ArityMismatch {
                expected: u.arity(),
                got: targets.len(),
            });
        }
        let arity = u.arity();
        let dim = 1usize << arity;

        // Pack/unpack the target qubits of a key into a matrix sub-index.
        let sub_index = |key: u128| -> usize {
            let mut sub = 0usize;
            for (j, &t) in targets.iter().enumerate() {
                let bit = (key >> (total - 1 - t)) & 1;
                sub |= (bit as usize) << (arity - 1 - j);
            }
            sub
        };
        let clear_mask: u128 = targets
            .iter()
            .map(|&t| 1u128 << (total - 1 - t))
            .fold(0, |m, b| m | b);
        let spread = |rest: u128, sub: usize| -> u128 {
            let mut key = rest;
            for (j, &t) in targets.iter().enumerate() {
                if (sub >> (arity - 1 - j)) & 1 == 1 {
                    key |= 1u128 << (total - 1 - t);
                }
            }
            key
        };

        let mut groups: BTreeMap<u128, Vec<(usize, Complex)>> = BTreeMap::new();
        for (&key, &amp) in &self.amps {
            groups
                .entry(key & !clear_mask)
                .or_default()
                .push((sub_index(key), amp));
        }

        let mut amps = BTreeMap::new();
        for (rest, column) in groups {
            for row in 0..dim {
                let mut out = Complex::new(0.0, 0.0);
                for &(col, amp) in &column {
                    out += u.entry(row, col) * amp;
                }
                if out.norm_sqr() >= PRUNE_EPS * PRUNE_EPS {
                    amps.insert(spread(rest, row), out);
                }
            }
        }
        Ok(QuantumState {
            layout: self.layout,
            amps,
        })
    }

    /// Relocate amplitudes along a bijection of basis strings.
    ///
    /// The map is verified exhaustively for registers of at most 20 qubits
    /// and by seeded spot-check sampling above that; a collision on the
    /// actual support is always detected.
    pub fn apply_basis_permutation<P>(&self, p: P) -> Result<QuantumState>
    where
        P: Fn(u128) -> u128,
    {
        let total = self.layout.total();
        let limit = section_mask(total);
        if total <= 20 {
            let size = 1usize << total;
            let mut seen = alloc::vec![false; size];
            for x in 0..size as u128 {
                let y = p(x);
                if y > limit {
                    return Err(Error::PermutationOutOfRange { value: y });
                }
                if seen[y as usize] {
                    return Err(Error::NotInjective);
                }
                seen[y as usize] = true;
            }
        } else {
            let mut rng = SplitMix64::new(0x5eed_5eed_5eed_5eed);
            let mut images = BTreeMap::new();
            for _ in 0..64 {
                let x = ((u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64())) & limit;
                let y = p(x);
                if y > limit {
                    return Err(Error::PermutationOutOfRange { value: y });
                }
                if let Some(prev) = images.insert(y, x) {
                    if prev != x {
                        return Err(Error::NotInjective);
                    }
                }
            }
        }

        let mut amps = BTreeMap::new();
        for (&key, &amp) in &self.amps {
            let y = p(key);
            if y > limit {
                return Err(Error::PermutationOutOfRange { value: y });
            }
            if amps.insert(y, amp).is_some() {
                return Err(Error::NotInjective);
            }
        }
        Ok(QuantumState {
            layout: self.layout,
            amps,
        })
    }

    /// Probability of each outcome when the listed qubits are observed.
    pub fn measure_marginal(&self, qubits: &[usize]) -> Result<BTreeMap<BitWord, f64>> {
        let total = self.layout.total();
        validate_targets(qubits, total)?;
        let width = qubits.len();
        let mut probs: BTreeMap<BitWord, f64> = BTreeMap::new();
        for (&key, &amp) in &self.amps {
            let mut value = 0u128;
            for &q in qubits {
                value = (value << 1) | ((key >> (total - 1 - q)) & 1);
            }
            let word = BitWord { width, value };
            *probs.entry(word).or_insert(0.0) += amp.norm_sqr();
        }
        Ok(probs)
    }

    /// Marginal over a contiguous section.
    pub fn measure_section(&self, section: Range<usize>) -> Result<BTreeMap<BitWord, f64>> {
        let qubits: Vec<usize> = section.collect();
        self.measure_marginal(&qubits)
    }
}

fn validate_targets(targets: &[usize], total: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::EmptyQubitList);
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= total {
            return Err(Error::QubitOutOfRange { index: t, total });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateQubit { index: t });
        }
    }
    Ok(())
}

/// A dense unitary on `arity` qubits, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    arity: usize,
    entries: Vec<Complex>,
}

impl DenseUnitary {
    /// Validate and wrap a `2^arity × 2^arity` matrix using the default
    /// arity cap.
    pub fn new(arity: usize, entries: Vec<Complex>) -> Result<Self> {
        Self::new_with_cap(arity, entries, DENSE_ARITY_CAP)
    }

    pub fn new_with_cap(arity: usize, entries: Vec<Complex>, cap: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::BadParameter("dense arity must be at least 1"));
        }
        if arity > cap {
            return Err(Error::ArityCapExceeded { arity, cap });
        }
        let dim = 1usize << arity;
        if entries.len() != dim * dim {
            return Err(Error::ArityMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let u = Self { arity, entries };
        let dev = u.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary { max_deviation: dev });
        }
        Ok(u)
    }

    /// Max per-entry deviation of `U · U†` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut max_dev: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let mut dot = Complex::new(0.0, 0.0);
                for k in 0..dim {
                    dot += self.entry(r, k) * self.entry(c, k).conj();
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                let dev = (dot - Complex::new(expect, 0.0)).norm_sqr();
                if dev > max_dev {
                    max_dev = dev;
                }
            }
        }
        sqrt(max_dev)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    pub fn identity(arity: usize) -> Result<Self> {
        let dim = 1usize << arity;
        let mut entries = alloc::vec![Complex::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex::new(1.0, 0.0);
        }
        Self::new(arity, entries)
    }

    pub fn hadamard() -> Self {
        let h = 1.0 / sqrt(2.0);
        Self {
            arity: 1,
            entries: alloc::vec![
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(-h, 0.0),
            ],
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            arity: 1,
            entries: alloc::vec![
                Complex::new(0.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(0.0, 0.0),
            ],
        }
    }

    /// Random unitary built as a product of seeded two-level rotations.
    pub fn random(arity: usize, rng: &mut SplitMix64) -> Result<Self> {
        let dim = 1usize << arity;
        let mut m = alloc::vec![Complex::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex::new(1.0, 0.0);
        }
        // Givens rotations with random phases; the product stays unitary to
        // fp roundoff.
        let rounds = 3 * dim;
        for _ in 0..rounds {
            let p = rng.next_below(dim as u64) as usize;
            let mut q = rng.next_below(dim as u64) as usize;
            if p == q {
                q = (q + 1) % dim;
            }
            let theta = rng.next_range(0.0, core::f64::consts::TAU);
            let phi = rng.next_range(0.0, core::f64::consts::TAU);
            let (c, s) = (cos(theta), sin(theta));
            let e_pos = Complex::new(cos(phi), sin(phi));
            let e_neg = e_pos.conj();
            for col in 0..dim {
                let a = m[p * dim + col];
                let b = m[q * dim + col];
                m[p * dim + col] = a * c - b * e_pos * s;
                m[q * dim + col] = a * e_neg * s + b * c;
            }
        }
        // Random diagonal phases.
        for row in 0..dim {
            let psi = rng.next_range(0.0, core::f64::consts::TAU);
            let e = Complex::new(cos(psi), sin(psi));
            for col in 0..dim {
                m[row * dim + col] *= e;
            }
        }
        Self::new(arity, m)
    }
}

#[cfg(feature = "std")]
fn cos(x: f64) -> f64 {
    x.cos()
}
#[cfg(feature = "std")]
fn sin(x: f64) -> f64 {
    x.sin()
}
#[cfg(not(feature = "std"))]
fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[cfg(not(feature = "std"))]
fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn layout(w: usize, n: usize) -> RegisterLayout {
        RegisterLayout::new(w, n).unwrap()
    }

    #[test]
    fn bit_word_rejects_out_of_range() {
        assert!(BitWord::new(2, 4).is_err());
        assert!(BitWord::new(0, 0).is_err());
        assert!(BitWord::new(129, 0).is_err());
        assert_eq!(BitWord::new(2, 3).unwrap().to_string(), "11");
    }

    #[test]
    fn bit_word_parse_and_display_round_trip() {
        let w = BitWord::parse_bits("10110").unwrap();
        assert_eq!(w.width(), 5);
        assert_eq!(w.value(), 0b10110);
        assert_eq!(w.to_string(), "10110");
        assert!(w.bit(0));
        assert!(!w.bit(1));
        assert!(BitWord::parse_bits("10x").is_err());
    }

    #[test]
    fn layout_sections_cover_register() {
        let l = layout(3, 2);
        assert_eq!(l.total(), 7);
        assert_eq!(l.working_range(), 0..3);
        assert_eq!(l.query_range(), 3..5);
        assert_eq!(l.answer_range(), 5..7);
        assert!(RegisterLayout::new(1, 0).is_err());
    }

    #[test]
    fn section_helpers_match_string_layout() {
        let l = layout(1, 1);
        // key "101": working=1, query=0, answer=1
        let key = 0b101u128;
        assert_eq!(l.section_value(key, l.working_range()), 1);
        assert_eq!(l.section_value(key, l.query_range()), 0);
        assert_eq!(l.section_value(key, l.answer_range()), 1);
        assert_eq!(l.with_section(key, l.query_range(), 1), 0b111);
    }

    #[test]
    fn basis_state_examples() {
        // (w=0, n=1), "00" -> {|00>: 1}
        let s =
            QuantumState::basis_state(layout(0, 1), &BitWord::parse_bits("00").unwrap()).unwrap();
        assert_eq!(s.support_len(), 1);
        assert_eq!(s.amplitude(0b00), Complex::new(1.0, 0.0));

        // (w=1, n=1), "101" -> {|101>: 1}
        let s =
            QuantumState::basis_state(layout(1, 1), &BitWord::parse_bits("101").unwrap()).unwrap();
        assert_eq!(s.amplitude(0b101), Complex::new(1.0, 0.0));
        assert_eq!(s.amplitude(0b001), Complex::new(0.0, 0.0));

        // all-zero word is the start state e_0
        let s = QuantumState::basis_state(layout(2, 2), &BitWord::zero(6).unwrap()).unwrap();
        assert_eq!(s.amplitude(0), Complex::new(1.0, 0.0));

        // length mismatch rejected
        assert!(
            QuantumState::basis_state(layout(0, 1), &BitWord::parse_bits("000").unwrap()).is_err()
        );
    }

    #[test]
    fn distance_identity_and_orthogonal() {
        let l = layout(0, 1);
        let a = QuantumState::basis_state(l, &BitWord::parse_bits("00").unwrap()).unwrap();
        let b = QuantumState::basis_state(l, &BitWord::parse_bits("01").unwrap()).unwrap();
        assert_eq!(a.distance(&a).unwrap(), 0.0);
        assert!((a.distance(&b).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-12);
        let other =
            QuantumState::basis_state(layout(1, 1), &BitWord::parse_bits("000").unwrap()).unwrap();
        assert!(a.distance(&other).is_err());
    }

    #[test]
    fn distance_basis_vs_uniform_single_qubit() {
        // |0> vs (|0>+|1>)/sqrt(2): sqrt(2 - sqrt(2)), two-term arithmetic.
        let l = layout(0, 1);
        let h = 1.0 / 2.0f64.sqrt();
        let a = QuantumState::from_amplitudes(l, [(0b00u128, Complex::new(1.0, 0.0))]).unwrap();
        let b = QuantumState::from_amplitudes(
            l,
            [
                (0b00u128, Complex::new(h, 0.0)),
                (0b01u128, Complex::new(h, 0.0)),
            ],
        )
        .unwrap();
        let expected = (2.0 - 2.0f64.sqrt()).sqrt();
        assert!((expected - 0.765_366_864_730_179_5).abs() < 1e-12);
        assert!((a.distance(&b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn from_amplitudes_validates_norm_and_prunes() {
        let l = layout(0, 1);
        assert!(matches!(
            QuantumState::from_amplitudes(l, [(0u128, Complex::new(0.5, 0.0))]),
            Err(Error::NotNormalized { .. })
        ));
        let s = QuantumState::from_amplitudes(
            l,
            [
                (0u128, Complex::new(1.0, 0.0)),
                (1u128, Complex::new(1e-13, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(s.support_len(), 1);
    }

    #[test]
    fn identity_working_transform_is_noop() {
        let l = layout(1, 1);
        let s = QuantumState::basis_state(l, &BitWord::parse_bits("101").unwrap()).unwrap();
        let id = DenseUnitary::identity(2).unwrap();
        let out = s.apply_working(&[0, 2], &id).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn hadamard_on_zero_qubit() {
        let l = layout(0, 1);
        let s = QuantumState::basis_state(l, &BitWord::parse_bits("00").unwrap()).unwrap();
        let out = s.apply_working(&[0], &DenseUnitary::hadamard()).unwrap();
        let h = 1.0 / 2.0f64.sqrt();
        assert!((out.amplitude(0b00).re - h).abs() < 1e-12);
        assert!((out.amplitude(0b10).re - h).abs() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_both_query_qubits_gives_uniform_quarter_masses() {
        // Two Hadamards on the query word of (w=0, n=2) from e_0.
        let l = layout(0, 2);
        let s = QuantumState::basis_state(l, &BitWord::zero(4).unwrap()).unwrap();
        let h = DenseUnitary::hadamard();
        let out = s
            .apply_working(&[0], &h)
            .unwrap()
            .apply_working(&[1], &h)
            .unwrap();
        let probs = out.measure_section(l.query_range()).unwrap();
        assert_eq!(probs.len(), 4);
        for (_, p) in probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_working_rejects_bad_targets() {
        let l = layout(0, 1);
        let s = QuantumState::basis_state(l, &BitWord::zero(2).unwrap()).unwrap();
        let h = DenseUnitary::hadamard();
        assert!(matches!(
            s.apply_working(&[5], &h),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            s.apply_working(&[0, 0], &DenseUnitary::identity(2).unwrap()),
            Err(Error::DuplicateQubit { .. })
        ));
        assert!(matches!(
            s.apply_working(&[0, 1], &h),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            s.apply_working(&[], &h),
            Err(Error::EmptyQubitList)
        ));
    }

    #[test]
    fn non_unitary_matrix_rejected() {
        let bad = DenseUnitary::new(
            1,
            alloc::vec![
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(1.0, 0.0),
            ],
        );
        assert!(matches!(bad, Err(Error::NotUnitary { .. })));
        assert!(matches!(
            DenseUnitary::identity(11),
            Err(Error::ArityCapExceeded { .. })
        ));
        // wrong entry count for arity 11, even under a raised cap
        let ok =
            DenseUnitary::new_with_cap(11, DenseUnitary::identity(2).unwrap().entries.clone(), 12);
        assert!(ok.is_err());
    }

    #[test]
    fn permutation_identity_and_swap() {
        let l = layout(0, 1);
        let s = QuantumState::basis_state(l, &BitWord::parse_bits("10").unwrap()).unwrap();
        let id = s.apply_basis_permutation(|k| k).unwrap();
        assert_eq!(id, s);

        // swap query and answer sections of |a, b> -> |b, a>
        let total = l.total();
        let swapped = s
            .apply_basis_permutation(|k| {
                let a = section_value(k, total, l.query_range());
                let b = section_value(k, total, l.answer_range());
                let k = with_section(k, total, l.query_range(), b);
                with_section(k, total, l.answer_range(), a)
            })
            .unwrap();
        assert_eq!(swapped.amplitude(0b01), Complex::new(1.0, 0.0));
    }

    #[test]
    fn permutation_then_inverse_restores_state() {
        let l = layout(1, 1);
        let mut rng = SplitMix64::new(11);
        let u = DenseUnitary::random(3, &mut rng).unwrap();
        let s = QuantumState::basis_state(l, &BitWord::zero(3).unwrap())
            .unwrap()
            .apply_working(&[0, 1, 2], &u)
            .unwrap();
        let p = |k: u128| (k + 3) % 8;
        let p_inv = |k: u128| (k + 5) % 8;
        let round = s
            .apply_basis_permutation(p)
            .unwrap()
            .apply_basis_permutation(p_inv)
            .unwrap();
        assert!(round.distance(&s).unwrap() < 1e-12);
    }

    #[test]
    fn non_injective_permutation_rejected() {
        let l = layout(0, 1);
        let s = QuantumState::basis_state(l, &BitWord::zero(2).unwrap()).unwrap();
        assert!(matches!(
            s.apply_basis_permutation(|_| 0),
            Err(Error::NotInjective)
        ));
        assert!(matches!(
            s.apply_basis_permutation(|k| k + 4),
            Err(Error::PermutationOutOfRange { .. })
        ));
    }

    #[test]
    fn spot_check_catches_bad_maps_on_wide_registers() {
        let l = layout(19, 1); // 21 qubits: sampling path
        let s = QuantumState::basis_state(l, &BitWord::zero(21).unwrap()).unwrap();
        assert!(s.apply_basis_permutation(|k| k).is_ok());
        assert!(s.apply_basis_permutation(|k| k | (1 << 30)).is_err());
        // collision on the support itself is always detected
        let h = 1.0 / 2.0f64.sqrt();
        let two = QuantumState::from_amplitudes(
            l,
            [(0u128, Complex::new(h, 0.0)), (1u128, Complex::new(h, 0.0))],
        )
        .unwrap();
        assert!(matches!(
            two.apply_basis_permutation(|k| k & !1),
            Err(Error::NotInjective)
        ));
    }

    #[test]
    fn measure_marginal_basis_and_uniform() {
        let l = layout(0, 1);
        let word = BitWord::parse_bits("10").unwrap();
        let s = QuantumState::basis_state(l, &word).unwrap();
        let full = s.measure_marginal(&[0, 1]).unwrap();
        assert_eq!(full.len(), 1);
        assert!((full[&word] - 1.0).abs() < 1e-12);

        // uniform two-qubit superposition, observe one qubit
        let h = DenseUnitary::hadamard();
        let u = QuantumState::basis_state(l, &BitWord::zero(2).unwrap())
            .unwrap()
            .apply_working(&[0], &h)
            .unwrap()
            .apply_working(&[1], &h)
            .unwrap();
        let one = u.measure_marginal(&[0]).unwrap();
        assert!((one[&BitWord::new(1, 0).unwrap()] - 0.5).abs() < 1e-12);
        assert!((one[&BitWord::new(1, 1).unwrap()] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn marginal_probabilities_sum_to_one() {
        let l = layout(2, 2);
        let mut rng = SplitMix64::new(99);
        let u = DenseUnitary::random(3, &mut rng).unwrap();
        let s = QuantumState::basis_state(l, &BitWord::zero(6).unwrap())
            .unwrap()
            .apply_working(&[1, 3, 4], &u)
            .unwrap();
        let probs = s.measure_marginal(&[0, 3, 5]).unwrap();
        let sum: f64 = probs.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn working_transform_preserves_norm_on_random_states() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..100 {
            let l = layout((trial % 3) as usize, 2);
            let mut state =
                QuantumState::basis_state(l, &BitWord::zero(l.total()).unwrap()).unwrap();
            for _ in 0..4 {
                let arity = 1 + (rng.next_below(2) as usize);
                let mut targets = Vec::new();
                while targets.len() < arity {
                    let t = rng.next_below(l.total() as u64) as usize;
                    if !targets.contains(&t) {
                        targets.push(t);
                    }
                }
                let u = DenseUnitary::random(arity, &mut rng).unwrap();
                state = state.apply_working(&targets, &u).unwrap();
            }
            assert!(
                (state.norm() - 1.0).abs() <= 1e-9,
                "trial {trial}: norm {}",
                state.norm()
            );
        }
    }

    #[test]
    fn working_transform_is_local() {
        // Acting on G leaves marginals on disjoint subsets unchanged.
        let l = layout(2, 1);
        let mut rng = SplitMix64::new(5);
        let prep = DenseUnitary::random(2, &mut rng).unwrap();
        let s = QuantumState::basis_state(l, &BitWord::zero(4).unwrap())
            .unwrap()
            .apply_working(&[2, 3], &prep)
            .unwrap();
        let before = s.measure_marginal(&[2, 3]).unwrap();
        let u = DenseUnitary::random(2, &mut rng).unwrap();
        let after_state = s.apply_working(&[0, 1], &u).unwrap();
        let after = after_state.measure_marginal(&[2, 3]).unwrap();
        for (word, p) in before {
            assert!((p - after.get(&word).copied().unwrap_or(0.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_and_permutation_paths_agree() {
        // A basis permutation expressible as a dense matrix gives the same
        // output along both paths: X on one qubit.
        let l = layout(0, 1);
        let mut rng = SplitMix64::new(21);
        let prep = DenseUnitary::random(2, &mut rng).unwrap();
        let s = QuantumState::basis_state(l, &BitWord::zero(2).unwrap())
            .unwrap()
            .apply_working(&[0, 1], &prep)
            .unwrap();
        let dense = s.apply_working(&[1], &DenseUnitary::pauli_x()).unwrap();
        let perm = s.apply_basis_permutation(|k| k ^ 0b01).unwrap();
        assert!(dense.distance(&perm).unwrap() < 1e-9);
    }

    #[test]
    fn random_unitaries_pass_validation() {
        let mut rng = SplitMix64::new(77);
        for arity in 1..=4 {
            let u = DenseUnitary::random(arity, &mut rng).unwrap();
            assert!(u.unitarity_deviation() <= UNITARY_TOL);
        }
    }
}
