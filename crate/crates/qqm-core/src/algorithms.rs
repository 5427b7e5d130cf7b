//! Reference query programs: honest iteration, truncated (undersampling)
//! iteration, and Grover search on the XOR oracle, plus seeded generators
//! for randomized test corpora.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::machine::{BasisPermutation, ProgramStep, QueryProgram};
use crate::oracle::LengthPreservingFn;
use crate::rng::SplitMix64;
use crate::state::{BitWord, DenseUnitary, QuantumState, RegisterLayout};
use crate::Complex;

/// Program family with its declared parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProgramFamily {
    /// `T` queries computing `f^{T}(input)` with probability 1.
    Naive { n: usize, big_t: usize },
    /// `t < T` queries outputting `f^{t}(input)` as a guess for
    /// `f^{T}(input)`.
    Undersample { n: usize, big_t: usize, t: usize },
    /// `k` Grover iterations searching for `marked`.
    Grover { n: usize, marked: BitWord, k: usize },
}

impl ProgramFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramFamily::Naive { .. } => "naive",
            ProgramFamily::Undersample { .. } => "undersample",
            ProgramFamily::Grover { .. } => "grover",
        }
    }

    /// The number of queries the family promises.
    pub fn declared_queries(&self) -> usize {
        match *self {
            ProgramFamily::Naive { big_t, .. } => big_t,
            ProgramFamily::Undersample { t, .. } => t,
            ProgramFamily::Grover { k, .. } => k,
        }
    }
}

/// A generated program together with the family that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramSpec {
    family: ProgramFamily,
    program: QueryProgram,
}

impl ProgramSpec {
    pub fn build(family: ProgramFamily) -> Result<Self> {
        let program = match &family {
            ProgramFamily::Naive { n, big_t } => naive_iteration_program(*n, *big_t)?,
            ProgramFamily::Undersample { n, big_t, t } => undersampling_program(*n, *big_t, *t)?,
            ProgramFamily::Grover { n, marked, k } => grover_program(*n, marked, *k)?,
        };
        debug_assert_eq!(program.query_count(), family.declared_queries());
        Ok(Self { family, program })
    }

    pub fn family(&self) -> &ProgramFamily {
        &self.family
    }

    pub fn program(&self) -> &QueryProgram {
        &self.program
    }
}

/// Honest iteration: `T` queries computing `f^{T}(input)` with certainty.
///
/// The register carries `n·(T−1)` working qubits used as a history tape.
/// Round `i` stores the word consumed by query `i` in history slot `i` and
/// routes the fresh answer into the query section, all with section swaps,
/// so states stay in the computational basis. A final rotation pass leaves
/// history slot `j` holding the `j`-th iterate, the answer section holding
/// the input, and the query section holding `f^{T}(input)`.
pub fn naive_iteration_program(n: usize, big_t: usize) -> Result<QueryProgram> {
    if big_t == 0 {
        return Err(Error::BadParameter("iteration count must be at least 1"));
    }
    let working = n * (big_t - 1);
    let layout = RegisterLayout::new(working, n)?;
    let query_start = layout.query_range().start;
    let answer_start = layout.answer_range().start;
    let history_start = |slot: usize| (slot - 1) * n; // slots are 1-based

    let mut steps = Vec::new();
    for i in 1..=big_t {
        steps.push(ProgramStep::Query);
        if i < big_t {
            // park the consumed word, then pull the answer into the query word
            steps.push(ProgramStep::Permutation(BasisPermutation::SectionSwap {
                a: history_start(i),
                b: query_start,
                len: n,
            }));
        }
        steps.push(ProgramStep::Permutation(BasisPermutation::SectionSwap {
            a: query_start,
            b: answer_start,
            len: n,
        }));
    }
    // rotate (history_1, …, history_{T-1}, answer) one slot left so that
    // history slot j ends up holding the j-th iterate
    for j in 1..big_t {
        let a = history_start(j);
        let b = if j + 1 < big_t {
            history_start(j + 1)
        } else {
            answer_start
        };
        steps.push(ProgramStep::Permutation(BasisPermutation::SectionSwap {
            a,
            b,
            len: n,
        }));
    }
    QueryProgram::with_default_output(layout, steps)
}

/// Truncated iteration: computes `f^{t}(input)` and offers it as the guess
/// for `f^{T}(input)`.
pub fn undersampling_program(n: usize, big_t: usize, t: usize) -> Result<QueryProgram> {
    if t == 0 || t >= big_t {
        return Err(Error::BadParameter("undersampling requires 1 <= t < T"));
    }
    naive_iteration_program(n, t)
}

/// The search oracle for `grover_program`: `marked` maps to `0^{n-1}1`,
/// everything else to `0^n`, so the query flips only the last answer qubit.
pub fn grover_oracle(n: usize, marked: &BitWord) -> Result<LengthPreservingFn> {
    if marked.width() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            got: marked.width(),
        });
    }
    let size = 1usize << n;
    let mut table = alloc::vec![0u128; size];
    table[marked.value() as usize] = 1;
    LengthPreservingFn::from_table(n, table)
}

/// Inversion about the mean on `n` qubits: `2|s⟩⟨s| − I` for uniform `s`.
fn diffusion(n: usize) -> Result<DenseUnitary> {
    if n > crate::DENSE_ARITY_CAP {
        return Err(Error::ArityCapExceeded {
            arity: n,
            cap: crate::DENSE_ARITY_CAP,
        });
    }
    let dim = 1usize << n;
    let off = 2.0 / dim as f64;
    let mut entries = alloc::vec![Complex::new(off, 0.0); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = Complex::new(off - 1.0, 0.0);
    }
    DenseUnitary::new(n, entries)
}

/// Grover search as a query program: uniform superposition over the query
/// word, the last answer qubit prepared in `|−⟩` so each query kicks a
/// phase onto the marked word, and `k` rounds of query + diffusion.
///
/// The steps do not depend on `marked`; the word selects the matching
/// oracle from [`grover_oracle`] and is kept as family metadata.
pub fn grover_program(n: usize, marked: &BitWord, k: usize) -> Result<QueryProgram> {
    if n < 2 {
        return Err(Error::BadParameter("grover needs n >= 2"));
    }
    if marked.width() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            got: marked.width(),
        });
    }
    let layout = RegisterLayout::new(0, n)?;
    let last_answer = layout.answer_range().end - 1;
    let h = DenseUnitary::hadamard();

    let mut steps = Vec::new();
    for q in layout.query_range() {
        steps.push(ProgramStep::Dense {
            targets: alloc::vec![q],
            unitary: h.clone(),
        });
    }
    // |-> on the kickback qubit
    steps.push(ProgramStep::Dense {
        targets: alloc::vec![last_answer],
        unitary: DenseUnitary::pauli_x(),
    });
    steps.push(ProgramStep::Dense {
        targets: alloc::vec![last_answer],
        unitary: h,
    });

    let diffuse = diffusion(n)?;
    let query_targets: Vec<usize> = layout.query_range().collect();
    for _ in 0..k {
        steps.push(ProgramStep::Query);
        steps.push(ProgramStep::Dense {
            targets: query_targets.clone(),
            unitary: diffuse.clone(),
        });
    }
    QueryProgram::with_default_output(layout, steps)
}

/// Seeded random program: exactly `t` queries with random dense and catalog
/// permutation steps in between, on a layout with up to two extra working
/// qubits.
pub fn random_program(n: usize, t: usize, rng: &mut SplitMix64) -> Result<QueryProgram> {
    if t == 0 {
        return Err(Error::BadParameter(
            "random program needs at least one query",
        ));
    }
    let working = rng.next_below(3) as usize;
    let layout = RegisterLayout::new(working, n)?;
    let total = layout.total();

    let mut steps = Vec::new();
    let push_random_op = |steps: &mut Vec<ProgramStep>, rng: &mut SplitMix64| -> Result<()> {
        if rng.next_below(2) == 0 {
            let arity = 1 + rng.next_below(2) as usize;
            let mut targets = Vec::new();
            while targets.len() < arity.min(total) {
                let t = rng.next_below(total as u64) as usize;
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            let unitary = DenseUnitary::random(targets.len(), rng)?;
            steps.push(ProgramStep::Dense { targets, unitary });
        } else {
            steps.push(ProgramStep::Permutation(random_permutation(total, rng)));
        }
        Ok(())
    };

    for _ in 0..t {
        for _ in 0..rng.next_below(3) {
            push_random_op(&mut steps, rng)?;
        }
        steps.push(ProgramStep::Query);
    }
    for _ in 0..rng.next_below(3) {
        push_random_op(&mut steps, rng)?;
    }
    QueryProgram::with_default_output(layout, steps)
}

fn random_permutation(total: usize, rng: &mut SplitMix64) -> BasisPermutation {
    loop {
        let candidate = match rng.next_below(3) {
            0 if total >= 2 => {
                let len = 1 + rng.next_below((total / 2) as u64) as usize;
                let a = rng.next_below((total - len + 1) as u64) as usize;
                let b = rng.next_below((total - len + 1) as u64) as usize;
                BasisPermutation::SectionSwap { a, b, len }
            }
            1 if total >= 2 => {
                let len = 1 + rng.next_below((total / 2) as u64) as usize;
                let src = rng.next_below((total - len + 1) as u64) as usize;
                let dst = rng.next_below((total - len + 1) as u64) as usize;
                BasisPermutation::SectionXor { src, dst, len }
            }
            _ => {
                // corpus registers are small, so 2^len fits a u64
                let len = 1 + rng.next_below(total.min(32) as u64) as usize;
                let start = rng.next_below((total - len + 1) as u64) as usize;
                let control = if start > 0 && rng.next_below(2) == 1 {
                    Some(rng.next_below(start as u64) as usize)
                } else {
                    None
                };
                let amount = u128::from(rng.next_below((1u64 << len) - 1) + 1);
                BasisPermutation::ConditionalIncrement {
                    start,
                    len,
                    control,
                    amount,
                }
            }
        };
        if candidate.validate(total).is_ok() {
            return candidate;
        }
    }
}

/// Seeded random unit state with small support, for metric corpora.
pub fn random_state(layout: RegisterLayout, rng: &mut SplitMix64) -> Result<QuantumState> {
    let total = layout.total();
    let mask = crate::state::section_mask(total);
    let max_support = if total < 4 { 1u64 << total } else { 8 };
    let support = 1 + rng.next_below(max_support) as usize;
    let mut entries: Vec<(u128, Complex)> = Vec::new();
    while entries.len() < support {
        let key = ((u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64())) & mask;
        if entries.iter().any(|&(k, _)| k == key) {
            continue;
        }
        // keep components well away from the pruning threshold
        let mut re = rng.next_range(-1.0, 1.0);
        let mut im = rng.next_range(-1.0, 1.0);
        if re.abs() + im.abs() < 0.1 {
            re += 0.5;
            im -= 0.5;
        }
        entries.push((key, Complex::new(re, im)));
    }
    let norm = crate::math::sqrt(entries.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>());
    for (_, a) in entries.iter_mut() {
        *a /= norm;
    }
    QuantumState::from_amplitudes(layout, entries)
}
