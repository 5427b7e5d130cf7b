//! Oracle-independent query programs and their execution.
//!
//! A program is a fixed list of steps over a register layout. Steps never
//! carry oracle data; the oracle table enters only at run time, so the same
//! program can be replayed against any table of the right width. Execution
//! records the state immediately before each query (the states whose query
//! masses the oracle reads) plus the final state.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::oracle::{apply_query, LengthPreservingFn};
use crate::state::{BitWord, DenseUnitary, QuantumState, RegisterLayout};

/// Catalog of named basis permutations.
///
/// Every entry is a bijection on basis strings by construction; parameters
/// are validated against the register when the program is built.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisPermutation {
    /// Swap two disjoint equal-length qubit sections.
    SectionSwap { a: usize, b: usize, len: usize },
    /// XOR the source section into the destination section (disjoint).
    SectionXor { src: usize, dst: usize, len: usize },
    /// Add `amount` (mod `2^len`) to a section, optionally gated on a
    /// control qubit outside the section.
    ConditionalIncrement {
        start: usize,
        len: usize,
        control: Option<usize>,
        amount: u128,
    },
}

impl BasisPermutation {
    pub fn validate(&self, total: usize) -> Result<()> {
        let check = |start: usize, len: usize| -> Result<()> {
            if len == 0 || start + len > total {
                return Err(Error::BadSection);
            }
            Ok(())
        };
        match *self {
            BasisPermutation::SectionSwap { a, b, len } => {
                check(a, len)?;
                check(b, len)?;
                if ranges_overlap(a, b, len) {
                    return Err(Error::BadSection);
                }
            }
            BasisPermutation::SectionXor { src, dst, len } => {
                check(src, len)?;
                check(dst, len)?;
                if ranges_overlap(src, dst, len) {
                    return Err(Error::BadSection);
                }
            }
            BasisPermutation::ConditionalIncrement {
                start,
                len,
                control,
                amount,
            } => {
                check(start, len)?;
                if len < 128 && amount >> len != 0 {
                    return Err(Error::BadSection);
                }
                if let Some(c) = control {
                    if c >= total || (start..start + len).contains(&c) {
                        return Err(Error::BadSection);
                    }
                }
            }
        }
        Ok(())
    }

    /// Image of one basis key under the permutation.
    pub fn map_key(&self, total: usize, key: u128) -> u128 {
        use crate::state::{section_mask, section_value, with_section};
        match *self {
            BasisPermutation::SectionSwap { a, b, len } => {
                let va = section_value(key, total, a..a + len);
                let vb = section_value(key, total, b..b + len);
                let key = with_section(key, total, a..a + len, vb);
                with_section(key, total, b..b + len, va)
            }
            BasisPermutation::SectionXor { src, dst, len } => {
                let vs = section_value(key, total, src..src + len);
                let vd = section_value(key, total, dst..dst + len);
                with_section(key, total, dst..dst + len, vs ^ vd)
            }
            BasisPermutation::ConditionalIncrement {
                start,
                len,
                control,
                amount,
            } => {
                let fire = match control {
                    Some(c) => (key >> (total - 1 - c)) & 1 == 1,
                    None => true,
                };
                if !fire {
                    return key;
                }
                let v = section_value(key, total, start..start + len);
                let incremented = (v + amount) & section_mask(len);
                with_section(key, total, start..start + len, incremented)
            }
        }
    }
}

fn ranges_overlap(a: usize, b: usize, len: usize) -> bool {
    a < b + len && b < a + len
}

/// One step of a query program.
#[derive(Debug, Clone, PartialEq)]
pub enum ProgramStep {
    /// Invoke the oracle on the query/answer sections.
    Query,
    /// Apply a dense unitary to the listed qubits.
    Dense {
        targets: Vec<usize>,
        unitary: DenseUnitary,
    },
    /// Apply a catalog basis permutation.
    Permutation(BasisPermutation),
}

/// An ordered step list over a register layout, plus the qubit section read
/// as output at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryProgram {
    layout: RegisterLayout,
    steps: Vec<ProgramStep>,
    output_section: Range<usize>,
}

impl QueryProgram {
    pub fn new(
        layout: RegisterLayout,
        steps: Vec<ProgramStep>,
        output_section: Range<usize>,
    ) -> Result<Self> {
        let total = layout.total();
        if output_section.start >= output_section.end || output_section.end > total {
            return Err(Error::InvalidProgram("output section outside register"));
        }
        for step in &steps {
            match step {
                ProgramStep::Query => {}
                ProgramStep::Dense { targets, unitary } => {
                    if targets.len() != unitary.arity() {
                        return Err(Error::InvalidProgram("dense step arity mismatch"));
                    }
                    for (i, &t) in targets.iter().enumerate() {
                        if t >= total {
                            return Err(Error::InvalidProgram("dense target outside register"));
                        }
                        if targets[..i].contains(&t) {
                            return Err(Error::InvalidProgram("duplicate dense target"));
                        }
                    }
                }
                ProgramStep::Permutation(p) => p.validate(total)?,
            }
        }
        Ok(Self {
            layout,
            steps,
            output_section,
        })
    }

    /// Program with the default output convention (the query-word section).
    pub fn with_default_output(layout: RegisterLayout, steps: Vec<ProgramStep>) -> Result<Self> {
        let out = layout.query_range();
        Self::new(layout, steps, out)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn steps(&self) -> &[ProgramStep] {
        &self.steps
    }

    pub fn output_section(&self) -> Range<usize> {
        self.output_section.clone()
    }

    /// Number of query steps `t`.
    pub fn query_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, ProgramStep::Query))
            .count()
    }

    /// Step indices of the query steps, in order.
    pub fn query_positions(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, ProgramStep::Query))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Recorded execution of a program against one oracle.
///
/// `pre_query[i]` is the state immediately before the `(i+1)`-th query;
/// together with the final state this is the whole chain the perturbation
/// bounds talk about.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    program: QueryProgram,
    oracle: LengthPreservingFn,
    input: BitWord,
    pre_query: Vec<QuantumState>,
    final_state: QuantumState,
}

impl Trace {
    pub fn program(&self) -> &QueryProgram {
        &self.program
    }

    pub fn oracle(&self) -> &LengthPreservingFn {
        &self.oracle
    }

    pub fn input(&self) -> &BitWord {
        &self.input
    }

    pub fn pre_query(&self) -> &[QuantumState] {
        &self.pre_query
    }

    pub fn final_state(&self) -> &QuantumState {
        &self.final_state
    }

    /// The chain `χ_0, …, χ_{t-1}, final`.
    pub fn states(&self) -> impl Iterator<Item = &QuantumState> {
        self.pre_query
            .iter()
            .chain(core::iter::once(&self.final_state))
    }
}

/// Initial state: the input word loaded into the query-word section, every
/// other qubit zero.
pub fn initial_state(program: &QueryProgram, input: &BitWord) -> Result<QuantumState> {
    let layout = *program.layout();
    if input.width() != layout.query_width() {
        return Err(Error::WidthMismatch {
            expected: layout.query_width(),
            got: input.width(),
        });
    }
    let key = layout.with_section(0, layout.query_range(), input.value());
    let word = BitWord::new(layout.total(), key)?;
    QuantumState::basis_state(layout, &word)
}

/// Apply a slice of program steps to a state.
pub fn apply_steps(
    state: &QuantumState,
    steps: &[ProgramStep],
    f: &LengthPreservingFn,
) -> Result<QuantumState> {
    let total = state.layout().total();
    let mut current = state.clone();
    for step in steps {
        current = match step {
            ProgramStep::Query => apply_query(&current, f)?,
            ProgramStep::Dense { targets, unitary } => current.apply_working(targets, unitary)?,
            ProgramStep::Permutation(p) => {
                current.apply_basis_permutation(|k| p.map_key(total, k))?
            }
        };
    }
    Ok(current)
}

/// Execute a program against an oracle, recording pre-query states and the
/// final state. Deterministic: identical inputs give identical traces.
pub fn run(program: &QueryProgram, f: &LengthPreservingFn, input: &BitWord) -> Result<Trace> {
    if f.width() != program.layout().query_width() {
        return Err(Error::WidthMismatch {
            expected: program.layout().query_width(),
            got: f.width(),
        });
    }
    let total = program.layout().total();
    let mut state = initial_state(program, input)?;
    let mut pre_query = Vec::with_capacity(program.query_count());
    for step in program.steps() {
        match step {
            ProgramStep::Query => {
                pre_query.push(state.clone());
                state = apply_query(&state, f)?;
            }
            ProgramStep::Dense { targets, unitary } => {
                state = state.apply_working(targets, unitary)?;
            }
            ProgramStep::Permutation(p) => {
                state = state.apply_basis_permutation(|k| p.map_key(total, k))?;
            }
        }
    }
    Ok(Trace {
        program: program.clone(),
        oracle: f.clone(),
        input: *input,
        pre_query,
        final_state: state,
    })
}

/// Probability that observing the output section of the final state yields
/// `target`.
pub fn success_probability(trace: &Trace, target: &BitWord) -> Result<f64> {
    let section = trace.program.output_section();
    let width = section.end - section.start;
    if target.width() != width {
        return Err(Error::WidthMismatch {
            expected: width,
            got: target.width(),
        });
    }
    let probs = trace.final_state.measure_section(section)?;
    Ok(probs.get(target).copied().unwrap_or(0.0))
}

/// A program split at its query steps, for hybrid executions that switch
/// oracles between queries.
///
/// `V_i` (segment `i`) is the `(i+1)`-th query followed by everything up to
/// the next query; the prefix holds the oracle-independent steps before the
/// first query.
pub struct SegmentedProgram<'p> {
    program: &'p QueryProgram,
    prefix: Range<usize>,
    segments: Vec<Range<usize>>,
}

impl<'p> SegmentedProgram<'p> {
    pub fn new(program: &'p QueryProgram) -> Self {
        let positions = program.query_positions();
        let len = program.steps().len();
        let prefix = 0..positions.first().copied().unwrap_or(len);
        let mut segments = Vec::with_capacity(positions.len());
        for (i, &start) in positions.iter().enumerate() {
            let end = positions.get(i + 1).copied().unwrap_or(len);
            segments.push(start..end);
        }
        Self {
            program,
            prefix,
            segments,
        }
    }

    /// Number of segments (= query count).
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// State before the first query: input loaded, prefix applied.
    ///
    /// The prefix contains no query, so no oracle is involved.
    pub fn start(&self, input: &BitWord) -> Result<QuantumState> {
        let state = initial_state(self.program, input)?;
        apply_non_query_steps(&state, &self.program.steps()[self.prefix.clone()])
    }

    /// Apply segment `i` (query plus trailing unitaries) under oracle `f`.
    pub fn step(
        &self,
        state: &QuantumState,
        f: &LengthPreservingFn,
        i: usize,
    ) -> Result<QuantumState> {
        apply_steps(state, &self.program.steps()[self.segments[i].clone()], f)
    }
}

fn apply_non_query_steps(state: &QuantumState, steps: &[ProgramStep]) -> Result<QuantumState> {
    let total = state.layout().total();
    let mut current = state.clone();
    for step in steps {
        current = match step {
            ProgramStep::Query => return Err(Error::InvalidProgram("query in prefix")),
            ProgramStep::Dense { targets, unitary } => current.apply_working(targets, unitary)?,
            ProgramStep::Permutation(p) => {
                current.apply_basis_permutation(|k| p.map_key(total, k))?
            }
        };
    }
    Ok(current)
}
