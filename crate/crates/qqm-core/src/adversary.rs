//! Oracle-perturbation adversaries.
//!
//! Both constructions target a program that claims to compute the `T`-th
//! iterate `f^{T}(0^n)` of a full-cycle oracle with `t` queries:
//!
//! * the direct construction (`construct_adversary_t2`) tabulates the query
//!   mass each pre-query state puts on each orbit word, picks the orbit
//!   position `τ` with the smallest total mass (pigeonhole: at most `t/T`),
//!   flips the oracle there so the `T`-th iterate changes, and measures how
//!   little the final state moves;
//! * the inductive construction (`construct_adversary_t1`) drifts the
//!   oracle query by query, always mutating toward words whose observed
//!   query mass stays below a threshold `θ`, then flips the last drifted
//!   word. It reports the per-step perturbations `Δ_i`, the accumulated
//!   divergences `∂_i`, and every bound in the chain; when no orbit word
//!   satisfies the mass constraint it returns a structured infeasibility
//!   report instead.
//!
//! [`verify_hybrid_chain`] checks the telescoping bound `∂_i ≤ Σ_{k<i} Δ_k`
//! (L3) for an arbitrary chain of one-word oracle mutations.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::machine::{run, success_probability, QueryProgram, SegmentedProgram, Trace};
use crate::math::sqrt;
use crate::metrics::query_mass;
use crate::oracle::LengthPreservingFn;
use crate::rng::SplitMix64;
use crate::state::BitWord;
use crate::INEQ_SLACK;

/// Query mass of each pre-query state on each orbit position.
///
/// Entry `(i, j)` is `δ_{f^j(0^n)}(χ_i)` for pre-query states
/// `i = 0..t-1` and orbit positions `j = 0..T`. When `T = 2^n` the last
/// column duplicates column 0 (the orbit wraps), so only the leading `T`
/// columns enter pigeonhole arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    orbit: Vec<BitWord>,
}

impl QueryMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `T + 1` orbit positions.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn big_t(&self) -> usize {
        self.cols - 1
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// The orbit words `f^0(0^n), …, f^T(0^n)`.
    pub fn orbit(&self) -> &[BitWord] {
        &self.orbit
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.cols).map(|j| self.entry(i, j)).sum()
    }

    /// Row sum over the leading `T` columns (distinct orbit words whenever
    /// `T ≤ 2^n`); bounded by the state's total query mass, i.e. by 1.
    pub fn row_sum_leading(&self, i: usize) -> f64 {
        (0..self.cols - 1).map(|j| self.entry(i, j)).sum()
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.entry(i, j)).sum()
    }
}

/// Tabulate `δ_{f^j(0^n)}(χ_i)` from a recorded trace.
pub fn build_query_matrix(
    trace: &Trace,
    f: &LengthPreservingFn,
    big_t: usize,
) -> Result<QueryMatrix> {
    if big_t == 0 {
        return Err(Error::BadParameter("orbit length must be at least 1"));
    }
    let n = f.width();
    let zero = BitWord::zero(n)?;
    let mut orbit = Vec::with_capacity(big_t + 1);
    let mut word = zero;
    orbit.push(word);
    for _ in 0..big_t {
        word = f.get(&word)?;
        orbit.push(word);
    }
    let rows = trace.pre_query().len();
    let cols = big_t + 1;
    let mut entries = Vec::with_capacity(rows * cols);
    for chi in trace.pre_query() {
        for w in &orbit {
            entries.push(query_mass(chi, w)?);
        }
    }
    Ok(QueryMatrix {
        rows,
        cols,
        entries,
        orbit,
    })
}

/// The orbit position `τ ∈ {0, …, T−1}` with the smallest column sum,
/// smallest index on ties. Pigeonhole over the leading `T` columns puts the
/// returned sum at most `t/T`.
pub fn select_tau(matrix: &QueryMatrix) -> (usize, f64) {
    let big_t = matrix.big_t();
    let mut best = (0usize, f64::INFINITY);
    for j in 0..big_t {
        let sum = matrix.column_sum(j);
        if sum < best.1 {
            best = (j, sum);
        }
    }
    if best.1.is_finite() {
        best
    } else {
        (0, 0.0)
    }
}

/// Which construction produced a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversaryMode {
    Direct,
    Inductive { theta: f64 },
}

/// Result of an adversary construction: the flipped oracle, the measured
/// final-state distance, and every bound it is held against.
///
/// `lhs ≤ rhs` is the one-word mutation bound (L2) and always holds;
/// `rhs_global` is the a-priori bound (`2t/√T` for the direct construction,
/// `6·t^{5/2}·√θ` for the inductive one) — when it is below 1 the program
/// cannot identify both targets with probability ≥ 2/3.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryReport {
    pub mode: AdversaryMode,
    /// The oracle the run is compared against (the input oracle for the
    /// direct construction, the drifted oracle for the inductive one).
    pub original: LengthPreservingFn,
    pub mutated: LengthPreservingFn,
    pub mutation_at: BitWord,
    pub mutation_to: BitWord,
    pub tau: Option<usize>,
    pub tau_column_sum: Option<f64>,
    pub t: usize,
    pub big_t: usize,
    /// Final-state distance between the runs under `original` and `mutated`.
    pub lhs: f64,
    /// `2 Σ_i √δ_a(χ_i)` over the pre-query states of the `original` run.
    pub rhs: f64,
    /// `2 √(t · Σ_i a_{iτ})` (direct construction only).
    pub rhs_coarse: Option<f64>,
    pub rhs_global: f64,
    pub target_original: BitWord,
    pub target_mutated: BitWord,
    pub success_original: f64,
    pub success_mutated: f64,
    pub prob_original_target_under_mutated: f64,
    pub prob_mutated_target_under_original: f64,
    pub matrix: Option<QueryMatrix>,
    pub hybrid: Option<HybridDetails>,
    pub seed: u64,
}

impl AdversaryReport {
    /// The measured distance respects the one-word mutation bound.
    pub fn lemma2_holds(&self) -> bool {
        self.lhs <= self.rhs + INEQ_SLACK
    }

    /// `|P_original(w) − P_mutated(w)| ≤ 2·lhs` for both targets `w`.
    pub fn probability_gap_bound_holds(&self) -> bool {
        let gap_orig = (self.success_original - self.prob_original_target_under_mutated).abs();
        let gap_mut = (self.success_mutated - self.prob_mutated_target_under_original).abs();
        let bound = 2.0 * self.lhs + INEQ_SLACK;
        gap_orig <= bound && gap_mut <= bound
    }

    /// True when the a-priori bound rules out success on both oracles.
    pub fn bound_decisive(&self) -> bool {
        self.rhs_global < 1.0
    }

    /// All bounds that are supposed to hold unconditionally do hold.
    pub fn sound(&self) -> bool {
        let hybrid_ok = self.hybrid.as_ref().is_none_or(|h| h.lemma3_all_hold());
        self.lemma2_holds() && self.probability_gap_bound_holds() && hybrid_ok
    }
}

/// Per-step data of the inductive construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDetails {
    pub theta: f64,
    /// The pivot words `x_0, …, x_t` (mutation `i` happens at `x_i`).
    pub words: Vec<BitWord>,
    /// The drifted oracle after all `t` steps.
    pub drifted: LengthPreservingFn,
    /// `Δ_i = |V_{i,f_i}(ξ_i) − V_{i,f_t}(ξ_i)|`.
    pub deltas: Vec<f64>,
    /// `∂_i = |ξ_i − ξ'_i|`, with `∂_0 = 0`.
    pub partials: Vec<f64>,
    /// Size of the admissible word set after each step.
    pub feasible_sizes: Vec<usize>,
    /// `2·√(t·θ)`: per-step bound on `Δ_i`.
    pub delta_bound: f64,
    pub delta_bound_holds: Vec<bool>,
    /// `∂_i ≤ 2·i·√(t·θ)` at each index.
    pub partial_bound_holds: Vec<bool>,
    /// `√δ_{x_t}(ξ'_i)` for the pre-query states of the reference run.
    pub final_word_terms: Vec<f64>,
    /// `3·t^{3/2}·√θ`: bound on each term above.
    pub term_bound: f64,
    pub term_bound_holds: Vec<bool>,
    /// L3 check `∂_i ≤ Σ_{k<i} Δ_k` at each index.
    pub lemma3: Vec<bool>,
    /// `6·t^{5/2}·√θ`: a-priori distance bound; decisive when below 1.
    pub chain_bound: f64,
}

impl HybridDetails {
    pub fn lemma3_all_hold(&self) -> bool {
        self.lemma3.iter().all(|&b| b)
    }
}

/// Outcome of the inductive construction.
#[derive(Debug, Clone, PartialEq)]
pub enum InductiveOutcome {
    Constructed(alloc::boxed::Box<AdversaryReport>),
    Infeasible(InfeasibilityReport),
}

/// The inductive construction could not continue: no orbit word keeps the
/// next `T` iterates inside the admissible set.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityReport {
    /// Step at which the search failed (`t` means the final flip failed).
    pub failed_step: usize,
    pub theta: f64,
    pub feasible_set_size: usize,
    pub from_word: BitWord,
    pub candidates_checked: usize,
}

fn require_full_cycle(f: &LengthPreservingFn, big_t: usize) -> Result<()> {
    if !f.is_full_cycle() {
        return Err(Error::NotAFullCycle);
    }
    if big_t == 0 || big_t > 1 << f.width() {
        return Err(Error::BadParameter(
            "need 1 <= T <= 2^n so the leading orbit words are distinct",
        ));
    }
    Ok(())
}

/// Search, in a seeded random order, for a replacement value `y ≠ f(at)`
/// such that flipping `f(at) := y` changes the `T`-th iterate of `0^n`.
fn find_divergent_mutation(
    f: &LengthPreservingFn,
    at: &BitWord,
    big_t: usize,
    rng: &mut SplitMix64,
) -> Result<(LengthPreservingFn, BitWord)> {
    let n = f.width();
    let zero = BitWord::zero(n)?;
    let reference = f.iterate(big_t, &zero)?;
    let mut candidates: Vec<u128> = (0..1u128 << n).collect();
    rng.shuffle(&mut candidates);
    let skip = f.get(at)?.value();
    for value in candidates {
        if value == skip {
            continue;
        }
        let to = BitWord::new(n, value)?;
        let mutated = f.mutate(at, &to)?;
        if mutated.iterate(big_t, &zero)? != reference {
            return Ok((mutated, to));
        }
    }
    Err(Error::NoMutationTarget)
}

/// Direct adversary: run under `f`, pick the least-queried orbit position
/// `τ`, flip the oracle at `f^τ(0^n)` so the `T`-th iterate changes, rerun,
/// and report the measured distance against its bounds.
pub fn construct_adversary_t2(
    program: &QueryProgram,
    f: &LengthPreservingFn,
    big_t: usize,
    seed: u64,
) -> Result<AdversaryReport> {
    require_full_cycle(f, big_t)?;
    let n = f.width();
    let zero = BitWord::zero(n)?;
    let input = zero;
    let t = program.query_count();

    let trace_f = run(program, f, &input)?;
    let matrix = build_query_matrix(&trace_f, f, big_t)?;
    let (tau, column_sum) = select_tau(&matrix);

    let at = f.iterate(tau, &zero)?;
    let mut rng = SplitMix64::new(seed);
    let (g, to) = find_divergent_mutation(f, &at, big_t, &mut rng)?;
    let trace_g = run(program, &g, &input)?;

    let lhs = trace_f.final_state().distance(trace_g.final_state())?;
    let rhs = 2.0
        * (0..matrix.rows())
            .map(|i| sqrt(matrix.entry(i, tau)))
            .sum::<f64>();
    let rhs_coarse = 2.0 * sqrt(t as f64 * column_sum);
    let rhs_global = 2.0 * t as f64 / sqrt(big_t as f64);

    let target_original = f.iterate(big_t, &zero)?;
    let target_mutated = g.iterate(big_t, &zero)?;
    debug_assert_ne!(target_original, target_mutated);

    Ok(AdversaryReport {
        mode: AdversaryMode::Direct,
        original: f.clone(),
        mutated: g.clone(),
        mutation_at: at,
        mutation_to: to,
        tau: Some(tau),
        tau_column_sum: Some(column_sum),
        t,
        big_t,
        lhs,
        rhs,
        rhs_coarse: Some(rhs_coarse),
        rhs_global,
        target_original,
        target_mutated,
        success_original: success_probability(&trace_f, &target_original)?,
        success_mutated: success_probability(&trace_g, &target_mutated)?,
        prob_original_target_under_mutated: success_probability(&trace_g, &target_original)?,
        prob_mutated_target_under_original: success_probability(&trace_f, &target_mutated)?,
        matrix: Some(matrix),
        hybrid: None,
        seed,
    })
}

/// Inductive adversary: drift the oracle query by query toward low-mass
/// words, flip the final pivot, and verify the whole inequality chain.
///
/// `theta` is the query-mass threshold: after each step, words whose mass
/// in the fresh state reaches `theta` leave the admissible set
/// (`theta ≥ 1` disables the filter). Pivot candidates are taken from the
/// orbit of the *input* oracle in orbit order; the seed only drives the
/// final flip.
pub fn construct_adversary_t1(
    program: &QueryProgram,
    f: &LengthPreservingFn,
    big_t: usize,
    theta: f64,
    seed: u64,
) -> Result<InductiveOutcome> {
    require_full_cycle(f, big_t)?;
    if theta <= 0.0 {
        return Err(Error::BadParameter("theta must be positive"));
    }
    let n = f.width();
    let size = 1usize << n;
    let zero = BitWord::zero(n)?;
    let t = program.query_count();
    if t == 0 {
        return Err(Error::BadParameter(
            "inductive construction needs at least one query",
        ));
    }

    // orbit of the input oracle, in orbit order: candidate pivots
    let orbit: Vec<u128> = {
        let mut words = Vec::with_capacity(size);
        let mut w = zero;
        for _ in 0..size {
            words.push(w.value());
            w = f.get(&w)?;
        }
        words
    };

    let segments = SegmentedProgram::new(program);
    let mut admissible: BTreeSet<u128> = (0..size as u128).collect();
    let mut states = Vec::with_capacity(t + 1);
    states.push(segments.start(&zero)?);
    let mut pivots = alloc::vec![zero];
    let mut oracles = alloc::vec![f.clone()];
    let mut feasible_sizes = Vec::with_capacity(t);

    for i in 0..t {
        let next_state = segments.step(&states[i], &oracles[i], i)?;
        if theta < 1.0 {
            for (word, mass) in crate::metrics::query_mass_distribution(&next_state) {
                if mass >= theta {
                    admissible.remove(&word.value());
                }
            }
        }
        states.push(next_state);
        feasible_sizes.push(admissible.len());

        // next pivot: an orbit word whose T forward iterates under the
        // would-be oracle all stay admissible; the no-mutation candidate
        // f_i(x_i) is tried first, then the orbit in orbit order
        let x_i = pivots[i].value();
        let current = &oracles[i];
        let unmutated = current.get_value(x_i);
        let candidates =
            core::iter::once(unmutated).chain(orbit.iter().copied().filter(|&c| c != unmutated));
        let mut found = None;
        for candidate in candidates {
            let trial = if candidate == unmutated {
                current.clone()
            } else {
                current.mutate(&BitWord::new(n, x_i)?, &BitWord::new(n, candidate)?)?
            };
            let mut ok = true;
            let mut v = x_i;
            for _ in 0..big_t {
                v = trial.get_value(v);
                if !admissible.contains(&v) {
                    ok = false;
                    break;
                }
            }
            if ok {
                found = Some((trial, candidate));
                break;
            }
        }
        match found {
            Some((next_oracle, next_pivot)) => {
                oracles.push(next_oracle);
                pivots.push(BitWord::new(n, next_pivot)?);
            }
            None => {
                return Ok(InductiveOutcome::Infeasible(InfeasibilityReport {
                    failed_step: i,
                    theta,
                    feasible_set_size: admissible.len(),
                    from_word: BitWord::new(n, x_i)?,
                    candidates_checked: orbit.len(),
                }));
            }
        }
    }

    let drifted = oracles[t].clone();
    let final_pivot = pivots[t];

    // final flip at the last pivot
    let mut rng = SplitMix64::new(seed);
    let (phi, to) = match find_divergent_mutation(&drifted, &final_pivot, big_t, &mut rng) {
        Ok(pair) => pair,
        Err(Error::NoMutationTarget) => {
            return Ok(InductiveOutcome::Infeasible(InfeasibilityReport {
                failed_step: t,
                theta,
                feasible_set_size: admissible.len(),
                from_word: final_pivot,
                candidates_checked: size - 1,
            }));
        }
        Err(e) => return Err(e),
    };

    // reference run under the drifted oracle, perturbed run under phi
    let trace_ref = run(program, &drifted, &zero)?;
    let trace_phi = run(program, &phi, &zero)?;
    let lhs = trace_ref.final_state().distance(trace_phi.final_state())?;
    let final_word_terms: Vec<f64> = trace_ref
        .pre_query()
        .iter()
        .map(|chi| query_mass(chi, &final_pivot).map(sqrt))
        .collect::<Result<_>>()?;
    let rhs = 2.0 * final_word_terms.iter().sum::<f64>();

    // per-step divergences between the drifting run and the reference run
    let mut deltas = Vec::with_capacity(t);
    let mut partials = alloc::vec![0.0f64];
    for i in 0..t {
        let under_final = segments.step(&states[i], &drifted, i)?;
        deltas.push(states[i + 1].distance(&under_final)?);
        let reference = if i + 1 < t {
            &trace_ref.pre_query()[i + 1]
        } else {
            trace_ref.final_state()
        };
        partials.push(states[i + 1].distance(reference)?);
    }

    let delta_bound = 2.0 * sqrt(t as f64 * theta);
    let delta_bound_holds = deltas
        .iter()
        .map(|&d| d <= delta_bound + INEQ_SLACK)
        .collect();
    let partial_bound_holds = partials
        .iter()
        .enumerate()
        .map(|(i, &p)| p <= 2.0 * i as f64 * sqrt(t as f64 * theta) + INEQ_SLACK)
        .collect();
    let tf = t as f64;
    let term_bound = 3.0 * tf * sqrt(tf) * sqrt(theta);
    let term_bound_holds = final_word_terms
        .iter()
        .map(|&d| d <= term_bound + INEQ_SLACK)
        .collect();
    let lemma3 = partials
        .iter()
        .enumerate()
        .map(|(i, &p)| p <= deltas[..i].iter().sum::<f64>() + INEQ_SLACK)
        .collect();
    let chain_bound = 6.0 * tf * tf * sqrt(tf) * sqrt(theta);

    let target_original = drifted.iterate(big_t, &zero)?;
    let target_mutated = phi.iterate(big_t, &zero)?;
    debug_assert_ne!(target_original, target_mutated);

    let report = AdversaryReport {
        mode: AdversaryMode::Inductive { theta },
        original: f.clone(),
        mutated: phi.clone(),
        mutation_at: final_pivot,
        mutation_to: to,
        tau: None,
        tau_column_sum: None,
        t,
        big_t,
        lhs,
        rhs,
        rhs_coarse: None,
        rhs_global: chain_bound,
        target_original,
        target_mutated,
        success_original: success_probability(&trace_ref, &target_original)?,
        success_mutated: success_probability(&trace_phi, &target_mutated)?,
        prob_original_target_under_mutated: success_probability(&trace_phi, &target_original)?,
        prob_mutated_target_under_original: success_probability(&trace_ref, &target_mutated)?,
        matrix: None,
        hybrid: Some(HybridDetails {
            theta,
            words: pivots,
            drifted,
            deltas,
            partials,
            feasible_sizes,
            delta_bound,
            delta_bound_holds,
            partial_bound_holds,
            final_word_terms,
            term_bound,
            term_bound_holds,
            lemma3,
            chain_bound,
        }),
        seed,
    };
    Ok(InductiveOutcome::Constructed(alloc::boxed::Box::new(report)))
}

/// L3 data for an explicit chain of oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridChainReport {
    /// `Δ_i = |V_{i,f_i}(ξ_i) − V_{i,f_t}(ξ_i)|` for `i = 0..t-1`.
    pub deltas: Vec<f64>,
    /// `∂_i = |ξ_i − ξ'_i|` for `i = 0..t`.
    pub partials: Vec<f64>,
    /// `∂_i ≤ Σ_{k<i} Δ_k` at each index.
    pub holds: Vec<bool>,
}

impl HybridChainReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&b| b)
    }
}

/// Interleave a program with a chain of oracles `f_0, …, f_t` (segment `i`
/// runs under `f_i`; `f_t` drives the reference run) and check the
/// telescoping bound `∂_i ≤ Σ_{k<i} Δ_k` at every index.
///
/// Consecutive oracles must differ on at most one word.
pub fn verify_hybrid_chain(
    program: &QueryProgram,
    oracles: &[LengthPreservingFn],
    input: &BitWord,
) -> Result<HybridChainReport> {
    let t = program.query_count();
    if oracles.len() != t + 1 {
        return Err(Error::BadParameter(
            "need t + 1 oracles for a t-query program",
        ));
    }
    for i in 0..t {
        let diff = oracles[i].disagreements(&oracles[i + 1])?.len();
        if diff > 1 {
            return Err(Error::ChainPremiseViolated {
                index: i,
                differences: diff,
            });
        }
    }

    let segments = SegmentedProgram::new(program);
    let reference_oracle = &oracles[t];
    let trace_ref = run(program, reference_oracle, input)?;

    let mut state = segments.start(input)?;
    let mut deltas = Vec::with_capacity(t);
    let mut partials = alloc::vec![0.0f64];
    for (i, oracle) in oracles[..t].iter().enumerate() {
        let next = segments.step(&state, oracle, i)?;
        let under_ref = segments.step(&state, reference_oracle, i)?;
        deltas.push(next.distance(&under_ref)?);
        let reference = if i + 1 < t {
            &trace_ref.pre_query()[i + 1]
        } else {
            trace_ref.final_state()
        };
        partials.push(next.distance(reference)?);
        state = next;
    }
    let holds = partials
        .iter()
        .enumerate()
        .map(|(i, &p)| p <= deltas[..i].iter().sum::<f64>() + INEQ_SLACK)
        .collect();
    Ok(HybridChainReport {
        deltas,
        partials,
        holds,
    })
}
