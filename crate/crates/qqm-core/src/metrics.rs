//! Query-mass and oracle-distance metrics, and numeric checks of the two
//! perturbation bounds they satisfy:
//!
//! * L1 (single query): `|Qu_f(ξ) − Qu_g(ξ)| ≤ 2·d_S(f, g)`.
//! * L2 (whole run, one-word mutation): if `g` differs from `f` only on the
//!   word `a`, then `|ξ_t − ξ'_t| ≤ 2·Σ_i √δ_a(χ_i)` over the pre-query
//!   states `χ_i` of the run under `f`.
//!
//! Query masses are sums of exact squared magnitudes grouped by key
//! section; no floating-point marginalization is involved.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::machine::{run, QueryProgram};
use crate::math::sqrt;
use crate::oracle::{apply_query, LengthPreservingFn};
use crate::state::{BitWord, QuantumState};
use crate::INEQ_SLACK;

/// `δ_a(ξ)`: total squared amplitude on basis states whose query-word
/// section equals `a` — the probability that the state is querying the
/// oracle on `a`.
pub fn query_mass(state: &QuantumState, a: &BitWord) -> Result<f64> {
    let layout = state.layout();
    if a.width() != layout.query_width() {
        return Err(Error::WidthMismatch {
            expected: layout.query_width(),
            got: a.width(),
        });
    }
    let range = layout.query_range();
    let mut mass = 0.0;
    for (key, amp) in state.iter() {
        if layout.section_value(key, range.clone()) == a.value() {
            mass += amp.norm_sqr();
        }
    }
    Ok(mass)
}

/// All nonzero query masses of a state, keyed by query word.
pub fn query_mass_distribution(state: &QuantumState) -> BTreeMap<BitWord, f64> {
    let layout = state.layout();
    let range = layout.query_range();
    let width = layout.query_width();
    let mut masses: BTreeMap<BitWord, f64> = BTreeMap::new();
    for (key, amp) in state.iter() {
        let value = layout.section_value(key, range.clone());
        let word = BitWord::new(width, value).expect("section value fits its width");
        *masses.entry(word).or_insert(0.0) += amp.norm_sqr();
    }
    masses
}

/// `d_S(f, g)`: square root of the query mass on the words where the two
/// tables disagree, relative to the query state `ξ`.
pub fn oracle_distance(
    state: &QuantumState,
    f: &LengthPreservingFn,
    g: &LengthPreservingFn,
) -> Result<f64> {
    let layout = state.layout();
    if f.width() != layout.query_width() {
        return Err(Error::WidthMismatch {
            expected: layout.query_width(),
            got: f.width(),
        });
    }
    if g.width() != f.width() {
        return Err(Error::WidthMismatch {
            expected: f.width(),
            got: g.width(),
        });
    }
    let range = layout.query_range();
    let mut mass = 0.0;
    for (key, amp) in state.iter() {
        let a = layout.section_value(key, range.clone());
        if f.get_value(a) != g.get_value(a) {
            mass += amp.norm_sqr();
        }
    }
    Ok(sqrt(mass))
}

/// Outcome of one inequality instance: measured left side, bound on the
/// right, and provenance sufficient to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub context: LemmaContext,
}

impl LemmaReport {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// `lhs ≤ rhs` up to the crate-wide inequality slack.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + INEQ_SLACK
    }
}

/// Provenance of a checked inequality instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaContext {
    pub f_hash: u64,
    pub g_hash: u64,
    pub query_width: usize,
    /// For L2: the mutated word and its new value.
    pub mutation: Option<(BitWord, BitWord)>,
    /// For L2: the per-query terms `√δ_a(χ_i)` whose doubled sum is `rhs`.
    pub terms: Vec<f64>,
}

/// Check L1 on one instance: `lhs = |Qu_f(ξ) − Qu_g(ξ)|`,
/// `rhs = 2·d_S(f, g)`.
pub fn check_lemma1(
    state: &QuantumState,
    f: &LengthPreservingFn,
    g: &LengthPreservingFn,
) -> Result<LemmaReport> {
    let lhs = apply_query(state, f)?.distance(&apply_query(state, g)?)?;
    let rhs = 2.0 * oracle_distance(state, f, g)?;
    Ok(LemmaReport {
        lhs,
        rhs,
        context: LemmaContext {
            f_hash: f.hash64(),
            g_hash: g.hash64(),
            query_width: f.width(),
            mutation: None,
            terms: Vec::new(),
        },
    })
}

/// Check L2 on one instance: run `program` under `f` and under
/// `g = mutate(f, a, to)`; `lhs` is the final-state distance, `rhs` twice
/// the sum of `√δ_a` over the pre-query states of the `f`-run.
pub fn check_lemma2(
    program: &QueryProgram,
    f: &LengthPreservingFn,
    a: &BitWord,
    to: &BitWord,
    input: &BitWord,
) -> Result<LemmaReport> {
    let g = f.mutate(a, to)?;
    let trace_f = run(program, f, input)?;
    let trace_g = run(program, &g, input)?;
    let lhs = trace_f.final_state().distance(trace_g.final_state())?;
    let terms: Vec<f64> = trace_f
        .pre_query()
        .iter()
        .map(|chi| query_mass(chi, a).map(sqrt))
        .collect::<Result<_>>()?;
    let rhs = 2.0 * terms.iter().sum::<f64>();
    Ok(LemmaReport {
        lhs,
        rhs,
        context: LemmaContext {
            f_hash: f.hash64(),
            g_hash: g.hash64(),
            query_width: f.width(),
            mutation: Some((*a, *to)),
            terms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::naive_iteration_program;
    use crate::machine::ProgramStep;
    use crate::rng::SplitMix64;
    use crate::state::{DenseUnitary, RegisterLayout};

    fn w(width: usize, value: u128) -> BitWord {
        BitWord::new(width, value).unwrap()
    }

    fn cycle4() -> LengthPreservingFn {
        LengthPreservingFn::from_table(2, alloc::vec![1, 2, 3, 0]).unwrap()
    }

    fn uniform_query_state(n: usize) -> QuantumState {
        let layout = RegisterLayout::new(0, n).unwrap();
        let mut s = QuantumState::basis_state(layout, &BitWord::zero(2 * n).unwrap()).unwrap();
        let h = DenseUnitary::hadamard();
        for q in layout.query_range() {
            s = s.apply_working(&[q], &h).unwrap();
        }
        s
    }

    fn random_state(layout: RegisterLayout, rng: &mut SplitMix64) -> QuantumState {
        let mut s =
            QuantumState::basis_state(layout, &BitWord::zero(layout.total()).unwrap()).unwrap();
        for _ in 0..3 {
            let arity = 1 + rng.next_below(2) as usize;
            let mut targets = Vec::new();
            while targets.len() < arity {
                let t = rng.next_below(layout.total() as u64) as usize;
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            let u = DenseUnitary::random(arity, rng).unwrap();
            s = s.apply_working(&targets, &u).unwrap();
        }
        s
    }

    #[test]
    fn basis_state_query_mass() {
        let layout = RegisterLayout::new(1, 2).unwrap();
        let s = QuantumState::basis_state(layout, &w(5, 0b0_10_01)).unwrap();
        assert_eq!(query_mass(&s, &w(2, 0b10)).unwrap(), 1.0);
        assert_eq!(query_mass(&s, &w(2, 0b01)).unwrap(), 0.0);
        assert!(query_mass(&s, &w(3, 0)).is_err());
    }

    #[test]
    fn uniform_state_has_uniform_masses() {
        let s = uniform_query_state(2);
        for a in 0..4 {
            assert!((query_mass(&s, &w(2, a)).unwrap() - 0.25).abs() < 1e-12);
        }
        let dist = query_mass_distribution(&s);
        assert_eq!(dist.len(), 4);
        for (word, mass) in &dist {
            assert!((query_mass(&s, word).unwrap() - mass).abs() < 1e-12);
        }
    }

    #[test]
    fn masses_sum_to_one_on_random_states() {
        let mut rng = SplitMix64::new(100);
        for trial in 0..100 {
            let layout = RegisterLayout::new((trial % 3) as usize, 2).unwrap();
            let s = random_state(layout, &mut rng);
            let total: f64 = query_mass_distribution(&s).values().sum();
            assert!((total - 1.0).abs() <= 1e-9, "trial {trial}: {total}");
        }
    }

    #[test]
    fn distribution_matches_per_word_masses() {
        let layout = RegisterLayout::new(0, 2).unwrap();
        let s = QuantumState::basis_state(layout, &w(4, 0b11_00)).unwrap();
        let dist = query_mass_distribution(&s);
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[&w(2, 0b11)], 1.0);
    }

    #[test]
    fn oracle_distance_examples() {
        let s = uniform_query_state(2);
        let f = cycle4();
        // identical tables
        assert_eq!(oracle_distance(&s, &f, &f).unwrap(), 0.0);
        // disagreement everywhere on a unit state
        let g = LengthPreservingFn::from_table(2, alloc::vec![2, 3, 0, 1]).unwrap();
        assert!((oracle_distance(&s, &f, &g).unwrap() - 1.0).abs() < 1e-12);
        // one-word disagreement on the uniform state: sqrt(1/4)
        let g1 = f.mutate(&w(2, 1), &w(2, 1)).unwrap();
        assert!((oracle_distance(&s, &f, &g1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_distance_is_a_pseudometric() {
        let mut rng = SplitMix64::new(41);
        for trial in 0..50 {
            let layout = RegisterLayout::new((trial % 2) as usize, 2).unwrap();
            let s = random_state(layout, &mut rng);
            let f = LengthPreservingFn::random_table(2, &mut rng).unwrap();
            let g = LengthPreservingFn::random_table(2, &mut rng).unwrap();
            let h = LengthPreservingFn::random_table(2, &mut rng).unwrap();
            let dfg = oracle_distance(&s, &f, &g).unwrap();
            let dgf = oracle_distance(&s, &g, &f).unwrap();
            let dff = oracle_distance(&s, &f, &f).unwrap();
            let dfh = oracle_distance(&s, &f, &h).unwrap();
            let dgh = oracle_distance(&s, &g, &h).unwrap();
            assert_eq!(dff, 0.0);
            assert!((dfg - dgf).abs() < 1e-12);
            // triangle inequality via disagreement-set containment
            assert!(dfh <= dfg + dgh + 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn enlarging_disagreement_set_never_decreases_distance() {
        let mut rng = SplitMix64::new(77);
        for trial in 0..50 {
            let layout = RegisterLayout::new(0, 2).unwrap();
            let s = random_state(layout, &mut rng);
            let f = LengthPreservingFn::random_table(2, &mut rng).unwrap();
            // nest mutations: g2 disagrees wherever g1 does, plus possibly more
            let a1 = w(2, rng.next_below(4) as u128);
            let to1 = w(2, (f.get(&a1).unwrap().value() + 1) % 4);
            let g1 = f.mutate(&a1, &to1).unwrap();
            let a2 = w(2, (a1.value() + 1 + rng.next_below(3) as u128) % 4);
            let to2 = w(2, (f.get(&a2).unwrap().value() + 1) % 4);
            let g2 = g1.mutate(&a2, &to2).unwrap();
            let d1 = oracle_distance(&s, &f, &g1).unwrap();
            let d2 = oracle_distance(&s, &f, &g2).unwrap();
            assert!(d2 >= d1 - 1e-12, "trial {trial}: {d2} < {d1}");
        }
    }

    #[test]
    fn lemma1_identical_tables() {
        let s = uniform_query_state(2);
        let f = cycle4();
        let report = check_lemma1(&s, &f, &f).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.rhs, 0.0);
        assert!(report.holds());
    }

    #[test]
    fn lemma1_basis_state_anchor() {
        // basis query state at a with f(a) != g(a): lhs = sqrt(2), rhs = 2
        let layout = RegisterLayout::new(0, 2).unwrap();
        let s = QuantumState::basis_state(layout, &w(4, 0b01_00)).unwrap();
        let f = cycle4();
        let g = f.mutate(&w(2, 1), &w(2, 0)).unwrap();
        let report = check_lemma1(&s, &f, &g).unwrap();
        assert!((report.lhs - core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((report.rhs - 2.0).abs() < 1e-12);
        assert!(report.holds());
    }

    #[test]
    fn lemma1_uniform_anchor() {
        // uniform query state, n = 2, one-word disagreement:
        // lhs = sqrt(2)/2, rhs = 1
        let s = uniform_query_state(2);
        let f = cycle4();
        let g = f.mutate(&w(2, 3), &w(2, 2)).unwrap();
        let report = check_lemma1(&s, &f, &g).unwrap();
        assert!((report.lhs - core::f64::consts::SQRT_2 / 2.0).abs() < 1e-9);
        assert!((report.rhs - 1.0).abs() < 1e-9);
        assert!(report.holds());
    }

    #[test]
    fn lemma1_holds_on_random_instances() {
        let mut rng = SplitMix64::new(2025);
        for trial in 0..200 {
            let layout = RegisterLayout::new((trial % 3) as usize, 2).unwrap();
            let s = random_state(layout, &mut rng);
            let f = LengthPreservingFn::random_table(2, &mut rng).unwrap();
            // disagreement sizes from one word to everywhere
            let g = match trial % 3 {
                0 => {
                    let a = w(2, rng.next_below(4) as u128);
                    let to = w(2, (f.get(&a).unwrap().value() + 1) % 4);
                    f.mutate(&a, &to).unwrap()
                }
                _ => LengthPreservingFn::random_table(2, &mut rng).unwrap(),
            };
            let report = check_lemma1(&s, &f, &g).unwrap();
            assert!(
                report.holds(),
                "trial {trial}: lhs {} rhs {}",
                report.lhs,
                report.rhs
            );
            assert!(report.slack() >= -crate::INEQ_SLACK);
        }
    }

    #[test]
    fn lemma2_trivial_mutation() {
        let program = naive_iteration_program(2, 3).unwrap();
        let f = cycle4();
        let a = w(2, 1);
        let report = check_lemma2(&program, &f, &a, &f.get(&a).unwrap(), &w(2, 0)).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert!(report.rhs >= 0.0);
        assert!(report.holds());
    }

    #[test]
    fn lemma2_unqueried_word_gives_zero_both_sides() {
        // single query on input 00; mutate at a word never queried
        let layout = RegisterLayout::new(0, 2).unwrap();
        let program =
            QueryProgram::with_default_output(layout, alloc::vec![ProgramStep::Query]).unwrap();
        let f = cycle4();
        let report = check_lemma2(&program, &f, &w(2, 2), &w(2, 0), &w(2, 0)).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.rhs, 0.0);
        assert!(report.holds());
    }

    #[test]
    fn lemma2_naive_iteration_anchor() {
        // naive program (n=2, T=4), mutate at a = f(00): exactly one
        // pre-query state has delta = 1, so rhs = 2 and lhs = sqrt(2).
        let program = naive_iteration_program(2, 4).unwrap();
        let f = cycle4();
        let a = f.get(&w(2, 0)).unwrap();
        let to = w(2, (a.value() + 2) % 4); // != f(a) on this table
        assert_ne!(to, f.get(&a).unwrap());
        let report = check_lemma2(&program, &f, &a, &to, &w(2, 0)).unwrap();
        assert!((report.rhs - 2.0).abs() < 1e-12);
        assert!((report.lhs - core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(report.holds());
        // decomposition: exactly one unit term
        let ones = report
            .context
            .terms
            .iter()
            .filter(|&&x| (x - 1.0).abs() < 1e-12)
            .count();
        let zeros = report
            .context
            .terms
            .iter()
            .filter(|&&x| x.abs() < 1e-12)
            .count();
        assert_eq!(ones, 1);
        assert_eq!(zeros, report.context.terms.len() - 1);
    }

    #[test]
    fn lemma2_holds_on_random_programs() {
        let mut rng = SplitMix64::new(909);
        for trial in 0..60 {
            let n = 2;
            let t = 1 + (trial % 4);
            let program = crate::algorithms::random_program(n, t, &mut rng).unwrap();
            let f = LengthPreservingFn::random_table(n, &mut rng).unwrap();
            let a = w(n, rng.next_below(4) as u128);
            let to = w(n, rng.next_below(4) as u128);
            let input = w(n, rng.next_below(4) as u128);
            let report = check_lemma2(&program, &f, &a, &to, &input).unwrap();
            assert!(
                report.holds(),
                "trial {trial}: lhs {} rhs {} (t = {t})",
                report.lhs,
                report.rhs
            );
        }
    }
}
