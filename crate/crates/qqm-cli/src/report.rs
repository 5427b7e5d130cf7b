//! Report rendering: CSV rows with fixed columns and JSON mirrors of the
//! core report types.
//!
//! CSV columns are fixed as `instance_id,n,T,t,lhs,rhs,slack,holds,seed`.
//! Floating-point values are rendered through the JSON number formatter in
//! both formats, so CSV and JSON artifacts carry identical digit strings.

use qqm_core::adversary::{AdversaryMode, AdversaryReport, InfeasibilityReport};
use qqm_core::machine::{BasisPermutation, ProgramStep, QueryProgram};
use qqm_core::metrics::LemmaReport;
use qqm_core::{BitWord, LengthPreservingFn};
use serde::Serialize;

/// Shortest round-trip decimal form, identical to what serde_json emits.
pub fn fmt_f64(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float")
}

pub const CSV_HEADER: &str = "instance_id,n,T,t,lhs,rhs,slack,holds,seed";

/// One fixed-column report row.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub instance_id: u64,
    pub n: usize,
    #[serde(rename = "T")]
    pub big_t: usize,
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<RowDetail>,
}

/// Extra provenance carried only by the JSON format.
#[derive(Debug, Clone, Serialize)]
pub struct RowDetail {
    pub f_hash: String,
    pub g_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_to: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<f64>,
}

impl Row {
    pub fn from_lemma(
        instance_id: u64,
        n: usize,
        big_t: usize,
        t: usize,
        seed: u64,
        report: &LemmaReport,
    ) -> Self {
        let detail = RowDetail {
            f_hash: format!("{:016x}", report.context.f_hash),
            g_hash: format!("{:016x}", report.context.g_hash),
            mutation_at: report.context.mutation.map(|(at, _)| at.to_string()),
            mutation_to: report.context.mutation.map(|(_, to)| to.to_string()),
            terms: report.context.terms.clone(),
        };
        Row {
            instance_id,
            n,
            big_t,
            t,
            lhs: report.lhs,
            rhs: report.rhs,
            slack: report.slack(),
            holds: report.holds(),
            seed,
            detail: Some(detail),
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.n,
            self.big_t,
            self.t,
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            fmt_f64(self.slack),
            self.holds,
            self.seed
        )
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
pub struct RowsJson<'a> {
    pub command: &'a str,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub rows: &'a [Row],
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// `{"n": …, "table": […]}` — the oracle-table interchange format.
#[derive(Debug, Clone, Serialize)]
pub struct OracleJson {
    pub n: usize,
    pub table: Vec<u64>,
}

impl OracleJson {
    pub fn from_fn(f: &LengthPreservingFn) -> Self {
        OracleJson {
            n: f.width(),
            table: f.table().iter().map(|&v| v as u64).collect(),
        }
    }
}

/// Program steps as JSON: dense matrices as nested `[re, im]` pairs,
/// permutations by catalog name plus parameters.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepJson {
    Query,
    Dense {
        targets: Vec<usize>,
        matrix: Vec<Vec<[f64; 2]>>,
    },
    Permutation(PermutationJson),
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PermutationJson {
    SectionSwap {
        a: usize,
        b: usize,
        len: usize,
    },
    SectionXor {
        src: usize,
        dst: usize,
        len: usize,
    },
    ConditionalIncrement {
        start: usize,
        len: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        control: Option<usize>,
        amount: u64,
    },
}

pub fn program_to_json(program: &QueryProgram) -> Vec<StepJson> {
    program
        .steps()
        .iter()
        .map(|step| match step {
            ProgramStep::Query => StepJson::Query,
            ProgramStep::Dense { targets, unitary } => {
                let dim = unitary.dim();
                let matrix = (0..dim)
                    .map(|r| {
                        (0..dim)
                            .map(|c| {
                                let z = unitary.entry(r, c);
                                [z.re, z.im]
                            })
                            .collect()
                    })
                    .collect();
                StepJson::Dense {
                    targets: targets.clone(),
                    matrix,
                }
            }
            ProgramStep::Permutation(p) => StepJson::Permutation(match *p {
                BasisPermutation::SectionSwap { a, b, len } => {
                    PermutationJson::SectionSwap { a, b, len }
                }
                BasisPermutation::SectionXor { src, dst, len } => {
                    PermutationJson::SectionXor { src, dst, len }
                }
                BasisPermutation::ConditionalIncrement {
                    start,
                    len,
                    control,
                    amount,
                } => PermutationJson::ConditionalIncrement {
                    start,
                    len,
                    control,
                    amount: amount as u64,
                },
            }),
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct HybridJson {
    pub theta: f64,
    pub pivot_words: Vec<String>,
    pub deltas: Vec<f64>,
    pub partials: Vec<f64>,
    pub feasible_sizes: Vec<usize>,
    pub delta_bound: f64,
    pub delta_bound_holds: Vec<bool>,
    pub partial_bound_holds: Vec<bool>,
    pub final_word_terms: Vec<f64>,
    pub term_bound: f64,
    pub term_bound_holds: Vec<bool>,
    pub lemma3_holds: Vec<bool>,
    pub chain_bound: f64,
    pub drifted: OracleJson,
}

/// Full adversary record: both oracle tables, the query matrix, the
/// program, every measured quantity and bound.
#[derive(Debug, Serialize)]
pub struct AdversaryJson {
    pub mode: &'static str,
    pub family: &'static str,
    pub n: usize,
    #[serde(rename = "T")]
    pub big_t: usize,
    pub t: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_column_sum: Option<f64>,
    pub mutation_at: String,
    pub mutation_to: String,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs_coarse: Option<f64>,
    pub rhs_global: f64,
    pub bound_decisive: bool,
    pub target_original: String,
    pub target_mutated: String,
    pub success_original: f64,
    pub success_mutated: f64,
    pub prob_original_target_under_mutated: f64,
    pub prob_mutated_target_under_original: f64,
    pub lemma2_holds: bool,
    pub probability_gap_bound_holds: bool,
    pub sound: bool,
    pub original: OracleJson,
    pub mutated: OracleJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybrid: Option<HybridJson>,
    pub program: Vec<StepJson>,
}

impl AdversaryJson {
    pub fn from_report(
        report: &AdversaryReport,
        family: &'static str,
        program: &QueryProgram,
    ) -> Self {
        let mode = match report.mode {
            AdversaryMode::Direct => "direct",
            AdversaryMode::Inductive { .. } => "inductive",
        };
        let matrix = report.matrix.as_ref().map(|m| {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m.entry(i, j)).collect())
                .collect()
        });
        let orbit = report
            .matrix
            .as_ref()
            .map(|m| m.orbit().iter().map(words_to_string).collect());
        let hybrid = report.hybrid.as_ref().map(|h| HybridJson {
            theta: h.theta,
            pivot_words: h.words.iter().map(words_to_string).collect(),
            deltas: h.deltas.clone(),
            partials: h.partials.clone(),
            feasible_sizes: h.feasible_sizes.clone(),
            delta_bound: h.delta_bound,
            delta_bound_holds: h.delta_bound_holds.clone(),
            partial_bound_holds: h.partial_bound_holds.clone(),
            final_word_terms: h.final_word_terms.clone(),
            term_bound: h.term_bound,
            term_bound_holds: h.term_bound_holds.clone(),
            lemma3_holds: h.lemma3.clone(),
            chain_bound: h.chain_bound,
            drifted: OracleJson::from_fn(&h.drifted),
        });
        AdversaryJson {
            mode,
            family,
            n: report.original.width(),
            big_t: report.big_t,
            t: report.t,
            seed: report.seed,
            tau: report.tau,
            tau_column_sum: report.tau_column_sum,
            mutation_at: report.mutation_at.to_string(),
            mutation_to: report.mutation_to.to_string(),
            lhs: report.lhs,
            rhs: report.rhs,
            rhs_coarse: report.rhs_coarse,
            rhs_global: report.rhs_global,
            bound_decisive: report.bound_decisive(),
            target_original: report.target_original.to_string(),
            target_mutated: report.target_mutated.to_string(),
            success_original: report.success_original,
            success_mutated: report.success_mutated,
            prob_original_target_under_mutated: report.prob_original_target_under_mutated,
            prob_mutated_target_under_original: report.prob_mutated_target_under_original,
            lemma2_holds: report.lemma2_holds(),
            probability_gap_bound_holds: report.probability_gap_bound_holds(),
            sound: report.sound(),
            original: OracleJson::from_fn(&report.original),
            mutated: OracleJson::from_fn(&report.mutated),
            matrix,
            orbit,
            hybrid,
            program: program_to_json(program),
        }
    }

    pub fn summary_row(&self) -> Row {
        Row {
            instance_id: 0,
            n: self.n,
            big_t: self.big_t,
            t: self.t,
            lhs: self.lhs,
            rhs: self.rhs,
            slack: self.rhs - self.lhs,
            holds: self.sound,
            seed: self.seed,
            detail: None,
        }
    }
}

fn words_to_string(w: &BitWord) -> String {
    w.to_string()
}

#[derive(Debug, Serialize)]
pub struct InfeasibilityJson {
    pub mode: &'static str,
    pub outcome: &'static str,
    pub failed_step: usize,
    pub theta: f64,
    pub feasible_set_size: usize,
    pub from_word: String,
    pub candidates_checked: usize,
    pub seed: u64,
}

impl InfeasibilityJson {
    pub fn from_report(report: &InfeasibilityReport, seed: u64) -> Self {
        InfeasibilityJson {
            mode: "inductive",
            outcome: "infeasible",
            failed_step: report.failed_step,
            theta: report.theta,
            feasible_set_size: report.feasible_set_size,
            from_word: report.from_word.to_string(),
            candidates_checked: report.candidates_checked,
            seed,
        }
    }
}

/// One line of the demo table.
#[derive(Debug, Clone, Serialize)]
pub struct DemoRow {
    pub program: &'static str,
    pub t: usize,
    #[serde(rename = "T")]
    pub big_t: usize,
    pub success_f: f64,
    pub success_g: f64,
    pub bound: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const DEMO_CSV_HEADER: &str = "program,t,T,success_f,success_g,bound,lhs,rhs,holds";

pub fn demo_rows_to_csv(rows: &[DemoRow]) -> String {
    let mut out = String::from(DEMO_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.program,
            r.t,
            r.big_t,
            fmt_f64(r.success_f),
            fmt_f64(r.success_g),
            fmt_f64(r.bound),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            r.holds
        ));
    }
    out
}

/// Fixed-width table for stdout; numbers use the same digit strings as the
/// machine formats.
pub fn demo_rows_to_table(rows: &[DemoRow]) -> String {
    let mut cells: Vec<[String; 6]> = vec![[
        "program".into(),
        "t".into(),
        "T".into(),
        "success_f".into(),
        "success_g".into(),
        "bound".into(),
    ]];
    for r in rows {
        cells.push([
            r.program.to_string(),
            r.t.to_string(),
            r.big_t.to_string(),
            fmt_f64(r.success_f),
            fmt_f64(r.success_g),
            fmt_f64(r.bound),
        ]);
    }
    let mut widths = [0usize; 6];
    for row in &cells {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            for _ in cell.len()..widths[i] {
                out.push(' ');
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out
}
