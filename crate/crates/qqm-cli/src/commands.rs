//! The experiment commands.
//!
//! Exit-code protocol: 0 all bounds hold, 1 config/usage error, 2 a bound
//! was violated (the offending instance id is printed for `--replay`),
//! 3 the inductive adversary reported infeasibility (report still written).
//!
//! Instance `i` of a batch draws from the substream
//! `SplitMix64::derive(seed, i)`, so `--replay i` regenerates its row
//! byte-identically without running the rest of the batch.

use std::io::Write;
use std::path::Path;

use qqm_core::adversary::{construct_adversary_t1, construct_adversary_t2, InductiveOutcome};
use qqm_core::algorithms::{
    grover_program, naive_iteration_program, random_program, random_state, undersampling_program,
};
use qqm_core::machine::QueryProgram;
use qqm_core::metrics::{check_lemma1, check_lemma2};
use qqm_core::rng::SplitMix64;
use qqm_core::{BitWord, LengthPreservingFn, RegisterLayout};

use crate::config::{Config, Family, Format};
use crate::report::{
    demo_rows_to_csv, demo_rows_to_table, rows_to_csv, to_json_string, AdversaryJson, DemoRow,
    InfeasibilityJson, Row, RowsJson,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub fn dispatch(config: &Config) -> Result<i32, String> {
    match config.command {
        crate::config::Command::Lemma1 => cmd_lemma1(config),
        crate::config::Command::Lemma2 => cmd_lemma2(config),
        crate::config::Command::Adversary => cmd_adversary(config),
        crate::config::Command::Demo => cmd_demo(config),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            file.write_all(content.as_bytes())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn instance_range(config: &Config) -> std::ops::Range<u64> {
    match config.replay {
        Some(id) => id..id + 1,
        None => 0..config.trials,
    }
}

fn word_below(rng: &mut SplitMix64, n: usize) -> BitWord {
    BitWord::new(n, rng.next_below(1 << n as u64) as u128).expect("in range")
}

/// Single-query perturbation sweep: random states against oracle pairs of
/// varying disagreement, checked against `2·d_S(f, g)`.
fn cmd_lemma1(config: &Config) -> Result<i32, String> {
    let n = config.n;
    let mut rows = Vec::new();
    let mut first_violation = None;
    for i in instance_range(config) {
        let mut rng = SplitMix64::derive(config.seed, i);
        let layout =
            RegisterLayout::new(rng.next_below(3) as usize, n).map_err(|e| e.to_string())?;
        let state = random_state(layout, &mut rng).map_err(|e| e.to_string())?;
        let f = LengthPreservingFn::random_table(n, &mut rng).map_err(|e| e.to_string())?;
        let g = match i % 4 {
            0 => {
                let at = word_below(&mut rng, n);
                let to = word_below(&mut rng, n);
                f.mutate(&at, &to).map_err(|e| e.to_string())?
            }
            1 => f.clone(),
            _ => LengthPreservingFn::random_table(n, &mut rng).map_err(|e| e.to_string())?,
        };
        let report = check_lemma1(&state, &f, &g).map_err(|e| e.to_string())?;
        if !report.holds() && first_violation.is_none() {
            first_violation = Some(i);
        }
        rows.push(Row::from_lemma(i, n, config.big_t, 0, config.seed, &report));
    }
    finish_lemma(config, "lemma1", rows, first_violation)
}

/// Whole-run perturbation sweep: random programs under one-word mutations,
/// checked against `2·Σ_i √δ_a(χ_i)`.
fn cmd_lemma2(config: &Config) -> Result<i32, String> {
    let n = config.n;
    let max_t = config.t.clamp(1, 4);
    let mut rows = Vec::new();
    let mut first_violation = None;
    for i in instance_range(config) {
        let mut rng = SplitMix64::derive(config.seed, i);
        let t = 1 + rng.next_below(max_t as u64) as usize;
        let program = random_program(n, t, &mut rng).map_err(|e| e.to_string())?;
        let f = LengthPreservingFn::random_table(n, &mut rng).map_err(|e| e.to_string())?;
        let at = word_below(&mut rng, n);
        // every fifth instance checks the trivial mutation (lhs must be 0)
        let to = if i % 5 == 0 {
            f.get(&at).map_err(|e| e.to_string())?
        } else {
            word_below(&mut rng, n)
        };
        let input = word_below(&mut rng, n);
        let report = check_lemma2(&program, &f, &at, &to, &input).map_err(|e| e.to_string())?;
        if !report.holds() && first_violation.is_none() {
            first_violation = Some(i);
        }
        rows.push(Row::from_lemma(i, n, config.big_t, t, config.seed, &report));
    }
    finish_lemma(config, "lemma2", rows, first_violation)
}

fn finish_lemma(
    config: &Config,
    command: &str,
    rows: Vec<Row>,
    first_violation: Option<u64>,
) -> Result<i32, String> {
    let content = match config.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => to_json_string(&RowsJson {
            command,
            n: config.n,
            trials: config.trials,
            seed: config.seed,
            rows: &rows,
        }),
    };
    emit(config.out.as_deref(), &content)?;
    if config.out.is_some() {
        let held = rows.iter().filter(|r| r.holds).count();
        println!("{command}: {held}/{} hold", rows.len());
    }
    match first_violation {
        Some(id) => {
            eprintln!(
                "{command}: inequality violated at instance {id} (seed {}); rerun with --replay {id}",
                config.seed
            );
            Ok(EXIT_VIOLATION)
        }
        None => Ok(EXIT_OK),
    }
}

fn build_family_program(config: &Config, rng: &mut SplitMix64) -> Result<QueryProgram, String> {
    match config.program {
        Family::Naive => naive_iteration_program(config.n, config.big_t).map_err(|e| e.to_string()),
        Family::Undersample => {
            undersampling_program(config.n, config.big_t, config.t).map_err(|e| e.to_string())
        }
        Family::Grover => {
            let marked = word_below(rng, config.n);
            grover_program(config.n, &marked, config.t).map_err(|e| e.to_string())
        }
    }
}

/// Run one adversary construction against the configured program family.
fn cmd_adversary(config: &Config) -> Result<i32, String> {
    let mut rng = SplitMix64::derive(config.seed, 0);
    let f = LengthPreservingFn::random_full_cycle(config.n, rng.next_u64())
        .map_err(|e| e.to_string())?;
    let program = build_family_program(config, &mut rng)?;
    let family = config.program.name();

    if let Some(theta) = config.theta {
        let outcome = construct_adversary_t1(&program, &f, config.big_t, theta, config.seed)
            .map_err(|e| e.to_string())?;
        match outcome {
            InductiveOutcome::Constructed(report) => {
                let json = AdversaryJson::from_report(&report, family, &program);
                emit_adversary(config, &json)?;
                Ok(if json.sound { EXIT_OK } else { EXIT_VIOLATION })
            }
            InductiveOutcome::Infeasible(report) => {
                let json = InfeasibilityJson::from_report(&report, config.seed);
                emit(config.out.as_deref(), &to_json_string(&json))?;
                eprintln!(
                    "adversary: inductive construction infeasible at step {} (theta {})",
                    report.failed_step, report.theta
                );
                Ok(EXIT_INFEASIBLE)
            }
        }
    } else {
        let report = construct_adversary_t2(&program, &f, config.big_t, config.seed)
            .map_err(|e| e.to_string())?;
        let json = AdversaryJson::from_report(&report, family, &program);
        emit_adversary(config, &json)?;
        if !json.sound {
            eprintln!(
                "adversary: a bound failed (lhs {}, rhs {})",
                json.lhs, json.rhs
            );
            return Ok(EXIT_VIOLATION);
        }
        Ok(EXIT_OK)
    }
}

fn emit_adversary(config: &Config, json: &AdversaryJson) -> Result<(), String> {
    let content = match config.format {
        Format::Json => to_json_string(json),
        Format::Csv => rows_to_csv(&[json.summary_row()]),
    };
    emit(config.out.as_deref(), &content)?;
    if config.out.is_some() {
        println!(
            "adversary: {} on {} (t = {}, T = {}): lhs {} <= rhs {}, decisive = {}",
            json.mode,
            json.family,
            json.t,
            json.big_t,
            crate::report::fmt_f64(json.lhs),
            crate::report::fmt_f64(json.rhs),
            json.bound_decisive
        );
    }
    Ok(())
}

/// Side-by-side table: honest iteration, undersampling victim, and Grover,
/// each put through the direct adversary against the same full cycle.
fn cmd_demo(config: &Config) -> Result<i32, String> {
    let mut rng = SplitMix64::derive(config.seed, 0);
    let f = LengthPreservingFn::random_full_cycle(config.n, rng.next_u64())
        .map_err(|e| e.to_string())?;
    let grover_k = 2usize;
    let marked = word_below(&mut rng, config.n);

    let programs: Vec<(&'static str, QueryProgram)> = vec![
        (
            "naive",
            naive_iteration_program(config.n, config.big_t).map_err(|e| e.to_string())?,
        ),
        (
            "undersample",
            undersampling_program(config.n, config.big_t, config.t).map_err(|e| e.to_string())?,
        ),
        (
            "grover",
            grover_program(config.n, &marked, grover_k).map_err(|e| e.to_string())?,
        ),
    ];

    let mut rows = Vec::new();
    let mut all_hold = true;
    for (name, program) in &programs {
        let report = construct_adversary_t2(program, &f, config.big_t, config.seed)
            .map_err(|e| e.to_string())?;
        all_hold &= report.sound();
        rows.push(DemoRow {
            program: name,
            t: report.t,
            big_t: report.big_t,
            success_f: report.success_original,
            success_g: report.success_mutated,
            bound: report.rhs_global,
            lhs: report.lhs,
            rhs: report.rhs,
            holds: report.sound(),
        });
    }

    if let Some(path) = config.out.as_deref() {
        let content = match config.format {
            Format::Csv => demo_rows_to_csv(&rows),
            Format::Json => to_json_string(&rows),
        };
        emit(Some(path), &content)?;
    }
    print!("{}", demo_rows_to_table(&rows));

    Ok(if all_hold { EXIT_OK } else { EXIT_VIOLATION })
}
