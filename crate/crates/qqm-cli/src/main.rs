//! `qqm` — experiment runner for the query-machine simulator.
//!
//! Subcommands:
//!   lemma1     sweep the single-query perturbation bound over random
//!              states and oracle pairs
//!   lemma2     sweep the whole-run one-word mutation bound over random
//!              programs
//!   adversary  run an oracle-flip adversary against a program family
//!   demo       run naive / undersample / grover side by side
//!
//! Exit codes: 0 all bounds hold, 1 config error, 2 bound violation,
//! 3 inductive construction infeasible.

mod commands;
mod config;
mod report;

const USAGE: &str = "\
qqm - oracle query machine experiments

USAGE:
  qqm <lemma1|lemma2|adversary|demo> [FLAGS]

FLAGS:
  --n N          query word width, 1..=6
  --T N          iteration count (adversary/demo; 1..=2^n, default 16)
  --t N          query budget: max t for lemma2, t for undersample,
                 iterations for grover (default 4 / 1)
  --theta X      inductive adversary with mass threshold X in (0, 1]
  --alpha A      same, with X = T^-A
  --trials N     batch size for lemma1/lemma2 (default 100 / 50)
  --seed N       base seed (mandatory; instance i uses substream i)
  --program P    naive | undersample | grover (default undersample)
  --format F     csv | json (default csv)
  --out PATH     write the report there instead of stdout
  --replay ID    regenerate exactly one instance of a batch
  --config PATH  JSON file with the same keys; flags win

EXIT CODES:
  0 ok, 1 config error, 2 bound violation, 3 infeasible construction
";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        eprint!("{USAGE}");
        std::process::exit(commands::EXIT_CONFIG);
    }
    let config = match config::parse(&args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            eprint!("{USAGE}");
            std::process::exit(commands::EXIT_CONFIG);
        }
    };
    match commands::dispatch(&config) {
        Ok(code) => std::process::exit(code),
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(commands::EXIT_CONFIG);
        }
    }
}
