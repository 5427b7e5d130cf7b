//! Flag and config-file handling.
//!
//! Flags: `--n --T --t --theta --alpha --trials --seed --program --format
//! --out --replay --config`. A JSON config file mirrors the flag names;
//! explicit flags override file values. No environment variables are read.

use std::path::PathBuf;

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lemma1,
    Lemma2,
    Adversary,
    Demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Naive,
    Undersample,
    Grover,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Naive => "naive",
            Family::Undersample => "undersample",
            Family::Grover => "grover",
        }
    }
}

/// Everything is optional until flags and file are merged.
#[derive(Debug, Default, Clone, Deserialize)]
pub struct RawConfig {
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub big_t: Option<usize>,
    pub t: Option<usize>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub program: Option<String>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub replay: Option<u64>,
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl RawConfig {
    /// File values fill the gaps left by explicit flags.
    fn merge_file(&mut self, file: RawConfig) {
        self.n = self.n.or(file.n);
        self.big_t = self.big_t.or(file.big_t);
        self.t = self.t.or(file.t);
        self.theta = self.theta.or(file.theta);
        self.alpha = self.alpha.or(file.alpha);
        self.trials = self.trials.or(file.trials);
        self.seed = self.seed.or(file.seed);
        self.program = self.program.take().or(file.program);
        self.format = self.format.take().or(file.format);
        self.out = self.out.take().or(file.out);
    }
}

/// Validated experiment configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub command: Command,
    pub n: usize,
    pub big_t: usize,
    pub t: usize,
    /// Query-mass threshold; `Some` switches the adversary command to the
    /// inductive construction.
    pub theta: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub program: Family,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub replay: Option<u64>,
}

pub fn parse(args: &[String]) -> Result<Config, String> {
    let command = match args.first().map(String::as_str) {
        Some("lemma1") => Command::Lemma1,
        Some("lemma2") => Command::Lemma2,
        Some("adversary") => Command::Adversary,
        Some("demo") => Command::Demo,
        Some(other) => return Err(format!("unknown command `{other}`")),
        None => return Err("missing command".into()),
    };

    let mut raw = RawConfig::default();
    let mut iter = args[1..].iter();
    while let Some(flag) = iter.next() {
        let mut value = || {
            iter.next()
                .ok_or_else(|| format!("flag {flag} needs a value"))
        };
        match flag.as_str() {
            "--n" => raw.n = Some(parse_value(value()?, flag)?),
            "--T" => raw.big_t = Some(parse_value(value()?, flag)?),
            "--t" => raw.t = Some(parse_value(value()?, flag)?),
            "--theta" => raw.theta = Some(parse_value(value()?, flag)?),
            "--alpha" => raw.alpha = Some(parse_value(value()?, flag)?),
            "--trials" => raw.trials = Some(parse_value(value()?, flag)?),
            "--seed" => raw.seed = Some(parse_value(value()?, flag)?),
            "--program" => raw.program = Some(value()?.clone()),
            "--format" => raw.format = Some(value()?.clone()),
            "--out" => raw.out = Some(PathBuf::from(value()?)),
            "--replay" => raw.replay = Some(parse_value(value()?, flag)?),
            "--config" => raw.config = Some(PathBuf::from(value()?)),
            other => return Err(format!("unknown flag `{other}`")),
        }
    }

    if let Some(path) = raw.config.clone() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let file: RawConfig = serde_json::from_str(&text)
            .map_err(|e| format!("bad config file {}: {e}", path.display()))?;
        raw.merge_file(file);
    }

    validate(command, raw)
}

fn parse_value<T: std::str::FromStr>(s: &str, flag: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad value `{s}` for {flag}"))
}

fn validate(command: Command, raw: RawConfig) -> Result<Config, String> {
    let n = raw.n.unwrap_or(match command {
        Command::Lemma1 | Command::Lemma2 => 3,
        Command::Adversary | Command::Demo => 4,
    });
    if n == 0 || n > 6 {
        return Err(format!("--n must be in 1..=6, got {n}"));
    }
    let big_t = match command {
        Command::Adversary | Command::Demo => {
            let v = raw.big_t.unwrap_or(16);
            if v == 0 || v > 1 << n {
                return Err(format!("--T must be in 1..=2^n, got {v}"));
            }
            v
        }
        // recorded in report rows but not used by the inequality checks
        Command::Lemma1 | Command::Lemma2 => raw.big_t.unwrap_or(0),
    };
    let t = raw.t.unwrap_or(match command {
        Command::Lemma2 => 4,
        _ => 1,
    });
    if t == 0 {
        return Err("--t must be at least 1".into());
    }
    let trials = raw.trials.unwrap_or(match command {
        Command::Lemma1 => 100,
        Command::Lemma2 => 50,
        _ => 1,
    });
    if trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let seed = raw
        .seed
        .ok_or("--seed is mandatory (all commands are randomized)")?;

    let theta = match (raw.theta, raw.alpha) {
        (Some(_), Some(_)) => return Err("--theta and --alpha are mutually exclusive".into()),
        (Some(theta), None) => {
            if theta <= 0.0 || theta > 1.0 {
                return Err(format!("--theta must be in (0, 1], got {theta}"));
            }
            Some(theta)
        }
        (None, Some(alpha)) => {
            if alpha <= 0.0 {
                return Err(format!("--alpha must be positive, got {alpha}"));
            }
            Some((big_t as f64).powf(-alpha).min(1.0))
        }
        (None, None) => None,
    };

    let program = match raw.program.as_deref() {
        None => Family::Undersample,
        Some("naive") => Family::Naive,
        Some("undersample") => Family::Undersample,
        Some("grover") => Family::Grover,
        Some(other) => return Err(format!("unknown program family `{other}`")),
    };
    if command == Command::Adversary && program == Family::Undersample && t >= big_t {
        return Err(format!("undersample needs t < T, got t = {t}, T = {big_t}"));
    }

    let format = match raw.format.as_deref() {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => return Err(format!("unknown format `{other}` (use csv or json)")),
    };

    if let Some(id) = raw.replay {
        match command {
            Command::Lemma1 | Command::Lemma2 => {
                if id >= trials {
                    return Err(format!("--replay {id} out of range (trials = {trials})"));
                }
            }
            Command::Adversary | Command::Demo => {
                if id != 0 {
                    return Err("--replay must be 0 for single-instance commands".into());
                }
            }
        }
    }

    Ok(Config {
        command,
        n,
        big_t,
        t,
        theta,
        trials,
        seed,
        program,
        format,
        out: raw.out,
        replay: raw.replay,
    })
}
