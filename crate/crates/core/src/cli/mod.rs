//! Batch driver: argument and config-file parsing, validation, dispatch and
//! report emission.
//!
//! Precedence for every parameter is flag, then environment (threads only),
//! then config file, then built-in default.

pub mod report;
mod run;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::entropy::ThresholdRule;
use crate::graphmodel::window_primes;
use crate::multfunc::{DirichletCharacter, MultSpec, PrimePowerMean};

pub use report::{emit_report, Format, Row, RunReport, Timing};
pub use run::run;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "chowla-lab",
    version,
    about = "Numerical experiments on correlations of multiplicative functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump λ, μ or primes over the window (x/ω, x].
    SieveDump(Invocation),
    /// Two-point correlation Σ g1(an+b) g2(an+b+h) / n.
    Correlate(Invocation),
    /// Three-point correlation with shifts.
    Correlate3(Invocation),
    /// Logarithmic densities of sign patterns of length k.
    SignPatterns(Invocation),
    /// Pretentious distance of g1 from χ(n) n^{it} up to x.
    Distance(Invocation),
    /// Mutual information I(X_H, Y_H) along the decrement schedule.
    EntropyScan(Invocation),
    /// Hoeffding concentration of the bilinear sum F.
    Concentration(Invocation),
    /// Large-value set Ξ_H and the bilinear bound.
    CircleScan(Invocation),
    /// Restricted fourth moment of S_H, grid and quadruple forms.
    FourthMoment(Invocation),
    /// Averaged maximal short exponential sum.
    MaxExpSum(Invocation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    SieveDump,
    Correlate,
    Correlate3,
    SignPatterns,
    Distance,
    EntropyScan,
    Concentration,
    CircleScan,
    FourthMoment,
    MaxExpSum,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::SieveDump => "sieve-dump",
            CommandName::Correlate => "correlate",
            CommandName::Correlate3 => "correlate3",
            CommandName::SignPatterns => "sign-patterns",
            CommandName::Distance => "distance",
            CommandName::EntropyScan => "entropy-scan",
            CommandName::Concentration => "concentration",
            CommandName::CircleScan => "circle-scan",
            CommandName::FourthMoment => "fourth-moment",
            CommandName::MaxExpSum => "max-exp-sum",
        }
    }

    fn uses_prime_window(self) -> bool {
        matches!(
            self,
            CommandName::Concentration | CommandName::CircleScan | CommandName::FourthMoment
        )
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Command {
    fn split(self) -> (CommandName, Invocation) {
        match self {
            Command::SieveDump(i) => (CommandName::SieveDump, i),
            Command::Correlate(i) => (CommandName::Correlate, i),
            Command::Correlate3(i) => (CommandName::Correlate3, i),
            Command::SignPatterns(i) => (CommandName::SignPatterns, i),
            Command::Distance(i) => (CommandName::Distance, i),
            Command::EntropyScan(i) => (CommandName::EntropyScan, i),
            Command::Concentration(i) => (CommandName::Concentration, i),
            Command::CircleScan(i) => (CommandName::CircleScan, i),
            Command::FourthMoment(i) => (CommandName::FourthMoment, i),
            Command::MaxExpSum(i) => (CommandName::MaxExpSum, i),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Invocation {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SieveKind {
    #[default]
    Liouville,
    Mobius,
    Primes,
}

/// Experiment parameters; every field is optional so that flags and a config
/// file can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ParamArgs {
    /// Upper end of the window; scientific notation accepted, floored.
    #[arg(long)]
    pub x: Option<f64>,
    /// Window ratio; the window is (⌊x/ω⌋, x]. Default x / ln x.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub a: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<i64>,
    #[arg(long, alias = "eps")]
    pub epsilon: Option<f64>,
    /// Scale H.
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub big_h: Option<u64>,
    #[arg(long)]
    pub h_minus: Option<u64>,
    #[arg(long)]
    pub c0: Option<f64>,
    /// Number of schedule levels J.
    #[arg(long, alias = "J")]
    pub levels: Option<usize>,
    #[arg(long)]
    pub cap: Option<u64>,
    /// Function selector: liouville, mobius, mobius2, constant, twist:t,
    /// principal:q, legendre:p, random:seed[:mean], or a product joined by `*`.
    #[arg(long)]
    pub g1: Option<String>,
    #[arg(long)]
    pub g2: Option<String>,
    #[arg(long)]
    pub g3: Option<String>,
    /// Shifts for correlate3, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub shifts: Option<Vec<i64>>,
    /// Pattern length for sign-patterns.
    #[arg(long)]
    pub k: Option<usize>,
    /// Character for distance: trivial, principal:q or legendre:p.
    #[arg(long)]
    pub chi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub oversample: Option<u64>,
    #[arg(long, value_enum)]
    pub threshold_rule: Option<ThresholdRuleArg>,
    #[arg(long, value_enum)]
    pub kind: Option<SieveKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRuleArg {
    Standard,
    EpsilonPower,
}

impl From<ThresholdRuleArg> for ThresholdRule {
    fn from(r: ThresholdRuleArg) -> Self {
        match r {
            ThresholdRuleArg::Standard => ThresholdRule::Standard,
            ThresholdRuleArg::EpsilonPower => ThresholdRule::EpsilonPower,
        }
    }
}

/// Execution settings; not part of the echoed configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct ExecArgs {
    /// TOML or JSON file with parameter defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads.
    #[arg(long, env = "CHOWLA_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Validate and print the resolved plan without computing.
    #[arg(long)]
    pub dry_run: bool,
    /// Add wall-clock timings to the report (makes output run-dependent).
    #[arg(long)]
    pub include_timings: bool,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: CommandName,
    pub x: u64,
    pub omega: f64,
    pub a: u64,
    pub b: i64,
    pub h: i64,
    pub epsilon: f64,
    #[serde(rename = "H")]
    pub big_h: u64,
    pub h_minus: u64,
    pub c0: f64,
    pub levels: usize,
    pub cap: u64,
    pub g1: String,
    pub g2: String,
    pub g3: String,
    pub shifts: Vec<i64>,
    pub k: usize,
    pub chi: String,
    pub t: f64,
    pub seed: u64,
    pub trials: u64,
    pub oversample: u64,
    pub threshold_rule: ThresholdRule,
    pub kind: SieveKind,
}

/// Settings that shape execution but not results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecOptions {
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub dry_run: bool,
    pub include_timings: bool,
}

/// Every violated precondition, one per line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn one(message: impl Into<String>) -> Self {
        ConfigError {
            violations: vec![message.into()],
        }
    }
}

pub const DEFAULT_X: f64 = 1e6;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_BIG_H: u64 = 100;
pub const DEFAULT_H_MINUS: u64 = 16;
pub const DEFAULT_C0: f64 = 1.0;
pub const DEFAULT_LEVELS: usize = 4;
pub const DEFAULT_CAP: u64 = 1 << 16;

/// Reads a TOML or JSON parameter file; the extension decides, TOML otherwise.
pub fn read_config_file(path: &Path) -> Result<ParamArgs, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::one(format!("cannot read config {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| ConfigError::one(format!("config {}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| ConfigError::one(format!("config {}: {e}", path.display())))
    }
}

/// Parses `g` selectors: `liouville`, `mobius`, `mobius2`, `constant`,
/// `twist:t`, `principal:q`, `legendre:p`, `random:seed[:mean]`, and
/// products joined by `*`.
pub fn parse_selector(s: &str) -> Result<MultSpec, String> {
    let factors: Vec<&str> = s.split('*').map(str::trim).collect();
    if factors.len() > 1 {
        return factors
            .iter()
            .map(|f| parse_selector(f))
            .collect::<Result<Vec<_>, _>>()
            .map(MultSpec::Product);
    }
    let mut parts = s.trim().split(':');
    let name = parts.next().unwrap_or_default().to_ascii_lowercase();
    let args: Vec<&str> = parts.collect();
    let arg = |i: usize| -> Result<&str, String> {
        args.get(i)
            .copied()
            .ok_or_else(|| format!("selector `{s}` is missing an argument"))
    };
    let num = |i: usize| -> Result<f64, String> {
        arg(i)?
            .parse::<f64>()
            .map_err(|_| format!("selector `{s}`: `{}` is not a number", args[i]))
    };
    let int = |i: usize| -> Result<u64, String> {
        arg(i)?
            .parse::<u64>()
            .map_err(|_| format!("selector `{s}`: `{}` is not an integer", args[i]))
    };
    let expect = |n: usize| -> Result<(), String> {
        if args.len() > n {
            Err(format!("selector `{s}` has too many arguments"))
        } else {
            Ok(())
        }
    };
    let spec = match name.as_str() {
        "liouville" | "lambda" => {
            expect(0)?;
            MultSpec::Liouville
        }
        "mobius" | "mu" => {
            expect(0)?;
            MultSpec::Mobius
        }
        "mobius2" | "mu2" => {
            expect(0)?;
            MultSpec::MobiusSquared
        }
        "constant" | "one" => {
            expect(0)?;
            MultSpec::Constant
        }
        "twist" => {
            expect(1)?;
            MultSpec::twist(num(0)?)
        }
        "principal" | "legendre" | "trivial" => MultSpec::Character(parse_character(s)?),
        "random" => {
            expect(2)?;
            let mean = if args.len() > 1 { num(1)? } else { 0.0 };
            crate::multfunc::sample_random_mult(PrimePowerMean::Constant(mean), int(0)?).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown function `{other}`")),
    };
    Ok(spec)
}

/// Parses `trivial`, `principal:q` or `legendre:p`.
pub fn parse_character(s: &str) -> Result<DirichletCharacter, String> {
    let mut parts = s.trim().split(':');
    let name = parts.next().unwrap_or_default().to_ascii_lowercase();
    let arg: Option<&str> = parts.next();
    if parts.next().is_some() {
        return Err(format!("character `{s}` has too many arguments"));
    }
    let modulus = || -> Result<u64, String> {
        arg.ok_or_else(|| format!("character `{s}` needs a modulus"))?
            .parse::<u64>()
            .map_err(|_| format!("character `{s}`: modulus is not an integer"))
    };
    match name.as_str() {
        "trivial" if arg.is_none() => Ok(DirichletCharacter::trivial()),
        "principal" => DirichletCharacter::principal(modulus()?).map_err(|e| e.to_string()),
        "legendre" => DirichletCharacter::legendre(modulus()?).map_err(|e| e.to_string()),
        _ => Err(format!("unknown character `{s}`")),
    }
}

fn merge<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

/// Layers flags over the config file over defaults and validates the result.
pub fn resolve(command: CommandName, flags: &ParamArgs, file: &ParamArgs) -> Result<RunConfig, ConfigError> {
    let mut violations = Vec::new();
    let x_raw = merge(&flags.x, &file.x).unwrap_or(DEFAULT_X);
    if !(x_raw.is_finite() && x_raw >= 3.0 && x_raw < 2f64.powi(53)) {
        violations.push(format!("x = {x_raw} must lie in [3, 2^53)"));
    }
    let x = if x_raw.is_finite() && x_raw >= 0.0 {
        x_raw.floor() as u64
    } else {
        0
    };
    let omega = merge(&flags.omega, &file.omega).unwrap_or_else(|| {
        let xf = x.max(3) as f64;
        xf / xf.ln()
    });
    if !(omega.is_finite() && omega >= 1.0 && omega <= x as f64) {
        violations.push(format!("ω = {omega} must satisfy 1 <= ω <= x"));
    } else if x as f64 / omega >= x as f64 - 1.0 {
        violations.push(format!(
            "window (x/ω, x] with x = {x}, ω = {omega} has fewer than two elements"
        ));
    }
    let cfg = RunConfig {
        command,
        x,
        omega,
        a: merge(&flags.a, &file.a).unwrap_or(1),
        b: merge(&flags.b, &file.b).unwrap_or(0),
        h: merge(&flags.h, &file.h).unwrap_or(1),
        epsilon: merge(&flags.epsilon, &file.epsilon).unwrap_or(DEFAULT_EPSILON),
        big_h: merge(&flags.big_h, &file.big_h).unwrap_or(DEFAULT_BIG_H),
        h_minus: merge(&flags.h_minus, &file.h_minus).unwrap_or(DEFAULT_H_MINUS),
        c0: merge(&flags.c0, &file.c0).unwrap_or(DEFAULT_C0),
        levels: merge(&flags.levels, &file.levels).unwrap_or(DEFAULT_LEVELS),
        cap: merge(&flags.cap, &file.cap).unwrap_or(DEFAULT_CAP),
        g1: merge(&flags.g1, &file.g1).unwrap_or_else(|| "liouville".into()),
        g2: merge(&flags.g2, &file.g2).unwrap_or_else(|| "liouville".into()),
        g3: merge(&flags.g3, &file.g3).unwrap_or_else(|| "liouville".into()),
        shifts: merge(&flags.shifts, &file.shifts).unwrap_or_else(|| vec![0, 1, 2]),
        k: merge(&flags.k, &file.k).unwrap_or(2),
        chi: merge(&flags.chi, &file.chi).unwrap_or_else(|| "trivial".into()),
        t: merge(&flags.t, &file.t).unwrap_or(0.0),
        seed: merge(&flags.seed, &file.seed).unwrap_or(0),
        trials: merge(&flags.trials, &file.trials).unwrap_or(10_000),
        oversample: merge(&flags.oversample, &file.oversample).unwrap_or(4),
        threshold_rule: merge(&flags.threshold_rule, &file.threshold_rule)
            .map(ThresholdRule::from)
            .unwrap_or_default(),
        kind: merge(&flags.kind, &file.kind).unwrap_or_default(),
    };
    validate(&cfg, &mut violations);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { violations })
    }
}

fn validate(cfg: &RunConfig, out: &mut Vec<String>) {
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        out.push(format!("ε = {} must lie in (0, 1)", cfg.epsilon));
    }
    if cfg.a == 0 {
        out.push("a must be at least 1".into());
    }
    if cfg.h == 0 {
        out.push("h must be nonzero".into());
    }
    if cfg.big_h < 2 {
        out.push(format!("H = {} must be at least 2", cfg.big_h));
    }
    if cfg.a > 0 && !cfg.big_h.is_multiple_of(cfg.a) && cfg.command.uses_prime_window() {
        out.push(format!("H = {} must be a multiple of a = {}", cfg.big_h, cfg.a));
    }
    for (name, sel) in [("g1", &cfg.g1), ("g2", &cfg.g2), ("g3", &cfg.g3)] {
        if let Err(e) = parse_selector(sel) {
            out.push(format!("{name}: {e}"));
        }
    }
    if let Err(e) = parse_character(&cfg.chi) {
        out.push(format!("chi: {e}"));
    }
    if !cfg.t.is_finite() {
        out.push("t must be finite".into());
    }
    match cfg.command {
        CommandName::Correlate3 if cfg.shifts.len() != 3 => {
            out.push(format!("correlate3 needs exactly 3 shifts, got {}", cfg.shifts.len()));
        }
        CommandName::SignPatterns if !(1..=crate::logmeasure::MAX_PATTERN_LEN).contains(&cfg.k) => {
            out.push(format!("k = {} must lie in 1..=8", cfg.k));
        }
        CommandName::EntropyScan => {
            if cfg.h_minus < 2 {
                out.push("H₋ must be at least 2".into());
            }
            if !(cfg.c0.is_finite() && cfg.c0 > 0.0) {
                out.push("C₀ must be positive".into());
            }
            if cfg.levels == 0 {
                out.push("J must be at least 1".into());
            }
            if cfg.cap < cfg.a.saturating_mul(cfg.h_minus) {
                out.push("cap must be at least a·H₋".into());
            }
        }
        CommandName::Concentration if cfg.trials == 0 => out.push("trials must be at least 1".into()),
        CommandName::MaxExpSum if !(1..=crate::circle::MAX_OVERSAMPLE).contains(&cfg.oversample) => {
            out.push(format!("oversample = {} must lie in 1..=64", cfg.oversample));
        }
        _ => {}
    }
    if cfg.command.uses_prime_window() && cfg.epsilon > 0.0 && cfg.epsilon < 1.0 && cfg.big_h >= 2 {
        if let Err(e) = window_primes(cfg.epsilon, cfg.big_h) {
            out.push(e.to_string());
        }
    }
}

/// Parses an argument vector (program name first) and any config file it
/// names.
pub fn parse_config<I, T>(argv: I) -> Result<(RunConfig, ExecOptions), ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseFailure::Clap)?;
    let (name, inv) = cli.command.split();
    let file = match &inv.exec.config {
        Some(path) => read_config_file(path).map_err(ParseFailure::Config)?,
        None => ParamArgs::default(),
    };
    let mut cfg = resolve(name, &inv.params, &file);
    if inv.exec.threads == Some(0) {
        let mut v = cfg.err().map(|e| e.violations).unwrap_or_default();
        v.push("threads must be at least 1".into());
        cfg = Err(ConfigError { violations: v });
    }
    let cfg = cfg.map_err(ParseFailure::Config)?;
    Ok((
        cfg,
        ExecOptions {
            output: inv.exec.output,
            format: inv.exec.format,
            threads: inv.exec.threads,
            dry_run: inv.exec.dry_run,
            include_timings: inv.exec.include_timings,
        },
    ))
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(ConfigError),
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (cfg, exec) = match parse_config(argv) {
        Ok(v) => v,
        Err(ParseFailure::Clap(e)) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
        Err(ParseFailure::Config(e)) => {
            eprint!("{e}");
            return EXIT_CONFIG;
        }
    };
    if exec.dry_run {
        println!("{}", run::plan(&cfg));
        return EXIT_OK;
    }
    let report = match run::run_with(&cfg, &exec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return EXIT_RUNTIME;
        }
    };
    let bytes = match emit_report(&report, exec.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return EXIT_RUNTIME;
        }
    };
    match report::write_output(exec.output.as_deref(), &bytes) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            EXIT_RUNTIME
        }
    }
}
