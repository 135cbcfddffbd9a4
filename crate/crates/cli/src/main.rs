//! `tightwalk`: batch front end for sampling, ensembles, diagnostics and
//! oracle checks.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 configuration error, 3 oracle
//! mismatch.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{anchor, ConfigError, FamilyKind, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;
use tightwalk::assembly::EnsembleFormat;
use tightwalk::diagnostics::integrability::Mode;

#[derive(Parser, Debug)]
#[command(name = "tightwalk", version, about = "Polymer path measures built from conditioned lazy-walk excursions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Draw one path (replica 0 of the first size).
    Sample,
    /// Write seeded path ensembles for every size.
    Ensemble,
    /// Diagnostic tables.
    Diagnose {
        #[command(subcommand)]
        what: Diagnose,
    },
    /// Cross-check the exact routines against brute-force enumeration.
    Oracle,
    /// Dump the partition-function table `Z(j)`.
    Partition,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Diagnose {
    /// Quantiles of the continuity moduli over an ensemble.
    Modulus,
    /// `c_n(a)` and the truncated `C(a)`.
    COfA,
    /// `f_n(a)` and `f_n(a) (1 + a^2)`.
    Lemma,
    /// `n^{3/2} P(T = n)`.
    Ck,
    /// Exceedance frequencies of the moduli.
    Tightness,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Ensemble => "ensemble",
            Command::Diagnose { what } => match what {
                Diagnose::Modulus => "diagnose modulus",
                Diagnose::COfA => "diagnose c-of-a",
                Diagnose::Lemma => "diagnose lemma",
                Diagnose::Ck => "diagnose ck",
                Diagnose::Tightness => "diagnose tightness",
            },
            Command::Oracle => "oracle",
            Command::Partition => "partition",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FamilyArg {
    Homogeneous,
    Periodic,
    Disordered,
    Custom,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Binary,
}

/// Flags override the corresponding config fields.
#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON run configuration (a sidecar works too).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    mode: Option<ModeArg>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    family: Option<FamilyArg>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    betas: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    charges_file: Option<PathBuf>,
    #[arg(long, global = true)]
    charge_seed: Option<u64>,
    #[arg(long, global = true)]
    bulk_weights: Option<PathBuf>,
    #[arg(long, global = true)]
    final_weights: Option<PathBuf>,
    /// System sizes.
    #[arg(long = "n", global = true, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    #[arg(long, global = true)]
    batch: Option<u64>,
    #[arg(long, global = true)]
    format: Option<FormatArg>,
    #[arg(long, global = true, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    a_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Assign each excursion a fair sign.
    #[arg(long, global = true)]
    signed: bool,
    /// Add exact rational-arithmetic checks to `oracle`.
    #[arg(long, global = true)]
    rational: bool,
    /// Oracle tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

impl Flags {
    fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = &self.$flag { c.$field = v.clone(); })*
            };
        }
        set!(seed => seed, out => out, p => p, beta => beta, betas => betas, lambda => lambda,
             sizes => sizes, replicas => replicas, batch => batch, deltas => deltas, gamma => gamma,
             quantiles => quantiles, a_grid => a_grid, n_list => n_list, n_max => n_max,
             samples => samples, tolerance => tolerance);
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        if self.charges_file.is_some() {
            c.charges_file = self.charges_file.clone();
        }
        if self.charge_seed.is_some() {
            c.charge_seed = self.charge_seed;
        }
        if self.bulk_weights.is_some() {
            c.bulk_weights = self.bulk_weights.clone();
        }
        if self.final_weights.is_some() {
            c.final_weights = self.final_weights.clone();
        }
        if let Some(m) = self.mode {
            c.mode = match m {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Mc => Mode::Mc,
            };
        }
        if let Some(f) = self.family {
            c.family = match f {
                FamilyArg::Homogeneous => FamilyKind::Homogeneous,
                FamilyArg::Periodic => FamilyKind::Periodic,
                FamilyArg::Disordered => FamilyKind::Disordered,
                FamilyArg::Custom => FamilyKind::Custom,
            };
        }
        if let Some(f) = self.format {
            c.format = match f {
                FormatArg::Csv => EnsembleFormat::Csv,
                FormatArg::Binary => EnsembleFormat::Binary,
            };
        }
        c.signed |= self.signed;
        c.rational |= self.rational;
    }
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Runtime(String),
    OracleMismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
            Failure::OracleMismatch(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
            Failure::OracleMismatch(m) => write!(f, "oracle mismatch: {m}"),
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli.flags.config.as_deref();
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    cfg.sidecar = None;
    cli.flags.apply(&mut cfg);
    cfg.validate().map_err(|e| Failure::Config(anchor(e, path)))?;
    if let Some(w) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    std::fs::create_dir_all(&cfg.out).map_err(|e| Failure::Runtime(format!("{}: {e}", cfg.out.display())))?;
    commands::dispatch(cli.command, cli.command.name(), &cfg).map_err(|f| match f {
        Failure::Config(e) => Failure::Config(anchor(e, path)),
        other => other,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
