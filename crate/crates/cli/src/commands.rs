//! Command bodies. Each output file `x` gets a sidecar `x.json` holding
//! the resolved config, so `--config x.json` reruns the same command.

use crate::config::{ConfigError, RunConfig};
use crate::{Command, Diagnose, Failure};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use tightwalk::assembly::{write_ensemble, EnsembleFormat, EnsembleMetadata};
use tightwalk::diagnostics::integrability::{c_of_a, c_table, lemma_table, Mode};
use tightwalk::diagnostics::report::{float, DiagnosticsReport, Table};
use tightwalk::diagnostics::tightness::size_seed;
use tightwalk::diagnostics::{ck_series, modulus_curve, tightness_sweep};
use tightwalk::oracle::run_oracle;
use tightwalk::{ContactSetLaw, Error, KernelCache, StreamSeed};

/// Maps library errors: parameter and size problems are config errors
/// blamed on `field`, the rest are runtime failures.
fn lib(field: &'static str) -> impl Fn(Error) -> Failure {
    move |e| match e {
        Error::InvalidParameter { name, reason } => Failure::Config(ConfigError {
            file: None,
            line: None,
            field: name.to_owned(),
            message: reason,
        }),
        Error::TooLarge { .. } | Error::DegenerateLaw | Error::LengthMismatch { .. } => Failure::Config(ConfigError {
            file: None,
            line: None,
            field: field.to_owned(),
            message: e.to_string(),
        }),
        other => Failure::Runtime(other.to_string()),
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

struct Outputs<'a> {
    cfg: &'a RunConfig,
    command: &'static str,
}

impl Outputs<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn sidecar(&self, file: &Path, summary: Value) -> Result<(), Failure> {
        let mut cfg = self.cfg.clone();
        cfg.sidecar = Some(json!({
            "command": self.command,
            "file": file.file_name().map(|f| f.to_string_lossy().into_owned()),
            "version": env!("CARGO_PKG_VERSION"),
            "summary": summary,
        }));
        let mut text = serde_json::to_string_pretty(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
        text.push('\n');
        let side = PathBuf::from(format!("{}.json", file.display()));
        std::fs::write(&side, text).map_err(io(&side))
    }

    fn table(&self, stem: &str, table: &Table, summary: Value) -> Result<(), Failure> {
        let file = self.path(&format!("{stem}.csv"));
        table.save(&file).map_err(|e| Failure::Runtime(format!("{}: {e}", file.display())))?;
        self.sidecar(&file, summary)
    }

    fn report(&self, report: &DiagnosticsReport) -> Result<(), Failure> {
        let summary = report.summary();
        for (stem, table) in report.tables() {
            self.table(stem, &table, summary.clone())?;
        }
        Ok(())
    }
}

pub fn dispatch(command: Command, name: &'static str, cfg: &RunConfig) -> Result<(), Failure> {
    let out = Outputs { cfg, command: name };
    let walk = cfg.walk().map_err(Failure::Config)?;
    match command {
        Command::Sample => sample(&out),
        Command::Ensemble => ensemble(&out),
        Command::Oracle => oracle(&out),
        Command::Partition => partition(&out),
        Command::Diagnose { what } => {
            let report = match what {
                Diagnose::Modulus => DiagnosticsReport::Modulus(
                    modulus_curve(&source(cfg)?, &cfg.sizes, &cfg.deltas, &cfg.quantiles, cfg.replicas, StreamSeed(cfg.seed))
                        .map_err(lib("N"))?,
                ),
                Diagnose::COfA => match cfg.mode {
                    Mode::Exact => DiagnosticsReport::C(c_table(&walk, cfg.n_max, &cfg.a_grid).map_err(lib("n_max"))?),
                    Mode::Mc => return c_of_a_mc(&out),
                },
                Diagnose::Lemma => {
                    let ns: Vec<usize> = (2..=cfg.n_max).collect();
                    if ns.is_empty() {
                        return Err(lib("n_max")(tightwalk::Error::InvalidParameter {
                            name: "n_max",
                            reason: "the lemma table needs n_max >= 2".into(),
                        }));
                    }
                    DiagnosticsReport::Lemma(lemma_table(&walk, &ns, &cfg.a_grid).map_err(lib("n_max"))?)
                }
                Diagnose::Ck => DiagnosticsReport::Ck(ck_series(&walk, &cfg.n_list).map_err(lib("n_list"))?),
                Diagnose::Tightness => DiagnosticsReport::Tightness(
                    tightness_sweep(&source(cfg)?, &cfg.sizes, &cfg.deltas, cfg.gamma, cfg.replicas, StreamSeed(cfg.seed))
                        .map_err(lib("N"))?,
                ),
            };
            out.report(&report)
        }
    }
}

fn source(cfg: &RunConfig) -> Result<tightwalk::diagnostics::EnsembleSource, Failure> {
    cfg.source().map_err(Failure::Config)
}

fn sample(out: &Outputs) -> Result<(), Failure> {
    let cfg = out.cfg;
    let n = cfg.sizes[0];
    let sampler = source(cfg)?.sampler(n, &KernelCache::default()).map_err(lib("N"))?;
    let path = sampler.replica(size_seed(StreamSeed(cfg.seed), n), 0).map_err(lib("N"))?;
    let line: Vec<String> = path.values().iter().map(|v| v.to_string()).collect();
    println!("{}", line.join(","));
    let mut t = Table {
        header: vec!["i".into(), "y".into()],
        rows: Vec::new(),
    };
    t.rows.push(vec!["0".into(), "0".into()]);
    for (i, v) in path.values().iter().enumerate() {
        t.rows.push(vec![(i + 1).to_string(), v.to_string()]);
    }
    out.table(&format!("sample_N{n}"), &t, json!({ "N": n, "replica": 0 }))
}

fn ensemble(out: &Outputs) -> Result<(), Failure> {
    let cfg = out.cfg;
    let src = source(cfg)?;
    let cache = KernelCache::default();
    for &n in &cfg.sizes {
        let sampler = src.sampler(n, &cache).map_err(lib("N"))?;
        let ext = match cfg.format {
            EnsembleFormat::Csv => "csv",
            EnsembleFormat::Binary => "bin",
        };
        let file = out.path(&format!("ensemble_N{n}.{ext}"));
        let f = std::fs::File::create(&file).map_err(io(&file))?;
        let seed = size_seed(StreamSeed(cfg.seed), n);
        write_ensemble(&sampler, seed, cfg.replicas, cfg.batch, cfg.format, f).map_err(lib("N"))?;
        let meta = EnsembleMetadata::describe(&sampler, cfg.seed, cfg.replicas, cfg.format);
        out.sidecar(&file, serde_json::to_value(meta).map_err(|e| Failure::Runtime(e.to_string()))?)?;
    }
    Ok(())
}

fn c_of_a_mc(out: &Outputs) -> Result<(), Failure> {
    let cfg = out.cfg;
    let walk = cfg.walk().map_err(Failure::Config)?;
    let mut t = Table {
        header: ["n", "a", "value", "stderr"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    for &n in &cfg.n_list {
        for (j, &a) in cfg.a_grid.iter().enumerate() {
            // One stream family per (n, a) cell.
            let seed = StreamSeed(cfg.seed).child(n as u64).child(j as u64).0;
            let e = c_of_a(&walk, n, a, Mode::Mc, cfg.samples, seed).map_err(lib("n_list"))?;
            t.rows.push(vec![n.to_string(), float(a), float(e.value), float(e.stderr)]);
        }
    }
    out.table("c_of_a", &t, json!({ "kind": "c-of-a", "mode": "mc", "samples": cfg.samples }))
}

fn oracle(out: &Outputs) -> Result<(), Failure> {
    let cfg = out.cfg;
    let src = source(cfg)?;
    let mut t = Table {
        header: ["N", "check", "max_deviation", "tolerance", "passed"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    let mut failed = Vec::new();
    let mut reports = Vec::new();
    for &n in &cfg.sizes {
        let law = ContactSetLaw::new(n, src.family.clone(), src.walk).map_err(lib("N"))?;
        let report = run_oracle(&law, cfg.rational).map_err(lib("N"))?.with_tolerance(cfg.tolerance);
        for c in &report.checks {
            t.rows.push(vec![
                n.to_string(),
                c.name.clone(),
                float(c.max_deviation),
                float(c.tolerance),
                c.passed.to_string(),
            ]);
            if !c.passed {
                failed.push(format!("N={n} {}: deviation {} > {}", c.name, c.max_deviation, c.tolerance));
            }
        }
        let status = if report.passed() { "pass" } else { "FAIL" };
        println!("N={n} p={} {status} max_deviation={}", report.p, float(report.max_deviation()));
        reports.push(report);
    }
    out.table("oracle", &t, json!({ "kind": "oracle", "reports": reports }))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::OracleMismatch(failed.join("; ")))
    }
}

fn partition(out: &Outputs) -> Result<(), Failure> {
    let cfg = out.cfg;
    let src = source(cfg)?;
    for &n in &cfg.sizes {
        let law = ContactSetLaw::new(n, src.family.clone(), src.walk).map_err(lib("N"))?;
        let part = law.partition();
        let mut t = Table {
            header: ["j", "z", "log_z"].map(String::from).to_vec(),
            rows: Vec::new(),
        };
        for j in 0..=n {
            t.rows.push(vec![j.to_string(), float(part.z(j)), float(part.log_z(j))]);
        }
        let summary = json!({
            "N": n,
            "Z_N": part.total(),
            "log_Z_N": part.log_total(),
            "log_space": part.is_log_space(),
        });
        out.table(&format!("partition_N{n}"), &t, summary)?;
    }
    std::io::stdout().flush().ok();
    Ok(())
}
