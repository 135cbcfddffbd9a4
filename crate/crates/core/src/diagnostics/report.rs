//! CSV tables and JSON summaries for diagnostic results.

use super::asymptotics::CkSeries;
use super::integrability::{CTable, LemmaTable};
use super::tightness::{ModulusCurve, TightnessGrid};
use crate::contact::csv_writer;
use crate::error::Result;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

/// A header row plus string cells. Floats use the shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

/// Shortest round-trip form, with an exponent for very small or large
/// magnitudes.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// A diagnostic result, tagged by kind.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsReport {
    Modulus(ModulusCurve),
    C(CTable),
    Lemma(LemmaTable),
    Ck(CkSeries),
    Tightness(TightnessGrid),
}

impl DiagnosticsReport {
    pub fn kind(&self) -> &'static str {
        match self {
            DiagnosticsReport::Modulus(_) => "modulus",
            DiagnosticsReport::C(_) => "c-of-a",
            DiagnosticsReport::Lemma(_) => "lemma",
            DiagnosticsReport::Ck(_) => "ck",
            DiagnosticsReport::Tightness(_) => "tightness",
        }
    }

    /// Named CSV tables (file stem, table).
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        match self {
            DiagnosticsReport::Modulus(c) => {
                let mut t = Table::new(&["N", "delta", "quantile", "gamma", "gamma_tilde"]);
                for r in &c.rows {
                    t.push(vec![s(r.n), float(r.delta), float(r.quantile), float(r.gamma), float(r.gamma_tilde)]);
                }
                vec![("modulus", t)]
            }
            DiagnosticsReport::C(c) => {
                let mut rows = Table::new(&["n", "a", "value"]);
                for r in &c.rows {
                    rows.push(vec![s(r.n), float(r.a), float(r.c)]);
                }
                let mut sup = Table::new(&["a", "value", "argmax_n", "n_max"]);
                for r in &c.sup {
                    sup.push(vec![float(r.a), float(r.value), s(r.argmax), s(r.n_max)]);
                }
                vec![("c_of_a", rows), ("c_sup", sup)]
            }
            DiagnosticsReport::Lemma(l) => {
                let mut t = Table::new(&["n", "a", "value", "scaled"]);
                for r in &l.rows {
                    t.push(vec![s(r.n), float(r.a), float(r.f), float(r.scaled)]);
                }
                vec![("lemma", t)]
            }
            DiagnosticsReport::Ck(c) => {
                let mut t = Table::new(&["n", "value"]);
                for r in &c.rows {
                    t.push(vec![s(r.n), float(r.value)]);
                }
                let mut d = Table::new(&["n", "ratio"]);
                for r in &c.doublings {
                    d.push(vec![s(r.n), float(r.ratio)]);
                }
                vec![("ck", t), ("ck_doublings", d)]
            }
            DiagnosticsReport::Tightness(g) => {
                let header = ["N", "delta", "gamma", "exceedance", "stderr"];
                let mut plain = Table::new(&header);
                let mut modified = Table::new(&header);
                for c in &g.cells {
                    plain.push(vec![s(c.n), float(c.delta), float(c.gamma), float(c.exceedance()), float(c.stderr())]);
                    modified.push(vec![
                        s(c.n),
                        float(c.delta),
                        float(c.gamma),
                        float(c.exceedance_modified()),
                        float(c.stderr_modified()),
                    ]);
                }
                vec![("tightness", plain), ("tightness_modified", modified)]
            }
        }
    }

    /// Argmax and size metadata.
    pub fn summary(&self) -> Value {
        match self {
            DiagnosticsReport::Modulus(c) => json!({ "kind": self.kind(), "replicas": c.replicas }),
            DiagnosticsReport::C(c) => json!({
                "kind": self.kind(),
                "sup": c.sup,
                "note": "supremum over n is truncated at n_max",
            }),
            DiagnosticsReport::Lemma(l) => json!({
                "kind": self.kind(),
                "max_scaled": l.max_scaled,
                "argmax_n": l.argmax_n,
                "argmax_a": l.argmax_a,
            }),
            DiagnosticsReport::Ck(c) => json!({ "kind": self.kind(), "doublings": c.doublings }),
            DiagnosticsReport::Tightness(g) => {
                let mut deltas: Vec<f64> = Vec::new();
                for c in &g.cells {
                    if !deltas.contains(&c.delta) {
                        deltas.push(c.delta);
                    }
                }
                let sup: Vec<Value> = deltas
                    .iter()
                    .map(|&d| json!({ "delta": d, "sup_exceedance": g.sup_exceedance(d), "sup_exceedance_modified": g.sup_exceedance_modified(d) }))
                    .collect();
                json!({ "kind": self.kind(), "sup_over_N": sup })
            }
        }
    }
}
