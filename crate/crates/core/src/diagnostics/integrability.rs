//! Laws of the maximum of a bulk excursion: `c_n(a)`, `C(a)` and `f_n(a)`.
//!
//! For a bulk excursion of length `n` let `M = max_i y_i`. Then
//!
//! ```text
//! c_n(a) = E_n[(M^2 / n) 1{M^2 / n > a}],     f_n(a) = P_n(M^2 / n >= a),
//! ```
//!
//! and `C(a) = sup_n c_n(a)`, truncated at `n_max`. Both thresholds are
//! turned into integer levels for `M`, so only the law of `M` is needed.
//! It comes from a ceiling DP: the mass of length-`n` excursions confined
//! to `1..=h` is `p * v_{n-1}(1)` with `v` the walk killed outside `[1, h]`.

use crate::error::{invalid, Error, Result};
use crate::excursion::{ConditionedKernel, ExcursionKind, SurvivalTable};
use crate::rng::{domain, StreamSeed};
use crate::walk::WalkParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Largest `n` handled by the ceiling DP.
pub const EXACT_DP_LIMIT: usize = 500;

/// Smallest `h >= 0` with `h^2 >= x`.
pub fn ceil_sqrt(x: f64) -> u64 {
    if !(x > 0.0) {
        return 0;
    }
    let mut h = x.sqrt().ceil() as u64;
    while h > 0 && ((h - 1) * (h - 1)) as f64 >= x {
        h -= 1;
    }
    while ((h * h) as f64) < x {
        h += 1;
    }
    h
}

/// Smallest `h >= 0` with `h^2 > x`.
pub fn above_sqrt(x: f64) -> u64 {
    if x < 0.0 {
        return 0;
    }
    let mut h = x.sqrt().floor() as u64;
    while h > 0 && ((h - 1) * (h - 1)) as f64 > x {
        h -= 1;
    }
    while ((h * h) as f64) <= x {
        h += 1;
    }
    h
}

#[derive(Debug, Clone)]
struct MaxDistribution {
    /// `P_n(M >= h)` for `h = 0..=n/2`; tails accumulate from the top so
    /// they are exactly monotone.
    tail: Vec<f64>,
    /// `sum_{h' >= h} P_n(M = h') h'^2 / n`.
    moment_tail: Vec<f64>,
}

/// Exact law of the excursion maximum for every `n <= n_max`.
#[derive(Debug, Clone)]
pub struct MaxLaw {
    walk: WalkParams,
    n_max: usize,
    // Index n; None where the bulk event has probability zero.
    laws: Vec<Option<MaxDistribution>>,
}

impl MaxLaw {
    pub fn build(walk: &WalkParams, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(invalid("n", "n must be at least 1"));
        }
        if n_max > EXACT_DP_LIMIT {
            return Err(Error::TooLarge {
                what: "exact excursion-maximum DP",
                size: n_max,
                limit: EXACT_DP_LIMIT,
            });
        }
        let (p, r) = (walk.p(), walk.stay());
        let top = (n_max / 2).max(1);
        // confined[h][n]: mass of excursions of length n with max <= h.
        let mut confined = vec![vec![0.0; n_max + 1]; top + 1];
        let mut v = vec![0.0; top + 2];
        let mut next = vec![0.0; top + 2];
        for (h, row) in confined.iter_mut().enumerate().skip(1) {
            v.iter_mut().for_each(|x| *x = 0.0);
            next.iter_mut().for_each(|x| *x = 0.0);
            v[1] = p;
            for m in 1..n_max {
                row[m + 1] = p * v[1];
                let reach = (m + 1).min(h);
                for x in 1..=reach {
                    let right = if x < h { v[x + 1] } else { 0.0 };
                    next[x] = r * v[x] + p * (v[x - 1] + right);
                }
                std::mem::swap(&mut v, &mut next);
            }
        }
        let mut laws = vec![None; n_max + 1];
        laws[1] = Some(MaxDistribution {
            tail: vec![1.0],
            moment_tail: vec![0.0],
        });
        for (n, slot) in laws.iter_mut().enumerate().skip(2) {
            let hmax = n / 2;
            let total = confined[hmax][n];
            if !(total > 0.0) {
                continue;
            }
            let mut tail = vec![0.0; hmax + 1];
            let mut moment_tail = vec![0.0; hmax + 1];
            let (mut acc, mut macc) = (0.0, 0.0);
            for h in (1..=hmax).rev() {
                let prob = ((confined[h][n] - confined[h - 1][n]) / total).max(0.0);
                acc += prob;
                macc += prob * (h * h) as f64 / n as f64;
                tail[h] = acc;
                moment_tail[h] = macc;
            }
            tail[0] = acc;
            moment_tail[0] = macc;
            *slot = Some(MaxDistribution { tail, moment_tail });
        }
        Ok(MaxLaw {
            walk: *walk,
            n_max,
            laws,
        })
    }

    pub fn walk(&self) -> WalkParams {
        self.walk
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn law(&self, n: usize) -> Result<&MaxDistribution> {
        if n == 0 || n > self.n_max {
            return Err(invalid("n", format!("{n} outside 1..={}", self.n_max)));
        }
        self.laws[n].as_ref().ok_or(Error::NullEvent {
            kind: "bulk",
            len: n,
            p: self.walk.p(),
        })
    }

    /// `true` when the bulk excursion of length `n` has positive probability.
    pub fn is_defined(&self, n: usize) -> bool {
        n >= 1 && n <= self.n_max && self.laws[n].is_some()
    }

    /// `P_n(M >= h)`.
    pub fn tail(&self, n: usize, h: u64) -> Result<f64> {
        let law = self.law(n)?;
        Ok(law.tail.get(h as usize).copied().unwrap_or(0.0))
    }

    /// `P_n(M = h)`.
    pub fn point(&self, n: usize, h: u64) -> Result<f64> {
        let law = self.law(n)?;
        let at = |k: usize| law.tail.get(k).copied().unwrap_or(0.0);
        let h = h as usize;
        Ok(if n == 1 { (h == 0) as u8 as f64 } else { at(h) - at(h + 1) })
    }

    /// `c_n(a)`.
    pub fn c(&self, n: usize, a: f64) -> Result<f64> {
        let law = self.law(n)?;
        let h = above_sqrt(n as f64 * a) as usize;
        Ok(law.moment_tail.get(h).copied().unwrap_or(0.0))
    }

    /// `f_n(a)`.
    pub fn f(&self, n: usize, a: f64) -> Result<f64> {
        let law = self.law(n)?;
        if n == 1 {
            return Ok(if a <= 0.0 { 1.0 } else { 0.0 });
        }
        let h = ceil_sqrt(n as f64 * a) as usize;
        Ok(law.tail.get(h).copied().unwrap_or(0.0))
    }

    /// `max_{n <= n_max} c_n(a)`, skipping lengths with a null bulk event.
    /// Ties go to the smallest `n`.
    pub fn sup_c(&self, a: f64) -> SupValue {
        let mut best = SupValue {
            a,
            value: 0.0,
            argmax: 1,
            n_max: self.n_max,
        };
        for n in 1..=self.n_max {
            if let Ok(c) = self.c(n, a) {
                if c > best.value {
                    best.value = c;
                    best.argmax = n;
                }
            }
        }
        best
    }
}

/// `C(a)` truncated at `n_max`, with the length attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupValue {
    pub a: f64,
    pub value: f64,
    pub argmax: usize,
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Mc,
}

/// A value with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Samples per RNG stream in Monte Carlo mode.
const MC_CHUNK: u64 = 4096;

/// `c_n(a)` exactly, or by `samples` kernel draws seeded by `seed`.
pub fn c_of_a(walk: &WalkParams, n: usize, a: f64, mode: Mode, samples: u64, seed: u64) -> Result<Estimate> {
    match mode {
        Mode::Exact => Ok(Estimate {
            value: MaxLaw::build(walk, n)?.c(n, a)?,
            stderr: 0.0,
        }),
        Mode::Mc => {
            if n == 0 {
                return Err(invalid("n", "n must be at least 1"));
            }
            if samples < 2 {
                return Err(invalid("samples", "need at least two Monte Carlo samples"));
            }
            let table = Arc::new(SurvivalTable::build(*walk, ExcursionKind::Bulk, n));
            let kernel = ConditionedKernel::view(table, n)?;
            let chunks = samples.div_ceil(MC_CHUNK);
            let threshold = n as f64 * a;
            let parts: Vec<(f64, f64)> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = StreamSeed(seed).rng(domain::EXCURSION_MC, c);
                    let count = MC_CHUNK.min(samples - c * MC_CHUNK);
                    let mut buf = Vec::with_capacity(n);
                    let (mut s, mut s2) = (0.0, 0.0);
                    for _ in 0..count {
                        buf.clear();
                        kernel.sample_into(&mut rng, &mut buf);
                        let m = buf.iter().copied().max().unwrap_or(0);
                        let sq = (m * m) as f64;
                        let x = if sq > threshold { sq / n as f64 } else { 0.0 };
                        s += x;
                        s2 += x * x;
                    }
                    (s, s2)
                })
                .collect();
            let (s, s2) = parts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
            let k = samples as f64;
            let mean = s / k;
            let var = ((s2 / k - mean * mean) * k / (k - 1.0)).max(0.0);
            Ok(Estimate {
                value: mean,
                stderr: (var / k).sqrt(),
            })
        }
    }
}

/// Truncated `C(a)` over `n <= n_max` (exact DP).
#[allow(non_snake_case)]
pub fn C_functional(walk: &WalkParams, n_max: usize, a: f64) -> Result<SupValue> {
    Ok(MaxLaw::build(walk, n_max)?.sup_c(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaValue {
    pub f: f64,
    /// `f_n(a) (1 + a^2)`.
    pub scaled: f64,
}

/// `(f_n(a), f_n(a) (1 + a^2))`.
pub fn lemma_bound(walk: &WalkParams, n: usize, a: f64) -> Result<LemmaValue> {
    let f = MaxLaw::build(walk, n)?.f(n, a)?;
    Ok(LemmaValue {
        f,
        scaled: f * (1.0 + a * a),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CRow {
    pub n: usize,
    pub a: f64,
    pub c: f64,
}

/// `c_n(a)` for every defined `n <= n_max` and every `a`, plus the running
/// supremum `C(a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CTable {
    pub rows: Vec<CRow>,
    pub sup: Vec<SupValue>,
}

pub fn c_table(walk: &WalkParams, n_max: usize, a_grid: &[f64]) -> Result<CTable> {
    check_grid("a", a_grid)?;
    let law = MaxLaw::build(walk, n_max)?;
    let mut rows = Vec::new();
    for n in (1..=n_max).filter(|&n| law.is_defined(n)) {
        for &a in a_grid {
            rows.push(CRow { n, a, c: law.c(n, a)? });
        }
    }
    let sup = a_grid.iter().map(|&a| law.sup_c(a)).collect();
    Ok(CTable { rows, sup })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaRow {
    pub n: usize,
    pub a: f64,
    pub f: f64,
    pub scaled: f64,
}

/// `f_n(a)` over a grid, with the largest `f_n(a) (1 + a^2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaTable {
    pub rows: Vec<LemmaRow>,
    pub max_scaled: f64,
    pub argmax_n: usize,
    pub argmax_a: f64,
}

pub fn lemma_table(walk: &WalkParams, n_grid: &[usize], a_grid: &[f64]) -> Result<LemmaTable> {
    check_grid("a", a_grid)?;
    if n_grid.is_empty() {
        return Err(invalid("n", "grid is empty"));
    }
    let n_max = *n_grid.iter().max().unwrap();
    let law = MaxLaw::build(walk, n_max)?;
    let mut table = LemmaTable {
        rows: Vec::new(),
        max_scaled: 0.0,
        argmax_n: n_grid[0],
        argmax_a: a_grid[0],
    };
    for &n in n_grid.iter().filter(|&&n| law.is_defined(n)) {
        for &a in a_grid {
            let f = law.f(n, a)?;
            let scaled = f * (1.0 + a * a);
            if scaled > table.max_scaled {
                table.max_scaled = scaled;
                table.argmax_n = n;
                table.argmax_a = a;
            }
            table.rows.push(LemmaRow { n, a, f, scaled });
        }
    }
    Ok(table)
}

pub(crate) fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid(name, "grid values must be finite"));
    }
    Ok(())
}
