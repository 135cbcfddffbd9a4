//! Empirical tightness: exceedance frequencies of the continuity moduli
//! over seeded ensembles, and modulus quantile curves.
//!
//! Replica `r` at size `N` is the same path that `ensemble` output holds
//! for the seed `seed.child(N)`, so sweeps and stored ensembles agree.
//! All moduli are taken on `|path|`.

use super::integrability::check_grid;
use super::modulus::{Moduli, ModulusScratch};
use crate::assembly::{rescale, PolymerSampler};
use crate::contact::{ContactSetLaw, WeightFamily};
use crate::error::{invalid, Result};
use crate::excursion::KernelCache;
use crate::rng::StreamSeed;
use crate::walk::WalkParams;
use rayon::prelude::*;
use serde::Serialize;

/// A recipe for polymer samplers at any system size.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSource {
    pub walk: WalkParams,
    pub family: WeightFamily,
    pub signed: bool,
}

impl EnsembleSource {
    pub fn sampler(&self, n: usize, cache: &KernelCache) -> Result<PolymerSampler> {
        let law = ContactSetLaw::new(n, self.family.clone(), self.walk)?;
        Ok(PolymerSampler::new(law, cache).with_signs(self.signed))
    }
}

/// Per-size stream used by sweeps and ensembles.
pub fn size_seed(seed: StreamSeed, n: usize) -> StreamSeed {
    seed.child(n as u64)
}

/// Moduli of replicas `0..replicas` at every `delta`, in replica order.
pub fn ensemble_moduli(sampler: &PolymerSampler, seed: StreamSeed, replicas: u64, deltas: &[f64]) -> Result<Vec<Vec<Moduli>>> {
    (0..replicas)
        .into_par_iter()
        .map_init(ModulusScratch::default, |scratch, r| {
            let path = sampler.replica(seed, r)?.abs();
            scratch.moduli_many(&rescale(&path), deltas)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessCell {
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub gamma: f64,
    pub replicas: u64,
    /// Replicas with `Gamma(delta) > gamma`.
    pub exceed: u64,
    /// Replicas with `tilde Gamma(delta) > gamma`.
    pub exceed_modified: u64,
}

impl TightnessCell {
    pub fn exceedance(&self) -> f64 {
        self.exceed as f64 / self.replicas as f64
    }

    pub fn exceedance_modified(&self) -> f64 {
        self.exceed_modified as f64 / self.replicas as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.exceedance(), self.replicas)
    }

    pub fn stderr_modified(&self) -> f64 {
        binomial_stderr(self.exceedance_modified(), self.replicas)
    }
}

fn binomial_stderr(q: f64, k: u64) -> f64 {
    (q * (1.0 - q) / k as f64).sqrt()
}

/// Cells ordered by size, then by `delta` as given.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessGrid {
    pub cells: Vec<TightnessCell>,
}

impl TightnessGrid {
    /// `sup_N` of the exceedance at one `delta`.
    pub fn sup_exceedance(&self, delta: f64) -> f64 {
        self.cells.iter().filter(|c| c.delta == delta).map(|c| c.exceedance()).fold(0.0, f64::max)
    }

    pub fn sup_exceedance_modified(&self, delta: f64) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.delta == delta)
            .map(|c| c.exceedance_modified())
            .fold(0.0, f64::max)
    }

    pub fn row(&self, n: usize) -> Vec<&TightnessCell> {
        self.cells.iter().filter(|c| c.n == n).collect()
    }
}

/// `Q_N(Gamma(delta) > gamma)` and `Q_N(tilde Gamma(delta) > gamma)` for
/// every size and `delta`, from `replicas` paths per size.
pub fn tightness_sweep(
    source: &EnsembleSource,
    sizes: &[usize],
    deltas: &[f64],
    gamma: f64,
    replicas: u64,
    seed: StreamSeed,
) -> Result<TightnessGrid> {
    check_grid("delta", deltas)?;
    if sizes.is_empty() {
        return Err(invalid("N", "grid is empty"));
    }
    if replicas == 0 {
        return Err(invalid("replicas", "must be at least 1"));
    }
    if !gamma.is_finite() {
        return Err(invalid("gamma", "must be finite"));
    }
    let cache = KernelCache::default();
    let mut cells = Vec::with_capacity(sizes.len() * deltas.len());
    for &n in sizes {
        let sampler = source.sampler(n, &cache)?;
        let counts = (0..replicas)
            .into_par_iter()
            .map_init(ModulusScratch::default, |scratch, r| -> Result<Vec<[u64; 2]>> {
                let path = sampler.replica(size_seed(seed, n), r)?.abs();
                let m = scratch.moduli_many(&rescale(&path), deltas)?;
                Ok(m.iter().map(|m| [(m.gamma > gamma) as u64, (m.gamma_tilde > gamma) as u64]).collect())
            })
            .try_reduce(
                || vec![[0, 0]; deltas.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        x[0] += y[0];
                        x[1] += y[1];
                    }
                    Ok(a)
                },
            )?;
        for (&delta, c) in deltas.iter().zip(counts) {
            cells.push(TightnessCell {
                n,
                delta,
                gamma,
                replicas,
                exceed: c[0],
                exceed_modified: c[1],
            });
        }
    }
    Ok(TightnessGrid { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub quantile: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
}

/// Empirical quantiles of `Gamma(delta)` and `tilde Gamma(delta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusCurve {
    pub replicas: u64,
    pub rows: Vec<QuantileRow>,
}

/// Lower empirical quantile: the `ceil(q k)`-th smallest of `k` values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let k = sorted.len();
    let idx = ((q * k as f64).ceil() as usize).clamp(1, k) - 1;
    sorted[idx]
}

pub fn modulus_curve(
    source: &EnsembleSource,
    sizes: &[usize],
    deltas: &[f64],
    quantiles: &[f64],
    replicas: u64,
    seed: StreamSeed,
) -> Result<ModulusCurve> {
    check_grid("delta", deltas)?;
    check_grid("quantile", quantiles)?;
    if quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(invalid("quantile", "quantiles must lie in [0, 1]"));
    }
    if sizes.is_empty() {
        return Err(invalid("N", "grid is empty"));
    }
    if replicas == 0 {
        return Err(invalid("replicas", "must be at least 1"));
    }
    let cache = KernelCache::default();
    let mut rows = Vec::new();
    for &n in sizes {
        let sampler = source.sampler(n, &cache)?;
        let all = ensemble_moduli(&sampler, size_seed(seed, n), replicas, deltas)?;
        for (d, &delta) in deltas.iter().enumerate() {
            let mut g: Vec<f64> = all.iter().map(|m| m[d].gamma).collect();
            let mut gt: Vec<f64> = all.iter().map(|m| m[d].gamma_tilde).collect();
            g.sort_by(f64::total_cmp);
            gt.sort_by(f64::total_cmp);
            for &q in quantiles {
                rows.push(QuantileRow {
                    n,
                    delta,
                    quantile: q,
                    gamma: quantile(&g, q),
                    gamma_tilde: quantile(&gt, q),
                });
            }
        }
    }
    Ok(ModulusCurve { replicas, rows })
}
