//! Moduli of continuity of a rescaled path.
//!
//! `Gamma(delta) = sup{|X_t - X_s| : |t - s| <= delta}` and the modified
//! modulus, which only compares times inside one excursion block (between
//! consecutive zeros, or from the last zero to 1).
//!
//! Both are computed exactly on integer heights. On each grid cell the
//! difference `X_t - X_s` is affine, so the supremum is attained either at
//! two grid points or at a grid point paired with the point exactly
//! `delta` away.

use crate::assembly::RescaledPath;
use crate::error::{invalid, Result};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moduli {
    pub gamma: f64,
    pub gamma_tilde: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} is not in (0, 1]")));
    }
    Ok(())
}

/// Grid blocks `[a, b]` between consecutive zeros, plus `[last zero, N]`
/// when the path does not end at zero.
pub fn excursion_blocks(heights: &[i64]) -> Vec<(usize, usize)> {
    let n = heights.len() - 1;
    let mut blocks = Vec::new();
    let mut last = 0;
    for (i, &y) in heights.iter().enumerate().skip(1) {
        if y == 0 {
            if i > last + 1 {
                blocks.push((last, i));
            }
            last = i;
        }
    }
    if last < n {
        blocks.push((last, n));
    }
    blocks
}

/// Reusable deques for the sliding-window extrema.
#[derive(Debug, Default)]
pub struct ModulusScratch {
    maxq: VecDeque<usize>,
    minq: VecDeque<usize>,
}

impl ModulusScratch {
    /// Largest `|x(t) - x(s)|`, in lattice units, over `s <= t <= s + w`
    /// inside one block `[a, b]` of grid indices.
    pub fn block_oscillation(&mut self, y: &[i64], (a, b): (usize, usize), w: f64) -> f64 {
        let whole = w.floor();
        let f = w - whole;
        let span = b - a;
        let wi = if whole >= span as f64 { span } else { whole as usize };
        let (maxq, minq) = (&mut self.maxq, &mut self.minq);
        maxq.clear();
        minq.clear();
        let mut best = 0i64;
        let mut next = a;
        for i in a..=b {
            let right = (i + wi).min(b);
            while next <= right {
                while maxq.back().is_some_and(|&k| y[k] <= y[next]) {
                    maxq.pop_back();
                }
                maxq.push_back(next);
                while minq.back().is_some_and(|&k| y[k] >= y[next]) {
                    minq.pop_back();
                }
                minq.push_back(next);
                next += 1;
            }
            while maxq.front().is_some_and(|&k| k < i) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&k| k < i) {
                minq.pop_front();
            }
            let hi = y[*maxq.front().unwrap()];
            let lo = y[*minq.front().unwrap()];
            best = best.max(hi - y[i]).max(y[i] - lo);
        }
        let mut best = best as f64;
        if f > 0.0 && wi == whole as usize && a + wi < b {
            for i in a..b - wi {
                let k = i + wi;
                let fwd = (y[k] - y[i]) as f64 + f * (y[k + 1] - y[k]) as f64;
                let j = k + 1;
                let bwd = (y[j] - y[i + 1]) as f64 + f * (y[i + 1] - y[i]) as f64;
                best = best.max(fwd.abs()).max(bwd.abs());
            }
        }
        best
    }

    fn oscillation(&mut self, y: &[i64], blocks: &[(usize, usize)], w: f64) -> f64 {
        blocks.iter().fold(0.0, |m, &b| m.max(self.block_oscillation(y, b, w)))
    }

    pub fn moduli(&mut self, path: &RescaledPath, delta: f64) -> Result<Moduli> {
        Ok(self.moduli_many(path, &[delta])?[0])
    }

    /// Both moduli for each `delta`, sharing the block decomposition.
    pub fn moduli_many(&mut self, path: &RescaledPath, deltas: &[f64]) -> Result<Vec<Moduli>> {
        deltas.iter().try_for_each(|&d| check_delta(d))?;
        let y = path.heights();
        let n = path.n();
        let whole = [(0, n)];
        let blocks = excursion_blocks(y);
        let scale = path.sqrt_n();
        Ok(deltas
            .iter()
            .map(|&d| {
                let w = d * n as f64;
                Moduli {
                    gamma: self.oscillation(y, &whole, w) / scale,
                    gamma_tilde: self.oscillation(y, &blocks, w) / scale,
                }
            })
            .collect())
    }
}

/// `Gamma_N(delta)`.
pub fn modulus(path: &RescaledPath, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let w = delta * path.n() as f64;
    Ok(ModulusScratch::default().oscillation(path.heights(), &[(0, path.n())], w) / path.sqrt_n())
}

/// `tilde Gamma_N(delta)`.
pub fn modified_modulus(path: &RescaledPath, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let w = delta * path.n() as f64;
    let y = path.heights();
    Ok(ModulusScratch::default().oscillation(y, &excursion_blocks(y), w) / path.sqrt_n())
}

pub fn moduli(path: &RescaledPath, deltas: &[f64]) -> Result<Vec<Moduli>> {
    ModulusScratch::default().moduli_many(path, deltas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::rescale;
    use crate::walk::LatticePath;

    fn path(v: &[i64]) -> RescaledPath {
        rescale(&LatticePath::new(v.to_vec()).unwrap())
    }

    /// Dense scan of pairs on a fine time grid containing every candidate.
    fn scan(x: &RescaledPath, delta: f64, blocks: &[(usize, usize)]) -> f64 {
        let n = x.n() as f64;
        let steps = 64 * x.n();
        let mut best: f64 = 0.0;
        for &(a, b) in blocks {
            let (ta, tb) = (a as f64 / n, b as f64 / n);
            let lo = (ta * steps as f64).round() as usize;
            let hi = (tb * steps as f64).round() as usize;
            for i in lo..=hi {
                let s = i as f64 / steps as f64;
                let mut ts: Vec<f64> = (i..=hi).map(|k| k as f64 / steps as f64).filter(|t| t - s <= delta).collect();
                if s + delta <= tb {
                    ts.push(s + delta);
                }
                if s - delta >= ta {
                    best = best.max((x.eval(s).unwrap() - x.eval(s - delta).unwrap()).abs());
                }
                let xs = x.eval(s).unwrap();
                for t in ts {
                    best = best.max((x.eval(t).unwrap() - xs).abs());
                }
            }
        }
        best
    }

    #[test]
    fn small_examples() {
        let x = path(&[1, 0]);
        assert!((modulus(&x, 0.5).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let x = path(&[1, 2, 1, 0]);
        assert!((modulus(&x, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((modulus(&x, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let x = path(&[0, 0, 0]);
        assert_eq!(modulus(&x, 0.7).unwrap(), 0.0);
        assert!(modulus(&x, 0.0).is_err());
        assert!(modulus(&x, -1.0).is_err());
    }

    #[test]
    fn fractional_window() {
        // Window of 1.5 steps: the best pair is (0.5, 2) in grid time.
        let x = path(&[0, 1, 2, 2]);
        let g = modulus(&x, 1.5 / 4.0).unwrap();
        assert!((g - 1.5 / 2.0).abs() < 1e-15, "{g}");
    }

    #[test]
    fn blocks() {
        assert_eq!(excursion_blocks(&[0, 1, 0, 0, 1, 2]), vec![(0, 2), (3, 5)]);
        assert_eq!(excursion_blocks(&[0, 0, 0]), vec![]);
        assert_eq!(excursion_blocks(&[0, -1, 0]), vec![(0, 2)]);
    }

    #[test]
    fn modified_ignores_cross_block_pairs() {
        // Two tall excursions separated by a zero: crossing pairs are excluded.
        let x = path(&[1, 2, 1, 0, 1, 2, 1, 0]);
        let d = 4.0 / 8.0;
        let g = modulus(&x, d).unwrap();
        let gt = modified_modulus(&x, d).unwrap();
        assert!(gt <= g);
        let x2 = path(&[1, 0, 0, -1]);
        assert!((modified_modulus(&x2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((modulus(&x2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let x3 = path(&[1, 0, 1, 0]);
        assert!((modified_modulus(&x3, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((modulus(&x3, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_dense_scan() {
        let cases: [&[i64]; 4] = [&[1, 2, 1, 1, 0, -1, 0, 1], &[0, 1, 1, 2, 3, 2, 1], &[-1, -2, -1, 0, 1, 0], &[1, 0, 1, 2, 1, 0, 0, 1, 2]];
        for v in cases {
            let x = path(v);
            for d in [0.1, 0.2, 0.3, 0.45, 0.7, 1.0] {
                let g = modulus(&x, d).unwrap();
                let want = scan(&x, d, &[(0, x.n())]);
                assert!((g - want).abs() < 1e-12, "{v:?} {d}: {g} vs {want}");
                let gt = modified_modulus(&x, d).unwrap();
                let want = scan(&x, d, &excursion_blocks(x.heights()));
                assert!((gt - want).abs() < 1e-12, "{v:?} {d}: {gt} vs {want}");
            }
        }
    }
}
