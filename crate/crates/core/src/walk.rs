//! Exact finite-horizon computations for the lazy symmetric walk.
//!
//! The walk steps `+1` and `-1` with probability `p` each and stays put with
//! probability `1 - 2p`. Everything here is a forward dynamic program over an
//! explicit lattice slice, so values are exact up to double rounding; the
//! [`exact`] submodule repeats the identities in rational arithmetic for
//! short horizons.

pub mod exact;

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Law of the lazy symmetric walk, identified by the up-step probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWalkParams", into = "RawWalkParams")]
pub struct WalkParams {
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct RawWalkParams {
    p: f64,
}

impl TryFrom<RawWalkParams> for WalkParams {
    type Error = Error;
    fn try_from(raw: RawWalkParams) -> Result<Self> {
        WalkParams::new(raw.p)
    }
}

impl From<WalkParams> for RawWalkParams {
    fn from(w: WalkParams) -> Self {
        RawWalkParams { p: w.p }
    }
}

impl WalkParams {
    /// `p` must lie in `(0, 1/2]`.
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(invalid("p", format!("{p} is outside (0, 1/2]")));
        }
        Ok(WalkParams { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Probability of the zero step, `1 - 2p`.
    pub fn stay(&self) -> f64 {
        1.0 - 2.0 * self.p
    }

    /// One-step variance `2p`.
    pub fn variance(&self) -> f64 {
        2.0 * self.p
    }

    /// One-step standard deviation `sqrt(2p)`.
    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `p = 1/2` gives a period-2 walk that never stays put.
    pub fn is_periodic(&self) -> bool {
        self.stay() == 0.0
    }

    pub fn step_distribution(&self) -> StepDistribution {
        StepDistribution {
            down: self.p,
            stay: self.stay(),
            up: self.p,
        }
    }

    /// Probability of the increment `delta`; zero outside `{-1, 0, 1}`.
    #[inline]
    pub fn step_prob(&self, delta: i64) -> f64 {
        match delta {
            -1 | 1 => self.p,
            0 => self.stay(),
            _ => 0.0,
        }
    }
}

/// Probabilities of the increments `-1`, `0`, `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDistribution {
    pub down: f64,
    pub stay: f64,
    pub up: f64,
}

impl StepDistribution {
    pub fn get(&self, delta: i64) -> f64 {
        match delta {
            -1 => self.down,
            0 => self.stay,
            1 => self.up,
            _ => 0.0,
        }
    }

    /// `(increment, probability)` pairs in increasing increment order.
    pub fn entries(&self) -> [(i64, f64); 3] {
        [(-1, self.down), (0, self.stay), (1, self.up)]
    }

    pub fn total(&self) -> f64 {
        self.down + self.stay + self.up
    }
}

pub fn step_distribution(params: &WalkParams) -> StepDistribution {
    params.step_distribution()
}

/// Integer path `(y_1, ..., y_N)` with `y_0 = 0` implied and unit increments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePath {
    values: Vec<i64>,
}

impl LatticePath {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        let mut prev = 0i64;
        for (i, &y) in values.iter().enumerate() {
            if (y - prev).abs() > 1 {
                return Err(Error::InvalidPath(format!(
                    "increment {} at position {} is not in {{-1, 0, 1}}",
                    y - prev,
                    i + 1
                )));
            }
            prev = y;
        }
        Ok(LatticePath { values })
    }

    /// Path obtained by summing increments.
    pub fn from_steps(steps: &[i64]) -> Result<Self> {
        let values = steps
            .iter()
            .scan(0i64, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        Self::new(values)
    }

    pub(crate) fn from_values_unchecked(values: Vec<i64>) -> Self {
        debug_assert!(Self::new(values.clone()).is_ok());
        LatticePath { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(y_1, ..., y_N)`.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i64> {
        self.values
    }

    /// Height at time `i`, with `height(0) == 0`.
    pub fn height(&self, i: usize) -> i64 {
        if i == 0 {
            0
        } else {
            self.values[i - 1]
        }
    }

    /// The zero level set `{l in 1..=N : y_l = 0}`.
    pub fn zero_set(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == 0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn abs(&self) -> LatticePath {
        LatticePath {
            values: self.values.iter().map(|y| y.abs()).collect(),
        }
    }

    pub fn max_abs(&self) -> i64 {
        self.values.iter().map(|y| y.abs()).max().unwrap_or(0)
    }
}

/// Distribution of `S_k` on the slice `[-k, k]`.
#[derive(Debug, Clone)]
pub struct PmfRow {
    k: usize,
    probs: Vec<f64>,
}

impl PmfRow {
    pub fn horizon(&self) -> usize {
        self.k
    }

    /// `P(S_k = b)`, zero when `|b| > k`.
    pub fn get(&self, b: i64) -> f64 {
        let k = self.k as i64;
        if b.abs() > k {
            0.0
        } else {
            self.probs[(b + k) as usize]
        }
    }

    /// `(b, P(S_k = b))` for `b` in `-k..=k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k = self.k as i64;
        self.probs.iter().enumerate().map(move |(i, &q)| (i as i64 - k, q))
    }

    /// Compensated sum of the row.
    pub fn total(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &q in &self.probs {
            let t = sum + q;
            comp += if sum.abs() >= q.abs() { (sum - t) + q } else { (q - t) + sum };
            sum = t;
        }
        sum + comp
    }
}

/// Forward DP for the law of `S_k`.
///
/// Each step adds `p` times the discrete Laplacian, which conserves mass
/// exactly in real arithmetic; `r * x + p * (y + z)` would not, since
/// `r + 2p` is not exactly one in floating point.
pub fn pmf_row(params: &WalkParams, k: usize) -> PmfRow {
    let p = params.p();
    let width = 2 * k + 1;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[k] = 1.0;
    // After m steps the support is [k - m, k + m].
    for m in 0..k {
        let lo = k - m;
        let hi = k + m;
        for x in (lo - 1)..=(hi + 1) {
            let left = if x >= 1 && x > lo { cur[x - 1] } else { 0.0 };
            let mid = if x >= lo && x <= hi { cur[x] } else { 0.0 };
            let right = if x < hi { cur[x + 1] } else { 0.0 };
            next[x] = mid + p * ((left - mid) + (right - mid));
        }
        std::mem::swap(&mut cur, &mut next);
    }
    PmfRow { k, probs: cur }
}

/// `P(S_k = b)`.
pub fn exact_pmf(params: &WalkParams, k: usize, b: i64) -> f64 {
    if b.unsigned_abs() > k as u64 {
        return 0.0;
    }
    pmf_row(params, k).get(b)
}

/// `P(S_m = x, T > m)` for `x` in `0..=m` (index 0 is always zero), where
/// `T = inf{m > 0 : S_m <= 0}`.
pub fn survival_row(params: &WalkParams, m: usize) -> Vec<f64> {
    let mut state = AbsorbingWalk::new(*params);
    for _ in 0..m {
        state.advance();
    }
    let mut row = state.mass;
    row.resize(m + 1, 0.0);
    row
}

/// The walk killed on entering `(-inf, 0]`, advanced one step at a time.
struct AbsorbingWalk {
    params: WalkParams,
    steps: usize,
    // mass[x] = P(S_steps = x, T > steps) for x >= 1; mass[0] unused.
    mass: Vec<f64>,
    scratch: Vec<f64>,
}

impl AbsorbingWalk {
    fn new(params: WalkParams) -> Self {
        AbsorbingWalk {
            params,
            steps: 0,
            mass: vec![0.0],
            scratch: Vec::new(),
        }
    }

    /// Advances one step and returns the mass absorbed at this step,
    /// i.e. `P(T = steps)` after the increment.
    fn advance(&mut self) -> f64 {
        let (p, r) = (self.params.p(), self.params.stay());
        self.steps += 1;
        if self.steps == 1 {
            self.mass = vec![0.0, p];
            return 1.0 - p;
        }
        let len = self.mass.len();
        self.scratch.clear();
        self.scratch.resize(len + 1, 0.0);
        for x in 1..=len {
            let left = if x >= 2 { self.mass[x - 1] } else { 0.0 };
            let mid = if x < len { self.mass[x] } else { 0.0 };
            let right = if x + 1 < len { self.mass[x + 1] } else { 0.0 };
            self.scratch[x] = r * mid + p * (left + right);
        }
        let absorbed = p * self.mass[1];
        std::mem::swap(&mut self.mass, &mut self.scratch);
        while self.mass.len() > 2 && *self.mass.last().unwrap() == 0.0 {
            self.mass.pop();
        }
        absorbed
    }

    /// `P(T > steps)`.
    fn alive(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            self.mass.iter().sum()
        }
    }
}

/// `P(T = n)` and `P(T > n)` for `n` in `0..=n_max`, from one absorbing DP
/// pass. `P(T > n)` is summed from the surviving mass, not obtained by
/// complement.
pub fn first_passage_tables(params: &WalkParams, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut first = vec![0.0; n_max + 1];
    let mut alive = vec![1.0; n_max + 1];
    let mut walk = AbsorbingWalk::new(*params);
    for n in 1..=n_max {
        first[n] = walk.advance();
        alive[n] = walk.alive();
    }
    (first, alive)
}

/// `P(T = n)` for `n` in `0..=n_max` (entry 0 is zero), from one absorbing
/// DP pass.
pub fn first_passage_series(params: &WalkParams, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let mut walk = AbsorbingWalk::new(*params);
    for slot in out.iter_mut().skip(1) {
        *slot = walk.advance();
    }
    out
}

/// `P(T = n)` with `T = inf{m > 0 : S_m <= 0}`, by absorbing DP.
pub fn first_passage_pmf(params: &WalkParams, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "first-passage horizon must be at least 1"));
    }
    Ok(first_passage_series(params, n)[n])
}

/// `P(T = n) = p^2 [P(S_{n-2} = 0) - P(S_{n-2} = 2)]` by reflection.
pub fn reflection_first_passage(params: &WalkParams, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "the reflection formula needs n >= 2"));
    }
    let row = pmf_row(params, n - 2);
    let p = params.p();
    Ok(p * p * (row.get(0) - row.get(2)))
}

/// `P(S_m = b, T > m) = p [P(S_{m-1} = b - 1) - P(S_{m-1} = b + 1)]` by
/// reflection.
pub fn pinned_positive_pmf(params: &WalkParams, m: usize, b: i64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "horizon must be at least 1"));
    }
    if b <= 0 {
        return Err(invalid("b", "endpoint must be positive"));
    }
    let row = pmf_row(params, m - 1);
    Ok(params.p() * (row.get(b - 1) - row.get(b + 1)))
}

/// `P(S_m = b, T > m)` read off the absorbing DP.
pub fn pinned_positive_dp(params: &WalkParams, m: usize, b: i64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "horizon must be at least 1"));
    }
    if b <= 0 {
        return Err(invalid("b", "endpoint must be positive"));
    }
    let row = survival_row(params, m);
    Ok(row.get(b as usize).copied().unwrap_or(0.0))
}

/// Probability that the walk started at 1 reaches `barrier` before 0.
///
/// Solves the harmonic system `h(x) = E[h(x + step)]` on `1..barrier` with
/// `h(0) = 0`, `h(barrier) = 1` by the tridiagonal (Thomas) algorithm.
pub fn ruin_probability(params: &WalkParams, barrier: i64) -> Result<f64> {
    if barrier < 1 {
        return Err(invalid("b", "barrier must be at least 1"));
    }
    if barrier == 1 {
        return Ok(1.0);
    }
    let p = params.p();
    let diag = 1.0 - params.stay();
    let n = (barrier - 1) as usize;
    // -p h(x-1) + (1 - r) h(x) - p h(x+1) = rhs(x), rhs(n) = p * h(barrier).
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 0..n {
        let lower = if i == 0 { 0.0 } else { -p };
        let upper = -p;
        let rhs = if i == n - 1 { p } else { 0.0 };
        let denom = diag - lower * if i == 0 { 0.0 } else { c_prime[i - 1] };
        c_prime[i] = if i == n - 1 { 0.0 } else { upper / denom };
        d_prime[i] = (rhs - lower * if i == 0 { 0.0 } else { d_prime[i - 1] }) / denom;
    }
    let mut h = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        h = d_prime[i] - c_prime[i] * h;
    }
    Ok(h)
}

/// Largest deviation between the rescaled pmf and the Gaussian density,
/// `max_b |sigma sqrt(k) P(S_k = b) - phi(b / (sigma sqrt(k)))|`.
///
/// At `p = 1/2` half of the sites are parity-forbidden and the deviation
/// stays of order `phi(0)`; the value is still finite.
pub fn local_clt_deviation(params: &WalkParams, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "horizon must be at least 1"));
    }
    let row = pmf_row(params, k);
    let scale = params.sigma() * (k as f64).sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    Ok(row
        .iter()
        .map(|(b, q)| {
            let z = b as f64 / scale;
            (scale * q - norm * (-0.5 * z * z).exp()).abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(p: f64) -> WalkParams {
        WalkParams::new(p).unwrap()
    }

    #[test]
    fn step_distribution_examples() {
        let d = step_distribution(&w(0.3));
        assert_eq!((d.up, d.stay, d.down), (0.3, 1.0 - 0.6, 0.3));
        assert!((d.total() - 1.0).abs() <= f64::EPSILON);
        let d = step_distribution(&w(0.5));
        assert_eq!((d.up, d.stay, d.down), (0.5, 0.0, 0.5));
        assert_eq!(d.total(), 1.0);
        for bad in [0.6, 0.0, -0.1, f64::NAN] {
            assert!(WalkParams::new(bad).is_err());
        }
    }

    #[test]
    fn sigma_matches_step_variance() {
        for p in [0.05, 0.3, 0.5] {
            let d = w(p).step_distribution();
            let var: f64 = d.entries().iter().map(|(x, q)| (x * x) as f64 * q).sum();
            assert!((w(p).sigma().powi(2) - var).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_examples() {
        let p = w(0.3);
        assert!((exact_pmf(&p, 1, 1) - 0.3).abs() < 1e-15);
        assert!((exact_pmf(&p, 2, 0) - 0.34).abs() < 1e-15);
        assert!((exact_pmf(&p, 2, 2) - 0.09).abs() < 1e-15);
        assert_eq!(exact_pmf(&p, 2, 3), 0.0);
        assert_eq!(exact_pmf(&p, 0, 0), 1.0);
    }

    #[test]
    fn pmf_normalized_at_long_horizon() {
        for p in [0.1, 0.3, 0.5] {
            let row = pmf_row(&w(p), 10_000);
            assert!((row.total() - 1.0).abs() < 1e-14, "p={p}: {}", row.total() - 1.0);
        }
    }

    #[test]
    fn first_passage_examples() {
        let p = w(0.3);
        assert!((first_passage_pmf(&p, 1).unwrap() - 0.7).abs() < 1e-15);
        assert!((first_passage_pmf(&p, 2).unwrap() - 0.09).abs() < 1e-15);
        assert!((first_passage_pmf(&p, 3).unwrap() - 0.036).abs() < 1e-15);
        assert!(first_passage_pmf(&p, 0).is_err());
        assert!((reflection_first_passage(&p, 2).unwrap() - 0.09).abs() < 1e-15);
        assert!((reflection_first_passage(&p, 3).unwrap() - 0.036).abs() < 1e-15);
        assert!((reflection_first_passage(&w(0.45), 2).unwrap() - 0.2025).abs() < 1e-15);
        assert!(reflection_first_passage(&p, 1).is_err());
    }

    #[test]
    fn pinned_positive_examples() {
        let p = w(0.3);
        assert!((pinned_positive_pmf(&p, 1, 1).unwrap() - 0.3).abs() < 1e-15);
        assert!((pinned_positive_pmf(&p, 2, 1).unwrap() - 0.12).abs() < 1e-15);
        assert!((pinned_positive_pmf(&p, 2, 2).unwrap() - 0.09).abs() < 1e-15);
        assert_eq!(pinned_positive_pmf(&p, 2, 5).unwrap(), 0.0);
        assert!(pinned_positive_pmf(&p, 2, 0).is_err());
        assert!(pinned_positive_dp(&p, 2, -1).is_err());
    }

    #[test]
    fn horizon_partition_sums_to_one() {
        for p in [0.1, 0.3, 0.45] {
            let params = w(p);
            for m in 1..=40 {
                let fp: f64 = first_passage_series(&params, m).iter().sum();
                let alive: f64 = survival_row(&params, m).iter().sum();
                assert!((fp + alive - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ruin_examples() {
        assert_eq!(ruin_probability(&w(0.3), 1).unwrap(), 1.0);
        assert!((ruin_probability(&w(0.3), 2).unwrap() - 0.5).abs() < 1e-15);
        let a = ruin_probability(&w(0.45), 5).unwrap();
        let b = ruin_probability(&w(0.3), 5).unwrap();
        assert!((a - 0.2).abs() < 1e-15 && (a - b).abs() < 1e-15);
        assert!(ruin_probability(&w(0.3), 0).is_err());
    }

    #[test]
    fn local_clt_small_horizons() {
        let v = local_clt_deviation(&w(0.3), 1).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        // Period-2 walk: the forbidden site b = 1 at k = 2 keeps the full
        // Gaussian term, exp(-1/4) / sqrt(2 pi).
        let v = local_clt_deviation(&w(0.5), 2).unwrap();
        let gauss = (-0.25f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!(v >= gauss - 1e-12);
        assert!(local_clt_deviation(&w(0.3), 0).is_err());
    }

    #[test]
    fn lattice_path_validation() {
        assert!(LatticePath::new(vec![1, 2, 1, 0]).is_ok());
        assert!(LatticePath::new(vec![2]).is_err());
        assert!(LatticePath::new(vec![]).is_err());
        let path = LatticePath::from_steps(&[1, -1, 0, 1]).unwrap();
        assert_eq!(path.values(), &[1, 0, 0, 1]);
        assert_eq!(path.zero_set(), vec![2, 3]);
        assert_eq!(path.height(0), 0);
    }
}
