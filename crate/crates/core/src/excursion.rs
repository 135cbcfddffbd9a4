//! Conditioned excursion laws and their exact samplers.
//!
//! The bulk law `P_t` is the walk conditioned on `S_1, ..., S_{t-1} > 0` and
//! `S_t = 0`; the final law `P_t^f` conditions on `S_1, ..., S_t > 0`. Both
//! are Markov, with one-step kernel
//!
//! ```text
//! q_j(x -> x') = step(x' - x) * B_{j+1}(x') / B_j(x)
//! ```
//!
//! where `B_j(x)` is the probability of completing the constraint from
//! state `x` at time `j`. Because the walk is time homogeneous, `B_j`
//! depends on `t - j` only, so a single [`SurvivalTable`] indexed by the
//! number of remaining steps serves every excursion length up to its
//! capacity. A [`ConditionedKernel`] is a view of such a table at a fixed
//! length.

use crate::error::{Error, Result};
use crate::walk::{LatticePath, WalkParams};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExcursionKind {
    /// Positive interior, zero at the last step.
    Bulk,
    /// Strictly positive throughout (meander).
    Final,
}

impl ExcursionKind {
    pub fn name(self) -> &'static str {
        match self {
            ExcursionKind::Bulk => "bulk",
            ExcursionKind::Final => "final",
        }
    }
}

impl fmt::Display for ExcursionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Completion probabilities indexed by remaining steps.
///
/// Bulk: `H_m(x) = P_x(S_1..S_{m-1} > 0, S_m = 0)` with `H_0(x) = 1{x = 0}`.
/// Final: `G_m(x) = P_x(S_1..S_m > 0)` with `G_0(x) = 1{x >= 1}`.
///
/// Row `m` stores `x = 0..len`; beyond `len` the value is the row tail,
/// `0` for bulk (underflowed or unreachable) and `1` for final (no chance to
/// reach zero, or within half an ulp of it).
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    params: WalkParams,
    kind: ExcursionKind,
    rows: Vec<Vec<f64>>,
}

impl SurvivalTable {
    pub fn build(params: WalkParams, kind: ExcursionKind, capacity: usize) -> Self {
        let first = match kind {
            ExcursionKind::Bulk => vec![1.0],
            ExcursionKind::Final => vec![0.0],
        };
        let mut table = SurvivalTable {
            params,
            kind,
            rows: vec![first],
        };
        table.grow(capacity);
        table
    }

    /// Copy of this table extended to a larger capacity.
    pub fn extended(&self, capacity: usize) -> Self {
        let mut table = self.clone();
        table.grow(capacity);
        table
    }

    fn grow(&mut self, capacity: usize) {
        let (p, r) = (self.params.p(), self.params.stay());
        while self.rows.len() <= capacity {
            let m = self.rows.len();
            let prev = &self.rows[m - 1];
            let width = prev.len() + 1;
            let mut row = Vec::with_capacity(width);
            row.push(0.0);
            match self.kind {
                ExcursionKind::Bulk => {
                    let at = |x: usize| prev.get(x).copied().unwrap_or(0.0);
                    for x in 1..width {
                        row.push(r * at(x) + p * (at(x - 1) + at(x + 1)));
                    }
                    while row.len() > 1 && *row.last().unwrap() < f64::MIN_POSITIVE {
                        row.pop();
                    }
                }
                ExcursionKind::Final => {
                    let at = |x: usize| if x == 0 { 0.0 } else { prev.get(x).copied().unwrap_or(1.0) };
                    for x in 1..width {
                        let g = at(x);
                        // Difference form keeps far rows at exactly 1.
                        row.push(g + p * ((at(x + 1) - g) + (at(x - 1) - g)));
                    }
                    while row.len() > 1 && *row.last().unwrap() == 1.0 {
                        row.pop();
                    }
                }
            }
            self.rows.push(row);
        }
    }

    pub fn params(&self) -> WalkParams {
        self.params
    }

    pub fn kind(&self) -> ExcursionKind {
        self.kind
    }

    /// Largest number of remaining steps covered.
    pub fn capacity(&self) -> usize {
        self.rows.len() - 1
    }

    /// Number of stored floats.
    pub fn stored_len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    fn tail(&self) -> f64 {
        match self.kind {
            ExcursionKind::Bulk => 0.0,
            ExcursionKind::Final => 1.0,
        }
    }

    /// Completion probability with `remaining` steps left at height `x`.
    #[inline]
    pub fn value(&self, remaining: usize, x: i64) -> f64 {
        if x < 0 {
            return 0.0;
        }
        let row = &self.rows[remaining];
        row.get(x as usize).copied().unwrap_or_else(|| self.tail())
    }
}

/// Doob-transformed walk for one excursion length.
#[derive(Debug, Clone)]
pub struct ConditionedKernel {
    table: Arc<SurvivalTable>,
    len: usize,
    event: f64,
}

impl ConditionedKernel {
    /// Kernel of length `len` over a shared table.
    pub fn view(table: Arc<SurvivalTable>, len: usize) -> Result<Self> {
        if len == 0 || len > table.capacity() {
            return Err(crate::error::invalid(
                "t",
                format!("length {len} outside the table range 1..={}", table.capacity()),
            ));
        }
        Self::from_table(table, len)
    }

    fn from_table(table: Arc<SurvivalTable>, len: usize) -> Result<Self> {
        debug_assert!(len >= 1 && len <= table.capacity());
        let params = table.params();
        let event = params.p() * table.value(len - 1, 1) + params.stay() * table.value(len - 1, 0);
        if !(event > 0.0) {
            return Err(Error::NullEvent {
                kind: table.kind().name(),
                len,
                p: params.p(),
            });
        }
        Ok(ConditionedKernel { table, len, event })
    }

    pub fn kind(&self) -> ExcursionKind {
        self.table.kind()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn params(&self) -> WalkParams {
        self.table.params()
    }

    /// Probability of the conditioning event.
    pub fn event_probability(&self) -> f64 {
        self.event
    }

    /// `B_j(x)`: probability of satisfying the constraint from height `x`
    /// at time `j`. At `j = 0` only `x = 0` is a real start; it returns the
    /// event probability.
    pub fn survival(&self, j: usize, x: i64) -> f64 {
        assert!(j <= self.len, "time {j} beyond excursion length {}", self.len);
        if j == 0 && x == 0 {
            self.event
        } else {
            self.table.value(self.len - j, x)
        }
    }

    /// Unnormalized weights `step(x' - x) B_{j+1}(x')` for `x' = x-1, x, x+1`.
    #[inline]
    fn raw_weights(&self, j: usize, x: i64) -> [f64; 3] {
        let params = self.table.params();
        let (p, r) = (params.p(), params.stay());
        let rem = self.len - j - 1;
        [
            p * self.table.value(rem, x - 1),
            r * self.table.value(rem, x),
            p * self.table.value(rem, x + 1),
        ]
    }

    /// Conditioned transition probabilities out of `(j, x)`, as
    /// `(next height, probability)`. All zero when `(j, x)` cannot complete.
    pub fn step_weights(&self, j: usize, x: i64) -> [(i64, f64); 3] {
        let w = self.raw_weights(j, x);
        let total = w[0] + w[1] + w[2];
        let norm = |v: f64| if total > 0.0 { v / total } else { 0.0 };
        [(x - 1, norm(w[0])), (x, norm(w[1])), (x + 1, norm(w[2]))]
    }

    /// Draws one excursion. Never rejects.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Excursion {
        let mut values = Vec::with_capacity(self.len);
        self.sample_into(rng, &mut values);
        Excursion {
            kind: self.kind(),
            path: LatticePath::from_values_unchecked(values),
        }
    }

    /// Appends a sampled excursion to `out`, heights measured from zero.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<i64>) {
        let mut x = 0i64;
        for j in 0..self.len {
            let w = self.raw_weights(j, x);
            let u = rng.random::<f64>() * (w[0] + w[1] + w[2]);
            x += pick_step(&w, u);
            out.push(x);
        }
    }

    /// Exact conditional probability of `path`; zero if it violates the
    /// constraints or has a non-unit increment.
    pub fn path_probability(&self, path: &LatticePath) -> Result<f64> {
        self.probability_of(path.values())
    }

    pub fn probability_of(&self, values: &[i64]) -> Result<f64> {
        if values.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: values.len(),
            });
        }
        let mut prob = 1.0;
        let mut x = 0i64;
        for (j, &next) in values.iter().enumerate() {
            let d = next - x;
            if d.abs() > 1 {
                return Ok(0.0);
            }
            let w = self.raw_weights(j, x);
            let total = w[0] + w[1] + w[2];
            if total <= 0.0 {
                return Ok(0.0);
            }
            prob *= w[(d + 1) as usize] / total;
            if prob == 0.0 {
                return Ok(0.0);
            }
            x = next;
        }
        Ok(prob)
    }
}

/// Increment selected by `u` in `[0, total)`; rounding at the top end falls
/// back to the last positive weight.
#[inline]
fn pick_step(w: &[f64; 3], u: f64) -> i64 {
    if u < w[0] {
        -1
    } else if u < w[0] + w[1] {
        0
    } else if w[2] > 0.0 {
        1
    } else if w[1] > 0.0 {
        0
    } else {
        -1
    }
}

/// One excursion path, tagged with its law.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Excursion {
    kind: ExcursionKind,
    path: LatticePath,
}

impl Excursion {
    /// Checks the positivity and endpoint constraints of `kind`.
    pub fn new(kind: ExcursionKind, path: LatticePath) -> Result<Self> {
        let v = path.values();
        let t = v.len();
        let ok = match kind {
            ExcursionKind::Bulk => v[t - 1] == 0 && v[..t - 1].iter().all(|&y| y > 0),
            ExcursionKind::Final => v.iter().all(|&y| y > 0),
        };
        if !ok {
            return Err(Error::InvalidPath(format!("path violates the {kind} excursion constraints")));
        }
        Ok(Excursion { kind, path })
    }

    pub fn kind(&self) -> ExcursionKind {
        self.kind
    }

    pub fn path(&self) -> &LatticePath {
        &self.path
    }

    pub fn values(&self) -> &[i64] {
        self.path.values()
    }

    pub fn into_path(self) -> LatticePath {
        self.path
    }
}

/// Builds an uncached kernel for one excursion length.
pub fn build_kernel(params: &WalkParams, len: usize, kind: ExcursionKind) -> Result<ConditionedKernel> {
    if len == 0 {
        return Err(crate::error::invalid("t", "excursion length must be at least 1"));
    }
    let table = Arc::new(SurvivalTable::build(*params, kind, len));
    ConditionedKernel::from_table(table, len)
}

pub fn sample_excursion<R: Rng + ?Sized>(kernel: &ConditionedKernel, rng: &mut R) -> Excursion {
    kernel.sample(rng)
}

pub fn path_probability(kernel: &ConditionedKernel, path: &LatticePath) -> Result<f64> {
    kernel.path_probability(path)
}

/// Probability of the conditioning event of a `kind` excursion of length
/// `len` under the free walk.
///
/// Bulk: `P(S_1 = 0) = 1 - 2p` at `len = 1`, otherwise
/// `P(S_1..S_{len-1} > 0, S_len = 0)`. Final: `P(S_1..S_len > 0)`.
/// Both are one-sided (positive excursions only).
pub fn event_probability(params: &WalkParams, len: usize, kind: ExcursionKind) -> Result<f64> {
    if len == 0 {
        return Err(crate::error::invalid("t", "excursion length must be at least 1"));
    }
    let table = SurvivalTable::build(*params, kind, len - 1);
    Ok(params.p() * table.value(len - 1, 1) + params.stay() * table.value(len - 1, 0))
}

/// Default cache budget, in stored floats (512 MiB).
pub const DEFAULT_CACHE_BUDGET: usize = 64 << 20;

/// Memo of survival tables keyed by `(p, kind)`.
///
/// Building happens under the lock, so a concurrent caller sees either a
/// miss followed by its own build or a finished table. When the stored
/// total exceeds the budget, tables with the largest capacity other than
/// the one just requested are dropped first. Kernels already handed out
/// keep their table alive.
#[derive(Debug)]
pub struct KernelCache {
    tables: Mutex<HashMap<(u64, ExcursionKind), Arc<SurvivalTable>>>,
    budget: usize,
}

impl Default for KernelCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_BUDGET)
    }
}

impl KernelCache {
    pub fn new(budget: usize) -> Self {
        KernelCache {
            tables: Mutex::new(HashMap::new()),
            budget,
        }
    }

    /// Table for `(params, kind)` covering at least `capacity` steps.
    pub fn table(&self, params: &WalkParams, kind: ExcursionKind, capacity: usize) -> Arc<SurvivalTable> {
        let key = (params.p().to_bits(), kind);
        let mut tables = self.tables.lock().expect("kernel cache poisoned");
        if let Some(t) = tables.get(&key) {
            if t.capacity() >= capacity {
                return Arc::clone(t);
            }
        }
        let table = match tables.get(&key) {
            // Geometric growth keeps repeated small extensions cheap.
            Some(old) => old.extended(capacity.max(old.capacity() * 2)),
            None => SurvivalTable::build(*params, kind, capacity),
        };
        let table = Arc::new(table);
        tables.insert(key, Arc::clone(&table));
        Self::evict(&mut tables, key, self.budget);
        table
    }

    fn evict(tables: &mut HashMap<(u64, ExcursionKind), Arc<SurvivalTable>>, keep: (u64, ExcursionKind), budget: usize) {
        let mut total: usize = tables.values().map(|t| t.stored_len()).sum();
        while total > budget {
            let victim = tables
                .iter()
                .filter(|(k, _)| **k != keep)
                .max_by_key(|(_, t)| t.capacity())
                .map(|(k, _)| *k);
            match victim {
                Some(k) => {
                    total -= tables.remove(&k).map(|t| t.stored_len()).unwrap_or(0);
                }
                None => break,
            }
        }
    }

    /// Kernel for one excursion length.
    pub fn kernel(&self, params: &WalkParams, len: usize, kind: ExcursionKind) -> Result<ConditionedKernel> {
        if len == 0 {
            return Err(crate::error::invalid("t", "excursion length must be at least 1"));
        }
        ConditionedKernel::from_table(self.table(params, kind, len), len)
    }

    /// Number of cached tables.
    pub fn len(&self) -> usize {
        self.tables.lock().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Renewal weights of the contact process of `|S|`.
///
/// `bulk(t)` is the probability that `|S|` returns to zero for the first
/// time at step `t`: `1 - 2p` for `t = 1` and twice the one-sided bulk
/// event for `t >= 2` (the excursion may go either way). `meander(t)` is
/// the probability that `|S|` stays away from zero for `t` steps, twice the
/// one-sided final event, with `meander(0) = 1`. These satisfy
/// `sum_{t <= M} bulk(t) + meander(M) = 1` for every `M`.
#[derive(Debug, Clone)]
pub struct RenewalWeights {
    bulk: Vec<f64>,
    meander: Vec<f64>,
}

impl RenewalWeights {
    pub fn new(params: &WalkParams, n_max: usize) -> Self {
        let (first, alive) = crate::walk::first_passage_tables(params, n_max);
        let mut bulk = vec![0.0; n_max + 1];
        let mut meander = vec![1.0; n_max + 1];
        for t in 1..=n_max {
            bulk[t] = if t == 1 { params.stay() } else { 2.0 * first[t] };
            meander[t] = 2.0 * alive[t];
        }
        RenewalWeights { bulk, meander }
    }

    pub fn n_max(&self) -> usize {
        self.bulk.len() - 1
    }

    /// Weight of a gap of exactly `t` steps between consecutive contacts.
    pub fn bulk(&self, t: usize) -> f64 {
        self.bulk[t]
    }

    /// Weight of a final contact-free stretch of `t` steps.
    pub fn meander(&self, t: usize) -> f64 {
        self.meander[t]
    }
}
