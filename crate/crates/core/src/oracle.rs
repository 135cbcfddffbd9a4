//! Brute-force enumerations, independent of the DP and kernel code paths.
//!
//! Everything here walks the full tree of `3^n` step sequences (pruned
//! where a constraint already fails), so sizes are kept small.

use crate::assembly::PathEvaluator;
use crate::contact::{ContactSet, ContactSetLaw, WeightFamily};
use crate::diagnostics::integrability::{above_sqrt, ceil_sqrt, MaxLaw};
use crate::error::{Error, Result};
use crate::excursion::{ConditionedKernel, ExcursionKind, SurvivalTable};
use crate::walk::exact::{to_f64, RationalWalk};
use crate::walk::{first_passage_series, pinned_positive_dp, pinned_positive_pmf, reflection_first_passage, ruin_probability, LatticePath, WalkParams};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Largest system size accepted by [`run_oracle`].
pub const ORACLE_LIMIT: usize = 12;
/// Deviation allowed by every oracle check.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Visits every height sequence `y_1..y_n` with `|y_i - y_{i-1}| <= 1`,
/// `y_0 = 0`, for which `keep(i, y_i)` holds at every step, along with
/// the product of step probabilities.
pub fn for_each_path<K, F>(walk: &WalkParams, n: usize, keep: K, mut visit: F)
where
    K: Fn(usize, i64) -> bool,
    F: FnMut(&[i64], f64),
{
    fn rec<K: Fn(usize, i64) -> bool, F: FnMut(&[i64], f64)>(
        walk: &WalkParams,
        n: usize,
        keep: &K,
        visit: &mut F,
        buf: &mut Vec<i64>,
        weight: f64,
    ) {
        if buf.len() == n {
            visit(buf, weight);
            return;
        }
        let x = buf.last().copied().unwrap_or(0);
        let i = buf.len() + 1;
        for d in [-1, 0, 1] {
            let y = x + d;
            let w = walk.step_prob(d);
            if w == 0.0 || !keep(i, y) {
                continue;
            }
            buf.push(y);
            rec(walk, n, keep, visit, buf, weight * w);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(n);
    rec(walk, n, &keep, &mut visit, &mut buf, 1.0);
}

fn admissible(kind: ExcursionKind, t: usize) -> impl Fn(usize, i64) -> bool {
    move |i, y| match kind {
        ExcursionKind::Bulk => if i < t { y > 0 } else { y == 0 },
        ExcursionKind::Final => y > 0,
    }
}

/// The conditioned law of length `t` by enumeration, with the event
/// probability. Errors on a null event.
pub fn conditioned_law(walk: &WalkParams, t: usize, kind: ExcursionKind) -> Result<(BTreeMap<Vec<i64>, f64>, f64)> {
    let mut raw = BTreeMap::new();
    for_each_path(walk, t, admissible(kind, t), |y, w| {
        raw.insert(y.to_vec(), w);
    });
    let event: f64 = raw.values().sum();
    if !(event > 0.0) {
        return Err(Error::NullEvent {
            kind: kind.name(),
            len: t,
            p: walk.p(),
        });
    }
    raw.values_mut().for_each(|w| *w /= event);
    Ok((raw, event))
}

/// Total variation between `kernel` and the enumerated law of its length.
pub fn kernel_total_variation(kernel: &ConditionedKernel) -> Result<f64> {
    let (law, _) = conditioned_law(&kernel.params(), kernel.len(), kernel.kind())?;
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (path, &q) in &law {
        let k = kernel.probability_of(path)?;
        covered += k;
        diff += (k - q).abs();
    }
    Ok(0.5 * (diff + (1.0 - covered).abs()))
}

/// `P(T = n)` by enumeration.
pub fn first_passage(walk: &WalkParams, n: usize) -> f64 {
    let mut total = 0.0;
    for_each_path(walk, n, |i, y| if i < n { y > 0 } else { y <= 0 }, |_, w| total += w);
    total
}

/// `P_n(M = h)` for `h = 0..=n/2` by enumeration of the bulk law.
pub fn max_distribution(walk: &WalkParams, n: usize) -> Result<Vec<f64>> {
    let (law, _) = conditioned_law(walk, n, ExcursionKind::Bulk)?;
    let mut dist = vec![0.0; n / 2 + 1];
    for (path, q) in law {
        let m = path.iter().copied().max().unwrap_or(0) as usize;
        dist[m] += q;
    }
    Ok(dist)
}

/// `c_n(a)` from an enumerated maximum law.
pub fn c_from_distribution(dist: &[f64], n: usize, a: f64) -> f64 {
    let h0 = above_sqrt(n as f64 * a) as usize;
    dist.iter().enumerate().skip(h0).map(|(h, q)| q * (h * h) as f64 / n as f64).sum()
}

/// `f_n(a)` from an enumerated maximum law.
pub fn f_from_distribution(dist: &[f64], n: usize, a: f64) -> f64 {
    let h0 = ceil_sqrt(n as f64 * a) as usize;
    dist.iter().skip(h0).sum()
}

/// Unnormalized weight of every contact set, indexed by bit mask
/// (bit `l - 1` set when `l` is a contact).
pub fn contact_weights(law: &ContactSetLaw) -> Result<Vec<f64>> {
    let n = law.n();
    if n > ORACLE_LIMIT + 8 {
        return Err(Error::TooLarge {
            what: "contact-set enumeration",
            size: n,
            limit: ORACLE_LIMIT + 8,
        });
    }
    Ok((0..1u64 << n)
        .map(|mask| {
            let set = ContactSet::from_mask(n, mask);
            let bulk: f64 = set.pairs().map(|(i, j)| law.bulk_weight(i, j)).product();
            bulk * law.final_weight(set.last())
        })
        .collect())
}

/// Law of the contact set by direct weight products.
pub fn contact_law(law: &ContactSetLaw) -> Result<Vec<f64>> {
    let mut w = contact_weights(law)?;
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// The composite measure on nonnegative paths of length `law.n()`, as the
/// enumerated contact law times enumerated excursion laws.
pub fn polymer_law(law: &ContactSetLaw) -> Result<BTreeMap<Vec<i64>, f64>> {
    let n = law.n();
    let walk = law.walk();
    let sets = contact_law(law)?;
    let mut events = BTreeMap::new();
    for t in 1..=n {
        for kind in [ExcursionKind::Bulk, ExcursionKind::Final] {
            let mut e = 0.0;
            for_each_path(&walk, t, admissible(kind, t), |_, w| e += w);
            events.insert((t, kind), e);
        }
    }
    let mut out = BTreeMap::new();
    for_each_path(&walk, n, |_, y| y >= 0, |y, w| {
        let zeros: Vec<usize> = (1..=n).filter(|&i| y[i - 1] == 0).collect();
        let mask = zeros.iter().fold(0u64, |m, &i| m | 1 << (i - 1));
        let set = ContactSet::from_mask(n, mask);
        let mut norm = 1.0;
        for t in set.gaps() {
            norm *= events[&(t, ExcursionKind::Bulk)];
        }
        if set.final_len() > 0 {
            norm *= events[&(set.final_len(), ExcursionKind::Final)];
        }
        let q = if norm > 0.0 { sets[mask as usize] * w / norm } else { 0.0 };
        if q > 0.0 {
            out.insert(y.to_vec(), q);
        }
    });
    Ok(out)
}

/// The composite measure of a renewal family as a Gibbs tilt of the
/// signed walk, `prod step * exp(sum of rewards at zeros)`, folded onto
/// `|S|`. Uses neither the renewal weights nor the excursion kernels.
pub fn polymer_law_gibbs(walk: &WalkParams, rewards: &[f64]) -> BTreeMap<Vec<i64>, f64> {
    let n = rewards.len();
    let mut out: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut total = 0.0;
    for_each_path(walk, n, |_, _| true, |y, w| {
        let tilt: f64 = y.iter().zip(rewards).filter(|(v, _)| **v == 0).map(|(_, b)| b).sum();
        let q = w * tilt.exp();
        total += q;
        *out.entry(y.iter().map(|v| v.abs()).collect()).or_default() += q;
    });
    out.values_mut().for_each(|q| *q /= total);
    out
}

/// One line of an oracle report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub p: f64,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max)
    }

    /// Re-judges every check against `tolerance`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        for c in &mut self.checks {
            c.tolerance = tolerance;
            c.passed = c.max_deviation <= tolerance;
        }
        self
    }

    fn push(&mut self, name: &str, dev: f64) {
        self.checks.push(OracleCheck {
            name: name.to_owned(),
            max_deviation: dev,
            tolerance: ORACLE_TOLERANCE,
            passed: dev <= ORACLE_TOLERANCE,
        });
    }
}

/// Horizon of the exact-arithmetic comparisons.
const RATIONAL_HORIZON: usize = 40;

/// Cross-checks every exact routine at the size and parameters of `law`
/// against enumeration. With `rational`, the floating-point walk identities
/// are also compared with exact rational arithmetic.
pub fn run_oracle(law: &ContactSetLaw, rational: bool) -> Result<OracleReport> {
    let n = law.n();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            what: "oracle enumeration",
            size: n,
            limit: ORACLE_LIMIT,
        });
    }
    let walk = law.walk();
    let mut report = OracleReport {
        n,
        p: walk.p(),
        checks: Vec::new(),
    };

    let brute = polymer_law(law)?;
    let eval = PathEvaluator::new(law)?;
    let (mut sum, mut dev) = (0.0, 0.0f64);
    let mut failure = None;
    for_each_path(&walk, n, |_, y| y >= 0, |y, _| {
        match LatticePath::new(y.to_vec()).and_then(|p| eval.probability(&p)) {
            Ok(q) => {
                sum += q;
                dev = dev.max((q - brute.get(y).copied().unwrap_or(0.0)).abs());
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    report.push("path_sum", (sum - 1.0).abs());
    report.push("path_law", dev);

    if !matches!(law.family(), WeightFamily::Custom(_)) {
        let gibbs = polymer_law_gibbs(&walk, law.rewards());
        let dev = gibbs
            .iter()
            .map(|(y, &q)| (q - brute.get(y).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        report.push("path_law_gibbs", dev);
    }

    let sets = contact_weights(law)?;
    let z: f64 = sets.iter().sum();
    let mut dev = 0.0f64;
    for (mask, w) in sets.iter().enumerate() {
        let q = law.set_probability(&ContactSet::from_mask(n, mask as u64))?;
        dev = dev.max((q - w / z).abs());
    }
    report.push("contact_law", dev);
    report.push("partition", (law.partition().total() - z).abs() / z);

    let mut dev = 0.0f64;
    for kind in [ExcursionKind::Bulk, ExcursionKind::Final] {
        let table = Arc::new(SurvivalTable::build(walk, kind, n.max(1)));
        for t in 1..=n {
            match ConditionedKernel::view(Arc::clone(&table), t) {
                Ok(k) => dev = dev.max(kernel_total_variation(&k)?),
                Err(Error::NullEvent { .. }) => {
                    if conditioned_law(&walk, t, kind).is_ok() {
                        dev = f64::INFINITY;
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    report.push("kernels", dev);

    let fp = first_passage_series(&walk, n.max(2));
    let mut dev = 0.0f64;
    for m in 1..=n.max(2) {
        let b = first_passage(&walk, m);
        dev = dev.max((fp[m] - b).abs());
        if m >= 2 {
            dev = dev.max((reflection_first_passage(&walk, m)? - b).abs());
        }
    }
    report.push("first_passage", dev);

    let max_law = MaxLaw::build(&walk, n.max(1))?;
    let mut dev = 0.0f64;
    for m in (1..=n).filter(|&m| max_law.is_defined(m)) {
        let dist = max_distribution(&walk, m)?;
        for j in 0..=4 * m {
            let a = 0.25 * j as f64;
            dev = dev.max((max_law.c(m, a)? - c_from_distribution(&dist, m, a)).abs());
            if m >= 2 {
                dev = dev.max((max_law.f(m, a)? - f_from_distribution(&dist, m, a)).abs());
            }
        }
    }
    report.push("excursion_max", dev);

    if rational {
        let exact = RationalWalk::new(&walk);
        let h = RATIONAL_HORIZON;
        let (first, mass) = exact.absorbing(h)?;
        let fp = first_passage_series(&walk, h);
        let mut dev = 0.0f64;
        for m in 1..=h {
            dev = dev.max((fp[m] - to_f64(&first[m])).abs());
        }
        let row = exact.pmf_row(h - 1)?;
        let zero = num_rational::BigRational::default();
        let at = |b: i64| row.get((b + h as i64 - 1) as usize).unwrap_or(&zero);
        for b in 1..=h as i64 {
            dev = dev.max((pinned_positive_dp(&walk, h, b)? - to_f64(&mass[b as usize])).abs());
            let reflected = &exact.p * (at(b - 1) - at(b + 1));
            dev = dev.max((pinned_positive_pmf(&walk, h, b)? - to_f64(&reflected)).abs());
        }
        for b in 1..=20 {
            dev = dev.max((ruin_probability(&walk, b)? - to_f64(&exact.ruin_probability(b)?)).abs());
        }
        report.push("rational", dev);
    }
    Ok(report)
}
