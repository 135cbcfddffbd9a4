//! Zero-level-set laws `p_N`.
//!
//! A law gives each contact set `{T_1 < ... < T_k}` in `{1..N}` the weight
//!
//! ```text
//! prod_i w(T_{i-1}, T_i) * w_final(T_k),      T_0 = 0,
//! ```
//!
//! normalized by the partition function `Z_N`. For the walk-derived
//! families `w(l', l) = exp(beta_l) K(l - l')` and `w_final(l) = Kbar(N - l)`
//! with the renewal weights of [`RenewalWeights`]. At `beta = 0` this is the
//! law of the zero set of the lazy walk and `Z_N = 1`.
//!
//! The forward table `Z(j) = sum_{i<j} Z(i) w(i, j)` is built once at
//! construction; sampling walks it backwards.

use crate::error::{invalid, Error, Result};
use crate::excursion::RenewalWeights;
use crate::rng::{domain, StreamSeed};
use crate::walk::WalkParams;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Pinning rewards above this magnitude switch the partition function to
/// log space.
pub const LOG_SPACE_BETA: f64 = 30.0;
/// Log space is also used once `N * max|beta|` could overflow `exp`.
pub const LOG_SPACE_EXPONENT: f64 = 600.0;

/// Distribution of the disorder charges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeDistribution {
    /// Fair `+1` / `-1`.
    #[default]
    Rademacher,
    Gaussian,
}

/// Source of the charge sequence `omega_1..omega_N`.
#[derive(Debug, Clone, PartialEq)]
pub enum Charges {
    Seeded { seed: u64, distribution: ChargeDistribution },
    Fixed(Vec<f64>),
}

impl Charges {
    /// Draws (or copies) `n` charges.
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Charges::Seeded { seed, distribution } => {
                let mut rng = StreamSeed(*seed).rng(domain::DISORDER, 0);
                Ok((0..n)
                    .map(|_| match distribution {
                        ChargeDistribution::Rademacher => {
                            if rng.random::<bool>() {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        ChargeDistribution::Gaussian => rng.sample(StandardNormal),
                    })
                    .collect())
            }
            Charges::Fixed(v) => {
                if v.len() < n {
                    return Err(invalid("charges", format!("{} charges given, {n} needed", v.len())));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("charges", "charges must be finite"));
                }
                Ok(v[..n].to_vec())
            }
        }
    }
}

/// Explicit weight tables. Missing entries weigh zero, except that the
/// final weight of `N` defaults to one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CustomWeights {
    pub bulk: HashMap<(usize, usize), f64>,
    pub last: HashMap<usize, f64>,
}

impl CustomWeights {
    /// Every gap and every final stretch weighs `value`.
    pub fn uniform(n: usize, value: f64) -> Self {
        let mut w = CustomWeights::default();
        for j in 1..=n {
            for i in 0..j {
                w.bulk.insert((i, j), value);
            }
        }
        for i in 0..=n {
            w.last.insert(i, value);
        }
        w
    }

    /// Reads a `prev,next,weight` table and a `last,final_weight` table.
    pub fn from_csv_files(bulk: &Path, last: &Path) -> Result<Self> {
        let bulk_rows = read_numeric_csv(bulk, &["prev", "next", "weight"])?;
        let last_rows = read_numeric_csv(last, &["last", "final_weight"])?;
        let mut w = CustomWeights::default();
        for (line, r) in bulk_rows {
            let (i, j) = (as_index(bulk, line, r[0])?, as_index(bulk, line, r[1])?);
            if i >= j {
                return Err(parse_err(bulk, line, "prev must be smaller than next"));
            }
            w.bulk.insert((i, j), r[2]);
        }
        for (line, r) in last_rows {
            w.last.insert(as_index(last, line, r[0])?, r[1]);
        }
        Ok(w)
    }

    pub fn write_csv<W: Write>(&self, bulk: W, last: W) -> Result<()> {
        let mut keys: Vec<_> = self.bulk.keys().copied().collect();
        keys.sort_unstable();
        let mut out = csv_writer(bulk);
        out.write_record(["prev", "next", "weight"])?;
        for (i, j) in keys {
            out.write_record([i.to_string(), j.to_string(), self.bulk[&(i, j)].to_string()])?;
        }
        out.flush()?;
        let mut keys: Vec<_> = self.last.keys().copied().collect();
        keys.sort_unstable();
        let mut out = csv_writer(last);
        out.write_record(["last", "final_weight"])?;
        for i in keys {
            out.write_record([i.to_string(), self.last[&i].to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn as_index(path: &Path, line: u64, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(parse_err(path, line, format!("{v} is not a position")))
    }
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Rows of a numeric CSV with the given header, tagged by line number.
fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>> {
    let file = std::fs::File::open(path)?;
    read_numeric_csv_from(path, file, header)
}

fn read_numeric_csv_from<R: Read>(path: &Path, reader: R, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(parse_err(path, 1, format!("expected header {:?}, found {:?}", header, found)));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(path, line, format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != header.len() {
            return Err(parse_err(path, line, "wrong number of fields"));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(path, line, "non-finite value"));
        }
        rows.push((line, vals));
    }
    Ok(rows)
}

/// Writes a charge sequence as a single `charge` column.
pub fn write_charges<W: Write>(charges: &[f64], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["charge"])?;
    for c in charges {
        out.write_record([c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_charges(path: &Path) -> Result<Vec<f64>> {
    Ok(read_numeric_csv(path, &["charge"])?.into_iter().map(|(_, r)| r[0]).collect())
}

/// Family of contact weights.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// Same reward `beta` at every contact.
    Homogeneous { beta: f64 },
    /// Reward `betas[l mod period]` at contact `l`.
    Periodic { betas: Vec<f64> },
    /// Reward `beta + lambda * omega_l` with quenched charges.
    Disordered { beta: f64, lambda: f64, charges: Charges },
    Custom(CustomWeights),
}

/// Zero-set law with its forward partition table.
#[derive(Debug, Clone)]
pub struct ContactSetLaw {
    n: usize,
    family: WeightFamily,
    walk: WalkParams,
    weights: LawWeights,
    partition: Partition,
}

#[derive(Debug, Clone)]
enum LawWeights {
    Renewal {
        renewal: Arc<RenewalWeights>,
        // betas[l] for l in 1..=N; betas[0] unused.
        betas: Vec<f64>,
        charges: Option<Vec<f64>>,
    },
    Custom(CustomWeights),
}

impl LawWeights {
    /// Gap weight without the contact reward at `j`.
    #[inline]
    fn gap(&self, i: usize, j: usize) -> f64 {
        match self {
            LawWeights::Renewal { renewal, .. } => renewal.bulk(j - i),
            LawWeights::Custom(c) => c.bulk.get(&(i, j)).copied().unwrap_or(0.0),
        }
    }

    #[inline]
    fn reward(&self, j: usize) -> f64 {
        match self {
            LawWeights::Renewal { betas, .. } => betas[j],
            LawWeights::Custom(_) => 0.0,
        }
    }

    fn last(&self, i: usize, n: usize) -> f64 {
        match self {
            LawWeights::Renewal { renewal, .. } => renewal.meander(n - i),
            LawWeights::Custom(c) => c.last.get(&i).copied().unwrap_or(if i == n { 1.0 } else { 0.0 }),
        }
    }
}

/// Forward table. In linear mode `inflow[j] = sum_{i<j} Z(i) gap(i, j)` and
/// `Z(j) = exp(beta_j) inflow[j]`; in log mode all three hold logarithms.
#[derive(Debug, Clone)]
pub struct Partition {
    log_space: bool,
    z: Vec<f64>,
    inflow: Vec<f64>,
    total: f64,
}

impl Partition {
    pub fn is_log_space(&self) -> bool {
        self.log_space
    }

    /// `Z(j)` for `j` in `0..=N`; may be infinite in log mode.
    pub fn z(&self, j: usize) -> f64 {
        if self.log_space {
            self.z[j].exp()
        } else {
            self.z[j]
        }
    }

    pub fn log_z(&self, j: usize) -> f64 {
        if self.log_space {
            self.z[j]
        } else {
            self.z[j].ln()
        }
    }

    /// `Z_N`.
    pub fn total(&self) -> f64 {
        if self.log_space {
            self.total.exp()
        } else {
            self.total
        }
    }

    pub fn log_total(&self) -> f64 {
        if self.log_space {
            self.total
        } else {
            self.total.ln()
        }
    }

    /// `Z(0..=N)` in linear scale.
    pub fn forward(&self) -> Vec<f64> {
        (0..self.z.len()).map(|j| self.z(j)).collect()
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

impl ContactSetLaw {
    /// Law for system size `n`. The partition function is computed here.
    pub fn new(n: usize, family: WeightFamily, walk: WalkParams) -> Result<Self> {
        let renewal = Arc::new(RenewalWeights::new(&walk, n));
        Self::with_renewal(n, family, walk, renewal)
    }

    /// Like [`ContactSetLaw::new`], reusing precomputed renewal weights
    /// (which must cover `n` and belong to `walk`).
    pub fn with_renewal(n: usize, family: WeightFamily, walk: WalkParams, renewal: Arc<RenewalWeights>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "system size must be at least 1"));
        }
        if renewal.n_max() < n {
            return Err(invalid("N", "renewal weights do not cover the system size"));
        }
        let weights = match &family {
            WeightFamily::Homogeneous { beta } => {
                check_finite("beta", *beta)?;
                LawWeights::Renewal {
                    renewal,
                    betas: vec![*beta; n + 1],
                    charges: None,
                }
            }
            WeightFamily::Periodic { betas } => {
                if betas.is_empty() {
                    return Err(invalid("betas", "period must be at least 1"));
                }
                for b in betas {
                    check_finite("betas", *b)?;
                }
                let theta = betas.len();
                LawWeights::Renewal {
                    renewal,
                    betas: (0..=n).map(|l| betas[l % theta]).collect(),
                    charges: None,
                }
            }
            WeightFamily::Disordered { beta, lambda, charges } => {
                check_finite("beta", *beta)?;
                check_finite("lambda", *lambda)?;
                let omega = charges.resolve(n)?;
                let mut betas = vec![*beta; n + 1];
                for l in 1..=n {
                    betas[l] = beta + lambda * omega[l - 1];
                }
                LawWeights::Renewal {
                    renewal,
                    betas,
                    charges: Some(omega),
                }
            }
            WeightFamily::Custom(c) => {
                for (&(i, j), &v) in &c.bulk {
                    if j > n || !(v >= 0.0) || !v.is_finite() {
                        return Err(invalid("weights", format!("bad bulk weight {v} for gap ({i}, {j})")));
                    }
                }
                for (&i, &v) in &c.last {
                    if i > n || !(v >= 0.0) || !v.is_finite() {
                        return Err(invalid("weights", format!("bad final weight {v} at {i}")));
                    }
                }
                LawWeights::Custom(c.clone())
            }
        };
        let partition = Self::compute_partition(n, &weights)?;
        Ok(ContactSetLaw {
            n,
            family,
            walk,
            weights,
            partition,
        })
    }

    fn compute_partition(n: usize, weights: &LawWeights) -> Result<Partition> {
        let max_beta = match weights {
            LawWeights::Renewal { betas, .. } => betas[1..].iter().fold(0.0f64, |m, b| m.max(b.abs())),
            LawWeights::Custom(_) => 0.0,
        };
        let log_space = max_beta > LOG_SPACE_BETA || max_beta * n as f64 > LOG_SPACE_EXPONENT;
        let mut z = vec![0.0; n + 1];
        let mut inflow = vec![0.0; n + 1];
        let total;
        if log_space {
            z[0] = 0.0;
            inflow[0] = 0.0;
            for j in 1..=n {
                let terms = (0..j).map(|i| z[i] + weights.gap(i, j).ln());
                inflow[j] = log_sum_exp(terms);
                z[j] = weights.reward(j) + inflow[j];
            }
            total = log_sum_exp((0..=n).map(|i| z[i] + weights.last(i, n).ln()));
            if total == f64::NEG_INFINITY || total.is_nan() {
                return Err(Error::DegenerateLaw);
            }
        } else {
            z[0] = 1.0;
            inflow[0] = 1.0;
            for j in 1..=n {
                let mut acc = 0.0;
                for i in 0..j {
                    acc += z[i] * weights.gap(i, j);
                }
                inflow[j] = acc;
                z[j] = weights.reward(j).exp() * acc;
            }
            total = (0..=n).map(|i| z[i] * weights.last(i, n)).sum::<f64>();
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::DegenerateLaw);
            }
        }
        Ok(Partition {
            log_space,
            z,
            inflow,
            total,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn walk(&self) -> WalkParams {
        self.walk
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Contact rewards `beta_l`, `l = 1..=N` (empty for custom tables).
    pub fn rewards(&self) -> &[f64] {
        match &self.weights {
            LawWeights::Renewal { betas, .. } => &betas[1..],
            LawWeights::Custom(_) => &[],
        }
    }

    /// Resolved disorder charges, if any.
    pub fn charges(&self) -> Option<&[f64]> {
        match &self.weights {
            LawWeights::Renewal { charges, .. } => charges.as_deref(),
            LawWeights::Custom(_) => None,
        }
    }

    /// `w(i, j)` for consecutive contacts `i < j` (`i = 0` is the origin).
    pub fn bulk_weight(&self, i: usize, j: usize) -> f64 {
        assert!(i < j && j <= self.n);
        self.weights.reward(j).exp() * self.weights.gap(i, j)
    }

    /// Weight of the final stretch after the last contact `i`.
    pub fn final_weight(&self, i: usize) -> f64 {
        assert!(i <= self.n);
        self.weights.last(i, self.n)
    }

    fn log_bulk_weight(&self, i: usize, j: usize) -> f64 {
        self.weights.reward(j) + self.weights.gap(i, j).ln()
    }

    /// `p_N(set)`.
    pub fn set_probability(&self, set: &ContactSet) -> Result<f64> {
        if set.n != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: set.n,
            });
        }
        let last = set.last();
        if self.partition.log_space {
            let mut acc = self.weights.last(last, self.n).ln();
            for (i, j) in set.pairs() {
                acc += self.log_bulk_weight(i, j);
            }
            Ok((acc - self.partition.total).exp())
        } else {
            let mut acc = self.weights.last(last, self.n);
            for (i, j) in set.pairs() {
                acc *= self.bulk_weight(i, j);
            }
            Ok(acc / self.partition.total)
        }
    }

    /// Exact draw from `p_N`: the last contact first, then gaps backwards.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ContactSet {
        let n = self.n;
        let part = &self.partition;
        let u: f64 = rng.random();
        let last = if part.log_space {
            scan_down(n, u, |i| (part.z[i] + self.weights.last(i, n).ln() - part.total).exp())
        } else {
            let target = u * part.total;
            scan_down(n, target, |i| part.z[i] * self.weights.last(i, n))
        };
        let mut contacts = Vec::new();
        let mut j = last;
        while j > 0 {
            contacts.push(j);
            let u: f64 = rng.random();
            j = if part.log_space {
                let base = part.inflow[j];
                scan_down(j - 1, u, |i| (part.z[i] + self.weights.gap(i, j).ln() - base).exp())
            } else {
                let target = u * part.inflow[j];
                scan_down(j - 1, target, |i| part.z[i] * self.weights.gap(i, j))
            };
        }
        contacts.reverse();
        ContactSet { n, contacts }
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} is not finite")))
    }
}

/// Index `i` in `top, top-1, ..., 0` at which the running sum of `weight`
/// first exceeds `target`. If rounding leaves the target unreached, the
/// smallest index with positive weight wins.
fn scan_down(top: usize, target: f64, weight: impl Fn(usize) -> f64) -> usize {
    let mut acc = 0.0;
    let mut fallback = top;
    for i in (0..=top).rev() {
        let w = weight(i);
        if w > 0.0 {
            acc += w;
            fallback = i;
            if target < acc {
                return i;
            }
        }
    }
    fallback
}

/// `p_N` for a law; see [`ContactSetLaw::new`].
pub fn make_law(n: usize, family: WeightFamily, walk: WalkParams) -> Result<ContactSetLaw> {
    ContactSetLaw::new(n, family, walk)
}

pub fn partition_function(law: &ContactSetLaw) -> &Partition {
    law.partition()
}

pub fn sample_contact_set<R: Rng + ?Sized>(law: &ContactSetLaw, rng: &mut R) -> ContactSet {
    law.sample(rng)
}

pub fn set_probability(law: &ContactSetLaw, set: &ContactSet) -> Result<f64> {
    law.set_probability(set)
}

/// Sorted contact positions `T_1 < ... < T_k` in `{1..N}`; may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContactSet {
    n: usize,
    contacts: Vec<usize>,
}

impl ContactSet {
    pub fn new(n: usize, contacts: Vec<usize>) -> Result<Self> {
        let mut prev = 0;
        for &c in &contacts {
            if c <= prev {
                return Err(Error::MalformedSet(format!("{contacts:?} is not strictly increasing from 1")));
            }
            if c > n {
                return Err(Error::MalformedSet(format!("contact {c} outside 1..={n}")));
            }
            prev = c;
        }
        Ok(ContactSet { n, contacts })
    }

    /// Subset of `{1..n}` encoded by the bits of `mask` (bit `l-1` for `l`).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        ContactSet {
            n,
            contacts: (1..=n).filter(|l| mask >> (l - 1) & 1 == 1).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contacts(&self) -> &[usize] {
        &self.contacts
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    /// Last contact, or 0 for the empty set.
    pub fn last(&self) -> usize {
        self.contacts.last().copied().unwrap_or(0)
    }

    /// Consecutive pairs `(T_{i-1}, T_i)` starting from `T_0 = 0`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        std::iter::once(0)
            .chain(self.contacts.iter().copied())
            .zip(self.contacts.iter().copied())
    }

    /// Gap lengths `T_i - T_{i-1}`.
    pub fn gaps(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs().map(|(a, b)| b - a)
    }

    /// Length of the final contact-free stretch, `N - T_k`.
    pub fn final_len(&self) -> usize {
        self.n - self.last()
    }
}
