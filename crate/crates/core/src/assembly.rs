//! The composite path measure and its diffusive rescaling.
//!
//! A path is drawn by sampling a contact set from `p_N`, then an independent
//! bulk excursion for every gap and a final meander after the last contact.
//! Paths are nonnegative unless signs are enabled, in which case every
//! excursion independently gets a fair sign.

use crate::contact::{csv_writer, ContactSet, ContactSetLaw, WeightFamily};
use crate::error::{invalid, Error, Result};
use crate::excursion::{ConditionedKernel, ExcursionKind, KernelCache, SurvivalTable};
use crate::rng::{domain, StreamSeed};
use crate::walk::{LatticePath, WalkParams};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

/// Largest `N` accepted by [`exact_path_probability`].
pub const MAX_EXACT_PATH_LEN: usize = 16;

/// Sampler for the composite measure at one system size.
#[derive(Debug, Clone)]
pub struct PolymerSampler {
    law: Arc<ContactSetLaw>,
    bulk: Arc<SurvivalTable>,
    meander: Arc<SurvivalTable>,
    signed: bool,
}

impl PolymerSampler {
    /// Tables are taken from `cache`, sized to the law's `N`.
    pub fn new(law: ContactSetLaw, cache: &KernelCache) -> Self {
        Self::from_shared(Arc::new(law), cache)
    }

    pub fn from_shared(law: Arc<ContactSetLaw>, cache: &KernelCache) -> Self {
        let walk = law.walk();
        let n = law.n();
        PolymerSampler {
            bulk: cache.table(&walk, ExcursionKind::Bulk, n),
            meander: cache.table(&walk, ExcursionKind::Final, n),
            law,
            signed: false,
        }
    }

    /// Give every excursion an independent fair sign.
    pub fn with_signs(mut self, signed: bool) -> Self {
        self.signed = signed;
        self
    }

    pub fn law(&self) -> &ContactSetLaw {
        &self.law
    }

    pub fn n(&self) -> usize {
        self.law.n()
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    fn kernel(&self, kind: ExcursionKind, len: usize) -> Result<ConditionedKernel> {
        let table = match kind {
            ExcursionKind::Bulk => &self.bulk,
            ExcursionKind::Final => &self.meander,
        };
        kernel_from(table, len)
    }

    /// One path together with the contact set it was built on.
    pub fn sample_with_contacts<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(ContactSet, LatticePath)> {
        let contacts = self.law.sample(rng);
        let mut values = Vec::with_capacity(self.n());
        for gap in contacts.gaps() {
            let start = values.len();
            self.kernel(ExcursionKind::Bulk, gap)?.sample_into(rng, &mut values);
            self.apply_sign(rng, &mut values[start..]);
        }
        let tail = contacts.final_len();
        if tail > 0 {
            let start = values.len();
            self.kernel(ExcursionKind::Final, tail)?.sample_into(rng, &mut values);
            self.apply_sign(rng, &mut values[start..]);
        }
        Ok((contacts, LatticePath::from_values_unchecked(values)))
    }

    fn apply_sign<R: Rng + ?Sized>(&self, rng: &mut R, segment: &mut [i64]) {
        // Length-one bulk excursions are the zero path; no draw is spent on them.
        if self.signed && segment.iter().any(|&y| y != 0) && rng.random::<bool>() {
            segment.iter_mut().for_each(|y| *y = -*y);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LatticePath> {
        Ok(self.sample_with_contacts(rng)?.1)
    }

    /// Replica `index` of the ensemble seeded by `seed`.
    pub fn replica(&self, seed: StreamSeed, index: u64) -> Result<LatticePath> {
        self.sample(&mut seed.rng(domain::ENSEMBLE, index))
    }

    /// Replicas `range`, sampled in parallel; order and values do not
    /// depend on the number of workers.
    pub fn replicas(&self, seed: StreamSeed, range: std::ops::Range<u64>) -> Result<Vec<LatticePath>> {
        range.into_par_iter().map(|r| self.replica(seed, r)).collect()
    }
}

fn kernel_from(table: &Arc<SurvivalTable>, len: usize) -> Result<ConditionedKernel> {
    ConditionedKernel::view(Arc::clone(table), len)
}

/// Draws one path of the composite measure.
pub fn sample_polymer<R: Rng + ?Sized>(law: &ContactSetLaw, walk: &WalkParams, rng: &mut R) -> Result<LatticePath> {
    if law.walk() != *walk {
        return Err(invalid("walk", "contact law and excursion walk use different p"));
    }
    PolymerSampler::new(law.clone(), &KernelCache::default()).sample(rng)
}

/// Evaluates the composite measure of single paths, reusing kernel tables.
pub struct PathEvaluator<'a> {
    law: &'a ContactSetLaw,
    bulk: Arc<SurvivalTable>,
    meander: Arc<SurvivalTable>,
}

impl<'a> PathEvaluator<'a> {
    pub fn new(law: &'a ContactSetLaw) -> Result<Self> {
        if law.n() > MAX_EXACT_PATH_LEN {
            return Err(Error::TooLarge {
                what: "exact path probability",
                size: law.n(),
                limit: MAX_EXACT_PATH_LEN,
            });
        }
        let walk = law.walk();
        Ok(PathEvaluator {
            law,
            bulk: Arc::new(SurvivalTable::build(walk, ExcursionKind::Bulk, law.n())),
            meander: Arc::new(SurvivalTable::build(walk, ExcursionKind::Final, law.n())),
        })
    }

    /// Probability of a nonnegative path; zero for paths with negative
    /// entries or invalid increments.
    pub fn probability(&self, path: &LatticePath) -> Result<f64> {
        let n = self.law.n();
        if path.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: path.len(),
            });
        }
        let values = path.values();
        if values.iter().any(|&y| y < 0) {
            return Ok(0.0);
        }
        let contacts = ContactSet::new(n, path.zero_set())?;
        let mut prob = self.law.set_probability(&contacts)?;
        let mut start = 0;
        for gap in contacts.gaps() {
            prob *= segment_probability(&self.bulk, &values[start..start + gap])?;
            start += gap;
        }
        if start < n {
            prob *= segment_probability(&self.meander, &values[start..])?;
        }
        Ok(prob)
    }
}

fn segment_probability(table: &Arc<SurvivalTable>, values: &[i64]) -> Result<f64> {
    match kernel_from(table, values.len()) {
        Ok(k) => k.probability_of(values),
        Err(Error::NullEvent { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Probability of `path` under the composite measure (`N <= 16`).
pub fn exact_path_probability(law: &ContactSetLaw, walk: &WalkParams, path: &LatticePath) -> Result<f64> {
    if law.walk() != *walk {
        return Err(invalid("walk", "contact law and excursion walk use different p"));
    }
    PathEvaluator::new(law)?.probability(path)
}

/// Piecewise-linear image `X^N` of a lattice path on `[0, 1]`.
///
/// Heights are kept as integers; grid values are `y_i / sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    heights: Vec<i64>,
    sqrt_n: f64,
}

impl RescaledPath {
    pub fn n(&self) -> usize {
        self.heights.len() - 1
    }

    /// `(y_0 = 0, y_1, ..., y_N)`.
    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub fn sqrt_n(&self) -> f64 {
        self.sqrt_n
    }

    /// `y_i / sqrt(N)` for `i = 0..=N`.
    pub fn grid_values(&self) -> Vec<f64> {
        self.heights.iter().map(|&y| y as f64 / self.sqrt_n).collect()
    }

    pub fn grid_value(&self, i: usize) -> f64 {
        self.heights[i] as f64 / self.sqrt_n
    }

    /// `X^N_t`. Times within a few ulps of a grid point snap to it.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("t", format!("{t} is outside [0, 1]")));
        }
        let n = self.n();
        let u = t * n as f64;
        let nearest = u.round();
        if (u - nearest).abs() <= 4.0 * f64::EPSILON * n as f64 {
            return Ok(self.grid_value(nearest as usize));
        }
        let k = (u.floor() as usize).min(n - 1);
        let frac = u - k as f64;
        let (a, b) = (self.heights[k] as f64, self.heights[k + 1] as f64);
        Ok((a + frac * (b - a)) / self.sqrt_n)
    }

    /// `max_t X_t`, attained at a grid point.
    pub fn max_value(&self) -> f64 {
        self.heights.iter().copied().max().unwrap_or(0) as f64 / self.sqrt_n
    }

    /// `max_t |X_t|`.
    pub fn max_abs(&self) -> f64 {
        self.heights.iter().map(|y| y.abs()).max().unwrap_or(0) as f64 / self.sqrt_n
    }

    /// Grid indices `i` (including 0) with `y_i = 0`.
    pub fn zero_indices(&self) -> Vec<usize> {
        self.heights.iter().enumerate().filter(|(_, &y)| y == 0).map(|(i, _)| i).collect()
    }
}

pub fn rescale(path: &LatticePath) -> RescaledPath {
    let mut heights = Vec::with_capacity(path.len() + 1);
    heights.push(0);
    heights.extend_from_slice(path.values());
    RescaledPath {
        sqrt_n: (path.len() as f64).sqrt(),
        heights,
    }
}

/// On-disk ensemble format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleFormat {
    /// Header `y1,...,yN`, then one path per line.
    #[default]
    Csv,
    /// Fixed-size records of `N` little-endian `i32`.
    Binary,
}

/// Descriptive metadata for an ensemble file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMetadata {
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub family: String,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub theta: Option<usize>,
    pub seed: u64,
    pub replicas: u64,
    pub signed: bool,
    pub format: EnsembleFormat,
}

impl EnsembleMetadata {
    pub fn describe(sampler: &PolymerSampler, seed: u64, replicas: u64, format: EnsembleFormat) -> Self {
        let law = sampler.law();
        let (family, beta, lambda, theta) = match law.family() {
            WeightFamily::Homogeneous { beta } => ("homogeneous", Some(*beta), None, None),
            WeightFamily::Periodic { betas } => ("periodic", None, None, Some(betas.len())),
            WeightFamily::Disordered { beta, lambda, .. } => ("disordered", Some(*beta), Some(*lambda), None),
            WeightFamily::Custom(_) => ("custom", None, None, None),
        };
        EnsembleMetadata {
            p: law.walk().p(),
            n: law.n(),
            family: family.to_owned(),
            beta,
            lambda,
            theta,
            seed,
            replicas,
            signed: sampler.is_signed(),
            format,
        }
    }
}

/// Streams `replicas` paths to `out` in batches of `batch` (sampled in
/// parallel, written in replica order).
pub fn write_ensemble<W: Write>(
    sampler: &PolymerSampler,
    seed: StreamSeed,
    replicas: u64,
    batch: u64,
    format: EnsembleFormat,
    out: W,
) -> Result<()> {
    let batch = batch.max(1);
    let mut out = std::io::BufWriter::new(out);
    if format == EnsembleFormat::Csv {
        let mut w = csv_writer(&mut out);
        w.write_record((1..=sampler.n()).map(|i| format!("y{i}")))?;
        w.flush()?;
    }
    let mut start = 0;
    while start < replicas {
        let end = (start + batch).min(replicas);
        let paths = sampler.replicas(seed, start..end)?;
        match format {
            EnsembleFormat::Csv => {
                let mut w = csv_writer(&mut out);
                for p in &paths {
                    w.write_record(p.values().iter().map(|v| v.to_string()))?;
                }
                w.flush()?;
            }
            EnsembleFormat::Binary => {
                for p in &paths {
                    for &v in p.values() {
                        out.write_all(&(v as i32).to_le_bytes())?;
                    }
                }
            }
        }
        start = end;
    }
    out.flush()?;
    Ok(())
}

/// Reads back a binary ensemble of paths of length `n`.
pub fn read_binary_ensemble(bytes: &[u8], n: usize) -> Result<Vec<LatticePath>> {
    let rec = 4 * n;
    if n == 0 || bytes.len() % rec != 0 {
        return Err(invalid("ensemble", "byte length is not a multiple of the record size"));
    }
    bytes
        .chunks_exact(rec)
        .map(|c| {
            let vals = c.chunks_exact(4).map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as i64).collect();
            LatticePath::new(vals)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::CustomWeights;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(p: f64) -> WalkParams {
        WalkParams::new(p).unwrap()
    }

    fn forcing(n: usize, contacts: &[usize]) -> ContactSetLaw {
        let mut c = CustomWeights::default();
        let mut prev = 0;
        for &j in contacts {
            c.bulk.insert((prev, j), 1.0);
            prev = j;
        }
        c.last.insert(prev, 1.0);
        if prev != n {
            c.last.insert(n, 0.0);
        }
        ContactSetLaw::new(n, WeightFamily::Custom(c), w(0.3)).unwrap()
    }

    #[test]
    fn full_contact_gives_zero_path() {
        let law = forcing(2, &[1, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = sample_polymer(&law, &w(0.3), &mut rng).unwrap();
        assert_eq!(path.values(), &[0, 0]);
        let p = exact_path_probability(&law, &w(0.3), &path).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_contact_gives_meander_law() {
        let law = forcing(2, &[]);
        let ev = PathEvaluator::new(&law).unwrap();
        let p11 = ev.probability(&LatticePath::new(vec![1, 1]).unwrap()).unwrap();
        let p12 = ev.probability(&LatticePath::new(vec![1, 2]).unwrap()).unwrap();
        assert!((p11 - 4.0 / 7.0).abs() < 1e-14);
        assert!((p12 - 3.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn negative_paths_have_no_mass() {
        let law = ContactSetLaw::new(3, WeightFamily::Homogeneous { beta: 0.5 }, w(0.3)).unwrap();
        let p = exact_path_probability(&law, &w(0.3), &LatticePath::new(vec![-1, 0, 1]).unwrap()).unwrap();
        assert_eq!(p, 0.0);
        let big = ContactSetLaw::new(17, WeightFamily::Homogeneous { beta: 0.5 }, w(0.3)).unwrap();
        assert!(PathEvaluator::new(&big).is_err());
        assert!(exact_path_probability(&law, &w(0.2), &LatticePath::new(vec![1, 0, 1]).unwrap()).is_err());
    }

    #[test]
    fn zero_set_matches_drawn_contacts() {
        let cache = KernelCache::default();
        for signed in [false, true] {
            let law = ContactSetLaw::new(300, WeightFamily::Homogeneous { beta: 0.2 }, w(0.3)).unwrap();
            let sampler = PolymerSampler::new(law, &cache).with_signs(signed);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..200 {
                let (set, path) = sampler.sample_with_contacts(&mut rng).unwrap();
                assert_eq!(set.contacts(), path.zero_set().as_slice());
                if !signed {
                    assert!(path.values().iter().all(|&y| y >= 0));
                }
            }
        }
    }

    #[test]
    fn rescale_examples() {
        let x = rescale(&LatticePath::new(vec![1, 0]).unwrap());
        assert!((x.eval(0.5).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((x.eval(0.75).unwrap() - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(x.eval(0.0).unwrap(), 0.0);
        assert_eq!(x.eval(1.0).unwrap(), 0.0);
        assert!(x.eval(1.5).is_err());
        assert!(x.eval(-0.1).is_err());
        let x = rescale(&LatticePath::new(vec![1, 1, 1, 0]).unwrap());
        assert!((x.eval(5.0 / 8.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn replicas_independent_of_worker_count() {
        let law = ContactSetLaw::new(200, WeightFamily::Homogeneous { beta: 0.0 }, w(0.3)).unwrap();
        let sampler = PolymerSampler::new(law, &KernelCache::default());
        let seed = StreamSeed(77);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| sampler.replicas(seed, 0..64)).unwrap();
        let b = three.install(|| sampler.replicas(seed, 0..64)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[5], sampler.replica(seed, 5).unwrap());
    }

    #[test]
    fn binary_ensemble_round_trip() {
        let law = ContactSetLaw::new(30, WeightFamily::Homogeneous { beta: 0.0 }, w(0.3)).unwrap();
        let sampler = PolymerSampler::new(law, &KernelCache::default()).with_signs(true);
        let mut buf = Vec::new();
        write_ensemble(&sampler, StreamSeed(1), 25, 7, EnsembleFormat::Binary, &mut buf).unwrap();
        let back = read_binary_ensemble(&buf, 30).unwrap();
        assert_eq!(back, sampler.replicas(StreamSeed(1), 0..25).unwrap());
        let mut csv = Vec::new();
        write_ensemble(&sampler, StreamSeed(1), 25, 7, EnsembleFormat::Csv, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("y1,y2,"));
        let first: Vec<i64> = text.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first, back[0].values());
    }
}
