//! Acceptance run: one pass/fail line per criterion.
//!
//! Criteria 1-9 run twice, on worker pools of different sizes; criterion
//! 10 compares the CSV output of the two runs byte for byte. CSVs are kept
//! under the cargo target tmpdir for inspection.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;
use tightwalk::assembly::{rescale, PathEvaluator, PolymerSampler};
use tightwalk::diagnostics::integrability::{c_table, lemma_table};
use tightwalk::diagnostics::modulus::ModulusScratch;
use tightwalk::diagnostics::report::{float, DiagnosticsReport};
use tightwalk::diagnostics::tightness::size_seed;
use tightwalk::diagnostics::{ck_series, tightness_sweep, EnsembleSource};
use tightwalk::excursion::{build_kernel, ExcursionKind};
use tightwalk::oracle::{for_each_path, kernel_total_variation, polymer_law_gibbs};
use tightwalk::walk::{first_passage_pmf, pinned_positive_dp, pinned_positive_pmf, reflection_first_passage, ruin_probability};
use tightwalk::{ContactSetLaw, KernelCache, LatticePath, StreamSeed, WalkParams, WeightFamily};

const MASTER_SEED: u64 = 20_240_601;
const PS: [f64; 3] = [0.1, 0.3, 0.45];

struct Outcome {
    passed: bool,
    detail: String,
    csv: String,
}

fn walk(p: f64) -> WalkParams {
    WalkParams::new(p).unwrap()
}

fn dyadic_deltas() -> Vec<f64> {
    (0..=8).map(|k| 0.5f64.powi(k)).collect()
}

/// Pearson statistic with cells of expected count below 5 pooled.
fn chi_square(cells: &[(f64, u64)]) -> (f64, usize) {
    let mut sorted: Vec<(f64, u64)> = cells.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pooled: Vec<(f64, u64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0u64);
    for &(ei, oi) in &sorted {
        if e < 5.0 {
            e += ei;
            o += oi;
        } else {
            pooled.push((e, o));
            e = ei;
            o = oi;
        }
    }
    if e < 5.0 && !pooled.is_empty() {
        let last = pooled.pop().unwrap();
        e += last.0;
        o += last.1;
    }
    pooled.push((e, o));
    let stat = pooled.iter().map(|&(e, o)| (o as f64 - e).powi(2) / e).sum();
    (stat, pooled.len() - 1)
}

fn criterion_1() -> Outcome {
    let samples = 100_000u64;
    let mut csv = String::from("N,p,beta,sum_deviation,gibbs_deviation,chi2,df,p_value\n");
    let (mut ok, mut worst_sum, mut min_pv) = (true, 0.0f64, 1.0f64);
    let cache = KernelCache::default();
    for n in [4usize, 6, 8, 10] {
        for p in [0.1, 0.3] {
            for beta in [0.0, 0.5] {
                let law = ContactSetLaw::new(n, WeightFamily::Homogeneous { beta }, walk(p)).unwrap();
                let eval = PathEvaluator::new(&law).unwrap();
                let gibbs = polymer_law_gibbs(&walk(p), law.rewards());
                let mut exact: HashMap<Vec<i64>, f64> = HashMap::new();
                let (mut sum, mut gdev) = (0.0, 0.0f64);
                for_each_path(&walk(p), n, |_, y| y >= 0, |y, _| {
                    let q = eval.probability(&LatticePath::new(y.to_vec()).unwrap()).unwrap();
                    sum += q;
                    gdev = gdev.max((q - gibbs.get(y).copied().unwrap_or(0.0)).abs());
                    if q > 0.0 {
                        exact.insert(y.to_vec(), q);
                    }
                });
                let sampler = PolymerSampler::new(law, &cache);
                let seed = StreamSeed(MASTER_SEED).child(1).child(((n as u64) << 16) | ((p * 10.0) as u64 * 4 + (beta * 2.0) as u64));
                let paths = sampler.replicas(seed, 0..samples).unwrap();
                let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
                let mut outside = 0;
                for path in paths {
                    let v = path.into_values();
                    if exact.contains_key(&v) {
                        *counts.entry(v).or_default() += 1;
                    } else {
                        outside += 1;
                    }
                }
                let mut keys: Vec<&Vec<i64>> = exact.keys().collect();
                keys.sort();
                let cells: Vec<(f64, u64)> = keys
                    .iter()
                    .map(|k| (exact[*k] * samples as f64, counts.get(*k).copied().unwrap_or(0)))
                    .collect();
                let (stat, df) = chi_square(&cells);
                let pv = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
                let dev = (sum - 1.0).abs();
                ok &= dev <= 1e-10 && gdev <= 1e-10 && pv > 1e-3 && outside == 0;
                worst_sum = worst_sum.max(dev);
                min_pv = min_pv.min(pv);
                writeln!(csv, "{n},{p},{beta},{},{},{},{df},{}", float(dev), float(gdev), float(stat), float(pv)).unwrap();
            }
        }
    }
    Outcome {
        passed: ok,
        detail: format!("max |sum - 1| = {worst_sum:.1e}, min chi2 p-value = {min_pv:.3}"),
        csv,
    }
}

fn criterion_2() -> Outcome {
    let mut csv = String::from("p,kind,t,total_variation\n");
    let mut worst = 0.0f64;
    for p in PS {
        for kind in [ExcursionKind::Bulk, ExcursionKind::Final] {
            for t in 1..=12 {
                let k = build_kernel(&walk(p), t, kind).unwrap();
                let tv = kernel_total_variation(&k).unwrap();
                worst = worst.max(tv);
                writeln!(csv, "{p},{kind},{t},{}", float(tv)).unwrap();
            }
        }
    }
    Outcome {
        passed: worst < 1e-12,
        detail: format!("max total variation = {worst:.1e}"),
        csv,
    }
}

fn criterion_3() -> Outcome {
    let mut csv = String::from("p,identity,max_deviation\n");
    let mut worst = 0.0f64;
    for p in PS {
        let w = walk(p);
        let mut fp = 0.0f64;
        for n in 2..=40 {
            fp = fp.max((first_passage_pmf(&w, n).unwrap() - reflection_first_passage(&w, n).unwrap()).abs());
        }
        let mut pin = 0.0f64;
        for m in 1..=40 {
            for b in 1..=m as i64 + 1 {
                pin = pin.max((pinned_positive_pmf(&w, m, b).unwrap() - pinned_positive_dp(&w, m, b).unwrap()).abs());
            }
        }
        worst = worst.max(fp).max(pin);
        writeln!(csv, "{p},first_passage,{}", float(fp)).unwrap();
        writeln!(csv, "{p},pinned_positive,{}", float(pin)).unwrap();
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("max deviation = {worst:.1e}"),
        csv,
    }
}

fn criterion_4() -> Outcome {
    let mut csv = String::from("b,p,ruin,ruin_times_b\n");
    let (mut dev, mut spread) = (0.0f64, 0.0f64);
    for b in 1..=20i64 {
        let vals: Vec<f64> = PS.iter().map(|&p| ruin_probability(&walk(p), b).unwrap()).collect();
        for (&p, &v) in PS.iter().zip(&vals) {
            dev = dev.max((v * b as f64 - 1.0).abs());
            writeln!(csv, "{b},{p},{},{}", float(v), float(v * b as f64)).unwrap();
        }
        let hi = vals.iter().copied().fold(f64::MIN, f64::max);
        let lo = vals.iter().copied().fold(f64::MAX, f64::min);
        spread = spread.max(hi - lo);
    }
    Outcome {
        passed: dev <= 1e-12 && spread <= 1e-12,
        detail: format!("max |b h(b) - 1| = {dev:.1e}, max spread over p = {spread:.1e}"),
        csv,
    }
}

fn criterion_5() -> Outcome {
    let s = ck_series(&walk(0.3), &[3000, 6000]).unwrap();
    let ratio = s.doublings[0].ratio;
    let csv = DiagnosticsReport::Ck(s).tables()[0].1.to_csv();
    Outcome {
        passed: (ratio - 1.0).abs() < 0.02,
        detail: format!("ratio at n = 3000 is {ratio:.5}"),
        csv,
    }
}

fn a_grid() -> Vec<f64> {
    (0..=40).map(|j| 0.25 * j as f64).collect()
}

fn criterion_6() -> Outcome {
    let table = c_table(&walk(0.3), 200, &a_grid()).unwrap();
    let monotone = table.sup.windows(2).all(|w| w[1].value <= w[0].value);
    let c10 = table.sup.iter().find(|s| s.a == 10.0).unwrap().value;
    let zero_beyond = table.rows.iter().filter(|r| r.a >= r.n as f64).all(|r| r.c == 0.0);
    let per_n_monotone = table.rows.windows(2).filter(|w| w[0].n == w[1].n).all(|w| w[1].c <= w[0].c);
    let csv = DiagnosticsReport::C(table).tables()[1].1.to_csv();
    Outcome {
        passed: monotone && per_n_monotone && c10 < 0.05 && zero_beyond,
        detail: format!("C nonincreasing: {monotone}, C(10) = {c10:.2e}, c_n(a) = 0 for a >= n: {zero_beyond}"),
        csv,
    }
}

fn criterion_7() -> Outcome {
    let short: Vec<usize> = (2..=200).collect();
    let long: Vec<usize> = (2..=400).collect();
    let a = lemma_table(&walk(0.3), &short, &a_grid()).unwrap();
    let b = lemma_table(&walk(0.3), &long, &a_grid()).unwrap();
    let change = b.max_scaled / a.max_scaled - 1.0;
    let csv = format!(
        "n_max,max_scaled,argmax_n,argmax_a\n200,{},{},{}\n400,{},{},{}\n",
        float(a.max_scaled),
        a.argmax_n,
        float(a.argmax_a),
        float(b.max_scaled),
        b.argmax_n,
        float(b.argmax_a)
    );
    Outcome {
        passed: change.abs() < 0.05,
        detail: format!("max f(1+a^2): {:.4} (n <= 200) vs {:.4} (n <= 400), change {:.2}%", a.max_scaled, b.max_scaled, 100.0 * change),
        csv,
    }
}

fn criterion_8() -> Outcome {
    let n = 1000;
    let deltas = dyadic_deltas();
    let cache = KernelCache::default();
    let mut csv = String::from("signed,replica,delta,gamma,gamma_tilde\n");
    let mut violations = 0;
    for signed in [false, true] {
        let sampler = PolymerSampler::new(ContactSetLaw::new(n, WeightFamily::Homogeneous { beta: 0.0 }, walk(0.3)).unwrap(), &cache)
            .with_signs(signed);
        let seed = size_seed(StreamSeed(MASTER_SEED).child(8 + signed as u64), n);
        let paths = sampler.replicas(seed, 0..1000).unwrap();
        let mut scratch = ModulusScratch::default();
        for (r, path) in paths.iter().enumerate() {
            let m = scratch.moduli_many(&rescale(path), &deltas).unwrap();
            for (d, mi) in deltas.iter().zip(&m) {
                if !(mi.gamma_tilde <= mi.gamma && mi.gamma <= 2.0 * mi.gamma_tilde) {
                    violations += 1;
                }
                if r < 5 {
                    writeln!(csv, "{signed},{r},{},{},{}", float(*d), float(mi.gamma), float(mi.gamma_tilde)).unwrap();
                }
            }
            if m.windows(2).any(|w| w[1].gamma > w[0].gamma || w[1].gamma_tilde > w[0].gamma_tilde) {
                violations += 1;
            }
        }
    }
    Outcome {
        passed: violations == 0,
        detail: format!("{violations} violations over 2 x 1000 paths x 9 deltas"),
        csv,
    }
}

fn criterion_9() -> Outcome {
    let deltas = dyadic_deltas();
    let src = EnsembleSource {
        walk: walk(0.3),
        family: WeightFamily::Homogeneous { beta: 0.0 },
        signed: false,
    };
    let grid = tightness_sweep(&src, &[100, 1000, 10_000], &deltas, 0.5, 10_000, StreamSeed(MASTER_SEED).child(9)).unwrap();
    // Exceedance can only shrink as delta shrinks.
    let monotone = [100, 1000, 10_000].iter().all(|&n| grid.row(n).windows(2).all(|w| w[1].exceed <= w[0].exceed));
    let below = deltas.iter().copied().find(|&d| grid.sup_exceedance(d) < 0.05);
    let csv = DiagnosticsReport::Tightness(grid.clone()).tables()[0].1.to_csv();
    let sups: Vec<String> = deltas.iter().map(|&d| format!("{:.3}", grid.sup_exceedance(d))).collect();
    Outcome {
        passed: monotone && below.is_some(),
        detail: format!(
            "monotone in delta: {monotone}; sup_N exceedance by delta = [{}]; first below 0.05 at delta = {}",
            sups.join(", "),
            below.map_or("none".into(), |d| d.to_string())
        ),
        csv,
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("oracle equivalence of the path measure", criterion_1),
    ("conditioned-law exactness", criterion_2),
    ("reflection identities", criterion_3),
    ("ruin identity", criterion_4),
    ("first-passage constant", criterion_5),
    ("uniform integrability C(a)", criterion_6),
    ("maximum-tail bound constant", criterion_7),
    ("modulus sandwich", criterion_8),
    ("tightness trend", criterion_9),
];

fn run_all(threads: usize, dir: &PathBuf) -> Vec<(Outcome, f64)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    std::fs::create_dir_all(dir).unwrap();
    CRITERIA
        .iter()
        .enumerate()
        .map(|(i, (_, f))| {
            let start = Instant::now();
            let out = pool.install(f);
            std::fs::write(dir.join(format!("criterion_{}.csv", i + 1)), &out.csv).unwrap();
            (out, start.elapsed().as_secs_f64())
        })
        .collect()
}

fn main() {
    // `cargo test -- --list` and filters should not trigger the full run.
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let first = run_all(1, &root.join("run1"));
    let second = run_all(2, &root.join("run2"));
    let mut all_ok = true;
    for (i, ((name, _), (out, secs))) in CRITERIA.iter().zip(&first).enumerate() {
        let status = if out.passed { "PASS" } else { "FAIL" };
        all_ok &= out.passed;
        println!("criterion {:>2} {status}: {name}: {} [{secs:.1}s]", i + 1, out.detail);
    }
    let differing: Vec<usize> = first
        .iter()
        .zip(&second)
        .enumerate()
        .filter(|(_, (a, b))| a.0.csv != b.0.csv)
        .map(|(i, _)| i + 1)
        .collect();
    let det = differing.is_empty();
    all_ok &= det;
    println!(
        "criterion 10 {}: determinism: {}",
        if det { "PASS" } else { "FAIL" },
        if det {
            "two runs (1 and 2 workers) produced byte-identical CSVs".to_string()
        } else {
            format!("CSV output differs for criteria {differing:?}")
        }
    );
    if !all_ok {
        std::process::exit(1);
    }
}
