//! Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//!
//! Criteria 3, 4 and 8 need the public Z-Alizadeh Sani CSV; point
//! `CADMINE_ZALIZADEH_CSV` at it to enable them. Without it they print SKIP.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cadmine::binarize::{binarize_dataset, BinaryMatrix};
use cadmine::bits::BitVec;
use cadmine::config::DatasetConfig;
use cadmine::eval::{info_gain, rank_features, roc_auc, ConfusionMatrix};
use cadmine::gafs::{run_ga, GaConfig};
use cadmine::miner::{inject_features, mine_frequent_itemsets, sweep_min_sup, MinerConfig};
use cadmine::pipeline::{load_and_discretize, run_pipeline, PipelineConfig};
use cadmine::profiling::{Level, ProfileId};
use cadmine::svm::{self, Gram, Kernel, KernelSpec, SvmConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, pinned.
const METRIC_DECIMALS: i32 = 2;
const COUNT_REL_TOL: f64 = 0.05;
const GAIN_TOL: f64 = 0.005;
const QP_OBJECTIVE_TOL: f64 = 1e-4;
const AUC_TOL: f64 = 1e-12;
const GA_MIN_FITNESS: f64 = 0.9;
const GA_MIN_PLANTED: usize = 3;
const E2E_MIN_ACCURACY: f64 = 0.85;
const E2E_MIN_AUC: f64 = 0.85;
const BOUNDARY_DELTA: f64 = 1e-6;
/// Rate identities computed through different divisions agree to rounding.
const IDENTITY_TOL: f64 = 4.0 * f64::EPSILON;

const DATASET_ENV: &str = "CADMINE_ZALIZADEH_CSV";

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("config/zalizadeh.profiles")
}

fn sample_csv() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/zalizadeh_sample.csv")
}

fn real_dataset() -> Option<PathBuf> {
    std::env::var_os(DATASET_ENV).map(PathBuf::from).filter(|p| p.is_file())
}

fn binarized(csv: &Path) -> Result<BinaryMatrix, String> {
    let (cfg, _, records) = load_and_discretize(csv, &fixture()).map_err(|e| e.to_string())?;
    binarize_dataset(&records, &cfg.schema).map_err(|e| e.to_string())
}

fn round_pct(x: f64) -> f64 {
    let s = 10f64.powi(METRIC_DECIMALS);
    (x * 100.0 * s).round() / s
}

// 1 ------------------------------------------------------------------------

fn c1_metric_formulas() -> Check {
    // best row of the published results table, in percent
    let (acc, sens, spec) = (98.35, 100.0, 94.25);
    let m = ConfusionMatrix { f11: 216, f10: 0, f01: 5, f00: 82 };
    let got = (
        round_pct(m.accuracy().unwrap()),
        round_pct(m.sensitivity().unwrap()),
        round_pct(m.specificity().unwrap()),
    );
    ensure(got == (acc, sens, spec), || format!("got {got:?}"))?;
    // oracle: the only integer matrix over 303 records giving those rates
    let mut solutions = Vec::new();
    for pos in 1..303usize {
        let neg = 303 - pos;
        for tp in 0..=pos {
            if round_pct(tp as f64 / pos as f64) != sens {
                continue;
            }
            for tn in 0..=neg {
                if round_pct(tn as f64 / neg as f64) == spec && round_pct((tp + tn) as f64 / 303.0) == acc {
                    solutions.push((tp, pos - tp, neg - tn, tn));
                }
            }
        }
    }
    ensure(solutions == vec![(216, 0, 5, 82)], || format!("integer solutions {solutions:?}"))?;
    ensure(m.tpr().unwrap() == m.sensitivity().unwrap(), || "tpr != sensitivity".into())?;
    ensure((m.fpr().unwrap() - (1.0 - m.specificity().unwrap())).abs() <= IDENTITY_TOL, || "fpr != 1 - specificity".into())?;
    Ok(format!("{acc}% / {sens}% / {spec}%, unique integer solution"))
}

// 2 ------------------------------------------------------------------------

fn random_matrix(rng: &mut ChaCha8Rng) -> BinaryMatrix {
    let cols = rng.gen_range(1..=12);
    let rows = rng.gen_range(1..=64);
    let density = rng.gen_range(0.2..0.8);
    let names: Vec<String> = (0..cols).map(|c| format!("c{c}")).collect();
    let columns = (0..cols)
        .map(|_| (0..rows).map(|_| rng.gen_bool(density)).collect())
        .collect();
    let target = (0..rows).map(|_| rng.gen_bool(0.5)).collect();
    BinaryMatrix::new(names, columns, "y".into(), target).unwrap()
}

/// Every non-empty column subset whose support, as an exact fraction,
/// reaches `num / den`.
fn brute_force_itemsets(m: &BinaryMatrix, num: usize, den: usize) -> BTreeSet<(Vec<usize>, usize)> {
    let k = m.n_features();
    let mut out = BTreeSet::new();
    for subset in 1u32..(1 << k) {
        let items: Vec<usize> = (0..k).filter(|&c| subset & (1 << c) != 0).collect();
        let count = (0..m.n_records)
            .filter(|&r| items.iter().all(|&c| m.columns[c].get(r)))
            .count();
        if count * den >= num * m.n_records {
            out.insert((items, count));
        }
    }
    out
}

fn c2_apriori_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut compared = 0;
    for instance in 0..20 {
        let m = random_matrix(&mut rng);
        for (num, den) in [(1, 10), (3, 10), (1, 2)] {
            let cfg = MinerConfig::new(num as f64 / den as f64, None).unwrap();
            let mined = mine_frequent_itemsets(&m, &cfg).map_err(|e| e.to_string())?;
            let got: BTreeSet<_> = mined.iter().map(|s| (s.items.clone(), s.support_count)).collect();
            ensure(got.len() == mined.len(), || "duplicate itemsets".into())?;
            let want = brute_force_itemsets(&m, num, den);
            ensure(got == want, || {
                format!(
                    "instance {instance} min_sup {num}/{den}: {} mined vs {} expected",
                    got.len(),
                    want.len()
                )
            })?;
            compared += want.len();
        }
    }
    Ok(format!("20 matrices x 3 thresholds, {compared} itemsets matched"))
}

// 3 ------------------------------------------------------------------------

const SWEEP: [(f64, usize); 7] = [
    (0.033, 16382),
    (0.05, 5815),
    (0.075, 2565),
    (0.1, 1261),
    (0.2, 223),
    (0.4, 23),
    (0.5, 12),
];

fn c3_sweep_counts(csv: &Path) -> Check {
    let m = binarized(csv)?;
    let values: Vec<f64> = SWEEP.iter().map(|s| s.0).collect();
    let got = sweep_min_sup(&m, &values).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    let mut bad = Vec::new();
    for ((min_sup, want), (_, count)) in SWEEP.iter().zip(&got) {
        let rel = (*count as f64 - *want as f64).abs() / *want as f64;
        report.push(format!("{min_sup}:{count}/{want}"));
        if rel > COUNT_REL_TOL {
            bad.push(format!("{min_sup}: {count} vs {want} ({:.1}%)", rel * 100.0));
        }
    }
    ensure(bad.is_empty(), || format!("outside +-5%: {}", bad.join(", ")))?;
    Ok(report.join(" "))
}

// 4 ------------------------------------------------------------------------

fn c4_info_gain(csv: &Path) -> Check {
    let m = binarized(csv)?;
    let col = m.column_index("Typical Chest Pain").ok_or("no Typical Chest Pain column")?;
    let gain = info_gain(&m.columns[col], &m.target).map_err(|e| e.to_string())?;
    ensure((gain - 0.231).abs() <= GAIN_TOL, || format!("gain {gain:.4}, expected 0.231"))?;
    let cfg = MinerConfig::new(0.033, None).unwrap();
    let sets = mine_frequent_itemsets(&m, &cfg).map_err(|e| e.to_string())?;
    let aug = inject_features(&m, &sets).map_err(|e| e.to_string())?.combined();
    let top = rank_features(&aug, 20).map_err(|e| e.to_string())?;
    ensure(top.len() == 20, || format!("{} ranked rows", top.len()))?;
    ensure(top[0].0 == "Typical Chest Pain", || format!("rank 1 is {:?}", top[0].0))?;
    Ok(format!("gain {gain:.4}; rank 1 {:?}", top[0].0))
}

// 5 ------------------------------------------------------------------------

fn dense_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<bool>) {
    loop {
        let n = rng.gen_range(4..=20);
        let dim = rng.gen_range(1..=3);
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<bool> = x
            .iter()
            .map(|p| p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-0.5..0.5) > 0.0)
            .collect();
        if y.iter().any(|&v| v) && y.iter().any(|&v| !v) {
            return (x, y);
        }
    }
}

fn pm(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

/// Euclidean projection onto `{0 <= a <= c, y.a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let g = |lam: f64| at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum::<f64>();
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    // g is non-increasing in lam
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual, independent of SMO.
fn qp_oracle(k: &[Vec<f64>], y: &[bool], c: f64) -> f64 {
    let n = y.len();
    let ys: Vec<f64> = y.iter().map(|&b| pm(b)).collect();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| ys[i] * ys[j] * k[i][j]).collect()).collect();
    let lip = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max).max(1e-12);
    let objective = |a: &[f64]| {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * a[j] * q[i][j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>()).collect();
        let step: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi + gi / lip).collect();
        let next = project(&step, &ys, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(nx, ax)| nx + (t - 1.0) / t_next * (nx - ax)).collect();
        a = next;
        t = t_next;
    }
    objective(&a)
}

fn kkt_violation(gram: &Gram, y: &[bool], sol: &svm::Solution, c: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| sol.alphas[j] * pm(y[j]) * gram.get(i, j)).sum::<f64>() + sol.bias;
        let m = pm(y[i]) * f;
        let a = sol.alphas[i];
        let v = if a <= 0.0 {
            (1.0 - m).max(0.0)
        } else if a >= c {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn c5_svm() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_gap: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    for instance in 0..10 {
        let (x, y) = dense_instance(&mut rng);
        let c = [0.5, 1.0, 10.0][instance % 3];
        let kernel = if instance % 2 == 0 { Kernel::Linear } else { Kernel::Rbf { gamma: 0.5 } };
        let gram = Gram::new(&x, &kernel).map_err(|e| e.to_string())?;
        let k: Vec<Vec<f64>> = (0..x.len()).map(|i| (0..x.len()).map(|j| kernel.eval(&x[i], &x[j])).collect()).collect();

        // KKT at the default tolerance
        let tol = SvmConfig::default().tol;
        let sol = svm::solve(&gram, &y, c, tol, 1_000_000);
        ensure(sol.converged, || format!("instance {instance} did not converge"))?;
        let viol = kkt_violation(&gram, &y, &sol, c);
        ensure(viol <= tol + 1e-9, || format!("instance {instance}: KKT violation {viol:.2e} > {tol}"))?;
        worst_kkt = worst_kkt.max(viol);

        // objective against the oracle, solved tightly
        let tight = svm::solve(&gram, &y, c, 1e-8, 1_000_000);
        let ours = svm::dual_objective(&gram, &y, &tight.alphas);
        let oracle = qp_oracle(&k, &y, c);
        let gap = (ours - oracle).abs();
        ensure(gap <= QP_OBJECTIVE_TOL, || format!("instance {instance}: objective {ours} vs oracle {oracle}"))?;
        worst_gap = worst_gap.max(gap);
    }

    let xor: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let labels = [false, false, true, true];
    let cfg = SvmConfig { kernel: KernelSpec::Rbf { gamma: Some(1.0) }, c: 10.0, ..SvmConfig::default() };
    let model = svm::train(&xor, &labels, &cfg).map_err(|e| e.to_string())?;
    for (p, &l) in xor.iter().zip(&labels) {
        ensure(model.predict(p).unwrap() == l, || format!("XOR point {p:?} misclassified"))?;
    }
    Ok(format!("max KKT violation {worst_kkt:.1e}, max objective gap {worst_gap:.1e}, XOR 4/4"))
}

// 6 ------------------------------------------------------------------------

fn c6_auc() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let n = rng.gen_range(2..=50);
        let levels = rng.gen_range(2..=10);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let actual: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if actual.iter().all(|&a| a) || actual.iter().all(|&a| !a) {
            continue;
        }
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in (0..n).filter(|&i| actual[i]) {
            for j in (0..n).filter(|&j| !actual[j]) {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
        let auc = roc_auc(&scores, &actual).map_err(|e| e.to_string())?.auc;
        let diff = (auc - wins / pairs).abs();
        ensure(diff <= AUC_TOL, || format!("instance {done}: {auc} vs {}", wins / pairs))?;
        worst = worst.max(diff);
        done += 1;
    }
    Ok(format!("50 instances, max difference {worst:.1e}"))
}

// 7 ------------------------------------------------------------------------

fn c7_ga_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200;
    let target: BitVec = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for j in 0..5 {
        names.push(format!("planted{j}"));
        columns.push(target.iter().map(|t| t ^ rng.gen_bool(0.05)).collect());
    }
    for j in 0..50 {
        names.push(format!("noise{j}"));
        columns.push((0..n).map(|_| rng.gen_bool(0.5)).collect());
    }
    let data = BinaryMatrix::new(names, columns, "y".into(), target).unwrap();
    let ga = GaConfig { population_size: 40, max_generations: 30, seed: 7, ..GaConfig::default() };
    let r = run_ga(&data, &ga, &SvmConfig::default()).map_err(|e| e.to_string())?;
    let planted = (0..5).filter(|&j| r.best.bits.get(j)).count();
    ensure(r.fitness >= GA_MIN_FITNESS, || format!("fitness {:.4}", r.fitness))?;
    ensure(planted >= GA_MIN_PLANTED, || format!("only {planted} planted columns selected"))?;
    Ok(format!(
        "fitness {:.4}, {planted}/5 planted, {} columns, {} generations",
        r.fitness,
        r.best.selected(),
        r.history.len()
    ))
}

// 8 ------------------------------------------------------------------------

fn c8_end_to_end(csv: &Path) -> Check {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::new(csv, fixture(), out.path());
    cfg.seed = 8;
    cfg.miner = MinerConfig::new(0.1, None).unwrap();
    let r = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let manifest = std::fs::read_to_string(&r.manifest).map_err(|e| e.to_string())?;
    let table: toml::Table = manifest.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let auc = table["metrics"]["auc"].as_float().ok_or("manifest has no auc")?;
    let acc = r.metrics.accuracy;
    ensure(acc >= E2E_MIN_ACCURACY, || format!("pooled accuracy {acc:.4}"))?;
    ensure(auc >= E2E_MIN_AUC, || format!("manifest auc {auc:.4}"))?;
    Ok(format!(
        "accuracy {acc:.4}, sensitivity {:.4}, specificity {:.4}, auc {auc:.4}, {} selected",
        r.metrics.sensitivity,
        r.metrics.specificity,
        r.selected.len()
    ))
}

// 9 ------------------------------------------------------------------------

fn c9_determinism() -> Check {
    let (csv, source) = match real_dataset() {
        Some(p) => (p, "dataset"),
        None => (sample_csv(), "bundled sample"),
    };
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::new(&csv, fixture(), out.path());
    cfg.seed = 9;
    cfg.miner = MinerConfig::new(0.4, None).unwrap();
    cfg.ga = GaConfig { population_size: 12, max_generations: 8, ..GaConfig::default() };
    cfg.eval_folds = 5;
    let files = ["manifest.toml", "itemsets.tsv", "selected.txt"];
    let read = |f: &str| std::fs::read(out.path().join(f)).map_err(|e| format!("{f}: {e}"));
    run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let first = files.iter().map(|f| read(f)).collect::<Result<Vec<_>, _>>()?;
    run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let second = files.iter().map(|f| read(f)).collect::<Result<Vec<_>, _>>()?;
    for ((f, a), b) in files.iter().zip(&first).zip(&second) {
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} identical across two runs ({source})", files.join(", ")))
}

// 10 -----------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Bound {
    Const(f64),
    /// `age * coef + offset`
    Age(f64, f64),
}

impl Bound {
    fn at(self, age: f64) -> f64 {
        match self {
            Bound::Const(x) => x,
            Bound::Age(k, o) => age * k + o,
        }
    }
}

/// (feature, profiles, low cut, low cut belongs to Low, high cut)
type Row = (&'static str, &'static [&'static str], Option<Bound>, bool, Option<Bound>);

const ALL: &[&str] = &["p1", "p2", "p3", "p4"];
const MEN: &[&str] = &["p1", "p3"];
const WOMEN: &[&str] = &["p2", "p4"];

/// The published normal-range table, transcribed independently of the
/// shipped config. A high cut never includes its own value.
const TABLE: &[Row] = &[
    ("FBS", ALL, Some(Bound::Const(60.0)), false, Some(Bound::Const(99.0))),
    ("ESR", MEN, None, false, Some(Bound::Age(0.5, 0.0))),
    ("ESR", WOMEN, None, false, Some(Bound::Age(0.5, 5.0))),
    ("Age", MEN, None, false, Some(Bound::Const(45.0))),
    ("Age", WOMEN, None, false, Some(Bound::Const(55.0))),
    ("Cr", MEN, Some(Bound::Const(0.75)), false, Some(Bound::Const(1.2))),
    ("Cr", WOMEN, Some(Bound::Const(0.65)), false, Some(Bound::Const(1.0))),
    ("LDL", ALL, None, false, Some(Bound::Const(130.0))),
    ("HDL", ALL, Some(Bound::Const(40.0)), false, None),
    ("WBC", ALL, Some(Bound::Const(4000.0)), false, Some(Bound::Const(10000.0))),
    ("BUN", ALL, Some(Bound::Const(8.0)), false, Some(Bound::Const(21.0))),
    ("HB", MEN, Some(Bound::Const(13.5)), false, Some(Bound::Const(17.5))),
    ("HB", WOMEN, Some(Bound::Const(12.0)), false, Some(Bound::Const(16.0))),
    ("K", ALL, Some(Bound::Const(3.4)), false, Some(Bound::Const(5.3))),
    ("Na", ALL, Some(Bound::Const(137.0)), false, Some(Bound::Const(147.0))),
    ("PLT", ALL, Some(Bound::Const(150.0)), false, Some(Bound::Const(399.0))),
    ("BP", ALL, Some(Bound::Const(90.0)), false, Some(Bound::Const(140.0))),
    ("PR", ALL, Some(Bound::Const(60.0)), false, Some(Bound::Const(100.0))),
    ("TG", ALL, None, false, Some(Bound::Const(200.0))),
    ("Neut", ALL, Some(Bound::Const(46.0)), false, Some(Bound::Const(78.0))),
    ("Lymph", ALL, Some(Bound::Const(18.0)), false, Some(Bound::Const(52.0))),
    ("EF", ALL, Some(Bound::Const(50.0)), true, None),
];

/// A representative (age, gender) for each profile.
fn member(profile: &str) -> (f64, &'static str) {
    match profile {
        "p1" => (40.0, "Male"),
        "p2" => (50.0, "Female"),
        "p3" => (62.0, "Male"),
        _ => (71.0, "Female"),
    }
}

fn c10_discretization() -> Check {
    let cfg = DatasetConfig::load(fixture()).map_err(|e| e.to_string())?;
    let mut checks = 0;

    // profile assignment, both sides of each age bound
    for (age, gender, want) in [
        (45.0, "Male", "p1"),
        (45.0 + BOUNDARY_DELTA, "Male", "p3"),
        (55.0, "Female", "p2"),
        (55.0 + BOUNDARY_DELTA, "Female", "p4"),
    ] {
        let got = cfg.profiles.assign(age, gender, None).map_err(|e| e.to_string())?;
        ensure(got == ProfileId(want.into()), || format!("age {age} {gender} -> {got}"))?;
        checks += 1;
    }

    let mut covered = BTreeSet::new();
    for &(feature, profiles, low, low_inclusive, high) in TABLE {
        for &p in profiles {
            covered.insert((feature, p));
            let (mut age, gender) = member(p);
            let pid = cfg.profiles.assign(age, gender, None).map_err(|e| e.to_string())?;
            ensure(pid.0 == p, || format!("representative of {p} assigned to {pid}"))?;
            let spec = *cfg.ranges.get(feature, &pid).ok_or_else(|| format!("no range for {feature} {p}"))?;
            let mut expect = |value: f64, age: f64, level: Level| -> Result<(), String> {
                let got = spec.classify(value, age);
                checks += 1;
                ensure(got == level, || format!("{feature} {p} value {value} age {age}: {got} != {level}"))
            };
            // the Age rows classify the age itself; keep it consistent with the profile
            let probe_age = |v: f64, a: f64| if feature == "Age" { v } else { a };
            if let Some(b) = low {
                let x = b.at(age);
                let (at_cut, just_inside) = if low_inclusive { (Level::Low, x + BOUNDARY_DELTA) } else { (Level::Normal, x) };
                expect(x, probe_age(x, age), at_cut)?;
                expect(just_inside, probe_age(just_inside, age), Level::Normal)?;
                expect(x - BOUNDARY_DELTA, probe_age(x - BOUNDARY_DELTA, age), Level::Low)?;
            } else {
                expect(-1e9, age, Level::Normal)?;
            }
            if let Some(b) = high {
                if feature == "Age" {
                    // only the profile's own ages are meaningful here
                    let x = b.at(age);
                    age = if p == "p1" || p == "p2" { x } else { x + BOUNDARY_DELTA };
                    let want = if p == "p1" || p == "p2" { Level::Normal } else { Level::High };
                    expect(age, age, want)?;
                    continue;
                }
                let x = b.at(age);
                expect(x, age, Level::Normal)?;
                expect(x - BOUNDARY_DELTA, age, Level::Normal)?;
                expect(x + BOUNDARY_DELTA, age, Level::High)?;
            } else {
                expect(1e9, age, Level::Normal)?;
            }
        }
    }
    let numeric: Vec<&str> = cfg.schema.inputs().filter(|(_, f)| f.is_numeric()).map(|(_, f)| f.name.as_str()).collect();
    ensure(numeric.len() == 18, || format!("{} numeric inputs", numeric.len()))?;
    ensure(covered.len() == 18 * 4, || format!("{} (feature, profile) pairs covered", covered.len()))?;

    let m = binarized(&sample_csv())?;
    ensure(m.n_features() == 49, || format!("{} binary feature columns", m.n_features()))?;
    ensure(m.target_name == "CAD", || format!("target {:?}", m.target_name))?;
    let mut columns = String::from("49 + 1 columns on the sample");
    if let Some(real) = real_dataset() {
        let m = binarized(&real)?;
        ensure(m.n_features() == 49 && m.n_records == 303, || {
            format!("dataset: {} columns, {} records", m.n_features(), m.n_records)
        })?;
        columns = "49 + 1 columns on the dataset and the sample".into();
    }
    Ok(format!("{checks} boundary checks over 22 table rows; {columns}"))
}

// --------------------------------------------------------------------------

fn run(id: usize, name: &str, f: impl FnOnce() -> Option<Check>) -> bool {
    let start = Instant::now();
    let outcome = match f() {
        None => Outcome::Skip(format!("set {DATASET_ENV} to the dataset CSV to run")),
        Some(Ok(s)) => Outcome::Pass(s),
        Some(Err(s)) => Outcome::Fail(s),
    };
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Outcome::Pass(s) => ("PASS", s, true),
        Outcome::Fail(s) => ("FAIL", s, false),
        Outcome::Skip(s) => ("SKIP", s, true),
    };
    println!("criterion {id:>2} [{tag}] {name}: {detail} ({secs:.1}s)");
    ok
}

type Criterion<'a> = (usize, &'static str, Box<dyn FnOnce() -> Option<Check> + 'a>);

fn main() {
    // honour the filter argument cargo test passes through, e.g. `-- c5`
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let wanted = |id: usize| filter.as_deref().is_none_or(|f| f == format!("c{id}"));
    let data = real_dataset();
    let mut ok = true;
    let criteria: Vec<Criterion> = vec![
        (1, "metric formulas", Box::new(|| Some(c1_metric_formulas()))),
        (2, "apriori vs brute force", Box::new(|| Some(c2_apriori_oracle()))),
        (3, "itemset counts per min_sup", Box::new(|| data.as_deref().map(c3_sweep_counts))),
        (4, "information gain ranking", Box::new(|| data.as_deref().map(c4_info_gain))),
        (5, "svm optimality", Box::new(|| Some(c5_svm()))),
        (6, "auc vs pairwise statistic", Box::new(|| Some(c6_auc()))),
        (7, "ga recovers planted columns", Box::new(|| Some(c7_ga_recovery()))),
        (8, "end-to-end accuracy floor", Box::new(|| data.as_deref().map(c8_end_to_end))),
        (9, "determinism", Box::new(|| Some(c9_determinism()))),
        (10, "discretization boundaries", Box::new(|| Some(c10_discretization()))),
    ];
    for (id, name, f) in criteria {
        if wanted(id) {
            ok &= run(id, name, f);
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
