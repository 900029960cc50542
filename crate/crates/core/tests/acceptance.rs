//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use gridfuse::cli;
use gridfuse::eval::{run_experiment2, EvalOptions};
use gridfuse::evidence::{
    belief, dempster_combine, plausibility, uncertainty_interval, validate_mass, FocalSet, Frame, MassFunction,
};
use gridfuse::fusion::{fuse_sequence, pca_ds_combine, Method, DEFAULT_THRESHOLD};
use gridfuse::matrix::Matrix;
use gridfuse::normalize::{column_stats, fit_lambda, zscore_columns, LambdaGrid};
use gridfuse::pca::sym_eigen;
use gridfuse::rng::{SeededRng, Stream};
use gridfuse::simgen::ScenarioConfig;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_frame(rng: &mut SeededRng, max: usize) -> Frame {
    let p = 1 + rng.below(max);
    Frame::new((0..p).map(|i| format!("h{i}"))).unwrap()
}

fn random_mass(rng: &mut SeededRng, frame: &Frame) -> MassFunction {
    let subsets = (1u32 << frame.len()) - 1;
    let count = 1 + rng.below(subsets.min(6) as usize);
    let entries: Vec<(FocalSet, f64)> =
        (0..count).map(|_| (FocalSet(1 + rng.below(subsets as usize) as u16), 0.05 + rng.uniform())).collect();
    let total: f64 = entries.iter().map(|e| e.1).sum();
    MassFunction::new(frame.clone(), entries.into_iter().map(|(s, v)| (s, v / total))).unwrap()
}

/// Dense 2^|U| vectors, every (A, B) pair of the powerset, then division by K.
fn brute_force_dempster(m1: &MassFunction, m2: &MassFunction) -> Option<Vec<f64>> {
    let size = 1usize << m1.frame().len();
    let dense = |m: &MassFunction| (0..size).map(|s| m.mass(FocalSet(s as u16))).collect::<Vec<_>>();
    let (a, b) = (dense(m1), dense(m2));
    let mut out = vec![0.0; size];
    for x in 0..size {
        for y in 0..size {
            out[x & y] += a[x] * b[y];
        }
    }
    let k: f64 = out[1..].iter().sum();
    if k <= 1e-12 {
        return None;
    }
    out[0] = 0.0;
    Some(out.iter().map(|v| v / k).collect())
}

fn criterion_1() -> Outcome {
    let mut rng = SeededRng::new(1, Stream::Features);
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = 10 + rng.below(991);
        let p = 1 + rng.below(20);
        let mut data = Vec::with_capacity(n * p);
        let scales: Vec<f64> = (0..p).map(|_| 10f64.powf(rng.uniform() * 8.0 - 4.0)).collect();
        let offsets: Vec<f64> = (0..p).map(|_| (rng.uniform() - 0.5) * 1e3).collect();
        for _ in 0..n {
            for j in 0..p {
                data.push(offsets[j] + scales[j] * rng.normal());
            }
        }
        let z = zscore_columns(&Matrix::from_vec(n, p, data)).unwrap();
        for j in 0..p {
            if z.degenerate[j] {
                continue;
            }
            let s = column_stats(&z.values.column(j)).unwrap();
            worst_mean = worst_mean.max(s.mean.abs());
            worst_std = worst_std.max((s.sample_std - 1.0).abs());
        }
    }
    outcome(worst_mean <= 1e-12 && worst_std <= 1e-12, format!("max |mean| {worst_mean:.2e}, max |std-1| {worst_std:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = SeededRng::new(2, Stream::Features);
    let column: Vec<f64> = (0..1000).map(|_| rng.normal().exp()).collect();
    let before = column_stats(&column).unwrap().skewness;
    let fit = fit_lambda(&column, &LambdaGrid::default()).unwrap();
    let transformed = gridfuse::normalize::boxcox(&column, fit.lambda).unwrap();
    let after = column_stats(&transformed).unwrap().skewness;
    let pass = before.abs() > 3.0 && after.abs() < 0.3 && (-0.2..=0.2).contains(&fit.lambda);
    outcome(pass, format!("skew {before:.3} -> {after:.4}, lambda {:.2}", fit.lambda))
}

fn criterion_3() -> Outcome {
    let mut rng = SeededRng::new(3, Stream::Features);
    let mut worst = 0.0f64;
    let mut mismatched_failures = 0;
    for _ in 0..1000 {
        let frame = random_frame(&mut rng, 4);
        let m1 = random_mass(&mut rng, &frame);
        let m2 = random_mass(&mut rng, &frame);
        match (dempster_combine(&[m1.clone(), m2.clone()]), brute_force_dempster(&m1, &m2)) {
            (Ok(got), Some(want)) => {
                for (s, w) in want.iter().enumerate() {
                    worst = worst.max((got.mass(FocalSet(s as u16)) - w).abs());
                }
            }
            (Err(_), None) => {}
            _ => mismatched_failures += 1,
        }
    }
    let mut worst_perm = 0.0f64;
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for _ in 0..200 {
        let frame = random_frame(&mut rng, 4);
        let ms: Vec<MassFunction> = (0..3).map(|_| random_mass(&mut rng, &frame)).collect();
        let Ok(reference) = dempster_combine(&ms) else { continue };
        for order in orders {
            let permuted: Vec<MassFunction> = order.iter().map(|&i| ms[i].clone()).collect();
            let other = dempster_combine(&permuted).unwrap();
            for set in frame.powerset() {
                worst_perm = worst_perm.max((reference.mass(set) - other.mass(set)).abs());
            }
        }
    }
    let pass = worst <= 1e-12 && worst_perm <= 1e-9 && mismatched_failures == 0;
    outcome(pass, format!("oracle max diff {worst:.2e}, permutation max diff {worst_perm:.2e}"))
}

fn criterion_4() -> Outcome {
    let f = Frame::new(["A", "B", "C"]).unwrap();
    let (a, b, c) = (f.singleton(0), f.singleton(1), f.singleton(2));
    let m1 = MassFunction::new(f.clone(), [(a, 0.99), (b, 0.01)]).unwrap();
    let m2 = MassFunction::new(f.clone(), [(c, 0.99), (b, 0.01)]).unwrap();
    let ds = dempster_combine(&[m1.clone(), m2.clone()]).unwrap();
    let pca = pca_ds_combine(&[m1, m2], DEFAULT_THRESHOLD).unwrap().combined;
    let oracle = [0.497425, 0.00515, 0.497425];
    let oracle_diff = [a, b, c].iter().zip(oracle).map(|(s, o)| (pca.mass(*s) - o).abs()).fold(0.0, f64::max);
    let pass = (ds.mass(b) - 1.0).abs() <= 1e-12
        && pca.mass(a) > 0.0
        && pca.mass(c) > 0.0
        && validate_mass(&pca).is_ok()
        && oracle_diff <= 1e-12;
    outcome(
        pass,
        format!(
            "DS m(B)={}, PCA-DS m(A)={:.6} m(B)={:.6} m(C)={:.6}, oracle diff {oracle_diff:.1e}",
            ds.mass(b),
            pca.mass(a),
            pca.mass(b),
            pca.mass(c)
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = SeededRng::new(5, Stream::Features);
    let mut worst = 0.0f64;
    let mut conflicted = 0;
    for _ in 0..500 {
        let frame = random_frame(&mut rng, 5);
        let anchor = rng.below(frame.len());
        let count = 2 + rng.below(4);
        let masses: Vec<MassFunction> = (0..count)
            .map(|_| {
                let m = random_mass(&mut rng, &frame);
                let anchored = m.focal_sets().map(|(s, v)| (s.union(frame.singleton(anchor)), v)).collect::<Vec<_>>();
                MassFunction::new(frame.clone(), anchored).unwrap()
            })
            .collect();
        let ds = dempster_combine(&masses).unwrap();
        let report = pca_ds_combine(&masses, DEFAULT_THRESHOLD).unwrap();
        if report.conflict_total != 0.0 {
            conflicted += 1;
        }
        for set in frame.powerset() {
            worst = worst.max((ds.mass(set) - report.combined.mass(set)).abs());
        }
    }
    outcome(worst <= 1e-12 && conflicted == 0, format!("max diff {worst:.2e} over 500 lists"))
}

fn criterion_6() -> Outcome {
    let mut rng = SeededRng::new(6, Stream::Features);
    let (mut violations, mut worst_dual) = (0, 0.0f64);
    for _ in 0..2000 {
        let frame = random_frame(&mut rng, 6);
        let m = random_mass(&mut rng, &frame);
        for set in frame.powerset() {
            let iv = uncertainty_interval(&m, set).unwrap();
            if iv.bel > iv.pl || iv.mu < 0.0 {
                violations += 1;
            }
            let dual = 1.0 - belief(&m, frame.complement(set)).unwrap();
            worst_dual = worst_dual.max((plausibility(&m, set).unwrap() - dual).abs());
        }
    }
    outcome(violations == 0 && worst_dual <= 1e-12, format!("{violations} order violations, max |Pl - (1-Bel(c))| {worst_dual:.2e}"))
}

fn criterion_7() -> Outcome {
    let mut rng = SeededRng::new(7, Stream::Features);
    let (mut worst, mut non_decreasing) = (0.0f64, 0);
    for _ in 0..200 {
        let frame = Frame::new((0..2 + rng.below(3)).map(|i| format!("h{i}"))).unwrap();
        let a = frame.singleton(0);
        let len = 2 + rng.below(7);
        let strengths: Vec<f64> = (0..len).map(|_| 0.05 + 0.9 * rng.uniform()).collect();
        let chain: Vec<MassFunction> =
            strengths.iter().map(|&s| MassFunction::simple_support(frame.clone(), a, s).unwrap()).collect();
        for method in Method::ALL {
            let trace = fuse_sequence(&chain, method, a, DEFAULT_THRESHOLD).unwrap();
            let mut expected = 1.0 - strengths[0];
            let mut previous = f64::INFINITY;
            for (point, s) in trace.points.iter().zip(&strengths[1..]) {
                expected *= 1.0 - s;
                worst = worst.max((point.mu - expected).abs());
                if point.mu >= previous {
                    non_decreasing += 1;
                }
                previous = point.mu;
            }
        }
    }
    outcome(worst <= 1e-12 && non_decreasing == 0, format!("max |mu - prod(1-a)| {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let mut rng = SeededRng::new(8, Stream::Features);
    let (mut residual, mut ortho, mut trace_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = 1 + rng.below(16);
        let mut a = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = rng.uniform() * 2.0 - 1.0;
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let eig = sym_eigen(&a).unwrap();
        for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
            for i in 0..p {
                let av: f64 = (0..p).map(|j| a[(i, j)] * v[j]).sum();
                residual = residual.max((av - lambda * v[i]).abs());
            }
        }
        for x in 0..p {
            for y in 0..p {
                let dot: f64 = eig.vectors[x].iter().zip(&eig.vectors[y]).map(|(u, w)| u * w).sum();
                ortho = ortho.max((dot - if x == y { 1.0 } else { 0.0 }).abs());
            }
        }
        trace_err = trace_err.max((a.trace() - eig.values.iter().sum::<f64>()).abs());
    }
    let pass = residual <= 1e-9 && ortho <= 1e-9 && trace_err <= 1e-9;
    outcome(pass, format!("residual {residual:.2e}, orthonormality {ortho:.2e}, trace {trace_err:.2e}"))
}

fn criterion_9() -> Outcome {
    let run = |rate: f64| {
        let cfg = ScenarioConfig { conflict_rate: rate, ..ScenarioConfig::with_classes(1000, 3, 42) };
        run_experiment2(&cfg, &EvalOptions::for_observations(1000)).unwrap()
    };
    let conflicted = run(0.3);
    let clean = run(0.0);
    let (ds, pca) = (conflicted.accuracy_of(Method::Ds).unwrap(), conflicted.accuracy_of(Method::PcaDs).unwrap());
    let (ds0, pca0) = (clean.accuracy_of(Method::Ds).unwrap(), clean.accuracy_of(Method::PcaDs).unwrap());
    let pass = pca >= ds && (ds0 - pca0).abs() <= 0.005;
    outcome(
        pass,
        format!(
            "rate 0.3: ds {ds:.4} pca_ds {pca:.4} (margin {:+.4}); rate 0: ds {ds0:.4} pca_ds {pca0:.4}",
            pca - ds
        ),
    )
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        out.insert(entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path()).unwrap());
    }
    out
}

fn pipeline(root: &Path) -> Vec<BTreeMap<String, Vec<u8>>> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["--out".into(), p("gen"), "gen".into(), "--seed".into(), "42".into(), "--n".into(), "1000".into()],
        vec![
            "--out".into(),
            p("norm"),
            "normalize".into(),
            p("gen/operation.csv"),
            p("gen/monitoring.csv"),
            p("gen/environment.csv"),
        ],
        vec!["--out".into(), p("eval"), "eval".into(), "--data".into(), p("norm"), "--labels".into(), p("gen/labels.csv")],
    ];
    for args in steps {
        let code = cli::run(std::iter::once("gridfuse".to_string()).chain(args.clone()));
        assert_eq!(code, 0, "{args:?}");
    }
    ["gen", "norm", "eval"].iter().map(|d| read_dir_bytes(&root.join(d))).collect()
}

fn criterion_10() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let files: usize = first.iter().map(BTreeMap::len).sum();
    let differing: Vec<String> = first
        .iter()
        .zip(&second)
        .flat_map(|(x, y)| x.iter().filter(|(k, v)| y.get(*k) != Some(*v)).map(|(k, _)| k.clone()).collect::<Vec<_>>())
        .collect();
    outcome(differing.is_empty() && first.iter().all(|d| !d.is_empty()), format!("{files} files compared, differing: {differing:?}"))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 Z-score exactness", criterion_1, Duration::from_secs(5)),
        ("2 skew repair", criterion_2, Duration::from_secs(5)),
        ("3 DS oracle equivalence", criterion_3, Duration::from_secs(10)),
        ("4 Zadeh fixture", criterion_4, Duration::MAX),
        ("5 reduction law", criterion_5, Duration::MAX),
        ("6 interval laws", criterion_6, Duration::MAX),
        ("7 interval contraction", criterion_7, Duration::MAX),
        ("8 PCA correctness", criterion_8, Duration::MAX),
        ("9 DS vs PCA-DS accuracy", criterion_9, Duration::from_secs(60)),
        ("10 end-to-end determinism", criterion_10, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed < limit;
        let timing = if limit == Duration::MAX {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs())
        };
        println!("{} criterion {name}: {} ({timing})", if pass { "PASS" } else { "FAIL" }, result.detail);
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
