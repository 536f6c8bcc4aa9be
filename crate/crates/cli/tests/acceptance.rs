//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use modal_core::clustering::{gmm_modal_partition, modal_partition};
use modal_core::data::{sample_mixture, MixtureSpec, Sample, SeedSpec};
use modal_core::density::{fit_gmm_em, normal_reference_bandwidth, KernelDensityModel, KernelSpec};
use modal_core::estimators::*;
use modal_core::harness::{replicate_errors, simulate_rate, RateEstimator};
use modal_core::multimodality::{mode_tree, persistence_diagram, EvalGrid, TreeGrid};
use modal_core::regression::{modal_regression_curves, ConditionalModel};
use rand::Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn report(id: &str, title: &str, started: Instant, outcome: Check) {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => println!("[PASS] {id} {title}: {detail} ({secs:.1}s)"),
        Err(why) => {
            println!("[FAIL] {id} {title}: {why} ({secs:.1}s)");
            panic!("{id} failed: {why}");
        }
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut x = v.to_vec();
    x.sort_by(f64::total_cmp);
    x
}

fn median(v: &[f64]) -> f64 {
    let x = sorted(v);
    let k = x.len();
    if k % 2 == 1 {
        x[k / 2]
    } else {
        0.5 * (x[k / 2 - 1] + x[k / 2])
    }
}

// ---- criterion 1 oracles: enumerate every interval of order statistics ----

/// Shortest `[x_i, x_j]` holding at least `t` points; ties prefer fewer
/// points, then the leftmost start.
fn oracle_shortest(x: &[f64], t: usize) -> (usize, usize) {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..x.len() {
        for j in i..x.len() {
            let c = j - i + 1;
            if c < t {
                continue;
            }
            let span = x[j] - x[i];
            if best.map_or(true, |(s, bc, _)| span < s || (span == s && c < bc)) {
                best = Some((span, c, i));
            }
        }
    }
    let (_, c, i) = best.unwrap();
    (i, i + c - 1)
}

fn oracle_chernoff(v: &[f64], a: f64) -> (f64, [f64; 2]) {
    let x = sorted(v);
    // most points in any [t, t + 2a] with t at an observation
    let m = x.iter().map(|t| x.iter().filter(|y| **y >= *t && **y - *t <= 2.0 * a).count()).max().unwrap();
    let mut best: Option<(f64, usize)> = None;
    for i in 0..=x.len() - m {
        let span = x[i + m - 1] - x[i];
        if span <= 2.0 * a && best.map_or(true, |b| span < b.0) {
            best = Some((span, i));
        }
    }
    let i = best.unwrap().1;
    (0.5 * (x[i] + x[i + m - 1]), [x[i], x[i + m - 1]])
}

fn oracle_rc(v: &[f64], p: f64) -> f64 {
    let mut x = sorted(v);
    while x.len() > 2 {
        let m = x.len();
        let mut t = 0;
        while (t as f64) < m as f64 * p - 1e-9 {
            t += 1;
        }
        let (i, j) = oracle_shortest(&x, t.clamp(2, m - 1));
        x = x[i..=j].to_vec();
    }
    0.5 * (x[0] + x[x.len() - 1])
}

#[test]
fn c01_direct_estimators_match_enumeration() {
    let t0 = Instant::now();
    let run = || -> Check {
        let mut rng = SeedSpec::new(1).rng();
        for trial in 0..1000 {
            let n = rng.gen_range(1..=30);
            let v: Vec<f64> = (0..n)
                .map(|_| if trial % 2 == 0 { rng.gen_range(0..20) as f64 * 0.5 } else { rng.gen_range(-5.0..5.0) })
                .collect();
            let s = Sample::univariate(v.clone()).unwrap();
            let a = rng.gen_range(0.1..2.0);
            let e = chernoff_mode(&s, a).map_err(|e| e.to_string())?;
            let (loc, win) = oracle_chernoff(&v, a);
            ensure!(e.location == loc && e.window == win, "chernoff mismatch on {v:?}, a = {a}");
            if n >= 2 {
                let k = rng.gen_range(2..=n);
                let e = dalenius_venter_mode(&s, k).map_err(|e| e.to_string())?;
                let x = sorted(&v);
                let (i, j) = oracle_shortest(&x, k);
                ensure!(e.window == [x[i], x[j]] && e.location == 0.5 * (x[i] + x[j]), "dalenius-venter mismatch on {v:?}, k = {k}");
            }
            let p = if trial % 3 == 0 { 0.5 } else { rng.gen_range(0.1..0.9) };
            let e = robertson_cryer_mode(&s, p).map_err(|e| e.to_string())?;
            ensure!(e.location == oracle_rc(&v, p), "robertson-cryer mismatch on {v:?}, p = {p}");
        }
        let secs = t0.elapsed().as_secs_f64();
        ensure!(secs < 10.0, "took {secs:.1}s");
        Ok("1000 samples, exact agreement".into())
    };
    report("C1", "direct-estimator oracle suite", t0, run());
}

#[test]
fn c02_grenander_hand_case_and_equivariance() {
    let t0 = Instant::now();
    let run = || -> Check {
        let e = grenander_mode(&Sample::univariate(vec![0.0, 1.0, 3.0]).unwrap(), 1, 1.0).map_err(|e| e.to_string())?;
        ensure!(e.location == 1.0, "theta = {}", e.location);
        let (a, b) = (e.diagnostics.a_hat.unwrap(), e.diagnostics.b_hat.unwrap());
        ensure!((a - 1.0 / 6.0).abs() < 1e-15 && (b - 1.0 / 6.0).abs() < 1e-15, "A = {a}, B = {b}");
        let mut rng = SeedSpec::new(2).rng();
        for _ in 0..200 {
            let n = rng.gen_range(4..50);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let (c, shift) = (rng.gen_range(0.2..5.0), rng.gen_range(-10.0..10.0));
            let k = rng.gen_range(1..n.min(6));
            let p = rng.gen_range(1.1..4.0);
            let s = Sample::univariate(v.clone()).unwrap();
            let t = Sample::univariate(v.iter().map(|x| c * x + shift).collect()).unwrap();
            let (e, f) = (grenander_mode(&s, k, p).unwrap(), grenander_mode(&t, k, p).unwrap());
            let want = c * e.location + shift;
            ensure!((f.location - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", f.location, want);
        }
        Ok("theta = 1, A = B = 1/6; 200 affine maps".into())
    };
    report("C2", "Grenander hand case", t0, run());
}

// ---- criterion 3 oracle: components recomputed at every level ----

fn nbrs(nx: usize, ny: usize, i: usize) -> Vec<usize> {
    let (x, y) = (i % nx, i / nx);
    let mut v = Vec::new();
    if x > 0 {
        v.push(i - 1);
    }
    if x + 1 < nx {
        v.push(i + 1);
    }
    if y > 0 {
        v.push(i - nx);
    }
    if y + 1 < ny {
        v.push(i + nx);
    }
    v
}

fn label_components(nx: usize, ny: usize, keep: &dyn Fn(usize) -> bool) -> Vec<Option<usize>> {
    let n = nx * ny;
    let mut id = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !keep(s) || id[s].is_some() {
            continue;
        }
        id[s] = Some(next);
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for u in nbrs(nx, ny, v) {
                if keep(u) && id[u].is_none() {
                    id[u] = Some(next);
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    id
}

/// (death, birth) pairs: a peak plateau dies at the first level where its
/// superlevel component holds an elder peak (higher, or equal and earlier).
fn oracle_pairs(nx: usize, ny: usize, lv: &[f64]) -> Vec<(f64, f64)> {
    let n = lv.len();
    // equal-level plateaus
    let mut pid = vec![usize::MAX; n];
    let mut plats: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if pid[s] != usize::MAX {
            continue;
        }
        pid[s] = plats.len();
        let mut members = vec![s];
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            k += 1;
            for u in nbrs(nx, ny, v) {
                if lv[u] == lv[v] && pid[u] == usize::MAX {
                    pid[u] = plats.len();
                    members.push(u);
                }
            }
        }
        members.sort();
        plats.push(members);
    }
    let peaks: Vec<&Vec<usize>> = plats
        .iter()
        .filter(|p| p.iter().all(|&v| nbrs(nx, ny, v).iter().all(|&u| lv[u] <= lv[v])))
        .collect();
    let mut levels = sorted(lv);
    levels.reverse();
    levels.dedup();
    let min = *levels.last().unwrap();
    let elder = |a: &Vec<usize>, b: &Vec<usize>| lv[a[0]] > lv[b[0]] || (lv[a[0]] == lv[b[0]] && a[0] < b[0]);
    peaks
        .iter()
        .map(|p| {
            let birth = lv[p[0]];
            let death = levels
                .iter()
                .filter(|c| **c <= birth)
                .find(|&&c| {
                    let comp = label_components(nx, ny, &|i| lv[i] >= c);
                    peaks.iter().any(|o| comp[o[0]] == comp[p[0]] && elder(o, p))
                })
                .copied()
                .unwrap_or(min);
            (death, birth)
        })
        .collect()
}

#[test]
fn c03_persistence_matches_recomputation() {
    let t0 = Instant::now();
    let run = || -> Check {
        let mut rng = SeedSpec::new(3).rng();
        let mut draw = |nx: usize, ny: usize, ties: bool| -> Vec<f64> {
            (0..nx * ny).map(|_| if ties { rng.gen_range(0..5) as f64 } else { rng.gen_range(0.0..1.0) }).collect()
        };
        let mut cases = Vec::new();
        let mut rng2 = SeedSpec::new(33).rng();
        for t in 0..500 {
            let nx = rng2.gen_range(1..=64);
            cases.push((nx, 1, draw(nx, 1, t % 2 == 0)));
        }
        for t in 0..100 {
            let (nx, ny) = (rng2.gen_range(1..=16), rng2.gen_range(1..=16));
            cases.push((nx, ny, draw(nx, ny, t % 2 == 0)));
        }
        for (nx, ny, lv) in &cases {
            let g = if *ny == 1 {
                EvalGrid::from_levels_1d(lv.clone())
            } else {
                let axes = vec![(0..*nx).map(|i| i as f64).collect(), (0..*ny).map(|i| i as f64).collect()];
                EvalGrid::from_levels(axes, lv.clone())
            }
            .map_err(|e| e.to_string())?;
            let mut got: Vec<(f64, f64)> = persistence_diagram(&g).iter().map(|p| (p.death, p.birth)).collect();
            let mut want = oracle_pairs(*nx, *ny, lv);
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ensure!(got == want, "{nx}x{ny} grid {lv:?}: {got:?} vs {want:?}");
        }
        let secs = t0.elapsed().as_secs_f64();
        ensure!(secs < 60.0, "took {secs:.1}s");
        Ok("500 1-d and 100 2-d grids, exact pairs".into())
    };
    report("C3", "persistence oracle", t0, run());
}

#[test]
fn c04_mode_counts_monotone_in_bandwidth() {
    let t0 = Instant::now();
    let run = || -> Check {
        let specs = [
            MixtureSpec::preset("gauss").unwrap(),
            MixtureSpec::preset("mw3").unwrap(),
            MixtureSpec::univariate(&[0.5, 0.5], &[-1.5, 1.5], &[1.0, 0.6]).unwrap(),
        ];
        let mut rng = SeedSpec::new(4).rng();
        let mut violations = 0;
        for trial in 0..50u64 {
            let n = rng.gen_range(30..300);
            let s = sample_mixture(&specs[trial as usize % 3], n, SeedSpec::new(400 + trial)).unwrap().sample;
            let sd = s.variance()[0].sqrt();
            let hs: Vec<f64> = (0..30).map(|i| sd * 0.05f64.powf(i as f64 / 29.0)).collect();
            let t = mode_tree(&s, &hs, &TreeGrid { resolution: 2048, range: None }).map_err(|e| e.to_string())?;
            let counts = t.counts();
            violations += counts.windows(2).filter(|w| w[1] < w[0]).count();
        }
        ensure!(violations == 0, "{violations} violations");
        Ok("50 samples x 30 bandwidths, 0 violations".into())
    };
    report("C4", "mode counts monotone in h", t0, run());
}

#[test]
fn c05_kernel_mode_rate() {
    let t0 = Instant::now();
    let run = || -> Check {
        let spec = MixtureSpec::preset("gauss").unwrap();
        let r = simulate_rate(&RateEstimator::romano(), &spec, "gauss", &[1000, 2000, 4000, 8000, 16000], 200, 5)
            .map_err(|e| e.to_string())?;
        ensure!((r.theoretical_slope.unwrap() + 2.0 / 7.0).abs() < 1e-12, "theoretical slope {:?}", r.theoretical_slope);
        ensure!((-0.40..=-0.18).contains(&r.slope), "slope {:.4}", r.slope);
        let secs = t0.elapsed().as_secs_f64();
        ensure!(secs < 600.0, "took {secs:.1}s");
        Ok(format!("slope {:.4} (se {:.4}), theory -0.2857", r.slope, r.slope_std_error.unwrap_or(f64::NAN)))
    };
    report("C5", "kernel mode rate", t0, run());
}

#[test]
fn c06_kernel_mode_variance_constant() {
    let t0 = Instant::now();
    let run = || -> Check {
        let spec = MixtureSpec::preset("gauss").unwrap();
        let n = 100_000;
        let h = (n as f64).powf(-1.0 / 7.0);
        let errs = replicate_errors(&RateEstimator::romano(), &spec, n, 300, 6).map_err(|e| e.to_string())?;
        let z: Vec<f64> = errs.iter().map(|e| (n as f64 * h * h * h).sqrt() * e).collect();
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (z.len() - 1) as f64;
        // f(0) / f''(0)^2 * R(K') with f = phi, R(K') = 1 / (4 sqrt(pi))
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let target = 1.0 / phi0 / (4.0 * std::f64::consts::PI.sqrt());
        ensure!((var / target - 1.0).abs() <= 0.30, "variance {var:.4} vs {target:.5}");
        Ok(format!("variance {var:.4} vs {target:.5}"))
    };
    report("C6", "kernel mode variance constant", t0, run());
}

#[test]
fn c07_modal_clustering_recovers_components() {
    let t0 = Instant::now();
    let run = || -> Check {
        let spec = MixtureSpec::preset("trimodal-sep8").unwrap();
        for i in 0..spec.components() {
            for j in i + 1..spec.components() {
                let d: f64 = spec.means[i].iter().zip(&spec.means[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                ensure!(d >= 8.0 - 1e-12, "means {i},{j} only {d} apart");
            }
        }
        let mut worst: f64 = 1.0;
        for seed in 0..10 {
            let data = sample_mixture(&spec, 3000, SeedSpec::new(700 + seed)).unwrap();
            let h = normal_reference_bandwidth(&data.sample, KernelSpec::Gaussian).unwrap();
            let m = KernelDensityModel::new(data.sample.clone(), h, KernelSpec::Gaussian).unwrap();
            let p = modal_partition(&m, &data.sample).map_err(|e| e.to_string())?;
            let agree = p.agreement(&data.labels);
            ensure!(p.r == 3, "seed {seed}: r = {}", p.r);
            ensure!(agree >= 0.99, "seed {seed}: agreement {agree:.4}");
            worst = worst.min(agree);
        }
        Ok(format!("10/10 seeds with r = 3, worst agreement {worst:.4}"))
    };
    report("C7", "modal clustering", t0, run());
}

#[test]
fn c08_mixture_then_modal_merges() {
    let t0 = Instant::now();
    let run = || -> Check {
        let spec = MixtureSpec::univariate(&[0.5, 0.5], &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        for seed in 0..10 {
            let s = sample_mixture(&spec, 1000, SeedSpec::new(800 + seed)).unwrap().sample;
            let gmm = fit_gmm_em(&s, 2, SeedSpec::new(seed)).map_err(|e| e.to_string())?;
            ensure!(gmm.components() == 2, "seed {seed}: L = {}", gmm.components());
            let p = gmm_modal_partition(&gmm, &s).map_err(|e| e.to_string())?;
            ensure!(p.r == 1, "seed {seed}: r = {}", p.r);
        }
        Ok("10/10 seeds with L = 2 and r = 1".into())
    };
    report("C8", "mixture-then-modal merge", t0, run());
}

/// `n` draws of `X ~ U(0,1)` with `Y = f(X) + W_i`.
fn regression_data(n: usize, seed: u64, noise: &Sample, f: impl Fn(f64) -> f64) -> Sample {
    let mut rng = SeedSpec::new(seed).rng();
    let mut flat = Vec::with_capacity(2 * n);
    for i in 0..n {
        let x: f64 = rng.gen();
        flat.push(x);
        flat.push(f(x) + noise.as_flat()[i]);
    }
    Sample::from_flat(flat, 2, "synthetic").unwrap()
}

fn mixture_pdf(spec: &MixtureSpec, x: f64) -> f64 {
    spec.weights
        .iter()
        .zip(&spec.means)
        .zip(&spec.covariances)
        .map(|((w, m), c)| {
            let sd = c[0][0].sqrt();
            let z = (x - m[0]) / sd;
            w * (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        })
        .sum()
}

#[test]
fn c09_modal_versus_mean_regression() {
    let t0 = Instant::now();
    let run = || -> Check {
        let w = MixtureSpec::preset("mw3").unwrap();
        // dense-grid mode of the noise density
        let mut mode_w = (0.0, f64::NEG_INFINITY);
        for i in 0..=400_000 {
            let x = -4.0 + i as f64 * 1e-5;
            let f = mixture_pdf(&w, x);
            if f > mode_w.1 {
                mode_w = (x, f);
            }
        }
        let mode_w = mode_w.0;
        let mean_w: f64 = w.weights.iter().zip(&w.means).map(|(p, m)| p * m[0]).sum();
        let grid: Vec<f64> = (0..25).map(|i| 0.2 + 0.025 * i as f64).collect();
        let mut detail = Vec::new();
        for seed in 0..5 {
            let noise = sample_mixture(&w, 10_000, SeedSpec::new(900 + seed)).unwrap().sample;
            let s = regression_data(10_000, 950 + seed, &noise, |x| 5.0 - 2.0 * x);
            let m = ConditionalModel::new(&s, 0.03, 0.06).unwrap();
            let c = modal_regression_curves(&m, &grid).map_err(|e| e.to_string())?;
            let mut offs = Vec::new();
            for (x, g) in grid.iter().zip(&c.global_curve) {
                let g = g.ok_or(format!("seed {seed}: no mode at x = {x}"))?;
                offs.push(g - (5.0 - 2.0 * x + mode_w));
            }
            let med = median(&offs);
            ensure!(med.abs() <= 0.15, "seed {seed}: median modal offset {med:.4}");
            let mut worst_mean: f64 = 0.0;
            for (x, mh) in grid.iter().zip(&c.mean_curve) {
                let mh = mh.ok_or(format!("seed {seed}: no mean at x = {x}"))?;
                worst_mean = worst_mean.max((mh - (5.0 - 2.0 * x + mean_w)).abs());
            }
            ensure!(worst_mean <= 0.15, "seed {seed}: mean curve off by {worst_mean:.4}");
            detail.push(format!("{med:+.3}/{worst_mean:.3}"));
        }
        Ok(format!("5/5 seeds, modal median offset / worst mean error: {}", detail.join(" ")))
    };
    report("C9", "modal vs mean regression", t0, run());
}

#[test]
fn c10_outlier_resistance() {
    let t0 = Instant::now();
    let run = || -> Check {
        let n = 10_000;
        let eps = sample_mixture(&MixtureSpec::univariate(&[1.0], &[0.0], &[0.5]).unwrap(), n, SeedSpec::new(1000))
            .unwrap()
            .sample;
        let clean = regression_data(n, 1001, &eps, |x| 1.0 + 2.0 * x);
        // 2% extra observations, copies of random points lifted by 20
        let mut flat = clean.as_flat().to_vec();
        let mut rng = SeedSpec::new(1002).rng();
        for _ in 0..n / 50 {
            let p = clean.point(rng.gen_range(0..n));
            flat.extend_from_slice(&[p[0], p[1] + 20.0]);
        }
        let dirty = Sample::from_flat(flat, 2, "contaminated").unwrap();
        let grid: Vec<f64> = (0..25).map(|i| 0.2 + 0.025 * i as f64).collect();
        let fit = |s: &Sample| modal_regression_curves(&ConditionalModel::new(s, 0.05, 0.2).unwrap(), &grid);
        let (a, b) = (fit(&clean).map_err(|e| e.to_string())?, fit(&dirty).map_err(|e| e.to_string())?);
        let shift = |u: &[Option<f64>], v: &[Option<f64>]| -> Vec<f64> {
            u.iter().zip(v).map(|(p, q)| (p.unwrap() - q.unwrap()).abs()).collect()
        };
        let dmode = median(&shift(&a.global_curve, &b.global_curve));
        let dmean = median(&shift(&a.mean_curve, &b.mean_curve));
        ensure!(dmode <= 0.05, "modal curve moved {dmode:.4}");
        ensure!(dmean >= 0.2, "mean curve moved only {dmean:.4}");
        Ok(format!("median shift: mode {dmode:.2e}, mean {dmean:.3}"))
    };
    report("C10", "outlier resistance", t0, run());
}

fn run_cli(args: &[&str], dir: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_modal")).args(args).current_dir(dir).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn c11_cli_artifacts_are_deterministic() {
    let t0 = Instant::now();
    let run = || -> Check {
        let work = tempfile::tempdir().unwrap();
        let dir = work.path();
        let bimodal = MixtureSpec::univariate(&[0.6, 0.4], &[0.0, 4.0], &[1.0, 0.7]).unwrap();
        let uni = sample_mixture(&bimodal, 400, SeedSpec::new(11)).unwrap().sample;
        let csv: String = uni.as_flat().iter().map(|v| format!("{v}\n")).collect();
        std::fs::write(dir.join("uni.csv"), format!("value\n{csv}")).unwrap();
        let noise = sample_mixture(&bimodal, 1500, SeedSpec::new(12)).unwrap().sample;
        let xy = regression_data(1500, 13, &noise, |x| 2.0 * x);
        let csv: String = xy.points().map(|p| format!("{},{}\n", p[0], p[1])).collect();
        std::fs::write(dir.join("xy.csv"), csv).unwrap();

        let runs: Vec<Vec<&str>> = vec![
            vec!["tree", "--input", "uni.csv"],
            vec!["persist", "--input", "uni.csv"],
            vec!["sizer", "--input", "uni.csv", "--grid", "120"],
            vec!["cluster", "--input", "uni.csv", "--method", "modal"],
            vec!["cluster", "--input", "uni.csv", "--method", "parametric", "--k", "2", "--seed", "3"],
            vec!["cluster", "--input", "uni.csv", "--method", "gmm-modal", "--k", "2", "--seed", "3"],
            vec!["modalreg", "--input", "xy.csv", "--grid", "30"],
            vec!["simulate", "--grid", "200,400,800", "--replicates", "50", "--seed", "9"],
        ];
        let mut files = 0;
        for (i, args) in runs.iter().enumerate() {
            let mut outputs = Vec::new();
            for rep in 0..2 {
                let out = format!("out{i}_{rep}");
                let mut a = args.clone();
                a.extend(["--out", out.as_str()]);
                run_cli(&a, dir);
                let mut listing: Vec<_> = std::fs::read_dir(dir.join(&out)).unwrap().map(|e| e.unwrap().path()).collect();
                listing.sort();
                outputs.push(listing.iter().map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap())).collect::<Vec<_>>());
            }
            ensure!(!outputs[0].is_empty(), "{args:?} wrote nothing");
            ensure!(outputs[0] == outputs[1], "{args:?} differs between runs");
            files += outputs[0].len();
        }
        for method in [["--method", "hsm"], ["--method", "kernel"]] {
            let mut a = vec!["mode", "--input", "uni.csv"];
            a.extend(method);
            ensure!(run_cli(&a, dir) == run_cli(&a, dir), "{a:?} stdout differs");
            files += 1;
        }
        Ok(format!("{files} artifacts byte-identical across two runs"))
    };
    report("C11", "CLI determinism", t0, run());
}
