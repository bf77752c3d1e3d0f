//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gsoid::am::{am_fit, default_starts, AmConfig};
use gsoid::cli::{run_synthetic, Report, StartsSpec};
use gsoid::filter::apply_filter;
use gsoid::graph::{contract, Gso, GsoKind, SignalMatrix, SupportSet};
use gsoid::objective::{grad_edges, grad_matrix};
use gsoid::scp::{scp_solve, surrogate_minimize, ScpConfig};
use gsoid::synth::{generate_experiment, ExperimentSpec, GraphModel};
use gsoid::FilterTaps;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn random_signal(rng: &mut ChaCha8Rng, n: usize, t: usize) -> SignalMatrix {
    SignalMatrix::new(DMatrix::from_fn(n, t, |_, _| rng.sample(StandardNormal))).unwrap()
}

fn random_taps(rng: &mut ChaCha8Rng, k: usize) -> FilterTaps {
    FilterTaps::new((0..=k).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn random_support(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Arc<SupportSet> {
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if !edges.is_empty() {
            return Arc::new(SupportSet::new(n, edges).unwrap());
        }
    }
}

/// Expansion written out entry by entry, independent of `Gso::expand`.
fn expand_oracle(kind: GsoKind, support: &SupportSet, w: &[f64]) -> DMatrix<f64> {
    let n = support.n_nodes();
    let mut s = DMatrix::zeros(n, n);
    for (&(i, j), &we) in support.edges().iter().zip(w) {
        match kind {
            GsoKind::Adjacency => {
                s[(i, j)] = we;
                s[(j, i)] = we;
            }
            GsoKind::Laplacian => {
                s[(i, j)] = -we;
                s[(j, i)] = -we;
                s[(i, i)] += we;
                s[(j, j)] += we;
            }
        }
    }
    s
}

/// `||Y - sum_k h_k S^k X||_F^2` with explicit matrix powers.
fn cost_oracle(h: &[f64], s: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut filt = DMatrix::zeros(n, n);
    let mut p = DMatrix::identity(n, n);
    for &hk in h {
        filt += hk * &p;
        p = &p * s;
    }
    (y - filt * x).norm_squared()
}

fn write_spec(dir: &Path, spec: &ExperimentSpec) -> std::path::PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, serde_json::to_string_pretty(spec).unwrap()).unwrap();
    path
}

fn monotone_trace() -> Outcome {
    let clock = Instant::now();
    let mut failures = Vec::new();
    let mut traces = 0;
    for i in 0..50u64 {
        let n = [5, 10, 15][(i % 3) as usize];
        let k = [1, 3, 5][((i / 3) % 3) as usize];
        let kind = if i % 2 == 0 {
            GsoKind::Adjacency
        } else {
            GsoKind::Laplacian
        };
        let spec = ExperimentSpec {
            n_nodes: n,
            n_samples: 10 * n,
            filter_order: k,
            tap_sigma: 1.0,
            generating_kind: kind,
            graph_model: GraphModel::ErdosRenyi { p: 0.4 },
            seed: 1000 + i,
            ..Default::default()
        };
        let exp = generate_experiment(&spec).unwrap();
        let config = AmConfig {
            filter_order: k,
            hypothesis_kind: kind,
            ..Default::default()
        };
        for start in default_starts(Arc::clone(&exp.support), kind) {
            let state = match am_fit(&start.gso, &exp.x, &exp.y, &config) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("instance {i} start {}: {e}", start.label));
                    continue;
                }
            };
            traces += 1;
            if !state.trace.is_monotone(1e-9) {
                failures.push(format!("instance {i} start {}", start.label));
            }
        }
    }
    let elapsed = clock.elapsed();
    Outcome {
        pass: failures.is_empty() && elapsed < Duration::from_secs(120),
        detail: format!(
            "{traces} traces, {} violations {:?}, {:.1}s (limit 120s)",
            failures.len(),
            failures,
            elapsed.as_secs_f64()
        ),
    }
}

fn gradient_correctness() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_edges = 0.0f64;
    let mut worst_matrix = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(2..=5);
        let k = rng.random_range(1..=4);
        let kind = if case % 2 == 0 {
            GsoKind::Adjacency
        } else {
            GsoKind::Laplacian
        };
        let support = random_support(&mut rng, n, 0.7);
        let w: Vec<f64> = (0..support.n_edges()).map(|_| rng.random_range(0.3..1.2)).collect();
        let gso = Gso::new(kind, Arc::clone(&support), w.clone()).unwrap();
        let h = random_taps(&mut rng, k);
        let t = rng.random_range(3..=8);
        let x = random_signal(&mut rng, n, t);
        let y = random_signal(&mut rng, n, t);
        let f = |s: &DMatrix<f64>| cost_oracle(h.as_slice(), s, x.values(), y.values());

        let ge = grad_edges(&h, &gso, &x, &y).unwrap();
        let fd: Vec<f64> = (0..w.len())
            .map(|e| {
                let step = 1e-5;
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[e] += step;
                wm[e] -= step;
                (f(&expand_oracle(kind, &support, &wp)) - f(&expand_oracle(kind, &support, &wm))) / (2.0 * step)
            })
            .collect();
        let num: f64 = ge.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_edges = worst_edges.max(num / den.max(f64::MIN_POSITIVE));

        let gm = grad_matrix(&h, &gso, &x, &y).unwrap();
        let s = gso.expand();
        let mut fdm = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let step = 1e-5;
                let mut sp = s.clone();
                let mut sm = s.clone();
                sp[(i, j)] += step;
                sm[(i, j)] -= step;
                if i != j {
                    sp[(j, i)] += step;
                    sm[(j, i)] -= step;
                }
                let d = (f(&sp) - f(&sm)) / (2.0 * step);
                fdm[(i, j)] = d;
                fdm[(j, i)] = d;
            }
        }
        worst_matrix = worst_matrix.max((&gm - &fdm).norm() / fdm.norm().max(f64::MIN_POSITIVE));
    }
    let elapsed = clock.elapsed();
    Outcome {
        pass: worst_edges < 1e-6 && worst_matrix < 1e-6 && elapsed < Duration::from_secs(30),
        detail: format!(
            "worst relative error edges {worst_edges:.2e}, matrix {worst_matrix:.2e} (limit 1e-6), {:.1}s (limit 30s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn oracle_equivalence() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    let mut worst_scan = 0.0f64;
    for case in 0..10 {
        let n = rng.random_range(2..=4);
        let i = rng.random_range(0..n - 1);
        let j = rng.random_range(i + 1..n);
        let support = Arc::new(SupportSet::new(n, [(i, j)]).unwrap());
        let kind = if case % 2 == 0 {
            GsoKind::Adjacency
        } else {
            GsoKind::Laplacian
        };
        let k = rng.random_range(1..=3);
        let h = random_taps(&mut rng, k);
        let w_true = rng.random_range(0.5..3.0);
        let x = random_signal(&mut rng, n, 20);
        let clean = apply_filter(&h, &Gso::new(kind, Arc::clone(&support), vec![w_true]).unwrap(), &x).unwrap();
        let noise = random_signal(&mut rng, n, 20);
        let y = SignalMatrix::new(clean.values() + noise.values() * 0.05).unwrap();

        let init = Gso::new(kind, Arc::clone(&support), vec![1.0]).unwrap();
        let out = scp_solve(&h, &init, &x, &y, &ScpConfig::default()).unwrap();
        let w_scp = out.gso.weights()[0];

        let mut best = (0.0, f64::INFINITY);
        for step in 0..=50_000 {
            let w = step as f64 * 1e-4;
            let c = cost_oracle(h.as_slice(), &expand_oracle(kind, &support, &[w]), x.values(), y.values());
            if c < best.1 {
                best = (w, c);
            }
        }
        worst_scan = worst_scan.max((w_scp - best.0).abs());
    }

    let mut worst_surrogate = 0.0f64;
    for _ in 0..20 {
        let support = Arc::new(SupportSet::new(3, [(0, 1), (1, 2)]).unwrap());
        let w: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..1.0)).collect();
        let g: Vec<f64> = (0..2).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let rho = rng.random_range(0.05..1.0);
        let current = Gso::new(GsoKind::Laplacian, support, w.clone()).unwrap();
        let hat = surrogate_minimize(&current, &g, rho).unwrap();
        let model = |v: &[f64]| g[0] * (v[0] - w[0]) + g[1] * (v[1] - w[1]);

        let lo: Vec<f64> = w.iter().map(|&v| (v - rho).max(0.0)).collect();
        let hi: Vec<f64> = w.iter().map(|&v| v + rho).collect();
        let pts = 1001;
        let mut grid_best = f64::INFINITY;
        for a in 0..pts {
            for b in 0..pts {
                let v = [
                    lo[0] + (hi[0] - lo[0]) * a as f64 / (pts - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * b as f64 / (pts - 1) as f64,
                ];
                grid_best = grid_best.min(model(&v));
            }
        }
        worst_surrogate = worst_surrogate.max((model(hat.weights()) - grid_best).abs());
    }

    let elapsed = clock.elapsed();
    Outcome {
        pass: worst_scan < 1e-3 && worst_surrogate < 1e-6 && elapsed < Duration::from_secs(30),
        detail: format!(
            "1-edge |w_scp - w_scan| max {worst_scan:.2e} (limit 1e-3), surrogate gap max {worst_surrogate:.2e} (limit 1e-6), {:.1}s (limit 30s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn exact_recovery() -> Outcome {
    let clock = Instant::now();
    let mut worst_taps = 0.0f64;
    let mut worst_cost = 0.0f64;
    for seed in 0..10 {
        let spec = ExperimentSpec {
            n_nodes: 12,
            n_samples: 80,
            filter_order: 3,
            generating_kind: if seed % 2 == 0 {
                GsoKind::Laplacian
            } else {
                GsoKind::Adjacency
            },
            graph_model: GraphModel::ErdosRenyi { p: 0.35 },
            tap_sigma: 1.0,
            seed,
            ..Default::default()
        };
        let exp = generate_experiment(&spec).unwrap();
        let config = AmConfig {
            filter_order: spec.filter_order,
            hypothesis_kind: spec.generating_kind,
            ..Default::default()
        };
        let first = am_fit(
            &exp.gso_true,
            &exp.x,
            &exp.y,
            &AmConfig {
                outer_max_iters: 1,
                scp: ScpConfig {
                    max_iters: 1,
                    ..config.scp
                },
                ..config
            },
        )
        .unwrap();
        let h_true = exp.taps_true.as_slice();
        let scale = 1.0 + h_true.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dh = first
            .taps
            .as_slice()
            .iter()
            .zip(h_true)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst_taps = worst_taps.max(dh / scale);

        let full = am_fit(&exp.gso_true, &exp.x, &exp.y, &config).unwrap();
        let energy = exp.y.values().norm_squared();
        worst_cost = worst_cost.max(full.trace.final_cost().unwrap() / energy);
    }
    let elapsed = clock.elapsed();
    Outcome {
        pass: worst_taps < 1e-10 && worst_cost <= 1e-12 && elapsed < Duration::from_secs(30),
        detail: format!(
            "max |dh|/(1+|h|) {worst_taps:.2e} (limit 1e-10), max cost/|Y|^2 {worst_cost:.2e} (limit 1e-12), {:.1}s (limit 30s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn default_scale(dir: &Path) -> (Vec<Report>, Vec<f64>) {
    let spec = write_spec(dir, &ExperimentSpec::default());
    let mut reports = Vec::new();
    let mut times = Vec::new();
    for seed in 0..5 {
        let clock = Instant::now();
        let out = dir.join(format!("seed{seed}"));
        let report = run_synthetic(&spec, None, &out, &StartsSpec::DefaultsAndCandidates, Some(seed))
            .unwrap_or_else(|e| panic!("seed {seed}: {}", e.error));
        times.push(clock.elapsed().as_secs_f64());
        reports.push(report);
    }
    (reports, times)
}

fn nmse_behavior(reports: &[Report], times: &[f64]) -> Outcome {
    let finals: Vec<f64> = reports.iter().map(|r| r.final_nmse).collect();
    let reductions: Vec<f64> = reports
        .iter()
        .map(|r| {
            let initial = r.starts[r.best_start].initial_nmse.unwrap();
            initial / r.final_nmse
        })
        .collect();
    let slowest = times.iter().cloned().fold(0.0, f64::max);
    let (m_final, m_red) = (median(finals.clone()), median(reductions.clone()));
    Outcome {
        pass: m_final <= 1e-2 && m_red >= 100.0 && slowest < 300.0,
        detail: format!(
            "median final NMSE {m_final:.2e} (limit 1e-2), median reduction {m_red:.2e}x (limit 100x), slowest seed {slowest:.1}s (limit 300s); per seed NMSE [{}]",
            sci(&finals)
        ),
    }
}

fn spearman_band(reports: &[Report]) -> Outcome {
    let rs: Vec<f64> = reports.iter().map(|r| r.spearman.unwrap_or(f64::NAN)).collect();
    let m = median(rs.clone());
    Outcome {
        pass: m >= 0.6,
        detail: format!("median r_s {m:.3} (limit 0.6); per seed {rs:.3?}"),
    }
}

fn mismatched_hypothesis(dir: &Path) -> Outcome {
    let spec = write_spec(
        dir,
        &ExperimentSpec {
            generating_kind: GsoKind::Adjacency,
            ..Default::default()
        },
    );
    let mut problems = Vec::new();
    let mut finals = Vec::new();
    for seed in 0..5 {
        let out = dir.join(format!("seed{seed}"));
        let report = match run_synthetic(&spec, None, &out, &StartsSpec::DefaultsAndCandidates, Some(seed)) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("seed {seed}: {}", e.error));
                continue;
            }
        };
        finals.push(report.final_nmse);
        if report.starts.iter().any(|s| s.status != "ok") {
            problems.push(format!("seed {seed}: a start failed"));
        }
        let gso = gsoid::io::read_gso(&out.join("gso_inferred.json")).unwrap();
        let feasible = gso.kind() == GsoKind::Laplacian
            && gso.weights().iter().all(|w| w.is_finite() && *w >= 0.0)
            && contract(&gso.expand(), GsoKind::Laplacian, gso.support_arc().clone()).is_ok();
        if !feasible {
            problems.push(format!("seed {seed}: infeasible Laplacian output"));
        }
        if !trace_csv_monotone(&fs::read_to_string(out.join("trace.csv")).unwrap()) {
            problems.push(format!("seed {seed}: trace increases"));
        }
    }
    Outcome {
        pass: problems.is_empty(),
        detail: format!("{} problems {problems:?}; final NMSE per seed [{}]", problems.len(), sci(&finals)),
    }
}

/// Cost column never increases within a start, up to `1e-9 (1 + first cost)`.
fn trace_csv_monotone(text: &str) -> bool {
    let mut prev: Option<(String, f64, f64)> = None;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let start = f[0].to_string();
        let c: f64 = f[5].parse().unwrap();
        match &prev {
            Some((s, first, last)) if *s == start => {
                if c > last + 1e-9 * (1.0 + first) {
                    return false;
                }
                prev = Some((start, *first, c));
            }
            _ => prev = Some((start, c, c)),
        }
    }
    true
}

fn determinism(dir: &Path) -> Outcome {
    let spec = write_spec(
        dir,
        &ExperimentSpec {
            n_nodes: 12,
            n_samples: 60,
            filter_order: 3,
            seed: 7,
            ..Default::default()
        },
    );
    let config = dir.join("config.json");
    fs::write(&config, r#"{"filter_order": 3}"#).unwrap();
    let mut traces = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("run{run}"));
        run_synthetic(&spec, Some(&config), &out, &StartsSpec::DefaultsAndCandidates, None)
            .unwrap_or_else(|e| panic!("{}", e.error));
        traces.push(fs::read(out.join("trace.csv")).unwrap());
    }
    Outcome {
        pass: traces[0] == traces[1] && !traces[0].is_empty(),
        detail: format!("trace.csv sizes {} and {} bytes", traces[0].len(), traces[1].len()),
    }
}

/// Criterion numbers given on the command line select a subset; none runs all.
fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |id: usize| selected.is_empty() || selected.contains(&id);
    let tmp = tempfile::tempdir().unwrap();
    let sub = |name: &str| {
        let p = tmp.path().join(name);
        fs::create_dir_all(&p).unwrap();
        p
    };

    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let cheap: [(usize, &str, fn() -> Outcome); 4] = [
        (1, "monotone global trace", monotone_trace),
        (2, "gradient correctness", gradient_correctness),
        (3, "oracle equivalence", oracle_equivalence),
        (4, "exact recovery at the optimum", exact_recovery),
    ];
    for (id, name, run) in cheap {
        if want(id) {
            results.push((id, name, run()));
        }
    }
    if want(5) || want(6) {
        let (reports, times) = default_scale(&sub("default"));
        if want(5) {
            results.push((5, "default-scale NMSE reduction", nmse_behavior(&reports, &times)));
        }
        if want(6) {
            results.push((6, "spearman correlation", spearman_band(&reports)));
        }
    }
    if want(7) {
        results.push((7, "mismatched hypothesis robustness", mismatched_hypothesis(&sub("mismatch"))));
    }
    if want(8) {
        results.push((8, "determinism", determinism(&sub("determinism"))));
    }

    println!();
    for (id, name, o) in &results {
        println!(
            "criterion {id} {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if results.iter().all(|(_, _, o)| o.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
