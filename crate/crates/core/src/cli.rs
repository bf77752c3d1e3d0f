//! Batch front-end shared by the `gsoid` binary and the integration tests.
//!
//! Both commands write into an output directory:
//!
//! | file | content |
//! |------|---------|
//! | `trace.csv` | one row per iteration of every successful start |
//! | `report.json` | per-start summary, best start, metrics, wall time |
//! | `gso_inferred.json` | best start's shift operator |
//! | `taps_inferred.json` | best start's filter taps |
//! | `qq.csv` | quantile pairs of true vs inferred weights (synthetic only) |
//!
//! `synthetic` additionally dumps its generated data (`x.csv`, `y.csv`,
//! `support.txt`, `gso_true.json`, `taps_true.json`) so that `fit` can be run
//! on it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::am::{candidate_starts, default_starts, multi_start, AmConfig, MultiStartResult, Start};
use crate::error::{Error, Result};
use crate::graph::{GsoKind, SignalMatrix, SupportSet};
use crate::io::{
    fmt_f64, read_signal_csv, read_support, write_gso, write_signal_csv, write_support, GsoFile,
};
use crate::metrics::{edge_weight_vectors, qq_pairs, spearman};
use crate::synth::{generate_experiment, ExperimentSpec};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Which starting points to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartsSpec {
    Defaults,
    Candidates,
    DefaultsAndCandidates,
    /// JSON array of GSO objects.
    File(PathBuf),
}

impl FromStr for StartsSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "defaults" => Ok(Self::Defaults),
            "candidates" => Ok(Self::Candidates),
            "defaults+candidates" => Ok(Self::DefaultsAndCandidates),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(format!(
                    "expected defaults, candidates, defaults+candidates or file:<path>, got {s:?}"
                )),
            },
        }
    }
}

/// A failed command and the process exit code it maps to.
#[derive(Debug)]
pub struct CommandError {
    pub exit_code: i32,
    pub error: Error,
}

impl CommandError {
    fn config(error: Error) -> Self {
        Self { exit_code: 1, error }
    }
}

impl From<Error> for CommandError {
    fn from(error: Error) -> Self {
        let exit_code = match error {
            Error::AllStartsFailed(_) => 2,
            _ => 1,
        };
        Self { exit_code, error }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StartReport {
    pub index: usize,
    pub label: String,
    pub status: &'static str,
    pub final_cost: Option<f64>,
    pub initial_nmse: Option<f64>,
    pub final_nmse: Option<f64>,
    pub iterations: Option<usize>,
    pub spearman: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub mode: &'static str,
    pub n_nodes: usize,
    pub n_samples: usize,
    pub n_edges: usize,
    pub filter_order: usize,
    pub hypothesis_kind: GsoKind,
    pub generating_kind: Option<GsoKind>,
    pub seed: Option<u64>,
    pub starts: Vec<StartReport>,
    pub best_start: usize,
    pub best_label: String,
    pub final_cost: f64,
    pub final_nmse: f64,
    /// Rank correlation of true vs inferred edge weights for the best start.
    pub spearman: Option<f64>,
    pub spearman_error: Option<String>,
    pub wall_time_s: f64,
}

fn load_config(path: Option<&Path>) -> Result<AmConfig> {
    let cfg = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => AmConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    spec.validate()?;
    Ok(spec)
}

fn build_starts(
    which: &StartsSpec,
    x: &SignalMatrix,
    y: &SignalMatrix,
    support: &Arc<SupportSet>,
    config: &AmConfig,
) -> Result<Vec<Start>> {
    let kind = config.hypothesis_kind;
    let candidates = || -> Result<Vec<Start>> {
        if config.filter_order == 0 {
            return Ok(Vec::new());
        }
        candidate_starts(x, y, Arc::clone(support), kind, config.filter_order)
    };
    let starts = match which {
        StartsSpec::Defaults => default_starts(Arc::clone(support), kind),
        StartsSpec::Candidates => candidates()?,
        StartsSpec::DefaultsAndCandidates => {
            let mut s = default_starts(Arc::clone(support), kind);
            s.extend(candidates()?);
            s
        }
        StartsSpec::File(path) => {
            let files: Vec<GsoFile> = serde_json::from_str(&fs::read_to_string(path)?)?;
            let mut out = Vec::with_capacity(files.len());
            for (i, f) in files.into_iter().enumerate() {
                let gso = f.into_gso()?;
                if gso.kind() != kind || gso.support() != support.as_ref() {
                    return Err(Error::InvalidConfig(format!(
                        "start {i} in {} does not match the support and hypothesis kind",
                        path.display()
                    )));
                }
                out.push(Start {
                    label: format!("F{}", i + 1),
                    gso,
                });
            }
            out
        }
    };
    if starts.is_empty() {
        return Err(Error::InvalidConfig("no starting points selected".into()));
    }
    Ok(starts)
}

fn trace_csv(starts: &[Start], result: &MultiStartResult) -> String {
    let mut out = String::from("start,label,cumulative_iter,outer_iter,phase,cost,nmse,alpha,rho\n");
    for (idx, (start, run)) in starts.iter().zip(&result.runs).enumerate() {
        let Ok(state) = run else { continue };
        for r in &state.trace.records {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{idx},{},{},{},{},{},{},{},{}",
                start.label,
                r.cumulative_iter,
                r.outer_iter,
                r.phase,
                fmt_f64(r.cost),
                fmt_f64(r.nmse),
                opt(r.alpha),
                opt(r.rho)
            );
        }
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(fs::write(path, text)?)
}

#[derive(Serialize)]
struct TapsFile<'a> {
    order: usize,
    taps: &'a [f64],
}

struct Truth<'a> {
    gso: &'a crate::graph::Gso,
    seed: u64,
}

fn run_and_report(
    mode: &'static str,
    x: &SignalMatrix,
    y: &SignalMatrix,
    support: &Arc<SupportSet>,
    config: &AmConfig,
    which: &StartsSpec,
    truth: Option<Truth<'_>>,
    out_dir: &Path,
    clock: Instant,
) -> std::result::Result<Report, CommandError> {
    let starts = build_starts(which, x, y, support, config).map_err(CommandError::config)?;
    let gsos: Vec<_> = starts.iter().map(|s| s.gso.clone()).collect();
    let result = multi_start(&gsos, x, y, config)?;
    let best = result.best_run();

    let rank_corr = |g: &crate::graph::Gso| -> Option<Result<f64>> {
        truth.as_ref().map(|t| {
            let (a, b) = edge_weight_vectors(t.gso, g)?;
            spearman(&a, &b)
        })
    };

    let start_reports = starts
        .iter()
        .zip(&result.runs)
        .enumerate()
        .map(|(index, (start, run))| match run {
            Ok(state) => StartReport {
                index,
                label: start.label.clone(),
                status: "ok",
                final_cost: state.trace.final_cost(),
                initial_nmse: state.trace.initial_nmse(),
                final_nmse: state.trace.final_nmse(),
                iterations: Some(state.trace.records.len()),
                spearman: rank_corr(&state.gso).and_then(|r| r.ok()),
                error: None,
            },
            Err(e) => StartReport {
                index,
                label: start.label.clone(),
                status: "failed",
                final_cost: None,
                initial_nmse: None,
                final_nmse: None,
                iterations: None,
                spearman: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let (spearman_best, spearman_error) = match rank_corr(&best.gso) {
        Some(Ok(r)) => (Some(r), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, None),
    };

    fs::create_dir_all(out_dir).map_err(|e| CommandError::config(e.into()))?;
    let write_all = || -> Result<Report> {
        fs::write(out_dir.join("trace.csv"), trace_csv(&starts, &result))?;
        write_gso(&out_dir.join("gso_inferred.json"), &best.gso)?;
        write_json(
            &out_dir.join("taps_inferred.json"),
            &TapsFile {
                order: best.taps.order(),
                taps: best.taps.as_slice(),
            },
        )?;
        if let Some(t) = &truth {
            let (a, b) = edge_weight_vectors(t.gso, &best.gso)?;
            let mut qq = String::from("true_quantile,inferred_quantile\n");
            for (p, q) in qq_pairs(&a, &b)? {
                let _ = writeln!(qq, "{},{}", fmt_f64(p), fmt_f64(q));
            }
            fs::write(out_dir.join("qq.csv"), qq)?;
        }
        let report = Report {
            schema_version: REPORT_SCHEMA_VERSION,
            mode,
            n_nodes: x.n_nodes(),
            n_samples: x.n_samples(),
            n_edges: support.n_edges(),
            filter_order: config.filter_order,
            hypothesis_kind: config.hypothesis_kind,
            generating_kind: truth.as_ref().map(|t| t.gso.kind()),
            seed: truth.as_ref().map(|t| t.seed),
            starts: start_reports,
            best_start: result.best,
            best_label: starts[result.best].label.clone(),
            final_cost: best.trace.final_cost().unwrap_or(f64::NAN),
            final_nmse: best.trace.final_nmse().unwrap_or(f64::NAN),
            spearman: spearman_best,
            spearman_error,
            wall_time_s: clock.elapsed().as_secs_f64(),
        };
        write_json(&out_dir.join("report.json"), &report)?;
        Ok(report)
    };
    write_all().map_err(CommandError::config)
}

/// Generates an experiment from `spec_file`, fits it and writes the outputs.
pub fn run_synthetic(
    spec_file: &Path,
    config_file: Option<&Path>,
    out_dir: &Path,
    starts: &StartsSpec,
    seed: Option<u64>,
) -> std::result::Result<Report, CommandError> {
    let clock = Instant::now();
    let mut spec = load_spec(spec_file).map_err(CommandError::config)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let config = load_config(config_file).map_err(CommandError::config)?;
    let exp = generate_experiment(&spec)?;

    fs::create_dir_all(out_dir).map_err(|e| CommandError::config(e.into()))?;
    let dump = || -> Result<()> {
        write_signal_csv(&out_dir.join("x.csv"), &exp.x)?;
        write_signal_csv(&out_dir.join("y.csv"), &exp.y)?;
        write_support(&out_dir.join("support.txt"), &exp.support)?;
        write_gso(&out_dir.join("gso_true.json"), &exp.gso_true)?;
        write_json(
            &out_dir.join("taps_true.json"),
            &TapsFile {
                order: exp.taps_true.order(),
                taps: exp.taps_true.as_slice(),
            },
        )
    };
    dump().map_err(CommandError::config)?;

    run_and_report(
        "synthetic",
        &exp.x,
        &exp.y,
        &exp.support,
        &config,
        starts,
        Some(Truth {
            gso: &exp.gso_true,
            seed: spec.seed,
        }),
        out_dir,
        clock,
    )
}

/// Fits user-provided data.
pub fn run_fit(
    x_file: &Path,
    y_file: &Path,
    support_file: &Path,
    config_file: Option<&Path>,
    out_dir: &Path,
    starts: &StartsSpec,
) -> std::result::Result<Report, CommandError> {
    let clock = Instant::now();
    let load = || -> Result<_> {
        let x = read_signal_csv(x_file)?;
        let y = read_signal_csv(y_file)?;
        let support = Arc::new(read_support(support_file)?);
        let n = support.n_nodes();
        for (name, m) in [("X", &x), ("Y", &y)] {
            if m.n_nodes() != n {
                return Err(Error::InvalidConfig(format!(
                    "{name} has N={} rows, expected N={n} from the support",
                    m.n_nodes()
                )));
            }
        }
        if x.n_samples() != y.n_samples() {
            return Err(Error::InvalidConfig(format!(
                "X has T={} samples but Y has T={}",
                x.n_samples(),
                y.n_samples()
            )));
        }
        Ok((x, y, support, load_config(config_file)?))
    };
    let (x, y, support, config) = load().map_err(CommandError::config)?;
    run_and_report("fit", &x, &y, &support, &config, starts, None, out_dir, clock)
}
