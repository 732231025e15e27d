//! Training runs that leave a directory of artifacts behind.

use std::path::{Path, PathBuf};

use disco_core::metrics::{evaluate_run, translate_per_mode, EvalConfig, MetricBundle};
use disco_core::models::VariantKind;
use disco_core::trainer::{History, LossReport, TrainState};
use disco_core::Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    write_assignment_csv, write_history_csv, write_json, write_landscape_csv, write_scatter_svg,
    CoverageFile, CoverageJson,
};
use crate::checkpoint::save_checkpoint;
use crate::config::ExperimentConfig;
use crate::error::{IoContext, Result};

pub const HISTORY_CSV: &str = "history.csv";
pub const ASSIGNMENT_CSV: &str = "assignment.csv";
pub const COVERAGE_JSON: &str = "coverage.json";
pub const LANDSCAPE_CSV: &str = "landscape.csv";
pub const SCATTER_SVG: &str = "scatter.svg";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CHECKPOINT: &str = "checkpoint.txt";

/// Translated samples drawn per A mode for the scatter plot.
pub const SCATTER_PER_MODE: usize = 200;
/// Evaluation rng stream for the scatter samples (0-3 are used by metrics).
const SCATTER_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossJson {
    pub iteration: u64,
    pub l_gan_b: f64,
    pub l_const_a: Option<f64>,
    pub l_gan_a: Option<f64>,
    pub l_const_b: Option<f64>,
    pub l_g_total: f64,
    pub l_d_a: Option<f64>,
    pub l_d_b: f64,
    pub l_d_total: f64,
}

impl From<&LossReport> for LossJson {
    fn from(r: &LossReport) -> Self {
        LossJson {
            iteration: r.iteration,
            l_gan_b: r.l_gan_b,
            l_const_a: r.l_const_a,
            l_gan_a: r.l_gan_a,
            l_const_b: r.l_const_b,
            l_g_total: r.l_g_total,
            l_d_a: r.l_d_a,
            l_d_b: r.l_d_b,
            l_d_total: r.l_d_total,
        }
    }
}

/// Contents of `summary.json`. `partial` is set whenever the run stopped
/// before all artifacts were written; `artifacts` lists what exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub error: Option<String>,
    pub partial: bool,
    pub variant: String,
    pub seed: u64,
    pub iterations_requested: u64,
    pub iterations_completed: u64,
    pub artifacts: Vec<String>,
    pub coverage: Option<CoverageJson>,
    pub coverage_b_to_a: Option<CoverageJson>,
    pub roundtrip_rmse_aba: Option<f64>,
    pub roundtrip_rmse_bab: Option<f64>,
    pub final_losses: Option<LossJson>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary: Summary,
    pub metrics: MetricBundle,
    pub history: History,
    pub state: TrainState,
}

impl RunArtifacts {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Trains from scratch per `config`, evaluates, and writes every artifact
/// into `out_dir` (created if needed).
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let state = TrainState::new(config.train.clone())?;
    continue_experiment(state, &config.eval, out_dir)
}

/// Trains `state` up to `state.config.iterations` and writes artifacts.
/// `history.csv` covers only the iterations run by this call.
pub fn continue_experiment(
    mut state: TrainState,
    eval: &EvalConfig,
    out_dir: &Path,
) -> Result<RunArtifacts> {
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut summary = Summary {
        status: "failed".into(),
        error: None,
        partial: true,
        variant: state.config.variant.as_str().into(),
        seed: state.config.seed,
        iterations_requested: state.config.iterations,
        iterations_completed: state.iteration,
        artifacts: Vec::new(),
        coverage: None,
        coverage_b_to_a: None,
        roundtrip_rmse_aba: None,
        roundtrip_rmse_bab: None,
        final_losses: None,
    };
    let mut history = History::new();
    let outcome = train_and_emit(&mut state, eval, out_dir, &mut history, &mut summary);
    summary.iterations_completed = state.iteration;
    summary.final_losses = history.last().map(LossJson::from);
    match outcome {
        Ok(metrics) => {
            summary.status = "ok".into();
            summary.partial = false;
            summary.artifacts.push(SUMMARY_JSON.into());
            write_json(&summary, &out_dir.join(SUMMARY_JSON))?;
            Ok(RunArtifacts {
                dir: out_dir.to_path_buf(),
                summary,
                metrics,
                history,
                state,
            })
        }
        Err(e) => {
            summary.error = Some(e.to_string());
            summary.artifacts.push(SUMMARY_JSON.into());
            // The original error matters more than a failure to record it.
            let _ = write_json(&summary, &out_dir.join(SUMMARY_JSON));
            Err(e)
        }
    }
}

fn train_and_emit(
    state: &mut TrainState,
    eval: &EvalConfig,
    dir: &Path,
    history: &mut History,
    summary: &mut Summary,
) -> Result<MetricBundle> {
    let until = state.config.iterations;
    let trained = state.run_until(until, history);
    write_history_csv(history, &dir.join(HISTORY_CSV))?;
    summary.artifacts.push(HISTORY_CSV.into());
    trained?;

    let metrics = evaluate_run(&state.models, state.domain_a(), state.domain_b(), eval)?;
    summary.coverage = Some(CoverageJson::new(&metrics.a_to_b, &metrics.coverage_a_to_b));
    summary.coverage_b_to_a = match (&metrics.b_to_a, &metrics.coverage_b_to_a) {
        (Some(am), Some(c)) => Some(CoverageJson::new(am, c)),
        _ => None,
    };
    summary.roundtrip_rmse_aba = metrics.rmse_aba;
    summary.roundtrip_rmse_bab = metrics.rmse_bab;

    write_assignment_csv(&metrics.a_to_b, &dir.join(ASSIGNMENT_CSV))?;
    summary.artifacts.push(ASSIGNMENT_CSV.into());

    let coverage = CoverageFile {
        tau: eval.tau,
        samples_per_mode: eval.samples_per_mode,
        a_to_b: summary.coverage.clone().expect("set above"),
        b_to_a: summary.coverage_b_to_a.clone(),
    };
    write_json(&coverage, &dir.join(COVERAGE_JSON))?;
    summary.artifacts.push(COVERAGE_JSON.into());

    write_landscape_csv(&metrics.landscape_b, &dir.join(LANDSCAPE_CSV))?;
    summary.artifacts.push(LANDSCAPE_CSV.into());

    let mut rng = Rng::stream(eval.seed, SCATTER_STREAM);
    let points = translate_per_mode(
        &state.models.g_ab,
        state.domain_a(),
        SCATTER_PER_MODE,
        &mut rng,
    )?;
    write_scatter_svg(
        &points,
        state.domain_b(),
        Some(&metrics.landscape_b),
        eval.landscape_margin,
        &dir.join(SCATTER_SVG),
    )?;
    summary.artifacts.push(SCATTER_SVG.into());

    save_checkpoint(state, eval, &dir.join(CHECKPOINT))?;
    summary.artifacts.push(CHECKPOINT.into());
    Ok(metrics)
}

/// One line of a variant comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub variant: String,
    pub seed: u64,
    pub covered_modes: usize,
    pub target_modes: usize,
    pub collapse_count: usize,
    pub roundtrip_rmse_aba: Option<f64>,
    pub roundtrip_rmse_bab: Option<f64>,
}

/// Runs all three variants for every seed, into `out_dir/<variant>/seed-<s>`.
/// The variants of one seed train concurrently.
pub fn compare(
    config: &ExperimentConfig,
    seeds: &[u64],
    out_dir: &Path,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let results: Vec<Result<RunArtifacts>> = std::thread::scope(|s| {
            let handles: Vec<_> = VariantKind::ALL
                .iter()
                .map(|&kind| {
                    let mut cfg = config.clone();
                    cfg.train.variant = kind;
                    cfg.train.seed = seed;
                    let dir = out_dir.join(kind.as_str()).join(format!("seed-{seed}"));
                    s.spawn(move || run_experiment(&cfg, &dir))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect()
        });
        for run in results {
            let run = run?;
            let c = &run.metrics.coverage_a_to_b;
            rows.push(CompareRow {
                variant: run.summary.variant.clone(),
                seed,
                covered_modes: c.covered_modes,
                target_modes: run.metrics.a_to_b.target_modes(),
                collapse_count: c.collapse_count,
                roundtrip_rmse_aba: run.metrics.rmse_aba,
                roundtrip_rmse_bab: run.metrics.rmse_bab,
            });
        }
    }
    Ok(rows)
}

/// Median of a non-empty list; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Plain-text table of `rows` followed by per-variant medians.
pub fn format_comparison(rows: &[CompareRow]) -> String {
    use std::fmt::Write as _;
    let rmse = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>8} {:>9} {:>10} {:>10}",
        "variant", "seed", "covered", "collapse", "rmse_aba", "rmse_bab"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>5}/{:<2} {:>9} {:>10} {:>10}",
            r.variant,
            r.seed,
            r.covered_modes,
            r.target_modes,
            r.collapse_count,
            rmse(r.roundtrip_rmse_aba),
            rmse(r.roundtrip_rmse_bab)
        );
    }
    let _ = writeln!(out, "\nmedians");
    for kind in VariantKind::ALL {
        let of: Vec<&CompareRow> = rows.iter().filter(|r| r.variant == kind.as_str()).collect();
        if of.is_empty() {
            continue;
        }
        let cov: Vec<f64> = of.iter().map(|r| r.covered_modes as f64).collect();
        let col: Vec<f64> = of.iter().map(|r| r.collapse_count as f64).collect();
        let _ = writeln!(
            out,
            "{:<10} covered {:>5} collapse {:>5}",
            kind.as_str(),
            median(&cov),
            median(&col)
        );
    }
    out
}
