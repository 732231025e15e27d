use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disco::artifacts::{write_landscape_csv, write_scatter_svg};
use disco::checkpoint::load_checkpoint;
use disco::config::{load_config, ExperimentConfig};
use disco::run::{
    compare, continue_experiment, format_comparison, run_experiment, SCATTER_PER_MODE,
};
use disco_core::domains::bounding_box;
use disco_core::metrics::{landscape, translate_per_mode};
use disco_core::models::VariantKind;
use disco_core::numgrad::gradcheck::random_gradcheck;
use disco_core::Rng;

#[derive(Parser)]
#[command(
    name = "disco",
    version,
    about = "Cross-domain GAN variants on 2-D Gaussian mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Config file (`key = value` lines); defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<VariantKind>,
    #[arg(long)]
    iterations: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one variant and write its artifacts.
    Run {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Continue from a checkpoint (its embedded config is used; only
        /// --iterations applies) until the target iteration count.
        #[arg(long, conflicts_with_all = ["config", "seed", "variant"])]
        resume: Option<PathBuf>,
    },
    /// Check analytic MLP gradients against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        nets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train all three variants on shared seeds and tabulate coverage.
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated seeds; defaults to the (possibly overridden) config seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Re-render the B-side discriminator landscape and scatter from a checkpoint.
    Landscape {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_variant(s: &str) -> Result<VariantKind, String> {
    s.parse().map_err(|e: disco_core::Error| e.to_string())
}

fn load(o: &Overrides) -> disco::Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.train.seed = s;
    }
    if let Some(v) = o.variant {
        cfg.train.variant = v;
    }
    if let Some(n) = o.iterations {
        cfg.train.iterations = n;
    }
    cfg.train.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> disco::Result<bool> {
    match cli.command {
        Command::Run {
            overrides,
            out,
            resume,
        } => {
            let artifacts = match resume {
                Some(path) => {
                    let ckpt = load_checkpoint(&path)?;
                    let mut state = ckpt.state;
                    if let Some(n) = overrides.iterations {
                        state.config.iterations = n;
                    }
                    continue_experiment(state, &ckpt.eval, &out)?
                }
                None => run_experiment(&load(&overrides)?, &out)?,
            };
            let s = &artifacts.summary;
            if let Some(c) = &s.coverage {
                println!(
                    "{} seed {}: {} iterations, covered {}/{}, collapse {}",
                    s.variant,
                    s.seed,
                    s.iterations_completed,
                    c.covered_modes,
                    c.target_modes,
                    c.collapse_count
                );
            }
            println!("artifacts in {}", out.display());
            Ok(true)
        }
        Command::Gradcheck { nets, seed } => {
            let report = random_gradcheck(seed, nets)?;
            println!(
                "{} nets, {} entries, {} failures, worst error/tolerance {:.3e} (net {})",
                report.nets,
                report.entries_checked,
                report.failures,
                report.worst_ratio,
                report.worst_net
            );
            Ok(report.passed())
        }
        Command::Compare {
            overrides,
            out,
            seeds,
        } => {
            let cfg = load(&overrides)?;
            let seeds = if seeds.is_empty() {
                vec![cfg.train.seed]
            } else {
                seeds
            };
            let rows = compare(&cfg, &seeds, &out)?;
            let table = format_comparison(&rows);
            std::fs::write(out.join("comparison.txt"), &table).map_err(|source| {
                disco::Error::Io {
                    path: out.join("comparison.txt"),
                    source,
                }
            })?;
            print!("{table}");
            Ok(true)
        }
        Command::Landscape { checkpoint, out } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let (state, eval) = (&ckpt.state, &ckpt.eval);
            std::fs::create_dir_all(&out).map_err(|source| disco::Error::Io {
                path: out.clone(),
                source,
            })?;
            let bbox = bounding_box(state.domain_b(), eval.landscape_margin);
            let grid = landscape(
                &state.models.d_b,
                bbox,
                eval.landscape_nx,
                eval.landscape_ny,
            )?;
            write_landscape_csv(&grid, &out.join("landscape.csv"))?;
            let mut rng = Rng::stream(eval.seed, 4);
            let points = translate_per_mode(
                &state.models.g_ab,
                state.domain_a(),
                SCATTER_PER_MODE,
                &mut rng,
            )?;
            write_scatter_svg(
                &points,
                state.domain_b(),
                Some(&grid),
                eval.landscape_margin,
                &out.join("scatter.svg"),
            )?;
            println!(
                "landscape of iteration {} written to {}",
                state.iteration,
                out.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
