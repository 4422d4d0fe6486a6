use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spa_cli::config::{preset, ExperimentConfig, Step, VariantChoice, PRESET_NAMES};
use spa_cli::pipeline::{resolve_out, run_pipeline, RunDir};
use spa_cli::verify::{Check, VerifyOptions, VerifyReport};
use spa_core::analysis::{density_class_stats, CaseConfig, RegionFilter, TailOutcome};
use spa_core::io::{self, RunMeta};

#[derive(Parser)]
#[command(name = "spa", version, about = "Spatial preferential attachment experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph into the run directory.
    Generate {
        /// Built-in experiment to take the model from instead of --config.
        #[arg(long)]
        preset: Option<String>,
        /// Use the O(n²) reference engine.
        #[arg(long)]
        naive: bool,
        /// Record in-degree trajectories: all, ids:1,2, born:LO-HI, cells:0,5 or born:..;cells:..
        #[arg(long)]
        watch: Option<String>,
    },
    /// Per-region node and edge counts.
    Stats,
    /// In-degree histogram, optionally with a power-law tail fit.
    Hist {
        /// all, dense, sparse or cells:i,j
        #[arg(long, default_value = "all")]
        region: String,
        #[arg(long)]
        fit: bool,
    },
    /// Sample and classify node pairs.
    Pairs {
        #[arg(long, default_value_t = 30)]
        min_deg: u32,
        #[arg(long, default_value_t = 1000)]
        sample: usize,
        #[arg(long, default_value_t = 3.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Distance estimates for the sampled pairs.
    EstimateDistance {
        /// uniform, known-density, estimated-density or all
        #[arg(long, default_value = "all")]
        variant: String,
    },
    /// Density estimates from in-neighbour out-degrees.
    EstimateDensity {
        #[arg(long, default_value_t = 10)]
        min_deg: u32,
    },
    /// Check the artifacts against the model's predictions.
    Verify {
        /// Comma-separated checks; default: the config's verify step, else all.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// Run a whole experiment.
    Run {
        #[arg(long)]
        preset: Option<String>,
        /// List preset names and exit.
        #[arg(long)]
        list: bool,
        /// Print the effective config and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn load_config(global: &Global, preset_name: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (preset_name, &global.config) {
        (Some(_), Some(_)) => bail!("give either --preset or --config, not both"),
        (Some(name), None) => preset(name).with_context(|| format!("unknown preset {name:?}; try `spa run --list`"))?,
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None) => bail!("no experiment given: pass --config PATH or --preset NAME"),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn run_dir(global: &Global) -> Result<PathBuf> {
    if let Some(out) = &global.out {
        return Ok(out.clone());
    }
    if let Some(path) = &global.config {
        return Ok(resolve_out(&ExperimentConfig::load(path)?, None));
    }
    bail!("no run directory: pass --out DIR")
}

fn print_report(report: &VerifyReport) {
    for o in &report.outcomes {
        println!("{o}");
    }
    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    println!("{} checks, {failed} failed", report.outcomes.len());
}

/// Verify options: explicit list, else the verify step of --config, else
/// the one recorded in meta.json, else every check.
fn verify_options(global: &Global, dir: &Path, checks: Option<Vec<String>>) -> Result<VerifyOptions> {
    let from_cfg = |cfg: &ExperimentConfig| match cfg.step(|s| matches!(s, Step::Verify { .. })) {
        Some(Step::Verify { options }) => Some(options.clone()),
        _ => None,
    };
    let mut opts = match &global.config {
        Some(path) => from_cfg(&ExperimentConfig::load(path)?),
        None => io::read_meta::<f64>(&dir.join(io::META_FILE))
            .ok()
            .and_then(|m: RunMeta<f64>| m.config)
            .and_then(|v| serde_json::from_value::<ExperimentConfig>(v).ok())
            .and_then(|c| from_cfg(&c)),
    }
    .unwrap_or_default();
    if let Some(list) = checks {
        opts.checks = list.iter().map(|s| s.parse::<Check>()).collect::<Result<_, _>>()?;
    }
    Ok(opts)
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Generate { preset, naive, watch } => {
            let cfg = load_config(g, preset.as_deref())?;
            let dir = resolve_out(&cfg, None);
            RunDir::new(&dir).generate(&cfg, naive, watch.as_deref())?;
            println!("wrote {}", dir.display());
        }
        Command::Stats => {
            let mut run = RunDir::new(run_dir(g)?);
            let summary = run.stats()?;
            let graph = &run.loaded()?.graph;
            println!("density\tcells\tnodes\twithin_edges\tmean_outdeg");
            for c in density_class_stats(graph, &summary) {
                println!("{}\t{}\t{}\t{}\t{:.4}", c.density, c.cells.len(), c.nodes, c.within_edges, c.mean_outdeg());
            }
            println!(
                "cross edges {} of {} ({:.4})",
                summary.cross_edges,
                summary.total_edges,
                summary.cross_fraction()
            );
        }
        Command::Hist { region, fit } => {
            let filter: RegionFilter = region.parse()?;
            let (hist, outcome) = RunDir::new(run_dir(g)?).hist(&filter, fit)?;
            println!("{} nodes in {}", hist.total(), filter.label());
            match outcome {
                Some(TailOutcome::Fit(f)) => println!(
                    "tail exponent {:.4} ± {:.4} over {} <= j <= {} ({} nodes, KS {:.4})",
                    f.exponent, f.std_err, f.j_min, f.j_max, f.tail_nodes, f.ks
                ),
                Some(TailOutcome::NoFit { reason }) => println!("no fit: {reason}"),
                None => {}
            }
        }
        Command::Pairs { min_deg, sample, omega, eps } => {
            let pairs = RunDir::new(run_dir(g)?).pairs(min_deg, sample, CaseConfig::new(omega, eps)?)?;
            println!("{} pairs", pairs.len());
        }
        Command::EstimateDistance { variant } => {
            let choice: VariantChoice = variant.parse()?;
            let est = RunDir::new(run_dir(g)?).estimate_distance(choice)?;
            let kept = est.iter().filter(|e| !e.filtered()).count();
            println!("{} estimates, {kept} kept by the filter", est.len());
        }
        Command::EstimateDensity { min_deg } => {
            let est = RunDir::new(run_dir(g)?).estimate_density(min_deg)?;
            println!("{} nodes estimated", est.len());
        }
        Command::Verify { checks } => {
            let dir = run_dir(g)?;
            let opts = verify_options(g, &dir, checks)?;
            let report = RunDir::new(&dir).verify(&opts)?;
            print_report(&report);
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Run { preset, list, print_config } => {
            if list {
                for name in PRESET_NAMES {
                    println!("{name}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let cfg = load_config(g, preset.as_deref())?;
            if print_config {
                print!("{}", cfg.to_canonical());
                return Ok(ExitCode::SUCCESS);
            }
            let outcome = run_pipeline(&cfg, None)?;
            println!("wrote {} ({})", outcome.dir.display(), outcome.completed.join(", "));
            if let Some(report) = &outcome.report {
                print_report(report);
            }
            if !outcome.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPA_LOG", "warn")).init();
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
