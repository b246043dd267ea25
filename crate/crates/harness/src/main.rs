use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyloc_core::learn::Variant;
use dyloc_harness::config::{Experiment, ExperimentConfig, SeedSpec, PRESET_PAPER_REPRO};
use dyloc_harness::plot::{discover, emit_plot_data};
use dyloc_harness::{init_thread_pool, run_experiment, HarnessError, THREADS_ENV};

#[derive(Parser)]
#[command(name = "dyloc", version, about = "DyLoC privacy benchmark experiments")]
#[command(after_help = "Set DYLOC_THREADS to cap the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the selected variants and write loss.csv.
    Train(RunArgs),
    /// Snapshot recovery from released gradients; writes weak.csv.
    AttackWeak(RunArgs),
    /// Snapshot inversion from a far initial guess; writes strong.csv.
    AttackStrong(RunArgs),
    /// Inversion-loss grid over the input domain; writes landscape_<variant>.csv.
    Landscape(RunArgs),
    /// Lie algebra, snapshot basis and purity report.
    DlaInfo(RunArgs),
    /// Print the resolved configuration as JSON.
    Config(RunArgs),
    /// Turn experiment CSVs into gnuplot data and scripts.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; its `experiment` field is replaced by the subcommand.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset, used when no config file is given.
    #[arg(long, default_value = PRESET_PAPER_REPRO)]
    preset: String,
    /// Output directory (created if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; explicit purpose seeds in the config still take precedence.
    #[arg(long)]
    seed: Option<u64>,
    /// Variant to run (standard, qdp, dyloc); repeatable. Defaults to the config's set.
    #[arg(long = "variant")]
    variants: Vec<Variant>,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding the CSVs; also where plot files are written unless --plots is given.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Destination for .dat/.gp files.
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Explicit CSV files; by default every recognised CSV in --out.
    inputs: Vec<PathBuf>,
}

impl RunArgs {
    fn resolve(&self, experiment: Experiment) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::preset(&self.preset, experiment)?,
        };
        cfg.experiment = experiment;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seeds = SeedSpec {
                master: seed,
                ..cfg.seeds
            };
        }
        if !self.variants.is_empty() {
            cfg.variants = self.variants.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    init_thread_pool()?;
    let (args, experiment) = match cli.command {
        Command::Train(a) => (a, Experiment::Train),
        Command::AttackWeak(a) => (a, Experiment::AttackWeak),
        Command::AttackStrong(a) => (a, Experiment::AttackStrong),
        Command::Landscape(a) => (a, Experiment::Landscape),
        Command::DlaInfo(a) => (a, Experiment::DlaInfo),
        Command::Config(a) => {
            print!("{}", a.resolve(Experiment::Train)?.to_json());
            return Ok(());
        }
        Command::Plot(p) => {
            let inputs = if p.inputs.is_empty() {
                discover(&p.out)?
            } else {
                p.inputs
            };
            let dest = p.plots.unwrap_or_else(|| p.out.clone());
            for a in emit_plot_data(&inputs, &dest)? {
                println!("{}", a.script.display());
            }
            return Ok(());
        }
    };
    let cfg = args.resolve(experiment)?;
    let outcome = run_experiment(&cfg)?;
    if let Some(report) = &outcome.report {
        print!("{report}");
    }
    for (name, count) in &outcome.manifest.minima {
        println!("{name}: {count} strict local minima");
    }
    for (key, value) in &outcome.manifest.info {
        println!("{key}: {value}");
    }
    println!("wrote {}", outcome.manifest_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dyloc: {e}");
            if matches!(e, HarnessError::Env { .. }) {
                eprintln!("{THREADS_ENV} must be a positive integer");
            }
            ExitCode::FAILURE
        }
    }
}
