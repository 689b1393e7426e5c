use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bamc_bench::experiment::{read_records, run_experiment};
use bamc_bench::figure::{emit_figure_data, quantile_series, single_run_series, FigureTable};
use bamc_bench::summary::quantile_summary;
use bamc_bench::{Settings, DEFAULT_WINDOW};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bamc-bench", version, about = "Run and summarize MAP search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-iteration records.
    Run(RunArgs),
    /// Turn a records file into a plot-ready long-format table.
    Summarize(SummarizeArgs),
    /// Render a plot-ready table as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// tiny-hmm, hmm16, gmm or single-choice.
    #[arg(long)]
    model: Option<String>,
    /// Ground-truth file for hmm16.
    #[arg(long)]
    data: Option<PathBuf>,
    /// bamc, mh or sa.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// exponential or lundy-mees (sa only).
    #[arg(long)]
    schedule: Option<String>,
    /// Per-iteration annealing rate (sa only).
    #[arg(long)]
    rate: Option<f64>,
    /// Run sequentially instead of across threads.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Quantiles of the best log-weight across runs.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 0.75])]
    quantiles: Vec<f64>,
    /// Summarize one run instead: sample weights, best so far and their rolling median.
    #[arg(long)]
    run: Option<usize>,
    /// Rolling-median window (odd).
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "")]
    title: String,
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let flags = Settings {
        model: args.model,
        data: args.data,
        algorithm: args.algorithm,
        schedule: args.schedule,
        rate: args.rate,
        iterations: args.iterations,
        runs: args.runs,
        seed: args.seed,
        parallel: args.serial.then_some(false),
        out: args.out,
        ..Settings::default()
    };
    let config = file.overlay(flags).into_config()?;
    let output = run_experiment(&config)?;
    let finals: Vec<f64> = output.reports.iter().map(|r| r.best_log_weight()).collect();
    let q = |p| bamc_bench::summary::quantile(&finals, p);
    println!(
        "{} on {}: {} runs x {} iterations, final best log-weight quartiles {:.6} {:.6} {:.6}",
        config.algorithm,
        config.model,
        config.runs,
        config.iterations,
        q(0.25)?,
        q(0.5)?,
        q(0.75)?
    );
    for f in &output.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn summarize(args: SummarizeArgs) -> Result<()> {
    let records = read_records(&args.input)?;
    let mut meta = format!("input = {}\n", args.input.display());
    let table = match args.run {
        None => {
            let summary = quantile_summary(&records, &args.quantiles)?;
            meta += &format!("quantiles = {:?}\n", args.quantiles);
            emit_figure_data(&summary.iterations, &quantile_series(&summary))?
        }
        Some(id) => {
            let run: Vec<_> = records.iter().filter(|r| r.run_id == id).collect();
            if run.is_empty() {
                bail!("run {id} is not in {}", args.input.display());
            }
            let iterations: Vec<usize> = run.iter().map(|r| r.iteration).collect();
            let samples: Vec<f64> = run.iter().map(|r| r.sample_log_weight).collect();
            let best: Vec<f64> = run.iter().map(|r| r.best_log_weight_so_far).collect();
            meta += &format!("run = {id}\nwindow = {}\n", args.window);
            emit_figure_data(&iterations, &single_run_series(&samples, &best, args.window)?)?
        }
    };
    std::fs::write(&args.out, table.to_csv()?).with_context(|| args.out.display().to_string())?;
    let mut meta_path = args.out.clone().into_os_string();
    meta_path.push(".meta");
    std::fs::write(&meta_path, meta).context("writing summary metadata")?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let input = std::fs::File::open(&args.input).with_context(|| args.input.display().to_string())?;
    let table = FigureTable::from_csv(input)?;
    std::fs::write(&args.out, table.to_svg(&args.title)).with_context(|| args.out.display().to_string())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Summarize(a) => summarize(a),
        Command::Plot(a) => plot(a),
    }
}
