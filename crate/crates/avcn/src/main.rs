//! Command-line front end for the aligned-grid graph classifier.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for dataset problems,
//! 3 for numerical failures during training.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use avcn::harness::{
    prepare_cached, read_report, report_render, run_cv_with_cache, write_report, CacheStatus,
    RunConfig,
};

#[derive(Parser)]
#[command(name = "avcn", version, about = "Graph classification with aligned vertex grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute aligned grids for a dataset and cache them on disk.
    Prepare(PrepareArgs),
    /// Run stratified cross-validation and write a report.
    Train(TrainArgs),
    /// Pretty-print a report file written by `train`.
    Report(ReportArgs),
}

/// Pipeline parameters shared by `prepare` and `train`. Defaults reproduce
/// the reference configuration on the bundled dataset.
#[derive(Args)]
struct PipelineArgs {
    /// Directory holding the dataset's `<NAME>_*.txt` files.
    #[arg(long, default_value = "data/MUTAG")]
    dataset_dir: PathBuf,

    /// Dataset name: the `<NAME>` prefix of the files in --dataset-dir.
    #[arg(long, default_value = "MUTAG")]
    dataset: String,

    /// Prototype count M; every graph becomes an M-row grid.
    #[arg(long, default_value_t = 64)]
    prototypes: usize,

    /// Largest expansion depth; grids average depths 1..=L.
    #[arg(long, default_value_t = 10)]
    depth: usize,

    /// Output channels of every convolution layer.
    #[arg(long, default_value_t = 32)]
    channels: usize,

    /// Comma-separated filter sizes, one parallel branch per size.
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,9")]
    filter_sizes: Vec<usize>,

    /// Stacked convolution layers per branch.
    #[arg(long, default_value_t = 3)]
    layers_per_branch: usize,

    /// Width of the dense layer between the branches and the classifier.
    #[arg(long, default_value_t = 64)]
    dense_units: usize,

    /// Dropout rate after the dense layer, in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,

    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,

    /// Training epochs per fold.
    #[arg(long, default_value_t = 100)]
    epochs: usize,

    /// Mini-batch size.
    #[arg(long, default_value_t = 32)]
    batch_size: usize,

    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,

    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Whole-experiment repetitions with fresh fold splits.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

impl PipelineArgs {
    fn into_config(self, out: PathBuf) -> RunConfig {
        RunConfig {
            dataset_dir: self.dataset_dir,
            dataset: self.dataset,
            prototypes: self.prototypes,
            depth: self.depth,
            channels: self.channels,
            filter_sizes: self.filter_sizes,
            layers_per_branch: self.layers_per_branch,
            dense_units: self.dense_units,
            dropout: self.dropout,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            folds: self.folds,
            repeats: self.repeats,
            seed: self.seed,
            out,
        }
    }
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Grid cache file to write.
    #[arg(long, default_value = "avcn-grids.bin")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Report file to write; timings go to `<out>.timings`.
    #[arg(long, default_value = "avcn-report.txt")]
    out: PathBuf,

    /// Grid cache to reuse when fresh, or create otherwise.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report file written by `train`.
    file: PathBuf,
}

fn run(cli: Cli) -> avcn::Result<()> {
    match cli.command {
        Command::Prepare(args) => {
            let config = args.pipeline.into_config(args.out);
            let (grids, status) = prepare_cached(&config, &config.out)?;
            let (rows, cols) = grids.grids.first().map_or((0, 0), |g| (g.rows(), g.cols()));
            let status = match status {
                CacheStatus::Hit => "cache hit",
                CacheStatus::Recomputed => "recomputed",
            };
            println!(
                "{} graphs as {rows} x {cols} grids -> {} ({status})",
                grids.grids.len(),
                config.out.display()
            );
        }
        Command::Train(args) => {
            let config = args.pipeline.into_config(args.out);
            let report = run_cv_with_cache(&config, args.cache.as_deref())?;
            write_report(&report, &config.out)?;
            print!("{}", report_render(&report));
            println!("report written to {}", config.out.display());
        }
        Command::Report(args) => {
            let report = read_report(&args.file)?;
            print!("{}", report_render(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
