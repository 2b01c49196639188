use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use imbalance_eval::cli::{
    cmd_aggregate, cmd_calibrate, cmd_evaluate, cmd_sweep, AggregateConfig, CalibrateConfig,
    EvaluationConfig, OutputFormat, SweepConfig,
};
use imbalance_eval::curves::PrEstimator;
use imbalance_eval::synth::ScoreFamily;
use imbalance_eval::EvalError;

/// Evaluate binary classifiers on imbalanced data: ROC/PR curves, F1
/// operating points, stratified and balanced Brier scores, PAV calibration.
#[derive(Debug, Parser)]
#[command(name = "imbalance-eval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Estimator {
    Trapezoid,
    Step,
}

impl From<Estimator> for PrEstimator {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Trapezoid => PrEstimator::Trapezoid,
            Estimator::Step => PrEstimator::Step,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Markdown => OutputFormat::Markdown,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Uniform,
    Binormal,
    Constant,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate prediction files (one per run) and aggregate across runs.
    Evaluate {
        /// Test prediction CSVs, one per run.
        #[arg(long = "test", required = true, num_args = 1.., value_delimiter = ',')]
        test_files: Vec<PathBuf>,
        /// Tuning prediction CSVs, parallel to --test. Without them the
        /// operating point is chosen on the test split.
        #[arg(long = "tuning", num_args = 1.., value_delimiter = ',')]
        tuning_files: Option<Vec<PathBuf>>,
        /// Restrict evaluation to these tasks.
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "trapezoid")]
        pr_estimator: Estimator,
        /// Resample exported curves onto this many grid intervals.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        format: Format,
    },
    /// Prevalence sweep over synthetic scores.
    Sweep {
        #[arg(long, value_enum)]
        family: Family,
        /// Binormal class separation.
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Constant score.
        #[arg(long, default_value_t = 0.0)]
        value: f64,
        #[arg(long, required = true, value_delimiter = ',')]
        prevalences: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "trapezoid")]
        pr_estimator: Estimator,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Emit the PAV calibration map of one task.
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        task: String,
        /// Write JSON here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Merge per-run JSON reports written by `evaluate`.
    Aggregate {
        #[arg(long = "runs", required = true, num_args = 1.., value_delimiter = ',')]
        run_files: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        format: Format,
    },
}

fn run(cli: Cli) -> Result<(), EvalError> {
    match cli.command {
        Command::Evaluate {
            test_files,
            tuning_files,
            tasks,
            pr_estimator,
            grid,
            output,
            format,
        } => {
            let config = EvaluationConfig {
                test_files,
                tuning_files,
                tasks,
                pr_estimator: pr_estimator.into(),
                grid_size: grid,
                output,
                format: format.into(),
            };
            let outcome = cmd_evaluate(&config)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "wrote {} files to {}",
                outcome.written.len(),
                config.output.display()
            );
        }
        Command::Sweep {
            family,
            d,
            value,
            prevalences,
            n,
            seed,
            pr_estimator,
            threads,
            output,
        } => {
            let family = match family {
                Family::Uniform => ScoreFamily::UniformRandom,
                Family::Binormal => ScoreFamily::Binormal { separation: d },
                Family::Constant => ScoreFamily::Constant { value },
            };
            let outcome = cmd_sweep(&SweepConfig {
                family,
                prevalences,
                n,
                seed,
                pr_estimator: pr_estimator.into(),
                threads,
                output,
            })?;
            print!("{}", outcome.value.to_csv());
        }
        Command::Calibrate {
            input,
            task,
            output,
        } => {
            let to_stdout = output.is_none();
            let outcome = cmd_calibrate(&CalibrateConfig {
                input,
                task,
                output,
            })?;
            if to_stdout {
                print!("{}", outcome.value.to_json());
            }
        }
        Command::Aggregate {
            run_files,
            output,
            format,
        } => {
            let outcome = cmd_aggregate(&AggregateConfig {
                run_files,
                output,
                format: format.into(),
            })?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
