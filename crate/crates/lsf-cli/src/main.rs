//! Command-line front end for the LSF (LSTM-SVM fusion) ECG pipeline.
//!
//! Every stage reads and writes on-disk artifacts under `--out-dir`, so long
//! runs are resumable stage by stage. Exit codes: 0 success, 1 usage error,
//! 2 data error, 3 completed with a convergence warning.

use clap::{Args, Parser, Subcommand};
use lsf_core::dataset::Task;
use lsf_core::pipeline::{run_stage, PipelineConfig, PipelineError, Stage, StageReport};
use lsf_core::synth::{afib_demo_names, arrhythmia_demo_names, write_synth_dataset, SynthSpec};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "lsf", version, about = "ECG arrhythmia / AFIB detection with an LSTM-SVM fusion model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the pipeline stages. Precedence: defaults, then the
/// config file, then explicit flags.
#[derive(Args, Debug, Clone)]
struct StageArgs {
    /// Key-value config file; every key can also be set by flag.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory with the records (.hea/.dat/.atr triples or .ecgtxt files).
    #[arg(long)]
    data_dir: Option<PathBuf>,

    /// Directory for pipeline artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Task: arrhythmia | afib.
    #[arg(long)]
    task: Option<String>,

    /// Seed for splits, initialization, and shuffling (required for split
    /// and the train stages).
    #[arg(long)]
    seed: Option<u64>,

    /// Signal channel to use.
    #[arg(long)]
    channel: Option<usize>,

    /// High-pass cutoff in Hz.
    #[arg(long)]
    cutoff_hz: Option<f64>,

    /// High-pass filter order.
    #[arg(long)]
    filter_order: Option<usize>,

    /// Resampling target rate in Hz.
    #[arg(long)]
    target_hz: Option<f64>,

    /// Forward-backward (zero-phase) filtering instead of the causal pass.
    #[arg(long)]
    zero_phase: bool,

    /// Normalization statistics: elementwise | channel.
    #[arg(long)]
    norm_mode: Option<String>,

    /// LSTM hidden units per layer.
    #[arg(long)]
    hidden_size: Option<usize>,

    #[arg(long)]
    learning_rate: Option<f64>,

    #[arg(long)]
    batch_size: Option<usize>,

    #[arg(long)]
    max_epochs: Option<usize>,

    /// Early-stopping patience in epochs.
    #[arg(long)]
    patience: Option<usize>,

    /// Global gradient-norm ceiling.
    #[arg(long)]
    clip_norm: Option<f64>,

    /// Window length in seconds.
    #[arg(long)]
    window_seconds: Option<f64>,

    /// RBF gamma; "scale" picks 1 / (dim * var).
    #[arg(long)]
    svm_gamma: Option<String>,

    #[arg(long)]
    svm_tolerance: Option<f64>,

    /// Iteration cap per SVM solve.
    #[arg(long)]
    svm_max_iterations: Option<usize>,

    /// Cap training points per grid candidate ("off" disables).
    #[arg(long)]
    grid_subsample: Option<String>,

    /// Segments timed by the benchmark stage.
    #[arg(long)]
    benchmark_segments: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and index the raw records.
    Ingest(StageArgs),
    /// Filter, resample, wavelet-transform, and label all records.
    Preprocess(StageArgs),
    /// Build the inter-patient split and validation assignment.
    Split(StageArgs),
    /// Train the baseline LSTM with early stopping.
    TrainLstm(StageArgs),
    /// Export pooled LSTM features for every split.
    ExtractFeatures(StageArgs),
    /// Grid-search and train the SVM on the exported features.
    TrainSvm(StageArgs),
    /// Evaluate baseline and fused models on the test split.
    Evaluate(StageArgs),
    /// Time per-segment inference and emit the latency breakdown.
    Benchmark(StageArgs),
    /// Emit the baseline-vs-LSF comparison table.
    Report(StageArgs),
    /// Dump feature vectors as CSV for external embedding tools.
    ExportFeatures(StageArgs),
    /// Run every stage through evaluate, then report.
    RunAll(StageArgs),
    /// Generate a synthetic demo dataset (interchange format).
    Synth {
        /// Output directory for the generated records.
        #[arg(long)]
        out_dir: PathBuf,
        /// Task controlling annotation style: arrhythmia | afib.
        #[arg(long, default_value = "arrhythmia")]
        task: String,
        /// Training patients to generate (test patients are always included).
        #[arg(long, default_value_t = 6)]
        train_records: usize,
        /// Windows per record.
        #[arg(long, default_value_t = 20)]
        windows: usize,
        /// Fraction of windows with the positive class.
        #[arg(long, default_value_t = 0.4)]
        positive_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn usage_err(message: impl Into<String>) -> anyhow::Error {
    anyhow::anyhow!("usage: {}", message.into())
}

fn build_config(args: &StageArgs, seed_required: bool) -> anyhow::Result<PipelineConfig> {
    let mut config = PipelineConfig::new(
        PathBuf::from("data"),
        PathBuf::from("out"),
        Task::Arrhythmia,
        0,
    );
    if let Some(path) = &args.config {
        config.apply_file(path).map_err(|e| usage_err(e.to_string()))?;
    }

    let mut seed_given = args.seed.is_some();
    if let Some(path) = &args.config {
        // A seed in the config file counts as explicitly provided.
        let text = std::fs::read_to_string(path)?;
        seed_given |= text
            .lines()
            .any(|l| l.trim_start().starts_with("seed") && l.contains('='));
    }
    if seed_required && !seed_given {
        return Err(usage_err("--seed is required for this stage"));
    }

    if let Some(v) = &args.data_dir {
        config.data_dir = v.clone();
    }
    if let Some(v) = &args.out_dir {
        config.out_dir = v.clone();
    }
    let mut set = |key: &str, value: Option<String>| -> anyhow::Result<()> {
        if let Some(v) = value {
            config.apply_key(key, &v).map_err(usage_err)?;
        }
        Ok(())
    };
    set("task", args.task.clone())?;
    set("seed", args.seed.map(|v| v.to_string()))?;
    set("channel", args.channel.map(|v| v.to_string()))?;
    set("cutoff_hz", args.cutoff_hz.map(|v| v.to_string()))?;
    set("filter_order", args.filter_order.map(|v| v.to_string()))?;
    set("target_hz", args.target_hz.map(|v| v.to_string()))?;
    if args.zero_phase {
        set("zero_phase", Some("true".into()))?;
    }
    set("norm_mode", args.norm_mode.clone())?;
    set("hidden_size", args.hidden_size.map(|v| v.to_string()))?;
    set("learning_rate", args.learning_rate.map(|v| v.to_string()))?;
    set("batch_size", args.batch_size.map(|v| v.to_string()))?;
    set("max_epochs", args.max_epochs.map(|v| v.to_string()))?;
    set("patience", args.patience.map(|v| v.to_string()))?;
    set("clip_norm", args.clip_norm.map(|v| v.to_string()))?;
    set("window_seconds", args.window_seconds.map(|v| v.to_string()))?;
    set("svm_gamma", args.svm_gamma.clone())?;
    set("svm_tolerance", args.svm_tolerance.map(|v| v.to_string()))?;
    set(
        "svm_max_iterations",
        args.svm_max_iterations.map(|v| v.to_string()),
    )?;
    set("grid_subsample", args.grid_subsample.clone())?;
    set(
        "benchmark_segments",
        args.benchmark_segments.map(|v| v.to_string()),
    )?;
    Ok(config)
}

fn print_report(report: &StageReport) {
    for message in &report.messages {
        eprintln!("[{}] {}", report.stage, message);
    }
    eprintln!("[{}] done", report.stage);
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(pe) = err.downcast_ref::<PipelineError>() {
        return match pe {
            PipelineError::Config { .. } | PipelineError::InvalidParam(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
    }
    if err.to_string().starts_with("usage:") {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

fn run_single(stage: Stage, args: &StageArgs) -> anyhow::Result<u8> {
    let seed_required = matches!(stage, Stage::Split | Stage::TrainLstm | Stage::TrainSvm);
    let config = build_config(args, seed_required)?;
    let report = run_stage(stage, &config)?;
    print_report(&report);
    Ok(if report.convergence_warning {
        EXIT_CONVERGENCE
    } else {
        EXIT_OK
    })
}

fn run_all(args: &StageArgs) -> anyhow::Result<u8> {
    let config = build_config(args, true)?;
    let mut code = EXIT_OK;
    let stages = [
        Stage::Ingest,
        Stage::Preprocess,
        Stage::Split,
        Stage::TrainLstm,
        Stage::ExtractFeatures,
        Stage::TrainSvm,
        Stage::Evaluate,
        Stage::Report,
    ];
    for stage in stages {
        let report = run_stage(stage, &config)?;
        print_report(&report);
        if report.convergence_warning {
            code = EXIT_CONVERGENCE;
        }
    }
    Ok(code)
}

fn run_synth(
    out_dir: &std::path::Path,
    task: &str,
    train_records: usize,
    windows: usize,
    positive_fraction: f64,
    seed: u64,
) -> anyhow::Result<u8> {
    let task = Task::parse(task).ok_or_else(|| usage_err(format!("unknown task {task:?}")))?;
    let names = match task {
        Task::Arrhythmia => arrhythmia_demo_names(train_records),
        Task::Afib => afib_demo_names(train_records),
    };
    let spec = SynthSpec {
        windows_per_record: windows,
        positive_fraction,
        task,
        seed,
        ..SynthSpec::default()
    };
    write_synth_dataset(out_dir, &names, &spec)?;
    eprintln!(
        "[synth] wrote {} records x {} windows to {}",
        names.len(),
        windows,
        out_dir.display()
    );
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Ingest(a) => run_single(Stage::Ingest, a),
        Command::Preprocess(a) => run_single(Stage::Preprocess, a),
        Command::Split(a) => run_single(Stage::Split, a),
        Command::TrainLstm(a) => run_single(Stage::TrainLstm, a),
        Command::ExtractFeatures(a) => run_single(Stage::ExtractFeatures, a),
        Command::TrainSvm(a) => run_single(Stage::TrainSvm, a),
        Command::Evaluate(a) => run_single(Stage::Evaluate, a),
        Command::Benchmark(a) => run_single(Stage::Benchmark, a),
        Command::Report(a) => run_single(Stage::Report, a),
        Command::ExportFeatures(a) => run_single(Stage::ExportFeatures, a),
        Command::RunAll(a) => run_all(a),
        Command::Synth {
            out_dir,
            task,
            train_records,
            windows,
            positive_fraction,
            seed,
        } => run_synth(out_dir, task, *train_records, *windows, *positive_fraction, *seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; anything else is usage.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_OK)
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
