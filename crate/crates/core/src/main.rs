//! Command-line front end: train, evaluate, bench, and synth subcommands.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparsefw::baseline::train_baseline;
use sparsefw::data::{generate_synthetic, load_svmlight, save_svmlight, Dataset};
use sparsefw::fast::{train_fast, SelectorKind};
use sparsefw::metrics::{evaluate, write_metrics_csv, MetricsRow};
use sparsefw::privacy::PrivacyParams;
use sparsefw::trainer::Mode;

#[derive(Parser)]
#[command(name = "sparsefw", version, about = "L1-constrained logistic regression via sparse Frank-Wolfe, optionally differentially private")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write metrics/model files
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset
    Evaluate(EvaluateArgs),
    /// Compare wall time of baseline-private, fast+bls, and fast+noisymax
    Bench(BenchArgs),
    /// Generate a synthetic svmlight dataset
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoFlag {
    Baseline,
    Fast,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorFlag {
    Lazyheap,
    Bls,
    Noisymax,
}

#[derive(Args)]
struct PrivacyFlags {
    /// Train with (epsilon, delta)-differential privacy
    #[arg(long, overrides_with = "no_private")]
    private: bool,
    /// Train without privacy noise
    #[arg(long = "no-private")]
    no_private: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Maximum L1 norm of the weight vector
    #[arg(long, default_value_t = 50.0)]
    lambda: f64,
    /// Number of Frank-Wolfe iterations
    #[arg(long, default_value_t = 4000)]
    iters: usize,
    /// Lipschitz bound L on per-feature magnitudes
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Training data in svmlight format (.gz accepted)
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgoFlag::Fast)]
    algo: AlgoFlag,
    #[arg(long, value_enum)]
    selector: Option<SelectorFlag>,
    #[command(flatten)]
    privacy: PrivacyFlags,
    /// Per-iteration metrics CSV output path
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Model output path
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Held-out data for accuracy/AUC reporting
    #[arg(long)]
    test_data: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    privacy: PrivacyFlags,
    /// Timing repeats per configuration; the median is reported
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Ratio-table CSV output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    density: f64,
    /// Number of informative features in the hidden model
    #[arg(long, default_value_t = 10)]
    informative: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 1;

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn runtime_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_RUNTIME)
}

/// Resolve mode and privacy parameters from the shared flags. Nonprivate
/// runs never sample noise, but the trainers still take a parameter block;
/// epsilon/delta are filled with valid placeholders in that case.
fn resolve_privacy(
    flags: &PrivacyFlags,
    n_rows: usize,
) -> Result<(Mode, PrivacyParams), String> {
    let mode = if flags.private {
        Mode::Private
    } else {
        Mode::NonPrivate
    };
    let (epsilon, delta) = match mode {
        Mode::Private => {
            let eps = flags
                .epsilon
                .ok_or("--epsilon is required with --private")?;
            let delta = flags.delta.ok_or("--delta is required with --private")?;
            (eps, delta)
        }
        // placeholders; noise is never drawn in nonprivate mode
        Mode::NonPrivate => (1.0, 0.5),
    };
    // --iters counts executed steps; the step loop runs t = 1..t_max
    let p = PrivacyParams::new(
        epsilon,
        delta,
        flags.iters + 1,
        flags.lambda,
        flags.lipschitz,
        n_rows,
    )
    .map_err(|e| e.to_string())?;
    Ok((mode, p))
}

fn load_or_exit(path: &Path, n_cols: Option<usize>) -> Result<Dataset, ExitCode> {
    load_svmlight(path, n_cols).map_err(|e| runtime_error(e))
}

fn save_model(path: &Path, w: &[f64], lambda: f64, algo: &str) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# n_features={} lambda={} algo={}", w.len(), lambda, algo)?;
    for (j, &v) in w.iter().enumerate() {
        if v != 0.0 {
            writeln!(out, "{}:{}", j + 1, v)?;
        }
    }
    out.flush()
}

fn load_model(path: &Path) -> Result<Vec<f64>, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or("empty model file")?
        .map_err(|e| e.to_string())?;
    let n_features: usize = header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("n_features="))
        .ok_or("model header missing n_features")?
        .parse()
        .map_err(|e| format!("bad n_features: {e}"))?;
    let mut w = vec![0.0f64; n_features];
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let (idx, val) = line
            .split_once(':')
            .ok_or_else(|| format!("model line {}: expected idx:val", k + 2))?;
        let idx: usize = idx.trim().parse().map_err(|e| format!("line {}: {e}", k + 2))?;
        let val: f64 = val.trim().parse().map_err(|e| format!("line {}: {e}", k + 2))?;
        if idx == 0 || idx > n_features {
            return Err(format!("model line {}: index {idx} out of range", k + 2));
        }
        w[idx - 1] = val;
    }
    Ok(w)
}

fn print_eval(ds: &Dataset, w: &[f64]) -> Result<(), String> {
    let (acc, auc, sparsity) = evaluate(ds, w).map_err(|e| e.to_string())?;
    println!(
        "accuracy = {:.2}%  auc = {:.2}%  sparsity = {:.2}%",
        acc * 100.0,
        auc * 100.0,
        sparsity * 100.0
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> ExitCode {
    let selector = match (args.algo, args.selector) {
        (AlgoFlag::Baseline, Some(_)) => {
            return usage_error("--selector only applies to --algo fast")
        }
        (AlgoFlag::Baseline, None) => None,
        (AlgoFlag::Fast, sel) => Some(match (sel, args.privacy.private) {
            (Some(SelectorFlag::Lazyheap), true) => {
                return usage_error("--selector lazyheap requires --no-private")
            }
            (Some(SelectorFlag::Bls), false) | (Some(SelectorFlag::Noisymax), false) => {
                return usage_error("private selectors require --private")
            }
            (Some(SelectorFlag::Lazyheap), false) => SelectorKind::LazyHeap,
            (Some(SelectorFlag::Bls), true) => SelectorKind::Bls,
            (Some(SelectorFlag::Noisymax), true) => SelectorKind::NoisyMax,
            (None, false) => SelectorKind::LazyHeap,
            (None, true) => SelectorKind::Bls,
        }),
    };

    let train = match load_or_exit(&args.data, None) {
        Ok(ds) => ds,
        Err(code) => return code,
    };
    let (mode, p) = match resolve_privacy(&args.privacy, train.n_rows()) {
        Ok(v) => v,
        Err(msg) => return usage_error(&msg),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(args.privacy.seed);
    let mut rows: Vec<MetricsRow> = Vec::new();
    let start = Instant::now();
    let (weights, algo_name) = match selector {
        None => match train_baseline(&train, &p, mode, &mut rng, &mut rows) {
            Ok(run) => (run.weights, "baseline".to_string()),
            Err(e) => return runtime_error(e),
        },
        Some(kind) => match train_fast(&train, &p, kind, mode, &mut rng, &mut rows) {
            Ok(run) => (
                run.weights,
                format!("fast+{}", selector_name(kind)),
            ),
            Err(e) => return runtime_error(e),
        },
    };
    let elapsed = start.elapsed().as_secs_f64();

    let final_g = rows.last().map_or(0.0, |r| r.g);
    let l0 = weights.iter().filter(|&&w| w != 0.0).count();
    println!(
        "trained {algo_name}: final g = {final_g:.6e}, ||w||_0 = {l0}, elapsed = {elapsed:.3} s"
    );

    if let Some(path) = &args.metrics_out {
        if let Err(e) = write_metrics_csv(&rows, path) {
            return runtime_error(e);
        }
    }
    if let Some(path) = &args.model_out {
        if let Err(e) = save_model(path, &weights, p.lambda, &algo_name) {
            return runtime_error(e);
        }
    }
    if let Some(path) = &args.test_data {
        let test = match load_or_exit(path, Some(train.n_cols())) {
            Ok(ds) => ds,
            Err(code) => return code,
        };
        if let Err(msg) = print_eval(&test, &weights) {
            return runtime_error(msg);
        }
    }
    ExitCode::SUCCESS
}

fn selector_name(kind: SelectorKind) -> &'static str {
    match kind {
        SelectorKind::LazyHeap => "lazyheap",
        SelectorKind::Bls => "bls",
        SelectorKind::NoisyMax => "noisymax",
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> ExitCode {
    let w = match load_model(&args.model) {
        Ok(w) => w,
        Err(msg) => return runtime_error(msg),
    };
    let ds = match load_or_exit(&args.data, Some(w.len())) {
        Ok(ds) => ds,
        Err(code) => return code,
    };
    match print_eval(&ds, &w) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => runtime_error(msg),
    }
}

fn cmd_bench(args: &BenchArgs) -> ExitCode {
    if !args.privacy.private {
        return usage_error("bench compares private configurations; pass --private");
    }
    if args.repeats == 0 {
        return usage_error("--repeats must be at least 1");
    }
    let ds = match load_or_exit(&args.data, None) {
        Ok(ds) => ds,
        Err(code) => return code,
    };
    let (_, p) = match resolve_privacy(&args.privacy, ds.n_rows()) {
        Ok(v) => v,
        Err(msg) => return usage_error(&msg),
    };

    let time_median = |name: &str, f: &dyn Fn(&mut ChaCha8Rng) -> Result<(), String>| {
        let mut samples = Vec::with_capacity(args.repeats);
        for r in 0..args.repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(args.privacy.seed.wrapping_add(r as u64));
            let start = Instant::now();
            f(&mut rng)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            samples.push(ms);
            eprintln!("{name} repeat {}: {ms:.1} ms", r + 1);
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok::<f64, String>(samples[samples.len() / 2])
    };

    let baseline_ms = match time_median("baseline", &|rng: &mut ChaCha8Rng| {
        train_baseline(&ds, &p, Mode::Private, rng, &mut sparsefw::metrics::NullSink)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }) {
        Ok(ms) => ms,
        Err(msg) => return runtime_error(msg),
    };
    let fast_ms = |kind: SelectorKind| {
        time_median(selector_name(kind), &|rng: &mut ChaCha8Rng| {
            train_fast(&ds, &p, kind, Mode::Private, rng, &mut sparsefw::metrics::NullSink)
                .map(|_| ())
                .map_err(|e| e.to_string())
        })
    };
    let bls_ms = match fast_ms(SelectorKind::Bls) {
        Ok(ms) => ms,
        Err(msg) => return runtime_error(msg),
    };
    let noisymax_ms = match fast_ms(SelectorKind::NoisyMax) {
        Ok(ms) => ms,
        Err(msg) => return runtime_error(msg),
    };
    let mut table = String::from("config,median_ms,speedup_over_baseline,time_vs_baseline\n");
    for (name, ms) in [
        ("baseline", baseline_ms),
        ("fast+bls", bls_ms),
        ("fast+noisymax", noisymax_ms),
    ] {
        table.push_str(&format!(
            "{name},{ms},{},{}\n",
            baseline_ms / ms,
            ms / baseline_ms
        ));
    }
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &table) {
                return runtime_error(e);
            }
        }
        None => print!("{table}"),
    }
    ExitCode::SUCCESS
}

fn cmd_synth(args: &SynthArgs) -> ExitCode {
    let ds = match generate_synthetic(args.rows, args.cols, args.density, args.informative, args.seed)
    {
        Ok(ds) => ds,
        Err(e) => return usage_error(&e.to_string()),
    };
    match save_svmlight(&ds, &args.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => runtime_error(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
    }
}
