//! `wlstream`: generate corpora, replay them through learners, compare
//! regimens and measure variant delays.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod manifest;
mod reports;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wlstream::checkpoint::write_online;
use wlstream::delays::{ccdf, cdf, compute_delays, delays_to_csv, distribution_to_csv, Horizon};
use wlstream::graph::corpus_to_bytes;
use wlstream::harness::{run_batch_regimen, run_online_observed, Quiet};
use wlstream::synth::{generate, stationary_variant, SynthConfig};
use wlstream::{
    compare, extract_vocab, parse_corpus, Algorithm, BatchLoss, Corpus, OnlineModel, RegimenKind,
    RegimenSpec, TrainConfig, Vocabulary, WlConfig,
};

use manifest::{sha256_hex, sidecar_path, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "wlstream",
    version,
    about = "Online classification of drifting graph streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Gen(GenArgs),
    /// Replay a corpus through one regimen and write its per-day report.
    Run(RunArgs),
    /// Merge reports into one long-format CSV and rank them.
    Compare(CompareArgs),
    /// Variant delays of a family-tagged corpus and their distributions.
    Delays(DelaysArgs),
    /// Dump the WL feature vocabulary of a corpus.
    Vocab(VocabArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// key=value config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: 60]
    #[arg(long)]
    days: Option<u32>,
    /// Samples per day [default: 50]
    #[arg(long = "per-day")]
    per_day: Option<u32>,
    /// Families alive on day 0 [default: 6]
    #[arg(long)]
    family_count: Option<u32>,
    /// Nodes per family motif [default: 5]
    #[arg(long)]
    motif_size: Option<u32>,
    /// [default: 5]
    #[arg(long)]
    noise_min: Option<u32>,
    /// [default: 15]
    #[arg(long)]
    noise_max: Option<u32>,
    /// [default: 40]
    #[arg(long)]
    alphabet_base: Option<u32>,
    /// [default: 3]
    #[arg(long)]
    new_labels_per_day: Option<u32>,
    /// Daily probability of a family birth [default: 0.3]
    #[arg(long)]
    birth_rate: Option<f64>,
    /// [default: 10]
    #[arg(long)]
    lifetime_min: Option<u32>,
    /// [default: 60]
    #[arg(long)]
    lifetime_max: Option<u32>,
    /// Fraction of benign samples per day, in (0, 1) [default: 0.5]
    #[arg(long)]
    benign_fraction: Option<f64>,
    /// Emit the drift-free control corpus instead.
    #[arg(long)]
    stationary: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "online-variable",
          value_parser = ["online-variable", "online-fixed", "once", "daily", "multi-once", "multi-daily"])]
    regimen: String,
    /// Online learner (online regimens only).
    #[arg(long, default_value = "pa", value_parser = ["pa", "perceptron", "sgdlr"])]
    algo: String,
    /// WL depth.
    #[arg(long = "h", default_value_t = 2)]
    depth: u32,
    /// Training window in days for multi-once and multi-daily.
    #[arg(long, default_value_t = 10)]
    window: u32,
    /// Last day whose features form the online-fixed vocabulary.
    #[arg(long, default_value_t = 0)]
    fixed_vocab_day: u32,
    /// Online learning rate [default: 1 for pa and perceptron, 0.1 for sgdlr]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Batch training epochs.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Batch base step size.
    #[arg(long, default_value_t = 0.5)]
    batch_lr: f64,
    /// Batch L2 penalty.
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    /// Batch seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Batch loss.
    #[arg(long, default_value = "hinge", value_parser = ["hinge", "logistic"])]
    loss: String,
    /// Also write the final online model here.
    #[arg(long)]
    save_model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Report CSV from `run`; pass at least twice.
    #[arg(long = "report", required = true, num_args = 1)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DelaysArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for delays.csv, cdf_min.csv and ccdf_max.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Measure the no-variant horizon to the latest malware sample instead of
    /// the latest sample of any class.
    #[arg(long)]
    latest_malware_only: bool,
}

#[derive(Debug, Args)]
struct VocabArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// WL depth.
    #[arg(long = "h", default_value_t = 2)]
    depth: u32,
    /// Only use graphs up to and including this day.
    #[arg(long)]
    through_day: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

fn flags<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(data(&path.display().to_string()))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Outcome {
    write_file(path, manifest.to_json().as_bytes())
}

/// Reads a corpus and returns it with the digest of its bytes.
fn load_corpus(path: &Path) -> Result<(Corpus, String), Failure> {
    let bytes = fs::read(path).map_err(data(&path.display().to_string()))?;
    let corpus =
        parse_corpus(BufReader::new(&bytes[..])).map_err(data(&path.display().to_string()))?;
    Ok((corpus, sha256_hex([&bytes[..]])))
}

fn cmd_gen(args: GenArgs) -> Outcome {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(data(&path.display().to_string()))?;
            SynthConfig::from_key_values(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.days {
        config.days = v;
    }
    if let Some(v) = args.per_day {
        config.samples_per_day = v;
    }
    if let Some(v) = args.family_count {
        config.family_count = v;
    }
    if let Some(v) = args.motif_size {
        config.motif_size = v;
    }
    if let Some(v) = args.noise_min {
        config.noise_nodes.0 = v;
    }
    if let Some(v) = args.noise_max {
        config.noise_nodes.1 = v;
    }
    if let Some(v) = args.alphabet_base {
        config.label_alphabet_base = v;
    }
    if let Some(v) = args.new_labels_per_day {
        config.new_labels_per_day = v;
    }
    if let Some(v) = args.birth_rate {
        config.family_birth_rate = v;
    }
    if let Some(v) = args.lifetime_min {
        config.family_lifetime_days.0 = v;
    }
    if let Some(v) = args.lifetime_max {
        config.family_lifetime_days.1 = v;
    }
    if let Some(v) = args.benign_fraction {
        config.benign_fraction = v;
    }
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let corpus = if args.stationary {
        stationary_variant(&config)
    } else {
        generate(&config)
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let bytes = corpus_to_bytes(&corpus);
    write_file(&args.out, &bytes)?;

    let mut resolved: BTreeMap<String, String> = config
        .to_key_values()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    resolved.insert("stationary".into(), args.stationary.to_string());
    resolved.insert("out".into(), args.out.display().to_string());
    let manifest = RunManifest::new("gen", resolved, sha256_hex([&bytes[..]]));
    write_manifest(&sidecar_path(&args.out), &manifest)?;
    println!("graphs={}", corpus.len());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Outcome {
    let kind: RegimenKind = args
        .regimen
        .parse()
        .map_err(|e| Failure::Usage(format!("{e}")))?;
    let algorithm: Algorithm = args
        .algo
        .parse()
        .map_err(|e| Failure::Usage(format!("{e}")))?;
    let loss: BatchLoss = args.loss.parse().map_err(Failure::Usage)?;
    if args.window == 0 {
        return Err(Failure::Usage("--window must be at least 1".into()));
    }
    if args.save_model.is_some() && !kind.is_online() {
        return Err(Failure::Usage(
            "--save-model only applies to online regimens".into(),
        ));
    }
    let learning_rate = args
        .learning_rate
        .unwrap_or(algorithm.default_learning_rate());
    let model = OnlineModel::with_learning_rate(algorithm, learning_rate)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let train = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.batch_lr,
        l2: args.l2,
        seed: args.seed,
        loss,
    };
    let spec = RegimenSpec::new(kind)
        .with_window(args.window)
        .with_fixed_vocab_day(args.fixed_vocab_day);
    let wl = WlConfig::new(args.depth);

    let (corpus, digest) = load_corpus(&args.corpus)?;
    let report = if kind.is_online() {
        let (report, model) =
            run_online_observed(&corpus, wl, model, &spec, &mut Quiet).map_err(data("run"))?;
        if let Some(path) = &args.save_model {
            let mut buf = Vec::new();
            write_online(&model, &mut buf).map_err(data("checkpoint"))?;
            write_file(path, &buf)?;
        }
        report
    } else {
        run_batch_regimen(&corpus, wl, &spec, &train).map_err(|e| match e {
            wlstream::HarnessError::Train(wlstream::TrainError::Config(m)) => Failure::Usage(m),
            other => Failure::Data(format!("run: {other}")),
        })?
    };
    write_file(&args.out, report.to_csv().as_bytes())?;

    let resolved = flags([
        ("corpus", args.corpus.display().to_string()),
        ("regimen", args.regimen.clone()),
        ("algo", args.algo.clone()),
        ("h", args.depth.to_string()),
        ("window", args.window.to_string()),
        ("fixed_vocab_day", args.fixed_vocab_day.to_string()),
        ("learning_rate", learning_rate.to_string()),
        ("epochs", args.epochs.to_string()),
        ("batch_lr", args.batch_lr.to_string()),
        ("l2", args.l2.to_string()),
        ("seed", args.seed.to_string()),
        ("loss", args.loss.clone()),
        (
            "save_model",
            opt(&args.save_model.as_ref().map(|p| p.display())),
        ),
        ("out", args.out.display().to_string()),
    ]);
    write_manifest(
        &sidecar_path(&args.out),
        &RunManifest::new("run", resolved, digest),
    )?;
    println!("accuracy={}", opt(&report.totals.accuracy));
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Outcome {
    if args.reports.len() < 2 {
        return Err(Failure::Usage(
            "compare needs at least two --report files".into(),
        ));
    }
    let mut loaded = Vec::new();
    let mut raw = Vec::new();
    for path in &args.reports {
        raw.push(fs::read(path).map_err(data(&path.display().to_string()))?);
        let report = reports::read_report(path).map_err(Failure::Data)?;
        loaded.push((report.regimen.clone(), report));
    }
    let comparison = compare(&loaded).map_err(data("compare"))?;
    write_file(&args.out, comparison.to_csv().as_bytes())?;

    let mut resolved = flags([("out", args.out.display().to_string())]);
    let list: Vec<String> = args
        .reports
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    resolved.insert("report".into(), list.join(","));
    let digest = sha256_hex(raw.iter().map(Vec::as_slice));
    write_manifest(
        &sidecar_path(&args.out),
        &RunManifest::new("compare", resolved, digest),
    )?;

    let mut stdout = std::io::stdout().lock();
    for (rank, (name, accuracy)) in comparison.ranking.iter().enumerate() {
        let _ = writeln!(stdout, "{}. {name} accuracy={}", rank + 1, opt(accuracy));
    }
    Ok(())
}

fn cmd_delays(args: DelaysArgs) -> Outcome {
    let (corpus, digest) = load_corpus(&args.corpus)?;
    let horizon = if args.latest_malware_only {
        Horizon::MalwareOnly
    } else {
        Horizon::AnyClass
    };
    let delays = compute_delays(&corpus, horizon).map_err(data("delays"))?;
    let mins: Vec<u32> = delays.iter().map(|d| d.delta_min).collect();
    let maxes: Vec<u32> = delays.iter().map(|d| d.delta_max).collect();
    let cdf_min = cdf(&mins).map_err(data("delays"))?;
    let ccdf_max = ccdf(&maxes).map_err(data("delays"))?;

    fs::create_dir_all(&args.out_dir).map_err(data(&args.out_dir.display().to_string()))?;
    write_file(
        &args.out_dir.join("delays.csv"),
        delays_to_csv(&delays).as_bytes(),
    )?;
    write_file(
        &args.out_dir.join("cdf_min.csv"),
        distribution_to_csv(&cdf_min).as_bytes(),
    )?;
    write_file(
        &args.out_dir.join("ccdf_max.csv"),
        distribution_to_csv(&ccdf_max).as_bytes(),
    )?;

    let resolved = flags([
        ("corpus", args.corpus.display().to_string()),
        ("out_dir", args.out_dir.display().to_string()),
        ("latest_malware_only", args.latest_malware_only.to_string()),
    ]);
    write_manifest(
        &args.out_dir.join("manifest.json"),
        &RunManifest::new("delays", resolved, digest),
    )?;
    println!("malware={}", delays.len());
    Ok(())
}

fn cmd_vocab(args: VocabArgs) -> Outcome {
    let (corpus, digest) = load_corpus(&args.corpus)?;
    let corpus = corpus.sort_by_day();
    let mut vocab = Vocabulary::new();
    let graphs = corpus
        .graphs()
        .iter()
        .filter(|g| args.through_day.is_none_or(|d| g.day() <= d));
    extract_vocab(graphs, WlConfig::new(args.depth), &mut vocab);
    let mut buf = Vec::new();
    vocab.write_dump(&mut buf).map_err(data("vocab"))?;
    write_file(&args.out, &buf)?;

    let resolved = flags([
        ("corpus", args.corpus.display().to_string()),
        ("h", args.depth.to_string()),
        ("through_day", opt(&args.through_day)),
        ("out", args.out.display().to_string()),
    ]);
    write_manifest(
        &sidecar_path(&args.out),
        &RunManifest::new("vocab", resolved, digest),
    )?;
    println!("features={}", vocab.len());
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
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Delays(a) => cmd_delays(a),
        Command::Vocab(a) => cmd_vocab(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
