//! Command-line pipeline: synthesize data, train models, score trials,
//! and evaluate the equal error rate.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or validation
//! errors, 3 on numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use deplda_core::{
    apply_lda, compute_eer, fit_global, fit_lda, generate, make_trials, model_io,
    read_enroll_map, read_scores, read_trials, read_vectors, score_trialset, train_local,
    write_enroll_map, write_scores, write_trials, write_vectors, Error, Family, Label, LnMode,
    LocalTrainConfig, MonitorSpec, ScoredTrial, ScorerConfig, SynthSpec, Variant, VectorSet,
};

#[derive(Parser)]
#[command(name = "deplda", version, about = "Decoupled PLDA verification backend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled vector set (and optionally trials)
    Synth(SynthArgs),
    /// Fit the global model by EM, optionally behind an LDA projection
    TrainGlobal(TrainGlobalArgs),
    /// Train the local transform with EER-based early stopping
    TrainLocal(TrainLocalArgs),
    /// Score a trial list
    Score(ScoreArgs),
    /// Compute the equal error rate of a score file against labelled trials
    Eer(EerArgs),
    /// Print the training history stored in a local model file
    History(HistoryArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of classes
    #[arg(long)]
    classes: usize,
    /// Samples per class
    #[arg(long)]
    per_class: usize,
    /// Vector dimension
    #[arg(long)]
    dim: usize,
    /// Between-class variances: a scalar or a comma-separated list of d values
    #[arg(long)]
    epsilon: String,
    /// Residual family: gaussian, or t<nu> (e.g. t5)
    #[arg(long, default_value = "gaussian")]
    family: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; writes train.vec (and trial files when requested)
    #[arg(long)]
    out: PathBuf,
    /// Also build trials: enrollment utterances per class
    #[arg(long)]
    enroll_per_class: Option<usize>,
    /// Number of target trials to sample
    #[arg(long)]
    targets: Option<usize>,
    /// Number of nontarget trials to sample
    #[arg(long)]
    nontargets: Option<usize>,
}

#[derive(Args)]
struct TrainGlobalArgs {
    /// Labelled training vectors
    #[arg(long)]
    vectors: PathBuf,
    /// EM iterations
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Reduce to this dimension with LDA before fitting
    #[arg(long)]
    lda_dim: Option<usize>,
    /// Output model file (an EM trace CSV is written beside it)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainLocalArgs {
    /// Labelled training vectors (same space the global model was trained on)
    #[arg(long)]
    vectors: PathBuf,
    /// Global model file
    #[arg(long)]
    global: PathBuf,
    /// Labelled monitor trials
    #[arg(long)]
    monitor_trials: PathBuf,
    /// Enrollment map for the monitor trials (utterances resolved in --vectors)
    #[arg(long)]
    monitor_enroll: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Global model file
    #[arg(long)]
    global: PathBuf,
    /// Local model file (enables the decoupled scorer)
    #[arg(long)]
    local: Option<PathBuf>,
    /// Length normalization mode: none, full, or partial
    #[arg(long, default_value = "none")]
    ln: String,
    /// Enrollment map
    #[arg(long)]
    enroll_map: PathBuf,
    /// Vectors resolving the enrollment utterances
    #[arg(long)]
    enroll_vectors: PathBuf,
    /// Vectors resolving the trial test utterances
    #[arg(long)]
    test_vectors: PathBuf,
    /// Trial list to score
    #[arg(long)]
    trials: PathBuf,
    /// Output score file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EerArgs {
    /// Score file produced by `score`
    #[arg(long)]
    scores: PathBuf,
    /// Labelled trial list
    #[arg(long)]
    trials: PathBuf,
    /// Optionally write the ROC operating points as CSV
    #[arg(long)]
    roc_out: Option<PathBuf>,
}

#[derive(Args)]
struct HistoryArgs {
    /// Local model file
    #[arg(long)]
    model: PathBuf,
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(Error::Numeric(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::TrainGlobal(args) => run_train_global(args),
        Command::TrainLocal(args) => run_train_local(args),
        Command::Score(args) => run_score(args),
        Command::Eer(args) => run_eer(args),
        Command::History(args) => run_history(args),
    }
}

fn parse_epsilon(text: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let values: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid epsilon value '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values),
        n => Err(CliError::Usage(format!(
            "epsilon has {n} values but --dim is {dim}"
        ))),
    }
}

fn parse_family(text: &str) -> Result<Family, CliError> {
    if text == "gaussian" {
        return Ok(Family::Gaussian);
    }
    if let Some(nu) = text.strip_prefix('t') {
        let nu: f64 = nu
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid family '{text}'")))?;
        return Ok(Family::StudentT { nu });
    }
    Err(CliError::Usage(format!(
        "invalid family '{text}' (expected gaussian or t<nu>)"
    )))
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let epsilon = parse_epsilon(&args.epsilon, args.dim)?;
    let family = parse_family(&args.family)?;
    let trial_flags = [
        args.enroll_per_class.is_some(),
        args.targets.is_some(),
        args.nontargets.is_some(),
    ];
    if trial_flags.iter().any(|&f| f) && !trial_flags.iter().all(|&f| f) {
        return Err(CliError::Usage(
            "--enroll-per-class, --targets, and --nontargets must be given together".into(),
        ));
    }
    let spec = SynthSpec {
        classes: args.classes,
        per_class: args.per_class,
        dim: args.dim,
        epsilon,
        family,
        seed: args.seed,
    };
    let set = generate(&spec)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Core(Error::Io {
            path: args.out.display().to_string(),
            source: e,
        }))?;
    write_vectors(&set, args.out.join("train.vec"))?;
    if let (Some(enroll_per_class), Some(targets), Some(nontargets)) =
        (args.enroll_per_class, args.targets, args.nontargets)
    {
        let (map, trials, test_set) =
            make_trials(&set, enroll_per_class, targets, nontargets, args.seed)?;
        write_enroll_map(&map, args.out.join("enroll.map"))?;
        write_trials(&trials, args.out.join("trials.txt"))?;
        write_vectors(&test_set, args.out.join("test.vec"))?;
        let enroll_records: Vec<_> = map
            .iter()
            .flat_map(|(_, utts)| utts.iter())
            .map(|u| set.get(u).expect("generated utterance").clone())
            .collect();
        write_vectors(
            &VectorSet::from_records(enroll_records)?,
            args.out.join("enroll.vec"),
        )?;
    }
    Ok(())
}

fn run_train_global(args: TrainGlobalArgs) -> Result<(), CliError> {
    let raw = read_vectors(&args.vectors)?;
    let (training_set, lda) = match args.lda_dim {
        Some(dim) => {
            let lda = fit_lda(&raw, dim)?;
            (apply_lda(&lda, &raw)?, Some(lda))
        }
        None => (raw, None),
    };
    let (model, trace) = fit_global(&training_set, args.iters)?;
    model_io::save_global(&args.out, &model, lda.as_ref())?;
    let trace_path = sibling_path(&args.out, "emtrace.csv");
    std::fs::write(&trace_path, trace.to_csv()).map_err(|e| {
        CliError::Core(Error::Io {
            path: trace_path.display().to_string(),
            source: e,
        })
    })?;
    Ok(())
}

fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

fn run_train_local(args: TrainLocalArgs) -> Result<(), CliError> {
    let (global, lda) = model_io::load_global(&args.global)?;
    let raw = read_vectors(&args.vectors)?;
    let vectors = match &lda {
        Some(lda) => apply_lda(lda, &raw)?,
        None => raw,
    };
    let trials = read_trials(&args.monitor_trials)?;
    let enroll_map = read_enroll_map(&args.monitor_enroll)?;
    let monitor = MonitorSpec {
        trials: &trials,
        vectors: &vectors,
        enroll_map: &enroll_map,
    };
    let config = LocalTrainConfig {
        learning_rate: args.lr,
        max_epochs: args.max_epochs,
        patience: args.patience,
        seed: args.seed,
        ..Default::default()
    };
    let (model, history) = train_local(&global, &vectors, &monitor, &config)?;
    model_io::save_local(&args.out, &model, &history)?;
    Ok(())
}

fn run_score(args: ScoreArgs) -> Result<(), CliError> {
    let ln_mode = LnMode::from_str(&args.ln).map_err(|e| CliError::Usage(e.to_string()))?;
    if ln_mode == LnMode::Partial && args.local.is_none() {
        return Err(CliError::Usage(
            "--ln partial requires a local model (--local)".into(),
        ));
    }
    let (global, lda) = model_io::load_global(&args.global)?;
    let (variant, local) = match &args.local {
        Some(path) => {
            let (local, _) = model_io::load_local(path)?;
            (Variant::Deplda, Some(local))
        }
        None => (Variant::Plda, None),
    };
    let config = ScorerConfig {
        variant,
        ln_mode,
        global,
        local,
        lda,
    };
    let enroll_map = read_enroll_map(&args.enroll_map)?;
    let enroll_vectors = read_vectors(&args.enroll_vectors)?;
    let test_vectors = read_vectors(&args.test_vectors)?;
    let trials = read_trials(&args.trials)?;
    let scored = score_trialset(&config, &enroll_map, &enroll_vectors, &test_vectors, &trials)?;
    let entries: Vec<_> = scored.iter().map(ScoredTrial::to_entry).collect();
    write_scores(&entries, &args.out)?;
    Ok(())
}

fn run_eer(args: EerArgs) -> Result<(), CliError> {
    let scores = read_scores(&args.scores)?;
    let trials = read_trials(&args.trials)?;
    let mut by_pair = std::collections::HashMap::new();
    for entry in &scores {
        if by_pair
            .insert((entry.enroll_id.as_str(), entry.test_id.as_str()), entry.score)
            .is_some()
        {
            return Err(CliError::Core(Error::Invalid(format!(
                "duplicate score line for ({}, {})",
                entry.enroll_id, entry.test_id
            ))));
        }
    }
    let scored = trials
        .entries
        .iter()
        .map(|t| {
            let score = by_pair
                .get(&(t.enroll_id.as_str(), t.test_id.as_str()))
                .copied()
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "no score for trial ({}, {})",
                        t.enroll_id, t.test_id
                    ))
                })?;
            Ok(ScoredTrial {
                enroll_id: t.enroll_id.clone(),
                test_id: t.test_id.clone(),
                label: t.label,
                score,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let result = compute_eer(&scored)?;
    if let Some(roc_path) = &args.roc_out {
        let (targets, nontargets): (Vec<_>, Vec<_>) =
            scored.iter().partition(|t| t.label == Label::Target);
        let points = deplda_core::roc_points(
            &targets.iter().map(|t| t.score).collect::<Vec<_>>(),
            &nontargets.iter().map(|t| t.score).collect::<Vec<_>>(),
        )?;
        let mut csv = String::from("threshold,false_alarm,miss\n");
        for p in points {
            csv.push_str(&format!("{},{},{}\n", p.threshold, p.false_alarm, p.miss));
        }
        std::fs::write(roc_path, csv).map_err(|e| {
            CliError::Core(Error::Io {
                path: roc_path.display().to_string(),
                source: e,
            })
        })?;
    }
    println!("EER {:.3}", result.eer * 100.0);
    Ok(())
}

fn run_history(args: HistoryArgs) -> Result<(), CliError> {
    let (_, history) = model_io::load_local(&args.model)?;
    print!("{}", history.to_csv());
    Ok(())
}
