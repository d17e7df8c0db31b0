//! The `fhash` command line: generate / train / predict / evaluate / verify
//! / cf-sweep.
//!
//! Exit codes: 0 success, 1 usage or I/O error (or training divergence),
//! 2 a verification check failed, 3 a verification precondition failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cfsketch::{frobenius_error_sweep, sweep_csv, FactorMatrix};
use crate::corpus::{
    consensus_label, disagrees, generate, read_corpus, time_split, user_id, write_corpus,
    GeneratorConfig, TRAIN_FRACTION,
};
use crate::error::{Error, Result};
use crate::hashcore::{HashConfig, MAX_BITS, MIN_BITS};
use crate::learner::{
    evaluate, load_model, save_model, score_hashed, train, training_counts,
    EvalReport, FeatureOptions, Scored, TrainOptions, DEFAULT_FP_RATE, DEFAULT_LR0,
};
use crate::verify::{default_suite, run_suite, Runner, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fhash", version, about = "Feature hashing, hashed multitask SGD and hashing-bound checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic multi-user spam corpus.
    Generate(GenerateArgs),
    /// Train a hashed model on a corpus (in timestamp order).
    Train(TrainArgs),
    /// Score emails with a trained model.
    Predict(PredictArgs),
    /// Report uncaught spam at a fixed not-spam false-positive rate.
    Evaluate(EvaluateArgs),
    /// Run a suite of Monte Carlo checks of the hashing tail bounds.
    Verify(VerifyArgs),
    /// Sweep the Frobenius error of hashed factor sketches over table sizes.
    CfSweep(CfSweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output corpus (gzip if the name ends in .gz).
    #[arg(long)]
    pub out: PathBuf,
    /// Also split by time and write the first 10/14 of the time range here.
    #[arg(long, requires = "test_out")]
    pub train_out: Option<PathBuf>,
    /// Remaining 4/14 of the time range.
    #[arg(long, requires = "train_out")]
    pub test_out: Option<PathBuf>,
    /// Write every (user, borderline topic) on which the user disagrees with
    /// the consensus, with the user's label, as TSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Generator config as JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of users [default: 10000].
    #[arg(long)]
    pub n_users: Option<usize>,
    /// Number of emails [default: 100000].
    #[arg(long)]
    pub n_emails: Option<usize>,
    /// Vocabulary size [default: 50000].
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Probability that a non-borderline email is spam [default: 0.5].
    #[arg(long)]
    pub spam_prior: Option<f64>,
    /// Zipf exponent of user activity [default: 1.1].
    #[arg(long)]
    pub zipf_exponent: Option<f64>,
    /// Per-user, per-borderline-topic probability of disagreeing with the
    /// consensus label, in [0, 1) [default: 0.3].
    #[arg(long)]
    pub disagreement_rate: Option<f64>,
    /// Generator seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Feature options shared by train, predict and evaluate. A model file does
/// not record them, so predict and evaluate must repeat the training flags.
#[derive(Debug, Clone, Copy, Args)]
pub struct FeatureArgs {
    /// Add a user-specific copy of every token.
    #[arg(long)]
    pub personalized: bool,
    /// Token presence instead of term frequency.
    #[arg(long)]
    pub binary: bool,
    /// Leave out the global bias token.
    #[arg(long)]
    pub no_bias: bool,
}

impl FeatureArgs {
    pub fn options(&self) -> FeatureOptions {
        FeatureOptions {
            personalized: self.personalized,
            binary: self.binary,
            bias: !self.no_bias,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// log2 of the number of hash buckets.
    #[arg(long, value_parser = clap::value_parser!(u32).range(MIN_BITS as i64..=MAX_BITS as i64))]
    pub bits: u32,
    /// Training corpus; emails are visited in timestamp order.
    #[arg(long)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Initial learning rate; step t uses lr0 / sqrt(t).
    #[arg(long, default_value_t = DEFAULT_LR0)]
    pub lr0: f64,
    /// Passes over the training corpus.
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    /// Bucket-hash seed (the sign seed is derived from it).
    #[arg(long, default_value_t = 0)]
    pub seed: u32,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by train.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus of emails to score.
    #[arg(long)]
    pub input: PathBuf,
    /// TSV of user, label, score (and decision); stdout if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Add a spam/ham decision column: spam iff score > threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file written by train.
    #[arg(long)]
    pub model: PathBuf,
    /// Test corpus; its not-spam emails calibrate the threshold.
    #[arg(long)]
    pub test: PathBuf,
    /// Not-spam false-positive rate the threshold is calibrated to.
    #[arg(long, default_value_t = DEFAULT_FP_RATE)]
    pub fp_rate: f64,
    /// Earlier evaluate report to compute uncaught-spam ratios against.
    #[arg(long)]
    pub baseline_report: Option<PathBuf>,
    /// Require ratios against --baseline-report.
    #[arg(long)]
    pub ratio: bool,
    /// Break results down by users' training-email counts ([0], [1], [2,3], ...).
    #[arg(long, requires = "train")]
    pub buckets: bool,
    /// Training corpus, used to count each user's training emails.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// JSON report; printed to stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table of the per-bucket results.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite config (JSON), or `default` for the built-in suite.
    #[arg(long)]
    pub suite: String,
    /// JSON report to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CfSweepArgs {
    /// Factor U as TSV triples (row, col, value).
    #[arg(long, requires = "w", conflicts_with = "random_rank")]
    pub u: Option<PathBuf>,
    /// Factor W as TSV triples; same row count as U.
    #[arg(long, requires = "u")]
    pub w: Option<PathBuf>,
    /// Use Gaussian factors of this inner dimension instead of files.
    #[arg(long, requires = "size")]
    pub random_rank: Option<usize>,
    /// Columns of each random factor (M is size x size).
    #[arg(long)]
    pub size: Option<usize>,
    /// Comma-separated table sizes (log2).
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 6, 8, 10])]
    pub bits: Vec<u32>,
    /// Hash seed pairs per table size.
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    /// First trial seed (and the seed of random factors).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::CfSweep(a) => cmd_cf_sweep(a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
                _ => Ok(()),
            }
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<i32> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)?
        }
        None => GeneratorConfig::default(),
    };
    macro_rules! override_field {
        ($($f:ident),*) => { $(if let Some(v) = a.$f { cfg.$f = v; })* };
    }
    override_field!(n_users, n_emails, vocab_size, spam_prior, zipf_exponent, disagreement_rate, seed);
    let emails = generate(&cfg)?;
    let lines: Vec<_> = emails.iter().map(|e| e.line.clone()).collect();
    write_corpus(&a.out, &lines)?;
    println!("wrote {} emails from {} users to {}", lines.len(), cfg.n_users, a.out.display());
    if let (Some(train_out), Some(test_out)) = (&a.train_out, &a.test_out) {
        let split = time_split(lines, TRAIN_FRACTION)?;
        write_corpus(train_out, &split.train)?;
        write_corpus(test_out, &split.test)?;
        println!("split at t = {}: {} train, {} test", split.cutoff, split.train.len(), split.test.len());
    }
    if let Some(path) = &a.truth {
        let mut out = String::from("user\ttopic\tconsensus\tuser_label\n");
        for rank in 0..cfg.n_users {
            for k in 0..cfg.topics {
                if disagrees(&cfg, rank, k) {
                    let c = consensus_label(k);
                    let _ = writeln!(out, "{}\t{k}\t{c}\t{}", user_id(rank), c.flipped());
                }
            }
        }
        write_text(path, &out)?;
    }
    Ok(EXIT_OK)
}

fn cmd_train(a: TrainArgs) -> Result<i32> {
    let start = Instant::now();
    let examples = read_corpus(&a.input)?;
    let cfg = HashConfig::new(a.bits, a.seed)?;
    let opts = TrainOptions {
        features: a.features.options(),
        lr0: a.lr0,
        epochs: a.epochs,
    };
    let model = train(&examples, cfg, &opts)?;
    save_model(&model, &a.output)?;
    println!("examples seen: {}", model.examples_seen());
    println!("nonzero buckets: {} of {}", model.nonzero_buckets(), cfg.m());
    println!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    Ok(EXIT_OK)
}

fn cmd_predict(a: PredictArgs) -> Result<i32> {
    let model = load_model(&a.model)?;
    let examples = read_corpus(&a.input)?;
    let scored = score_hashed(&model, &examples, a.features.options())?;
    let mut out = String::new();
    for s in &scored {
        let _ = write!(out, "{}\t{}\t{:?}", s.user, s.label, s.score);
        if let Some(t) = a.threshold {
            let _ = write!(out, "\t{}", if s.score > t { "spam" } else { "ham" });
        }
        out.push('\n');
    }
    emit(a.output.as_deref(), &out)?;
    Ok(EXIT_OK)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<i32> {
    if a.ratio && a.baseline_report.is_none() {
        return Err(Error::input("--ratio needs --baseline-report"));
    }
    let model = load_model(&a.model)?;
    let test = read_corpus(&a.test)?;
    let scored: Vec<Scored> = score_hashed(&model, &test, a.features.options())?;
    let mut report = match (&a.train, a.buckets) {
        (Some(p), true) => evaluate(&scored, &training_counts(&read_corpus(p)?), a.fp_rate)?,
        _ => {
            let mut r = evaluate(&scored, &Default::default(), a.fp_rate)?;
            r.buckets.clear();
            r
        }
    };
    if let Some(base) = &a.baseline_report {
        report.compare_to(&EvalReport::load(base)?);
    }
    emit(a.out.as_deref(), &report.to_json()?)?;
    if let Some(t) = &a.table {
        write_text(t, &report.to_csv())?;
    }
    if a.out.is_some() {
        eprint!("{}", report.to_csv());
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let cfg = if a.suite == "default" {
        default_suite()
    } else {
        SuiteConfig::load(Path::new(&a.suite))?
    };
    let report = run_suite(&cfg, &Runner::new(a.jobs)?);
    report.write(&a.out)?;
    for r in &report.reports {
        println!("{:<32} {:?}", r.name, r.status);
    }
    Ok(if report.any_precondition_failure() {
        EXIT_PRECONDITION
    } else if !report.all_pass() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_cf_sweep(a: CfSweepArgs) -> Result<i32> {
    let (u, w) = match (&a.u, &a.w, a.random_rank, a.size) {
        (Some(u), Some(w), _, _) => (FactorMatrix::read_triples(u)?, FactorMatrix::read_triples(w)?),
        (_, _, Some(rank), Some(size)) => (
            FactorMatrix::gaussian(rank, size, a.seed),
            FactorMatrix::gaussian(rank, size, a.seed.wrapping_add(1)),
        ),
        _ => return Err(Error::input("give --u and --w, or --random-rank and --size")),
    };
    let rows = frobenius_error_sweep(&u, &w, &a.bits, a.trials, a.seed)?;
    emit(a.out.as_deref(), &sweep_csv(&rows))?;
    Ok(EXIT_OK)
}
