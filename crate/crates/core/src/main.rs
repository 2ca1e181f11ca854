use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use depdetect::config::RunConfig;
use depdetect::corpus::{self, Corpus, RawTweet};
use depdetect::eval::Report;
use depdetect::pipeline::{self, TrainedPipeline};
use depdetect::profiler;

#[derive(Parser, Debug)]
#[command(name = "depdetect", version, about = "Depression detection over tweets")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random step (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` config override; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Merge three annotator label files into a corpus, or validate a
    /// labeled corpus when no annotation files are given.
    Ingest {
        /// `id,text` tweets, or `id,text,label` when used alone.
        tweets: PathBuf,
        /// Three `id,label` annotation files.
        annotations: Vec<PathBuf>,
    },
    /// Write a synthetic labeled corpus.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
    },
    /// Train a model and save it as a `.ddm` artifact.
    Train {
        /// Labeled `id,text,label` corpus.
        corpus: PathBuf,
        /// mnb, svm, rf or lstm (overrides the config).
        #[arg(long)]
        model: Option<String>,
        /// auto, binary, count, tfidf, w2v, d2v or sequence.
        #[arg(long)]
        features: Option<String>,
        /// Also write the held-out split as a corpus CSV.
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
    /// Evaluate one or more trained models on a labeled corpus.
    Evaluate {
        /// Labeled `id,text,label` corpus.
        corpus: PathBuf,
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
    },
    /// Label single texts or an `id,text` CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Flag a user whose share of depressive tweets exceeds the threshold.
    /// Exits with 2 when flagged.
    Profile {
        #[arg(long)]
        model: PathBuf,
        /// `id,text` CSV holding one user's tweets.
        input: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        /// User name for the summary; defaults to the file stem.
        #[arg(long)]
        user: Option<String>,
        /// Write per-tweet predictions here.
        #[arg(long)]
        per_tweet: Option<PathBuf>,
    },
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn log(msg: &str) {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    eprintln!("[{}.{:03}] {msg}", now.as_secs(), now.subsec_millis());
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?))
}

fn require_out(out: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    out.clone().ok_or_else(|| format!("{what} needs --out").into())
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for s in &cli.set {
        cfg.apply_override(s)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_model(path: &Path) -> Result<TrainedPipeline> {
    TrainedPipeline::load_file(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn print_counts(c: &Corpus) {
    let counts = c.class_counts();
    println!("tweets={} depressive={} non_depressive={}", counts.total(), counts.depressive, counts.non_depressive);
}

fn ingest(cli: &Cli, tweets: &Path, annotations: &[PathBuf]) -> Result<()> {
    let out = require_out(&cli.out, "ingest")?;
    let corpus = match annotations.len() {
        0 => corpus::load_csv(open(tweets)?).map_err(|e| format!("{}: {e}", tweets.display()))?,
        3 => {
            let raw = corpus::load_raw_csv(open(tweets)?).map_err(|e| format!("{}: {e}", tweets.display()))?;
            let votes = annotations
                .iter()
                .map(|p| corpus::load_annotations(open(p)?).map_err(|e| format!("{}: {e}", p.display()).into()))
                .collect::<Result<Vec<_>>>()?;
            corpus::merge_annotations(&raw, &votes)?
        }
        n => return Err(format!("ingest takes exactly 3 annotation files (or none), got {n}").into()),
    };
    corpus::write_csv(&corpus, create(&out)?)?;
    print_counts(&corpus);
    Ok(())
}

fn synth(cli: &Cli, n: usize, noise: f64) -> Result<()> {
    let out = require_out(&cli.out, "synth")?;
    let cfg = run_config(cli)?;
    let c = corpus::synth_corpus(n, noise, cfg.seed)?;
    corpus::write_csv(&c, create(&out)?)?;
    print_counts(&c);
    Ok(())
}

fn train(cli: &Cli, path: &Path, model: &Option<String>, features: &Option<String>, test_out: &Option<PathBuf>) -> Result<()> {
    let out = require_out(&cli.out, "train")?;
    let mut cfg = run_config(cli)?;
    if let Some(m) = model {
        cfg.set("model", m)?;
    }
    if let Some(f) = features {
        cfg.set("features", f)?;
    }
    cfg.validate()?;
    let corpus = corpus::load_csv(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let (lexicons, custom) = pipeline::load_lexicons(&cfg)?;
    let resolved = cfg.resolved();
    log(&format!("training {} on {} features, {} tweets", resolved.model.as_str(), resolved.features.as_str(), corpus.len()));
    let outcome = pipeline::train(&corpus, &cfg, lexicons, custom)?;
    for (i, l) in outcome.log.embedding_loss.iter().enumerate() {
        log(&format!("embedding epoch {} loss {l:.6}", i + 1));
    }
    for (i, l) in outcome.log.classifier_loss.iter().enumerate() {
        log(&format!("classifier epoch {i} loss {l:.6}"));
    }
    let bytes = outcome.pipeline.save_file(&out)?;
    if let Some(t) = test_out {
        corpus::write_csv(&outcome.split.test, create(t)?)?;
    }
    let acc = depdetect::eval::metrics(&outcome.held_out).accuracy;
    log(&format!("held-out accuracy {acc:.4}, wrote {bytes} bytes to {}", out.display()));
    println!(
        "model={} features={} train={} test={} held_out_accuracy={acc:.4} config_sha256={}",
        resolved.model.as_str(),
        resolved.features.as_str(),
        outcome.split.train.len(),
        outcome.split.test.len(),
        outcome.pipeline.config_hash()
    );
    Ok(())
}

fn evaluate(cli: &Cli, path: &Path, models: &[PathBuf]) -> Result<()> {
    let corpus = corpus::load_csv(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    if corpus.is_empty() {
        return Err(depdetect::eval::EvalError::Empty.into());
    }
    let mut report = Report::default();
    let mut grids = Vec::new();
    for m in models {
        let p = load_model(m)?;
        let ev = p.evaluate(&corpus)?;
        if ev.oov_rate > 0.5 {
            eprintln!("warning: {:.0}% of test tokens are outside the vocabulary of {}", 100.0 * ev.oov_rate, m.display());
        }
        let name = p.kind().display_name();
        report.push(name, ev.metrics)?;
        grids.push((name, ev.confusion));
    }
    let csv = report.to_csv()?;
    print!("{}", report.to_table()?);
    for (name, cm) in grids {
        println!("\n{name}");
        print!("{}", cm.render_grid());
    }
    match &cli.out {
        Some(out) => create(out)?.write_all(csv.as_bytes())?,
        None => print!("\n{csv}"),
    }
    Ok(())
}

fn predict(cli: &Cli, model: &Path, text: &Option<String>, input: &Option<PathBuf>) -> Result<()> {
    let p = load_model(model)?;
    let rows: Vec<RawTweet> = match (text, input) {
        (Some(t), None) => vec![RawTweet { id: "text".into(), text: t.clone() }],
        (None, Some(path)) => corpus::load_raw_csv(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?,
        _ => return Err("predict needs --text or --input".into()),
    };
    let texts: Vec<&str> = rows.iter().map(|r| r.text.as_str()).collect();
    let preds = p.predict_batch(&texts);
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(out) => Box::new(create(out)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(&mut sink);
    w.write_record(["id", "label", "score"])?;
    for (r, pr) in rows.iter().zip(preds) {
        w.write_record([r.id.as_str(), pr.label.as_str(), &format!("{:.6}", pr.score)])?;
    }
    w.flush()?;
    Ok(())
}

fn profile(cli: &Cli, model: &Path, input: &Path, threshold: Option<f64>, user: &Option<String>, per_tweet: &Option<PathBuf>) -> Result<bool> {
    let cfg = run_config(cli)?;
    let threshold = threshold.unwrap_or(cfg.threshold);
    let p = load_model(model)?;
    let rows = corpus::load_raw_csv(open(input)?).map_err(|e| format!("{}: {e}", input.display()))?;
    let user = user.clone().unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let texts: Vec<&str> = rows.iter().map(|r| r.text.as_str()).collect();
    let preds = p.predict_batch(&texts);
    let labels: Vec<_> = preds.iter().map(|p| p.label).collect();
    let result = profiler::profile_from_labels(&user, &labels, threshold)?;
    if let Some(path) = per_tweet {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["id", "label", "score"])?;
        for (r, pr) in rows.iter().zip(&preds) {
            w.write_record([r.id.as_str(), pr.label.as_str(), &format!("{:.6}", pr.score)])?;
        }
        w.flush()?;
    }
    println!("{}", result.summary_line());
    Ok(result.flagged)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Ingest { tweets, annotations } => ingest(cli, tweets, annotations)?,
        Command::Synth { n, noise } => synth(cli, *n, *noise)?,
        Command::Train { corpus, model, features, test_out } => train(cli, corpus, model, features, test_out)?,
        Command::Evaluate { corpus, models } => evaluate(cli, corpus, models)?,
        Command::Predict { model, text, input } => predict(cli, model, text, input)?,
        Command::Profile { model, input, threshold, user, per_tweet } => {
            return profile(cli, model, input, *threshold, user, per_tweet)
        }
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
