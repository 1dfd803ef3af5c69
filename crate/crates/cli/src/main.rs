use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sentaug::genmodel::{Checkpoint, CheckpointError, TrainError, Weighting};
use sentaug::pipeline::{
    augment_dataset, entropy_report, metrics, predict, read_dataset, read_embeddings, run_experiment_from_config,
    similarity_for, train_generator, vocabulary_for, AugmentedInstance, Prediction,
};
use sentaug::selection::build_training_set_with;
use sentaug::synthetic::{generate_corpus, SyntheticConfig};
use sentaug::{AspectInstance, BeamSelect, Dataset, PipelineError, RunConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(
    name = "sentaug",
    version,
    about = "Explicit sentiment augmentation for aspect-based sentiment analysis"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags that override values from the config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Flat TOML file with run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Similar aspects per input (k_c).
    #[arg(long = "k-c", global = true)]
    k_c: Option<usize>,
    /// Negative words per triplet (k_n).
    #[arg(long = "k-n", global = true)]
    k_n: Option<usize>,
    /// Beam width V.
    #[arg(long = "beam-width", global = true)]
    beam_width: Option<usize>,
    /// Candidate words per prefix z.
    #[arg(long = "top-z", global = true)]
    top_z: Option<usize>,
    #[arg(long = "max-steps", global = true)]
    max_steps: Option<usize>,
    #[arg(long = "beam-select", value_enum, global = true)]
    beam_select: Option<SelectArg>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    train: Option<PathBuf>,
    #[arg(long, global = true)]
    test: Option<PathBuf>,
    #[arg(long = "train-conllu", global = true)]
    train_conllu: Option<PathBuf>,
    #[arg(long = "test-conllu", global = true)]
    test_conllu: Option<PathBuf>,
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Output directory; without it the main artifact goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SelectArg {
    Random,
    Top,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-polarity and implicit counts of a dataset.
    Stats {
        dataset: PathBuf,
        #[arg(long)]
        conllu: Option<PathBuf>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Build generator training triplets from the train set.
    Select,
    /// Fit generator and classifier jointly; writes checkpoint.json and loss.csv.
    Train,
    /// Decode one explicit sentence per instance.
    Generate(ModelInput),
    /// Append generated sentences to the input instances.
    Augment(ModelInput),
    /// Predict with a checkpoint; writes predictions.jsonl and metrics.json.
    Evaluate(ModelInput),
    /// Average prediction entropy per subset.
    Entropy { predictions: PathBuf },
    /// Baseline versus augmented classifier on train/test.
    Experiment,
    /// Write a synthetic corpus, its embedding table and a matching config.
    Synth {
        /// TOML overrides for the corpus generator.
        #[arg(long = "synth-config")]
        synth_config: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ModelInput {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Instances to process; defaults to the configured test set.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    conllu: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("{path}: line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Pipeline(e) => match e {
                PipelineError::Config(_) | PipelineError::Io { .. } => 1,
                PipelineError::Train(TrainError::NonFinite { .. } | TrainError::NonFiniteGradient { .. }) => 3,
                _ => 2,
            },
            CliError::Checkpoint { .. } | CliError::Record { .. } | CliError::Invalid(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn resolve_config(o: &Overrides) -> Result<RunConfig, CliError> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    // Relative paths in a config file are taken relative to that file.
    if let Some(base) = o.config.as_ref().and_then(|p| p.parent()) {
        for p in [
            &mut c.train,
            &mut c.test,
            &mut c.train_conllu,
            &mut c.test_conllu,
            &mut c.embeddings,
            &mut c.out,
        ] {
            if let Some(path) = p.as_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = o.$field.clone() { c.$field = v.into(); } )* };
    }
    set!(seed, k_c, k_n, beam_width, top_z, max_steps, epochs);
    macro_rules! set_path {
        ($($field:ident),*) => { $( if let Some(v) = o.$field.clone() { c.$field = Some(v); } )* };
    }
    set_path!(train, test, train_conllu, test_conllu, embeddings, out);
    if let Some(s) = o.beam_select {
        c.beam_select = match s {
            SelectArg::Random => BeamSelect::Random,
            SelectArg::Top => BeamSelect::Top,
        };
    }
    c.validate()?;
    Ok(c)
}

/// Opens `<out>/<name>` when an output directory is set, stdout otherwise.
fn sink(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join(name);
            let f = File::create(&path).map_err(io_err(&path))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_file(dir: &Path, name: &str, body: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(io_err(&path))
}

fn write_lines<T: Serialize>(w: &mut dyn Write, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<output>"),
        source: e,
    }
}

fn load_train(c: &RunConfig) -> Result<Dataset, CliError> {
    let path = c.required("train", &c.train)?;
    Ok(read_dataset(&path, c.train_conllu.as_deref())?)
}

fn load_checkpoint(path: &Path) -> Result<(sentaug::TinyLm, sentaug::Classifier), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let wrap = |source| CliError::Checkpoint {
        path: path.to_path_buf(),
        source,
    };
    Checkpoint::from_json(&text).and_then(|c| c.restore()).map_err(wrap)
}

/// The input dataset of a model command plus every dataset whose aspects
/// feed the similarity matrix.
fn model_inputs(c: &RunConfig, m: &ModelInput) -> Result<(Dataset, Vec<Dataset>), CliError> {
    let (path, conllu) = match &m.input {
        Some(p) => (p.clone(), m.conllu.clone()),
        None => (c.required("test", &c.test)?, c.test_conllu.clone()),
    };
    let input = read_dataset(&path, conllu.as_deref())?;
    let mut pool = vec![input.clone()];
    if let Some(t) = &c.train {
        pool.push(read_dataset(t, c.train_conllu.as_deref())?);
    }
    Ok((input, pool))
}

fn augmented(
    c: &RunConfig,
    m: &ModelInput,
) -> Result<(Vec<AugmentedInstance>, Vec<sentaug::pipeline::GenerationFailure>), CliError> {
    let (lm, _) = load_checkpoint(&m.checkpoint)?;
    let (input, pool) = model_inputs(c, m)?;
    let table = read_embeddings(&c.required("embeddings", &c.embeddings)?)?;
    let sim = similarity_for(&table, pool.iter());
    Ok(augment_dataset(&input, &lm, &sim, c))
}

#[derive(Serialize)]
struct TripletRecord<'a> {
    input_id: &'a str,
    positive_id: &'a str,
    negative_id: Option<&'a str>,
    aspect: &'a [String],
    input_tokens: &'a [String],
    positive_tokens: &'a [String],
    negative_tokens: Option<&'a [String]>,
    negative_words: &'a [String],
}

#[derive(Serialize)]
struct GenerationRecord<'a> {
    id: &'a str,
    augmentation: Option<&'a [String]>,
}

/// Evaluation input lines may be plain or already augmented instances.
#[derive(Deserialize)]
#[serde(untagged)]
enum EvalLine {
    Augmented(AugmentedInstance),
    Plain(AspectInstance),
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = resolve_config(&cli.overrides)?;
    let out = c.out.as_deref();
    match &cli.command {
        Command::Stats { dataset, conllu, json } => {
            let ds = read_dataset(dataset, conllu.as_deref())?;
            let s = ds.statistics();
            let mut w = sink(out, "stats.txt")?;
            if *json {
                serde_json::to_writer_pretty(&mut w, &s).map_err(|e| stdout_err(e.into()))?;
                writeln!(w).map_err(stdout_err)?;
            } else {
                writeln!(
                    w,
                    "dataset {}\npositive {}\nnegative {}\nneutral {}\nimplicit {}\ntotal {}\n(counts are per aspect instance)",
                    ds.name,
                    s.positive,
                    s.negative,
                    s.neutral,
                    s.implicit,
                    s.total()
                )
                .map_err(stdout_err)?;
            }
            w.flush().map_err(stdout_err)?;
        }
        Command::Select => {
            let train = load_train(&c)?;
            let table = read_embeddings(&c.required("embeddings", &c.embeddings)?)?;
            let sim = similarity_for(&table, [&train]);
            let sel = build_training_set_with(&train, &c.selection(), &sim);
            let records: Vec<TripletRecord> = sel
                .triplets
                .iter()
                .map(|t| TripletRecord {
                    input_id: &t.input.id,
                    positive_id: &t.positive_target.id,
                    negative_id: t.negative_target.as_ref().map(|n| n.id.as_str()),
                    aspect: &t.aspect,
                    input_tokens: &t.input.tokens,
                    positive_tokens: &t.positive_target.tokens,
                    negative_tokens: t.negative_target.as_ref().map(|n| n.tokens.as_slice()),
                    negative_words: &t.negative_words,
                })
                .collect();
            write_lines(&mut *sink(out, "triplets.jsonl")?, &records).map_err(stdout_err)?;
            if let Some(dir) = out {
                write_lines(&mut *sink(Some(dir), "skipped.jsonl")?, &sel.skipped).map_err(stdout_err)?;
            }
            eprintln!("{} triplets, {} skipped", sel.triplets.len(), sel.skipped.len());
        }
        Command::Train => {
            let dir = c.required("out", &c.out)?;
            let train = load_train(&c)?;
            let table = read_embeddings(&c.required("embeddings", &c.embeddings)?)?;
            let mut pool = vec![train.clone()];
            if let Some(t) = &c.test {
                pool.push(read_dataset(t, c.test_conllu.as_deref())?);
            }
            let vocab = vocabulary_for(pool.iter());
            let sim = similarity_for(&table, pool.iter());
            let g = train_generator(&train, &vocab, &sim, &c, Weighting::Syntax)?;
            let ckpt = Checkpoint::new(&g.lm, &g.classifier)
                .to_json()
                .map_err(|source| CliError::Checkpoint {
                    path: dir.join("checkpoint.json"),
                    source,
                })?;
            write_file(&dir, "checkpoint.json", ckpt.as_bytes())?;
            let mut csv = Vec::new();
            g.trace.write_csv(&mut csv).map_err(stdout_err)?;
            write_file(&dir, "loss.csv", &csv)?;
            if let (Some(first), Some(last)) = (g.trace.first(), g.trace.last()) {
                eprintln!(
                    "{} triplets; loss {:.4} -> {:.4}",
                    g.selection.triplets.len(),
                    first.total,
                    last.total
                );
            }
        }
        Command::Generate(m) => {
            let (items, failures) = augmented(&c, m)?;
            let records: Vec<GenerationRecord> = items
                .iter()
                .map(|a| GenerationRecord {
                    id: &a.base.id,
                    augmentation: a.augmentation.as_deref(),
                })
                .collect();
            write_lines(&mut *sink(out, "generations.jsonl")?, &records).map_err(stdout_err)?;
            eprintln!("{} generated, {} failed", items.len() - failures.len(), failures.len());
        }
        Command::Augment(m) => {
            let (items, failures) = augmented(&c, m)?;
            write_lines(&mut *sink(out, "augmented.jsonl")?, &items).map_err(stdout_err)?;
            if let Some(dir) = out {
                write_lines(&mut *sink(Some(dir), "failures.jsonl")?, &failures).map_err(stdout_err)?;
            }
            eprintln!("{} augmented, {} failed", items.len() - failures.len(), failures.len());
        }
        Command::Evaluate(m) => {
            let (lm, cls) = load_checkpoint(&m.checkpoint)?;
            let path = match &m.input {
                Some(p) => p.clone(),
                None => c.required("test", &c.test)?,
            };
            let items: Vec<AugmentedInstance> = read_jsonl::<EvalLine>(&path)?
                .into_iter()
                .map(|l| match l {
                    EvalLine::Augmented(a) => a,
                    EvalLine::Plain(i) => AugmentedInstance::new(i, None),
                })
                .collect();
            for a in &items {
                a.base
                    .validate()
                    .map_err(|(f, msg)| CliError::Invalid(format!("{}: {f}: {msg}", a.base.id)))?;
            }
            let preds = predict(&lm, &cls, &items);
            let m = metrics(&preds);
            match out {
                Some(dir) => {
                    write_lines(&mut *sink(Some(dir), "predictions.jsonl")?, &preds).map_err(stdout_err)?;
                    let body = serde_json::to_vec_pretty(&m).map_err(|e| stdout_err(e.into()))?;
                    write_file(dir, "metrics.json", &body)?;
                }
                None => {
                    let mut w = sink(None, "")?;
                    serde_json::to_writer_pretty(&mut w, &m).map_err(|e| stdout_err(e.into()))?;
                    writeln!(w).map_err(stdout_err)?;
                }
            }
        }
        Command::Entropy { predictions } => {
            let preds: Vec<Prediction> = read_jsonl(predictions)?;
            if preds.is_empty() {
                return Err(PipelineError::EmptyPredictions.into());
            }
            for p in &preds {
                let sum: f64 = p.probs.iter().sum();
                if p.probs.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (sum - 1.0).abs() > 1e-6 {
                    return Err(CliError::Invalid(format!(
                        "{}: probabilities {:?} are not a distribution",
                        p.id, p.probs
                    )));
                }
            }
            let report = entropy_report(&preds);
            let mut w = sink(out, "entropy.json")?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(|e| stdout_err(e.into()))?;
            writeln!(w).map_err(stdout_err)?;
            w.flush().map_err(stdout_err)?;
        }
        Command::Experiment => {
            let report = run_experiment_from_config(&c)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| stdout_err(e.into()))?;
            match out {
                Some(dir) => {
                    write_file(dir, "metrics.json", json.as_bytes())?;
                    write_file(dir, "report.txt", report.table().as_bytes())?;
                    print!("{}", report.table());
                }
                None => println!("{json}"),
            }
        }
        Command::Synth { synth_config } => {
            let dir = c.required("out", &c.out)?;
            let mut cfg = match synth_config {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(io_err(p))?;
                    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
                }
                None => SyntheticConfig::default(),
            };
            if let Some(seed) = cli.overrides.seed {
                cfg.seed = seed;
            }
            let corpus = generate_corpus(&cfg);
            let mut buf = Vec::new();
            corpus.train.write_jsonl(&mut buf).map_err(stdout_err)?;
            write_file(&dir, "train.jsonl", &buf)?;
            buf.clear();
            corpus.test.write_jsonl(&mut buf).map_err(stdout_err)?;
            write_file(&dir, "test.jsonl", &buf)?;
            buf.clear();
            corpus.write_embeddings(&mut buf).map_err(stdout_err)?;
            write_file(&dir, "embeddings.txt", &buf)?;
            let run = RunConfig {
                seed: cfg.seed,
                train: Some("train.jsonl".into()),
                test: Some("test.jsonl".into()),
                embeddings: Some("embeddings.txt".into()),
                out: None,
                ..c.clone()
            };
            let text = toml::to_string(&run).map_err(|e| CliError::Usage(e.to_string()))?;
            write_file(&dir, "config.toml", text.as_bytes())?;
            eprintln!(
                "{} train and {} test instances in {}",
                corpus.train.len(),
                corpus.test.len(),
                dir.display()
            );
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
            ExitCode::from(e.exit_code())
        }
    }
}
