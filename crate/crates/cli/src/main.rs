use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use factsum_core::contrastor::{max_gradient_error, nt_xent, EntityBank, RepresentationVector};
use factsum_core::corpus::read_corpus;
use factsum_core::pipeline::{harvest_bank, CARRIED_KEYS, OnError, Pipeline, PipelineConfig, Stage, StatsTable};
use factsum_core::{CorrectionStrategy, NegativeMode, PipelineError, ReadOptions, RougeVariant, ScorerBinding};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_REMOTE: u8 = 3;

#[derive(Parser)]
#[command(name = "factsum", version, about = "Factuality-aware corpus transformations for summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every record against the corpus schema.
    Validate(InputArgs),
    /// Print corpus counts as TSV.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// Print JSON instead of TSV.
        #[arg(long)]
        json: bool,
    },
    /// Build pseudo-summary pre-training examples from documents.
    PretrainData {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Correct hallucinated entities in reference summaries.
    Correct {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value = "combined")]
        strategy: CorrectionStrategy,
        /// Emit detection TSV (doc_id, mention, status, replacement) instead.
        #[arg(long)]
        report: bool,
    },
    /// Generate entity-swap negative summaries.
    Negatives {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        negatives: NegativeArgs,
    },
    /// Insert the mask token in front of a document sentence.
    Connect {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        connector: ConnectorArgs,
    },
    /// Evaluate NT-Xent and its gradient check on vectors from a JSON file.
    LossCheck {
        file: PathBuf,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
    },
    /// Run the stages listed in a configuration file.
    Run {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated stage list overriding the config.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Input corpus; stdin when omitted.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Ignore unknown keys.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct IoArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, env = "FACTSUM_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    on_error: Option<OnError>,
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long)]
    variant: Option<RougeVariant>,
    #[arg(long)]
    candidate_pool: Option<usize>,
    #[arg(long)]
    mask_token: Option<String>,
    /// Fail on single-sentence documents instead of skipping them.
    #[arg(long)]
    keep_short: bool,
}

#[derive(Args)]
struct ScorerArgs {
    /// Base URL of a remote consistency scorer; the entity heuristic otherwise.
    #[arg(long)]
    scorer_endpoint: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 4)]
    max_concurrent: usize,
}

#[derive(Args)]
struct NegativeArgs {
    #[arg(long, default_value = "intrinsic")]
    mode: NegativeMode,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// Corpus for the extrinsic entity bank; the input corpus otherwise.
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args)]
struct ConnectorArgs {
    #[arg(long, default_value_t = 1)]
    position: usize,
    #[arg(long)]
    mask_token: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Remote(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Remote(_) => EXIT_REMOTE,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Remote(e) => e,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_remote() {
            Failure::Remote(e.into())
        } else if matches!(e, PipelineError::Config(_)) {
            Failure::Usage(e.into())
        } else {
            Failure::Data(e.into())
        }
    }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Validate(input) => validate(&input),
        Command::Stats { input, json } => print_stats(&input, json),
        Command::PretrainData { io, selection, scorer } => {
            let mut config = base_config(&io, vec![Stage::PretrainData]);
            if let Some(v) = selection.variant {
                config.selection.variant = v;
            }
            if let Some(p) = selection.candidate_pool {
                config.selection.candidate_pool = p;
            }
            if let Some(m) = selection.mask_token {
                config.selection.mask_token = m.clone();
                config.connector.mask_token = m;
            }
            config.selection.skip_short_docs = !selection.keep_short;
            if let Some(endpoint) = scorer.scorer_endpoint {
                config.scorer = ScorerBinding::Remote {
                    endpoint,
                    timeout_ms: scorer.timeout_ms,
                    max_concurrent: scorer.max_concurrent,
                };
            }
            run_pipeline(config, &io)
        }
        Command::Correct { io, strategy, report } => {
            let stage = if report { Stage::Detect } else { Stage::Correct };
            let mut config = base_config(&io, vec![stage]);
            config.correction = strategy;
            run_pipeline(config, &io)
        }
        Command::Negatives { io, negatives } => {
            let mut config = base_config(&io, vec![Stage::Negatives]);
            config.negatives.mode = negatives.mode;
            config.negatives.k = negatives.k;
            config.negatives.seed = Some(negatives.seed);
            config.negatives.bank = negatives.bank;
            run_pipeline(config, &io)
        }
        Command::Connect { io, connector } => {
            let mut config = base_config(&io, vec![Stage::Connect]);
            config.connector.position = connector.position;
            if let Some(m) = connector.mask_token {
                config.connector.mask_token = m.clone();
                config.selection.mask_token = m;
            }
            run_pipeline(config, &io)
        }
        Command::LossCheck { file, h } => loss_check(&file, h),
        Command::Run {
            io,
            config,
            stages,
            seed,
            bank,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(Failure::Usage)?;
            let mut config = PipelineConfig::from_json(&text)?;
            if let Some(stages) = stages {
                config.stages = stages;
            }
            if seed.is_some() {
                config.negatives.seed = seed;
            }
            if bank.is_some() {
                config.negatives.bank = bank;
            }
            apply_io_overrides(&mut config, &io);
            run_pipeline(config, &io)
        }
    }
}

fn base_config(io: &IoArgs, stages: Vec<Stage>) -> PipelineConfig {
    let mut config = PipelineConfig {
        stages,
        ..PipelineConfig::default()
    };
    apply_io_overrides(&mut config, io);
    config
}

fn apply_io_overrides(config: &mut PipelineConfig, io: &IoArgs) {
    if let Some(w) = io.workers {
        config.workers = w;
    }
    if io.input.lenient {
        config.strict_schema = false;
    }
    if let Some(policy) = io.on_error {
        config.on_error = policy;
    }
}

fn read_options(input: &InputArgs) -> ReadOptions {
    ReadOptions {
        lenient: input.lenient,
        carry: CARRIED_KEYS,
    }
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display())).map_err(Failure::Data)?,
        )),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(Failure::Data)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn validate(input: &InputArgs) -> Result<()> {
    let reader = open_input(input.input.as_deref())?;
    let (mut ok, mut bad) = (0usize, 0usize);
    for record in read_corpus(reader, read_options(input)) {
        match record {
            Ok(_) => ok += 1,
            Err(e @ factsum_core::CorpusError::Io(_)) => return Err(data(e)),
            Err(e) => {
                bad += 1;
                eprintln!("{e}");
            }
        }
    }
    println!("{ok} valid, {bad} invalid");
    if bad > 0 {
        return Err(data(anyhow::anyhow!("{bad} invalid record(s)")));
    }
    Ok(())
}

fn print_stats(input: &InputArgs, json: bool) -> Result<()> {
    let reader = open_input(input.input.as_deref())?;
    let mut table = StatsTable::default();
    for record in read_corpus(reader, read_options(input)) {
        table.add(&record.map_err(data)?);
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&table).map_err(data)?);
    } else {
        print!("{}", table.to_tsv());
    }
    Ok(())
}

fn run_pipeline(config: PipelineConfig, io: &IoArgs) -> Result<()> {
    config.validate()?;
    let input_path = io.input.input.as_deref();
    let mut buffered: Option<Vec<u8>> = None;
    let bank: Option<EntityBank> = match () {
        () if config.needs_bank() => {
            let opts = config.read_options();
            Some(match (config.negatives.bank.as_deref(), input_path) {
                (Some(p), _) | (None, Some(p)) => harvest_bank(open_input(Some(p))?, opts).map_err(data)?,
                (None, None) => {
                    let mut buf = Vec::new();
                    io::stdin().read_to_end(&mut buf).map_err(data)?;
                    let bank = harvest_bank(buf.as_slice(), opts).map_err(data)?;
                    buffered = Some(buf);
                    bank
                }
            })
        }
        () => None,
    };
    let pipeline = Pipeline::new(config, bank.as_ref())?;
    let output = open_output(io.output.as_deref())?;
    let report = match buffered {
        Some(buf) => pipeline.run(buf.as_slice(), output)?,
        None => pipeline.run(open_input(input_path)?, output)?,
    };
    eprintln!("{}", serde_json::to_string_pretty(&report).map_err(data)?);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LossInput {
    anchor: Vec<f64>,
    positive: Vec<f64>,
    negatives: Vec<Vec<f64>>,
    #[serde(default = "default_tau")]
    tau: f64,
}

fn default_tau() -> f64 {
    0.05
}

fn loss_check(file: &Path, h: f64) -> Result<()> {
    let text = fs::read_to_string(file)
        .with_context(|| format!("reading {}", file.display()))
        .map_err(Failure::Data)?;
    let input: LossInput = serde_json::from_str(&text).map_err(data)?;
    let vector = |v: Vec<f64>| RepresentationVector::new(v).map_err(data);
    let anchor = vector(input.anchor)?;
    let positive = vector(input.positive)?;
    let negatives = input.negatives.into_iter().map(vector).collect::<Result<Vec<_>>>()?;
    let loss = nt_xent(&anchor, &positive, &negatives, input.tau).map_err(data)?.loss;
    let err = max_gradient_error(&anchor, &positive, &negatives, input.tau, h).map_err(data)?;
    println!("loss\t{loss:e}");
    println!("max_gradient_error\t{err:e}");
    Ok(())
}
