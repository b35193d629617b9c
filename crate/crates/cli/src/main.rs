use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causal_span::corpus::{
    compute_stats, convert_records, default_connectives, histogram_csv, load_connectives,
    load_corpus, load_corpus_with, load_freq_table, read_char_offset_records, save_corpus,
    split_corpus, LoadOptions,
};
use causal_span::eval::{emit_report, evaluate_corpus, read_predictions, save_predictions, ReportFormat};
use causal_span::pipeline::{gradient_check, predict_corpus, AnyModel};
use clap::{Parser, Subcommand, ValueEnum};

mod train;

use train::{GradcheckArgs, TrainArgs};

#[derive(Parser)]
#[command(name = "causal-span", version, about = "Cause and effect span extraction toolkit")]
struct Cli {
    /// Log more (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an annotated corpus to canonical token JSONL.
    Convert(ConvertArgs),
    /// Corpus statistics and span-length histograms.
    Stats(StatsArgs),
    /// Shuffle and split a corpus into train/dev/test files.
    Split(SplitArgs),
    /// Train a tagger or span model.
    Train(TrainArgs),
    /// Write predictions for every example of a corpus.
    Predict(PredictArgs),
    /// Score predictions against a gold corpus.
    Eval(EvalArgs),
    /// Compare analytic and numeric gradients of a fresh model.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// JSONL with raw text and character-offset spans.
    CharOffsets,
    /// Canonical token JSONL; invalid records are dropped.
    Canonical,
}

#[derive(clap::Args)]
struct ConvertArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "char-offsets")]
    format: InputFormat,
    /// Keep relations whose cause and effect share tokens.
    #[arg(long)]
    allow_overlap: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Text,
    Json,
}

#[derive(clap::Args)]
struct StatsArgs {
    corpus: PathBuf,
    /// One connective per line; multi-word connectives are space separated.
    #[arg(long)]
    connectives: Option<PathBuf>,
    /// Lines of "token count".
    #[arg(long)]
    freq_table: Option<PathBuf>,
    /// Write stats.json and the length histograms here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: StatsFormat,
}

#[derive(clap::Args)]
struct SplitArgs {
    corpus: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Train, dev and test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.1, 0.1])]
    ratios: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct PredictArgs {
    #[arg(short, long)]
    model: PathBuf,
    #[arg(short, long)]
    corpus: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// text, json or csv
    #[arg(long, default_value = "text")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Why a command failed, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1: a check ran and did not pass.
    Check(String),
    /// Exit 2: reading or writing a file failed.
    Io(String),
    /// Exit 3: an input was malformed or inconsistent.
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Io(_) => 2,
            Failure::Invalid(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Io(m) | Failure::Invalid(m) => m,
        }
    }
}

impl From<causal_span::Error> for Failure {
    fn from(e: causal_span::Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Io(e.to_string())
        }
    }
}

pub type CmdResult = Result<(), Failure>;

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path).map_err(|e| Failure::Io(format!("cannot create {}: {e}", path.display())))
}

fn print(text: &str) -> CmdResult {
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Io(format!("stdout: {e}")))
}

fn convert(args: ConvertArgs) -> CmdResult {
    let (examples, skipped) = match args.format {
        InputFormat::CharOffsets => {
            let records = read_char_offset_records(&args.input)?;
            let conversion = convert_records(&records, args.allow_overlap);
            (conversion.examples, conversion.skipped)
        }
        InputFormat::Canonical => {
            let options = LoadOptions {
                allow_overlap: args.allow_overlap,
                skip_invalid: true,
            };
            let loaded = load_corpus_with(&args.input, options)?;
            (loaded.examples, loaded.skipped)
        }
    };
    for s in &skipped {
        log::warn!("record {}: {}", s.line, s.reason);
    }
    save_corpus(&examples, &args.output)?;
    eprintln!("converted: {}", examples.len());
    eprintln!("skipped: {}", skipped.len());
    Ok(())
}

fn stats(args: StatsArgs) -> CmdResult {
    let examples = load_corpus(&args.corpus)?;
    let connectives = match &args.connectives {
        Some(path) => load_connectives(path)?,
        None => default_connectives(),
    };
    let freq = args.freq_table.as_ref().map(load_freq_table).transpose()?;
    let stats = compute_stats(&examples, &connectives, freq.as_ref());
    let json = serde_json::to_string_pretty(&stats).map_err(|e| Failure::Invalid(e.to_string()))? + "\n";

    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        write_file(&dir.join("stats.json"), &json)?;
        for (name, role) in [("cause", &stats.cause), ("effect", &stats.effect), ("all", &stats.all)] {
            write_file(&dir.join(format!("{name}_lengths.csv")), histogram_csv(&role.histogram))?;
        }
    }
    match args.format {
        StatsFormat::Json => print(&json),
        StatsFormat::Text => {
            let mut out = format!(
                "examples: {}\ncausal: {}\nnon_causal: {}\n",
                stats.examples, stats.causal, stats.non_causal
            );
            for (name, role) in [("cause", &stats.cause), ("effect", &stats.effect), ("all", &stats.all)] {
                let pct: Vec<String> = role.percentiles.iter().map(|(k, v)| format!("{k}={v}")).collect();
                out += &format!("{name}_spans: {} {}\n", role.spans, pct.join(" "));
            }
            out += &format!("connective_coverage: {:.4}\n", stats.connective_coverage);
            if let Some(f) = stats.avg_span_frequency {
                out += &format!("avg_span_frequency: {f:.4}\n");
            }
            print(&out)
        }
    }
}

fn split(args: SplitArgs) -> CmdResult {
    let examples = load_corpus(&args.corpus)?;
    let seed = train::resolve_seed(args.seed, None)?;
    let &[train, dev, test] = args.ratios.as_slice() else {
        return Err(Failure::Invalid(format!("--ratios needs 3 values, got {}", args.ratios.len())));
    };
    let ratios = (train, dev, test);
    let parts = split_corpus(&examples, ratios, seed)?;
    create_dir(&args.out_dir)?;
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        save_corpus(part, args.out_dir.join(format!("{name}.jsonl")))?;
    }
    let (tr, dv, te) = parts.sizes();
    eprintln!("train: {tr} dev: {dv} test: {te}");
    Ok(())
}

fn predict(args: PredictArgs) -> CmdResult {
    let model = AnyModel::load(&args.model)?;
    let examples = load_corpus(&args.corpus)?;
    let records = predict_corpus(&model, &examples);
    save_predictions(&records, &args.output)?;
    eprintln!("predicted: {} ({} model)", records.len(), model.kind());
    Ok(())
}

fn eval(args: EvalArgs) -> CmdResult {
    let format: ReportFormat = args.format.parse()?;
    let gold = load_corpus(&args.gold)?;
    let predictions = read_predictions(&args.predictions)?;
    let report = evaluate_corpus(&gold, &predictions)?;
    let text = emit_report(&report, format)?;
    match &args.output {
        Some(path) => write_file(path, text),
        None => print(&text),
    }
}

fn gradcheck(args: GradcheckArgs) -> CmdResult {
    let settings = args.settings()?;
    let report = gradient_check(&settings, args.corrupt)?;
    let verdict = report.max_rel_error < train::GRADCHECK_TOLERANCE;
    println!(
        "{} gradcheck: max relative error {:.3e} over {} coordinates ({} skipped at max-pool ties)",
        settings.kind, report.max_rel_error, report.checked, report.skipped
    );
    if let Some((name, index, analytic, numeric)) = &report.worst {
        println!("worst: {name}[{index}] analytic {analytic:.6e} numeric {numeric:.6e}");
    }
    if verdict {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "FAIL: {:.3e} is not below {:e}",
            report.max_rel_error,
            train::GRADCHECK_TOLERANCE
        )))
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Convert(a) => convert(a),
        Command::Stats(a) => stats(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train::run(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => gradcheck(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
