use std::path::PathBuf;
use std::time::Instant;

use causal_span::corpus::load_corpus;
use causal_span::pipeline::{train, MaxSpan, ModelKind, TrainSettings};
use causal_span::tagging::Scheme;
use serde::Serialize;

use crate::{write_file, CmdResult, Failure};

pub const SEED_ENV: &str = "CAUSAL_SPAN_SEED";
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Seed precedence: flag, then config file, then `CAUSAL_SPAN_SEED`, then 42.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| Failure::Invalid(format!("{SEED_ENV}={raw:?} is not an unsigned integer"))),
        Err(_) => Ok(causal_span::pipeline::DEFAULT_SEED),
    }
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: causal_span::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: causal_span::Error| e.to_string())
}

fn parse_max_span(s: &str) -> Result<MaxSpan, String> {
    s.parse().map_err(|e: causal_span::Error| e.to_string())
}

/// Hyperparameter flags shared by `train` and `gradcheck`. Each one, when
/// given, overrides the config file.
#[derive(clap::Args, Default)]
pub struct ModelFlags {
    /// tagger or span
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ModelKind>,
    /// bio or iobes (tagger)
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// Integer or "auto" (span model)
    #[arg(long, value_parser = parse_max_span)]
    max_span: Option<MaxSpan>,
    #[arg(long)]
    span_percentile: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    width_dim: Option<usize>,
    #[arg(long)]
    buckets: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    neg_entities: Option<usize>,
    #[arg(long)]
    neg_relations: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Defaults to $CAUSAL_SPAN_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON object with any of the settings above (snake_case keys).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ModelFlags {
    pub fn settings(&self) -> Result<TrainSettings, Failure> {
        let (mut s, config_seed) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
                let value: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
                let seed = value.get("seed").and_then(serde_json::Value::as_u64);
                let settings: TrainSettings = serde_json::from_value(value)
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
                (settings, seed)
            }
            None => (TrainSettings::default(), None),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { s.$field = v; })*
            };
        }
        apply!(kind, scheme, max_span, span_percentile, dim, width_dim, buckets, window);
        apply!(neg_entities, neg_relations, epochs, lr);
        s.seed = resolve_seed(self.seed, config_seed)?;
        if !(s.lr.is_finite() && s.lr > 0.0) {
            return Err(Failure::Invalid(format!("learning rate must be positive, got {}", s.lr)));
        }
        Ok(s)
    }
}

#[derive(clap::Args)]
pub struct TrainArgs {
    /// Canonical JSONL training corpus.
    #[arg(short, long)]
    corpus: PathBuf,
    /// Where to write the model JSON.
    #[arg(short = 'o', long)]
    model_out: PathBuf,
    /// Run manifest path (default: <model-out>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    flags: ModelFlags,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    corpus: String,
    examples: usize,
    model: String,
    /// Fully resolved settings; `max_span` is an integer for span models.
    settings: &'a TrainSettings,
    seed: u64,
    final_loss: Option<f64>,
    losses: &'a [f64],
    skipped_long_spans: usize,
    wall_time_secs: f64,
}

pub fn run(args: TrainArgs) -> CmdResult {
    let started = Instant::now();
    let mut settings = args.flags.settings()?;
    let corpus = load_corpus(&args.corpus)?;
    let outcome = train(&corpus, &settings)?;
    if let Some(n) = outcome.max_span {
        settings.max_span = MaxSpan::Fixed(n);
    }
    outcome.model.save(&args.model_out)?;

    let manifest_path = args.manifest.unwrap_or_else(|| {
        let mut name = args.model_out.clone().into_os_string();
        name.push(".manifest.json");
        PathBuf::from(name)
    });
    let manifest = Manifest {
        command: "train",
        corpus: args.corpus.display().to_string(),
        examples: corpus.len(),
        model: args.model_out.display().to_string(),
        settings: &settings,
        seed: settings.seed,
        final_loss: outcome.final_loss(),
        losses: &outcome.losses,
        skipped_long_spans: outcome.skipped_long,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Invalid(e.to_string()))?;
    write_file(&manifest_path, json + "\n")?;
    match outcome.final_loss() {
        Some(loss) => eprintln!("trained {} model for {} epochs, final loss {loss:.6}", settings.kind, settings.epochs),
        None => eprintln!("saved initialized {} model (0 epochs)", settings.kind),
    }
    Ok(())
}

#[derive(clap::Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    flags: ModelFlags,
    /// Perturb the analytic gradient first (negative control).
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

impl GradcheckArgs {
    pub fn settings(&self) -> Result<TrainSettings, Failure> {
        self.flags.settings()
    }
}
