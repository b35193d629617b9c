//! Whole-corpus training, prediction and gradient checking for either model
//! kind, as driven by the command-line tool.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Example, Role, TokenSpan};
use crate::error::{Error, Result};
use crate::eval::PredictionRecord;
use crate::hashing::DEFAULT_BUCKETS;
use crate::nnet::serialize::peek_kind;
use crate::nnet::{grad_check, AdamConfig, GradCheckOptions, GradCheckReport, ModelFile, Rng};
use crate::spanmodel::{
    auto_max_span, sample_training_items, select_longest, SpanModel, SpanModelConfig, SPAN_KIND,
};
use crate::taggers::{TaggerConfig, TaggerModel, TAGGER_KIND};
use crate::tagging::Scheme;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tagger,
    Span,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tagger => TAGGER_KIND,
            ModelKind::Span => SPAN_KIND,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tagger" => Ok(ModelKind::Tagger),
            "span" => Ok(ModelKind::Span),
            _ => Err(Error::Model(format!("unknown model kind {s:?}"))),
        }
    }
}

/// Maximum candidate span length: fixed, or the training-set percentile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxSpan {
    Auto,
    Fixed(usize),
}

impl FromStr for MaxSpan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(MaxSpan::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(MaxSpan::Fixed(n)),
            _ => Err(Error::Model(format!("max span must be \"auto\" or a positive integer, got {s:?}"))),
        }
    }
}

impl Serialize for MaxSpan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MaxSpan::Auto => s.serialize_str("auto"),
            MaxSpan::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for MaxSpan {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Err(serde::de::Error::custom("max span must be positive")),
            Raw::Int(n) => Ok(MaxSpan::Fixed(n)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Everything `train` needs. Fields a kind does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub kind: ModelKind,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub dim: usize,
    pub buckets: usize,
    /// Tagger only.
    pub scheme: Scheme,
    /// Tagger only.
    pub window: usize,
    /// Span model only.
    pub max_span: MaxSpan,
    /// Percentile used when `max_span` is `auto`.
    pub span_percentile: f64,
    pub width_dim: usize,
    pub neg_entities: usize,
    pub neg_relations: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let span = SpanModelConfig::default();
        TrainSettings {
            kind: ModelKind::Span,
            seed: DEFAULT_SEED,
            epochs: 40,
            lr: AdamConfig::default().lr,
            dim: span.dim,
            buckets: DEFAULT_BUCKETS,
            scheme: Scheme::Iobes,
            window: 2,
            max_span: MaxSpan::Auto,
            span_percentile: 99.0,
            width_dim: span.width_dim,
            neg_entities: span.neg_entities,
            neg_relations: span.neg_relations,
        }
    }
}

impl TrainSettings {
    pub fn tagger_config(&self) -> TaggerConfig {
        TaggerConfig {
            scheme: self.scheme,
            buckets: self.buckets,
            dim: self.dim,
            window: self.window,
        }
    }

    /// Span-model configuration with `max_span` resolved against `corpus`.
    pub fn span_config(&self, corpus: &[Example]) -> Result<SpanModelConfig> {
        let max_span = match self.max_span {
            MaxSpan::Fixed(n) => n,
            MaxSpan::Auto => auto_max_span(corpus, self.span_percentile)?,
        };
        Ok(SpanModelConfig {
            max_span,
            neg_entities: self.neg_entities,
            neg_relations: self.neg_relations,
            dim: self.dim,
            width_dim: self.width_dim,
            buckets: self.buckets,
        })
    }
}

/// Either trained model.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Tagger(TaggerModel),
    Span(SpanModel),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Tagger(_) => ModelKind::Tagger,
            AnyModel::Span(_) => ModelKind::Span,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            AnyModel::Tagger(m) => m.to_file().to_json(),
            AnyModel::Span(m) => m.to_file().to_json(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        match peek_kind(json)?.as_str() {
            TAGGER_KIND => Ok(AnyModel::Tagger(TaggerModel::from_file(serde_json::from_str::<
                ModelFile<TaggerConfig>,
            >(json)?)?)),
            SPAN_KIND => Ok(AnyModel::Span(SpanModel::from_file(serde_json::from_str::<
                ModelFile<SpanModelConfig>,
            >(json)?)?)),
            other => Err(Error::Model(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }

    /// At most one span per role. The tagger keeps the longest decoded span
    /// of each role (ties to the smallest start) and reports no relation
    /// score.
    pub fn predict(&self, example: &Example) -> PredictionRecord {
        match self {
            AnyModel::Tagger(m) => {
                let spans = m.predict(&example.tokens);
                let longest = |role: Role| -> Option<TokenSpan> {
                    select_longest(spans.iter().filter(|s| s.role == role).map(|s| s.span))
                };
                PredictionRecord {
                    id: example.id.clone(),
                    cause: longest(Role::Cause),
                    effect: longest(Role::Effect),
                    relation_score: None,
                }
            }
            AnyModel::Span(m) => {
                let out = m.predict(&example.tokens);
                PredictionRecord {
                    id: example.id.clone(),
                    cause: out.cause.map(|p| p.span),
                    effect: out.effect.map(|p| p.span),
                    relation_score: out.relation_score,
                }
            }
        }
    }
}

/// Predictions for every example, in corpus order, computed in parallel.
pub fn predict_corpus(model: &AnyModel, corpus: &[Example]) -> Vec<PredictionRecord> {
    corpus.par_iter().map(|ex| model.predict(ex)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: AnyModel,
    /// Mean loss of each epoch.
    pub losses: Vec<f64>,
    /// Resolved maximum span length (span model only).
    pub max_span: Option<usize>,
    /// Gold spans the span model could not supervise, summed over epochs.
    pub skipped_long: usize,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }
}

/// Initializes a model from `settings.seed` and trains it for
/// `settings.epochs` passes. The same settings and corpus always give the
/// same parameters.
pub fn train(corpus: &[Example], settings: &TrainSettings) -> Result<TrainOutcome> {
    let mut rng = Rng::seed_from(settings.seed);
    let adam = AdamConfig::with_lr(settings.lr);
    let mut losses = Vec::with_capacity(settings.epochs);
    match settings.kind {
        ModelKind::Tagger => {
            let mut model = TaggerModel::new(settings.tagger_config(), &mut rng)?;
            for epoch in 0..settings.epochs {
                let stats = model.train_epoch(corpus, &mut rng, &adam)?;
                log::info!("epoch {}: loss {:.6}", epoch + 1, stats.mean_loss);
                losses.push(stats.mean_loss);
            }
            Ok(TrainOutcome {
                model: AnyModel::Tagger(model),
                losses,
                max_span: None,
                skipped_long: 0,
            })
        }
        ModelKind::Span => {
            let config = settings.span_config(corpus)?;
            let max_span = config.max_span;
            let mut model = SpanModel::new(config, &mut rng)?;
            let mut skipped_long = 0;
            for epoch in 0..settings.epochs {
                let stats = model.train_epoch(corpus, &mut rng, &adam);
                log::info!("epoch {}: loss {:.6}", epoch + 1, stats.mean_loss);
                losses.push(stats.mean_loss);
                skipped_long += stats.skipped_long;
            }
            Ok(TrainOutcome {
                model: AnyModel::Span(model),
                losses,
                max_span: Some(max_span),
                skipped_long,
            })
        }
    }
}

/// The five-token sentence used by [`gradient_check`].
pub fn gradcheck_example() -> Example {
    let tokens = ["storms", "caused", "widespread", "power", "outages"];
    Example::new("gradcheck", tokens.iter().map(|t| t.to_string()).collect(), "fixture")
        .with_relation(TokenSpan::new(0, 1), TokenSpan::new(2, 5))
}

/// Compares the analytic gradient of the full training loss of a freshly
/// initialized model against finite differences on [`gradcheck_example`].
/// Negative samples for the span model are drawn once from `seed`.
///
/// `corrupt` perturbs the analytic gradient before the comparison; a correct
/// checker must then report a large error.
pub fn gradient_check(settings: &TrainSettings, corrupt: bool) -> Result<GradCheckReport> {
    let example = gradcheck_example();
    let mut rng = Rng::seed_from(settings.seed);
    let options = GradCheckOptions {
        seed: settings.seed,
        ..GradCheckOptions::default()
    };
    let corrupt_grads = |params: &mut crate::nnet::ParamSet| {
        if corrupt {
            for (_, p) in params.iter_mut() {
                for g in p.grad.data_mut() {
                    *g = *g * 1.5 + 1e-3;
                }
            }
        }
    };
    match settings.kind {
        ModelKind::Tagger => {
            let mut model = TaggerModel::new(settings.tagger_config(), &mut rng)?;
            let (_, gold) = model.example_gradients(&example)?;
            corrupt_grads(model.params_mut());
            let frozen = model.clone();
            Ok(grad_check(
                model.params_mut(),
                |ps| frozen.loss_with(ps, &example.tokens, &gold),
                &options,
                |_, _| false,
            ))
        }
        ModelKind::Span => {
            let config = settings.span_config(std::slice::from_ref(&example))?;
            let mut model = SpanModel::new(config, &mut rng)?;
            let items = sample_training_items(&example, model.config(), &mut rng);
            model.accumulate_gradients(&example.tokens, &items);
            corrupt_grads(model.params_mut());
            let ties = model.near_tie_coordinates(&example.tokens, &items, options.eps);
            let frozen = model.clone();
            Ok(grad_check(
                model.params_mut(),
                |ps| frozen.loss_with(ps, &example.tokens, &items),
                &options,
                |name, i| name == "token_emb" && ties.contains(&i),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: ModelKind) -> TrainSettings {
        TrainSettings {
            kind,
            epochs: 3,
            dim: 4,
            width_dim: 2,
            buckets: 64,
            ..TrainSettings::default()
        }
    }

    #[test]
    fn settings_json() {
        let s: TrainSettings = serde_json::from_str(r#"{"kind":"tagger","max_span":6,"scheme":"bio"}"#).unwrap();
        assert_eq!(s.kind, ModelKind::Tagger);
        assert_eq!(s.max_span, MaxSpan::Fixed(6));
        assert_eq!(s.scheme, Scheme::Bio);
        assert_eq!(s.seed, 42);
        let auto: TrainSettings = serde_json::from_str(r#"{"max_span":"auto"}"#).unwrap();
        assert_eq!(auto.max_span, MaxSpan::Auto);
        assert!(serde_json::from_str::<TrainSettings>(r#"{"max_span":0}"#).is_err());
        assert!(serde_json::from_str::<TrainSettings>(r#"{"epoch":3}"#).is_err());
        let back: TrainSettings = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn gradient_checks_pass_and_corruption_fails() {
        for kind in [ModelKind::Tagger, ModelKind::Span] {
            let s = TrainSettings {
                kind,
                max_span: MaxSpan::Fixed(4),
                ..tiny(kind)
            };
            let ok = gradient_check(&s, false).unwrap();
            assert!(ok.max_rel_error < 1e-4, "{kind}: {ok:?}");
            let bad = gradient_check(&s, true).unwrap();
            assert!(bad.max_rel_error > 1e-2, "{kind}: {bad:?}");
        }
    }

    #[test]
    fn train_predict_round_trip() {
        let corpus = vec![gradcheck_example()];
        for kind in [ModelKind::Tagger, ModelKind::Span] {
            let out = train(&corpus, &tiny(kind)).unwrap();
            assert_eq!(out.losses.len(), 3);
            assert_eq!(out.max_span.is_some(), kind == ModelKind::Span);
            let json = out.model.to_json().unwrap();
            let back = AnyModel::from_json(&json).unwrap();
            assert_eq!(back.to_json().unwrap(), json);
            let preds = predict_corpus(&back, &corpus);
            assert_eq!(preds.len(), 1);
            assert_eq!(preds[0].id, "gradcheck");
        }
    }

    #[test]
    fn zero_epochs_give_the_initial_model() {
        let corpus = vec![gradcheck_example()];
        let out = train(&corpus, &TrainSettings { epochs: 0, ..tiny(ModelKind::Span) }).unwrap();
        assert_eq!(out.final_loss(), None);
        assert_eq!(out.max_span, Some(3));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = AnyModel::from_json(r#"{"version":1,"kind":"crf","config":{},"params":{}}"#);
        assert!(matches!(err, Err(Error::Model(_))));
    }
}
