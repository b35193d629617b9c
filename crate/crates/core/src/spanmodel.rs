//! Span-based extractor with a relation head.
//!
//! Every candidate span `s = [i, i+k)` with `k ≤ max_span` is embedded as
//!
//! ```text
//! e(s) = maxpool(r_i … r_{i+k-1}) ∘ w_k ∘ c
//! ```
//!
//! where `r_j = [E(t_j); E(t_j)·(1 + j/L)]` is a token's bucket embedding
//! next to a position-scaled copy (`2d` wide), `w_k` is the learned width
//! embedding for length `k`, and `c` is the sentence mean of bucket
//! embeddings, standing in for a `[CLS]` vector. A linear softmax head maps
//! `e(s)` to {cause, effect, none}.
//!
//! An ordered pair `(s1, s2)` is embedded as the two spans' pre-softmax
//! class scores followed by the max-pool of the bucket embeddings strictly
//! between them (zeros when nothing lies between), and a second softmax
//! head scores it as causal or not.
//!
//! Training draws negative spans and negative pairs per example
//! ([`sample_training_items`]); prediction keeps the longest span predicted
//! for each role ([`SpanModel::predict`]).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{percentile_length, Example, Role, TokenSpan};
use crate::error::{Error, Result};
use crate::hashing::{buckets_for, DEFAULT_BUCKETS};
use crate::nnet::{
    adam_step, add_into, embed_accumulate, glorot_uniform, linear, linear_backward, max_pool,
    softmax, softmax_xent, AdamConfig, MaxPool, ModelFile, ParamSet, Rng, Tensor,
};
use crate::taggers::argmax;

pub const SPAN_KIND: &str = "span";

const TOKEN_EMB: &str = "token_emb";
const WIDTH_EMB: &str = "width_emb";
const SPAN_W: &str = "span_w";
const SPAN_B: &str = "span_b";
const REL_W: &str = "rel_w";
const REL_B: &str = "rel_b";

/// Output size of the span head.
pub const SPAN_CLASSES: usize = 3;
const REL_CAUSAL: usize = 0;
const REL_NONE: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpanClass {
    Cause,
    Effect,
    None,
}

impl SpanClass {
    pub fn index(self) -> usize {
        match self {
            SpanClass::Cause => 0,
            SpanClass::Effect => 1,
            SpanClass::None => 2,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => SpanClass::Cause,
            1 => SpanClass::Effect,
            _ => SpanClass::None,
        }
    }

    pub fn role(self) -> Option<Role> {
        match self {
            SpanClass::Cause => Some(Role::Cause),
            SpanClass::Effect => Some(Role::Effect),
            SpanClass::None => None,
        }
    }
}

impl From<Role> for SpanClass {
    fn from(role: Role) -> Self {
        match role {
            Role::Cause => SpanClass::Cause,
            Role::Effect => SpanClass::Effect,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanModelConfig {
    /// Longest candidate span, inclusive.
    pub max_span: usize,
    pub neg_entities: usize,
    pub neg_relations: usize,
    pub dim: usize,
    pub width_dim: usize,
    pub buckets: usize,
}

impl Default for SpanModelConfig {
    fn default() -> Self {
        SpanModelConfig {
            max_span: 10,
            neg_entities: 10,
            neg_relations: 5,
            dim: 32,
            width_dim: 16,
            buckets: DEFAULT_BUCKETS,
        }
    }
}

impl SpanModelConfig {
    /// `2d + d_w + d`
    pub fn span_dim(&self) -> usize {
        3 * self.dim + self.width_dim
    }

    /// `2·3 + d`
    pub fn pair_dim(&self) -> usize {
        2 * SPAN_CLASSES + self.dim
    }

    fn validate(&self) -> Result<()> {
        if self.max_span == 0 || self.dim == 0 || self.width_dim == 0 || self.buckets == 0 {
            return Err(Error::Shape(format!(
                "span model needs max_span, dim, width_dim and buckets > 0: {self:?}"
            )));
        }
        Ok(())
    }

    fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            (TOKEN_EMB, vec![self.buckets, self.dim]),
            (WIDTH_EMB, vec![self.max_span, self.width_dim]),
            (SPAN_W, vec![SPAN_CLASSES, self.span_dim()]),
            (SPAN_B, vec![SPAN_CLASSES]),
            (REL_W, vec![2, self.pair_dim()]),
            (REL_B, vec![2]),
        ]
    }
}

/// All spans of length `1..=max_span` over `len` tokens, ordered by
/// `(start, length)`.
pub fn enumerate_candidates(len: usize, max_span: usize) -> Vec<TokenSpan> {
    (0..len)
        .flat_map(|start| (1..=max_span.min(len - start)).map(move |k| TokenSpan::new(start, start + k)))
        .collect()
}

/// Longest span, ties to the smallest start.
pub fn select_longest(spans: impl IntoIterator<Item = TokenSpan>) -> Option<TokenSpan> {
    spans.into_iter().fold(None, |best: Option<TokenSpan>, s| match best {
        Some(b) if b.len() > s.len() || (b.len() == s.len() && b.start <= s.start) => Some(b),
        _ => Some(s),
    })
}

/// Nearest-rank percentile of all cause and effect lengths pooled.
pub fn auto_max_span(corpus: &[Example], p: f64) -> Result<usize> {
    let lengths: Vec<usize> = corpus
        .iter()
        .flat_map(|ex| ex.role_spans())
        .map(|rs| rs.span.len())
        .collect();
    percentile_length(&lengths, p)
}

/// Supervision drawn for one example.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingItems {
    pub spans: Vec<(TokenSpan, SpanClass)>,
    /// `(s1, s2, causal)`
    pub relations: Vec<(TokenSpan, TokenSpan, bool)>,
    /// Gold spans dropped for exceeding `max_span`.
    pub skipped_long: usize,
}

impl TrainingItems {
    pub fn is_empty(&self) -> bool {
        self.spans.is_empty() && self.relations.is_empty()
    }
}

/// Gold spans and pairs plus randomly drawn negatives.
///
/// Span negatives are up to `neg_entities` candidates (not gold under any
/// role) drawn without replacement. Relation negatives are up to
/// `neg_relations` ordered pairs of distinct spans from gold ∪ sampled
/// negatives that are not gold pairs; reversed gold pairs qualify.
pub fn sample_training_items(
    example: &Example,
    config: &SpanModelConfig,
    rng: &mut Rng,
) -> TrainingItems {
    let mut items = TrainingItems::default();
    let len = example.len();
    if len == 0 {
        return items;
    }
    let fits = |s: &TokenSpan| s.len() <= config.max_span && s.end <= len;

    let gold_all: HashSet<TokenSpan> = example.role_spans().iter().map(|rs| rs.span).collect();
    for rs in example.role_spans() {
        if fits(&rs.span) {
            items.spans.push((rs.span, rs.role.into()));
        } else {
            items.skipped_long += 1;
        }
    }

    let pool: Vec<TokenSpan> = enumerate_candidates(len, config.max_span)
        .into_iter()
        .filter(|s| !gold_all.contains(s))
        .collect();
    let negatives: Vec<TokenSpan> = rng
        .sample_indices(pool.len(), config.neg_entities)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    items.spans.extend(negatives.iter().map(|&s| (s, SpanClass::None)));

    let mut gold_pairs = Vec::new();
    for rel in &example.relations {
        if fits(&rel.cause) && fits(&rel.effect) && !gold_pairs.contains(&(rel.cause, rel.effect)) {
            gold_pairs.push((rel.cause, rel.effect));
        }
    }
    items
        .relations
        .extend(gold_pairs.iter().map(|&(c, e)| (c, e, true)));

    let mut entities: Vec<TokenSpan> = items
        .spans
        .iter()
        .filter(|(_, class)| *class != SpanClass::None)
        .map(|(s, _)| *s)
        .collect();
    entities.dedup();
    entities.extend(&negatives);
    let mut pair_pool = Vec::new();
    for &a in &entities {
        for &b in &entities {
            if a != b && !gold_pairs.contains(&(a, b)) {
                pair_pool.push((a, b));
            }
        }
    }
    items.relations.extend(
        rng.sample_indices(pair_pool.len(), config.neg_relations)
            .into_iter()
            .map(|i| (pair_pool[i].0, pair_pool[i].1, false)),
    );
    items
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub span: TokenSpan,
    pub role: Role,
    /// Probability of the predicted class.
    pub score: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpanOutput {
    pub cause: Option<SpanPrediction>,
    pub effect: Option<SpanPrediction>,
    /// Causal probability of `(cause, effect)` when both are present.
    pub relation_score: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpanEpoch {
    /// Mean per-example loss (span plus relation cross-entropies).
    pub mean_loss: f64,
    pub examples: usize,
    pub skipped_long: usize,
}

/// Token-level quantities shared by every span of a sentence.
struct Encoded {
    buckets: Vec<usize>,
    /// `[E(t_j); E(t_j)·(1 + j/L)]`
    reps: Vec<Vec<f64>>,
    /// sentence mean of bucket embeddings
    context: Vec<f64>,
}

struct SpanForward {
    span: TokenSpan,
    pool: MaxPool,
    embedding: Vec<f64>,
    logits: Vec<f64>,
}

struct PairForward {
    first: usize,
    second: usize,
    between: Option<(TokenSpan, MaxPool)>,
    embedding: Vec<f64>,
    logits: Vec<f64>,
    target: usize,
}

struct ItemsForward {
    encoded: Encoded,
    spans: Vec<SpanForward>,
    span_targets: Vec<(usize, usize)>,
    pairs: Vec<PairForward>,
}

fn position_scale(position: usize, len: usize) -> f64 {
    1.0 + position as f64 / len as f64
}

/// Tokens strictly between two spans; `None` if they overlap or touch.
fn between(a: TokenSpan, b: TokenSpan) -> Option<TokenSpan> {
    if a.end <= b.start {
        TokenSpan::try_new(a.end, b.start)
    } else if b.end <= a.start {
        TokenSpan::try_new(b.end, a.start)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanModel {
    config: SpanModelConfig,
    params: ParamSet,
}

impl SpanModel {
    /// Glorot-initialized weights, zero biases.
    pub fn new(config: SpanModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        for (name, shape) in config.param_shapes() {
            let value = if name == SPAN_B || name == REL_B {
                Tensor::zeros(&shape)
            } else {
                glorot_uniform(rng, &shape)
            };
            params.insert(name, value);
        }
        Ok(SpanModel { config, params })
    }

    pub fn zeroed(config: SpanModelConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        for (name, shape) in config.param_shapes() {
            params.insert(name, Tensor::zeros(&shape));
        }
        Ok(SpanModel { config, params })
    }

    pub fn config(&self) -> &SpanModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn encode(&self, params: &ParamSet, tokens: &[String]) -> Encoded {
        let table = params.get(TOKEN_EMB);
        let len = tokens.len();
        let buckets = buckets_for(tokens, self.config.buckets);
        let mut context = vec![0.0; self.config.dim];
        let reps = buckets
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                let row = table.row(b);
                for (c, x) in context.iter_mut().zip(row) {
                    *c += x / len as f64;
                }
                let scale = position_scale(j, len);
                row.iter().copied().chain(row.iter().map(|x| x * scale)).collect()
            })
            .collect();
        Encoded {
            buckets,
            reps,
            context,
        }
    }

    fn check_span(&self, span: TokenSpan, len: usize) -> Result<()> {
        if span.is_empty() || span.end > len {
            return Err(Error::IndexOutOfRange {
                index: span.end,
                len,
            });
        }
        if span.len() > self.config.max_span {
            return Err(Error::SpanTooLong {
                span,
                max: self.config.max_span,
            });
        }
        Ok(())
    }

    fn span_forward(&self, params: &ParamSet, enc: &Encoded, span: TokenSpan) -> SpanForward {
        let rows: Vec<&[f64]> = enc.reps[span.indices()].iter().map(Vec::as_slice).collect();
        let pool = max_pool(&rows).expect("non-empty span");
        let mut embedding = Vec::with_capacity(self.config.span_dim());
        embedding.extend_from_slice(&pool.values);
        embedding.extend_from_slice(params.get(WIDTH_EMB).row(span.len() - 1));
        embedding.extend_from_slice(&enc.context);
        let logits = linear(&embedding, params.get(SPAN_W), params.get(SPAN_B))
            .expect("shapes fixed by config");
        SpanForward {
            span,
            pool,
            embedding,
            logits,
        }
    }

    fn pair_input(
        &self,
        params: &ParamSet,
        enc: &Encoded,
        first: &SpanForward,
        second: &SpanForward,
    ) -> (Option<(TokenSpan, MaxPool)>, Vec<f64>) {
        let table = params.get(TOKEN_EMB);
        let gap = between(first.span, second.span).map(|gap| {
            let rows: Vec<&[f64]> = gap.indices().map(|j| table.row(enc.buckets[j])).collect();
            (gap, max_pool(&rows).expect("non-empty gap"))
        });
        let mut embedding = Vec::with_capacity(self.config.pair_dim());
        embedding.extend_from_slice(&first.logits);
        embedding.extend_from_slice(&second.logits);
        match &gap {
            Some((_, pool)) => embedding.extend_from_slice(&pool.values),
            None => embedding.extend(std::iter::repeat_n(0.0, self.config.dim)),
        }
        (gap, embedding)
    }

    /// `e(s)`, of width `2d + d_w + d`.
    pub fn span_embedding(&self, tokens: &[String], span: TokenSpan) -> Result<Vec<f64>> {
        self.check_span(span, tokens.len())?;
        let enc = self.encode(&self.params, tokens);
        Ok(self.span_forward(&self.params, &enc, span).embedding)
    }

    /// Pre-softmax span-head scores.
    pub fn span_logits(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        linear(embedding, self.params.get(SPAN_W), self.params.get(SPAN_B))
    }

    /// Distribution over (cause, effect, none).
    pub fn classify_span(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.span_logits(embedding)?))
    }

    /// Embedding of the ordered pair `(s1, s2)`, of width `6 + d`.
    pub fn pair_embedding(&self, tokens: &[String], s1: TokenSpan, s2: TokenSpan) -> Result<Vec<f64>> {
        self.check_span(s1, tokens.len())?;
        self.check_span(s2, tokens.len())?;
        let enc = self.encode(&self.params, tokens);
        let first = self.span_forward(&self.params, &enc, s1);
        let second = self.span_forward(&self.params, &enc, s2);
        Ok(self.pair_input(&self.params, &enc, &first, &second).1)
    }

    /// Probability that the first span of the pair causes the second.
    pub fn classify_relation(&self, pair_embedding: &[f64]) -> Result<f64> {
        let logits = linear(pair_embedding, self.params.get(REL_W), self.params.get(REL_B))?;
        Ok(softmax(&logits)[REL_CAUSAL])
    }

    fn forward_items(&self, params: &ParamSet, tokens: &[String], items: &TrainingItems) -> ItemsForward {
        let encoded = self.encode(params, tokens);
        let mut index: HashMap<TokenSpan, usize> = HashMap::new();
        let mut spans = Vec::new();
        let mut slot = |span: TokenSpan, spans: &mut Vec<SpanForward>| -> usize {
            *index.entry(span).or_insert_with(|| {
                spans.push(self.span_forward(params, &encoded, span));
                spans.len() - 1
            })
        };
        let span_targets: Vec<(usize, usize)> = items
            .spans
            .iter()
            .map(|&(span, class)| (slot(span, &mut spans), class.index()))
            .collect();
        let pair_slots: Vec<(usize, usize, usize)> = items
            .relations
            .iter()
            .map(|&(a, b, causal)| {
                let target = if causal { REL_CAUSAL } else { REL_NONE };
                (slot(a, &mut spans), slot(b, &mut spans), target)
            })
            .collect();
        let pairs = pair_slots
            .into_iter()
            .map(|(first, second, target)| {
                let (between, embedding) = self.pair_input(params, &encoded, &spans[first], &spans[second]);
                let logits = linear(&embedding, params.get(REL_W), params.get(REL_B))
                    .expect("shapes fixed by config");
                PairForward {
                    first,
                    second,
                    between,
                    embedding,
                    logits,
                    target,
                }
            })
            .collect();
        ItemsForward {
            encoded,
            spans,
            span_targets,
            pairs,
        }
    }

    /// Σ span cross-entropies + Σ relation cross-entropies, evaluated with
    /// `params` in place of the model's own.
    pub fn loss_with(&self, params: &ParamSet, tokens: &[String], items: &TrainingItems) -> f64 {
        let fwd = self.forward_items(params, tokens, items);
        let span_loss: f64 = fwd
            .span_targets
            .iter()
            .map(|&(k, t)| softmax_xent(&fwd.spans[k].logits, t).expect("3 classes").0)
            .sum();
        let rel_loss: f64 = fwd
            .pairs
            .iter()
            .map(|p| softmax_xent(&p.logits, p.target).expect("2 classes").0)
            .sum();
        span_loss + rel_loss
    }

    /// Adds the gradient of [`SpanModel::loss_with`] at the current
    /// parameters to the accumulators and returns the loss.
    ///
    /// Relation gradients flow back into the span logits they consume, so
    /// each span's head receives the sum of its own cross-entropy gradient
    /// and whatever the pairs using it send back.
    pub fn accumulate_gradients(&mut self, tokens: &[String], items: &TrainingItems) -> f64 {
        let d = self.config.dim;
        let dw = self.config.width_dim;
        let len = tokens.len();
        let fwd = self.forward_items(&self.params, tokens, items);
        let mut loss = 0.0;
        let mut dlogits = vec![vec![0.0; SPAN_CLASSES]; fwd.spans.len()];
        let mut token_grads = vec![vec![0.0; d]; len];

        for &(k, t) in &fwd.span_targets {
            let (l, dz) = softmax_xent(&fwd.spans[k].logits, t).expect("3 classes");
            loss += l;
            add_into(&mut dlogits[k], &dz);
        }

        let mut rel_db = Tensor::zeros(&[2]);
        for pair in &fwd.pairs {
            let (l, dz) = softmax_xent(&pair.logits, pair.target).expect("2 classes");
            loss += l;
            let rel = self.params.param_mut(REL_W);
            let dpair = linear_backward(&pair.embedding, &rel.value, &dz, &mut rel.grad, &mut rel_db);
            add_into(&mut dlogits[pair.first], &dpair[..SPAN_CLASSES]);
            add_into(&mut dlogits[pair.second], &dpair[SPAN_CLASSES..2 * SPAN_CLASSES]);
            if let Some((gap, pool)) = &pair.between {
                let routed = pool.backward(&dpair[2 * SPAN_CLASSES..], gap.len());
                for (offset, g) in routed.iter().enumerate() {
                    add_into(&mut token_grads[gap.start + offset], g);
                }
            }
        }
        add_into(self.params.grad_mut(REL_B).data_mut(), rel_db.data());

        let mut span_db = Tensor::zeros(&[SPAN_CLASSES]);
        let mut context_grad = vec![0.0; d];
        for (sf, dz) in fwd.spans.iter().zip(&dlogits) {
            let head = self.params.param_mut(SPAN_W);
            let de = linear_backward(&sf.embedding, &head.value, dz, &mut head.grad, &mut span_db);
            for (j, (&g, &row)) in de[..2 * d].iter().zip(&sf.pool.argmax).enumerate() {
                let pos = sf.span.start + row;
                if j < d {
                    token_grads[pos][j] += g;
                } else {
                    token_grads[pos][j - d] += g * position_scale(pos, len);
                }
            }
            embed_accumulate(self.params.grad_mut(WIDTH_EMB), sf.span.len() - 1, &de[2 * d..2 * d + dw]);
            add_into(&mut context_grad, &de[2 * d + dw..]);
        }
        add_into(self.params.grad_mut(SPAN_B).data_mut(), span_db.data());

        let table_grad = self.params.grad_mut(TOKEN_EMB);
        for (g, &b) in token_grads.iter_mut().zip(&fwd.encoded.buckets) {
            for (gk, c) in g.iter_mut().zip(&context_grad) {
                *gk += c / len as f64;
            }
            embed_accumulate(table_grad, b, g);
        }
        loss
    }

    /// Flat indices into the token-embedding table whose perturbation by up
    /// to `eps` could flip a max-pool winner in the loss for `items`. The
    /// loss is not differentiable there, so gradient checks skip them.
    pub fn near_tie_coordinates(&self, tokens: &[String], items: &TrainingItems, eps: f64) -> HashSet<usize> {
        let d = self.config.dim;
        let fwd = self.forward_items(&self.params, tokens, items);
        // a coordinate moves a pooled value by at most 2·eps (position scale ≤ 2)
        let margin = 4.0 * eps;
        let mut out = HashSet::new();
        let mut mark = |pool: &MaxPool, rows: TokenSpan| {
            for (j, runner) in pool.runner_up.iter().enumerate() {
                if runner.is_some_and(|(_, gap)| gap <= margin) {
                    for pos in rows.indices() {
                        out.insert(fwd.encoded.buckets[pos] * d + j % d);
                    }
                }
            }
        };
        for sf in &fwd.spans {
            mark(&sf.pool, sf.span);
        }
        for pair in &fwd.pairs {
            if let Some((gap, pool)) = &pair.between {
                mark(pool, *gap);
            }
        }
        out
    }

    /// One pass in shuffled order: fresh negatives per example, then an
    /// Adam step.
    pub fn train_epoch(&mut self, corpus: &[Example], rng: &mut Rng, adam: &AdamConfig) -> SpanEpoch {
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        rng.shuffle(&mut order);
        let mut epoch = SpanEpoch::default();
        let mut total = 0.0;
        for i in order {
            let example = &corpus[i];
            let items = sample_training_items(example, &self.config, rng);
            epoch.skipped_long += items.skipped_long;
            if items.is_empty() {
                continue;
            }
            total += self.accumulate_gradients(&example.tokens, &items);
            epoch.examples += 1;
            adam_step(&mut self.params, adam);
        }
        if epoch.skipped_long > 0 {
            log::warn!(
                "{} gold spans longer than max_span {} were not supervised",
                epoch.skipped_long,
                self.config.max_span
            );
        }
        epoch.mean_loss = if epoch.examples == 0 {
            0.0
        } else {
            total / epoch.examples as f64
        };
        epoch
    }

    /// Argmax class for every candidate, then the longest predicted span
    /// per role (ties to the smallest start).
    pub fn predict(&self, tokens: &[String]) -> SpanOutput {
        if tokens.is_empty() {
            return SpanOutput::default();
        }
        let enc = self.encode(&self.params, tokens);
        let mut best: [Option<(SpanForward, f64)>; 2] = [None, None];
        for span in enumerate_candidates(tokens.len(), self.config.max_span) {
            let sf = self.span_forward(&self.params, &enc, span);
            let probs = softmax(&sf.logits);
            let class = argmax(&probs);
            if let Some(role) = SpanClass::from_index(class).role() {
                let slot = &mut best[SpanClass::from(role).index()];
                let keep = slot
                    .as_ref()
                    .is_some_and(|(b, _)| select_longest([b.span, span]) == Some(b.span));
                if !keep {
                    *slot = Some((sf, probs[class]));
                }
            }
        }
        let [cause, effect] = best;
        let relation_score = match (&cause, &effect) {
            (Some((c, _)), Some((e, _))) => {
                let (_, emb) = self.pair_input(&self.params, &enc, c, e);
                Some(self.classify_relation(&emb).expect("shapes fixed by config"))
            }
            _ => None,
        };
        let to_prediction = |slot: Option<(SpanForward, f64)>, role| {
            slot.map(|(sf, score)| SpanPrediction {
                span: sf.span,
                role,
                score,
            })
        };
        SpanOutput {
            cause: to_prediction(cause, Role::Cause),
            effect: to_prediction(effect, Role::Effect),
            relation_score,
        }
    }

    pub fn to_file(&self) -> ModelFile<SpanModelConfig> {
        ModelFile::new(SPAN_KIND, self.config.clone(), &self.params)
    }

    pub fn from_file(file: ModelFile<SpanModelConfig>) -> Result<Self> {
        let shapes = file.config.param_shapes();
        let (config, params) = file.into_params(SPAN_KIND, &shapes)?;
        config.validate()?;
        Ok(SpanModel { config, params })
    }
}
