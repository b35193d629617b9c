//! Sequence-tagging extractor: a per-token contextual embedding followed by
//! a softmax tag head, `y_i = softmax(W·e_i + b)`.
//!
//! The contextual embedding of token `i` concatenates three `d`-wide blocks:
//! its own hashed-bucket embedding, the mean embedding over the window
//! `[i−2, i+2]` clipped to the sentence, and the mean embedding of the whole
//! sentence. Gradients are hand-derived; see [`TaggerModel::accumulate_gradients`].

use serde::{Deserialize, Serialize};

use crate::corpus::{Example, RoleSpan};
use crate::error::{Error, Result};
use crate::hashing::{buckets_for, DEFAULT_BUCKETS};
use crate::nnet::{
    adam_step, add_into, embed_accumulate, glorot_uniform, linear, linear_backward, softmax,
    softmax_xent, AdamConfig, ModelFile, ParamSet, Rng, Tensor,
};
use crate::tagging::{decode, encode, DecodeMode, Scheme, TagSequence};

pub const TAGGER_KIND: &str = "tagger";

const TOKEN_EMB: &str = "token_emb";
const HEAD_W: &str = "head_w";
const HEAD_B: &str = "head_b";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub scheme: Scheme,
    pub buckets: usize,
    pub dim: usize,
    /// Context window radius.
    pub window: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            scheme: Scheme::Iobes,
            buckets: DEFAULT_BUCKETS,
            dim: 32,
            window: 2,
        }
    }
}

impl TaggerConfig {
    pub fn num_tags(&self) -> usize {
        self.scheme.num_tags()
    }

    pub fn feature_dim(&self) -> usize {
        3 * self.dim
    }

    fn validate(&self) -> Result<()> {
        if self.buckets == 0 || self.dim == 0 {
            return Err(Error::Shape(format!(
                "tagger needs buckets > 0 and dim > 0, got {} and {}",
                self.buckets, self.dim
            )));
        }
        Ok(())
    }

    fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            (TOKEN_EMB, vec![self.buckets, self.dim]),
            (HEAD_W, vec![self.num_tags(), self.feature_dim()]),
            (HEAD_B, vec![self.num_tags()]),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerModel {
    config: TaggerConfig,
    params: ParamSet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaggerEpoch {
    /// Mean per-token cross-entropy over the epoch.
    pub mean_loss: f64,
    pub tokens: usize,
}

impl TaggerModel {
    /// Glorot-initialized model.
    pub fn new(config: TaggerConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        for (name, shape) in config.param_shapes() {
            let value = if name == HEAD_B {
                Tensor::zeros(&shape)
            } else {
                glorot_uniform(rng, &shape)
            };
            params.insert(name, value);
        }
        Ok(TaggerModel { config, params })
    }

    /// All-zero parameters: every token gets the uniform tag distribution.
    pub fn zeroed(config: TaggerConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        for (name, shape) in config.param_shapes() {
            params.insert(name, Tensor::zeros(&shape));
        }
        Ok(TaggerModel { config, params })
    }

    pub fn config(&self) -> &TaggerConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn window(&self, i: usize, len: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.config.window)..(i + self.config.window + 1).min(len)
    }

    fn embeddings(&self, params: &ParamSet, buckets: &[usize]) -> Vec<Vec<f64>> {
        let table = params.get(TOKEN_EMB);
        let d = self.config.dim;
        let len = buckets.len();
        let mut sentence = vec![0.0; d];
        for &b in buckets {
            for (s, x) in sentence.iter_mut().zip(table.row(b)) {
                *s += x / len as f64;
            }
        }
        (0..len)
            .map(|i| {
                let mut e = Vec::with_capacity(3 * d);
                e.extend_from_slice(table.row(buckets[i]));
                let window = self.window(i, len);
                let n = window.len() as f64;
                let mut local = vec![0.0; d];
                for j in window {
                    for (l, x) in local.iter_mut().zip(table.row(buckets[j])) {
                        *l += x / n;
                    }
                }
                e.extend(local);
                e.extend_from_slice(&sentence);
                e
            })
            .collect()
    }

    /// One `3d` vector per token.
    pub fn contextual_embed(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        self.embeddings(&self.params, &buckets_for(tokens, self.config.buckets))
    }

    fn logits_with(&self, params: &ParamSet, embeddings: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (w, b) = (params.get(HEAD_W), params.get(HEAD_B));
        embeddings
            .iter()
            .map(|e| linear(e, w, b).expect("shapes fixed by config"))
            .collect()
    }

    /// Per-token tag distributions, columns in [`Scheme::alphabet`] order.
    pub fn forward(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        let emb = self.contextual_embed(tokens);
        self.logits_with(&self.params, &emb)
            .iter()
            .map(|z| softmax(z))
            .collect()
    }

    fn gold_indices(&self, example: &Example) -> Result<Vec<usize>> {
        let tags = encode(example, self.config.scheme)?;
        Ok(tags
            .tags
            .iter()
            .map(|t| self.config.scheme.tag_index(*t).expect("encoder emits scheme tags"))
            .collect())
    }

    /// Summed per-token cross-entropy evaluated with `params` in place of
    /// the model's own (used for finite differences).
    pub fn loss_with(&self, params: &ParamSet, tokens: &[String], gold: &[usize]) -> f64 {
        let emb = self.embeddings(params, &buckets_for(tokens, self.config.buckets));
        self.logits_with(params, &emb)
            .iter()
            .zip(gold)
            .map(|(z, &t)| softmax_xent(z, t).expect("valid tag index").0)
            .sum()
    }

    /// Adds the gradient of the summed token loss to the parameter
    /// accumulators and returns the loss.
    ///
    /// With `g_i = Wᵀ·(p_i − onehot_i)` split into blocks `(g_self, g_win,
    /// g_sent)`, the embedding row of token `j` receives `g_self` from its
    /// own position, `g_win / |window(i)|` from every position whose window
    /// contains it, and `Σ_i g_sent / L`.
    pub fn accumulate_gradients(&mut self, tokens: &[String], gold: &[usize]) -> f64 {
        let d = self.config.dim;
        let len = tokens.len();
        let buckets = buckets_for(tokens, self.config.buckets);
        let emb = self.embeddings(&self.params, &buckets);
        let logits = self.logits_with(&self.params, &emb);

        let mut loss = 0.0;
        let mut dlogits = Vec::with_capacity(len);
        for (z, &t) in logits.iter().zip(gold) {
            let (l, dz) = softmax_xent(z, t).expect("valid tag index");
            loss += l;
            dlogits.push(dz);
        }

        let mut db = Tensor::zeros(&[self.config.num_tags()]);
        let head = self.params.param_mut(HEAD_W);
        let de: Vec<Vec<f64>> = emb
            .iter()
            .zip(&dlogits)
            .map(|(e, dz)| linear_backward(e, &head.value, dz, &mut head.grad, &mut db))
            .collect();
        add_into(self.params.grad_mut(HEAD_B).data_mut(), db.data());

        let mut per_position = vec![vec![0.0; d]; len];
        let mut sentence_grad = vec![0.0; d];
        for (i, de) in de.iter().enumerate() {
            for (p, g) in per_position[i].iter_mut().zip(&de[..d]) {
                *p += g;
            }
            let window = self.window(i, len);
            let n = window.len() as f64;
            for j in window {
                for (p, g) in per_position[j].iter_mut().zip(&de[d..2 * d]) {
                    *p += g / n;
                }
            }
            for (s, g) in sentence_grad.iter_mut().zip(&de[2 * d..]) {
                *s += g / len as f64;
            }
        }
        let table_grad = self.params.grad_mut(TOKEN_EMB);
        for (j, g) in per_position.iter_mut().enumerate() {
            for (gk, s) in g.iter_mut().zip(&sentence_grad) {
                *gk += s;
            }
            embed_accumulate(table_grad, buckets[j], g);
        }
        loss
    }

    /// Encodes the example under the model's scheme, then returns
    /// `(loss, gold tag indices)` after accumulating gradients.
    pub fn example_gradients(&mut self, example: &Example) -> Result<(f64, Vec<usize>)> {
        let gold = self.gold_indices(example)?;
        let loss = self.accumulate_gradients(&example.tokens, &gold);
        Ok((loss, gold))
    }

    /// One pass over `corpus` in shuffled order with an Adam step after each
    /// example. Every example is encoded up front so an unencodable corpus
    /// fails before any parameter changes.
    pub fn train_epoch(
        &mut self,
        corpus: &[Example],
        rng: &mut Rng,
        adam: &AdamConfig,
    ) -> Result<TaggerEpoch> {
        let gold: Vec<Vec<usize>> = corpus
            .iter()
            .map(|ex| self.gold_indices(ex))
            .collect::<Result<_>>()?;
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        rng.shuffle(&mut order);

        let mut total = 0.0;
        let mut tokens = 0;
        for i in order {
            if corpus[i].tokens.is_empty() {
                continue;
            }
            total += self.accumulate_gradients(&corpus[i].tokens, &gold[i]);
            tokens += corpus[i].tokens.len();
            adam_step(&mut self.params, adam);
        }
        Ok(TaggerEpoch {
            mean_loss: if tokens == 0 { 0.0 } else { total / tokens as f64 },
            tokens,
        })
    }

    /// Argmax tag per token (ties to the lower tag index), lenient-decoded.
    pub fn predict(&self, tokens: &[String]) -> Vec<RoleSpan> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let alphabet = self.config.scheme.alphabet();
        let tags = self
            .forward(tokens)
            .iter()
            .map(|row| alphabet[argmax(row)])
            .collect();
        let seq = TagSequence {
            scheme: self.config.scheme,
            tags,
        };
        decode(&seq, DecodeMode::Lenient).expect("lenient decoding is total")
    }

    pub fn to_file(&self) -> ModelFile<TaggerConfig> {
        ModelFile::new(TAGGER_KIND, self.config.clone(), &self.params)
    }

    pub fn from_file(file: ModelFile<TaggerConfig>) -> Result<Self> {
        let shapes = file.config.param_shapes();
        let (config, params) = file.into_params(TAGGER_KIND, &shapes)?;
        config.validate()?;
        Ok(TaggerModel { config, params })
    }
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
