//! Neural fine-grained entity classification.
//!
//! A mention is represented as `v = [v_left, v_right, v_entity]`, each block
//! `D` wide: the left and right contexts go through one of three context
//! encoders (averaging, Elman RNN, bi-RNN with self-attention) and the mention
//! itself is the mean of its token vectors. A sigmoid head `y = σ(W_y v)`
//! scores the `K` labels independently and is trained with summed binary
//! cross entropy by mini-batch SGD.
//!
//! Token vectors are word embeddings, optionally extended with a feature
//! embedding (`use_features`): the sum of the token's shape-tag row and its
//! coarse annotator tag row (or `NONE`). Features feed both the mention and
//! the context encoders.

pub mod encoders;
mod io;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoders::{attend, mean, pad, AttentiveEncoder, ContextEncoder, EncoderCache, EncoderKind, RnnCell};
pub use io::{load_embeddings_text, read_checkpoint, write_checkpoint};

use crate::annotators::EntityMention;
use crate::ingest::{Sentence, ShapeTag};
use crate::linalg::{axpy, Matrix};
use crate::scalar::{sigmoid, Scalar};
use crate::schema::TypePath;

pub const UNK: &str = "<unk>";
pub const NONE_TAG: &str = "NONE";
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("mention has no tokens")]
    EmptyMention,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("prediction and gold lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid classifier configuration: {0}")]
    Config(String),
    #[error("no classifier checkpoint available")]
    MissingModel,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub encoder: EncoderKind,
    pub word_dim: usize,
    pub feature_dim: usize,
    /// Width `D` of each of the three representation blocks.
    pub repr_dim: usize,
    /// Recurrent / attention hidden width.
    pub hidden: usize,
    /// Context tokens kept on each side of the mention.
    pub window: usize,
    pub use_features: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Half-width of the uniform embedding initialisation.
    pub init_scale: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Averaging,
            word_dim: 50,
            feature_dim: 10,
            repr_dim: 100,
            hidden: 50,
            window: 10,
            use_features: true,
            learning_rate: 0.1,
            batch_size: 32,
            epochs: 5,
            init_scale: 0.05,
        }
    }
}

impl ClassifierConfig {
    pub fn input_dim(&self) -> usize {
        self.word_dim + if self.use_features { self.feature_dim } else { 0 }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let err = |m: &str| Err(ClassifierError::Config(m.to_string()));
        if self.hidden == 0 || self.window == 0 || self.repr_dim == 0 || self.word_dim == 0 {
            return err("hidden, window, repr_dim and word_dim must be >= 1");
        }
        if self.use_features && self.feature_dim == 0 {
            return err("feature_dim must be >= 1 when features are used");
        }
        if self.input_dim() > self.repr_dim {
            return err("repr_dim must be at least word_dim (+ feature_dim)");
        }
        if self.encoder == EncoderKind::Rnn && self.hidden > self.repr_dim {
            return err("rnn hidden width must not exceed repr_dim");
        }
        if self.batch_size == 0 {
            return err("batch_size must be >= 1");
        }
        Ok(())
    }
}

/// Word vocabulary; index 0 is the unknown token. Lookups are case-folded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    pub fn new(words: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        let set: BTreeSet<String> = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        let mut tokens = vec![UNK.to_string()];
        tokens.extend(set.into_iter().filter(|w| w != UNK));
        Self::from_list(tokens)
    }

    /// Rebuilds a vocabulary from an ordered list whose first entry is `<unk>`.
    pub fn from_list(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_index(&self) -> usize {
        0
    }

    pub fn get(&self, word: &str) -> usize {
        self.index.get(&word.to_lowercase()).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Feature tags: `NONE`, the six shape tags, then coarse type paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVocab {
    tags: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl FeatureVocab {
    pub fn new<'a>(coarse: impl IntoIterator<Item = &'a TypePath>) -> Self {
        let mut tags = vec![NONE_TAG.to_string()];
        tags.extend(ShapeTag::ALL.iter().map(|s| s.as_str().to_string()));
        let coarse: BTreeSet<String> = coarse.into_iter().map(|t| t.to_string()).collect();
        tags.extend(coarse);
        Self::from_list(tags)
    }

    pub fn from_list(tags: Vec<String>) -> Self {
        let index = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tags, index }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn none_index(&self) -> usize {
        0
    }

    pub fn get(&self, tag: &str) -> usize {
        self.index.get(tag).copied().unwrap_or(0)
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextToken {
    pub text: String,
    pub shape: ShapeTag,
    pub coarse: Option<TypePath>,
}

impl ContextToken {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            shape: ShapeTag::of(&text),
            text,
            coarse: None,
        }
    }

    pub fn with_coarse(mut self, coarse: TypePath) -> Self {
        self.coarse = Some(coarse);
        self
    }
}

/// Mention plus its left/right windows. Both windows are ordered
/// nearest-to-mention first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionContext {
    pub left: Vec<ContextToken>,
    pub mention: Vec<ContextToken>,
    pub right: Vec<ContextToken>,
}

impl MentionContext {
    /// Builds the context of `mention` inside `sentence`. Coarse tags come from
    /// whichever annotator mention in `annotations` covers a token.
    pub fn from_sentence(sentence: &Sentence, mention: &EntityMention, annotations: &[EntityMention], window: usize) -> Self {
        let coarse_of = |i: usize| -> Option<TypePath> {
            if (mention.start_tok..=mention.end_tok).contains(&i) {
                if let Some(c) = &mention.coarse_label {
                    return Some(c.clone());
                }
            }
            annotations
                .iter()
                .filter(|m| m.doc_id == sentence.doc_id && m.sent_index == sentence.sent_index)
                .find(|m| (m.start_tok..=m.end_tok).contains(&i))
                .and_then(|m| m.coarse_label.clone())
        };
        let tok = |i: usize| ContextToken {
            text: sentence.tokens[i].text.clone(),
            shape: sentence.tokens[i].shape,
            coarse: coarse_of(i),
        };
        let left = (0..mention.start_tok).rev().take(window).map(tok).collect();
        let right = (mention.end_tok + 1..sentence.tokens.len()).take(window).map(tok).collect();
        let mention_toks = (mention.start_tok..=mention.end_tok).map(tok).collect();
        MentionContext {
            left,
            mention: mention_toks,
            right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub context: MentionContext,
    /// Ancestor-closed gold labels.
    pub labels: BTreeSet<TypePath>,
}

impl TrainingExample {
    /// Closes `labels` under ancestors.
    pub fn new(context: MentionContext, labels: impl IntoIterator<Item = TypePath>) -> Self {
        let mut closed = BTreeSet::new();
        for l in labels {
            closed.extend(l.ancestors());
            closed.insert(l);
        }
        Self { context, labels: closed }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleLine {
    left: Vec<String>,
    mention: Vec<String>,
    right: Vec<String>,
    #[serde(default)]
    features: Vec<String>,
    #[serde(default)]
    labels: Vec<TypePath>,
}

fn tag_string(tok: &ContextToken) -> String {
    match &tok.coarse {
        Some(c) => format!("{}|{}", tok.shape.as_str(), c),
        None => tok.shape.as_str().to_string(),
    }
}

/// Training-data lines: `{left, mention, right, features, labels}`, with the
/// windows in text order and one feature string per token of
/// `left ++ mention ++ right`. A feature string is a shape tag, a coarse
/// type path, `NONE`, or `shape|/coarse/path`.
pub fn write_examples_jsonl(examples: &[TrainingExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        let c = &ex.context;
        let left_text_order: Vec<&ContextToken> = c.left.iter().rev().collect();
        let all: Vec<&ContextToken> = left_text_order
            .iter()
            .copied()
            .chain(c.mention.iter())
            .chain(c.right.iter())
            .collect();
        let line = ExampleLine {
            left: left_text_order.iter().map(|t| t.text.clone()).collect(),
            mention: c.mention.iter().map(|t| t.text.clone()).collect(),
            right: c.right.iter().map(|t| t.text.clone()).collect(),
            features: all.iter().map(|t| tag_string(t)).collect(),
            labels: ex.labels.iter().cloned().collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("example serialises"));
        out.push('\n');
    }
    out
}

pub fn read_examples_jsonl(text: &str) -> Result<Vec<TrainingExample>, ClassifierError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let ferr = |msg: String| ClassifierError::Format { line: i + 1, msg };
        let l: ExampleLine = serde_json::from_str(raw).map_err(|e| ferr(e.to_string()))?;
        let total = l.left.len() + l.mention.len() + l.right.len();
        if !l.features.is_empty() && l.features.len() != total {
            return Err(ferr(format!("{} feature tags for {} tokens", l.features.len(), total)));
        }
        let mut toks: Vec<ContextToken> = l
            .left
            .iter()
            .chain(&l.mention)
            .chain(&l.right)
            .map(ContextToken::new)
            .collect();
        for (tok, tag) in toks.iter_mut().zip(&l.features) {
            for part in tag.split('|') {
                if part == NONE_TAG || part.is_empty() {
                    continue;
                }
                if let Some(shape) = ShapeTag::parse(part) {
                    tok.shape = shape;
                } else {
                    tok.coarse = Some(part.parse().map_err(|e: crate::schema::SchemaError| ferr(e.to_string()))?);
                }
            }
        }
        let right = toks.split_off(l.left.len() + l.mention.len());
        let mention = toks.split_off(l.left.len());
        let mut left = toks;
        left.reverse();
        if mention.is_empty() {
            return Err(ferr("empty mention".into()));
        }
        out.push(TrainingExample::new(MentionContext { left, mention, right }, l.labels));
    }
    Ok(out)
}

/// Token indices into the word and feature tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenIds {
    pub word: usize,
    pub shape: usize,
    pub coarse: usize,
}

#[derive(Debug, Clone)]
pub struct EncodedContext {
    pub left: Vec<TokenIds>,
    pub mention: Vec<TokenIds>,
    pub right: Vec<TokenIds>,
}

/// All trainable tensors. A zeroed copy doubles as the gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams<S> {
    pub word_emb: Matrix<S>,
    pub feat_emb: Matrix<S>,
    /// K × 3D
    pub w_y: Matrix<S>,
    pub left: ContextEncoder<S>,
    pub right: ContextEncoder<S>,
}

impl<S: Scalar> ClassifierParams<S> {
    pub fn zeros_like(&self) -> Self {
        Self {
            word_emb: Matrix::zeros(self.word_emb.rows(), self.word_emb.cols()),
            feat_emb: Matrix::zeros(self.feat_emb.rows(), self.feat_emb.cols()),
            w_y: Matrix::zeros(self.w_y.rows(), self.w_y.cols()),
            left: self.left.zeros_like(),
            right: self.right.zeros_like(),
        }
    }

    /// Named tensors in a fixed order (checkpoint and update order).
    pub fn named_tensors(&self) -> Vec<(String, &Matrix<S>)> {
        let mut out = vec![
            ("word_emb".to_string(), &self.word_emb),
            ("feat_emb".to_string(), &self.feat_emb),
            ("w_y".to_string(), &self.w_y),
        ];
        out.extend(self.left.tensors().into_iter().map(|(n, m)| (format!("left_{n}"), m)));
        out.extend(self.right.tensors().into_iter().map(|(n, m)| (format!("right_{n}"), m)));
        out
    }

    pub fn tensors(&self) -> Vec<&Matrix<S>> {
        self.named_tensors().into_iter().map(|(_, m)| m).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = vec![&mut self.word_emb, &mut self.feat_emb, &mut self.w_y];
        out.extend(self.left.tensors_mut());
        out.extend(self.right.tensors_mut());
        out
    }

    pub fn fill_zero(&mut self) {
        self.tensors_mut().into_iter().for_each(Matrix::fill_zero);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<S> {
    pub config: ClassifierConfig,
    pub vocab: Vocab,
    pub features: FeatureVocab,
    /// Label order of the output layer.
    pub labels: Vec<TypePath>,
    pub params: ClassifierParams<S>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward<S> {
    xs_left: Vec<Vec<S>>,
    xs_right: Vec<Vec<S>>,
    cache_left: EncoderCache<S>,
    cache_right: EncoderCache<S>,
    pub v: Vec<S>,
    pub y: Vec<S>,
}

/// Mean of the mention token vectors, zero-padded to `width`.
pub fn encode_mention<S: Scalar>(token_vectors: &[Vec<S>], width: usize) -> Result<Vec<S>, ClassifierError> {
    let first = token_vectors.first().ok_or(ClassifierError::EmptyMention)?;
    if first.len() > width {
        return Err(ClassifierError::DimensionMismatch {
            expected: width,
            found: first.len(),
        });
    }
    Ok(pad(&mean(token_vectors, first.len()), width))
}

/// `y = σ(W_y v)`.
pub fn classify<S: Scalar>(v: &[S], w_y: &Matrix<S>) -> Result<Vec<S>, ClassifierError> {
    if v.len() != w_y.cols() {
        return Err(ClassifierError::DimensionMismatch {
            expected: w_y.cols(),
            found: v.len(),
        });
    }
    Ok(w_y.matvec(v).into_iter().map(sigmoid).collect())
}

/// Summed binary cross entropy with `y` clamped into `[1e-7, 1 - 1e-7]`.
pub fn bce_loss<S: Scalar>(y: &[S], t: &[S]) -> S {
    let lo = S::lit(BCE_CLAMP);
    let hi = S::one() - lo;
    y.iter()
        .zip(t)
        .map(|(&yk, &tk)| {
            let yk = yk.max(lo).min(hi);
            -tk * yk.ln() - (S::one() - tk) * (S::one() - yk).ln()
        })
        .sum()
}

/// `∂L/∂z` for `y = σ(z)`; zero where the clamp is active.
fn bce_logit_grad<S: Scalar>(y: &[S], t: &[S]) -> Vec<S> {
    let lo = S::lit(BCE_CLAMP);
    let hi = S::one() - lo;
    y.iter()
        .zip(t)
        .map(|(&yk, &tk)| if yk < lo || yk > hi { S::zero() } else { yk - tk })
        .collect()
}

impl<S: Scalar> ClassifierModel<S> {
    /// Fresh model with vocabularies and label set taken from `examples`.
    pub fn init(examples: &[TrainingExample], config: &ClassifierConfig, seed: u64) -> Result<Self, ClassifierError> {
        config.validate()?;
        if examples.is_empty() {
            return Err(ClassifierError::EmptyDataset);
        }
        let words = examples.iter().flat_map(|e| {
            let c = &e.context;
            c.left.iter().chain(&c.mention).chain(&c.right).map(|t| t.text.as_str())
        });
        let vocab = Vocab::new(words);
        let coarse: BTreeSet<&TypePath> = examples
            .iter()
            .flat_map(|e| {
                let c = &e.context;
                c.left.iter().chain(&c.mention).chain(&c.right).filter_map(|t| t.coarse.as_ref())
            })
            .collect();
        let features = FeatureVocab::new(coarse);
        let labels: BTreeSet<TypePath> = examples.iter().flat_map(|e| e.labels.iter().cloned()).collect();
        Ok(Self::with_vocab(vocab, features, labels.into_iter().collect(), config, seed))
    }

    pub fn with_vocab(vocab: Vocab, features: FeatureVocab, labels: Vec<TypePath>, config: &ClassifierConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.repr_dim;
        let input = config.input_dim();
        let params = ClassifierParams {
            word_emb: Matrix::uniform(vocab.len(), config.word_dim, config.init_scale, &mut rng),
            feat_emb: Matrix::uniform(features.len(), config.feature_dim, config.init_scale, &mut rng),
            w_y: Matrix::xavier(labels.len(), 3 * d, &mut rng),
            left: ContextEncoder::new(config.encoder, input, config.hidden, d, &mut rng),
            right: ContextEncoder::new(config.encoder, input, config.hidden, d, &mut rng),
        };
        Self {
            config: config.clone(),
            vocab,
            features,
            labels,
            params,
        }
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &TypePath) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Binary target vector; labels outside the model's label set are ignored.
    pub fn target(&self, labels: &BTreeSet<TypePath>) -> Vec<S> {
        self.labels
            .iter()
            .map(|l| if labels.contains(l) { S::one() } else { S::zero() })
            .collect()
    }

    fn token_ids(&self, tok: &ContextToken) -> TokenIds {
        TokenIds {
            word: self.vocab.get(&tok.text),
            shape: self.features.get(tok.shape.as_str()),
            coarse: tok
                .coarse
                .as_ref()
                .map_or(self.features.none_index(), |c| self.features.get(&c.to_string())),
        }
    }

    pub fn encode_context(&self, ctx: &MentionContext) -> EncodedContext {
        let w = self.config.window;
        EncodedContext {
            left: ctx.left.iter().take(w).map(|t| self.token_ids(t)).collect(),
            mention: ctx.mention.iter().map(|t| self.token_ids(t)).collect(),
            right: ctx.right.iter().take(w).map(|t| self.token_ids(t)).collect(),
        }
    }

    /// Word embedding, extended with `feat[shape] + feat[coarse]` when features are on.
    pub fn token_vector(&self, ids: &TokenIds) -> Vec<S> {
        let mut x = self.params.word_emb.row(ids.word).to_vec();
        if self.config.use_features {
            let mut f = self.params.feat_emb.row(ids.shape).to_vec();
            axpy(S::one(), self.params.feat_emb.row(ids.coarse), &mut f);
            x.extend(f);
        }
        x
    }

    pub fn forward(&self, ctx: &EncodedContext) -> Result<Forward<S>, ClassifierError> {
        let d = self.config.repr_dim;
        let input = self.config.input_dim();
        let xs_left: Vec<Vec<S>> = ctx.left.iter().map(|t| self.token_vector(t)).collect();
        let xs_mention: Vec<Vec<S>> = ctx.mention.iter().map(|t| self.token_vector(t)).collect();
        let xs_right: Vec<Vec<S>> = ctx.right.iter().map(|t| self.token_vector(t)).collect();
        let (v_left, cache_left) = self.params.left.forward(&xs_left, input, d);
        let (v_right, cache_right) = self.params.right.forward(&xs_right, input, d);
        let v_entity = encode_mention(&xs_mention, d)?;
        let mut v = v_left;
        v.extend(v_right);
        v.extend(v_entity);
        let y = classify(&v, &self.params.w_y)?;
        Ok(Forward {
            xs_left,
            xs_right,
            cache_left,
            cache_right,
            v,
            y,
        })
    }

    pub fn predict(&self, ctx: &MentionContext) -> Result<Vec<S>, ClassifierError> {
        Ok(self.forward(&self.encode_context(ctx))?.y)
    }

    pub fn loss(&self, ctx: &EncodedContext, target: &[S]) -> Result<S, ClassifierError> {
        Ok(bce_loss(&self.forward(ctx)?.y, target))
    }

    /// Loss of one example; its gradient is added into `grad`.
    pub fn accumulate_grad(&self, ctx: &EncodedContext, target: &[S], grad: &mut ClassifierParams<S>) -> Result<S, ClassifierError> {
        let fw = self.forward(ctx)?;
        let loss = bce_loss(&fw.y, target);
        let dz = bce_logit_grad(&fw.y, target);
        let d = self.config.repr_dim;
        let input = self.config.input_dim();

        grad.w_y.add_outer(S::one(), &dz, &fw.v);
        let dv = self.params.w_y.matvec_t(&dz);
        let (dv_left, rest) = dv.split_at(d);
        let (dv_right, dv_entity) = rest.split_at(d);

        let n = S::from_usize_lossy(ctx.mention.len());
        let dx_mention: Vec<S> = dv_entity[..input].iter().map(|&g| g / n).collect();
        for ids in &ctx.mention {
            self.scatter(ids, &dx_mention, grad);
        }
        let dxs = self.params.left.backward(&fw.xs_left, &fw.cache_left, dv_left, input, &mut grad.left);
        for (ids, dx) in ctx.left.iter().zip(&dxs) {
            self.scatter(ids, dx, grad);
        }
        let dxs = self.params.right.backward(&fw.xs_right, &fw.cache_right, dv_right, input, &mut grad.right);
        for (ids, dx) in ctx.right.iter().zip(&dxs) {
            self.scatter(ids, dx, grad);
        }
        Ok(loss)
    }

    fn scatter(&self, ids: &TokenIds, dx: &[S], grad: &mut ClassifierParams<S>) {
        let dw = self.config.word_dim;
        axpy(S::one(), &dx[..dw], grad.word_emb.row_mut(ids.word));
        if self.config.use_features {
            axpy(S::one(), &dx[dw..], grad.feat_emb.row_mut(ids.shape));
            axpy(S::one(), &dx[dw..], grad.feat_emb.row_mut(ids.coarse));
        }
    }

    /// Mini-batch SGD over `examples`; returns the mean loss of each epoch.
    pub fn fit(&mut self, examples: &[TrainingExample], seed: u64) -> Result<Vec<f64>, ClassifierError> {
        if examples.is_empty() {
            return Err(ClassifierError::EmptyDataset);
        }
        let encoded: Vec<(EncodedContext, Vec<S>)> = examples
            .iter()
            .map(|e| (self.encode_context(&e.context), self.target(&e.labels)))
            .collect();
        if encoded.iter().any(|(c, _)| c.mention.is_empty()) {
            return Err(ClassifierError::EmptyMention);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c1a5_5f1e_0001);
        let lr = S::lit(self.config.learning_rate);
        let mut grad = self.params.zeros_like();
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut history = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(self.config.batch_size) {
                grad.fill_zero();
                for &i in batch {
                    let (ctx, target) = &encoded[i];
                    total += self.accumulate_grad(ctx, target, &mut grad)?.as_f64();
                }
                if lr != S::zero() {
                    let step = lr / S::from_usize_lossy(batch.len());
                    for (p, g) in self.params.tensors_mut().into_iter().zip(grad.tensors()) {
                        p.sgd_step(step, g);
                    }
                }
            }
            history.push(total / encoded.len() as f64);
        }
        Ok(history)
    }

    /// Predicted label set for one mention.
    pub fn predict_labels(&self, ctx: &MentionContext, threshold: f64) -> Result<BTreeSet<TypePath>, ClassifierError> {
        let y = self.predict(ctx)?;
        Ok(decode_labels(&y, &self.labels, threshold))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier<S> {
    pub model: ClassifierModel<S>,
    pub loss_history: Vec<f64>,
}

/// Initialise and fit a classifier.
pub fn train<S: Scalar>(examples: &[TrainingExample], config: &ClassifierConfig, seed: u64) -> Result<TrainedClassifier<S>, ClassifierError> {
    let mut model = ClassifierModel::init(examples, config, seed)?;
    let loss_history = model.fit(examples, seed)?;
    Ok(TrainedClassifier { model, loss_history })
}

/// Labels scoring above `threshold`, plus the arg-max label (lowest index on
/// ties), closed under ancestors.
pub fn decode_labels<S: Scalar>(y: &[S], labels: &[TypePath], threshold: f64) -> BTreeSet<TypePath> {
    let mut out = BTreeSet::new();
    let mut best: Option<(usize, S)> = None;
    for (k, &score) in y.iter().enumerate() {
        if score.as_f64() > threshold {
            out.insert(labels[k].clone());
        }
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((k, score));
        }
    }
    if let Some((k, _)) = best {
        out.insert(labels[k].clone());
    }
    let ancestors: Vec<TypePath> = out.iter().flat_map(TypePath::ancestors).collect();
    out.extend(ancestors);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

fn f1(tp: usize, predicted: usize, gold: usize) -> f64 {
    if predicted == 0 && gold == 0 {
        return 1.0;
    }
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / predicted as f64;
    let r = tp as f64 / gold as f64;
    2.0 * p * r / (p + r)
}

/// Macro F1 averages per-mention F1; micro F1 pools label counts.
pub fn evaluate<T: Ord>(predictions: &[BTreeSet<T>], gold: &[BTreeSet<T>]) -> Result<F1Scores, ClassifierError> {
    if predictions.len() != gold.len() {
        return Err(ClassifierError::LengthMismatch(predictions.len(), gold.len()));
    }
    if predictions.is_empty() {
        return Ok(F1Scores {
            macro_f1: 0.0,
            micro_f1: 0.0,
        });
    }
    let (mut tp_all, mut pred_all, mut gold_all) = (0, 0, 0);
    let mut macro_sum = 0.0;
    for (p, g) in predictions.iter().zip(gold) {
        let tp = p.intersection(g).count();
        macro_sum += f1(tp, p.len(), g.len());
        tp_all += tp;
        pred_all += p.len();
        gold_all += g.len();
    }
    Ok(F1Scores {
        macro_f1: macro_sum / predictions.len() as f64,
        micro_f1: f1(tp_all, pred_all, gold_all),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(s: &str) -> TypePath {
        s.parse().unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<TypePath> {
        items.iter().map(|s| path(s)).collect()
    }

    #[test]
    fn mention_encoding_examples() {
        let e = vec![0.2f64, -0.4, 0.9];
        assert_eq!(encode_mention(&[e.clone()], 3).unwrap(), e);
        assert_eq!(encode_mention(&[vec![1.0f64, 0.0], vec![0.0, 1.0]], 2).unwrap(), vec![0.5, 0.5]);
        assert_eq!(encode_mention(&[vec![1.0f64], vec![3.0]], 3).unwrap(), vec![2.0, 0.0, 0.0]);
        assert!(matches!(encode_mention::<f64>(&[], 2), Err(ClassifierError::EmptyMention)));
    }

    #[test]
    fn all_unk_mention_is_unk_row() {
        let ex = TrainingExample::new(
            MentionContext {
                left: vec![],
                mention: vec![ContextToken::new("Known")],
                right: vec![],
            },
            [path("/person")],
        );
        let cfg = ClassifierConfig {
            use_features: false,
            word_dim: 4,
            repr_dim: 4,
            ..Default::default()
        };
        let model: ClassifierModel<f64> = ClassifierModel::init(&[ex], &cfg, 1).unwrap();
        let ctx = MentionContext {
            left: vec![],
            mention: vec![ContextToken::new("zzz"), ContextToken::new("qqq")],
            right: vec![],
        };
        let enc = model.encode_context(&ctx);
        let fw = model.forward(&enc).unwrap();
        let unk = model.params.word_emb.row(model.vocab.unk_index());
        for (a, b) in fw.v[8..12].iter().zip(unk) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn classify_examples() {
        let w = Matrix::<f64>::zeros(4, 6);
        let y = classify(&[1.0; 6], &w).unwrap();
        assert_eq!(y, vec![0.5; 4]);
        let w = Matrix::from_vec(1, 1, vec![3.0f64.ln()]);
        let y = classify(&[1.0], &w).unwrap();
        assert!((y[0] - 0.75).abs() < 1e-12);
        let w = Matrix::<f64>::zeros(89, 3 * 100);
        assert_eq!(classify(&vec![0.0; 300], &w).unwrap().len(), 89);
        assert!(matches!(
            classify(&[1.0f64; 5], &Matrix::zeros(2, 6)),
            Err(ClassifierError::DimensionMismatch { expected: 6, found: 5 })
        ));
    }

    #[test]
    fn bce_examples() {
        let k = 7;
        let l = bce_loss(&vec![0.5f64; k], &vec![1.0; k]);
        assert!((l - k as f64 * std::f64::consts::LN_2).abs() < 1e-12);
        // oracle: -ln 0.9
        let l = bce_loss(&[0.9f64], &[1.0]);
        assert!((l - 0.105_360_515_657_826_3).abs() < 1e-12);
        let l = bce_loss(&[0.9f64, 0.1], &[1.0, 0.0]);
        assert!((l - 0.210_721_031_315_652_6).abs() < 1e-12);
        assert!(bce_loss(&[1.0f64, 0.0], &[1.0, 0.0]).is_finite());
        assert!(bce_loss(&[0.0f64], &[1.0]).is_finite());
    }

    #[test]
    fn decode_examples() {
        let labels = vec![path("/person"), path("/org")];
        assert_eq!(decode_labels(&[0.9f64, 0.1], &labels, 0.5), set(&["/person"]));

        let labels = vec![path("/org"), path("/person"), path("/person/politician")];
        assert_eq!(
            decode_labels(&[0.1f64, 0.3, 0.4], &labels, 0.5),
            set(&["/person", "/person/politician"])
        );
        let labels = vec![path("/org"), path("/person")];
        assert_eq!(decode_labels(&[0.2f64, 0.2], &labels, 0.5), set(&["/org"]));
    }

    #[test]
    fn evaluate_examples() {
        let a = set(&["/person"]);
        let ab = set(&["/person", "/org"]);
        let s = evaluate(&[a.clone(), ab.clone()], &[a.clone(), ab.clone()]).unwrap();
        assert_eq!((s.macro_f1, s.micro_f1), (1.0, 1.0));
        let s = evaluate(&[set(&["/org"])], &[a.clone()]).unwrap();
        assert_eq!((s.macro_f1, s.micro_f1), (0.0, 0.0));
        let s = evaluate(&[set(&["/location"]), a.clone()], &[set(&["/location"]), ab.clone()]).unwrap();
        assert!((s.macro_f1 - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((s.micro_f1 - 0.8).abs() < 1e-12);
        assert!(matches!(evaluate(&[a], &[]), Err(ClassifierError::LengthMismatch(1, 0))));
    }

    #[test]
    fn jsonl_examples_round_trip() {
        let ctx = MentionContext {
            left: vec![ContextToken::new("of"), ContextToken::new("senator")],
            mention: vec![ContextToken::new("Ann").with_coarse(path("/person")), ContextToken::new("Lee")],
            right: vec![ContextToken::new("said")],
        };
        let ex = TrainingExample::new(ctx, [path("/person/politician")]);
        let text = write_examples_jsonl(&[ex.clone()]);
        assert!(text.contains("\"left\":[\"senator\",\"of\"]"));
        let back = read_examples_jsonl(&text).unwrap();
        assert_eq!(back, vec![ex]);
        assert!(read_examples_jsonl("{\"left\":[],\"mention\":[],\"right\":[]}\n").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ClassifierConfig::default();
        assert!(c.validate().is_ok());
        c.repr_dim = 20;
        assert!(c.validate().is_err());
        let c = ClassifierConfig {
            hidden: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
