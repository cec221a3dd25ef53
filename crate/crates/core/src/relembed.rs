//! Translational relation embeddings with an optional sentence-context term.
//!
//! A triple `(h, r, t)` has energy `‖h + r − t‖₁`. When the triple carries a
//! sentence, a deep averaging network (DAN) turns it into `s` and the context
//! energy adds `λ‖P s − r‖₁`. Training minimises the margin ranking loss
//! `max(0, γ + f(pos) − f(neg))` by SGD with filtered corruption.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::Vocab;
use crate::linalg::{axpy, l1_norm, normalize_l2, read_matrix, sign, write_matrix, Matrix};
use crate::scalar::Scalar;
use crate::schema::{OntologySchema, RelationDef};

#[derive(Debug, Error)]
pub enum RelembedError {
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("no training triples")]
    EmptyTriples,
    #[error("triple carries no sentence")]
    MissingSentence,
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown id {0}")]
    UnknownId(usize),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("head equals tail for irreflexive relation `{0}`")]
    SelfLoop(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelembedConfig {
    pub dim: usize,
    pub sentence_dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub bigram_buckets: usize,
    /// Maximum number of triples added by transitive closure.
    pub closure_cap: usize,
}

impl Default for RelembedConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            sentence_dim: 64,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 100,
            lambda: 0.5,
            bigram_buckets: 2048,
            closure_cap: 1000,
        }
    }
}

/// Triple over entity and relation names, as read from a TSV file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NamedTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub sentence: Option<Vec<String>>,
}

impl NamedTriple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
            sentence: None,
        }
    }

    pub fn with_sentence(mut self, text: &str) -> Self {
        self.sentence = Some(sentence_tokens(text));
        self
    }
}

/// Lower-cased tokens of a context sentence.
pub fn sentence_tokens(text: &str) -> Vec<String> {
    crate::ingest::tokenize(text, 0).into_iter().map(|t| t.text.to_lowercase()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: usize,
    pub rel: usize,
    pub tail: usize,
    pub sentence: Option<Vec<String>>,
}

impl Triple {
    pub fn new(head: usize, rel: usize, tail: usize) -> Self {
        Self {
            head,
            rel,
            tail,
            sentence: None,
        }
    }

    fn key(&self) -> (usize, usize, usize) {
        (self.head, self.rel, self.tail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding<S> {
    pub vector: Vec<S>,
    pub source_hash: u64,
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deep averaging network: mean of unigram and hashed-bigram embeddings,
/// then two tanh layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dan<S> {
    pub vocab: Vocab,
    pub words: Matrix<S>,
    pub bigrams: Matrix<S>,
    pub w1: Matrix<S>,
    pub b1: Matrix<S>,
    pub w2: Matrix<S>,
    pub b2: Matrix<S>,
}

#[derive(Debug, Clone)]
pub struct DanCache<S> {
    word_ids: Vec<usize>,
    bigram_ids: Vec<usize>,
    x: Vec<S>,
    h1: Vec<S>,
    s: Vec<S>,
}

/// Gradients of the DAN; table gradients are kept per touched row.
#[derive(Debug, Clone)]
pub struct DanGrad<S> {
    pub words: BTreeMap<usize, Vec<S>>,
    pub bigrams: BTreeMap<usize, Vec<S>>,
    pub w1: Matrix<S>,
    pub b1: Vec<S>,
    pub w2: Matrix<S>,
    pub b2: Vec<S>,
}

impl<S: Scalar> Dan<S> {
    pub fn new<R: Rng>(vocab: Vocab, dim: usize, buckets: usize, rng: &mut R) -> Self {
        let words = Matrix::uniform(vocab.len(), dim, 0.1, rng);
        Self {
            vocab,
            words,
            bigrams: Matrix::uniform(buckets.max(1), dim, 0.1, rng),
            w1: Matrix::xavier(dim, dim, rng),
            b1: Matrix::zeros(1, dim),
            w2: Matrix::xavier(dim, dim, rng),
            b2: Matrix::zeros(1, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.words.cols()
    }

    fn bigram_id(&self, a: &str, b: &str) -> usize {
        (fnv1a(format!("{a} {b}").as_bytes()) % self.bigrams.rows() as u64) as usize
    }

    pub fn forward(&self, tokens: &[String]) -> Result<(SentenceEmbedding<S>, DanCache<S>), RelembedError> {
        if tokens.is_empty() {
            return Err(RelembedError::EmptySentence);
        }
        let word_ids: Vec<usize> = tokens.iter().map(|t| self.vocab.get(t)).collect();
        let bigram_ids: Vec<usize> = tokens.windows(2).map(|w| self.bigram_id(&w[0], &w[1])).collect();
        let d = self.dim();
        let mut x = vec![S::zero(); d];
        for &w in &word_ids {
            axpy(S::one(), self.words.row(w), &mut x);
        }
        for &b in &bigram_ids {
            axpy(S::one(), self.bigrams.row(b), &mut x);
        }
        let n = S::from_usize_lossy(word_ids.len() + bigram_ids.len());
        x.iter_mut().for_each(|v| *v /= n);
        let h1: Vec<S> = self
            .w1
            .matvec(&x)
            .into_iter()
            .zip(self.b1.row(0))
            .map(|(z, &b)| (z + b).tanh())
            .collect();
        let s: Vec<S> = self
            .w2
            .matvec(&h1)
            .into_iter()
            .zip(self.b2.row(0))
            .map(|(z, &b)| (z + b).tanh())
            .collect();
        let source_hash = fnv1a(tokens.join(" ").as_bytes());
        Ok((
            SentenceEmbedding {
                vector: s.clone(),
                source_hash,
            },
            DanCache {
                word_ids,
                bigram_ids,
                x,
                h1,
                s,
            },
        ))
    }

    pub fn backward(&self, cache: &DanCache<S>, ds: &[S]) -> DanGrad<S> {
        let dz2: Vec<S> = ds.iter().zip(&cache.s).map(|(&g, &s)| g * (S::one() - s * s)).collect();
        let mut w2 = Matrix::zeros(self.w2.rows(), self.w2.cols());
        w2.add_outer(S::one(), &dz2, &cache.h1);
        let dh1 = self.w2.matvec_t(&dz2);
        let dz1: Vec<S> = dh1.iter().zip(&cache.h1).map(|(&g, &h)| g * (S::one() - h * h)).collect();
        let mut w1 = Matrix::zeros(self.w1.rows(), self.w1.cols());
        w1.add_outer(S::one(), &dz1, &cache.x);
        let n = S::from_usize_lossy(cache.word_ids.len() + cache.bigram_ids.len());
        let dx: Vec<S> = self.w1.matvec_t(&dz1).into_iter().map(|g| g / n).collect();
        let mut words: BTreeMap<usize, Vec<S>> = BTreeMap::new();
        for &w in &cache.word_ids {
            axpy(S::one(), &dx, words.entry(w).or_insert_with(|| vec![S::zero(); dx.len()]));
        }
        let mut bigrams: BTreeMap<usize, Vec<S>> = BTreeMap::new();
        for &b in &cache.bigram_ids {
            axpy(S::one(), &dx, bigrams.entry(b).or_insert_with(|| vec![S::zero(); dx.len()]));
        }
        DanGrad {
            words,
            bigrams,
            w1,
            b1: dz1,
            w2,
            b2: dz2,
        }
    }

    pub fn apply(&mut self, grad: &DanGrad<S>, lr: S) {
        for (&w, g) in &grad.words {
            axpy(-lr, g, self.words.row_mut(w));
        }
        for (&b, g) in &grad.bigrams {
            axpy(-lr, g, self.bigrams.row_mut(b));
        }
        self.w1.sgd_step(lr, &grad.w1);
        axpy(-lr, &grad.b1, self.b1.row_mut(0));
        self.w2.sgd_step(lr, &grad.w2);
        axpy(-lr, &grad.b2, self.b2.row_mut(0));
    }
}

/// Embeds a token list with `dan`.
pub fn dan_sentence_embed<S: Scalar>(tokens: &[String], dan: &Dan<S>) -> Result<SentenceEmbedding<S>, RelembedError> {
    Ok(dan.forward(tokens)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleSpace<S> {
    pub entity_names: Vec<String>,
    pub relation_defs: Vec<RelationDef>,
    /// |E| × k, rows unit L2.
    pub entities: Matrix<S>,
    /// |R| × k
    pub relations: Matrix<S>,
    /// k × d_s
    pub context_proj: Matrix<S>,
    pub dan: Dan<S>,
    pub lambda: S,
    pub margin: S,
}

/// Which energy to score a triple with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    Plain,
    /// Context energy for triples carrying a sentence, plain energy otherwise.
    Context,
}

/// Sparse subgradient of one margin pair.
#[derive(Debug, Clone)]
pub struct PairGrad<S> {
    pub entities: BTreeMap<usize, Vec<S>>,
    pub relations: BTreeMap<usize, Vec<S>>,
    pub context_proj: Option<Matrix<S>>,
    pub dan: Option<DanGrad<S>>,
}

fn add_row<S: Scalar>(map: &mut BTreeMap<usize, Vec<S>>, idx: usize, alpha: S, g: &[S]) {
    axpy(alpha, g, map.entry(idx).or_insert_with(|| vec![S::zero(); g.len()]));
}

impl<S: Scalar> TripleSpace<S> {
    pub fn new<R: Rng>(entity_names: Vec<String>, relation_defs: Vec<RelationDef>, vocab: Vocab, config: &RelembedConfig, rng: &mut R) -> Self {
        let k = config.dim;
        let bound = 6.0 / (k as f64).sqrt();
        let mut entities = Matrix::uniform(entity_names.len(), k, bound, rng);
        for r in 0..entities.rows() {
            normalize_l2(entities.row_mut(r));
        }
        let mut relations = Matrix::uniform(relation_defs.len(), k, bound, rng);
        for r in 0..relations.rows() {
            normalize_l2(relations.row_mut(r));
        }
        let context_proj = Matrix::xavier(k, config.sentence_dim, rng);
        let dan = Dan::new(vocab, config.sentence_dim, config.bigram_buckets, rng);
        Self {
            entity_names,
            relation_defs,
            entities,
            relations,
            context_proj,
            dan,
            lambda: S::lit(config.lambda),
            margin: S::lit(config.margin),
        }
    }

    pub fn dim(&self) -> usize {
        self.entities.cols()
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_defs.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_names.iter().position(|n| n == name)
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_defs.iter().position(|r| r.name == name)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut s = self.clone();
        s.lambda = S::lit(lambda);
        s
    }

    pub fn resolve(&self, t: &NamedTriple) -> Result<Triple, RelembedError> {
        let head = self.entity_id(&t.head).ok_or_else(|| RelembedError::UnknownEntity(t.head.clone()))?;
        let tail = self.entity_id(&t.tail).ok_or_else(|| RelembedError::UnknownEntity(t.tail.clone()))?;
        let rel = self
            .relation_id(&t.relation)
            .ok_or_else(|| RelembedError::UnknownRelation(t.relation.clone()))?;
        if head == tail {
            return Err(RelembedError::SelfLoop(t.relation.clone()));
        }
        Ok(Triple {
            head,
            rel,
            tail,
            sentence: t.sentence.clone(),
        })
    }

    fn check(&self, t: &Triple) -> Result<(), RelembedError> {
        for id in [t.head, t.tail] {
            if id >= self.num_entities() {
                return Err(RelembedError::UnknownId(id));
            }
        }
        if t.rel >= self.num_relations() {
            return Err(RelembedError::UnknownId(t.rel));
        }
        Ok(())
    }

    fn residual(&self, t: &Triple) -> Vec<S> {
        let h = self.entities.row(t.head);
        let r = self.relations.row(t.rel);
        let tl = self.entities.row(t.tail);
        (0..self.dim()).map(|i| h[i] + r[i] - tl[i]).collect()
    }

    fn context_residual(&self, rel: usize, s: &[S]) -> Vec<S> {
        let ps = self.context_proj.matvec(s);
        ps.iter().zip(self.relations.row(rel)).map(|(&a, &b)| a - b).collect()
    }

    /// `‖h + r − t‖₁`
    pub fn energy(&self, t: &Triple) -> Result<S, RelembedError> {
        self.check(t)?;
        Ok(l1_norm(&self.residual(t)))
    }

    /// `‖h + r − t‖₁ + λ‖P s − r‖₁`
    pub fn energy_with_context(&self, t: &Triple, s: &SentenceEmbedding<S>) -> Result<S, RelembedError> {
        let base = self.energy(t)?;
        if self.lambda == S::zero() {
            return Ok(base);
        }
        Ok(base + self.lambda * l1_norm(&self.context_residual(t.rel, &s.vector)))
    }

    pub fn embed_sentence(&self, t: &Triple) -> Result<SentenceEmbedding<S>, RelembedError> {
        let tokens = t.sentence.as_ref().ok_or(RelembedError::MissingSentence)?;
        dan_sentence_embed(tokens, &self.dan)
    }

    pub fn score(&self, t: &Triple, mode: ScoreMode) -> Result<S, RelembedError> {
        match (mode, &t.sentence) {
            (ScoreMode::Context, Some(_)) => self.energy_with_context(t, &self.embed_sentence(t)?),
            _ => self.energy(t),
        }
    }

    /// Hinge value and subgradient for one (positive, corrupted) pair. Both
    /// triples share the positive's sentence, if any.
    pub fn pair_gradient(&self, pos: &Triple, neg: &Triple) -> Result<(S, Option<PairGrad<S>>), RelembedError> {
        let context = match &pos.sentence {
            Some(tokens) if self.lambda != S::zero() => Some(self.dan.forward(tokens)?),
            _ => None,
        };
        let energy = |t: &Triple| -> Result<S, RelembedError> {
            match &context {
                Some((s, _)) => self.energy_with_context(t, s),
                None => self.energy(t),
            }
        };
        let loss = self.margin + energy(pos)? - energy(neg)?;
        if loss <= S::zero() {
            return Ok((S::zero(), None));
        }
        let mut grad = PairGrad {
            entities: BTreeMap::new(),
            relations: BTreeMap::new(),
            context_proj: None,
            dan: None,
        };
        for (t, sgn) in [(pos, S::one()), (neg, -S::one())] {
            let g: Vec<S> = self.residual(t).into_iter().map(sign).collect();
            add_row(&mut grad.entities, t.head, sgn, &g);
            add_row(&mut grad.relations, t.rel, sgn, &g);
            add_row(&mut grad.entities, t.tail, -sgn, &g);
        }
        if let Some((s, cache)) = &context {
            let mut dp = Matrix::zeros(self.context_proj.rows(), self.context_proj.cols());
            let mut ds = vec![S::zero(); s.vector.len()];
            for (t, sgn) in [(pos, S::one()), (neg, -S::one())] {
                let g: Vec<S> = self.context_residual(t.rel, &s.vector).into_iter().map(sign).collect();
                let w = sgn * self.lambda;
                add_row(&mut grad.relations, t.rel, -w, &g);
                dp.add_outer(w, &g, &s.vector);
                axpy(w, &self.context_proj.matvec_t(&g), &mut ds);
            }
            grad.dan = Some(self.dan.backward(cache, &ds));
            grad.context_proj = Some(dp);
        }
        Ok((loss, Some(grad)))
    }

    /// SGD step followed by renormalising the touched entity rows.
    pub fn apply(&mut self, grad: &PairGrad<S>, lr: S) {
        for (&e, g) in &grad.entities {
            axpy(-lr, g, self.entities.row_mut(e));
            normalize_l2(self.entities.row_mut(e));
        }
        for (&r, g) in &grad.relations {
            axpy(-lr, g, self.relations.row_mut(r));
        }
        if let Some(dp) = &grad.context_proj {
            self.context_proj.sgd_step(lr, dp);
        }
        if let Some(dg) = &grad.dan {
            self.dan.apply(dg, lr);
        }
    }

    /// Relations ranked by ascending energy; ties keep relation index order.
    pub fn predict_relation(&self, head: usize, tail: usize, sentence: Option<&[String]>) -> Result<Vec<(usize, S)>, RelembedError> {
        let s = match sentence {
            Some(tokens) => Some(dan_sentence_embed(tokens, &self.dan)?),
            None => None,
        };
        let mut out = Vec::with_capacity(self.num_relations());
        for rel in 0..self.num_relations() {
            let t = Triple::new(head, rel, tail);
            let e = match &s {
                Some(s) => self.energy_with_context(&t, s)?,
                None => self.energy(&t)?,
            };
            out.push((rel, e));
        }
        out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.entities.is_finite() && self.relations.is_finite() && self.context_proj.is_finite() && self.dan.words.is_finite()
    }
}

/// Adds reversed triples for symmetric relations and a capped one-step
/// closure for transitive ones.
pub fn augment_triples(triples: &[Triple], relations: &[RelationDef], closure_cap: usize) -> Vec<Triple> {
    let mut seen: HashSet<(usize, usize, usize)> = triples.iter().map(Triple::key).collect();
    let mut out = triples.to_vec();
    for t in triples {
        if relations[t.rel].symmetric {
            let rev = Triple {
                head: t.tail,
                rel: t.rel,
                tail: t.head,
                sentence: t.sentence.clone(),
            };
            if seen.insert(rev.key()) {
                out.push(rev);
            }
        }
    }
    let mut added = 0;
    'outer: for a in triples {
        if !relations[a.rel].transitive {
            continue;
        }
        for b in triples {
            if b.rel != a.rel || b.head != a.tail || a.head == b.tail {
                continue;
            }
            if added >= closure_cap {
                break 'outer;
            }
            let t = Triple::new(a.head, a.rel, b.tail);
            if seen.insert(t.key()) {
                out.push(t);
                added += 1;
            }
        }
    }
    out
}

/// Corrupts head or tail (and, for sentence-bearing triples when
/// `corrupt_relation` is set, the relation) until the result is unknown.
/// Gives up after 20 attempts.
pub fn corrupt<R: Rng>(t: &Triple, num_entities: usize, num_relations: usize, known: &HashSet<(usize, usize, usize)>, corrupt_relation: bool, rng: &mut R) -> Option<Triple> {
    for _ in 0..20 {
        let mut c = t.clone();
        let choice = if corrupt_relation && num_relations > 1 { rng.gen_range(0..3) } else { rng.gen_range(0..2) };
        match choice {
            0 => c.head = rng.gen_range(0..num_entities),
            1 => c.tail = rng.gen_range(0..num_entities),
            _ => c.rel = rng.gen_range(0..num_relations),
        }
        if c.head != c.tail && !known.contains(&c.key()) {
            return Some(c);
        }
    }
    None
}

/// Trains a space over the schema's relations. Entities are the sorted union
/// of names in `triples`.
pub fn train_embeddings<S: Scalar>(triples: &[NamedTriple], schema: &OntologySchema, config: &RelembedConfig, seed: u64) -> Result<TripleSpace<S>, RelembedError> {
    if triples.is_empty() {
        return Err(RelembedError::EmptyTriples);
    }
    let names: BTreeSet<&str> = triples.iter().flat_map(|t| [t.head.as_str(), t.tail.as_str()]).collect();
    let vocab = Vocab::new(triples.iter().flat_map(|t| t.sentence.iter().flatten()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut space = TripleSpace::new(
        names.into_iter().map(String::from).collect(),
        schema.relations().to_vec(),
        vocab,
        config,
        &mut rng,
    );
    let resolved: Vec<Triple> = triples.iter().map(|t| space.resolve(t)).collect::<Result<_, _>>()?;
    fit(&mut space, &resolved, config.epochs, config.learning_rate, config.closure_cap, &mut rng)?;
    Ok(space)
}

/// Runs `epochs` passes of margin-ranking SGD; returns the mean hinge per epoch.
pub fn fit<S: Scalar, R: Rng>(space: &mut TripleSpace<S>, triples: &[Triple], epochs: usize, learning_rate: f64, closure_cap: usize, rng: &mut R) -> Result<Vec<f64>, RelembedError> {
    if triples.is_empty() {
        return Err(RelembedError::EmptyTriples);
    }
    let train = augment_triples(triples, &space.relation_defs, closure_cap);
    let known: HashSet<(usize, usize, usize)> = train.iter().map(Triple::key).collect();
    let lr = S::lit(learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for &i in &order {
            let pos = &train[i];
            let with_context = pos.sentence.is_some() && space.lambda != S::zero();
            let Some(neg) = corrupt(pos, space.num_entities(), space.num_relations(), &known, with_context, rng) else {
                continue;
            };
            let (loss, grad) = space.pair_gradient(pos, &neg)?;
            total += loss.as_f64();
            if let Some(g) = grad {
                if lr != S::zero() {
                    space.apply(&g, lr);
                }
            }
        }
        history.push(total / train.len() as f64);
    }
    Ok(history)
}

/// Per-relation thresholds maximising accuracy of `energy ≤ θ` on labelled
/// validation triples. Relations without validation data get no threshold.
pub fn fit_thresholds<S: Scalar>(space: &TripleSpace<S>, labelled: &[(Triple, bool)], mode: ScoreMode) -> Result<Vec<Option<S>>, RelembedError> {
    let mut per_rel: Vec<Vec<(S, bool)>> = vec![Vec::new(); space.num_relations()];
    for (t, label) in labelled {
        per_rel[t.rel].push((space.score(t, mode)?, *label));
    }
    Ok(per_rel
        .into_iter()
        .map(|mut scored| {
            if scored.is_empty() {
                return None;
            }
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            let negatives = scored.iter().filter(|(_, l)| !l).count();
            // threshold below everything: all negatives correct
            let mut best = (negatives, scored[0].0 - S::one());
            let mut correct = negatives;
            for i in 0..scored.len() {
                correct = if scored[i].1 { correct + 1 } else { correct - 1 };
                if i + 1 < scored.len() && scored[i + 1].0 == scored[i].0 {
                    continue;
                }
                if correct > best.0 {
                    let theta = match scored.get(i + 1) {
                        Some(next) => (scored[i].0 + next.0) / S::lit(2.0),
                        None => scored[i].0 + S::one(),
                    };
                    best = (correct, theta);
                }
            }
            Some(best.1)
        })
        .collect())
}

pub fn classify_triple<S: Scalar>(t: &Triple, space: &TripleSpace<S>, thresholds: &[Option<S>], mode: ScoreMode) -> Result<bool, RelembedError> {
    let theta = thresholds
        .get(t.rel)
        .copied()
        .flatten()
        .ok_or_else(|| RelembedError::UnknownRelation(space.relation_defs.get(t.rel).map_or(t.rel.to_string(), |r| r.name.clone())))?;
    Ok(space.score(t, mode)? <= theta)
}

/// Accuracy of [`classify_triple`] over labelled triples.
pub fn triple_accuracy<S: Scalar>(space: &TripleSpace<S>, thresholds: &[Option<S>], labelled: &[(Triple, bool)], mode: ScoreMode) -> Result<f64, RelembedError> {
    if labelled.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (t, label) in labelled {
        if classify_triple(t, space, thresholds, mode)? == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / labelled.len() as f64)
}

/// Each positive paired with one filtered corruption (head or tail).
pub fn with_negatives<R: Rng>(positives: &[Triple], num_entities: usize, num_relations: usize, known: &HashSet<(usize, usize, usize)>, rng: &mut R) -> Vec<(Triple, bool)> {
    let mut out = Vec::with_capacity(2 * positives.len());
    for t in positives {
        out.push((t.clone(), true));
        if let Some(c) = corrupt(t, num_entities, num_relations, known, false, rng) {
            out.push((c, false));
        }
    }
    out
}

pub fn read_triples_tsv(text: &str) -> Result<Vec<NamedTriple>, RelembedError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 3 || f.len() > 4 || f[..3].iter().any(|s| s.is_empty()) {
            return Err(RelembedError::Format {
                line: i + 1,
                msg: "expected `head<TAB>relation<TAB>tail[<TAB>sentence]`".into(),
            });
        }
        let mut t = NamedTriple::new(f[0], f[1], f[2]);
        if let Some(s) = f.get(3).filter(|s| !s.trim().is_empty()) {
            t = t.with_sentence(s);
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_triples_tsv(triples: &[NamedTriple]) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = write!(out, "{}\t{}\t{}", t.head, t.relation, t.tail);
        if let Some(s) = &t.sentence {
            let _ = write!(out, "\t{}", s.join(" "));
        }
        out.push('\n');
    }
    out
}

const MAGIC: &str = "ontopop-relembed 1";

fn io_err(path: &Path, source: std::io::Error) -> RelembedError {
    RelembedError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn ferr(line: usize, msg: impl Into<String>) -> RelembedError {
    RelembedError::Format { line, msg: msg.into() }
}

/// Writes `space.txt`, `entities.tsv` and `relations.tsv` into `dir`.
pub fn save_space<S: Scalar>(space: &TripleSpace<S>, dir: &Path) -> Result<(), RelembedError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(
        out,
        "entities {} relations {} dim {} sentence_dim {} lambda {} margin {}",
        space.num_entities(),
        space.num_relations(),
        space.dim(),
        space.dan.dim(),
        space.lambda.as_f64(),
        space.margin.as_f64()
    );
    let _ = writeln!(out, "vocab {}", space.dan.vocab.len());
    for w in space.dan.vocab.tokens() {
        let _ = writeln!(out, "{w}");
    }
    write_matrix(&mut out, "entities", &space.entities);
    write_matrix(&mut out, "relations", &space.relations);
    write_matrix(&mut out, "context_proj", &space.context_proj);
    write_matrix(&mut out, "dan_words", &space.dan.words);
    write_matrix(&mut out, "dan_bigrams", &space.dan.bigrams);
    write_matrix(&mut out, "dan_w1", &space.dan.w1);
    write_matrix(&mut out, "dan_b1", &space.dan.b1);
    write_matrix(&mut out, "dan_w2", &space.dan.w2);
    write_matrix(&mut out, "dan_b2", &space.dan.b2);
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| io_err(&p, e))
    };
    write("space.txt", out)?;
    let mut ents = String::new();
    for (i, n) in space.entity_names.iter().enumerate() {
        let _ = writeln!(ents, "{i}\t{n}");
    }
    write("entities.tsv", ents)?;
    let mut rels = String::new();
    for (i, r) in space.relation_defs.iter().enumerate() {
        let _ = writeln!(
            rels,
            "{i}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.name, r.symmetric, r.transitive, r.hierarchical, r.domain_type, r.range_type
        );
    }
    write("relations.tsv", rels)
}

pub fn load_space<S: Scalar>(dir: &Path) -> Result<TripleSpace<S>, RelembedError> {
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))
    };
    let entity_names: Vec<String> = read("entities.tsv")?
        .lines()
        .enumerate()
        .map(|(i, l)| match l.split_once('\t') {
            Some((id, name)) if id.parse() == Ok(i) => Ok(name.to_string()),
            _ => Err(ferr(i + 1, "bad entity id line")),
        })
        .collect::<Result<_, _>>()?;
    let mut relation_defs = Vec::new();
    for (i, l) in read("relations.tsv")?.lines().enumerate() {
        let f: Vec<&str> = l.split('\t').collect();
        let flag = |s: &str| s.parse::<bool>().map_err(|_| ferr(i + 1, format!("bad flag `{s}`")));
        if f.len() != 7 || f[0].parse() != Ok(i) {
            return Err(ferr(i + 1, "bad relation line"));
        }
        let path = |s: &str| s.parse().map_err(|e: crate::schema::SchemaError| ferr(i + 1, e.to_string()));
        relation_defs.push(RelationDef {
            name: f[1].to_string(),
            symmetric: flag(f[2])?,
            transitive: flag(f[3])?,
            hierarchical: flag(f[4])?,
            domain_type: path(f[5])?,
            range_type: path(f[6])?,
        });
    }
    let text = read("space.txt")?;
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(MAGIC) {
        return Err(ferr(1, "not a relation-embedding checkpoint"));
    }
    let (_, header) = lines.next().ok_or_else(|| ferr(2, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let get = |key: &str| -> Result<f64, RelembedError> {
        h.iter()
            .position(|k| *k == key)
            .and_then(|i| h.get(i + 1))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ferr(2, format!("missing header key `{key}`")))
    };
    if get("entities")? as usize != entity_names.len() || get("relations")? as usize != relation_defs.len() {
        return Err(ferr(2, "header counts disagree with id maps"));
    }
    let (lambda, margin) = (get("lambda")?, get("margin")?);
    let (i, vl) = lines.next().ok_or_else(|| ferr(3, "missing vocab"))?;
    let n: usize = vl
        .strip_prefix("vocab ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ferr(i + 1, "expected `vocab <n>`"))?;
    let tokens: Vec<String> = (0..n).map_while(|_| lines.next().map(|(_, l)| l.to_string())).collect();
    if tokens.len() != n {
        return Err(ferr(0, "truncated vocab"));
    }
    let mut m = |name: &str| read_matrix::<S>(&mut lines, name).map_err(|e| ferr(0, e));
    let entities = m("entities")?;
    let relations = m("relations")?;
    let context_proj = m("context_proj")?;
    let dan = Dan {
        vocab: Vocab::from_list(tokens),
        words: m("dan_words")?,
        bigrams: m("dan_bigrams")?,
        w1: m("dan_w1")?,
        b1: m("dan_b1")?,
        w2: m("dan_w2")?,
        b2: m("dan_b2")?,
    };
    Ok(TripleSpace {
        entity_names,
        relation_defs,
        entities,
        relations,
        context_proj,
        dan,
        lambda: S::lit(lambda),
        margin: S::lit(margin),
    })
}
