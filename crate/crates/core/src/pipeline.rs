//! End-to-end population run: ingest → annotate → classify → populate →
//! extract relations → link prediction → export.
//!
//! Configuration is a `key = value` file; relative paths resolve against the
//! file's directory. Every stage draws its randomness from
//! `seed + fnv1a(stage name)`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotators::{apply_labeling_functions, write_candidates_tsv, write_mentions_jsonl, Annotator, EntityMention, Gazetteer, LabelingFunction, PatternRule, RelationCandidate};
use crate::classifier::{self, decode_labels, ClassifierConfig, ClassifierModel, EncoderKind, MentionContext, TrainingExample};
use crate::graphstore::{export_edgelist, export_ntriples, normalize_name, write_journal, EdgeProvenance, OntologyGraph, RelationEdge};
use crate::ingest::{corpus_stats, load_corpus, process_document, write_sentences_jsonl, CorpusStats, Sentence};
use crate::linkpred::{augment_graph, train_on_all_edges, LinkConfig, ModelKind, PersonGraph};
use crate::relembed::{self, fit_thresholds, fnv1a, with_negatives, NamedTriple, RelembedConfig, ScoreMode, Triple, TripleSpace};
use crate::scalar::sigmoid;
use crate::schema::OntologySchema;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub schema: Option<PathBuf>,
    pub gazetteers: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub lfs: Option<PathBuf>,
    pub classifier_checkpoint: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub decode_threshold: f64,
    pub link_threshold: f64,
    pub max_predicted_edges: usize,
    pub lf_confidence: f64,
    /// Relation given to predicted links the relation model cannot type.
    pub default_link_relation: String,
    pub classifier: ClassifierConfig,
    pub relembed: RelembedConfig,
    pub linkpred: LinkConfig,
    pub link_model: ModelKind,
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            schema: None,
            gazetteers: None,
            rules: None,
            lfs: None,
            classifier_checkpoint: None,
            out: out.into(),
            seed: 0,
            decode_threshold: 0.5,
            link_threshold: 0.5,
            max_predicted_edges: 5,
            lf_confidence: 1.0,
            default_link_relation: "relative_of".into(),
            classifier: ClassifierConfig {
                word_dim: 20,
                feature_dim: 5,
                repr_dim: 30,
                hidden: 10,
                window: 5,
                batch_size: 8,
                epochs: 10,
                ..Default::default()
            },
            relembed: RelembedConfig {
                dim: 16,
                sentence_dim: 16,
                bigram_buckets: 256,
                epochs: 200,
                ..Default::default()
            },
            linkpred: LinkConfig {
                hidden: 16,
                embed_dim: 16,
                epochs: 100,
                ..Default::default()
            },
            link_model: ModelKind::Pgnn,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg = Self::new(PathBuf::new(), base_dir.join("out"));
        let mut have_corpus = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| PipelineError::Config(format!("line {}: {msg}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base_dir.join(value);
            fn num<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T, PipelineError> {
                v.parse().map_err(|_| PipelineError::Config(format!("line {line}: bad value `{v}` for `{key}`")))
            }
            let n = i + 1;
            match key {
                "corpus" => {
                    cfg.corpus = path();
                    have_corpus = true;
                }
                "schema" => cfg.schema = Some(path()),
                "gazetteers" => cfg.gazetteers = Some(path()),
                "rules" => cfg.rules = Some(path()),
                "lfs" => cfg.lfs = Some(path()),
                "classifier_checkpoint" => cfg.classifier_checkpoint = Some(path()),
                "out" => cfg.out = path(),
                "seed" => cfg.seed = num(value, key, n)?,
                "decode_threshold" => cfg.decode_threshold = num(value, key, n)?,
                "link_threshold" => cfg.link_threshold = num(value, key, n)?,
                "max_predicted_edges" => cfg.max_predicted_edges = num(value, key, n)?,
                "lf_confidence" => cfg.lf_confidence = num(value, key, n)?,
                "default_link_relation" => cfg.default_link_relation = value.to_string(),
                "classifier.encoder" => cfg.classifier.encoder = EncoderKind::parse(value).ok_or_else(|| err(format!("unknown encoder `{value}`")))?,
                "classifier.epochs" => cfg.classifier.epochs = num(value, key, n)?,
                "classifier.learning_rate" => cfg.classifier.learning_rate = num(value, key, n)?,
                "classifier.use_features" => cfg.classifier.use_features = num(value, key, n)?,
                "classifier.word_dim" => cfg.classifier.word_dim = num(value, key, n)?,
                "classifier.repr_dim" => cfg.classifier.repr_dim = num(value, key, n)?,
                "classifier.hidden" => cfg.classifier.hidden = num(value, key, n)?,
                "relembed.epochs" => cfg.relembed.epochs = num(value, key, n)?,
                "relembed.dim" => cfg.relembed.dim = num(value, key, n)?,
                "relembed.lambda" => cfg.relembed.lambda = num(value, key, n)?,
                "relembed.learning_rate" => cfg.relembed.learning_rate = num(value, key, n)?,
                "linkpred.epochs" => cfg.linkpred.epochs = num(value, key, n)?,
                "linkpred.learning_rate" => cfg.linkpred.learning_rate = num(value, key, n)?,
                "linkpred.model" => cfg.link_model = ModelKind::parse(value).ok_or_else(|| err(format!("unknown link model `{value}`")))?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        if !have_corpus {
            return Err(PipelineError::Config("missing `corpus`".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Checks that every referenced input exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.corpus.is_dir() {
            return Err(PipelineError::Config(format!("corpus directory {} not found", self.corpus.display())));
        }
        for p in [&self.schema, &self.gazetteers, &self.rules, &self.lfs, &self.classifier_checkpoint].into_iter().flatten() {
            if !p.is_file() {
                return Err(PipelineError::Config(format!("{} not found", p.display())));
            }
        }
        Ok(())
    }
}

/// Seed for one stage.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    seed.wrapping_add(fnv1a(stage.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub duration_ms: u128,
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    pub seed: u64,
    pub corpus: CorpusStats,
    pub persons: usize,
    pub attributes: usize,
    pub edges: BTreeMap<String, usize>,
    pub stages: Vec<StageReport>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<EntityMention>,
    pub candidates: Vec<RelationCandidate>,
    pub graph: OntologyGraph,
    pub report: RunReport,
}

fn read(path: &Path, stage: &'static str) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| stage_err(stage)(&format!("{}: {e}", path.display())))
}

pub fn load_schema(path: Option<&Path>) -> Result<OntologySchema, PipelineError> {
    match path {
        None => Ok(OntologySchema::default_schema()),
        Some(p) => OntologySchema::parse(&read(p, "config")?).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display()))),
    }
}

/// Annotates every sentence; output is in sentence order.
pub fn annotate_sentences(sentences: &[Sentence], annotator: &Annotator) -> Vec<EntityMention> {
    sentences.par_iter().map(|s| annotator.annotate(s)).collect::<Vec<_>>().into_iter().flatten().collect()
}

fn mentions_by_sentence<'a>(mentions: &'a [EntityMention]) -> BTreeMap<(&'a str, usize), Vec<&'a EntityMention>> {
    let mut out: BTreeMap<(&str, usize), Vec<&EntityMention>> = BTreeMap::new();
    for m in mentions {
        out.entry((m.doc_id.as_str(), m.sent_index)).or_default().push(m);
    }
    out
}

fn sentence_index(sentences: &[Sentence]) -> BTreeMap<(&str, usize), &Sentence> {
    sentences.iter().map(|s| ((s.doc_id.as_str(), s.sent_index), s)).collect()
}

/// One training example per labelled mention.
pub fn classifier_examples(sentences: &[Sentence], mentions: &[EntityMention], window: usize) -> Vec<TrainingExample> {
    let index = sentence_index(sentences);
    mentions
        .iter()
        .filter(|m| m.coarse_label.is_some())
        .filter_map(|m| {
            let s = index.get(&(m.doc_id.as_str(), m.sent_index))?;
            let ctx = MentionContext::from_sentence(s, m, mentions, window);
            Some(TrainingExample::new(ctx, m.labels().cloned()))
        })
        .collect()
}

/// Adds predicted labels that fall under each mention's own coarse root.
pub fn classify_mentions(model: &ClassifierModel<f64>, sentences: &[Sentence], mentions: &[EntityMention], threshold: f64) -> Result<Vec<EntityMention>, classifier::ClassifierError> {
    let index = sentence_index(sentences);
    let mut out = Vec::with_capacity(mentions.len());
    for m in mentions {
        let mut m2 = m.clone();
        if let (Some(s), Some(coarse)) = (index.get(&(m.doc_id.as_str(), m.sent_index)), &m.coarse_label) {
            let ctx = MentionContext::from_sentence(s, m, mentions, model.config.window);
            let y = model.predict(&ctx)?;
            for label in decode_labels(&y, &model.labels, threshold) {
                if label.root() == coarse.root() && &label != coarse && !label.is_root() {
                    m2.fine_labels.insert(label);
                }
            }
        }
        out.push(m2);
    }
    Ok(out)
}

/// Canonical person name of a mention surface.
pub fn person_key(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Person nodes for person mentions; every other mention becomes an
/// attribute of the nearest preceding person in its sentence, else of the
/// document's first person.
pub fn populate(schema: OntologySchema, mentions: &[EntityMention]) -> Result<OntologyGraph, PipelineError> {
    let err = stage_err("populate");
    let mut graph = OntologyGraph::new(schema);
    let mut first_person: BTreeMap<&str, u64> = BTreeMap::new();
    let mut ordered: Vec<&EntityMention> = mentions.iter().collect();
    ordered.sort_by(|a, b| (&a.doc_id, a.sent_index, a.start_tok, a.end_tok).cmp(&(&b.doc_id, b.sent_index, b.start_tok, b.end_tok)));
    let mut person_at: BTreeMap<(&str, usize, usize), u64> = BTreeMap::new();
    for m in &ordered {
        if m.is_person() {
            let id = graph.resolve_person(m).map_err(|e| err(&e))?;
            first_person.entry(m.doc_id.as_str()).or_insert(id);
            person_at.insert((m.doc_id.as_str(), m.sent_index, m.start_tok), id);
        }
    }
    for m in &ordered {
        if m.is_person() {
            continue;
        }
        let Some(ty) = m.primary_label() else { continue };
        let preceding = person_at
            .range((m.doc_id.as_str(), m.sent_index, 0)..(m.doc_id.as_str(), m.sent_index, m.start_tok))
            .next_back()
            .map(|(_, id)| *id);
        let Some(owner) = preceding.or_else(|| first_person.get(m.doc_id.as_str()).copied()) else {
            continue;
        };
        if graph.schema().contains(ty) {
            graph.attach_attribute(owner, ty, &m.surface, m.provenance).map_err(|e| err(&e))?;
        }
    }
    Ok(graph)
}

/// Labeling-function candidates over every sentence.
pub fn extract_candidates(sentences: &[Sentence], mentions: &[EntityMention], lfs: &[LabelingFunction]) -> Vec<RelationCandidate> {
    let by_sentence = mentions_by_sentence(mentions);
    sentences
        .iter()
        .flat_map(|s| {
            let ms: Vec<EntityMention> = by_sentence
                .get(&(s.doc_id.as_str(), s.sent_index))
                .map(|v| v.iter().map(|m| (*m).clone()).collect())
                .unwrap_or_default();
            apply_labeling_functions(s, &ms, lfs)
        })
        .collect()
}

/// Candidates as training triples keyed by canonical person names.
pub fn candidate_triples(candidates: &[RelationCandidate], sentences: &[Sentence]) -> Vec<NamedTriple> {
    let index = sentence_index(sentences);
    let mut seen = BTreeSet::new();
    candidates
        .iter()
        .filter_map(|c| {
            let mut t = NamedTriple::new(person_key(&c.head.surface), c.relation.clone(), person_key(&c.tail.surface));
            if normalize_name(&t.head) == normalize_name(&t.tail) {
                return None;
            }
            if let Some(s) = index.get(&(c.doc_id.as_str(), c.sent_index)) {
                t = t.with_sentence(&s.text);
            }
            seen.insert(t.clone()).then_some(t)
        })
        .collect()
}

struct Timer {
    name: &'static str,
    start: Instant,
    counts: BTreeMap<String, usize>,
}

impl Timer {
    fn start(name: &'static str) -> Self {
        Self {
            name,
            start: Instant::now(),
            counts: BTreeMap::new(),
        }
    }

    fn count(mut self, key: &str, n: usize) -> Self {
        self.counts.insert(key.to_string(), n);
        self
    }

    fn finish(self, stages: &mut Vec<StageReport>) {
        stages.push(StageReport {
            name: self.name.to_string(),
            duration_ms: self.start.elapsed().as_millis(),
            counts: self.counts,
        });
    }
}

/// Runs every stage in memory. See [`write_outputs`] for the files.
pub fn run(config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let schema = load_schema(config.schema.as_deref())?;
    let mut stages = Vec::new();

    let t = Timer::start("ingest");
    let documents = load_corpus(&config.corpus).map_err(|e| stage_err("ingest")(&e))?;
    let sentences: Vec<Sentence> = documents.iter().flat_map(process_document).collect();
    t.count("documents", documents.len()).count("sentences", sentences.len()).finish(&mut stages);

    let t = Timer::start("annotate");
    let gazetteers = match &config.gazetteers {
        Some(p) => Gazetteer::parse_file(&read(p, "annotate")?).map_err(|e| stage_err("annotate")(&e))?,
        None => Vec::new(),
    };
    let rules = match &config.rules {
        Some(p) => PatternRule::parse_pack(&read(p, "annotate")?).map_err(|e| stage_err("annotate")(&e))?,
        None => PatternRule::default_pack(),
    };
    let annotator = Annotator::new(&gazetteers, rules);
    let mentions = annotate_sentences(&sentences, &annotator);
    t.count("mentions", mentions.len()).finish(&mut stages);

    let t = Timer::start("classify");
    let cls_err = stage_err("classify");
    let model: Option<ClassifierModel<f64>> = match &config.classifier_checkpoint {
        Some(p) => Some(classifier::read_checkpoint(&read(p, "classify")?).map_err(|e| cls_err(&e))?),
        None => {
            let examples = classifier_examples(&sentences, &mentions, config.classifier.window);
            if examples.is_empty() {
                None
            } else {
                let trained = classifier::train::<f64>(&examples, &config.classifier, stage_seed(config.seed, "classify")).map_err(|e| cls_err(&e))?;
                Some(trained.model)
            }
        }
    };
    let mentions = match &model {
        Some(m) => classify_mentions(m, &sentences, &mentions, config.decode_threshold).map_err(|e| cls_err(&e))?,
        None => mentions,
    };
    let fine = mentions.iter().map(|m| m.fine_labels.len()).sum();
    t.count("fine_labels", fine).finish(&mut stages);

    let t = Timer::start("populate");
    let mut graph = populate(schema.clone(), &mentions)?;
    let attributes: usize = graph.nodes().map(|n| n.attributes.len()).sum();
    t.count("persons", graph.num_nodes()).count("attributes", attributes).finish(&mut stages);

    let t = Timer::start("extract-relations");
    let rel_err = stage_err("extract-relations");
    let lfs = match &config.lfs {
        Some(p) => LabelingFunction::parse_file(&read(p, "extract-relations")?, &schema).map_err(|e| rel_err(&e))?,
        None => LabelingFunction::default_set(&schema).map_err(|e| rel_err(&e))?,
    };
    let candidates = extract_candidates(&sentences, &mentions, &lfs);
    let mut lf_edges = 0;
    for c in &candidates {
        let (Some(h), Some(tl)) = (graph.find_person(&c.head.surface), graph.find_person(&c.tail.surface)) else {
            continue;
        };
        if h == tl {
            continue;
        }
        let edge = RelationEdge {
            head: h,
            relation: c.relation.clone(),
            tail: tl,
            provenance: EdgeProvenance::LabelingFunction,
            confidence: config.lf_confidence,
        };
        if graph.add_relation(edge).map_err(|e| rel_err(&e))? {
            lf_edges += 1;
        }
    }
    let triples = candidate_triples(&candidates, &sentences);
    let space: Option<TripleSpace<f64>> = if triples.is_empty() {
        None
    } else {
        Some(relembed::train_embeddings(&triples, &schema, &config.relembed, stage_seed(config.seed, "extract-relations")).map_err(|e| rel_err(&e))?)
    };
    let rel_edges = match &space {
        Some(space) => add_relation_model_edges(&mut graph, space, &triples, &sentences, &mentions, &candidates, stage_seed(config.seed, "relation-model"))?,
        None => 0,
    };
    t.count("candidates", candidates.len()).count("lf_edges", lf_edges).count("rel_model_edges", rel_edges).finish(&mut stages);

    let t = Timer::start("link-predict");
    let predicted = predict_links(&mut graph, space.as_ref(), config)?;
    t.count("predicted_edges", predicted).finish(&mut stages);

    let mut edges: BTreeMap<String, usize> = BTreeMap::new();
    for e in graph.edges() {
        *edges.entry(e.provenance.as_str().to_string()).or_default() += 1;
    }
    let report = RunReport {
        report_version: REPORT_VERSION,
        seed: config.seed,
        corpus: corpus_stats(documents.len(), &sentences, &mentions),
        persons: graph.num_nodes(),
        attributes: graph.nodes().map(|n| n.attributes.len()).sum(),
        edges,
        stages,
    };
    Ok(PipelineOutput {
        sentences,
        mentions,
        candidates,
        graph,
        report,
    })
}

/// Types co-occurring person pairs that no labeling function covered.
fn add_relation_model_edges(
    graph: &mut OntologyGraph,
    space: &TripleSpace<f64>,
    triples: &[NamedTriple],
    sentences: &[Sentence],
    mentions: &[EntityMention],
    candidates: &[RelationCandidate],
    seed: u64,
) -> Result<usize, PipelineError> {
    let err = stage_err("extract-relations");
    let train: Vec<Triple> = triples.iter().map(|t| space.resolve(t)).collect::<Result<_, _>>().map_err(|e| err(&e))?;
    let known: HashSet<(usize, usize, usize)> = train.iter().map(|t| (t.head, t.rel, t.tail)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labelled = with_negatives(&train, space.num_entities(), space.num_relations(), &known, &mut rng);
    let thresholds = fit_thresholds(space, &labelled, ScoreMode::Context).map_err(|e| err(&e))?;
    let covered: BTreeSet<(String, String)> = candidates
        .iter()
        .flat_map(|c| {
            let (a, b) = (normalize_name(&c.head.surface), normalize_name(&c.tail.surface));
            [(a.clone(), b.clone()), (b, a)]
        })
        .collect();
    let by_sentence = mentions_by_sentence(mentions);
    let mut added = 0;
    for s in sentences {
        let persons: Vec<&EntityMention> = by_sentence
            .get(&(s.doc_id.as_str(), s.sent_index))
            .map(|v| v.iter().copied().filter(|m| m.is_person()).collect())
            .unwrap_or_default();
        for (i, a) in persons.iter().enumerate() {
            for b in &persons[i + 1..] {
                let (ka, kb) = (normalize_name(&a.surface), normalize_name(&b.surface));
                if ka == kb || covered.contains(&(ka, kb)) {
                    continue;
                }
                let (Some(h), Some(tl)) = (space.entity_id(&person_key(&a.surface)), space.entity_id(&person_key(&b.surface))) else {
                    continue;
                };
                let tokens = relembed::sentence_tokens(&s.text);
                let ranked = space.predict_relation(h, tl, Some(&tokens)).map_err(|e| err(&e))?;
                let Some(&(rel, energy)) = ranked.first() else { continue };
                let Some(theta) = thresholds.get(rel).copied().flatten() else { continue };
                if energy > theta {
                    continue;
                }
                let (Some(gh), Some(gt)) = (graph.find_person(&a.surface), graph.find_person(&b.surface)) else {
                    continue;
                };
                let edge = RelationEdge {
                    head: gh,
                    relation: space.relation_defs[rel].name.clone(),
                    tail: gt,
                    provenance: EdgeProvenance::RelModel,
                    confidence: sigmoid(theta - energy),
                };
                if graph.add_relation(edge).map_err(|e| err(&e))? {
                    added += 1;
                }
            }
        }
    }
    Ok(added)
}

/// Link prediction over the populated person graph; predicted links are
/// typed by the relation model when both persons are known to it.
fn predict_links(graph: &mut OntologyGraph, space: Option<&TripleSpace<f64>>, config: &PipelineConfig) -> Result<usize, PipelineError> {
    let err = stage_err("link-predict");
    let ids: Vec<u64> = graph.nodes().map(|n| n.id).collect();
    if ids.len() < 3 || graph.num_edges() == 0 {
        return Ok(0);
    }
    let pos: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut pg = PersonGraph::<f64>::with_constant_features(ids.len());
    pg.node_ids = ids.iter().map(|id| id.to_string()).collect();
    for e in graph.edges() {
        pg.add_edge(pos[&e.head], pos[&e.tail], &e.relation).map_err(|e| err(&e))?;
    }
    let trained = train_on_all_edges(&pg, config.link_model, &config.linkpred, stage_seed(config.seed, "link-predict")).map_err(|e| err(&e))?;
    let predicted = augment_graph(&pg, &trained.model, config.link_threshold).map_err(|e| err(&e))?;
    let mut added = 0;
    for p in predicted.into_iter().take(config.max_predicted_edges) {
        let (h, t) = (ids[p.u], ids[p.v]);
        let names = (graph.node(h).map(|n| n.canonical_name.clone()), graph.node(t).map(|n| n.canonical_name.clone()));
        let typed = match (space, names) {
            (Some(space), (Some(a), Some(b))) => match (space.entity_id(&a), space.entity_id(&b)) {
                (Some(x), Some(y)) => space.predict_relation(x, y, None).map_err(|e| err(&e))?.first().map(|(r, _)| space.relation_defs[*r].name.clone()),
                _ => None,
            },
            _ => None,
        };
        let relation = typed.unwrap_or_else(|| config.default_link_relation.clone());
        let edge = RelationEdge {
            head: h,
            relation,
            tail: t,
            provenance: EdgeProvenance::Predicted,
            confidence: p.score,
        };
        if graph.add_relation(edge).map_err(|e| err(&e))? {
            added += 1;
        }
    }
    Ok(added)
}

/// Writes intermediate files, graph exports and `report.json` into `out`.
pub fn write_outputs(output: &PipelineOutput, out: &Path) -> Result<(), PipelineError> {
    let err = stage_err("export");
    std::fs::create_dir_all(out).map_err(|e| err(&e))?;
    let files = [
        ("sentences.jsonl", write_sentences_jsonl(&output.sentences)),
        ("mentions.jsonl", write_mentions_jsonl(&output.mentions)),
        ("candidates.tsv", write_candidates_tsv(&output.candidates)),
        ("graph.nt", export_ntriples(&output.graph)),
        ("edges.tsv", export_edgelist(&output.graph)),
        ("journal.jsonl", write_journal(&output.graph)),
        ("report.json", serde_json::to_string_pretty(&output.report).expect("report serialises") + "\n"),
    ];
    for (name, text) in files {
        std::fs::write(out.join(name), text).map_err(|e| err(&format!("{name}: {e}")))?;
    }
    Ok(())
}

/// [`run`] followed by [`write_outputs`] into `config.out`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let output = run(config)?;
    write_outputs(&output, &config.out)?;
    Ok(output.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let base = Path::new("/tmp/base");
        let cfg = PipelineConfig::parse("# c\ncorpus = docs\nseed = 7\nlinkpred.model = gcn\n", base).unwrap();
        assert_eq!(cfg.corpus, base.join("docs"));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.link_model, ModelKind::Gcn);
        assert!(PipelineConfig::parse("seed = 1\n", base).is_err());
        assert!(PipelineConfig::parse("corpus = x\nbogus = 1\n", base).is_err());
        assert!(PipelineConfig::parse("corpus = x\nseed = abc\n", base).is_err());
    }

    #[test]
    fn stage_seeds_differ() {
        assert_ne!(stage_seed(1, "classify"), stage_seed(1, "link-predict"));
        assert_eq!(stage_seed(1, "classify"), stage_seed(1, "classify"));
    }
}
