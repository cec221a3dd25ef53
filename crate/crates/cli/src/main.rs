use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ontopop::annotators::{read_candidates_tsv, read_mentions_jsonl, write_candidates_tsv, write_mentions_jsonl, Annotator, Gazetteer, LabelingFunction, PatternRule};
use ontopop::classifier::{self, evaluate, ClassifierError, EncoderKind};
use ontopop::graphstore::{export_edgelist, export_ntriples, replay_journal, write_journal, EdgeProvenance, RelationEdge};
use ontopop::ingest::{corpus_stats, load_corpus, process_document, read_sentences_jsonl, write_sentences_jsonl, Sentence};
use ontopop::linkpred::{self, augment_graph, read_edge_list, read_node_features, train_link_predictor, EdgeSplit, LinkConfig, ModelKind};
use ontopop::pipeline::{self, annotate_sentences, classifier_examples, classify_mentions, extract_candidates, stage_seed, PipelineConfig};
use ontopop::relembed::{self, read_triples_tsv, save_space, RelembedConfig};
use ontopop::schema::OntologySchema;
use ontopop::{LinkModel, PersonGraph};

#[derive(Parser)]
#[command(name = "ontopop", version, about = "Populate a person ontology from text")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pipeline configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SchemaArg {
    /// Schema file; the built-in schema when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Split a corpus directory into sentences.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Gazetteer and pattern annotation.
    Annotate {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        gazetteers: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Train the fine-grained type classifier on annotated mentions.
    TrainClassifier {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
        #[arg(long, default_value = "averaging")]
        encoder: String,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long)]
        no_features: bool,
    },
    /// Add predicted fine types to mentions.
    Classify {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Train relation embeddings from `head relation tail [sentence]` TSV.
    TrainRelemb {
        #[arg(long)]
        triples: PathBuf,
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
    /// Run labeling functions over annotated sentences.
    ExtractRelations {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
        #[arg(long)]
        lfs: Option<PathBuf>,
        #[command(flatten)]
        schema: SchemaArg,
    },
    /// Train a link predictor on an edge list and report held-out AUC.
    TrainLinkpred {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, default_value = "pgnn")]
        model: String,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
    },
    /// Score non-edges with a trained link predictor.
    LinkPredict {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Build the graph journal from mentions and candidates.
    Populate {
        #[arg(long)]
        mentions: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[command(flatten)]
        schema: SchemaArg,
    },
    /// Export a journal as N-Triples or an edge list.
    Export {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long, default_value = "nt")]
        format: String,
        #[command(flatten)]
        schema: SchemaArg,
    },
    /// Corpus statistics as JSON.
    Stats {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
    },
    /// Micro and macro F1 of predicted mention types against gold.
    Eval {
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Full pipeline from a configuration file.
    Run,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(out: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn sentences(path: &Path) -> Result<Vec<Sentence>> {
    Ok(read_sentences_jsonl(&read(path)?)?)
}

fn mentions(path: &Path) -> Result<Vec<ontopop::annotators::EntityMention>> {
    Ok(read_mentions_jsonl(&read(path)?)?)
}

fn schema(arg: &SchemaArg, config: Option<&PipelineConfig>) -> Result<OntologySchema> {
    let path = arg.schema.clone().or_else(|| config.and_then(|c| c.schema.clone()));
    Ok(pipeline::load_schema(path.as_deref())?)
}

fn link_graph(edges: &Path, features: Option<&Path>) -> Result<PersonGraph> {
    let mut g = read_edge_list(&read(edges)?)?;
    if let Some(f) = features {
        read_node_features(&mut g, &read(f)?)?;
    }
    Ok(g)
}

fn link_kind(name: &str) -> Result<ModelKind> {
    ModelKind::parse(name).with_context(|| format!("unknown link model `{name}`"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = cli.config.as_deref().map(PipelineConfig::load).transpose()?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Ingest { corpus } => {
            let docs = load_corpus(corpus)?;
            let sents: Vec<Sentence> = docs.iter().flat_map(process_document).collect();
            let path = write(out, "sentences.jsonl", &write_sentences_jsonl(&sents))?;
            println!("{} documents, {} sentences -> {}", docs.len(), sents.len(), path.display());
        }
        Command::Annotate { sentences: s, gazetteers, rules } => {
            let gaz = match gazetteers {
                Some(p) => Gazetteer::parse_file(&read(p)?)?,
                None => Vec::new(),
            };
            let rules = match rules {
                Some(p) => PatternRule::parse_pack(&read(p)?)?,
                None => PatternRule::default_pack(),
            };
            let ms = annotate_sentences(&sentences(s)?, &Annotator::new(&gaz, rules));
            let path = write(out, "mentions.jsonl", &write_mentions_jsonl(&ms))?;
            println!("{} mentions -> {}", ms.len(), path.display());
        }
        Command::TrainClassifier { sentences: s, mentions: m, encoder, epochs, no_features } => {
            let mut cfg = config.as_ref().map(|c| c.classifier.clone()).unwrap_or_else(|| PipelineConfig::new("", "").classifier);
            cfg.encoder = EncoderKind::parse(encoder).with_context(|| format!("unknown encoder `{encoder}`"))?;
            cfg.epochs = *epochs;
            cfg.use_features = !no_features;
            let examples = classifier_examples(&sentences(s)?, &mentions(m)?, cfg.window);
            if examples.is_empty() {
                bail!("no labelled mentions to train on");
            }
            let trained = classifier::train::<f64>(&examples, &cfg, stage_seed(cli.seed, "classify"))?;
            let path = write(out, "classifier.ckpt", &classifier::write_checkpoint(&trained.model))?;
            println!("{} examples, final loss {:.4} -> {}", examples.len(), trained.loss_history.last().copied().unwrap_or(f64::NAN), path.display());
        }
        Command::Classify { sentences: s, mentions: m, checkpoint, threshold } => {
            let ckpt = checkpoint.clone().or_else(|| config.as_ref().and_then(|c| c.classifier_checkpoint.clone())).ok_or(ClassifierError::MissingModel)?;
            let model = classifier::read_checkpoint::<f64>(&read(&ckpt)?)?;
            let ms = classify_mentions(&model, &sentences(s)?, &mentions(m)?, *threshold)?;
            let path = write(out, "mentions.classified.jsonl", &write_mentions_jsonl(&ms))?;
            println!("{} mentions -> {}", ms.len(), path.display());
        }
        Command::TrainRelemb { triples, schema: sa, epochs, lambda } => {
            let schema = schema(sa, config.as_ref())?;
            let named = read_triples_tsv(&read(triples)?)?;
            let cfg = RelembedConfig {
                epochs: *epochs,
                lambda: *lambda,
                ..config.as_ref().map(|c| c.relembed.clone()).unwrap_or_default()
            };
            let space = relembed::train_embeddings::<f64>(&named, &schema, &cfg, stage_seed(cli.seed, "extract-relations"))?;
            let dir = out.join("relemb");
            save_space(&space, &dir)?;
            println!("{} triples, {} entities -> {}", named.len(), space.num_entities(), dir.display());
        }
        Command::ExtractRelations { sentences: s, mentions: m, lfs, schema: sa } => {
            let schema = schema(sa, config.as_ref())?;
            let lfs = match lfs {
                Some(p) => LabelingFunction::parse_file(&read(p)?, &schema)?,
                None => LabelingFunction::default_set(&schema)?,
            };
            let cands = extract_candidates(&sentences(s)?, &mentions(m)?, &lfs);
            let path = write(out, "candidates.tsv", &write_candidates_tsv(&cands))?;
            println!("{} candidates -> {}", cands.len(), path.display());
        }
        Command::TrainLinkpred { edges, features, model, epochs } => {
            let g = link_graph(edges, features.as_deref())?;
            let kind = link_kind(model)?;
            let cfg = LinkConfig {
                epochs: *epochs,
                ..config.as_ref().map(|c| c.linkpred.clone()).unwrap_or_default()
            };
            let split = EdgeSplit::new(&g, cli.seed)?;
            let trained = train_link_predictor(&g, &split, kind, &cfg, stage_seed(cli.seed, "link-predict"))?;
            let z = trained.model.embed(&g.with_edges(&split.train))?;
            let auc = linkpred::split_auc(&z, &split.test, &split.test_neg)?;
            let path = write(out, "linkpred.json", &serde_json::to_string(&trained.model)?)?;
            println!("{} test roc_auc {auc:.4} -> {}", kind.as_str(), path.display());
        }
        Command::LinkPredict { edges, features, model, threshold } => {
            let g = link_graph(edges, features.as_deref())?;
            let model: LinkModel = serde_json::from_str(&read(model)?)?;
            let predicted = augment_graph(&g, &model, *threshold)?;
            let text: String = predicted.iter().map(|p| format!("{}\t{}\t{:.6}\n", g.node_ids[p.u], g.node_ids[p.v], p.score)).collect();
            let path = write(out, "predicted_edges.tsv", &text)?;
            println!("{} predicted edges -> {}", predicted.len(), path.display());
        }
        Command::Populate { mentions: m, candidates, schema: sa } => {
            let mut graph = pipeline::populate(schema(sa, config.as_ref())?, &mentions(m)?)?;
            for row in read_candidates_tsv(&read(candidates)?)? {
                let (Some(head), Some(tail)) = (graph.find_person(&row.head_surface), graph.find_person(&row.tail_surface)) else {
                    continue;
                };
                if head != tail {
                    graph.add_relation(RelationEdge {
                        head,
                        relation: row.relation,
                        tail,
                        provenance: EdgeProvenance::LabelingFunction,
                        confidence: 1.0,
                    })?;
                }
            }
            let path = write(out, "journal.jsonl", &write_journal(&graph))?;
            println!("{} persons, {} edges -> {}", graph.num_nodes(), graph.num_edges(), path.display());
        }
        Command::Export { journal, format, schema: sa } => {
            let graph = replay_journal(&read(journal)?, schema(sa, config.as_ref())?)?;
            let (name, text) = match format.as_str() {
                "nt" | "ntriples" => ("graph.nt", export_ntriples(&graph)),
                "edges" | "tsv" => ("edges.tsv", export_edgelist(&graph)),
                other => bail!("unknown export format `{other}`"),
            };
            let path = write(out, name, &text)?;
            println!("{}", path.display());
        }
        Command::Stats { sentences: s, mentions: m } => {
            let sents = sentences(s)?;
            let docs: std::collections::BTreeSet<&str> = sents.iter().map(|s| s.doc_id.as_str()).collect();
            let stats = corpus_stats(docs.len(), &sents, &mentions(m)?);
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Eval { predicted, gold } => {
            let (pred, gold) = (mentions(predicted)?, mentions(gold)?);
            let key = |m: &ontopop::annotators::EntityMention| (m.doc_id.clone(), m.sent_index, m.start_tok, m.end_tok);
            let gold_by: std::collections::BTreeMap<_, _> = gold.iter().map(|m| (key(m), m.labels().cloned().collect::<std::collections::BTreeSet<_>>())).collect();
            let mut p = Vec::new();
            let mut g = Vec::new();
            for m in &pred {
                if let Some(labels) = gold_by.get(&key(m)) {
                    p.push(m.labels().cloned().collect());
                    g.push(labels.clone());
                }
            }
            let scores = evaluate(&p, &g)?;
            println!("mentions {}\nmacro_f1 {:.4}\nmicro_f1 {:.4}", p.len(), scores.macro_f1, scores.micro_f1);
        }
        Command::Run => {
            let mut cfg = config.context("`run` needs --config")?;
            cfg.seed = if cli.seed != 0 { cli.seed } else { cfg.seed };
            if cli.out != Path::new("out") {
                cfg.out = cli.out.clone();
            }
            let report = pipeline::run_pipeline(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
