//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ontopop::annotators::{Gazetteer, GazetteerMatcher, Provenance};
use ontopop::classifier::encoders::{mean, AttentiveEncoder};
use ontopop::classifier::{self, evaluate, ClassifierConfig, ClassifierModel, ContextToken, EncoderKind, MentionContext, TrainingExample};
use ontopop::graphstore::{export_edgelist, export_ntriples, import_ntriples, parse_edgelist, EdgeProvenance, OntologyGraph, RelationEdge};
use ontopop::ingest::{process_document, Document};
use ontopop::linalg::Matrix;
use ontopop::linkpred::{median, random_scorer_auc, roc_auc, split_auc, train_link_predictor, EdgeSplit, LinkConfig, ModelKind};
use ontopop::pipeline::{run_pipeline, PipelineConfig};
use ontopop::relembed::{fit_thresholds, train_embeddings, triple_accuracy, with_negatives, NamedTriple, RelembedConfig, ScoreMode, TripleSpace};
use ontopop::schema::{OntologySchema, TypePath};
use ontopop::synth::{ring_lattice, strip_coarse_tags, translational_kg, typing_benchmark};

const GRAD_STEP: f64 = 1e-4;
const GRAD_REL_TOL: f64 = 1e-3;
const GRAD_MIN_INSTANCES: usize = 20;
const TYPING_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const TYPING_MIN_F1: f64 = 0.90;
const TYPING_MIN_GAIN: f64 = 0.01;
const ENCODER_TOL: f64 = 1e-6;
const KG_MIN_ACCURACY: f64 = 0.85;
const LINK_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const LINK_MIN_GAP: f64 = 0.1;
const RANDOM_AUC_TOL: f64 = 0.05;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn path(s: &str) -> TypePath {
    s.parse().unwrap()
}

// 1. Gradient suite

const WORDS: [&str; 10] = ["the", "senator", "said", "in", "Boston", "Ann", "Lee", "hired", "at", "school"];
const LABELS: [&str; 6] = ["/person", "/person/politician", "/location", "/location/city", "/org", "/org/company"];
const COARSE: [&str; 3] = ["/person", "/location", "/org"];

fn random_instance(rng: &mut ChaCha8Rng) -> TrainingExample {
    fn toks(rng: &mut ChaCha8Rng, n: usize, coarse: Option<&str>) -> Vec<ContextToken> {
        (0..n)
            .map(|_| {
                let t = ContextToken::new(*WORDS.choose(rng).unwrap());
                match coarse {
                    Some(c) => t.with_coarse(path(c)),
                    None => t,
                }
            })
            .collect()
    }
    let coarse = *COARSE.choose(rng).unwrap();
    let (nl, nm, nr) = (rng.gen_range(0..4), rng.gen_range(1..3), rng.gen_range(0..4));
    let context = MentionContext {
        left: toks(rng, nl, None),
        mention: toks(rng, nm, Some(coarse)),
        right: toks(rng, nr, None),
    };
    let n_labels = rng.gen_range(1..3);
    let labels: Vec<TypePath> = (0..n_labels).map(|_| path(LABELS.choose(rng).unwrap())).collect();
    TrainingExample::new(context, labels)
}

/// Relative error of every parameter entry on one random instance.
fn gradient_instance(encoder: EncoderKind, use_features: bool, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples: Vec<TrainingExample> = (0..3).map(|_| random_instance(&mut rng)).collect();
    let cfg = ClassifierConfig {
        encoder,
        word_dim: 3,
        feature_dim: 2,
        repr_dim: 6,
        hidden: 2,
        window: 3,
        use_features,
        init_scale: 0.5,
        ..Default::default()
    };
    let mut model: ClassifierModel<f64> = ClassifierModel::init(&examples, &cfg, seed).map_err(|e| e.to_string())?;
    let ex = &examples[0];
    let ctx = model.encode_context(&ex.context);
    let target = model.target(&ex.labels);
    let mut grad = model.params.zeros_like();
    model.accumulate_grad(&ctx, &target, &mut grad).map_err(|e| e.to_string())?;
    let analytic: Vec<Vec<f64>> = grad.tensors().iter().map(|m| m.as_slice().to_vec()).collect();
    let mut checked = 0;
    for (ti, g) in analytic.iter().enumerate() {
        for (i, &a) in g.iter().enumerate() {
            let orig = model.params.tensors_mut()[ti].as_slice()[i];
            model.params.tensors_mut()[ti].as_mut_slice()[i] = orig + GRAD_STEP;
            let lp = model.loss(&ctx, &target).unwrap();
            model.params.tensors_mut()[ti].as_mut_slice()[i] = orig - GRAD_STEP;
            let lm = model.loss(&ctx, &target).unwrap();
            model.params.tensors_mut()[ti].as_mut_slice()[i] = orig;
            let n = (lp - lm) / (2.0 * GRAD_STEP);
            // entries with both gradients at rounding level carry no signal
            if a.abs() < 1e-8 && n.abs() < 1e-8 {
                continue;
            }
            let rel = (a - n).abs() / a.abs().max(n.abs());
            if rel > GRAD_REL_TOL {
                return Err(format!("{encoder:?} seed {seed} tensor {ti}[{i}]: analytic {a:.3e} numeric {n:.3e} rel {rel:.2e}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn criterion_gradients() -> Outcome {
    let mut instances = 0;
    let mut entries = 0;
    for (k, encoder) in [EncoderKind::Averaging, EncoderKind::Rnn, EncoderKind::Attentive].into_iter().enumerate() {
        for seed in 0..8u64 {
            entries += gradient_instance(encoder, seed % 2 == 0, 100 * k as u64 + seed)?;
            instances += 1;
        }
    }
    check(instances >= GRAD_MIN_INSTANCES, format!("only {instances} instances"))?;
    Ok(format!("{instances} instances, {entries} entries within rel err {GRAD_REL_TOL:e}"))
}

// 2. Token-feature trend

fn typing_f1(train: &[TrainingExample], test: &[TrainingExample], use_features: bool, seed: u64) -> f64 {
    let cfg = ClassifierConfig {
        word_dim: 20,
        feature_dim: 10,
        repr_dim: 30,
        epochs: 10,
        learning_rate: 0.5,
        use_features,
        ..Default::default()
    };
    let trained = classifier::train::<f64>(train, &cfg, seed).unwrap();
    let pred: Vec<_> = test.iter().map(|e| trained.model.predict_labels(&e.context, 0.5).unwrap()).collect();
    let gold: Vec<_> = test.iter().map(|e| e.labels.clone()).collect();
    evaluate(&pred, &gold).unwrap().micro_f1
}

fn criterion_token_features() -> Outcome {
    let mut plain = Vec::new();
    let mut featured = Vec::new();
    for seed in TYPING_SEEDS {
        let bench = typing_benchmark(2000, 500, 0.08, seed);
        plain.push(typing_f1(&strip_coarse_tags(&bench.train), &strip_coarse_tags(&bench.test), false, seed));
        featured.push(typing_f1(&bench.train, &bench.test, true, seed));
    }
    let (p, f) = (median(&plain), median(&featured));
    let line = format!("median micro-F1 without features {p:.4}, with features {f:.4}");
    check(p >= TYPING_MIN_F1 && f >= TYPING_MIN_F1, format!("{line}: below {TYPING_MIN_F1}"))?;
    check(f >= p + TYPING_MIN_GAIN, format!("{line}: gain below {TYPING_MIN_GAIN}"))?;
    Ok(line)
}

// 3. Encoder identities

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_encoder_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (input, hidden, out) = (rng.gen_range(1..6), rng.gen_range(1..5), rng.gen_range(1..6));
        let mut enc = AttentiveEncoder::<f64>::new(input, hidden, 3, out, &mut rng);
        let n = rng.gen_range(2..7);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();

        // bi-RNN states built directly from the cells
        let fwd = enc.fwd.run(&xs);
        let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let mut bwd = enc.bwd.run(&rev);
        bwd.reverse();
        let states: Vec<Vec<f64>> = (0..n).map(|t| enc.proj.matvec(&[fwd[t].clone(), bwd[t].clone()].concat())).collect();
        let avg: Vec<f64> = (0..out).map(|j| states.iter().map(|s| s[j]).sum::<f64>() / n as f64).collect();

        enc.u_att = Matrix::zeros(1, enc.u_att.cols());
        let (v, _) = enc.forward(&xs);
        let d = max_abs_diff(&v, &avg);
        worst = worst.max(d);
        check(d <= ENCODER_TOL, format!("uniform attention differs from state mean by {d:e}"))?;
        check(max_abs_diff(&v, &mean(&enc.states(&xs), out)) <= ENCODER_TOL, "uniform attention differs from mean()")?;

        let one = vec![xs[0].clone()];
        let enc2 = AttentiveEncoder::<f64>::new(input, hidden, 3, out, &mut rng);
        check(enc2.forward(&one).0 == enc2.states(&one)[0], "attentive single token is not a fixed point")?;
        check(mean(&one, input) == xs[0], "averaging single token is not a fixed point")?;
        check(enc2.forward(&[]).0 == vec![0.0; out], "attentive empty context is not zero")?;
        check(mean::<f64>(&[], input) == vec![0.0; input], "averaging empty context is not zero")?;
    }
    Ok(format!("20 random encoders, max deviation {worst:.1e}"))
}

// 4. Translational training

fn criterion_translational() -> Outcome {
    let mut accs = Vec::new();
    for seed in 0..3u64 {
        let kg = translational_kg(5, 10, 3, 1.0, seed);
        let cfg = RelembedConfig {
            dim: 20,
            sentence_dim: 16,
            epochs: 500,
            learning_rate: 0.01,
            lambda: 0.0,
            ..Default::default()
        };
        let space: TripleSpace<f64> = train_embeddings(&kg.train, &kg.schema, &cfg, seed).map_err(|e| e.to_string())?;
        check(space.num_entities() == 50 && space.num_relations() == 3, "KG is not 50 entities × 3 relations")?;
        let resolve = |ts: &[NamedTriple]| ts.iter().map(|t| space.resolve(t).unwrap()).collect::<Vec<_>>();
        let (tr, va, te) = (resolve(&kg.train), resolve(&kg.valid), resolve(&kg.test));
        let known: HashSet<_> = tr.iter().chain(&va).chain(&te).map(|t| (t.head, t.rel, t.tail)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let valid = with_negatives(&va, 50, 3, &known, &mut rng);
        let test = with_negatives(&te, 50, 3, &known, &mut rng);
        let plain_th = fit_thresholds(&space, &valid, ScoreMode::Plain).unwrap();
        let plain = triple_accuracy(&space, &plain_th, &test, ScoreMode::Plain).unwrap();
        let ctx_th = fit_thresholds(&space, &valid, ScoreMode::Context).unwrap();
        let ctx = triple_accuracy(&space, &ctx_th, &test, ScoreMode::Context).unwrap();
        check(ctx == plain, format!("seed {seed}: λ=0 context accuracy {ctx} != baseline {plain}"))?;
        accs.push(plain);
    }
    let m = median(&accs);
    check(m >= KG_MIN_ACCURACY, format!("median accuracy {m:.4} < {KG_MIN_ACCURACY}"))?;
    Ok(format!("median triple accuracy {m:.4}; λ=0 context scoring matches exactly"))
}

// 5. Link-prediction ordering

fn criterion_link_prediction() -> Outcome {
    let g = ring_lattice::<f64>(200, 4);
    let mut gcn = Vec::new();
    let mut pgnn = Vec::new();
    for seed in LINK_SEEDS {
        let split = EdgeSplit::new(&g, seed).map_err(|e| e.to_string())?;
        let observed = g.with_edges(&split.train);
        for (kind, out) in [(ModelKind::Gcn, &mut gcn), (ModelKind::Pgnn, &mut pgnn)] {
            let trained = train_link_predictor(&g, &split, kind, &LinkConfig::default(), seed).map_err(|e| e.to_string())?;
            let z = trained.model.embed(&observed).map_err(|e| e.to_string())?;
            out.push(split_auc(&z, &split.test, &split.test_neg).map_err(|e| e.to_string())?);
        }
    }
    let (g_auc, p_auc) = (median(&gcn), median(&pgnn));
    let n_test = EdgeSplit::new(&g, 0).unwrap().test.len();
    let random = random_scorer_auc(n_test, n_test, 1000, 7).map_err(|e| e.to_string())?;
    let line = format!("median test AUC P-GNN {p_auc:.4}, GCN {g_auc:.4}, random {random:.4}");
    check(p_auc - g_auc >= LINK_MIN_GAP, format!("{line}: gap below {LINK_MIN_GAP}"))?;
    check((random - 0.5).abs() <= RANDOM_AUC_TOL, format!("{line}: random scorer off"))?;
    Ok(line)
}

// 6. roc_auc oracle

fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                total += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    total / pairs
}

fn criterion_roc_auc() -> Outcome {
    let mut cases = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 1..=8usize {
        // every score vector over {0,1,2} for short inputs, random ones beyond
        let vectors: Vec<Vec<f64>> = if n <= 5 {
            (0..3usize.pow(n as u32)).map(|mut c| (0..n).map(|_| {
                let v = (c % 3) as f64;
                c /= 3;
                v
            }).collect()).collect()
        } else {
            (0..200).map(|_| (0..n).map(|_| rng.gen_range(0..4) as f64 * 0.25).collect()).collect()
        };
        for scores in &vectors {
            for mask in 0..(1u32 << n) {
                let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                let degenerate = labels.iter().all(|&l| l) || labels.iter().all(|&l| !l);
                match roc_auc(scores, &labels) {
                    Ok(a) if !degenerate => {
                        let b = brute_force_auc(scores, &labels);
                        check(a == b, format!("scores {scores:?} labels {labels:?}: {a} vs {b}"))?;
                    }
                    Err(_) if degenerate => {}
                    other => return Err(format!("scores {scores:?} labels {labels:?}: unexpected {other:?}")),
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} score/label assignments agree exactly"))
}

// 7. Gazetteer matching

const GAZ_WORDS: [&str; 5] = ["alpha", "beta", "gamma", "delta", "omega"];

fn brute_force_matches(tokens: &[String], gazetteers: &[Gazetteer]) -> Vec<(usize, usize, TypePath)> {
    let hit = |i: usize, j: usize| -> Option<usize> {
        let span = tokens[i..=j].join(" ").to_lowercase();
        gazetteers.iter().position(|g| g.entries.iter().any(|e| e.to_lowercase() == span))
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match (i..tokens.len()).rev().find_map(|j| hit(i, j).map(|g| (j, g))) {
            Some((j, g)) => {
                out.push((i, j, gazetteers[g].type_label.clone()));
                i = j + 1;
            }
            None => i += 1,
        }
    }
    out
}

fn random_phrase(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let n = rng.gen_range(1..=max_len);
    (0..n)
        .map(|_| {
            let w = *GAZ_WORDS.choose(rng).unwrap();
            if rng.gen_bool(0.3) {
                w.to_uppercase()
            } else {
                w.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_gazetteer_matching() -> Outcome {
    let types = ["/person/name", "/location/city", "/org/company"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut total = 0;
    for case in 0..100 {
        let gazetteers: Vec<Gazetteer> = types
            .iter()
            .map(|t| {
                let n = rng.gen_range(1..5);
                Gazetteer::new(path(t), (0..n).map(|_| random_phrase(&mut rng, 3)), false).unwrap()
            })
            .collect();
        let text = random_phrase(&mut rng, 15);
        let doc = Document::new(format!("d{case}"), text).unwrap();
        let sentence = &process_document(&doc)[0];
        let tokens: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
        let matcher = GazetteerMatcher::new(&gazetteers);
        let got = matcher.annotate(sentence);
        check(got == matcher.annotate(sentence), format!("case {case}: non-deterministic"))?;
        check(got.iter().all(|m| m.provenance == Provenance::Gazetteer), "wrong provenance")?;
        let got: Vec<_> = got.into_iter().map(|m| (m.start_tok, m.end_tok, m.coarse_label.unwrap())).collect();
        let want = brute_force_matches(&tokens, &gazetteers);
        check(got == want, format!("case {case} `{}`: {got:?} vs oracle {want:?}", sentence.text))?;
        total += want.len();
    }
    Ok(format!("100 instances, {total} matches agree with the oracle"))
}

// 8. Graph round-trip

fn random_graph(rng: &mut ChaCha8Rng) -> OntologyGraph {
    let schema = OntologySchema::default_schema();
    let attr_types: Vec<TypePath> = schema.types().iter().filter(|t| !t.is_root()).cloned().collect();
    let relations: Vec<String> = schema.relations().iter().map(|r| r.name.clone()).collect();
    let mut g = OntologyGraph::new(schema);
    let n = rng.gen_range(0..12);
    let names = ["Ann \"Jr\" Lee", "Bo Chen", "Zoë Park", "O'Neil", "Back\\slash", "Tab\tName", "Smith", "Ng"];
    let mut ids = Vec::new();
    for i in 0..n {
        let name = format!("{} {i}", names.choose(rng).unwrap());
        ids.push(g.resolve_name(&name).unwrap());
    }
    let provs = [Provenance::Gazetteer, Provenance::Pattern, Provenance::Classifier];
    for &id in &ids {
        for _ in 0..rng.gen_range(0..4) {
            let ty = attr_types.choose(rng).unwrap();
            let value = format!("v{} \"q\"\n", rng.gen_range(0..100));
            g.attach_attribute(id, ty, &value, *provs.choose(rng).unwrap()).unwrap();
        }
    }
    let eprovs = [EdgeProvenance::LabelingFunction, EdgeProvenance::RelModel, EdgeProvenance::Predicted];
    if ids.len() >= 2 {
        for _ in 0..rng.gen_range(0..3 * ids.len()) {
            let (h, t) = (*ids.choose(rng).unwrap(), *ids.choose(rng).unwrap());
            if h == t {
                continue;
            }
            g.add_relation(RelationEdge {
                head: h,
                relation: relations.choose(rng).unwrap().clone(),
                tail: t,
                provenance: *eprovs.choose(rng).unwrap(),
                confidence: rng.gen_range(0.0..1.0),
            })
            .unwrap();
        }
    }
    g
}

fn edge_key(e: &RelationEdge) -> (u64, String, u64, u64, &'static str) {
    (e.head, e.relation.clone(), e.tail, e.confidence.to_bits(), e.provenance.as_str())
}

fn criterion_graph_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut triples = 0;
    for case in 0..50 {
        let g = random_graph(&mut rng);
        let nt = export_ntriples(&g);
        let back = import_ntriples(&nt, OntologySchema::default_schema()).map_err(|e| format!("case {case}: {e}"))?;
        check(export_ntriples(&back) == nt, format!("case {case}: N-Triples differ after round trip"))?;
        let edges: BTreeSet<_> = g.edges().map(|e| edge_key(&e)).collect();
        let parsed = parse_edgelist(&export_edgelist(&g)).map_err(|e| e.to_string())?;
        check(parsed.iter().map(edge_key).collect::<BTreeSet<_>>() == edges, format!("case {case}: edge list differs"))?;
        check(parsed.len() == edges.len(), format!("case {case}: duplicate edges"))?;
        triples += nt.lines().count();
    }
    Ok(format!("50 graphs, {triples} triples byte-identical; edge lists preserved"))
}

// 9. End-to-end fixture

fn criterion_fixture() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let mut cfg = PipelineConfig::load(&dir.join("pipeline.conf")).map_err(|e| e.to_string())?;
        cfg.out = tmp.path().join(format!("run{run}"));
        let report = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        outputs.push((cfg.out, report));
    }
    let (out, report) = &outputs[0];
    let nt = std::fs::read_to_string(out.join("graph.nt")).map_err(|e| e.to_string())?;
    let graph = import_ntriples(&nt, OntologySchema::default_schema()).map_err(|e| e.to_string())?;
    let expected = ["Mary Jones", "Robert Jones", "Alice Chen", "David Park", "Susan Miller", "James Miller", "Emma Miller"];
    let names: BTreeSet<&str> = graph.nodes().map(|n| n.canonical_name.as_str()).collect();
    check(names == expected.into_iter().collect(), format!("persons {names:?}"))?;
    check(graph.nodes().all(|n| !n.attributes.is_empty()), "a person has no attribute")?;
    let count = |p: EdgeProvenance| graph.edges().filter(|e| e.provenance == p).count();
    let (lf, predicted) = (count(EdgeProvenance::LabelingFunction), count(EdgeProvenance::Predicted));
    check(lf >= 1, "no labeling-function edge")?;
    check(predicted >= 1, "no predicted edge")?;
    for f in ["sentences.jsonl", "mentions.jsonl", "candidates.tsv", "graph.nt", "edges.tsv", "journal.jsonl"] {
        let a = std::fs::read(out.join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(outputs[1].0.join(f)).map_err(|e| e.to_string())?;
        check(a == b, format!("{f} differs between runs"))?;
    }
    Ok(format!("{} persons, {} attributes, {lf} LF edges, {predicted} predicted edges; reruns identical", report.persons, report.attributes))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 gradient suite", criterion_gradients),
        ("2 token-feature trend", criterion_token_features),
        ("3 encoder identities", criterion_encoder_identities),
        ("4 translational training", criterion_translational),
        ("5 link-prediction ordering", criterion_link_prediction),
        ("6 roc_auc oracle", criterion_roc_auc),
        ("7 gazetteer matching", criterion_gazetteer_matching),
        ("8 graph round-trip", criterion_graph_round_trip),
        ("9 end-to-end fixture", criterion_fixture),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS [{name}] {msg} ({secs:.1}s)"),
            Err(msg) => {
                println!("FAIL [{name}] {msg} ({secs:.1}s)");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
