use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ontopop::annotators::{Annotator, Gazetteer, PatternRule};
use ontopop::graphstore::{normalize_name, EdgeProvenance, OntologyGraph, RelationEdge};
use ontopop::ingest::{process_document, Document};
use ontopop::linalg::Matrix;
use ontopop::linkpred::{gcn_layer, pgnn_features, roc_auc, AnchorSet, PersonGraph};
use ontopop::relembed::{fit, RelembedConfig, Triple, TripleSpace};
use ontopop::schema::{OntologySchema, RelationDef, TypePath};

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..12).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..3 * n)))
}

fn build(n: usize, edges: &[(usize, usize)], features: Matrix<f64>) -> PersonGraph<f64> {
    let mut g = PersonGraph::new((0..n).map(|i| format!("n{i}")).collect(), features).unwrap();
    for &(u, v) in edges {
        if u != v {
            g.add_edge(u, v, "r").unwrap();
        }
    }
    g
}

fn labelled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0i32..6, any::<bool>()), 2..20)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| (v.iter().map(|x| f64::from(x.0)).collect(), v.iter().map(|x| x.1).collect()))
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_maps((scores, labels) in labelled_scores()) {
        let base = roc_auc(&scores, &labels).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| 3.0 * s + 1.0).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| s.exp() / (1.0 + s.exp())).collect();
        prop_assert_eq!(roc_auc(&shifted, &labels).unwrap(), base);
        prop_assert_eq!(roc_auc(&squashed, &labels).unwrap(), base);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((roc_auc(&flipped, &labels).unwrap() + base - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn pgnn_features_lie_in_unit_interval((n, edges) in graph_strategy(), seed in 0u64..100, c in 0.5f64..2.0) {
        let g = build(n, &edges, Matrix::from_vec(n, 1, vec![1.0; n]));
        let anchors = AnchorSet::sample(n, c, &mut ChaCha8Rng::seed_from_u64(seed));
        let f = pgnn_features(&g, &anchors);
        prop_assert_eq!(f.shape(), (n, anchors.sets.len()));
        prop_assert!(f.as_slice().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn gcn_layer_is_permutation_equivariant((n, edges) in graph_strategy(), seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::uniform(n, 3, 1.0, &mut rng);
        let w = Matrix::uniform(3, 2, 1.0, &mut rng);
        let g = build(n, &edges, x.clone());
        let h = gcn_layer(&g, &x, &w).unwrap();
        // reverse the node order
        let perm = |i: usize| n - 1 - i;
        let px = Matrix::from_rows(&(0..n).map(|i| x.row(perm(i)).to_vec()).collect::<Vec<_>>());
        let pedges: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (perm(u), perm(v))).collect();
        let pg = build(n, &pedges, px.clone());
        let ph = gcn_layer(&pg, &px, &w).unwrap();
        for i in 0..n {
            for (a, b) in ph.row(i).iter().zip(h.row(perm(i))) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trained_entity_embeddings_have_unit_norm(seed in 0u64..50, triples in prop::collection::vec((0usize..6, 0usize..2, 0usize..6), 1..12)) {
        let triples: Vec<Triple> = triples.into_iter().filter(|t| t.0 != t.2).map(|(h, r, t)| Triple::new(h, r, t)).collect();
        prop_assume!(!triples.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = RelembedConfig { dim: 4, sentence_dim: 4, bigram_buckets: 16, lambda: 0.0, ..Default::default() };
        let names = (0..6).map(|i| format!("e{i}")).collect();
        let mut space = TripleSpace::<f64>::new(names, vec![RelationDef::new("a"), RelationDef::new("b")], ontopop::classifier::Vocab::new(["x"]), &cfg, &mut rng);
        fit(&mut space, &triples, 5, 0.05, 100, &mut rng).unwrap();
        for r in 0..6 {
            let norm: f64 = space.entities.row(r).iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn type_paths_round_trip(segs in prop::collection::vec("[a-z_][a-z0-9_]{0,6}", 1..4)) {
        let p = TypePath::new(segs.clone()).unwrap();
        prop_assert_eq!(p.to_string().parse::<TypePath>().unwrap(), p.clone());
        prop_assert_eq!(p.segments(), &segs[..]);
        prop_assert!(p.ancestors().iter().all(|a| p.is_under(a)));
    }

    #[test]
    fn name_normalisation_is_idempotent(s in "[ A-Za-z\t]{0,20}") {
        let once = normalize_name(&s);
        prop_assert_eq!(normalize_name(&once), once);
    }

    #[test]
    fn token_offsets_index_the_document(text in "[A-Za-z0-9 ,.!?'-]{1,80}") {
        prop_assume!(!text.trim().is_empty());
        let doc = Document::new("d", text.clone()).unwrap();
        for s in process_document(&doc) {
            prop_assert_eq!(&text[s.start..s.end], s.text.as_str());
            for t in &s.tokens {
                prop_assert_eq!(&text[t.start..t.end], t.text.as_str());
            }
        }
    }

    #[test]
    fn annotations_are_sorted_and_disjoint(words in prop::collection::vec(prop::sample::select(vec!["Ann", "Lee", "Boston", "in", "1999", "a@b.org", "met"]), 1..20)) {
        let gaz = vec![
            Gazetteer::new("/person/name".parse().unwrap(), ["Ann Lee", "Lee"], false).unwrap(),
            Gazetteer::new("/location/city".parse().unwrap(), ["Boston"], false).unwrap(),
        ];
        let annotator = Annotator::new(&gaz, PatternRule::default_pack());
        let doc = Document::new("d", words.join(" ")).unwrap();
        for s in process_document(&doc) {
            let ms = annotator.annotate(&s);
            for pair in ms.windows(2) {
                prop_assert!(pair[0].end_tok < pair[1].start_tok);
            }
        }
    }

    #[test]
    fn symmetric_edges_ignore_insertion_order(pairs in prop::collection::vec((0u64..4, 0u64..4, 0.0f64..1.0), 1..10)) {
        let build = |rev: bool| {
            let mut g = OntologyGraph::new(OntologySchema::default_schema());
            for i in 0..4 {
                g.resolve_name(&format!("p{i}")).unwrap();
            }
            let ids: Vec<u64> = g.nodes().map(|n| n.id).collect();
            for &(h, t, c) in &pairs {
                if h == t {
                    continue;
                }
                let (h, t) = if rev { (t, h) } else { (h, t) };
                g.add_relation(RelationEdge { head: ids[h as usize], relation: "spouse_of".into(), tail: ids[t as usize], provenance: EdgeProvenance::Predicted, confidence: c }).unwrap();
            }
            g.edges().map(|e| (e.head, e.tail, e.confidence.to_bits())).collect::<BTreeSet<_>>()
        };
        prop_assert_eq!(build(false), build(true));
    }
}
