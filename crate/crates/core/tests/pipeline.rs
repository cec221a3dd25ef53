use std::path::PathBuf;

use ontopop::graphstore::EdgeProvenance;
use ontopop::pipeline::{run, run_pipeline, PipelineConfig, PipelineError};

fn fixture_config(out: &std::path::Path) -> PipelineConfig {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut cfg = PipelineConfig::load(&dir.join("pipeline.conf")).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn fixture_run_populates_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&fixture_config(tmp.path())).unwrap();
    let g = &out.graph;
    let names: Vec<&str> = g.nodes().map(|n| n.canonical_name.as_str()).collect();
    assert_eq!(names, ["Mary Jones", "Robert Jones", "Alice Chen", "David Park", "Susan Miller", "James Miller", "Emma Miller"]);
    assert!(g.nodes().all(|n| !n.attributes.is_empty()));
    let mary = g.find_person("Mary Jones").unwrap();
    let robert = g.find_person("Robert Jones").unwrap();
    assert!(g.edges().any(|e| e.relation == "spouse_of" && [e.head, e.tail] == [mary, robert]));
    assert!(g.edges().any(|e| e.provenance == EdgeProvenance::Predicted));
    assert!(g.edges().any(|e| e.provenance == EdgeProvenance::LabelingFunction));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&fixture_config(a.path())).unwrap();
    run_pipeline(&fixture_config(b.path())).unwrap();
    for f in ["sentences.jsonl", "mentions.jsonl", "candidates.tsv", "graph.nt", "edges.tsv", "journal.jsonl"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn empty_corpus_yields_empty_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    let report = run_pipeline(&PipelineConfig::new(&corpus, tmp.path().join("out"))).unwrap();
    assert_eq!(report.persons, 0);
    assert!(report.edges.is_empty());
    assert!(tmp.path().join("out/graph.nt").exists());
}

#[test]
fn missing_corpus_is_a_config_error() {
    let err = run(&PipelineConfig::new("/nonexistent/corpus", "/tmp/x")).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)));
}
