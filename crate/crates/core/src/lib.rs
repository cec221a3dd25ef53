//! Ontology population from unstructured text: document ingestion, entity
//! annotation, fine-grained typing, relation embeddings, person-graph link
//! prediction and a typed graph store with N-Triples export.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod annotators;
pub mod classifier;
pub mod graphstore;
pub mod ingest;
pub mod linalg;
pub mod linkpred;
pub mod pipeline;
pub mod relembed;
pub mod scalar;
pub mod schema;
pub mod synth;

pub type Matrix = linalg::Matrix<f64>;
pub type ClassifierModel = classifier::ClassifierModel<f64>;
pub type TripleSpace = relembed::TripleSpace<f64>;
pub type PersonGraph = linkpred::PersonGraph<f64>;
pub type LinkModel = linkpred::LinkModel<f64>;
