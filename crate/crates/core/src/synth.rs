//! Seeded synthetic datasets for the typing, relation-embedding and
//! link-prediction benchmarks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{ContextToken, MentionContext, TrainingExample};
use crate::linalg::Matrix;
use crate::linkpred::PersonGraph;
use crate::relembed::NamedTriple;
use crate::scalar::Scalar;
use crate::schema::{OntologySchema, TypePath};

const COARSE: [&str; 3] = ["/person", "/org", "/location"];

/// Fine label for each (coarse type, context cue class).
const FINE: [[&str; 3]; 3] = [
    ["/person/politician", "/person/profession", "/person/nationality"],
    ["/org/government", "/org/education", "/org/company"],
    ["/location/state", "/location/city", "/location/place_of_birth"],
];

const CUES: [&[&str]; 3] = [
    &["governs", "elected", "office", "council", "minister"],
    &["teaches", "trained", "school", "lessons", "studies"],
    &["trades", "market", "born", "business", "native"],
];

const FILLERS: &[&str] = &[
    "the", "a", "of", "and", "in", "on", "with", "for", "this", "that", "was", "is", "at", "by", "from", "recently", "often", "also", "then", "there",
];

#[derive(Debug, Clone)]
pub struct TypingBenchmark {
    pub train: Vec<TrainingExample>,
    pub test: Vec<TrainingExample>,
}

fn name_pool<R: Rng>(coarse: usize, count: usize, rng: &mut R) -> Vec<String> {
    let syllables = ["ka", "lo", "mi", "ra", "te", "vu", "so", "ne", "di", "po", "ga", "fe"];
    let prefix = ["p", "o", "l"][coarse];
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(2..4);
        let body: String = (0..n).map(|_| *syllables.choose(rng).expect("non-empty")).collect();
        let mut name = format!("{prefix}{body}");
        name[..1].make_ascii_uppercase();
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

fn window<R: Rng>(cue_class: usize, with_cue: bool, rng: &mut R) -> Vec<ContextToken> {
    let len = rng.gen_range(3..7);
    let mut toks: Vec<ContextToken> = (0..len).map(|_| ContextToken::new(*FILLERS.choose(rng).expect("non-empty"))).collect();
    if with_cue {
        let pos = rng.gen_range(0..len.min(3));
        toks[pos] = ContextToken::new(*CUES[cue_class].choose(rng).expect("non-empty"));
    }
    toks
}

/// Mentions whose coarse type is carried by the annotator tag on the mention
/// tokens and whose fine type is fixed by a context cue shared across coarse
/// types. A fraction `oov_rate` of test mentions use names never seen in
/// training, so only the coarse tag identifies their type.
pub fn typing_benchmark(n_train: usize, n_test: usize, oov_rate: f64, seed: u64) -> TypingBenchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<(Vec<String>, Vec<String>)> = (0..3)
        .map(|c| {
            let mut all = name_pool(c, 60, &mut rng);
            let held_out = all.split_off(40);
            (all, held_out)
        })
        .collect();
    let make = |held_out: bool, rng: &mut ChaCha8Rng| {
        let coarse = rng.gen_range(0..3);
        let cue = rng.gen_range(0..3);
        let pool = if held_out { &pools[coarse].1 } else { &pools[coarse].0 };
        let tag: TypePath = COARSE[coarse].parse().expect("valid path");
        let n_tokens = rng.gen_range(1..3);
        let mention: Vec<ContextToken> = (0..n_tokens)
            .map(|_| ContextToken::new(pool.choose(rng).expect("non-empty").clone()).with_coarse(tag.clone()))
            .collect();
        let cue_left = rng.gen_bool(0.5);
        let context = MentionContext {
            left: window(cue, cue_left, rng),
            mention,
            right: window(cue, !cue_left, rng),
        };
        TrainingExample::new(context, [FINE[coarse][cue].parse().expect("valid path")])
    };
    let train = (0..n_train).map(|_| make(false, &mut rng)).collect();
    let test = (0..n_test)
        .map(|_| {
            let held_out = rng.gen_bool(oov_rate);
            make(held_out, &mut rng)
        })
        .collect();
    TypingBenchmark { train, test }
}

/// Drops the coarse annotator tags, as seen by a model without token features.
pub fn strip_coarse_tags(examples: &[TrainingExample]) -> Vec<TrainingExample> {
    examples
        .iter()
        .map(|e| {
            let strip = |ts: &[ContextToken]| ts.iter().map(|t| ContextToken { coarse: None, ..t.clone() }).collect();
            TrainingExample {
                context: MentionContext {
                    left: strip(&e.context.left),
                    mention: strip(&e.context.mention),
                    right: strip(&e.context.right),
                },
                labels: e.labels.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticKg {
    pub schema: OntologySchema,
    pub train: Vec<NamedTriple>,
    pub valid: Vec<NamedTriple>,
    pub test: Vec<NamedTriple>,
}

const REL_SENTENCES: [&[&str]; 3] = [
    &["{h} works for {t}", "{h} reports to {t} at work"],
    &["{h} is advised by {t}", "{t} mentors {h} every week"],
    &["{h} lives near {t}", "{h} shares a street with {t}"],
];

/// `groups × group_size` entities; relation `r` links every entity of group
/// `g` to every entity of group `g + 1` for `g ≡ r (mod relations)`. A
/// fraction `keep` of those pairs is kept and split 70/15/15. Every triple
/// carries a short templated sentence.
pub fn translational_kg(groups: usize, group_size: usize, relations: usize, keep: f64, seed: u64) -> SyntheticKg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rel_names: Vec<String> = (0..relations).map(|r| format!("rel{r}")).collect();
    let mut text = String::from("version 1\ntype /person\n");
    for r in &rel_names {
        text.push_str(&format!("relation {r}\n"));
    }
    let schema = OntologySchema::parse(&text).expect("generated schema is valid");
    let entity = |g: usize, i: usize| format!("e{}", g * group_size + i);
    let mut all = Vec::new();
    for g in 0..groups.saturating_sub(1) {
        let r = g % relations;
        for i in 0..group_size {
            for j in 0..group_size {
                if rng.gen_bool(keep) {
                    let templates = REL_SENTENCES[r % REL_SENTENCES.len()];
                    let sentence = templates
                        .choose(&mut rng)
                        .expect("non-empty")
                        .replace("{h}", &entity(g, i))
                        .replace("{t}", &entity(g + 1, j));
                    all.push(NamedTriple::new(entity(g, i), rel_names[r].clone(), entity(g + 1, j)).with_sentence(&sentence));
                }
            }
        }
    }
    all.shuffle(&mut rng);
    let n_valid = all.len() * 15 / 100;
    let test = all.split_off(all.len() - n_valid);
    let valid = all.split_off(all.len() - n_valid);
    SyntheticKg {
        schema,
        train: all,
        valid,
        test,
    }
}

/// Ring of `n` nodes, each linked to its `k` nearest neighbours on either
/// side, with a constant feature. Node features carry no positional signal.
pub fn ring_lattice<S: Scalar>(n: usize, k: usize) -> PersonGraph<S> {
    let mut g = PersonGraph::with_constant_features(n);
    for u in 0..n {
        for d in 1..=k {
            g.add_edge(u, (u + d) % n, "related").expect("valid ring edge");
        }
    }
    g
}

/// Two disjoint cliques of `size` nodes with random features.
pub fn two_cliques<S: Scalar>(size: usize, feature_dim: usize, seed: u64) -> PersonGraph<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * size;
    let features = Matrix::uniform(n, feature_dim, 1.0, &mut rng);
    let mut g = PersonGraph::new((0..n).map(|i| i.to_string()).collect(), features).expect("shapes agree");
    for c in 0..2 {
        for i in 0..size {
            for j in i + 1..size {
                g.add_edge(c * size + i, c * size + j, "related").expect("valid clique edge");
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typing_benchmark_is_seeded_and_consistent() {
        let a = typing_benchmark(50, 20, 0.1, 4);
        let b = typing_benchmark(50, 20, 0.1, 4);
        assert_eq!(a.train, b.train);
        for ex in &a.train {
            assert_eq!(ex.labels.len(), 2);
            let coarse = ex.context.mention[0].coarse.as_ref().unwrap();
            assert!(ex.labels.contains(coarse));
        }
    }

    #[test]
    fn kg_shape() {
        let kg = translational_kg(5, 10, 3, 1.0, 1);
        assert_eq!(kg.train.len() + kg.valid.len() + kg.test.len(), 400);
        assert_eq!(kg.schema.relations().len(), 3);
    }

    #[test]
    fn ring_degrees() {
        let g = ring_lattice::<f64>(20, 4);
        assert!((0..20).all(|u| g.neighbors(u).count() == 8));
        assert_eq!(two_cliques::<f64>(5, 3, 0).num_edges(), 20);
    }
}
