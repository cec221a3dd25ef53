//! Link prediction on the person graph.
//!
//! Two encoders produce node embeddings `Z`; an edge `(u, v)` scores
//! `σ(z_u · z_v)`.
//!
//! * GCN: `Z = Â relu(Â X W₁) W₂` with `Â = D̂^-1/2 (A + I) D̂^-1/2`.
//! * P-GNN (simplified): anchor-distance features `1/(d+1)` to `m` random
//!   anchor sets, concatenated with `X` and fed through a two-layer MLP.
//!
//! Both train full-batch with Adam on binary cross entropy over the training
//! edges and an equal number of freshly sampled non-edges per epoch.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::scalar::{sigmoid, Scalar};

#[derive(Debug, Error)]
pub enum LinkPredError {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("unknown node `{0}`")]
    UnknownNodeName(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("split has no {0} edges")]
    EmptySplit(&'static str),
    #[error("roc auc needs at least one positive and one negative")]
    DegenerateLabels,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Undirected graph over person ids with node features. Edges are stored as
/// `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonGraph<S> {
    pub node_ids: Vec<String>,
    pub features: Matrix<S>,
    edges: BTreeMap<(usize, usize), String>,
    adjacency: Vec<BTreeSet<usize>>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl<S: Scalar> PersonGraph<S> {
    pub fn new(node_ids: Vec<String>, features: Matrix<S>) -> Result<Self, LinkPredError> {
        if features.rows() != node_ids.len() {
            return Err(LinkPredError::ShapeMismatch(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                node_ids.len()
            )));
        }
        let n = node_ids.len();
        Ok(Self {
            node_ids,
            features,
            edges: BTreeMap::new(),
            adjacency: vec![BTreeSet::new(); n],
        })
    }

    /// `n` nodes named `0..n` with a single constant feature.
    pub fn with_constant_features(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string()).collect(), Matrix::from_vec(n, 1, vec![S::one(); n])).expect("shapes agree")
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Adds an undirected edge; returns false if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize, tag: &str) -> Result<bool, LinkPredError> {
        let n = self.num_nodes();
        for x in [u, v] {
            if x >= n {
                return Err(LinkPredError::UnknownNode(x));
            }
        }
        if u == v {
            return Err(LinkPredError::SelfLoop(u));
        }
        if self.edges.contains_key(&key(u, v)) {
            return Ok(false);
        }
        self.edges.insert(key(u, v), tag.to_string());
        self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
        Ok(true)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&key(u, v))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge_tag(&self, u: usize, v: usize) -> Option<&str> {
        self.edges.get(&key(u, v)).map(String::as_str)
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[u].iter().copied()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// Same nodes and features, restricted to `edges`.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(self.node_ids.clone(), self.features.clone()).expect("shapes agree");
        for &(u, v) in edges {
            let tag = self.edge_tag(u, v).unwrap_or("").to_string();
            g.add_edge(u, v, &tag).expect("edges come from a valid graph");
        }
        g
    }

    /// Rows of `Â = D̂^-1/2 (A + I) D̂^-1/2` as `(column, weight)` lists.
    pub fn normalized_adjacency(&self) -> Vec<Vec<(usize, S)>> {
        let deg: Vec<S> = self.adjacency.iter().map(|a| S::from_usize_lossy(a.len() + 1)).collect();
        (0..self.num_nodes())
            .map(|u| {
                std::iter::once(u)
                    .chain(self.neighbors(u))
                    .map(|v| (v, S::one() / (deg[u] * deg[v]).sqrt()))
                    .collect::<Vec<_>>()
            })
            .map(|mut row| {
                row.sort_by_key(|e| e.0);
                row
            })
            .collect()
    }

    /// Hop distances from the nearest node of `sources`; `None` if unreachable.
    pub fn bfs_distances(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Edge list `src<TAB>relation<TAB>dst`; node ids are taken in order of
/// first appearance. Nodes get a constant feature.
pub fn read_edge_list<S: Scalar>(text: &str) -> Result<PersonGraph<S>, LinkPredError> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 3 {
            return Err(LinkPredError::Format {
                line: i + 1,
                msg: "expected `src<TAB>relation<TAB>dst`".into(),
            });
        }
        let mut id = |name: &str| {
            *index.entry(name.to_string()).or_insert_with(|| {
                ids.push(name.to_string());
                ids.len() - 1
            })
        };
        let (u, v) = (id(f[0]), id(f[2]));
        edges.push((u, v, f[1].to_string(), i + 1));
    }
    let n = ids.len();
    let mut g = PersonGraph::new(ids, Matrix::from_vec(n, 1, vec![S::one(); n]))?;
    for (u, v, tag, line) in edges {
        g.add_edge(u, v, &tag).map_err(|e| LinkPredError::Format { line, msg: e.to_string() })?;
    }
    Ok(g)
}

/// Optional feature sidecar: `node<TAB>v1<TAB>v2...` for every node.
pub fn read_node_features<S: Scalar>(graph: &mut PersonGraph<S>, text: &str) -> Result<(), LinkPredError> {
    let mut rows: BTreeMap<usize, Vec<S>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let name = f.next().unwrap_or_default();
        let u = graph.node_index(name).ok_or_else(|| LinkPredError::UnknownNodeName(name.to_string()))?;
        let vals = f
            .map(|v| v.trim().parse::<f64>().map(S::lit))
            .collect::<Result<Vec<S>, _>>()
            .map_err(|e| LinkPredError::Format { line: i + 1, msg: e.to_string() })?;
        rows.insert(u, vals);
    }
    if rows.len() != graph.num_nodes() {
        return Err(LinkPredError::ShapeMismatch(format!("features for {} of {} nodes", rows.len(), graph.num_nodes())));
    }
    let width = rows.values().next().map_or(0, Vec::len);
    if rows.values().any(|r| r.len() != width) {
        return Err(LinkPredError::ShapeMismatch("ragged feature rows".into()));
    }
    graph.features = Matrix::from_rows(&rows.into_values().collect::<Vec<_>>());
    Ok(())
}

/// Edge list in the same TSV format; relation tags default to `related`.
pub fn write_edge_list<S: Scalar>(graph: &PersonGraph<S>) -> String {
    let mut out = String::new();
    for ((u, v), tag) in &graph.edges {
        let tag = if tag.is_empty() { "related" } else { tag };
        out.push_str(&format!("{}\t{}\t{}\n", graph.node_ids[*u], tag, graph.node_ids[*v]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSplit {
    pub train: Vec<(usize, usize)>,
    pub valid: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
    pub valid_neg: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

impl EdgeSplit {
    /// 80/10/10 split by edge with as many sampled non-edges as positives in
    /// the validation and test parts.
    pub fn new<S: Scalar>(graph: &PersonGraph<S>, seed: u64) -> Result<Self, LinkPredError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<(usize, usize)> = graph.edges().collect();
        edges.shuffle(&mut rng);
        let e = edges.len();
        let n_test = (e as f64 * 0.1).round() as usize;
        let n_valid = (e as f64 * 0.1).round() as usize;
        let test = edges[..n_test].to_vec();
        let valid = edges[n_test..n_test + n_valid].to_vec();
        let train = edges[n_test + n_valid..].to_vec();
        for (name, part) in [("train", &train), ("validation", &valid), ("test", &test)] {
            if part.is_empty() {
                return Err(LinkPredError::EmptySplit(name));
            }
        }
        let mut taken = HashSet::new();
        let valid_neg = sample_non_edges(graph, valid.len(), &mut taken, &mut rng);
        let test_neg = sample_non_edges(graph, test.len(), &mut taken, &mut rng);
        if valid_neg.len() < valid.len() || test_neg.len() < test.len() {
            return Err(LinkPredError::EmptySplit("negative"));
        }
        Ok(Self {
            train,
            valid,
            test,
            valid_neg,
            test_neg,
        })
    }
}

/// Up to `count` distinct non-edges not already in `taken` (which is updated).
pub fn sample_non_edges<S: Scalar, R: Rng>(graph: &PersonGraph<S>, count: usize, taken: &mut HashSet<(usize, usize)>, rng: &mut R) -> Vec<(usize, usize)> {
    let n = graph.num_nodes();
    let mut out = Vec::with_capacity(count);
    if n < 2 {
        return out;
    }
    let max_attempts = 100 * count + 1000;
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let k = key(u, v);
        if u == v || graph.has_edge(u, v) || taken.contains(&k) {
            continue;
        }
        taken.insert(k);
        out.push(k);
    }
    out
}

/// `m = ⌈c · log₂²(n)⌉` anchor sets; set `j` has about `n / 2^(j mod L + 1)`
/// members with `L = ⌈log₂ n⌉`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub sets: Vec<Vec<usize>>,
}

impl AnchorSet {
    pub fn count(n: usize, c: f64) -> usize {
        if n < 2 {
            return 1;
        }
        let l = (n as f64).log2();
        (c * l * l).ceil().max(1.0) as usize
    }

    pub fn sample<R: Rng>(n: usize, c: f64, rng: &mut R) -> Self {
        let m = Self::count(n, c);
        let levels = ((n.max(2) as f64).log2().ceil() as usize).max(1);
        let sets = (0..m)
            .map(|j| {
                let size = (n >> (j % levels + 1)).max(1).min(n);
                let mut s = (0..n).choose_multiple(rng, size);
                s.sort_unstable();
                s
            })
            .collect();
        Self { sets }
    }
}

/// `n × m` matrix of `max_{a ∈ S_i} 1/(d(u, a) + 1)`, zero when unreachable.
pub fn pgnn_features<S: Scalar>(graph: &PersonGraph<S>, anchors: &AnchorSet) -> Matrix<S> {
    let n = graph.num_nodes();
    let columns: Vec<Vec<S>> = anchors
        .sets
        .par_iter()
        .map(|set| {
            graph
                .bfs_distances(set)
                .into_iter()
                .map(|d| d.map_or(S::zero(), |d| S::one() / S::from_usize_lossy(d + 1)))
                .collect()
        })
        .collect();
    let mut out = Matrix::zeros(n, anchors.sets.len());
    for (i, col) in columns.iter().enumerate() {
        for (u, &v) in col.iter().enumerate() {
            out[(u, i)] = v;
        }
    }
    out
}

fn propagate<S: Scalar>(adj: &[Vec<(usize, S)>], h: &Matrix<S>) -> Matrix<S> {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for (u, row) in adj.iter().enumerate() {
        for &(v, w) in row {
            let src = h.row(v).to_vec();
            crate::linalg::axpy(w, &src, out.row_mut(u));
        }
    }
    out
}

/// `relu(Â H W)`.
pub fn gcn_layer<S: Scalar>(graph: &PersonGraph<S>, h: &Matrix<S>, w: &Matrix<S>) -> Result<Matrix<S>, LinkPredError> {
    if h.rows() != graph.num_nodes() || h.cols() != w.rows() {
        return Err(LinkPredError::ShapeMismatch(format!(
            "H is {:?}, W is {:?}, graph has {} nodes",
            h.shape(),
            w.shape(),
            graph.num_nodes()
        )));
    }
    let adj = graph.normalized_adjacency();
    Ok(propagate(&adj, h).matmul(w).map(|x| x.max(S::zero())))
}

/// `σ(z_u · z_v)`.
pub fn score_edge<S: Scalar>(u: usize, v: usize, z: &Matrix<S>) -> Result<S, LinkPredError> {
    for x in [u, v] {
        if x >= z.rows() {
            return Err(LinkPredError::UnknownNode(x));
        }
    }
    Ok(sigmoid(dot(z.row(u), z.row(v))))
}

/// Rank-based AUC with ties counted half.
pub fn roc_auc<S: Scalar>(scores: &[S], labels: &[bool]) -> Result<f64, LinkPredError> {
    if scores.len() != labels.len() {
        return Err(LinkPredError::ShapeMismatch(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(LinkPredError::DegenerateLabels);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg_rank * idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Mean AUC of uniformly random scores on a balanced `n_pos`/`n_neg` split.
pub fn random_scorer_auc(n_pos: usize, n_neg: usize, resamples: usize, seed: u64) -> Result<f64, LinkPredError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
    let mut total = 0.0;
    for _ in 0..resamples {
        let scores: Vec<f64> = (0..labels.len()).map(|_| rng.gen()).collect();
        total += roc_auc(&scores, &labels)?;
    }
    Ok(total / resamples.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gcn,
    Pgnn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::Pgnn => "pgnn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gcn" => Some(ModelKind::Gcn),
            "pgnn" | "p-gnn" => Some(ModelKind::Pgnn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub hidden: usize,
    pub embed_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub anchor_c: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            embed_dim: 32,
            epochs: 200,
            learning_rate: 0.01,
            anchor_c: 1.0,
        }
    }
}

/// One dense layer; `propagate` applies `Â` before the weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<S> {
    pub w: Matrix<S>,
    pub b: Option<Matrix<S>>,
    pub relu: bool,
    pub propagate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkModel<S> {
    pub kind: ModelKind,
    pub layers: Vec<Layer<S>>,
    pub anchors: Option<AnchorSet>,
}

struct LayerCache<S> {
    input: Matrix<S>,
    pre: Matrix<S>,
}

impl<S: Scalar> LinkModel<S> {
    pub fn new<R: Rng>(kind: ModelKind, graph: &PersonGraph<S>, config: &LinkConfig, rng: &mut R) -> Self {
        let f = graph.features.cols();
        match kind {
            ModelKind::Gcn => Self {
                kind,
                layers: vec![
                    Layer {
                        w: Matrix::xavier(f, config.hidden, rng),
                        b: None,
                        relu: true,
                        propagate: true,
                    },
                    Layer {
                        w: Matrix::xavier(config.hidden, config.embed_dim, rng),
                        b: None,
                        relu: false,
                        propagate: true,
                    },
                ],
                anchors: None,
            },
            ModelKind::Pgnn => {
                let anchors = AnchorSet::sample(graph.num_nodes(), config.anchor_c, rng);
                let input = anchors.sets.len() + f;
                Self {
                    kind,
                    layers: vec![
                        Layer {
                            w: Matrix::xavier(input, config.hidden, rng),
                            b: Some(Matrix::zeros(1, config.hidden)),
                            relu: true,
                            propagate: false,
                        },
                        Layer {
                            w: Matrix::xavier(config.hidden, config.embed_dim, rng),
                            b: Some(Matrix::zeros(1, config.embed_dim)),
                            relu: false,
                            propagate: false,
                        },
                    ],
                    anchors: Some(anchors),
                }
            }
        }
    }

    fn input(&self, graph: &PersonGraph<S>) -> Matrix<S> {
        match &self.anchors {
            None => graph.features.clone(),
            Some(a) => {
                let pos = pgnn_features(graph, a);
                let rows: Vec<Vec<S>> = (0..graph.num_nodes())
                    .map(|u| pos.row(u).iter().chain(graph.features.row(u)).copied().collect())
                    .collect();
                Matrix::from_rows(&rows)
            }
        }
    }

    fn forward(&self, adj: &[Vec<(usize, S)>], x: Matrix<S>) -> (Matrix<S>, Vec<LayerCache<S>>) {
        let mut h = x;
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = if layer.propagate { propagate(adj, &h) } else { h };
            let mut pre = input.matmul(&layer.w);
            if let Some(b) = &layer.b {
                for r in 0..pre.rows() {
                    crate::linalg::axpy(S::one(), b.row(0), pre.row_mut(r));
                }
            }
            h = if layer.relu { pre.map(|v| v.max(S::zero())) } else { pre.clone() };
            caches.push(LayerCache { input, pre });
        }
        (h, caches)
    }

    /// Node embeddings using `graph`'s edges for message passing and anchor distances.
    pub fn embed(&self, graph: &PersonGraph<S>) -> Result<Matrix<S>, LinkPredError> {
        let x = self.input(graph);
        if x.cols() != self.layers[0].w.rows() {
            return Err(LinkPredError::ShapeMismatch(format!(
                "model expects {} input columns, graph gives {}",
                self.layers[0].w.rows(),
                x.cols()
            )));
        }
        Ok(self.forward(&graph.normalized_adjacency(), x).0)
    }

    fn params_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.w);
            if let Some(b) = &mut l.b {
                out.push(b);
            }
        }
        out
    }

    /// Mean BCE over `pairs` and its gradient, in `params_mut` order.
    fn loss_and_grad(&self, adj: &[Vec<(usize, S)>], x: &Matrix<S>, pairs: &[((usize, usize), bool)]) -> (S, Vec<Matrix<S>>) {
        let (z, caches) = self.forward(adj, x.clone());
        let n = S::from_usize_lossy(pairs.len());
        let mut dz = Matrix::zeros(z.rows(), z.cols());
        let mut loss = S::zero();
        let eps = S::lit(1e-7);
        for &((u, v), label) in pairs {
            let p = sigmoid(dot(z.row(u), z.row(v)));
            let t = if label { S::one() } else { S::zero() };
            let pc = p.max(eps).min(S::one() - eps);
            loss += -(t * pc.ln() + (S::one() - t) * (S::one() - pc).ln());
            let g = (p - t) / n;
            let (zu, zv) = (z.row(u).to_vec(), z.row(v).to_vec());
            crate::linalg::axpy(g, &zv, dz.row_mut(u));
            crate::linalg::axpy(g, &zu, dz.row_mut(v));
        }
        let mut grads_rev = Vec::new();
        let mut dh = dz;
        for (layer, cache) in self.layers.iter().zip(&caches).rev() {
            let dpre = if layer.relu {
                let mut d = dh.clone();
                for (g, &p) in d.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
                    if p <= S::zero() {
                        *g = S::zero();
                    }
                }
                d
            } else {
                dh
            };
            if layer.b.is_some() {
                let mut db = Matrix::zeros(1, dpre.cols());
                for r in 0..dpre.rows() {
                    crate::linalg::axpy(S::one(), dpre.row(r), db.row_mut(0));
                }
                grads_rev.push(db);
            }
            grads_rev.push(cache.input.t_matmul(&dpre));
            let dinput = dpre.matmul_t(&layer.w);
            dh = if layer.propagate { propagate(adj, &dinput) } else { dinput };
        }
        grads_rev.reverse();
        (loss / n, grads_rev)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedLinkModel<S> {
    pub model: LinkModel<S>,
    /// Validation ROC AUC after each epoch.
    pub valid_auc: Vec<f64>,
    pub loss: Vec<f64>,
}

struct Adam<S> {
    m: Vec<Matrix<S>>,
    v: Vec<Matrix<S>>,
    t: i32,
}

impl<S: Scalar> Adam<S> {
    fn step(&mut self, params: Vec<&mut Matrix<S>>, grads: &[Matrix<S>], lr: S) {
        let (b1, b2, eps) = (S::lit(0.9), S::lit(0.999), S::lit(1e-8));
        self.t += 1;
        let c1 = S::one() - b1.powi(self.t);
        let c2 = S::one() - b2.powi(self.t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..g.as_slice().len() {
                let gi = g.as_slice()[i];
                let mi = &mut m.as_mut_slice()[i];
                *mi = b1 * *mi + (S::one() - b1) * gi;
                let vi = &mut v.as_mut_slice()[i];
                *vi = b2 * *vi + (S::one() - b2) * gi * gi;
                let mhat = m.as_slice()[i] / c1;
                let vhat = v.as_slice()[i] / c2;
                p.as_mut_slice()[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

/// Scores for `(u, v)` pairs under embeddings `z`.
pub fn score_pairs<S: Scalar>(z: &Matrix<S>, pairs: &[(usize, usize)]) -> Vec<S> {
    pairs.iter().map(|&(u, v)| sigmoid(dot(z.row(u), z.row(v)))).collect()
}

/// AUC of `positives` against `negatives` under embeddings `z`.
pub fn split_auc<S: Scalar>(z: &Matrix<S>, positives: &[(usize, usize)], negatives: &[(usize, usize)]) -> Result<f64, LinkPredError> {
    let mut scores = score_pairs(z, positives);
    scores.extend(score_pairs(z, negatives));
    let labels: Vec<bool> = (0..scores.len()).map(|i| i < positives.len()).collect();
    roc_auc(&scores, &labels)
}

/// Full-batch Adam on the training edges. Message passing and anchor
/// distances only see training edges.
pub fn train_link_predictor<S: Scalar>(graph: &PersonGraph<S>, split: &EdgeSplit, kind: ModelKind, config: &LinkConfig, seed: u64) -> Result<TrainedLinkModel<S>, LinkPredError> {
    fit_edges(graph, &split.train, Some((&split.valid, &split.valid_neg)), kind, config, seed)
}

/// Trains on every edge of `graph`, without a validation trace.
pub fn train_on_all_edges<S: Scalar>(graph: &PersonGraph<S>, kind: ModelKind, config: &LinkConfig, seed: u64) -> Result<TrainedLinkModel<S>, LinkPredError> {
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    fit_edges(graph, &edges, None, kind, config, seed)
}

type Validation<'a> = Option<(&'a [(usize, usize)], &'a [(usize, usize)])>;

fn fit_edges<S: Scalar>(graph: &PersonGraph<S>, train: &[(usize, usize)], valid: Validation, kind: ModelKind, config: &LinkConfig, seed: u64) -> Result<TrainedLinkModel<S>, LinkPredError> {
    if train.is_empty() {
        return Err(LinkPredError::EmptySplit("train"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train_graph = graph.with_edges(train);
    let mut model = LinkModel::new(kind, &train_graph, config, &mut rng);
    let adj = train_graph.normalized_adjacency();
    let x = model.input(&train_graph);
    let mut adam = Adam {
        m: model.params_mut().iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
        v: model.params_mut().iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
        t: 0,
    };
    let lr = S::lit(config.learning_rate);
    let mut valid_auc = Vec::with_capacity(config.epochs);
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut taken = HashSet::new();
        let negatives = sample_non_edges(graph, train.len(), &mut taken, &mut rng);
        let pairs: Vec<((usize, usize), bool)> = train
            .iter()
            .map(|&e| (e, true))
            .chain(negatives.into_iter().map(|e| (e, false)))
            .collect();
        let (loss, grads) = model.loss_and_grad(&adj, &x, &pairs);
        losses.push(loss.as_f64());
        if lr != S::zero() {
            adam.step(model.params_mut(), &grads, lr);
        }
        if let Some((pos, neg)) = valid {
            let z = model.forward(&adj, x.clone()).0;
            valid_auc.push(split_auc(&z, pos, neg)?);
        }
    }
    Ok(TrainedLinkModel {
        model,
        valid_auc,
        loss: losses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedEdge {
    pub u: usize,
    pub v: usize,
    pub score: f64,
}

/// Non-edges of `graph` scoring above `threshold`, best first; ties by `(u, v)`.
pub fn augment_graph<S: Scalar>(graph: &PersonGraph<S>, model: &LinkModel<S>, threshold: f64) -> Result<Vec<PredictedEdge>, LinkPredError> {
    let z = model.embed(graph)?;
    let n = graph.num_nodes();
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if graph.has_edge(u, v) {
                continue;
            }
            let score = score_edge(u, v, &z)?.as_f64();
            if score > threshold {
                out.push(PredictedEdge { u, v, score });
            }
        }
    }
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal).then((a.u, a.v).cmp(&(b.u, b.v))));
    Ok(out)
}

/// Per-model summary over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub model: String,
    pub seeds: Vec<u64>,
    pub roc_auc: f64,
    pub std_dev: f64,
}

impl LinkMetrics {
    pub fn new(kind: ModelKind, seeds: Vec<u64>, aucs: &[f64]) -> Self {
        let n = aucs.len().max(1) as f64;
        let mean = aucs.iter().sum::<f64>() / n;
        let var = aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        Self {
            model: kind.as_str().to_string(),
            seeds,
            roc_auc: mean,
            std_dev: var.sqrt(),
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
