//! The person ontology graph: person nodes carrying typed attributes and
//! typed person-person edges, with N-Triples and edge-list export and an
//! append-only mutation journal.
//!
//! N-Triples vocabulary:
//!
//! ```text
//! <urn:person:3> <urn:pde:#name> "Ann Lee" .
//! <urn:person:3> <urn:pde:/org/education> "Yale"^^<urn:pde:#provenance/gazetteer> .
//! <urn:person:3> <urn:pde:spouse_of> <urn:person:7> .
//! <urn:edge:3:spouse_of:7> <urn:pde:#confidence> "0.9" .
//! <urn:edge:3:spouse_of:7> <urn:pde:#provenance> "labeling_function" .
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotators::{EntityMention, Provenance};
use crate::schema::{OntologySchema, TypePath};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("mention `{0}` is not labelled as a person")]
    NotAPerson(String),
    #[error("unknown node {0}")]
    UnknownNode(u64),
    #[error("invalid attribute type {0}")]
    InvalidType(TypePath),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("empty canonical name")]
    EmptyName,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown vocabulary `{uri}`")]
    UnknownVocabulary { line: usize, uri: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeProvenance {
    LabelingFunction,
    RelModel,
    Predicted,
}

impl EdgeProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeProvenance::LabelingFunction => "labeling_function",
            EdgeProvenance::RelModel => "rel_model",
            EdgeProvenance::Predicted => "predicted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [EdgeProvenance::LabelingFunction, EdgeProvenance::RelModel, EdgeProvenance::Predicted]
            .into_iter()
            .find(|p| p.as_str() == s)
    }
}

fn attr_provenance_str(p: Provenance) -> &'static str {
    match p {
        Provenance::Gazetteer => "gazetteer",
        Provenance::Pattern => "pattern",
        Provenance::Classifier => "classifier",
        Provenance::Manual => "manual",
    }
}

fn parse_attr_provenance(s: &str) -> Option<Provenance> {
    [Provenance::Gazetteer, Provenance::Pattern, Provenance::Classifier, Provenance::Manual]
        .into_iter()
        .find(|p| attr_provenance_str(*p) == s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonNode {
    pub id: u64,
    pub canonical_name: String,
    /// `(type, value)` → provenance of the first assertion.
    pub attributes: BTreeMap<(TypePath, String), Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub head: u64,
    pub relation: String,
    pub tail: u64,
    pub provenance: EdgeProvenance,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    AddPerson { id: u64, name: String },
    AttachAttribute { node: u64, type_path: TypePath, value: String, provenance: Provenance },
    AddRelation { edge: RelationEdge },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OntologyGraph {
    schema: OntologySchema,
    nodes: BTreeMap<u64, PersonNode>,
    name_index: BTreeMap<String, u64>,
    edges: BTreeMap<(u64, String, u64), (EdgeProvenance, f64)>,
    revision: u64,
    next_id: u64,
    journal: Vec<Mutation>,
}

/// Case-folded, whitespace-collapsed form used for identity.
pub fn normalize_name(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl OntologyGraph {
    pub fn new(schema: OntologySchema) -> Self {
        Self {
            schema,
            nodes: BTreeMap::new(),
            name_index: BTreeMap::new(),
            edges: BTreeMap::new(),
            revision: 0,
            next_id: 0,
            journal: Vec::new(),
        }
    }

    pub fn schema(&self) -> &OntologySchema {
        &self.schema
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn nodes(&self) -> impl Iterator<Item = &PersonNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: u64) -> Option<&PersonNode> {
        self.nodes.get(&id)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = RelationEdge> + '_ {
        self.edges.iter().map(|((h, r, t), (p, c))| RelationEdge {
            head: *h,
            relation: r.clone(),
            tail: *t,
            provenance: *p,
            confidence: *c,
        })
    }

    pub fn journal(&self) -> &[Mutation] {
        &self.journal
    }

    pub fn find_person(&self, name: &str) -> Option<u64> {
        self.name_index.get(&normalize_name(name)).copied()
    }

    /// Existing node with the same normalised name, else a new node.
    pub fn resolve_name(&mut self, name: &str) -> Result<u64, GraphError> {
        let key = normalize_name(name);
        if key.is_empty() {
            return Err(GraphError::EmptyName);
        }
        if let Some(&id) = self.name_index.get(&key) {
            return Ok(id);
        }
        let id = self.next_id;
        let canonical = name.split_whitespace().collect::<Vec<_>>().join(" ");
        self.insert_node(id, canonical);
        Ok(id)
    }

    fn insert_node(&mut self, id: u64, name: String) {
        self.name_index.insert(normalize_name(&name), id);
        self.nodes.insert(
            id,
            PersonNode {
                id,
                canonical_name: name.clone(),
                attributes: BTreeMap::new(),
            },
        );
        self.next_id = self.next_id.max(id + 1);
        self.revision += 1;
        self.journal.push(Mutation::AddPerson { id, name });
    }

    pub fn resolve_person(&mut self, mention: &EntityMention) -> Result<u64, GraphError> {
        if !mention.is_person() {
            return Err(GraphError::NotAPerson(mention.surface.clone()));
        }
        self.resolve_name(&mention.surface)
    }

    /// Returns whether the attribute was new.
    pub fn attach_attribute(&mut self, node: u64, type_path: &TypePath, value: &str, provenance: Provenance) -> Result<bool, GraphError> {
        if !self.schema.contains(type_path) || type_path.segments() == ["person"] {
            return Err(GraphError::InvalidType(type_path.clone()));
        }
        let n = self.nodes.get_mut(&node).ok_or(GraphError::UnknownNode(node))?;
        let key = (type_path.clone(), value.to_string());
        if n.attributes.contains_key(&key) {
            return Ok(false);
        }
        n.attributes.insert(key, provenance);
        self.revision += 1;
        self.journal.push(Mutation::AttachAttribute {
            node,
            type_path: type_path.clone(),
            value: value.to_string(),
            provenance,
        });
        Ok(true)
    }

    /// Inserts or confidence-upgrades an edge. Symmetric relations are stored
    /// with the smaller node id as head. Returns whether the graph changed.
    pub fn add_relation(&mut self, edge: RelationEdge) -> Result<bool, GraphError> {
        for id in [edge.head, edge.tail] {
            if !self.nodes.contains_key(&id) {
                return Err(GraphError::UnknownNode(id));
            }
        }
        let def = self
            .schema
            .relation(&edge.relation)
            .ok_or_else(|| GraphError::UnknownRelation(edge.relation.clone()))?;
        if !(0.0..=1.0).contains(&edge.confidence) {
            return Err(GraphError::InvalidConfidence(edge.confidence));
        }
        let (head, tail) = if def.symmetric && edge.tail < edge.head {
            (edge.tail, edge.head)
        } else {
            (edge.head, edge.tail)
        };
        let key = (head, edge.relation.clone(), tail);
        if let Some((_, c)) = self.edges.get(&key) {
            if *c >= edge.confidence {
                return Ok(false);
            }
        }
        self.edges.insert(key, (edge.provenance, edge.confidence));
        self.revision += 1;
        self.journal.push(Mutation::AddRelation {
            edge: RelationEdge { head, tail, ..edge },
        });
        Ok(true)
    }

    pub fn apply(&mut self, m: &Mutation) -> Result<(), GraphError> {
        match m {
            Mutation::AddPerson { id, name } => {
                if normalize_name(name).is_empty() {
                    return Err(GraphError::EmptyName);
                }
                if !self.nodes.contains_key(id) {
                    self.insert_node(*id, name.clone());
                }
            }
            Mutation::AttachAttribute {
                node,
                type_path,
                value,
                provenance,
            } => {
                self.attach_attribute(*node, type_path, value, *provenance)?;
            }
            Mutation::AddRelation { edge } => {
                self.add_relation(edge.clone())?;
            }
        }
        Ok(())
    }
}

pub fn write_journal(graph: &OntologyGraph) -> String {
    let mut out = String::new();
    for m in graph.journal() {
        out.push_str(&serde_json::to_string(m).expect("mutation serialises"));
        out.push('\n');
    }
    out
}

pub fn replay_journal(text: &str, schema: OntologySchema) -> Result<OntologyGraph, GraphError> {
    let mut g = OntologyGraph::new(schema);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let m: Mutation = serde_json::from_str(line).map_err(|e| GraphError::Parse { line: i + 1, msg: e.to_string() })?;
        g.apply(&m)?;
    }
    Ok(g)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn person_uri(id: u64) -> String {
    format!("<urn:person:{id}>")
}

fn edge_uri(h: u64, r: &str, t: u64) -> String {
    format!("<urn:edge:{h}:{r}:{t}>")
}

/// Canonical N-Triples: per node in id order its name, attributes sorted by
/// (type, value) and outgoing edges sorted by (relation, tail); then edge
/// metadata in edge order.
pub fn export_ntriples(graph: &OntologyGraph) -> String {
    let mut out = String::new();
    let mut edges_by_head: BTreeMap<u64, Vec<(&String, u64)>> = BTreeMap::new();
    for (h, r, t) in graph.edges.keys() {
        edges_by_head.entry(*h).or_default().push((r, *t));
    }
    for node in graph.nodes.values() {
        let s = person_uri(node.id);
        let _ = writeln!(out, "{s} <urn:pde:#name> \"{}\" .", escape(&node.canonical_name));
        for ((ty, value), prov) in &node.attributes {
            let _ = writeln!(out, "{s} <urn:pde:{ty}> \"{}\"^^<urn:pde:#provenance/{}> .", escape(value), attr_provenance_str(*prov));
        }
        for (r, t) in edges_by_head.get(&node.id).into_iter().flatten() {
            let _ = writeln!(out, "{s} <urn:pde:{r}> {} .", person_uri(*t));
        }
    }
    for ((h, r, t), (p, c)) in &graph.edges {
        let e = edge_uri(*h, r, *t);
        let _ = writeln!(out, "{e} <urn:pde:#confidence> \"{c}\" .");
        let _ = writeln!(out, "{e} <urn:pde:#provenance> \"{}\" .", p.as_str());
    }
    out
}

enum Term {
    Iri(String),
    Literal { value: String, datatype: Option<String> },
}

struct LineParser<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> GraphError {
        GraphError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn iri(&mut self) -> Result<String, GraphError> {
        self.skip_ws();
        let body = self.rest.strip_prefix('<').ok_or_else(|| self.err("expected `<`"))?;
        let end = body.find('>').ok_or_else(|| self.err("unterminated IRI"))?;
        let iri = body[..end].to_string();
        self.rest = &body[end + 1..];
        Ok(iri)
    }

    fn literal(&mut self) -> Result<String, GraphError> {
        let mut chars = self.rest[1..].char_indices();
        let mut out = String::new();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.rest = &self.rest[1 + i + 1..];
                    return Ok(out);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or_else(|| self.err("dangling escape"))?;
                    match e {
                        '\\' => out.push('\\'),
                        '"' => out.push('"'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        't' => out.push('\t'),
                        'u' | 'U' => {
                            let len = if e == 'u' { 4 } else { 8 };
                            let hex: String = (0..len).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                            let code = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32).ok_or_else(|| self.err("bad unicode escape"))?;
                            out.push(code);
                        }
                        other => return Err(self.err(format!("unknown escape `\\{other}`"))),
                    }
                }
                c => out.push(c),
            }
        }
        Err(self.err("unterminated literal"))
    }

    fn object(&mut self) -> Result<Term, GraphError> {
        self.skip_ws();
        if self.rest.starts_with('<') {
            return Ok(Term::Iri(self.iri()?));
        }
        if !self.rest.starts_with('"') {
            return Err(self.err("expected IRI or literal"));
        }
        let value = self.literal()?;
        let datatype = if let Some(r) = self.rest.strip_prefix("^^") {
            self.rest = r;
            Some(self.iri()?)
        } else {
            None
        };
        Ok(Term::Literal { value, datatype })
    }

    fn end(&mut self) -> Result<(), GraphError> {
        self.skip_ws();
        if self.rest.trim_end() != "." {
            return Err(self.err("line must end with ` .`"));
        }
        Ok(())
    }
}

fn parse_person(uri: &str, line: usize) -> Result<u64, GraphError> {
    uri.strip_prefix("urn:person:")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| GraphError::UnknownVocabulary { line, uri: uri.to_string() })
}

/// Inverse of [`export_ntriples`]; every mutation is re-validated.
pub fn import_ntriples(text: &str, schema: OntologySchema) -> Result<OntologyGraph, GraphError> {
    let mut names: BTreeMap<u64, String> = BTreeMap::new();
    let mut attrs = Vec::new();
    let mut edges: BTreeMap<(u64, String, u64), usize> = BTreeMap::new();
    let mut confidence: BTreeMap<(u64, String, u64), f64> = BTreeMap::new();
    let mut provenance: BTreeMap<(u64, String, u64), EdgeProvenance> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let mut p = LineParser { rest: raw, line };
        let subject = p.iri()?;
        let predicate = p.iri()?;
        let object = p.object()?;
        p.end()?;
        let vocab = |uri: &str| GraphError::UnknownVocabulary { line, uri: uri.to_string() };
        let pred = predicate.strip_prefix("urn:pde:").ok_or_else(|| vocab(&predicate))?;
        if let Some(edge) = subject.strip_prefix("urn:edge:") {
            let parts: Vec<&str> = edge.split(':').collect();
            let key = match parts.as_slice() {
                [h, r, t] => (
                    h.parse().map_err(|_| vocab(&subject))?,
                    r.to_string(),
                    t.parse().map_err(|_| vocab(&subject))?,
                ),
                _ => return Err(vocab(&subject)),
            };
            let Term::Literal { value, datatype: None } = object else {
                return Err(p.err("edge metadata must be a plain literal"));
            };
            match pred {
                "#confidence" => {
                    confidence.insert(key, value.parse().map_err(|_| p.err(format!("bad confidence `{value}`")))?);
                }
                "#provenance" => {
                    provenance.insert(key, EdgeProvenance::parse(&value).ok_or_else(|| p.err(format!("bad provenance `{value}`")))?);
                }
                _ => return Err(vocab(&predicate)),
            }
            continue;
        }
        let id = parse_person(&subject, line)?;
        match (pred, object) {
            ("#name", Term::Literal { value, datatype: None }) => {
                names.insert(id, value);
            }
            (ty, Term::Literal { value, datatype: Some(dt) }) if ty.starts_with('/') => {
                let type_path: TypePath = ty.parse().map_err(|_| vocab(&predicate))?;
                let prov = dt
                    .strip_prefix("urn:pde:#provenance/")
                    .and_then(parse_attr_provenance)
                    .ok_or_else(|| vocab(&dt))?;
                attrs.push((line, id, type_path, value, prov));
            }
            (rel, Term::Iri(obj)) if !rel.starts_with(['/', '#']) => {
                if schema.relation(rel).is_none() {
                    return Err(vocab(&predicate));
                }
                edges.insert((id, rel.to_string(), parse_person(&obj, line)?), line);
            }
            _ => return Err(vocab(&predicate)),
        }
    }
    let mut g = OntologyGraph::new(schema);
    let at = |line: usize| move |e: GraphError| GraphError::Parse { line, msg: e.to_string() };
    for (id, name) in names {
        g.apply(&Mutation::AddPerson { id, name }).map_err(at(0))?;
    }
    for (line, node, type_path, value, provenance) in attrs {
        g.attach_attribute(node, &type_path, &value, provenance).map_err(at(line))?;
    }
    for (key, line) in edges {
        let (Some(c), Some(p)) = (confidence.get(&key), provenance.get(&key)) else {
            return Err(GraphError::Parse {
                line,
                msg: "edge lacks confidence or provenance".into(),
            });
        };
        g.add_relation(RelationEdge {
            head: key.0,
            relation: key.1.clone(),
            tail: key.2,
            provenance: *p,
            confidence: *c,
        })
        .map_err(at(line))?;
    }
    Ok(g)
}

/// `head_id<TAB>relation<TAB>tail_id<TAB>confidence<TAB>provenance`, sorted.
pub fn export_edgelist(graph: &OntologyGraph) -> String {
    let mut out = String::new();
    for e in graph.edges() {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", e.head, e.relation, e.tail, e.confidence, e.provenance.as_str());
    }
    out
}

pub fn parse_edgelist(text: &str) -> Result<Vec<RelationEdge>, GraphError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let err = |msg: &str| GraphError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 5 {
                return Err(err("expected 5 tab-separated fields"));
            }
            Ok(RelationEdge {
                head: f[0].parse().map_err(|_| err("bad head id"))?,
                relation: f[1].to_string(),
                tail: f[2].parse().map_err(|_| err("bad tail id"))?,
                confidence: f[3].parse().map_err(|_| err("bad confidence"))?,
                provenance: EdgeProvenance::parse(f[4]).ok_or_else(|| err("bad provenance"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn graph() -> OntologyGraph {
        OntologyGraph::new(OntologySchema::default_schema())
    }

    fn path(s: &str) -> TypePath {
        s.parse().unwrap()
    }

    fn edge(h: u64, r: &str, t: u64, c: f64) -> RelationEdge {
        RelationEdge {
            head: h,
            relation: r.into(),
            tail: t,
            provenance: EdgeProvenance::LabelingFunction,
            confidence: c,
        }
    }

    #[test]
    fn resolve_examples() {
        let mut g = graph();
        let a = g.resolve_name("John Smith").unwrap();
        assert_eq!(g.resolve_name("John Smith").unwrap(), a);
        assert_eq!(g.resolve_name("JOHN  SMITH").unwrap(), a);
        assert_ne!(g.resolve_name("J. Smith").unwrap(), a);
        let m = EntityMention {
            doc_id: "d".into(),
            sent_index: 0,
            start_tok: 0,
            end_tok: 0,
            surface: "Yale".into(),
            coarse_label: Some(path("/org")),
            fine_labels: BTreeSet::new(),
            provenance: Provenance::Gazetteer,
        };
        assert!(matches!(g.resolve_person(&m), Err(GraphError::NotAPerson(_))));
    }

    #[test]
    fn attribute_examples() {
        let mut g = graph();
        let a = g.resolve_name("Ann").unwrap();
        let dob = path("/datetime/date_of_birth");
        assert!(g.attach_attribute(a, &dob, "1962-01-01", Provenance::Pattern).unwrap());
        assert!(!g.attach_attribute(a, &dob, "1962-01-01", Provenance::Pattern).unwrap());
        g.attach_attribute(a, &path("/org/education"), "Brigham Young University", Provenance::Gazetteer).unwrap();
        assert_eq!(g.node(a).unwrap().attributes.len(), 2);
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.attach_attribute(99, &dob, "x", Provenance::Manual), Err(GraphError::UnknownNode(99)));
        assert!(matches!(g.attach_attribute(a, &path("/person"), "x", Provenance::Manual), Err(GraphError::InvalidType(_))));
        assert!(matches!(g.attach_attribute(a, &path("/org/unknown"), "x", Provenance::Manual), Err(GraphError::InvalidType(_))));
    }

    #[test]
    fn relation_examples() {
        let mut g = graph();
        let a = g.resolve_name("A").unwrap();
        let b = g.resolve_name("B").unwrap();
        g.add_relation(edge(a, "spouse_of", b, 0.6)).unwrap();
        g.add_relation(edge(b, "spouse_of", a, 0.6)).unwrap();
        assert_eq!(g.num_edges(), 1);
        g.add_relation(edge(b, "spouse_of", a, 0.9)).unwrap();
        assert_eq!(g.edges().next().unwrap().confidence, 0.9);
        assert_eq!(g.edges().next().unwrap().head, a);
        let rev = g.revision();
        assert!(!g.add_relation(edge(a, "spouse_of", b, 0.9)).unwrap());
        assert_eq!(g.revision(), rev);
        g.add_relation(edge(b, "parent_of", a, 1.0)).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert!(matches!(g.add_relation(edge(a, "likes", b, 1.0)), Err(GraphError::UnknownRelation(_))));
        assert!(matches!(g.add_relation(edge(a, "spouse_of", 42, 1.0)), Err(GraphError::UnknownNode(42))));
    }

    #[test]
    fn ntriples_examples() {
        let g = graph();
        assert_eq!(export_ntriples(&g), "");
        let mut g = graph();
        let a = g.resolve_name("Ann \"Nan\" Lee").unwrap();
        let out = export_ntriples(&g);
        assert_eq!(out.lines().count(), 1);
        assert!(out.ends_with(" .\n"));
        g.attach_attribute(a, &path("/contact/email"), "ann@x.org", Provenance::Pattern).unwrap();
        let b = g.resolve_name("Bo").unwrap();
        g.add_relation(edge(a, "sibling_of", b, 0.75)).unwrap();
        let text = export_ntriples(&g);
        let back = import_ntriples(&text, OntologySchema::default_schema()).unwrap();
        assert_eq!(export_ntriples(&back), text);
        assert_eq!(back.find_person("ann \"nan\" lee"), Some(a));
    }

    #[test]
    fn ntriples_errors() {
        let s = OntologySchema::default_schema;
        let e = import_ntriples("<urn:person:1> <urn:pde:#name> \"A\"\n", s()).unwrap_err();
        assert!(matches!(e, GraphError::Parse { line: 1, .. }));
        let e = import_ntriples("<urn:person:1> <urn:pde:#name> \"A\" .\n<urn:person:1> <http://xmlns.com/foaf/0.1/knows> <urn:person:1> .\n", s()).unwrap_err();
        assert!(matches!(e, GraphError::UnknownVocabulary { line: 2, .. }));
        let e = import_ntriples("<urn:person:1> <urn:pde:likes> <urn:person:2> .\n", s()).unwrap_err();
        assert!(matches!(e, GraphError::UnknownVocabulary { .. }));
    }

    #[test]
    fn edgelist_examples() {
        assert_eq!(export_edgelist(&graph()), "");
        let mut g = graph();
        let a = g.resolve_name("A").unwrap();
        let b = g.resolve_name("B").unwrap();
        g.add_relation(edge(a, "spouse_of", b, 0.5)).unwrap();
        g.add_relation(RelationEdge {
            provenance: EdgeProvenance::Predicted,
            ..edge(b, "opponent_of", a, 0.25)
        })
        .unwrap();
        let text = export_edgelist(&g);
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.matches('\t').count() == 4));
        assert_eq!(parse_edgelist(&text).unwrap(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn journal_replay() {
        let mut g = graph();
        let a = g.resolve_name("A").unwrap();
        let b = g.resolve_name("B").unwrap();
        g.attach_attribute(a, &path("/location/city"), "Provo", Provenance::Gazetteer).unwrap();
        g.add_relation(edge(a, "colleague_of", b, 0.5)).unwrap();
        g.add_relation(edge(a, "colleague_of", b, 0.8)).unwrap();
        let back = replay_journal(&write_journal(&g), OntologySchema::default_schema()).unwrap();
        assert_eq!(export_ntriples(&back), export_ntriples(&g));
        assert_eq!(back.revision(), g.revision());
    }
}
