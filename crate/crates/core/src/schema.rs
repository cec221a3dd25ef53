//! Personal-data entity type hierarchy and person-person relation set.
//!
//! Schemas are plain text, one declaration per line:
//!
//! ```text
//! # comment
//! version 1
//! type /person
//! type /person/politician
//! relation spouse_of symmetric
//! relation successor_of transitive domain=/person range=/person
//! ```
//!
//! Every non-root type must have its parent declared (anywhere in the file).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_DEPTH: usize = 3;

const DEFAULT_SCHEMA: &str = include_str!("../data/default.schema");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid type path `{0}`")]
    InvalidPath(String),
    #[error("schema validation failed: {0}")]
    Validation(String),
    #[error("label {0} is not in the schema")]
    UnknownLabel(TypePath),
}

/// A slash-separated label path such as `/person/politician`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypePath {
    segments: Vec<String>,
}

fn valid_segment(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl TypePath {
    pub fn new<I, T>(segments: I) -> Result<Self, SchemaError>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        let render = || format!("/{}", segments.join("/"));
        if segments.is_empty() || segments.len() > MAX_DEPTH {
            return Err(SchemaError::InvalidPath(render()));
        }
        if !segments.iter().all(|s| valid_segment(s)) {
            return Err(SchemaError::InvalidPath(render()));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn depth(&self) -> usize {
        self.segments.len()
    }

    pub fn is_root(&self) -> bool {
        self.segments.len() == 1
    }

    pub fn root(&self) -> &str {
        &self.segments[0]
    }

    pub fn parent(&self) -> Option<TypePath> {
        (self.segments.len() > 1).then(|| TypePath {
            segments: self.segments[..self.segments.len() - 1].to_vec(),
        })
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self) -> Vec<TypePath> {
        (1..self.segments.len())
            .rev()
            .map(|n| TypePath {
                segments: self.segments[..n].to_vec(),
            })
            .collect()
    }

    /// True if `self` equals `other` or lies beneath it.
    pub fn is_under(&self, other: &TypePath) -> bool {
        self.segments.len() >= other.segments.len()
            && self.segments[..other.segments.len()] == other.segments[..]
    }

    pub fn is_person(&self) -> bool {
        self.root() == "person"
    }
}

impl fmt::Display for TypePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.segments {
            write!(f, "/{s}")?;
        }
        Ok(())
    }
}

impl FromStr for TypePath {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .strip_prefix('/')
            .ok_or_else(|| SchemaError::InvalidPath(s.to_string()))?;
        TypePath::new(body.split('/'))
    }
}

impl Serialize for TypePath {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TypePath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDef {
    pub name: String,
    pub symmetric: bool,
    pub transitive: bool,
    pub hierarchical: bool,
    pub domain_type: TypePath,
    pub range_type: TypePath,
}

impl RelationDef {
    pub fn new(name: impl Into<String>) -> Self {
        let person: TypePath = "/person".parse().expect("static path");
        Self {
            name: name.into(),
            symmetric: false,
            transitive: false,
            hierarchical: false,
            domain_type: person.clone(),
            range_type: person,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologySchema {
    types: BTreeSet<TypePath>,
    relations: Vec<RelationDef>,
    version: String,
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl OntologySchema {
    /// Builds a schema and checks parent closure and relation uniqueness.
    pub fn new(
        types: impl IntoIterator<Item = TypePath>,
        relations: Vec<RelationDef>,
        version: impl Into<String>,
    ) -> Result<Self, SchemaError> {
        let types: BTreeSet<TypePath> = types.into_iter().collect();
        for t in &types {
            if let Some(p) = t.parent() {
                if !types.contains(&p) {
                    return Err(SchemaError::Validation(format!(
                        "type {t} declared without its parent {p}"
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for r in &relations {
            if !seen.insert(r.name.as_str()) {
                return Err(SchemaError::Validation(format!(
                    "relation `{}` declared more than once",
                    r.name
                )));
            }
            for end in [&r.domain_type, &r.range_type] {
                if !types.contains(end) {
                    return Err(SchemaError::Validation(format!(
                        "relation `{}` refers to undeclared type {end}",
                        r.name
                    )));
                }
            }
        }
        Ok(Self {
            types,
            relations,
            version: version.into(),
        })
    }

    /// Parses the line-oriented schema format.
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut types = Vec::new();
        let mut relations = Vec::new();
        let mut version = String::from("0");
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| SchemaError::Parse { line: line_no, msg };
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("type") => {
                    let path = parts
                        .next()
                        .ok_or_else(|| perr("`type` needs a path".into()))?;
                    if parts.next().is_some() {
                        return Err(perr("trailing tokens after type path".into()));
                    }
                    types.push(path.parse().map_err(|e: SchemaError| perr(e.to_string()))?);
                }
                Some("relation") => {
                    let name = parts
                        .next()
                        .ok_or_else(|| perr("`relation` needs a name".into()))?;
                    if !valid_identifier(name) {
                        return Err(perr(format!("invalid relation name `{name}`")));
                    }
                    let mut rel = RelationDef::new(name);
                    for flag in parts {
                        match flag {
                            "symmetric" => rel.symmetric = true,
                            "transitive" => rel.transitive = true,
                            "hierarchical" => rel.hierarchical = true,
                            other => {
                                let (key, value) = other
                                    .split_once('=')
                                    .ok_or_else(|| perr(format!("unknown flag `{other}`")))?;
                                let path: TypePath = value
                                    .parse()
                                    .map_err(|e: SchemaError| perr(e.to_string()))?;
                                match key {
                                    "domain" => rel.domain_type = path,
                                    "range" => rel.range_type = path,
                                    _ => return Err(perr(format!("unknown key `{key}`"))),
                                }
                            }
                        }
                    }
                    relations.push(rel);
                }
                Some("version") => {
                    version = parts.collect::<Vec<_>>().join(" ");
                    if version.is_empty() {
                        return Err(perr("`version` needs a value".into()));
                    }
                }
                Some(other) => return Err(perr(format!("unknown directive `{other}`"))),
                None => unreachable!(),
            }
        }
        Self::new(types, relations, version)
    }

    /// The shipped 36-type, 9-relation schema.
    pub fn default_schema() -> Self {
        Self::parse(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }

    pub fn default_schema_text() -> &'static str {
        DEFAULT_SCHEMA
    }

    pub fn types(&self) -> &BTreeSet<TypePath> {
        &self.types
    }

    pub fn relations(&self) -> &[RelationDef] {
        &self.relations
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn contains(&self, path: &TypePath) -> bool {
        self.types.contains(path)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    /// Closes a label set under ancestors.
    pub fn expand_labels<'a>(
        &self,
        labels: impl IntoIterator<Item = &'a TypePath>,
    ) -> Result<BTreeSet<TypePath>, SchemaError> {
        let mut out = BTreeSet::new();
        for label in labels {
            if !self.contains(label) {
                return Err(SchemaError::UnknownLabel(label.clone()));
            }
            out.insert(label.clone());
            out.extend(label.ancestors());
        }
        Ok(out)
    }

    /// Renders back to the text format. `parse(render())` is structurally equal.
    pub fn render(&self) -> String {
        let mut out = format!("version {}\n", self.version);
        for t in &self.types {
            out.push_str(&format!("type {t}\n"));
        }
        for r in &self.relations {
            out.push_str("relation ");
            out.push_str(&r.name);
            if r.symmetric {
                out.push_str(" symmetric");
            }
            if r.transitive {
                out.push_str(" transitive");
            }
            if r.hierarchical {
                out.push_str(" hierarchical");
            }
            if r.domain_type.to_string() != "/person" {
                out.push_str(&format!(" domain={}", r.domain_type));
            }
            if r.range_type.to_string() != "/person" {
                out.push_str(&format!(" range={}", r.range_type));
            }
            out.push('\n');
        }
        out
    }
}
