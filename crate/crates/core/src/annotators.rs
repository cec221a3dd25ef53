//! Rule-based personal-data annotation.
//!
//! Three annotator families feed the rest of the pipeline:
//!
//! * [`GazetteerMatcher`]: dictionary lookup over token sequences with
//!   leftmost-longest, non-overlapping selection.
//! * [`PatternRule`]: regular expressions for high-precision coarse types
//!   (email, url, phone, zip, number, date), snapped to token boundaries.
//! * [`LabelingFunction`]: cue-lexicon heuristics that propose person-person
//!   relation candidates between adjacent person mentions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{tokenize, Sentence};
use crate::schema::{OntologySchema, RelationDef, SchemaError, TypePath};

const DEFAULT_RULES: &str = include_str!("../data/default.rules");
const DEFAULT_LFS: &str = include_str!("../data/default.lfs");

#[derive(Debug, Error)]
pub enum AnnotatorError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: rule does not compile: {msg}")]
    RuleCompile { line: usize, msg: String },
    #[error("gazetteer for {0} has no usable entries")]
    EmptyGazetteer(TypePath),
    #[error("no records to project")]
    EmptyRecords,
    #[error("labeling function `{lf}` refers to unknown relation `{relation}`")]
    UnknownRelation { lf: String, relation: String },
    #[error("labeling function `{0}` needs window >= 1 and at least one cue")]
    InvalidLabelingFunction(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gazetteer,
    Pattern,
    Classifier,
    Manual,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Gazetteer => "gazetteer",
            Provenance::Pattern => "pattern",
            Provenance::Classifier => "classifier",
            Provenance::Manual => "manual",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A token span `[start_tok, end_tok]` (inclusive) inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityMention {
    pub doc_id: String,
    pub sent_index: usize,
    pub start_tok: usize,
    pub end_tok: usize,
    pub surface: String,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub coarse_label: Option<TypePath>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub fine_labels: BTreeSet<TypePath>,
    pub provenance: Provenance,
}

impl EntityMention {
    pub fn labels(&self) -> impl Iterator<Item = &TypePath> {
        self.coarse_label.iter().chain(self.fine_labels.iter())
    }

    pub fn is_person(&self) -> bool {
        self.labels().any(TypePath::is_person)
    }

    /// Most specific label: the deepest fine label, else the coarse label.
    pub fn primary_label(&self) -> Option<&TypePath> {
        self.fine_labels
            .iter()
            .max_by_key(|t| t.depth())
            .or(self.coarse_label.as_ref())
    }

    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.start_tok <= other.end_tok && other.start_tok <= self.end_tok
    }

    fn from_span(sentence: &Sentence, first: usize, last: usize, label: TypePath, provenance: Provenance) -> Self {
        EntityMention {
            doc_id: sentence.doc_id.clone(),
            sent_index: sentence.sent_index,
            start_tok: first,
            end_tok: last,
            surface: sentence.span_text(first, last),
            coarse_label: Some(label),
            fine_labels: BTreeSet::new(),
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    pub type_label: TypePath,
    pub entries: BTreeSet<String>,
    pub case_sensitive: bool,
}

impl Gazetteer {
    pub fn new(
        type_label: TypePath,
        entries: impl IntoIterator<Item = impl Into<String>>,
        case_sensitive: bool,
    ) -> Result<Self, AnnotatorError> {
        let entries: BTreeSet<String> = entries
            .into_iter()
            .map(Into::into)
            .filter(|e: &String| !tokenize(e, 0).is_empty())
            .collect();
        if entries.is_empty() {
            return Err(AnnotatorError::EmptyGazetteer(type_label));
        }
        Ok(Self {
            type_label,
            entries,
            case_sensitive,
        })
    }

    /// Parses one or more gazetteers. Each section starts with `@type <path>`
    /// (optionally followed by `case_sensitive`); other non-blank lines are entries.
    pub fn parse_file(text: &str) -> Result<Vec<Gazetteer>, AnnotatorError> {
        let mut out = Vec::new();
        let mut current: Option<(TypePath, bool, Vec<String>, usize)> = None;
        let flush = |cur: Option<(TypePath, bool, Vec<String>, usize)>, out: &mut Vec<Gazetteer>| {
            if let Some((label, cs, entries, _)) = cur {
                out.push(Gazetteer::new(label, entries, cs)?);
            }
            Ok::<_, AnnotatorError>(())
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@type") {
                let mut parts = rest.split_whitespace();
                let path: TypePath = parts
                    .next()
                    .ok_or_else(|| AnnotatorError::Parse {
                        line: i + 1,
                        msg: "`@type` needs a path".into(),
                    })?
                    .parse()
                    .map_err(|e: SchemaError| AnnotatorError::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
                let cs = match parts.next() {
                    None => false,
                    Some("case_sensitive") => true,
                    Some(other) => {
                        return Err(AnnotatorError::Parse {
                            line: i + 1,
                            msg: format!("unknown gazetteer flag `{other}`"),
                        })
                    }
                };
                flush(current.take(), &mut out)?;
                current = Some((path, cs, Vec::new(), i + 1));
            } else {
                match current.as_mut() {
                    Some((_, _, entries, _)) => entries.push(line.to_string()),
                    None => {
                        return Err(AnnotatorError::Parse {
                            line: i + 1,
                            msg: "entry before any `@type` header".into(),
                        })
                    }
                }
            }
        }
        flush(current, &mut out)?;
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut out = format!("@type {}", self.type_label);
        if self.case_sensitive {
            out.push_str(" case_sensitive");
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<String, usize>,
    // gazetteer indices whose entry ends here
    hits: Vec<usize>,
}

#[derive(Debug, Clone)]
struct TokenTrie {
    nodes: Vec<TrieNode>,
}

impl TokenTrie {
    fn new() -> Self {
        Self {
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, key: &[String], gazetteer: usize) {
        let mut node = 0;
        for tok in key {
            node = match self.nodes[node].children.get(tok) {
                Some(&n) => n,
                None => {
                    self.nodes.push(TrieNode::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[node].children.insert(tok.clone(), n);
                    n
                }
            };
        }
        let hits = &mut self.nodes[node].hits;
        if !hits.contains(&gazetteer) {
            hits.push(gazetteer);
            hits.sort_unstable();
        }
    }

    /// Longest match starting at `start`: `(length, lowest gazetteer index)`.
    fn longest(&self, tokens: &[String], start: usize) -> Option<(usize, usize)> {
        let mut node = 0;
        let mut best = None;
        for (offset, tok) in tokens[start..].iter().enumerate() {
            match self.nodes[node].children.get(tok) {
                Some(&n) => node = n,
                None => break,
            }
            if let Some(&g) = self.nodes[node].hits.first() {
                best = Some((offset + 1, g));
            }
        }
        best
    }
}

/// Compiled dictionary matcher over a list of gazetteers.
#[derive(Debug, Clone)]
pub struct GazetteerMatcher {
    labels: Vec<TypePath>,
    folded: TokenTrie,
    exact: TokenTrie,
}

impl GazetteerMatcher {
    pub fn new(gazetteers: &[Gazetteer]) -> Self {
        let mut folded = TokenTrie::new();
        let mut exact = TokenTrie::new();
        for (gi, g) in gazetteers.iter().enumerate() {
            for entry in &g.entries {
                let toks: Vec<String> = tokenize(entry, 0).into_iter().map(|t| t.text).collect();
                if g.case_sensitive {
                    exact.insert(&toks, gi);
                } else {
                    let toks: Vec<String> = toks.iter().map(|t| t.to_lowercase()).collect();
                    folded.insert(&toks, gi);
                }
            }
        }
        Self {
            labels: gazetteers.iter().map(|g| g.type_label.clone()).collect(),
            folded,
            exact,
        }
    }

    /// Leftmost-longest, non-overlapping dictionary matches sorted by start.
    /// When two gazetteers match the same longest span, the earlier one wins.
    pub fn annotate(&self, sentence: &Sentence) -> Vec<EntityMention> {
        let exact: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
        let folded: Vec<String> = exact.iter().map(|t| t.to_lowercase()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < exact.len() {
            let a = self.exact.longest(&exact, i);
            let b = self.folded.longest(&folded, i);
            let best = match (a, b) {
                (Some(x), Some(y)) => Some(if x.0 > y.0 || (x.0 == y.0 && x.1 < y.1) { x } else { y }),
                (x, y) => x.or(y),
            };
            match best {
                Some((len, g)) => {
                    out.push(EntityMention::from_span(
                        sentence,
                        i,
                        i + len - 1,
                        self.labels[g].clone(),
                        Provenance::Gazetteer,
                    ));
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}

pub fn gazetteer_annotate(sentence: &Sentence, gazetteers: &[Gazetteer]) -> Vec<EntityMention> {
    GazetteerMatcher::new(gazetteers).annotate(sentence)
}

#[derive(Debug, Clone)]
pub struct PatternRule {
    pub type_label: TypePath,
    pub priority: i32,
    regex: Regex,
}

impl PatternRule {
    pub fn new(type_label: TypePath, pattern: &str, priority: i32) -> Result<Self, regex::Error> {
        Ok(Self {
            type_label,
            priority,
            regex: Regex::new(pattern)?,
        })
    }

    pub fn pattern(&self) -> &str {
        self.regex.as_str()
    }

    /// Parses a rule pack: `rule <path> <priority> /<regex>/` per line.
    pub fn parse_pack(text: &str) -> Result<Vec<PatternRule>, AnnotatorError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: &str| AnnotatorError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let rest = line
                .strip_prefix("rule ")
                .ok_or_else(|| perr("expected `rule <path> <priority> /<regex>/`"))?
                .trim_start();
            let (path, rest) = rest.split_once(char::is_whitespace).ok_or_else(|| perr("missing priority"))?;
            let (prio, rest) = rest
                .trim_start()
                .split_once(char::is_whitespace)
                .ok_or_else(|| perr("missing pattern"))?;
            let pattern = rest
                .trim()
                .strip_prefix('/')
                .and_then(|p| p.strip_suffix('/'))
                .ok_or_else(|| perr("pattern must be delimited by `/`"))?;
            let path: TypePath = path.parse().map_err(|e: SchemaError| perr(&e.to_string()))?;
            let prio: i32 = prio.parse().map_err(|_| perr("priority must be an integer"))?;
            let rule = PatternRule::new(path, pattern, prio).map_err(|e| AnnotatorError::RuleCompile {
                line: i + 1,
                msg: e.to_string(),
            })?;
            out.push(rule);
        }
        Ok(out)
    }

    pub fn default_pack() -> Vec<PatternRule> {
        Self::parse_pack(DEFAULT_RULES).expect("bundled rule pack is valid")
    }
}

/// Regex matches snapped outward to token boundaries. Overlaps are resolved by
/// priority, then leftmost, then longest.
pub fn pattern_annotate(sentence: &Sentence, rules: &[PatternRule]) -> Vec<EntityMention> {
    if rules.is_empty() || sentence.tokens.is_empty() {
        return Vec::new();
    }
    // byte offset -> char offset within the sentence text
    let mut char_at = vec![0usize; sentence.text.len() + 1];
    let mut count = 0;
    for (b, _) in sentence.text.char_indices() {
        char_at[b] = count;
        count += 1;
    }
    char_at[sentence.text.len()] = count;

    let mut candidates = Vec::new();
    for (ri, rule) in rules.iter().enumerate() {
        for m in rule.regex.find_iter(&sentence.text) {
            if m.start() == m.end() {
                continue;
            }
            let cs = sentence.start + char_at[m.start()];
            let ce = sentence.start + char_at[m.end()];
            let first = sentence.tokens.iter().position(|t| t.end > cs);
            let last = sentence.tokens.iter().rposition(|t| t.start < ce);
            if let (Some(first), Some(last)) = (first, last) {
                if first <= last {
                    candidates.push((rule.priority, first, last, ri));
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then((b.2 - b.1).cmp(&(a.2 - a.1)))
            .then(a.3.cmp(&b.3))
    });
    let mut taken = vec![false; sentence.tokens.len()];
    let mut out = Vec::new();
    for (_, first, last, ri) in candidates {
        if taken[first..=last].iter().any(|&t| t) {
            continue;
        }
        taken[first..=last].iter_mut().for_each(|t| *t = true);
        out.push(EntityMention::from_span(
            sentence,
            first,
            last,
            rules[ri].type_label.clone(),
            Provenance::Pattern,
        ));
    }
    out.sort_by_key(|m| m.start_tok);
    out
}

/// Gazetteers plus rule pack. Pattern mentions take precedence over
/// overlapping dictionary mentions.
#[derive(Debug, Clone)]
pub struct Annotator {
    matcher: GazetteerMatcher,
    rules: Vec<PatternRule>,
}

impl Annotator {
    pub fn new(gazetteers: &[Gazetteer], rules: Vec<PatternRule>) -> Self {
        Self {
            matcher: GazetteerMatcher::new(gazetteers),
            rules,
        }
    }

    pub fn annotate(&self, sentence: &Sentence) -> Vec<EntityMention> {
        let mut out = pattern_annotate(sentence, &self.rules);
        let dictionary = self.matcher.annotate(sentence);
        for m in dictionary {
            if !out.iter().any(|p| p.overlaps(&m)) {
                out.push(m);
            }
        }
        out.sort_by_key(|m| m.start_tok);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelingFunction {
    pub name: String,
    pub relation: RelationDef,
    /// Lower-cased cue phrases, each as a token sequence.
    pub cues: Vec<Vec<String>>,
    pub window: usize,
    /// Emit (later mention, earlier mention) instead of text order.
    pub reverse: bool,
}

impl LabelingFunction {
    pub fn new(
        name: impl Into<String>,
        relation: RelationDef,
        cues: impl IntoIterator<Item = impl AsRef<str>>,
        window: usize,
    ) -> Result<Self, AnnotatorError> {
        let name = name.into();
        let cues: Vec<Vec<String>> = cues
            .into_iter()
            .map(|c| {
                tokenize(c.as_ref(), 0)
                    .into_iter()
                    .map(|t| t.text.to_lowercase())
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect();
        if window == 0 || cues.is_empty() {
            return Err(AnnotatorError::InvalidLabelingFunction(name));
        }
        Ok(Self {
            name,
            relation,
            cues,
            window,
            reverse: false,
        })
    }

    /// Parses `lf <name> <relation> window=<n> [reverse] cues=<cue>|<cue>...`.
    /// Cue phrases may contain spaces; `cues=` must come last.
    pub fn parse_file(text: &str, schema: &OntologySchema) -> Result<Vec<LabelingFunction>, AnnotatorError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| AnnotatorError::Parse { line: i + 1, msg };
            let (head, cues) = line
                .split_once("cues=")
                .ok_or_else(|| perr("missing `cues=`".into()))?;
            let mut parts = head.split_whitespace();
            if parts.next() != Some("lf") {
                return Err(perr("expected `lf <name> <relation> ...`".into()));
            }
            let name = parts.next().ok_or_else(|| perr("missing name".into()))?;
            let rel = parts.next().ok_or_else(|| perr("missing relation".into()))?;
            let mut window = None;
            let mut reverse = false;
            for opt in parts {
                if opt == "reverse" {
                    reverse = true;
                } else if let Some(w) = opt.strip_prefix("window=") {
                    window = Some(w.parse::<usize>().map_err(|_| perr(format!("bad window `{w}`")))?);
                } else {
                    return Err(perr(format!("unknown option `{opt}`")));
                }
            }
            let relation = schema
                .relation(rel)
                .ok_or_else(|| AnnotatorError::UnknownRelation {
                    lf: name.to_string(),
                    relation: rel.to_string(),
                })?
                .clone();
            let mut lf = LabelingFunction::new(name, relation, cues.split('|'), window.unwrap_or(3))?;
            lf.reverse = reverse;
            out.push(lf);
        }
        Ok(out)
    }

    pub fn default_set(schema: &OntologySchema) -> Result<Vec<LabelingFunction>, AnnotatorError> {
        Self::parse_file(DEFAULT_LFS, schema)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationCandidate {
    pub doc_id: String,
    pub sent_index: usize,
    pub head: EntityMention,
    pub relation: String,
    pub tail: EntityMention,
    pub lf_name: String,
}

/// Runs the labeling functions over adjacent pairs of person mentions.
///
/// A function fires for the pair `(a, b)` (text order, no other person mention
/// in between) when one of its cues lies wholly inside the gap between them
/// and is at most `window` tokens from each mention. Symmetric relations are
/// emitted once, head and tail ordered by surface string.
pub fn apply_labeling_functions(
    sentence: &Sentence,
    mentions: &[EntityMention],
    lfs: &[LabelingFunction],
) -> Vec<RelationCandidate> {
    let mut persons: Vec<&EntityMention> = mentions
        .iter()
        .filter(|m| m.is_person() && m.doc_id == sentence.doc_id && m.sent_index == sentence.sent_index)
        .collect();
    persons.sort_by_key(|m| (m.start_tok, m.end_tok));
    let lower: Vec<String> = sentence.tokens.iter().map(|t| t.text.to_lowercase()).collect();

    let mut out = Vec::new();
    for pair in persons.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.end_tok >= b.start_tok {
            continue;
        }
        let gap = (a.end_tok + 1, b.start_tok);
        for lf in lfs {
            let fired = lf.cues.iter().any(|cue| {
                (gap.0..gap.1).any(|s| {
                    let e = s + cue.len();
                    e <= gap.1
                        && lower[s..e] == cue[..]
                        && s - a.end_tok <= lf.window
                        && b.start_tok - (e - 1) <= lf.window
                })
            });
            if !fired {
                continue;
            }
            let (mut head, mut tail) = if lf.reverse { (b, a) } else { (a, b) };
            if lf.relation.symmetric && tail.surface < head.surface {
                std::mem::swap(&mut head, &mut tail);
            }
            out.push(RelationCandidate {
                doc_id: sentence.doc_id.clone(),
                sent_index: sentence.sent_index,
                head: head.clone(),
                relation: lf.relation.name.clone(),
                tail: tail.clone(),
                lf_name: lf.name.clone(),
            });
        }
    }
    out
}

/// Default mapping from structured record fields to entity types.
pub fn default_field_types() -> BTreeMap<String, TypePath> {
    [
        ("name", "/person/name"),
        ("email", "/contact/email"),
        ("location", "/location"),
        ("website", "/contact/website"),
        ("phone", "/contact/phone"),
        ("fax", "/contact/fax"),
        ("date_of_birth", "/datetime/date_of_birth"),
        ("place_of_birth", "/location/place_of_birth"),
        ("party", "/org/political_party"),
        ("education", "/org/education"),
        ("profession", "/person/profession"),
        ("nationality", "/person/nationality"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), TypePath::from_str(v).expect("static path")))
    .collect()
}

/// Builds one gazetteer per typed field from structured records and projects
/// them onto the sentences. Fields named by a type path (`/contact/email`)
/// are used directly; unmapped fields are ignored.
pub fn project_gazetteer_labels(
    records: &[BTreeMap<String, String>],
    field_types: &BTreeMap<String, TypePath>,
    sentences: &[Sentence],
) -> Result<Vec<EntityMention>, AnnotatorError> {
    if records.is_empty() {
        return Err(AnnotatorError::EmptyRecords);
    }
    let mut by_type: BTreeMap<TypePath, BTreeSet<String>> = BTreeMap::new();
    for record in records {
        for (field, value) in record {
            let value = value.trim();
            if value.is_empty() {
                continue;
            }
            let ty = field_types
                .get(field)
                .cloned()
                .or_else(|| field.parse::<TypePath>().ok());
            if let Some(ty) = ty {
                by_type.entry(ty).or_default().insert(value.to_string());
            }
        }
    }
    let gazetteers: Vec<Gazetteer> = by_type
        .into_iter()
        .filter_map(|(ty, values)| Gazetteer::new(ty, values, false).ok())
        .collect();
    let matcher = GazetteerMatcher::new(&gazetteers);
    Ok(sentences.iter().flat_map(|s| matcher.annotate(s)).collect())
}

pub fn write_mentions_jsonl(mentions: &[EntityMention]) -> String {
    let mut out = String::new();
    for m in mentions {
        out.push_str(&serde_json::to_string(m).expect("mention serialises"));
        out.push('\n');
    }
    out
}

pub fn read_mentions_jsonl(text: &str) -> Result<Vec<EntityMention>, AnnotatorError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AnnotatorError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// TSV: `doc_id sent_index head_surface relation tail_surface lf_name`.
pub fn write_candidates_tsv(candidates: &[RelationCandidate]) -> String {
    let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
    let mut out = String::new();
    for c in candidates {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            clean(&c.doc_id),
            c.sent_index,
            clean(&c.head.surface),
            c.relation,
            clean(&c.tail.surface),
            c.lf_name
        ));
    }
    out
}

/// One parsed candidate line (surfaces only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRow {
    pub doc_id: String,
    pub sent_index: usize,
    pub head_surface: String,
    pub relation: String,
    pub tail_surface: String,
    pub lf_name: String,
}

pub fn read_candidates_tsv(text: &str) -> Result<Vec<CandidateRow>, AnnotatorError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(AnnotatorError::Parse {
                line: i + 1,
                msg: format!("expected 6 tab-separated fields, found {}", f.len()),
            });
        }
        out.push(CandidateRow {
            doc_id: f[0].to_string(),
            sent_index: f[1].parse().map_err(|_| AnnotatorError::Parse {
                line: i + 1,
                msg: "bad sent_index".into(),
            })?,
            head_surface: f[2].to_string(),
            relation: f[3].to_string(),
            tail_surface: f[4].to_string(),
            lf_name: f[5].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{process_document, Document};

    fn sentence(text: &str) -> Sentence {
        let doc = Document::new("d", text).unwrap();
        let mut s = process_document(&doc);
        assert_eq!(s.len(), 1);
        s.remove(0)
    }

    fn path(s: &str) -> TypePath {
        s.parse().unwrap()
    }

    fn person(s: &Sentence, first: usize, last: usize) -> EntityMention {
        EntityMention::from_span(s, first, last, path("/person/name"), Provenance::Gazetteer)
    }

    #[test]
    fn exact_dictionary_hit() {
        let s = sentence("John Smith won");
        let g = Gazetteer::new(path("/person/name"), ["John Smith"], false).unwrap();
        let m = gazetteer_annotate(&s, &[g]);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].start_tok, m[0].end_tok), (0, 1));
        assert_eq!(m[0].coarse_label, Some(path("/person/name")));
        assert_eq!(m[0].surface, "John Smith");
    }

    #[test]
    fn longest_wins() {
        let s = sentence("New York");
        let city = Gazetteer::new(path("/location/city"), ["New York", "York"], false).unwrap();
        let m = gazetteer_annotate(&s, &[city]);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "New York");
    }

    #[test]
    fn no_hits_and_case_sensitivity() {
        let s = sentence("nothing to see here");
        let g = Gazetteer::new(path("/location"), ["Paris"], false).unwrap();
        assert!(gazetteer_annotate(&s, &[g]).is_empty());

        let s = sentence("PARIS and paris");
        let cs = Gazetteer::new(path("/location"), ["PARIS"], true).unwrap();
        let m = gazetteer_annotate(&s, &[cs]);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].start_tok, 0);
    }

    #[test]
    fn gazetteer_file_format() {
        let text = "# names\n@type /person/name\nJohn Smith\nAnn Lee\n\n@type /location case_sensitive\nParis\n";
        let gs = Gazetteer::parse_file(text).unwrap();
        assert_eq!(gs.len(), 2);
        assert!(gs[1].case_sensitive);
        assert_eq!(Gazetteer::parse_file(&gs[0].render()).unwrap()[0], gs[0]);
        assert!(Gazetteer::parse_file("Paris\n").is_err());
        assert!(matches!(
            Gazetteer::parse_file("@type /location\n"),
            Err(AnnotatorError::EmptyGazetteer(_))
        ));
    }

    #[test]
    fn pattern_examples() {
        let rules = PatternRule::default_pack();
        let s = sentence("Write to ann@example.org today");
        let m = pattern_annotate(&s, &rules);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "ann@example.org");
        assert_eq!(m[0].coarse_label, Some(path("/contact/email")));
        assert_eq!(m[0].provenance, Provenance::Pattern);

        let s = sentence("Beverly Hills 90210");
        let m = pattern_annotate(&s, &rules);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].coarse_label, Some(path("/contact/zip")));
    }

    #[test]
    fn priority_beats_order() {
        let s = sentence("90210");
        let digit = PatternRule::new(path("/id_number/number"), r"\d+", 1).unwrap();
        let zip = PatternRule::new(path("/contact/zip"), r"\b\d{5}\b", 5).unwrap();
        for rules in [vec![digit.clone(), zip.clone()], vec![zip, digit]] {
            let m = pattern_annotate(&s, &rules);
            assert_eq!(m.len(), 1);
            assert_eq!(m[0].coarse_label, Some(path("/contact/zip")));
        }
        assert!(pattern_annotate(&s, &[]).is_empty());
    }

    #[test]
    fn bad_rule_reports_line() {
        let err = PatternRule::parse_pack("rule /contact/zip 5 /\\d{5}/\nrule /x 1 /(/\n").unwrap_err();
        assert!(matches!(err, AnnotatorError::RuleCompile { line: 2, .. }));
        let err = PatternRule::parse_pack("rule /contact/zip five /\\d/\n").unwrap_err();
        assert!(matches!(err, AnnotatorError::Parse { line: 1, .. }));
    }

    fn spouse_lf() -> LabelingFunction {
        let schema = OntologySchema::default_schema();
        LabelingFunction::new("lf_married", schema.relation("spouse_of").unwrap().clone(), ["married"], 3).unwrap()
    }

    #[test]
    fn lf_fires_on_cue() {
        let s = sentence("Alice married Bob");
        let ms = vec![person(&s, 0, 0), person(&s, 2, 2)];
        let c = apply_labeling_functions(&s, &ms, &[spouse_lf()]);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].head.surface.as_str(), c[0].relation.as_str(), c[0].tail.surface.as_str()), ("Alice", "spouse_of", "Bob"));

        let s = sentence("Alice met Bob");
        let ms = vec![person(&s, 0, 0), person(&s, 2, 2)];
        assert!(apply_labeling_functions(&s, &ms, &[spouse_lf()]).is_empty());
    }

    #[test]
    fn lf_three_mentions_cue_between_first_two() {
        let s = sentence("Alice married Bob while Carol watched");
        let ms = vec![person(&s, 0, 0), person(&s, 2, 2), person(&s, 4, 4)];
        let c = apply_labeling_functions(&s, &ms, &[spouse_lf()]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].tail.surface, "Bob");
    }

    #[test]
    fn symmetric_relation_canonical_order() {
        let s = sentence("Zed married Amy");
        let ms = vec![person(&s, 0, 0), person(&s, 2, 2)];
        let c = apply_labeling_functions(&s, &ms, &[spouse_lf()]);
        assert_eq!(c[0].head.surface, "Amy");
        assert_eq!(c[0].tail.surface, "Zed");
    }

    #[test]
    fn window_limits_cue_distance() {
        let s = sentence("Alice married into the old and wealthy family of Bob");
        let ms = vec![person(&s, 0, 0), person(&s, 9, 9)];
        assert!(apply_labeling_functions(&s, &ms, &[spouse_lf()]).is_empty());
    }

    #[test]
    fn lf_file_parses_against_schema() {
        let schema = OntologySchema::default_schema();
        let lfs = LabelingFunction::default_set(&schema).unwrap();
        assert!(!lfs.is_empty());
        let err = LabelingFunction::parse_file("lf x married_to window=2 cues=wed\n", &schema).unwrap_err();
        assert!(matches!(err, AnnotatorError::UnknownRelation { .. }));
        let err = LabelingFunction::parse_file("lf x spouse_of window=0 cues=wed\n", &schema).unwrap_err();
        assert!(matches!(err, AnnotatorError::InvalidLabelingFunction(_)));
    }

    #[test]
    fn projection_examples() {
        let doc1 = Document::new("a", "John Smith visited Paris.").unwrap();
        let doc2 = Document::new("b", "Paris is large. Paris again.").unwrap();
        let sentences: Vec<Sentence> = [doc1, doc2].iter().flat_map(process_document).collect();
        let fields = default_field_types();

        let rec = |k: &str, v: &str| BTreeMap::from([(k.to_string(), v.to_string())]);
        let m = project_gazetteer_labels(&[rec("name", "John Smith")], &fields, &sentences).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].coarse_label, Some(path("/person/name")));

        let m = project_gazetteer_labels(&[rec("email", "a@b.org")], &fields, &sentences).unwrap();
        assert!(m.is_empty());

        let m = project_gazetteer_labels(&[rec("location", "Paris"), rec("location", "Paris")], &fields, &sentences)
            .unwrap();
        assert_eq!(m.len(), 3);
        assert!(matches!(
            project_gazetteer_labels(&[], &fields, &sentences),
            Err(AnnotatorError::EmptyRecords)
        ));
    }

    #[test]
    fn candidates_tsv_round_trip() {
        let s = sentence("Alice married Bob");
        let ms = vec![person(&s, 0, 0), person(&s, 2, 2)];
        let c = apply_labeling_functions(&s, &ms, &[spouse_lf()]);
        let tsv = write_candidates_tsv(&c);
        assert_eq!(tsv, "d\t0\tAlice\tspouse_of\tBob\tlf_married\n");
        let rows = read_candidates_tsv(&tsv).unwrap();
        assert_eq!(rows[0].tail_surface, "Bob");
    }

    #[test]
    fn mentions_jsonl_uses_label_key() {
        let s = sentence("Alice married Bob");
        let m = vec![person(&s, 0, 0)];
        let text = write_mentions_jsonl(&m);
        assert!(text.contains("\"label\":\"/person/name\""));
        assert!(text.contains("\"provenance\":\"gazetteer\""));
        assert_eq!(read_mentions_jsonl(&text).unwrap(), m);
    }
}
