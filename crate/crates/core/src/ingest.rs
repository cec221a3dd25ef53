//! Raw text to sentences and tokens.
//!
//! All offsets are Unicode scalar value indices into the document text, not
//! byte offsets. Sentence boundaries fall after `.`, `!` or `?` (plus any
//! closing quotes/brackets) when followed by whitespace and an uppercase
//! letter, unless the period ends a known abbreviation or a single-letter
//! initial. Tokens are maximal alphanumeric runs; every other non-space
//! character is a token of its own, so `e-mail` becomes `e`, `-`, `mail`.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotators::EntityMention;

pub const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "Prof", "St", "Jr", "Sr", "vs", "etc", "Gov", "Sen", "Rep", "Gen",
    "Lt", "Col", "No", "Inc", "Ltd", "Co", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep",
    "Sept", "Oct", "Nov", "Dec",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("document `{0}` has empty text")]
    EmptyDocument(String),
    #[error("duplicate doc_id `{0}`")]
    DuplicateDocId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_uri: Option<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Result<Self, IngestError> {
        let doc_id = doc_id.into();
        let text = text.into();
        if text.is_empty() {
            return Err(IngestError::EmptyDocument(doc_id));
        }
        Ok(Self {
            doc_id,
            text,
            source_uri: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeTag {
    Alpha,
    Capitalized,
    AllCaps,
    Digit,
    Mixed,
    Punct,
}

impl ShapeTag {
    pub const ALL: [ShapeTag; 6] = [
        ShapeTag::Alpha,
        ShapeTag::Capitalized,
        ShapeTag::AllCaps,
        ShapeTag::Digit,
        ShapeTag::Mixed,
        ShapeTag::Punct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeTag::Alpha => "alpha",
            ShapeTag::Capitalized => "capitalized",
            ShapeTag::AllCaps => "all_caps",
            ShapeTag::Digit => "digit",
            ShapeTag::Mixed => "mixed",
            ShapeTag::Punct => "punct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn of(token: &str) -> Self {
        let chars: Vec<char> = token.chars().collect();
        if chars.is_empty() || !chars.iter().any(|c| c.is_alphanumeric()) {
            return ShapeTag::Punct;
        }
        if chars.iter().all(|c| c.is_numeric()) {
            return ShapeTag::Digit;
        }
        if chars.iter().all(|c| c.is_alphabetic()) {
            if chars.iter().all(|c| c.is_lowercase()) {
                return ShapeTag::Alpha;
            }
            if chars[0].is_uppercase() && chars[1..].iter().all(|c| c.is_lowercase()) {
                return ShapeTag::Capitalized;
            }
            if chars.iter().all(|c| c.is_uppercase()) {
                return ShapeTag::AllCaps;
            }
        }
        ShapeTag::Mixed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub shape: ShapeTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn char_span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    /// Surface text covering tokens `first..=last`.
    pub fn span_text(&self, first: usize, last: usize) -> String {
        let from = self.tokens[first].start - self.start;
        let to = self.tokens[last].end - self.start;
        self.text.chars().skip(from).take(to - from).collect()
    }
}

/// Sentence boundaries without tokens.
pub fn split_sentences(doc: &Document) -> Vec<Sentence> {
    let chars: Vec<char> = doc.text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let n = chars.len();
    let mut i = 0usize;
    while i < n {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < n && matches!(chars[j], '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}') {
                j += 1;
            }
            let mut k = j;
            while k < n && chars[k].is_whitespace() {
                k += 1;
            }
            let boundary = k > j
                && k < n
                && chars[k].is_uppercase()
                && !(c == '.' && guarded_period(&chars, i));
            if boundary {
                push_sentence(&doc.doc_id, &chars, start, j, &mut out);
                start = k;
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push_sentence(&doc.doc_id, &chars, start, n, &mut out);
    out
}

fn guarded_period(chars: &[char], dot: usize) -> bool {
    let mut w = dot;
    while w > 0 && chars[w - 1].is_alphabetic() {
        w -= 1;
    }
    if w == dot {
        return false;
    }
    let word: String = chars[w..dot].iter().collect();
    let initial = dot - w == 1 && chars[w].is_uppercase();
    initial || ABBREVIATIONS.contains(&word.as_str())
}

fn push_sentence(doc_id: &str, chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<Sentence>) {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start == end {
        return;
    }
    out.push(Sentence {
        doc_id: doc_id.to_string(),
        sent_index: out.len(),
        start,
        end,
        text: chars[start..end].iter().collect(),
        tokens: Vec::new(),
    });
}

/// Tokenises `text`, reporting offsets shifted by `base_offset`.
pub fn tokenize(text: &str, base_offset: usize) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphanumeric() {
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
        } else {
            i += 1;
        }
        let text: String = chars[start..i].iter().collect();
        out.push(Token {
            shape: ShapeTag::of(&text),
            text,
            start: base_offset + start,
            end: base_offset + i,
        });
    }
    out
}

/// Sentence split followed by tokenisation of every sentence.
pub fn process_document(doc: &Document) -> Vec<Sentence> {
    let mut sentences = split_sentences(doc);
    for s in &mut sentences {
        s.tokens = tokenize(&s.text, s.start);
    }
    sentences
}

/// Loads every `*.txt` file in `dir` (sorted by file name); the file stem is the doc id.
/// Empty files are skipped.
pub fn load_corpus(dir: &Path) -> Result<Vec<Document>, IngestError> {
    let io_err = |path: &Path, source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut seen = BTreeSet::new();
    let mut docs = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let doc_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !seen.insert(doc_id.clone()) {
            return Err(IngestError::DuplicateDocId(doc_id));
        }
        let mut doc = Document::new(doc_id, text)?;
        doc.source_uri = Some(path.display().to_string());
        docs.push(doc);
    }
    Ok(docs)
}

/// JSON-Lines sentence dump, one object per sentence.
pub fn write_sentences_jsonl(sentences: &[Sentence]) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        doc_id: &'a str,
        sent_index: usize,
        start: usize,
        end: usize,
        text: &'a str,
        tokens: &'a [Token],
    }
    let mut out = String::new();
    for s in sentences {
        let line = Line {
            doc_id: &s.doc_id,
            sent_index: s.sent_index,
            start: s.start,
            end: s.end,
            text: &s.text,
            tokens: &s.tokens,
        };
        out.push_str(&serde_json::to_string(&line).expect("sentence serialises"));
        out.push('\n');
    }
    out
}

pub fn read_sentences_jsonl(text: &str) -> Result<Vec<Sentence>, IngestError> {
    #[derive(Deserialize)]
    struct Line {
        doc_id: String,
        sent_index: usize,
        #[serde(default)]
        start: Option<usize>,
        #[serde(default)]
        end: Option<usize>,
        text: String,
        tokens: Vec<Token>,
    }
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(raw).map_err(|e| IngestError::Format {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let start = l
            .start
            .or_else(|| l.tokens.first().map(|t| t.start))
            .unwrap_or(0);
        let end = l.end.unwrap_or(start + l.text.chars().count());
        out.push(Sentence {
            doc_id: l.doc_id,
            sent_index: l.sent_index,
            start,
            end,
            text: l.text,
            tokens: l.tokens,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sentences: usize,
    pub entity_mentions: usize,
    pub unique_entity_mentions: usize,
    pub unique_entity_types: usize,
}

/// Corpus statistics; unique mentions are counted over case-folded surfaces and
/// unique types over every assigned label (coarse and fine).
pub fn corpus_stats(documents: usize, sentences: &[Sentence], mentions: &[EntityMention]) -> CorpusStats {
    let unique_surfaces: BTreeSet<String> =
        mentions.iter().map(|m| m.surface.to_lowercase()).collect();
    let unique_types: BTreeSet<_> = mentions
        .iter()
        .flat_map(|m| m.coarse_label.iter().chain(m.fine_labels.iter()))
        .collect();
    CorpusStats {
        documents,
        sentences: sentences.len(),
        entity_mentions: mentions.len(),
        unique_entity_mentions: unique_surfaces.len(),
        unique_entity_types: unique_types.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document {
            doc_id: "d".into(),
            text: text.into(),
            source_uri: None,
        }
    }

    fn texts(text: &str) -> Vec<String> {
        split_sentences(&doc(text)).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn splits_terminated_clauses() {
        assert_eq!(texts("He won. She lost."), vec!["He won.", "She lost."]);
        assert!(texts("").is_empty());
        assert!(texts("   \n ").is_empty());
    }

    #[test]
    fn abbreviation_and_initial_guards() {
        assert_eq!(texts("Dr. Smith won."), vec!["Dr. Smith won."]);
        assert_eq!(texts("J. Smith met Mr. Jones. They talked."), vec![
            "J. Smith met Mr. Jones.",
            "They talked."
        ]);
        // no boundary before a lowercase letter or a digit
        assert_eq!(texts("It rose approx. ten percent."), vec!["It rose approx. ten percent."]);
        assert_eq!(texts("It cost 5 vs. 6 dollars."), vec!["It cost 5 vs. 6 dollars."]);
        assert_eq!(texts("Really?! Yes.").len(), 2);
        assert_eq!(texts("He said \"go.\" Then left.").len(), 2);
    }

    #[test]
    fn sentence_offsets_are_char_indices() {
        let d = doc("Über alles. Ça va.");
        let s = split_sentences(&d);
        assert_eq!(s.len(), 2);
        assert_eq!((s[1].start, s[1].end), (12, 18));
        let chars: Vec<char> = d.text.chars().collect();
        assert_eq!(chars[s[1].start..s[1].end].iter().collect::<String>(), "Ça va.");
    }

    #[test]
    fn tokenize_examples() {
        let toks = tokenize("born in 1962.", 0);
        let words: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, vec!["born", "in", "1962", "."]);
        let shapes: Vec<_> = toks.iter().map(|t| t.shape).collect();
        assert_eq!(shapes, vec![ShapeTag::Alpha, ShapeTag::Alpha, ShapeTag::Digit, ShapeTag::Punct]);

        let toks = tokenize("Brigham Young University", 0);
        assert_eq!(toks.len(), 3);
        assert!(toks.iter().all(|t| t.shape == ShapeTag::Capitalized));

        let words: Vec<_> = tokenize("e-mail", 0).into_iter().map(|t| t.text).collect();
        assert_eq!(words, vec!["e", "-", "mail"]);
    }

    #[test]
    fn shapes() {
        assert_eq!(ShapeTag::of("NASA"), ShapeTag::AllCaps);
        assert_eq!(ShapeTag::of("iPhone"), ShapeTag::Mixed);
        assert_eq!(ShapeTag::of("A1"), ShapeTag::Mixed);
        assert_eq!(ShapeTag::of("A"), ShapeTag::Capitalized);
        assert_eq!(ShapeTag::of("@"), ShapeTag::Punct);
    }

    #[test]
    fn tokens_round_trip_offsets() {
        let d = doc("Ann Lee (née Brown) was born in São Paulo. She moved!");
        let chars: Vec<char> = d.text.chars().collect();
        for s in process_document(&d) {
            let mut prev_end = s.start;
            for t in &s.tokens {
                assert!(t.start >= prev_end && t.end <= s.end);
                assert_eq!(chars[t.start..t.end].iter().collect::<String>(), t.text);
                prev_end = t.end;
            }
        }
    }

    #[test]
    fn stats_on_tiny_corpus() {
        use crate::annotators::Provenance;
        assert_eq!(corpus_stats(0, &[], &[]), CorpusStats::default());
        let sentences = process_document(&doc("Ann spoke. Ann left."));
        let person: crate::schema::TypePath = "/person".parse().unwrap();
        let mention = |sent_index| EntityMention {
            doc_id: "d".into(),
            sent_index,
            start_tok: 0,
            end_tok: 0,
            surface: "Ann".into(),
            coarse_label: Some(person.clone()),
            fine_labels: Default::default(),
            provenance: Provenance::Gazetteer,
        };
        let stats = corpus_stats(1, &sentences, &[mention(0), mention(1)]);
        assert_eq!(stats, CorpusStats {
            documents: 1,
            sentences: 2,
            entity_mentions: 2,
            unique_entity_mentions: 1,
            unique_entity_types: 1,
        });
    }

    #[test]
    fn jsonl_round_trip() {
        let s = process_document(&doc("He won. She lost."));
        assert_eq!(read_sentences_jsonl(&write_sentences_jsonl(&s)).unwrap(), s);
    }
}
