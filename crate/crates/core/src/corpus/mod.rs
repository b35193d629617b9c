//! Canonical cause/effect corpus: data model, JSONL I/O, char-offset
//! conversion, splitting and statistics.
//!
//! Every downstream module works on pre-tokenized [`Example`]s whose spans
//! are half-open token intervals. Character offsets only exist at the
//! conversion boundary ([`convert_char_spans`]).

mod convert;
mod split;
mod stats;
mod tokenize;

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use convert::{
    convert_char_spans, convert_records, read_char_offset_records, snap_char_span, CharOffsetRecord,
    CharRelation, Conversion,
};
pub use split::{split_corpus, Split};
pub use stats::{
    compute_stats, default_connectives, histogram_csv, load_connectives, load_freq_table,
    percentile_length, CorpusStats, RoleStats, REPORTED_PERCENTILES,
};
pub use tokenize::{tokenize, Tokenized, PEELED_PUNCTUATION};

/// Half-open token interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    /// Panics if `start >= end`; use [`TokenSpan::try_new`] for untrusted input.
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start < end, "empty span [{start},{end})");
        TokenSpan { start, end }
    }

    pub fn try_new(start: usize, end: usize) -> Option<Self> {
        (start < end).then_some(TokenSpan { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl fmt::Display for TokenSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

impl Serialize for TokenSpan {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TokenSpan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(deserializer)?;
        // Emptiness is reported by `Example::validate` so the error can name the id.
        Ok(TokenSpan { start, end })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Cause,
    Effect,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Cause, Role::Effect];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Cause => "cause",
            Role::Effect => "effect",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A span together with the role it plays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleSpan {
    pub role: Role,
    pub span: TokenSpan,
}

impl RoleSpan {
    pub fn new(role: Role, span: TokenSpan) -> Self {
        RoleSpan { role, span }
    }

    pub fn cause(start: usize, end: usize) -> Self {
        RoleSpan::new(Role::Cause, TokenSpan::new(start, end))
    }

    pub fn effect(start: usize, end: usize) -> Self {
        RoleSpan::new(Role::Effect, TokenSpan::new(start, end))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub cause: TokenSpan,
    pub effect: TokenSpan,
}

/// One context with zero or more cause→effect relations. An empty
/// relation list marks a non-causal example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub tokens: Vec<String>,
    pub relations: Vec<Relation>,
    pub source: String,
}

impl Example {
    pub fn new(id: impl Into<String>, tokens: Vec<String>, source: impl Into<String>) -> Self {
        Example {
            id: id.into(),
            tokens,
            relations: Vec::new(),
            source: source.into(),
        }
    }

    pub fn with_relation(mut self, cause: TokenSpan, effect: TokenSpan) -> Self {
        self.relations.push(Relation { cause, effect });
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_causal(&self) -> bool {
        !self.relations.is_empty()
    }

    /// Distinct role-tagged spans of all relations, sorted by
    /// `(start, end, role)`. Spans shared by several relations appear once.
    pub fn role_spans(&self) -> Vec<RoleSpan> {
        let mut spans: Vec<RoleSpan> = self
            .relations
            .iter()
            .flat_map(|r| [RoleSpan::new(Role::Cause, r.cause), RoleSpan::new(Role::Effect, r.effect)])
            .collect();
        spans.sort_by_key(|s| (s.span.start, s.span.end, s.role));
        spans.dedup();
        spans
    }

    /// Checks the example invariants: non-empty tokens, non-empty spans
    /// inside the token range, and (unless `allow_overlap`) cause and effect
    /// of each relation disjoint.
    pub fn validate(&self, allow_overlap: bool) -> Result<()> {
        let invalid = |message: String| Error::InvalidExample {
            id: self.id.clone(),
            message,
        };
        if self.tokens.is_empty() {
            return Err(invalid("no tokens".into()));
        }
        for rel in &self.relations {
            for (role, span) in [(Role::Cause, rel.cause), (Role::Effect, rel.effect)] {
                if span.is_empty() {
                    return Err(invalid(format!("{role} span {span} is empty")));
                }
                if span.end > self.tokens.len() {
                    return Err(invalid(format!(
                        "{role} span {span} exceeds token count {}",
                        self.tokens.len()
                    )));
                }
            }
            if !allow_overlap && rel.cause.overlaps(&rel.effect) {
                return Err(invalid(format!(
                    "cause {} overlaps effect {}",
                    rel.cause, rel.effect
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Accept relations whose cause and effect share tokens.
    pub allow_overlap: bool,
    /// Skip records that fail validation instead of returning an error.
    pub skip_invalid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Loaded {
    pub examples: Vec<Example>,
    pub skipped: Vec<SkippedRecord>,
}

/// Loads a canonical JSONL corpus, rejecting the first invalid record.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    load_corpus_with(path, LoadOptions::default()).map(|l| l.examples)
}

pub fn load_corpus_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), options).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Reads canonical JSONL from any reader. Blank lines are ignored; line
/// numbers in errors are 1-based.
pub fn read_corpus(reader: impl BufRead, options: LoadOptions) -> Result<Loaded> {
    let mut loaded = Loaded::default();
    let mut seen = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Example>(&line)
            .map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })
            .and_then(|ex| {
                ex.validate(options.allow_overlap)?;
                if seen.contains(&ex.id) {
                    return Err(Error::DuplicateId(ex.id));
                }
                Ok(ex)
            });
        match parsed {
            Ok(ex) => {
                seen.insert(ex.id.clone());
                loaded.examples.push(ex);
            }
            Err(e) if options.skip_invalid => {
                log::warn!("skipping line {line_no}: {e}");
                loaded.skipped.push(SkippedRecord {
                    line: line_no,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(loaded)
}

/// Writes one JSON object per line with fields in the canonical order
/// `id, tokens, relations, source`.
pub fn save_corpus(examples: &[Example], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus(examples, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus(examples: &[Example], out: &mut impl Write) -> Result<()> {
    for ex in examples {
        serde_json::to_writer(&mut *out, ex)?;
        out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) use tests::sunrise;

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sunrise() -> Example {
        let tokens = "The light in the background is from the sunrise"
            .split(' ')
            .map(String::from)
            .collect();
        Example::new("sunrise", tokens, "demo").with_relation(TokenSpan::new(7, 9), TokenSpan::new(0, 2))
    }

    #[test]
    fn sunrise_serializes_to_canonical_line() {
        let mut buf = Vec::new();
        write_corpus(&[sunrise()], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            concat!(
                r#"{"id":"sunrise","tokens":["The","light","in","the","background","is","from","the","sunrise"],"#,
                r#""relations":[{"cause":[7,9],"effect":[0,2]}],"source":"demo"}"#,
                "\n"
            )
        );
    }

    #[test]
    fn empty_corpus_is_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        save_corpus(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"");
        assert!(load_corpus(&path).unwrap().is_empty());
    }

    #[test]
    fn single_record_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.jsonl");
        save_corpus(&[sunrise()], &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), vec![sunrise()]);
    }

    #[test]
    fn out_of_bounds_span_names_the_id() {
        let line = r#"{"id":"bad-7","tokens":["a","b"],"relations":[{"cause":[0,3],"effect":[0,1]}],"source":"x"}"#;
        let err = read_corpus(line.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::InvalidExample { id, .. } if id == "bad-7"), "{err}");
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = format!("{}\n{{not json\n", serde_json::to_string(&sunrise()).unwrap());
        let err = read_corpus(text.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = serde_json::to_string(&sunrise()).unwrap();
        let text = format!("{line}\n{line}\n");
        let err = read_corpus(text.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "sunrise"));
    }

    #[test]
    fn skip_mode_counts_bad_records() {
        let good = serde_json::to_string(&sunrise()).unwrap();
        let text = format!("{good}\n{{\"id\":\"e\",\"tokens\":[],\"relations\":[],\"source\":\"x\"}}\n{good}\n");
        let loaded = read_corpus(
            text.as_bytes(),
            LoadOptions {
                skip_invalid: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(loaded.examples.len(), 1);
        assert_eq!(loaded.skipped.iter().map(|s| s.line).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn overlap_needs_flag() {
        let ex = Example::new("o", vec!["a".into(), "b".into()], "because")
            .with_relation(TokenSpan::new(0, 2), TokenSpan::new(1, 2));
        assert!(ex.validate(false).is_err());
        assert!(ex.validate(true).is_ok());
    }

    #[test]
    fn role_spans_merge_shared_spans() {
        let ex = sunrise().with_relation(TokenSpan::new(7, 9), TokenSpan::new(3, 5));
        assert_eq!(
            ex.role_spans(),
            vec![RoleSpan::effect(0, 2), RoleSpan::effect(3, 5), RoleSpan::cause(7, 9)]
        );
    }
}

