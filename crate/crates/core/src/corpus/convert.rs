use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, Example, Relation, SkippedRecord, TokenSpan};
use crate::error::{Error, Result};

/// A relation whose spans are `[start, end)` char offsets into the text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharRelation {
    pub cause: [usize; 2],
    pub effect: [usize; 2],
}

/// Intermediate record: raw text with char-offset spans, marked by
/// `"char_offsets": true`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharOffsetRecord {
    pub id: String,
    pub text: String,
    pub relations: Vec<CharRelation>,
    pub source: String,
    pub char_offsets: bool,
}

/// Maps a char range onto the smallest token span covering it: every token
/// sharing at least one char with the range is included.
pub fn snap_char_span(offsets: &[Range<usize>], chars: Range<usize>) -> Result<TokenSpan> {
    let mut covering = offsets
        .iter()
        .enumerate()
        .filter(|(_, tok)| tok.start < chars.end && chars.start < tok.end)
        .map(|(i, _)| i);
    let first = covering.next().ok_or(Error::EmptyCharSpan {
        start: chars.start,
        end: chars.end,
    })?;
    let last = covering.next_back().unwrap_or(first);
    Ok(TokenSpan::new(first, last + 1))
}

/// Tokenizes the record text and snaps every char span to tokens.
pub fn convert_char_spans(record: &CharOffsetRecord) -> Result<Example> {
    let tokenized = tokenize(&record.text);
    let text_len = record.text.chars().count();
    let snap = |[start, end]: [usize; 2]| -> Result<TokenSpan> {
        if start >= end || end > text_len {
            return Err(Error::CharSpanOutOfBounds {
                start,
                end,
                len: text_len,
            });
        }
        snap_char_span(&tokenized.offsets, start..end)
    };
    let relations = record
        .relations
        .iter()
        .map(|r| {
            Ok(Relation {
                cause: snap(r.cause)?,
                effect: snap(r.effect)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::InvalidExample {
            id: record.id.clone(),
            message: e.to_string(),
        })?;
    Ok(Example {
        id: record.id.clone(),
        tokens: tokenized.tokens,
        relations,
        source: record.source.clone(),
    })
}

/// Parses every line of an intermediate char-offset file. Any line that is
/// not a well-formed record is a schema failure for the whole file.
pub fn read_char_offset_records(path: impl AsRef<Path>) -> Result<Vec<CharOffsetRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CharOffsetRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                line: index + 1,
                message: e.to_string(),
            })?;
        if !record.char_offsets {
            return Err(Error::MalformedLine {
                line: index + 1,
                message: "\"char_offsets\" must be true".into(),
            });
        }
        records.push(record);
    }
    Ok(records)
}

#[derive(Clone, Debug, Default)]
pub struct Conversion {
    pub examples: Vec<Example>,
    /// Records dropped for invalid spans or duplicate ids; `line` is the
    /// 1-based record position.
    pub skipped: Vec<SkippedRecord>,
}

/// Converts records, dropping (and counting) those that fail validation.
pub fn convert_records(records: &[CharOffsetRecord], allow_overlap: bool) -> Conversion {
    let mut out = Conversion::default();
    let mut seen = HashSet::new();
    for (index, record) in records.iter().enumerate() {
        let converted = convert_char_spans(record).and_then(|ex| {
            ex.validate(allow_overlap)?;
            if seen.contains(&ex.id) {
                return Err(Error::DuplicateId(ex.id));
            }
            Ok(ex)
        });
        match converted {
            Ok(ex) => {
                seen.insert(ex.id.clone());
                out.examples.push(ex);
            }
            Err(e) => {
                log::warn!("skipping record {}: {e}", index + 1);
                out.skipped.push(SkippedRecord {
                    line: index + 1,
                    reason: e.to_string(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str, cause: [usize; 2], effect: [usize; 2]) -> CharOffsetRecord {
        CharOffsetRecord {
            id: "r".into(),
            text: text.into(),
            relations: vec![CharRelation { cause, effect }],
            source: "test".into(),
            char_offsets: true,
        }
    }

    // Reference: scan offsets and take min/max of every token touching the range.
    fn covering_oracle(text: &str, range: Range<usize>) -> Option<(usize, usize)> {
        let t = tokenize(text);
        let hits: Vec<usize> = (0..t.len())
            .filter(|&i| (range.start..range.end).any(|c| t.offsets[i].contains(&c)))
            .collect();
        Some((*hits.first()?, *hits.last()? + 1))
    }

    #[test]
    fn snaps_single_char_to_token() {
        let ex = convert_char_spans(&record("a because b", [10, 11], [0, 1])).unwrap();
        assert_eq!(ex.tokens, ["a", "because", "b"]);
        assert_eq!(ex.relations[0].cause, TokenSpan::new(2, 3));
        assert_eq!(covering_oracle("a because b", 10..11), Some((2, 3)));
    }

    #[test]
    fn exact_token_extent() {
        let ex = convert_char_spans(&record("a because b", [2, 9], [0, 1])).unwrap();
        assert_eq!(ex.relations[0].cause, TokenSpan::new(1, 2));
    }

    #[test]
    fn straddling_range_expands_to_both_tokens() {
        let text = "heavy rain caused floods";
        // "vy rai" partially covers "heavy" and "rain"
        let ex = convert_char_spans(&record(text, [3, 9], [18, 24])).unwrap();
        assert_eq!(ex.relations[0].cause, TokenSpan::new(0, 2));
        assert_eq!(covering_oracle(text, 3..9), Some((0, 2)));
        assert_eq!(ex.relations[0].effect, TokenSpan::new(3, 4));
    }

    #[test]
    fn whitespace_only_range_fails() {
        let err = convert_char_spans(&record("a  b", [1, 3], [0, 1])).unwrap_err();
        assert!(err.to_string().contains("covers no token"), "{err}");
    }

    #[test]
    fn out_of_text_range_fails() {
        assert!(convert_char_spans(&record("a b", [2, 9], [0, 1])).is_err());
    }

    #[test]
    fn bad_records_are_skipped_and_counted() {
        let good = record("x because y", [10, 11], [0, 1]);
        let mut bad = record("x y", [1, 2], [0, 1]);
        bad.id = "bad".into();
        let out = convert_records(&[good.clone(), bad, good], false);
        assert_eq!(out.examples.len(), 1);
        assert_eq!(out.skipped.len(), 2);
    }
}
