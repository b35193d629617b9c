//! BIO / IOBES codecs between role-tagged spans and per-token tags.
//!
//! Tag strings are `O`, `B-C`, `I-C`, `E-C`, `S-C`, `B-E`, `I-E`, `E-E`,
//! `S-E` where `C` is the cause role and `E` the effect role. The `E-`
//! prefix (span end) and the `-E` suffix (effect role) are unrelated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Example, Role, RoleSpan, TokenSpan};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Bio,
    Iobes,
}

impl Scheme {
    /// Tag alphabet in model output order: `O` first, then cause tags, then
    /// effect tags.
    pub fn alphabet(self) -> &'static [Tag] {
        use Role::{Cause as C, Effect as E};
        match self {
            Scheme::Bio => &[Tag::O, Tag::B(C), Tag::I(C), Tag::B(E), Tag::I(E)],
            Scheme::Iobes => &[
                Tag::O,
                Tag::B(C),
                Tag::I(C),
                Tag::E(C),
                Tag::S(C),
                Tag::B(E),
                Tag::I(E),
                Tag::E(E),
                Tag::S(E),
            ],
        }
    }

    pub fn num_tags(self) -> usize {
        self.alphabet().len()
    }

    pub fn tag_index(self, tag: Tag) -> Option<usize> {
        self.alphabet().iter().position(|t| *t == tag)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bio" => Ok(Scheme::Bio),
            "iobes" => Ok(Scheme::Iobes),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(Role),
    I(Role),
    E(Role),
    S(Role),
}

impl Tag {
    pub fn role(self) -> Option<Role> {
        match self {
            Tag::O => None,
            Tag::B(r) | Tag::I(r) | Tag::E(r) | Tag::S(r) => Some(r),
        }
    }

    pub fn is_valid_in(self, scheme: Scheme) -> bool {
        scheme == Scheme::Iobes || !matches!(self, Tag::E(_) | Tag::S(_))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (prefix, role) = match self {
            Tag::O => return f.write_str("O"),
            Tag::B(r) => ('B', r),
            Tag::I(r) => ('I', r),
            Tag::E(r) => ('E', r),
            Tag::S(r) => ('S', r),
        };
        let role = match role {
            Role::Cause => 'C',
            Role::Effect => 'E',
        };
        write!(f, "{prefix}-{role}")
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let unknown = || Error::UnknownTag(s.to_string());
        let (prefix, role) = s.split_once('-').ok_or_else(unknown)?;
        let role = match role {
            "C" => Role::Cause,
            "E" => Role::Effect,
            _ => return Err(unknown()),
        };
        match prefix {
            "B" => Ok(Tag::B(role)),
            "I" => Ok(Tag::I(role)),
            "E" => Ok(Tag::E(role)),
            "S" => Ok(Tag::S(role)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSequence {
    pub scheme: Scheme,
    pub tags: Vec<Tag>,
}

impl TagSequence {
    /// Fails if a tag does not belong to the scheme's alphabet.
    pub fn new(scheme: Scheme, tags: Vec<Tag>) -> Result<Self> {
        if let Some(bad) = tags.iter().find(|t| !t.is_valid_in(scheme)) {
            return Err(Error::UnknownTag(format!("{bad} under {scheme:?}")));
        }
        Ok(TagSequence { scheme, tags })
    }

    pub fn parse(scheme: Scheme, tags: &[&str]) -> Result<Self> {
        let tags = tags.iter().map(|t| t.parse()).collect::<Result<Vec<Tag>>>()?;
        TagSequence::new(scheme, tags)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.tags.iter().map(Tag::to_string).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    /// Reject sequences that violate the scheme grammar.
    Strict,
    /// Repair malformed sequences; never fails.
    Lenient,
}

/// Encodes the distinct role spans of an example.
pub fn encode(example: &Example, scheme: Scheme) -> Result<TagSequence> {
    encode_spans(example.len(), &example.role_spans(), scheme)
}

/// Encodes arbitrary role spans over `len` tokens. Identical role spans are
/// merged; any other overlap is an error since tags cannot express it.
pub fn encode_spans(len: usize, spans: &[RoleSpan], scheme: Scheme) -> Result<TagSequence> {
    let mut spans = spans.to_vec();
    spans.sort_by_key(|s| (s.span.start, s.span.end, s.role));
    spans.dedup();
    for pair in spans.windows(2) {
        if pair[0].span.overlaps(&pair[1].span) {
            return Err(Error::OverlappingSpans(pair[0].span, pair[1].span));
        }
    }

    let mut tags = vec![Tag::O; len];
    for RoleSpan { role, span } in spans {
        if span.is_empty() || span.end > len {
            return Err(Error::IndexOutOfRange {
                index: span.end,
                len,
            });
        }
        match scheme {
            Scheme::Bio => {
                tags[span.start] = Tag::B(role);
                for t in &mut tags[span.start + 1..span.end] {
                    *t = Tag::I(role);
                }
            }
            Scheme::Iobes if span.len() == 1 => tags[span.start] = Tag::S(role),
            Scheme::Iobes => {
                tags[span.start] = Tag::B(role);
                for t in &mut tags[span.start + 1..span.end - 1] {
                    *t = Tag::I(role);
                }
                tags[span.end - 1] = Tag::E(role);
            }
        }
    }
    Ok(TagSequence { scheme, tags })
}

/// Decodes tags to spans sorted by start.
///
/// Lenient repairs: an `I`/`E` that does not continue an open span of the
/// same role opens a new one (a stray `E` yields a single-token span); a role
/// change closes the open span; an unterminated IOBES span closes at its last
/// contiguous token.
pub fn decode(tags: &TagSequence, mode: DecodeMode) -> Result<Vec<RoleSpan>> {
    match mode {
        DecodeMode::Lenient => Ok(decode_lenient(&tags.tags)),
        DecodeMode::Strict => decode_strict(tags),
    }
}

fn decode_lenient(tags: &[Tag]) -> Vec<RoleSpan> {
    let mut out = Vec::new();
    let mut open: Option<(Role, usize)> = None;
    let close = |open: &mut Option<(Role, usize)>, end: usize, out: &mut Vec<RoleSpan>| {
        if let Some((role, start)) = open.take() {
            out.push(RoleSpan::new(role, TokenSpan::new(start, end)));
        }
    };

    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => close(&mut open, i, &mut out),
            Tag::B(r) => {
                close(&mut open, i, &mut out);
                open = Some((r, i));
            }
            Tag::I(r) => match open {
                Some((role, _)) if role == r => {}
                _ => {
                    close(&mut open, i, &mut out);
                    open = Some((r, i));
                }
            },
            Tag::E(r) => {
                match open {
                    Some((role, _)) if role == r => {}
                    _ => {
                        close(&mut open, i, &mut out);
                        open = Some((r, i));
                    }
                }
                close(&mut open, i + 1, &mut out);
            }
            Tag::S(r) => {
                close(&mut open, i, &mut out);
                out.push(RoleSpan::new(r, TokenSpan::new(i, i + 1)));
            }
        }
    }
    close(&mut open, tags.len(), &mut out);
    out
}

fn decode_strict(seq: &TagSequence) -> Result<Vec<RoleSpan>> {
    let mut out = Vec::new();
    let mut open: Option<(Role, usize)> = None;
    let fail = |position: usize, message: String| Error::InvalidTransition { position, message };

    for (i, &tag) in seq.tags.iter().enumerate() {
        if !tag.is_valid_in(seq.scheme) {
            return Err(fail(i, format!("{tag} is not a {:?} tag", seq.scheme)));
        }
        let prev = if i == 0 {
            "start".to_string()
        } else {
            seq.tags[i - 1].to_string()
        };
        match (seq.scheme, tag) {
            (_, Tag::I(r)) => match open {
                Some((role, _)) if role == r => {}
                _ => return Err(fail(i, format!("{tag} after {prev}"))),
            },
            (Scheme::Bio, Tag::O) => {
                if let Some((role, start)) = open.take() {
                    out.push(RoleSpan::new(role, TokenSpan::new(start, i)));
                }
            }
            (Scheme::Bio, Tag::B(r)) => {
                if let Some((role, start)) = open.take() {
                    out.push(RoleSpan::new(role, TokenSpan::new(start, i)));
                }
                open = Some((r, i));
            }
            (Scheme::Iobes, Tag::E(r)) => match open.take() {
                Some((role, start)) if role == r => {
                    out.push(RoleSpan::new(role, TokenSpan::new(start, i + 1)))
                }
                _ => return Err(fail(i, format!("{tag} after {prev}"))),
            },
            (Scheme::Iobes, _) if open.is_some() => {
                return Err(fail(i, format!("{tag} after unterminated {prev}")));
            }
            (Scheme::Iobes, Tag::O) => {}
            (Scheme::Iobes, Tag::B(r)) => open = Some((r, i)),
            (Scheme::Iobes, Tag::S(r)) => out.push(RoleSpan::new(r, TokenSpan::new(i, i + 1))),
            (Scheme::Bio, Tag::E(_) | Tag::S(_)) => unreachable!("rejected above"),
        }
    }
    match (seq.scheme, open) {
        (Scheme::Bio, Some((role, start))) => {
            out.push(RoleSpan::new(role, TokenSpan::new(start, seq.len())))
        }
        (Scheme::Iobes, Some(_)) => {
            return Err(fail(seq.len(), "sequence ends inside a span".into()));
        }
        _ => {}
    }
    Ok(out)
}
