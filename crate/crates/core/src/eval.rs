//! Exact- and partial-match micro scores over role-tagged spans.
//!
//! Exact matching counts a predicted span as correct when its start, end
//! and role equal a gold span; each gold span can absorb one prediction.
//! Partial matching works on token-index sets per role: the overlap of the
//! predicted and gold sets against their sizes. Both are micro-averaged, so
//! counts are summed over all examples before any ratio is taken.
//!
//! ```
//! use causal_span::corpus::RoleSpan;
//! use causal_span::eval::{exact_counts, partial_counts};
//!
//! let gold = [RoleSpan::cause(7, 9), RoleSpan::effect(0, 2)];
//! let pred = [RoleSpan::cause(6, 9), RoleSpan::effect(0, 2)];
//! assert_eq!(exact_counts(&gold, &pred).pooled().matched, 1);
//! let partial = partial_counts(&gold, &pred).pooled();
//! assert_eq!((partial.matched, partial.predicted, partial.gold), (4, 5, 4));
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, Role, RoleSpan, TokenSpan};
use crate::error::{Error, Result};

/// Version of the [`MetricsReport`] JSON layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Matched, predicted and gold totals. For exact matching these are span
/// counts, for partial matching token counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn prf(&self) -> Prf {
        micro_prf(self.matched, self.predicted, self.gold)
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            matched: self.matched + rhs.matched,
            predicted: self.predicted + rhs.predicted,
            gold: self.gold + rhs.gold,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCounts {
    pub cause: Counts,
    pub effect: Counts,
}

impl RoleCounts {
    pub fn role(&self, role: Role) -> Counts {
        match role {
            Role::Cause => self.cause,
            Role::Effect => self.effect,
        }
    }

    fn role_mut(&mut self, role: Role) -> &mut Counts {
        match role {
            Role::Cause => &mut self.cause,
            Role::Effect => &mut self.effect,
        }
    }

    pub fn pooled(&self) -> Counts {
        self.cause + self.effect
    }
}

impl Add for RoleCounts {
    type Output = RoleCounts;

    fn add(self, rhs: RoleCounts) -> RoleCounts {
        RoleCounts {
            cause: self.cause + rhs.cause,
            effect: self.effect + rhs.effect,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub exact: RoleCounts,
    pub partial: RoleCounts,
}

impl Add for MatchCounts {
    type Output = MatchCounts;

    fn add(self, rhs: MatchCounts) -> MatchCounts {
        MatchCounts {
            exact: self.exact + rhs.exact,
            partial: self.partial + rhs.partial,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 from raw counts. Empty denominators give 0.
pub fn micro_prf(correct: usize, predicted: usize, gold: usize) -> Prf {
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let precision = ratio(correct, predicted);
    let recall = ratio(correct, gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

pub fn exact_counts(gold: &[RoleSpan], pred: &[RoleSpan]) -> RoleCounts {
    let mut counts = RoleCounts::default();
    let mut unused: Vec<RoleSpan> = gold.to_vec();
    for g in gold {
        counts.role_mut(g.role).gold += 1;
    }
    for p in pred {
        let c = counts.role_mut(p.role);
        c.predicted += 1;
        if let Some(k) = unused.iter().position(|g| g == p) {
            unused.swap_remove(k);
            c.matched += 1;
        }
    }
    counts
}

fn token_set(spans: &[RoleSpan], role: Role) -> BTreeSet<usize> {
    spans
        .iter()
        .filter(|s| s.role == role)
        .flat_map(|s| s.span.indices())
        .collect()
}

pub fn partial_counts(gold: &[RoleSpan], pred: &[RoleSpan]) -> RoleCounts {
    let mut counts = RoleCounts::default();
    for role in Role::ALL {
        let g = token_set(gold, role);
        let p = token_set(pred, role);
        *counts.role_mut(role) = Counts {
            matched: g.intersection(&p).count(),
            predicted: p.len(),
            gold: g.len(),
        };
    }
    counts
}

pub fn match_counts(gold: &[RoleSpan], pred: &[RoleSpan]) -> MatchCounts {
    MatchCounts {
        exact: exact_counts(gold, pred),
        partial: partial_counts(gold, pred),
    }
}

/// One line of a predictions file:
/// `{"id":…,"cause":[s,e]|null,"effect":[s,e]|null,"relation_score":x|null}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub cause: Option<TokenSpan>,
    pub effect: Option<TokenSpan>,
    #[serde(default)]
    pub relation_score: Option<f64>,
}

impl PredictionRecord {
    pub fn empty(id: impl Into<String>) -> Self {
        PredictionRecord {
            id: id.into(),
            cause: None,
            effect: None,
            relation_score: None,
        }
    }

    pub fn role_spans(&self) -> Vec<RoleSpan> {
        let cause = self.cause.map(|s| RoleSpan::new(Role::Cause, s));
        let effect = self.effect.map(|s| RoleSpan::new(Role::Effect, s));
        cause.into_iter().chain(effect).collect()
    }

    /// The gold annotation of `example` as a prediction (first relation).
    pub fn from_gold(example: &Example) -> Self {
        let first = example.relations.first();
        PredictionRecord {
            id: example.id.clone(),
            cause: first.map(|r| r.cause),
            effect: first.map(|r| r.effect),
            relation_score: None,
        }
    }
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_predictions(records: &[PredictionRecord], out: &mut impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn save_predictions(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_predictions(records, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub cause: Prf,
    pub effect: Prf,
    pub pooled: Prf,
}

impl ScoreTable {
    fn from_counts(c: &RoleCounts) -> Self {
        ScoreTable {
            cause: c.cause.prf(),
            effect: c.effect.prf(),
            pooled: c.pooled().prf(),
        }
    }

    fn rows(&self) -> [(&'static str, Prf); 3] {
        [("cause", self.cause), ("effect", self.effect), ("pooled", self.pooled)]
    }
}

/// Scores for a whole corpus.
///
/// JSON layout (schema version 1):
///
/// ```text
/// {"schema_version":1,"examples":N,
///  "exact":{"cause":{"precision":…,"recall":…,"f1":…},"effect":{…},"pooled":{…}},
///  "partial":{…same…},
///  "counts":{"exact":{"cause":{"matched":…,"predicted":…,"gold":…},"effect":{…}},
///            "partial":{…same…}}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub examples: usize,
    pub exact: ScoreTable,
    pub partial: ScoreTable,
    pub counts: MatchCounts,
}

impl MetricsReport {
    pub fn from_counts(counts: MatchCounts, examples: usize) -> Self {
        MetricsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            examples,
            exact: ScoreTable::from_counts(&counts.exact),
            partial: ScoreTable::from_counts(&counts.partial),
            counts,
        }
    }
}

/// Scores `predictions` against every example of `gold`. Examples without a
/// prediction count as predicting nothing.
pub fn evaluate_corpus(gold: &[Example], predictions: &[PredictionRecord]) -> Result<MetricsReport> {
    let ids: HashMap<&str, usize> = gold.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut by_example: Vec<Option<&PredictionRecord>> = vec![None; gold.len()];
    for p in predictions {
        let &i = ids
            .get(p.id.as_str())
            .ok_or_else(|| Error::UnknownPredictionId(p.id.clone()))?;
        by_example[i] = Some(p);
    }
    let counts = gold
        .par_iter()
        .zip(by_example.par_iter())
        .map(|(example, pred)| {
            let pred = pred.map(PredictionRecord::role_spans).unwrap_or_default();
            match_counts(&example.role_spans(), &pred)
        })
        .reduce(MatchCounts::default, |a, b| a + b);
    Ok(MetricsReport::from_counts(counts, gold.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Renders a report. The text layout shows each exact score followed by
/// its partial counterpart in brackets, as percentages:
///
/// ```text
/// examples: 3
/// role    P                R                F1
/// cause   50.00 (88.89)    …
/// ```
pub fn emit_report(report: &MetricsReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut s = format!("examples: {}\n", report.examples);
            let _ = writeln!(s, "{:<8}{:<17}{:<17}F1", "role", "P", "R");
            for ((role, e), (_, p)) in report.exact.rows().into_iter().zip(report.partial.rows()) {
                let cell = |a: f64, b: f64| format!("{} ({})", pct(a), pct(b));
                let _ = writeln!(
                    s,
                    "{:<8}{:<17}{:<17}{}",
                    role,
                    cell(e.precision, p.precision),
                    cell(e.recall, p.recall),
                    cell(e.f1, p.f1)
                );
            }
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("match,role,precision,recall,f1,matched,predicted,gold\n");
            for (name, table, counts) in [
                ("exact", &report.exact, &report.counts.exact),
                ("partial", &report.partial, &report.counts.partial),
            ] {
                let raw = [counts.cause, counts.effect, counts.pooled()];
                for ((role, prf), c) in table.rows().into_iter().zip(raw) {
                    let _ = writeln!(
                        s,
                        "{name},{role},{},{},{},{},{},{}",
                        prf.precision, prf.recall, prf.f1, c.matched, c.predicted, c.gold
                    );
                }
            }
            s
        }
    })
}
