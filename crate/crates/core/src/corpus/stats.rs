use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Example, Role};
use crate::error::{Error, Result};

/// Percentiles listed in [`RoleStats::percentiles`].
pub const REPORTED_PERCENTILES: [u32; 5] = [50, 90, 95, 99, 100];

/// Nearest-rank percentile: the `ceil(p/100 * N)`-th smallest length
/// (1-based), so the result is always an observed value.
pub fn percentile_length(lengths: &[usize], p: f64) -> Result<usize> {
    if lengths.is_empty() {
        return Err(Error::EmptyLengths);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::InvalidPercentile(p));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = ((p * n as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleStats {
    pub spans: usize,
    /// span length → count
    pub histogram: BTreeMap<usize, usize>,
    /// "p50" … "p100" → length; empty when there are no spans
    pub percentiles: BTreeMap<String, usize>,
}

impl RoleStats {
    fn from_lengths(lengths: &[usize]) -> Self {
        let mut histogram = BTreeMap::new();
        for &len in lengths {
            *histogram.entry(len).or_insert(0) += 1;
        }
        let percentiles = if lengths.is_empty() {
            BTreeMap::new()
        } else {
            REPORTED_PERCENTILES
                .iter()
                .map(|&p| {
                    let value = percentile_length(lengths, p as f64).expect("non-empty");
                    (format!("p{p}"), value)
                })
                .collect()
        };
        RoleStats {
            spans: lengths.len(),
            histogram,
            percentiles,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub examples: usize,
    pub causal: usize,
    pub non_causal: usize,
    pub cause: RoleStats,
    pub effect: RoleStats,
    /// cause and effect lengths pooled
    pub all: RoleStats,
    /// fraction of examples containing at least one connective
    pub connective_coverage: f64,
    pub avg_span_frequency: Option<f64>,
}

/// `["because"], ["due", "to"], ["lead", "to"]`
pub fn default_connectives() -> Vec<Vec<String>> {
    [&["because"][..], &["due", "to"], &["lead", "to"]]
        .iter()
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect()
}

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Span statistics over distinct role spans per example (see
/// [`Example::role_spans`]). Connective matching is exact on lowercased
/// tokens; frequency lookups use the lowercased token.
pub fn compute_stats(
    examples: &[Example],
    connectives: &[Vec<String>],
    freq_table: Option<&HashMap<String, f64>>,
) -> CorpusStats {
    let mut cause_lengths = Vec::new();
    let mut effect_lengths = Vec::new();
    let mut covered = 0usize;
    let mut freq_sum = 0.0;
    let mut freq_spans = 0usize;

    for ex in examples {
        let lowered: Vec<String> = ex.tokens.iter().map(|t| t.to_lowercase()).collect();
        if connectives.iter().any(|c| contains_sequence(&lowered, c)) {
            covered += 1;
        }
        for rs in ex.role_spans() {
            match rs.role {
                Role::Cause => cause_lengths.push(rs.span.len()),
                Role::Effect => effect_lengths.push(rs.span.len()),
            }
            if let Some(table) = freq_table {
                let total: f64 = lowered[rs.span.indices()]
                    .iter()
                    .map(|t| table.get(t).copied().unwrap_or(0.0))
                    .sum();
                freq_sum += total / rs.span.len() as f64;
                freq_spans += 1;
            }
        }
    }

    let all_lengths: Vec<usize> = cause_lengths.iter().chain(&effect_lengths).copied().collect();
    let causal = examples.iter().filter(|e| e.is_causal()).count();
    CorpusStats {
        examples: examples.len(),
        causal,
        non_causal: examples.len() - causal,
        cause: RoleStats::from_lengths(&cause_lengths),
        effect: RoleStats::from_lengths(&effect_lengths),
        all: RoleStats::from_lengths(&all_lengths),
        connective_coverage: if examples.is_empty() {
            0.0
        } else {
            covered as f64 / examples.len() as f64
        },
        avg_span_frequency: freq_table.map(|_| {
            if freq_spans == 0 {
                0.0
            } else {
                freq_sum / freq_spans as f64
            }
        }),
    }
}

/// Two-column `length,count` CSV with a header row.
pub fn histogram_csv(histogram: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("length,count\n");
    for (len, count) in histogram {
        writeln!(out, "{len},{count}").unwrap();
    }
    out
}

/// One connective per line, tokens separated by whitespace. Blank lines and
/// `#` comments are ignored.
pub fn load_connectives(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(str::to_lowercase).collect())
        .collect())
}

/// Lines of `token<whitespace>count`. Tokens are lowercased; counts of
/// tokens that collide after lowercasing are summed.
pub fn load_freq_table(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(token), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::MalformedLine {
                line: i + 1,
                message: "expected `token count`".into(),
            });
        };
        let count: f64 = count.parse().map_err(|_| Error::MalformedLine {
            line: i + 1,
            message: format!("bad count {count:?}"),
        })?;
        *table.entry(token.to_lowercase()).or_insert(0.0) += count;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenSpan;
    use proptest::prelude::*;

    fn ex(id: &str, text: &str) -> Example {
        Example::new(id, text.split(' ').map(String::from).collect(), "t")
    }

    // sort, then index at ceil(p*N/100) computed in exact integer arithmetic
    fn nearest_rank_oracle(lengths: &[usize], p_percent: u32) -> usize {
        let mut v = lengths.to_vec();
        v.sort();
        let n = v.len() as u64;
        let rank = (p_percent as u64 * n).div_ceil(100).max(1);
        v[rank as usize - 1]
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile_length(&[1, 1, 2, 3, 10], 99.0).unwrap(), 10);
        assert_eq!(percentile_length(&[5], 1.0).unwrap(), 5);
        assert_eq!(percentile_length(&[5], 100.0).unwrap(), 5);
        assert_eq!(percentile_length(&(1..=10).collect::<Vec<_>>(), 50.0).unwrap(), 5);
        assert_eq!(nearest_rank_oracle(&[1, 1, 2, 3, 10], 99), 10);
        assert_eq!(nearest_rank_oracle(&(1..=10).collect::<Vec<_>>(), 50), 5);
    }

    #[test]
    fn percentile_errors() {
        assert!(matches!(percentile_length(&[], 50.0), Err(Error::EmptyLengths)));
        assert!(percentile_length(&[1], 0.0).is_err());
        assert!(percentile_length(&[1], 100.5).is_err());
    }

    #[test]
    fn ninety_nine_ones_and_a_forty() {
        let mut v = vec![1; 99];
        v.push(40);
        assert_eq!(percentile_length(&v, 99.0).unwrap(), 1);
        assert_eq!(percentile_length(&v, 100.0).unwrap(), 40);
    }

    #[test]
    fn full_coverage() {
        let c = vec![ex("a", "it fell because of rain"), ex("b", "Because x , y")];
        let s = compute_stats(&c, &default_connectives(), None);
        assert_eq!(s.connective_coverage, 1.0);
        assert_eq!(s.avg_span_frequency, None);
    }

    #[test]
    fn coverage_needs_contiguous_sequence() {
        let c = vec![
            ex("a", "due to rain"),
            ex("b", "due mostly to rain"),
            ex("c", "this will lead to that"),
            ex("d", "leads to nothing"),
        ];
        let s = compute_stats(&c, &default_connectives(), None);
        // counting oracle: a and c match, b is non-contiguous, d is an inflection
        assert_eq!(s.connective_coverage, 2.0 / 4.0);
    }

    #[test]
    fn average_span_frequency() {
        let e = Example::new("x", vec!["a".into(), "a".into(), "b".into()], "t")
            .with_relation(TokenSpan::new(0, 1), TokenSpan::new(1, 3));
        let table: HashMap<String, f64> = [("a".to_string(), 4.0), ("b".to_string(), 2.0)].into();
        let s = compute_stats(&[e], &default_connectives(), Some(&table));
        assert_eq!(s.avg_span_frequency, Some((4.0 + 3.0) / 2.0));
    }

    #[test]
    fn missing_tokens_count_zero() {
        let e = Example::new("x", vec!["a".into(), "zzz".into()], "t")
            .with_relation(TokenSpan::new(0, 1), TokenSpan::new(1, 2));
        let table: HashMap<String, f64> = [("a".to_string(), 4.0)].into();
        let s = compute_stats(&[e], &[], Some(&table));
        assert_eq!(s.avg_span_frequency, Some(2.0));
    }

    #[test]
    fn empty_corpus_stats() {
        let s = compute_stats(&[], &default_connectives(), None);
        assert_eq!((s.examples, s.causal, s.non_causal), (0, 0, 0));
        assert!(s.all.percentiles.is_empty());
        assert_eq!(s.connective_coverage, 0.0);
    }

    #[test]
    fn histogram_csv_format() {
        let h: BTreeMap<usize, usize> = [(1, 3), (4, 1)].into();
        assert_eq!(histogram_csv(&h), "length,count\n1,3\n4,1\n");
    }

    proptest! {
        #[test]
        fn percentile_matches_oracle_and_is_monotone(
            lengths in prop::collection::vec(1usize..60, 1..80),
            p in 1u32..=100,
        ) {
            let got = percentile_length(&lengths, p as f64).unwrap();
            prop_assert_eq!(got, nearest_rank_oracle(&lengths, p));
            if p < 100 {
                prop_assert!(percentile_length(&lengths, (p + 1) as f64).unwrap() >= got);
            }
            prop_assert_eq!(percentile_length(&lengths, 100.0).unwrap(), *lengths.iter().max().unwrap());
        }

        #[test]
        fn histogram_totals_equal_span_counts(spans in prop::collection::vec((0usize..8, 1usize..4, 0usize..8, 1usize..4), 0..10)) {
            let examples: Vec<Example> = spans.iter().enumerate().map(|(i, &(cs, cl, es, el))| {
                Example::new(format!("e{i}"), vec!["w".to_string(); 20], "t")
                    .with_relation(TokenSpan::new(cs, cs + cl), TokenSpan::new(es + 10, es + 10 + el))
            }).collect();
            let s = compute_stats(&examples, &[], None);
            prop_assert_eq!(s.cause.histogram.values().sum::<usize>(), s.cause.spans);
            prop_assert_eq!(s.effect.histogram.values().sum::<usize>(), s.effect.spans);
            prop_assert_eq!(s.all.spans, s.cause.spans + s.effect.spans);
            prop_assert_eq!(s.cause.spans, examples.len());
        }
    }
}
