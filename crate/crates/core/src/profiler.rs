//! Per-column analyses, materialized as RDF statements about column deep links.
//!
//! For each column the profiler counts total, distinct, blank (whitespace
//! only, non-empty) and empty (zero-length) values, computes minimum, mean,
//! population standard deviation and maximum of the value lengths in code
//! points, and builds a value-frequency histogram. When the table has a
//! header row, row 1 is excluded and becomes the column's `rdfs:label`.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::deeplink::{DeepLink, Selector};
use crate::graphstore::{ns, BlankNode, Literal, Term, Triple};
use crate::resources::TableResource;
use crate::vocab::{self, Vocabulary};

pub const DEFAULT_HISTOGRAM_CAP: usize = 1000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("column {col} is out of bounds (table has {col_count} columns)")]
    OutOfBounds { col: usize, col_count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfilerConfig {
    pub histogram_cap: usize,
}

impl Default for ProfilerConfig {
    fn default() -> Self {
        ProfilerConfig {
            histogram_cap: DEFAULT_HISTOGRAM_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthStats {
    pub min: usize,
    pub max: usize,
    pub avg: f64,
    pub std_dev: f64,
}

/// Value frequencies, most frequent first, then by value.
///
/// Values beyond the cap are folded into `overflow`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    pub entries: Vec<(String, u64)>,
    pub overflow: Option<u64>,
}

impl Histogram {
    /// Sum of all frequencies, including the overflow entry.
    pub fn mass(&self) -> u64 {
        self.entries.iter().map(|(_, f)| f).sum::<u64>() + self.overflow.unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProfile {
    pub column_link: DeepLink,
    pub column: usize,
    pub table_iri: String,
    pub header: Option<String>,
    pub total_count: u64,
    pub distinct_count: u64,
    pub blank_count: u64,
    pub empty_count: u64,
    /// `None` for a column without data values.
    pub lengths: Option<LengthStats>,
    pub histogram: Histogram,
}

pub fn is_blank(value: &str) -> bool {
    !value.is_empty() && value.chars().all(char::is_whitespace)
}

pub fn histogram<'a, I>(values: I, cap: usize) -> Histogram
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    histogram_from_counts(counts, cap)
}

fn histogram_from_counts(counts: HashMap<&str, u64>, cap: usize) -> Histogram {
    let mut entries: Vec<(&str, u64)> = counts.into_iter().collect();
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let overflow = (entries.len() > cap).then(|| entries[cap..].iter().map(|(_, f)| f).sum());
    entries.truncate(cap);
    Histogram {
        entries: entries.into_iter().map(|(v, f)| (v.to_string(), f)).collect(),
        overflow,
    }
}

struct Accumulator<'a> {
    counts: HashMap<&'a str, u64>,
    total: u64,
    blank: u64,
    empty: u64,
    min: usize,
    max: usize,
    sum: u128,
    sum_sq: u128,
}

impl<'a> Accumulator<'a> {
    fn new() -> Self {
        Accumulator {
            counts: HashMap::new(),
            total: 0,
            blank: 0,
            empty: 0,
            min: usize::MAX,
            max: 0,
            sum: 0,
            sum_sq: 0,
        }
    }

    fn push(&mut self, value: &'a str) {
        *self.counts.entry(value).or_default() += 1;
        self.total += 1;
        if value.is_empty() {
            self.empty += 1;
        } else if is_blank(value) {
            self.blank += 1;
        }
        let len = value.chars().count();
        self.min = self.min.min(len);
        self.max = self.max.max(len);
        self.sum += len as u128;
        self.sum_sq += (len as u128) * (len as u128);
    }

    fn lengths(&self) -> Option<LengthStats> {
        if self.total == 0 {
            return None;
        }
        let n = u128::from(self.total);
        // n * sum(x^2) - (sum x)^2 is exact in integers and never negative.
        let numerator = n * self.sum_sq - self.sum * self.sum;
        let variance = numerator as f64 / (n * n) as f64;
        Some(LengthStats {
            min: self.min,
            max: self.max,
            avg: self.sum as f64 / n as f64,
            std_dev: variance.sqrt(),
        })
    }
}

pub fn profile_column(table: &TableResource, col: usize, config: &ProfilerConfig) -> Result<ColumnProfile, ProfileError> {
    if col == 0 || col > table.col_count() {
        return Err(ProfileError::OutOfBounds {
            col,
            col_count: table.col_count(),
        });
    }
    let skip = usize::from(table.header_row);
    let mut acc = Accumulator::new();
    for value in table.column(col).skip(skip) {
        acc.push(value);
    }
    let lengths = acc.lengths();
    Ok(ColumnProfile {
        column_link: DeepLink::new(table.base_iri.clone(), Some(Selector::col(col))),
        column: col,
        table_iri: table.base_iri.clone(),
        header: table
            .header_row
            .then(|| table.cell(1, col).unwrap_or_default().to_string()),
        total_count: acc.total,
        distinct_count: acc.counts.len() as u64,
        blank_count: acc.blank,
        empty_count: acc.empty,
        lengths,
        histogram: histogram_from_counts(acc.counts, config.histogram_cap),
    })
}

/// Profiles every column, in column order. Columns are processed in parallel.
pub fn profile_table(table: &TableResource, config: &ProfilerConfig) -> Vec<ColumnProfile> {
    (1..=table.col_count())
        .into_par_iter()
        .map(|col| profile_column(table, col, config).expect("column index in range"))
        .collect()
}

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |hash, b| {
        (hash ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn profile_to_triples(profile: &ColumnProfile, vocab: &Vocabulary) -> Vec<Triple> {
    let column_iri = profile.column_link.to_string();
    let subject = Term::iri(&column_iri).expect("deep links are absolute IRIs");
    let mut out = Vec::new();
    let mut push = |s: &Term, p: Term, o: Term| {
        out.push(Triple::new(s.clone(), p, o).expect("well-formed"));
    };
    push(&subject, Term::iri(ns::RDF_TYPE).expect("valid"), vocab.term(vocab::COLUMN));
    push(
        &subject,
        vocab.term(vocab::IN_TABLE),
        Term::iri(&profile.table_iri).expect("table IRIs are absolute"),
    );
    if let Some(header) = &profile.header {
        push(&subject, Term::iri(ns::RDFS_LABEL).expect("valid"), Literal::string(header).into());
    }
    for (local, count) in [
        (vocab::TOTAL_COUNT, profile.total_count),
        (vocab::DISTINCT_COUNT, profile.distinct_count),
        (vocab::BLANK_COUNT, profile.blank_count),
        (vocab::EMPTY_COUNT, profile.empty_count),
    ] {
        push(&subject, vocab.term(local), Literal::integer(count).into());
    }
    if let Some(lengths) = &profile.lengths {
        push(&subject, vocab.term(vocab::MIN_LENGTH), Literal::integer(lengths.min).into());
        push(&subject, vocab.term(vocab::AVG_LENGTH), Literal::decimal6(lengths.avg).into());
        push(&subject, vocab.term(vocab::STD_DEV_LENGTH), Literal::decimal6(lengths.std_dev).into());
        push(&subject, vocab.term(vocab::MAX_LENGTH), Literal::integer(lengths.max).into());
    }
    // Entry labels derive from the column IRI and rank, so re-profiling adds nothing.
    let stem = format!("h{:016x}", fnv1a(&column_iri));
    let entries = profile
        .histogram
        .entries
        .iter()
        .enumerate()
        .map(|(i, (value, freq))| (format!("{stem}e{i}"), Term::from(Literal::string(value)), *freq));
    let overflow = profile
        .histogram
        .overflow
        .map(|freq| (format!("{stem}other"), vocab.term(vocab::OTHER_VALUES), freq));
    for (label, value, freq) in entries.chain(overflow) {
        let node = Term::BlankNode(BlankNode::new(label).expect("valid label"));
        push(&subject, vocab.term(vocab::HISTOGRAM_ENTRY), node.clone());
        push(&node, vocab.term(vocab::VALUE), value);
        push(&node, vocab.term(vocab::FREQUENCY), Literal::integer(freq).into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphstore::Store;
    use proptest::prelude::*;

    fn column_table(values: &[&str], header: Option<&str>) -> TableResource {
        let mut records: Vec<Vec<String>> = Vec::new();
        if let Some(h) = header {
            records.push(vec![h.to_string()]);
        }
        records.extend(values.iter().map(|v| vec![v.to_string()]));
        TableResource::from_records("http://localhost:8080/res/t.csv", "t.csv", records, header.is_some()).unwrap()
    }

    fn vocab() -> Vocabulary {
        Vocabulary::for_origin("http://localhost:8080")
    }

    #[test]
    fn counts() {
        let t = column_table(&["a", "a", "b", "", " "], Some("h"));
        let p = profile_column(&t, 1, &ProfilerConfig::default()).unwrap();
        assert_eq!(
            (p.total_count, p.distinct_count, p.empty_count, p.blank_count),
            (5, 4, 1, 1)
        );
        assert_eq!(p.header.as_deref(), Some("h"));
        assert_eq!(p.column_link.to_string(), "http://localhost:8080/res/t.csv#col=1");
    }

    #[test]
    fn length_statistics() {
        let t = column_table(&["ab", "abcd"], None);
        let l = profile_column(&t, 1, &ProfilerConfig::default()).unwrap().lengths.unwrap();
        assert_eq!((l.min, l.max), (2, 4));
        assert_eq!(l.avg, 3.0);
        assert_eq!(l.std_dev, 1.0);
        let unicode = column_table(&["héllo", "日本"], None);
        let l = profile_column(&unicode, 1, &ProfilerConfig::default()).unwrap().lengths.unwrap();
        assert_eq!((l.min, l.max), (2, 5));
    }

    #[test]
    fn out_of_bounds_column() {
        let t = column_table(&["a"], None);
        assert_eq!(
            profile_column(&t, 2, &ProfilerConfig::default()),
            Err(ProfileError::OutOfBounds { col: 2, col_count: 1 })
        );
        assert!(profile_column(&t, 0, &ProfilerConfig::default()).is_err());
    }

    #[test]
    fn histogram_order_and_cap() {
        assert_eq!(
            histogram(["b", "a", "b"], 10).entries,
            vec![("b".to_string(), 2), ("a".to_string(), 1)]
        );
        assert_eq!(histogram([], 10), Histogram::default());

        let values: Vec<String> = (0..1500).map(|i| format!("v{i:04}")).collect();
        let mut all: Vec<&str> = values.iter().map(String::as_str).collect();
        all.extend(["v0001", "v0001", "v1499"]);
        let h = histogram(all.iter().copied(), 1000);
        assert_eq!(h.entries.len(), 1000);
        assert_eq!(h.entries[0], ("v0001".to_string(), 3));
        assert_eq!(h.entries[1], ("v1499".to_string(), 2));
        assert_eq!(h.entries[2], ("v0000".to_string(), 1));
        // Oracle: values not kept in the entries, counted from the raw input.
        let kept: std::collections::HashSet<&str> = h.entries.iter().map(|(v, _)| v.as_str()).collect();
        let remainder = all.iter().filter(|v| !kept.contains(**v)).count() as u64;
        assert_eq!(remainder, 500);
        assert_eq!(h.overflow, Some(remainder));
        assert_eq!(h.mass(), all.len() as u64);
    }

    #[test]
    fn triples_for_single_distinct_value() {
        let t = column_table(&["x", "x"], Some("kind"));
        let p = profile_column(&t, 1, &ProfilerConfig::default()).unwrap();
        let v = vocab();
        let triples = profile_to_triples(&p, &v);
        let col = Term::iri("http://localhost:8080/res/t.csv#col=1").unwrap();
        assert!(triples.contains(
            &Triple::new(col.clone(), v.term(vocab::DISTINCT_COUNT), Literal::integer(1)).unwrap()
        ));
        assert!(triples.contains(
            &Triple::new(col.clone(), v.term(vocab::AVG_LENGTH), Literal::decimal6(1.0)).unwrap()
        ));
        assert!(triples.contains(
            &Triple::new(col, Term::iri(ns::RDFS_LABEL).unwrap(), Literal::string("kind")).unwrap()
        ));
    }

    #[test]
    fn empty_column_has_no_length_or_histogram_triples() {
        let t = column_table(&[], Some("only header"));
        let p = profile_column(&t, 1, &ProfilerConfig::default()).unwrap();
        assert_eq!(p.total_count, 0);
        assert!(p.lengths.is_none());
        let v = vocab();
        let triples = profile_to_triples(&p, &v);
        let count_of = |local: &str| triples.iter().filter(|t| t.predicate == v.term(local)).count();
        for local in [vocab::TOTAL_COUNT, vocab::DISTINCT_COUNT, vocab::BLANK_COUNT, vocab::EMPTY_COUNT] {
            assert_eq!(count_of(local), 1);
        }
        let zero = Term::from(Literal::integer(0));
        assert!(triples
            .iter()
            .filter(|t| t.predicate == v.term(vocab::TOTAL_COUNT))
            .all(|t| t.object == zero));
        for local in [vocab::MIN_LENGTH, vocab::AVG_LENGTH, vocab::STD_DEV_LENGTH, vocab::MAX_LENGTH, vocab::HISTOGRAM_ENTRY] {
            assert_eq!(count_of(local), 0);
        }
    }

    #[test]
    fn histogram_entries_become_blank_nodes() {
        let t = column_table(&["a", "b", "b"], None);
        let p = profile_column(&t, 1, &ProfilerConfig::default()).unwrap();
        let v = vocab();
        let triples = profile_to_triples(&p, &v);
        let nodes: Vec<&Term> = triples
            .iter()
            .filter(|t| t.predicate == v.term(vocab::HISTOGRAM_ENTRY))
            .map(|t| &t.object)
            .collect();
        assert_eq!(nodes.len(), 2);
        for node in nodes {
            assert!(matches!(node, Term::BlankNode(_)));
            for local in [vocab::VALUE, vocab::FREQUENCY] {
                assert_eq!(
                    triples.iter().filter(|t| &t.subject == node && t.predicate == v.term(local)).count(),
                    1
                );
            }
        }
    }

    #[test]
    fn overflow_entry_uses_reserved_marker() {
        let t = column_table(&["a", "b", "c", "c"], None);
        let p = profile_column(&t, 1, &ProfilerConfig { histogram_cap: 1 }).unwrap();
        assert_eq!(p.histogram.overflow, Some(2));
        let v = vocab();
        let triples = profile_to_triples(&p, &v);
        assert!(triples
            .iter()
            .any(|t| t.predicate == v.term(vocab::VALUE) && t.object == v.term(vocab::OTHER_VALUES)));
    }

    #[test]
    fn profile_table_and_reprofiling() {
        let t = TableResource::from_records(
            "http://localhost:8080/res/two.csv",
            "two.csv",
            vec![
                vec!["a".into(), "b".into()],
                vec!["1".into(), "x".into()],
                vec!["2".into(), "x".into()],
            ],
            true,
        )
        .unwrap();
        let profiles = profile_table(&t, &ProfilerConfig::default());
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].column, 1);
        assert_eq!(profiles[1].column, 2);
        let v = vocab();
        let mut store = Store::new();
        let mut added = 0;
        for p in &profiles {
            for triple in profile_to_triples(p, &v) {
                added += usize::from(store.insert(&triple).unwrap());
            }
        }
        assert!(added > 0);
        let again = profile_table(&t, &ProfilerConfig::default());
        assert_eq!(again, profiles);
        for p in &again {
            for triple in profile_to_triples(p, &v) {
                assert!(!store.insert(&triple).unwrap());
            }
        }
    }

    /// Straightforward second implementation used as the oracle.
    /// (total, distinct, blank, empty, (min, max, avg, std dev) of lengths)
    type Naive = (u64, u64, u64, u64, Option<(usize, usize, f64, f64)>);

    fn naive(values: &[String]) -> Naive {
        let mut distinct: Vec<&String> = values.iter().collect();
        distinct.sort();
        distinct.dedup();
        let empty = values.iter().filter(|v| v.is_empty()).count() as u64;
        let blank = values
            .iter()
            .filter(|v| !v.is_empty() && v.trim().is_empty())
            .count() as u64;
        let lengths: Vec<f64> = values.iter().map(|v| v.chars().count() as f64).collect();
        let stats = (!values.is_empty()).then(|| {
            let n = lengths.len() as f64;
            let mean = lengths.iter().sum::<f64>() / n;
            let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
            let min = lengths.iter().cloned().fold(f64::INFINITY, f64::min) as usize;
            let max = lengths.iter().cloned().fold(0.0, f64::max) as usize;
            (min, max, mean, var.sqrt())
        });
        (values.len() as u64, distinct.len() as u64, blank, empty, stats)
    }

    fn close(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
    }

    proptest! {
        #[test]
        fn matches_naive_oracle(values in prop::collection::vec("[ab \t]{0,4}|é{1,3}", 0..200)) {
            let refs: Vec<&str> = values.iter().map(String::as_str).collect();
            let p = profile_column(&column_table(&refs, Some("h")), 1, &ProfilerConfig::default()).unwrap();
            let (total, distinct, blank, empty, stats) = naive(&values);
            prop_assert_eq!((p.total_count, p.distinct_count, p.blank_count, p.empty_count), (total, distinct, blank, empty));
            match (p.lengths, stats) {
                (None, None) => {}
                (Some(l), Some((min, max, avg, sd))) => {
                    prop_assert_eq!((l.min, l.max), (min, max));
                    prop_assert!(close(l.avg, avg), "{} vs {}", l.avg, avg);
                    prop_assert!(close(l.std_dev, sd), "{} vs {}", l.std_dev, sd);
                    prop_assert!(l.min as f64 <= l.avg && l.avg <= l.max as f64);
                }
                other => prop_assert!(false, "mismatch {:?}", other),
            }
            prop_assert_eq!(p.histogram.mass(), total);
            prop_assert_eq!(p.histogram.entries.len() as u64, distinct);
        }

        #[test]
        fn permutation_invariant(values in prop::collection::vec("[abc ]{0,3}", 1..60), seed in any::<u64>()) {
            let refs: Vec<&str> = values.iter().map(String::as_str).collect();
            let mut shuffled = refs.clone();
            let mut rng = seed;
            for i in (1..shuffled.len()).rev() {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
                shuffled.swap(i, (rng >> 33) as usize % (i + 1));
            }
            let a = profile_column(&column_table(&refs, Some("h")), 1, &ProfilerConfig::default()).unwrap();
            let b = profile_column(&column_table(&shuffled, Some("h")), 1, &ProfilerConfig::default()).unwrap();
            prop_assert_eq!((a.total_count, a.distinct_count, a.blank_count, a.empty_count), (b.total_count, b.distinct_count, b.blank_count, b.empty_count));
            prop_assert_eq!(a.lengths, b.lengths);
            let mut ha = a.histogram.entries.clone();
            let mut hb = b.histogram.entries.clone();
            ha.sort();
            hb.sort();
            prop_assert_eq!(ha, hb);
        }

        #[test]
        fn histogram_mass_is_conserved(values in prop::collection::vec("[a-f]{1,2}", 0..300), cap in 0usize..20) {
            let h = histogram(values.iter().map(String::as_str), cap);
            prop_assert_eq!(h.mass(), values.len() as u64);
            prop_assert!(h.entries.len() <= cap);
        }
    }
}
