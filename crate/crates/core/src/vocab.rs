//! The `du:` vocabulary used for profiling statements.

use crate::graphstore::{Iri, PrefixMap, Term};

pub const COLUMN: &str = "Column";
pub const IN_TABLE: &str = "inTable";
pub const TOTAL_COUNT: &str = "totalCount";
pub const DISTINCT_COUNT: &str = "distinctCount";
pub const BLANK_COUNT: &str = "blankCount";
pub const EMPTY_COUNT: &str = "emptyCount";
pub const MIN_LENGTH: &str = "minLength";
pub const AVG_LENGTH: &str = "avgLength";
pub const STD_DEV_LENGTH: &str = "stdDevLength";
pub const MAX_LENGTH: &str = "maxLength";
pub const HISTOGRAM_ENTRY: &str = "histogramEntry";
pub const VALUE: &str = "value";
pub const FREQUENCY: &str = "frequency";
pub const OTHER_VALUES: &str = "OtherValues";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Class,
    Property,
    Individual,
}

#[derive(Debug, Clone, Copy)]
pub struct VocabTerm {
    pub local: &'static str,
    pub kind: TermKind,
    pub comment: &'static str,
}

pub const TERMS: &[VocabTerm] = &[
    VocabTerm { local: COLUMN, kind: TermKind::Class, comment: "A column of a table, identified by a col= deep link." },
    VocabTerm { local: IN_TABLE, kind: TermKind::Property, comment: "Links a column to the table resource containing it." },
    VocabTerm { local: TOTAL_COUNT, kind: TermKind::Property, comment: "Number of data values in the column." },
    VocabTerm { local: DISTINCT_COUNT, kind: TermKind::Property, comment: "Number of distinct raw values, including empty and blank ones." },
    VocabTerm { local: BLANK_COUNT, kind: TermKind::Property, comment: "Number of values that are non-empty and consist only of whitespace." },
    VocabTerm { local: EMPTY_COUNT, kind: TermKind::Property, comment: "Number of zero-length values." },
    VocabTerm { local: MIN_LENGTH, kind: TermKind::Property, comment: "Shortest value length in code points." },
    VocabTerm { local: AVG_LENGTH, kind: TermKind::Property, comment: "Mean value length in code points." },
    VocabTerm { local: STD_DEV_LENGTH, kind: TermKind::Property, comment: "Population standard deviation of value lengths." },
    VocabTerm { local: MAX_LENGTH, kind: TermKind::Property, comment: "Longest value length in code points." },
    VocabTerm { local: HISTOGRAM_ENTRY, kind: TermKind::Property, comment: "Links a column to one entry of its value-frequency histogram." },
    VocabTerm { local: VALUE, kind: TermKind::Property, comment: "The value counted by a histogram entry." },
    VocabTerm { local: FREQUENCY, kind: TermKind::Property, comment: "How often the entry's value occurs." },
    VocabTerm { local: OTHER_VALUES, kind: TermKind::Individual, comment: "Stands for all values beyond the histogram cap." },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    namespace: String,
}

impl Vocabulary {
    /// Vocabulary served under `<origin>/vocab#`.
    pub fn for_origin(origin: &str) -> Self {
        Vocabulary {
            namespace: format!("{}/vocab#", origin.trim_end_matches('/')),
        }
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn iri(&self, local: &str) -> Iri {
        Iri::new(format!("{}{local}", self.namespace)).expect("vocabulary IRIs are absolute")
    }

    pub fn term(&self, local: &str) -> Term {
        Term::Iri(self.iri(local))
    }

    /// Standard prefixes with `du:` bound to this vocabulary.
    pub fn prefixes(&self) -> PrefixMap {
        PrefixMap::standard(&self.namespace)
    }
}
