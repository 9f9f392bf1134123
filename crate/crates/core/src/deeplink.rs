//! Fragment identifiers that address parts of tables and text documents.
//!
//! A fragment holds exactly one selection:
//!
//! ```text
//! selector  = ("row=" range) / ("col=" range) / ("cell=" cellrange) / ("line=" range)
//! range     = int ["-" (int / "*")]
//! cellrange = int "," int ["-" (int / "*") "," (int / "*")]
//! int       = nonzero decimal
//! ```
//!
//! Indices are 1-based and `*` means "through the last one". The canonical
//! form drops a redundant `-end` part, so `row=2-2` serializes as `row=2`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::resources::{CellBounds, LineSpan, Resource, ResourceError, ResourceRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("bounds error: {0}")]
    Bounds(String),
}

impl FragmentError {
    fn syntax(offset: usize, message: impl Into<String>) -> Self {
        FragmentError::Syntax {
            offset,
            message: message.into(),
        }
    }
}

/// The end of a range: a concrete 1-based index or `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RangeEnd {
    Index(usize),
    Last,
}

impl RangeEnd {
    /// Replaces `*` with `extent`, and caps concrete indices at `extent`.
    pub fn clamp(self, extent: usize) -> usize {
        match self {
            RangeEnd::Index(i) => i.min(extent),
            RangeEnd::Last => extent,
        }
    }
}

impl fmt::Display for RangeEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeEnd::Index(i) => write!(f, "{i}"),
            RangeEnd::Last => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    Rows {
        start: usize,
        end: RangeEnd,
    },
    Cols {
        start: usize,
        end: RangeEnd,
    },
    Cells {
        start_row: usize,
        start_col: usize,
        end_row: RangeEnd,
        end_col: RangeEnd,
    },
    Lines {
        start: usize,
        end: RangeEnd,
    },
}

impl Selector {
    pub fn row(row: usize) -> Self {
        Selector::Rows {
            start: row,
            end: RangeEnd::Index(row),
        }
    }

    pub fn col(col: usize) -> Self {
        Selector::Cols {
            start: col,
            end: RangeEnd::Index(col),
        }
    }

    pub fn cell(row: usize, col: usize) -> Self {
        Selector::Cells {
            start_row: row,
            start_col: col,
            end_row: RangeEnd::Index(row),
            end_col: RangeEnd::Index(col),
        }
    }

    pub fn line(line: usize) -> Self {
        Selector::Lines {
            start: line,
            end: RangeEnd::Index(line),
        }
    }

    /// Whether this selector addresses a table (as opposed to text lines).
    pub fn is_tabular(&self) -> bool {
        !matches!(self, Selector::Lines { .. })
    }

    /// Checks the bound invariants: nonzero starts, start <= end.
    pub fn validate(&self) -> Result<(), FragmentError> {
        fn check(start: usize, end: RangeEnd, what: &str) -> Result<(), FragmentError> {
            if start == 0 {
                return Err(FragmentError::Bounds(format!("{what} index must be at least 1")));
            }
            match end {
                RangeEnd::Index(0) => Err(FragmentError::Bounds(format!(
                    "{what} index must be at least 1"
                ))),
                RangeEnd::Index(e) if e < start => Err(FragmentError::Bounds(format!(
                    "{what} range {start}-{e} is inverted"
                ))),
                _ => Ok(()),
            }
        }
        match *self {
            Selector::Rows { start, end } => check(start, end, "row"),
            Selector::Cols { start, end } => check(start, end, "column"),
            Selector::Lines { start, end } => check(start, end, "line"),
            Selector::Cells {
                start_row,
                start_col,
                end_row,
                end_col,
            } => {
                check(start_row, end_row, "row")?;
                check(start_col, end_col, "column")
            }
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn range(f: &mut fmt::Formatter<'_>, key: &str, start: usize, end: RangeEnd) -> fmt::Result {
            if end == RangeEnd::Index(start) {
                write!(f, "{key}={start}")
            } else {
                write!(f, "{key}={start}-{end}")
            }
        }
        match *self {
            Selector::Rows { start, end } => range(f, "row", start, end),
            Selector::Cols { start, end } => range(f, "col", start, end),
            Selector::Lines { start, end } => range(f, "line", start, end),
            Selector::Cells {
                start_row,
                start_col,
                end_row,
                end_col,
            } => {
                if end_row == RangeEnd::Index(start_row) && end_col == RangeEnd::Index(start_col) {
                    write!(f, "cell={start_row},{start_col}")
                } else {
                    write!(f, "cell={start_row},{start_col}-{end_row},{end_col}")
                }
            }
        }
    }
}

impl FromStr for Selector {
    type Err = FragmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fragment(s)
    }
}

/// Canonical fragment text for `sel`, without the leading `#`.
pub fn serialize(sel: &Selector) -> String {
    sel.to_string()
}

/// Parses a fragment (without the leading `#`) into a selector.
pub fn parse_fragment(text: &str) -> Result<Selector, FragmentError> {
    let Some(eq) = text.find('=') else {
        return Err(FragmentError::syntax(0, "expected '<keyword>='"));
    };
    let keyword = &text[..eq];
    let mut cursor = Cursor {
        text,
        pos: eq + 1,
    };
    let selector = match keyword {
        "row" | "col" | "line" => {
            let start = cursor.start_bound()?;
            let end = if cursor.eat('-') {
                cursor.end_bound()?
            } else {
                RangeEnd::Index(start)
            };
            match keyword {
                "row" => Selector::Rows { start, end },
                "col" => Selector::Cols { start, end },
                _ => Selector::Lines { start, end },
            }
        }
        "cell" => {
            let start_row = cursor.start_bound()?;
            cursor.expect(',')?;
            let start_col = cursor.start_bound()?;
            let (end_row, end_col) = if cursor.eat('-') {
                let end_row = cursor.end_bound()?;
                cursor.expect(',')?;
                (end_row, cursor.end_bound()?)
            } else {
                (RangeEnd::Index(start_row), RangeEnd::Index(start_col))
            };
            Selector::Cells {
                start_row,
                start_col,
                end_row,
                end_col,
            }
        }
        _ => {
            return Err(FragmentError::syntax(
                0,
                format!("unknown selector keyword {keyword:?}"),
            ))
        }
    };
    if cursor.pos != text.len() {
        let rest = &text[cursor.pos..];
        let message = if rest.starts_with(';') {
            "multiple selections are not supported".to_string()
        } else {
            format!("unexpected trailing input {rest:?}")
        };
        return Err(FragmentError::syntax(cursor.pos, message));
    }
    selector.validate()?;
    Ok(selector)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), FragmentError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(FragmentError::syntax(self.pos, format!("expected {c:?}")))
        }
    }

    fn start_bound(&mut self) -> Result<usize, FragmentError> {
        if self.peek() == Some('*') {
            return Err(FragmentError::Bounds(
                "'*' may only appear as an end bound".into(),
            ));
        }
        self.int()
    }

    fn end_bound(&mut self) -> Result<RangeEnd, FragmentError> {
        if self.eat('*') {
            Ok(RangeEnd::Last)
        } else {
            self.int().map(RangeEnd::Index)
        }
    }

    fn int(&mut self) -> Result<usize, FragmentError> {
        let start = self.pos;
        let digits = self.text[start..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        if digits == 0 {
            return Err(FragmentError::syntax(start, "expected a decimal index"));
        }
        let lexeme = &self.text[start..start + digits];
        if lexeme == "0" {
            return Err(FragmentError::Bounds("indices start at 1".into()));
        }
        if lexeme.starts_with('0') {
            return Err(FragmentError::syntax(start, "leading zeros are not allowed"));
        }
        let value = lexeme
            .parse()
            .map_err(|_| FragmentError::syntax(start, "index is too large"))?;
        self.pos += digits;
        Ok(value)
    }
}

/// Decodes a spreadsheet-style label such as `H1` into `(row, col)`.
pub fn a1_to_cell(label: &str) -> Result<(usize, usize), FragmentError> {
    let letters = label
        .bytes()
        .take_while(u8::is_ascii_alphabetic)
        .count();
    if letters == 0 {
        return Err(FragmentError::syntax(0, "expected column letters"));
    }
    let digits = &label[letters..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FragmentError::syntax(letters, "expected row digits"));
    }
    if digits.starts_with('0') {
        return Err(FragmentError::syntax(letters, "row numbers start at 1"));
    }
    let mut col: usize = 0;
    for b in label[..letters].bytes() {
        let digit = usize::from(b.to_ascii_uppercase() - b'A') + 1;
        col = col
            .checked_mul(26)
            .and_then(|c| c.checked_add(digit))
            .ok_or_else(|| FragmentError::syntax(0, "column label is too long"))?;
    }
    let row = digits
        .parse()
        .map_err(|_| FragmentError::syntax(letters, "row number is too large"))?;
    Ok((row, col))
}

/// Spreadsheet column letters for a 1-based column index (`8` -> `H`).
pub fn column_letters(mut col: usize) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// A resource IRI optionally refined by a selector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeepLink {
    pub base_iri: String,
    pub selector: Option<Selector>,
}

impl DeepLink {
    pub fn new(base_iri: impl Into<String>, selector: Option<Selector>) -> Self {
        DeepLink {
            base_iri: base_iri.into(),
            selector,
        }
    }

    /// Splits `iri` at the first `#` and parses the fragment, if any.
    pub fn parse(iri: &str) -> Result<Self, FragmentError> {
        match iri.split_once('#') {
            Some((base, fragment)) => Ok(DeepLink::new(base, Some(parse_fragment(fragment)?))),
            None => Ok(DeepLink::new(iri, None)),
        }
    }

    pub fn with_selector(&self, selector: Selector) -> Self {
        DeepLink::new(self.base_iri.clone(), Some(selector))
    }
}

impl fmt::Display for DeepLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.selector {
            Some(sel) => write!(f, "{}#{}", self.base_iri, sel),
            None => f.write_str(&self.base_iri),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extent {
    Cells(CellBounds),
    Lines(LineSpan),
}

/// A deep link after lookup: the resource plus concrete, clamped bounds.
#[derive(Debug, Clone)]
pub struct ResolvedRegion {
    pub resource: Arc<Resource>,
    pub extent: Extent,
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("unknown resource {0}")]
    UnknownResource(String),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

pub fn resolve(link: &DeepLink, registry: &ResourceRegistry) -> Result<ResolvedRegion, ResolveError> {
    let resource = registry
        .get(&link.base_iri)
        .ok_or_else(|| ResolveError::UnknownResource(link.base_iri.clone()))?;
    let extent = match (&*resource, &link.selector) {
        (Resource::Table(table), None) => Extent::Cells(table.full_bounds()),
        (Resource::Table(table), Some(sel)) => Extent::Cells(table.bounds_for(sel)?),
        (Resource::Text(text), None) => Extent::Lines(text.full_span()),
        (Resource::Text(text), Some(sel)) => Extent::Lines(text.span_for(sel)?),
    };
    Ok(ResolvedRegion { resource, extent })
}
