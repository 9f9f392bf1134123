//! N-Triples persistence. Export is sorted so equal stores produce equal bytes.

use thiserror::Error;

use super::store::{Store, Triple};
use super::term::Scanner;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn export_ntriples(store: &Store) -> Vec<u8> {
    let mut out = String::new();
    for triple in store.sorted() {
        out.push_str(&triple.to_string());
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses every statement in `input`. Blank lines and `#` comments are skipped.
pub fn parse_ntriples(input: &[u8]) -> Result<Vec<Triple>, ParseError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let valid = &input[..e.valid_up_to()];
        let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = valid.len() - valid.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1) + 1;
        ParseError {
            line,
            column,
            message: "invalid UTF-8".into(),
        }
    })?;
    let mut triples = Vec::new();
    for (index, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Some(triple) = parse_line(line).map_err(|(offset, message)| ParseError {
            line: index + 1,
            column: line[..offset.min(line.len())].chars().count() + 1,
            message,
        })? {
            triples.push(triple);
        }
    }
    Ok(triples)
}

/// Parses one N-Triples line. `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str) -> Result<Option<Triple>, (usize, String)> {
    let mut s = Scanner::new(line);
    s.skip_ws();
    if s.at_end() || s.peek() == Some('#') {
        return Ok(None);
    }
    let next_term = |s: &mut Scanner<'_>| {
        let term = s.term().map_err(|e| (e.offset, e.message))?;
        s.skip_ws();
        Ok::<_, (usize, String)>(term)
    };
    let subject = next_term(&mut s)?;
    let predicate = next_term(&mut s)?;
    let object = next_term(&mut s)?;
    if !s.eat('.') {
        return Err((s.pos, "expected '.' at end of statement".into()));
    }
    s.skip_ws();
    if !(s.at_end() || s.peek() == Some('#')) {
        return Err((s.pos, "unexpected input after '.'".into()));
    }
    let triple = Triple {
        subject,
        predicate,
        object,
    };
    triple.validate().map_err(|e| (0, e.to_string()))?;
    Ok(Some(triple))
}

/// Adds every triple in `input` to `store`; nothing is added if any line fails.
/// Returns the number of triples that were not already present.
pub fn import_ntriples(store: &mut Store, input: &[u8]) -> Result<usize, ParseError> {
    let triples = parse_ntriples(input)?;
    let mut added = 0;
    for t in &triples {
        if store.insert(t).expect("validated while parsing") {
            added += 1;
        }
    }
    Ok(added)
}
