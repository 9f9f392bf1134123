//! RDF terms and their N-Triples text form.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

pub mod ns {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
    pub const DBPEDIA: &str = "http://dbpedia.org/resource/";

    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";
    pub const RDFS_SEE_ALSO: &str = "http://www.w3.org/2000/01/rdf-schema#seeAlso";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (at offset {offset})")]
pub struct TermError {
    pub offset: usize,
    pub message: String,
}

impl TermError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        TermError {
            offset,
            message: message.into(),
        }
    }
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(String);

impl Iri {
    pub fn new(iri: impl Into<String>) -> Result<Self, TermError> {
        let iri = iri.into();
        if let Some((i, c)) = iri
            .char_indices()
            .find(|&(_, c)| c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
        {
            return Err(TermError::new(i, format!("character {c:?} is not allowed in an IRI")));
        }
        if !has_scheme(&iri) {
            return Err(TermError::new(0, format!("IRI {iri:?} is not absolute")));
        }
        Ok(Iri(iri))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

fn has_scheme(iri: &str) -> bool {
    let Some((scheme, _)) = iri.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlankNode(String);

impl BlankNode {
    pub fn new(label: impl Into<String>) -> Result<Self, TermError> {
        let label = label.into();
        let valid = label
            .chars()
            .next()
            .is_some_and(|c| c.is_alphanumeric() || c == '_')
            && label
                .chars()
                .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
            && !label.ends_with('.');
        if valid {
            Ok(BlankNode(label))
        } else {
            Err(TermError::new(0, format!("invalid blank node label {label:?}")))
        }
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Iri(ns::XSD_STRING.to_string()),
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Result<Self, TermError> {
        if datatype.as_str() == ns::RDF_LANG_STRING {
            return Err(TermError::new(0, "language-tagged strings need a language tag"));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype,
            language: None,
        })
    }

    pub fn lang(lexical: impl Into<String>, tag: &str) -> Result<Self, TermError> {
        let valid = !tag.is_empty()
            && tag.split('-').enumerate().all(|(i, part)| {
                (1..=8).contains(&part.len())
                    && if i == 0 {
                        part.chars().all(|c| c.is_ascii_alphabetic())
                    } else {
                        part.chars().all(|c| c.is_ascii_alphanumeric())
                    }
            });
        if !valid {
            return Err(TermError::new(0, format!("invalid language tag {tag:?}")));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype: Iri(ns::RDF_LANG_STRING.to_string()),
            language: Some(tag.to_ascii_lowercase()),
        })
    }

    pub fn integer(value: impl fmt::Display) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Iri(ns::XSD_INTEGER.to_string()),
            language: None,
        }
    }

    /// `xsd:decimal` with exactly six fractional digits.
    pub fn decimal6(value: f64) -> Self {
        Literal {
            lexical: format!("{value:.6}"),
            datatype: Iri(ns::XSD_DECIMAL.to_string()),
            language: None,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('"')?;
        for c in self.lexical.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\r' => f.write_str("\\r")?,
                '\t' => f.write_str("\\t")?,
                '\u{8}' => f.write_str("\\b")?,
                '\u{c}' => f.write_str("\\f")?,
                c if c < ' ' || c == '\u{7f}' => write!(f, "\\u{:04X}", c as u32)?,
                c => f.write_char(c)?,
            }
        }
        f.write_char('"')?;
        match &self.language {
            Some(tag) => write!(f, "@{tag}"),
            None if self.datatype.as_str() == ns::XSD_STRING => Ok(()),
            None => write!(f, "^^{}", self.datatype),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
    BlankNode(BlankNode),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Self, TermError> {
        Iri::new(iri).map(Term::Iri)
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, TermError> {
        BlankNode::new(label).map(Term::BlankNode)
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// Plain display value: the IRI, the lexical form, or `_:label`.
    pub fn value(&self) -> String {
        match self {
            Term::Iri(iri) => iri.as_str().to_string(),
            Term::Literal(l) => l.lexical.clone(),
            Term::BlankNode(b) => b.to_string(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => iri.fmt(f),
            Term::Literal(l) => l.fmt(f),
            Term::BlankNode(b) => b.fmt(f),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

impl From<BlankNode> for Term {
    fn from(b: BlankNode) -> Self {
        Term::BlankNode(b)
    }
}

impl FromStr for Term {
    type Err = TermError;

    /// Parses exactly one term in N-Triples syntax, allowing surrounding whitespace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut scanner = Scanner::new(s);
        scanner.skip_ws();
        let term = scanner.term()?;
        scanner.skip_ws();
        if !scanner.at_end() {
            return Err(TermError::new(scanner.pos, "unexpected input after term"));
        }
        Ok(term)
    }
}

/// Character scanner shared by the N-Triples and query parsers.
pub(crate) struct Scanner<'a> {
    pub(crate) src: &'a str,
    pub(crate) pos: usize,
}

impl<'a> Scanner<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Scanner { src, pos: 0 }
    }

    pub(crate) fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_str(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> TermError {
        TermError::new(self.pos, message)
    }

    /// IRI, literal, or blank node.
    pub(crate) fn term(&mut self) -> Result<Term, TermError> {
        match self.peek() {
            Some('<') => self.iri_ref().map(Term::Iri),
            Some('"') => self.literal(|s| s.iri_ref()).map(Term::Literal),
            Some('_') => self.blank_node().map(Term::BlankNode),
            Some(c) => Err(self.error(format!("unexpected character {c:?}, expected a term"))),
            None => Err(self.error("unexpected end of input, expected a term")),
        }
    }

    pub(crate) fn iri_ref(&mut self) -> Result<Iri, TermError> {
        let start = self.pos;
        if !self.eat('<') {
            return Err(self.error("expected '<'"));
        }
        let mut iri = String::new();
        loop {
            match self.bump() {
                None => return Err(TermError::new(start, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => iri.push(self.unicode_escape()?),
                Some(c) => iri.push(c),
            }
        }
        Iri::new(iri).map_err(|e| TermError::new(start + e.offset, e.message))
    }

    /// A quoted literal; `datatype` parses whatever follows `^^`.
    pub(crate) fn literal(
        &mut self,
        datatype: impl FnOnce(&mut Self) -> Result<Iri, TermError>,
    ) -> Result<Literal, TermError> {
        let start = self.pos;
        if !self.eat('"') {
            return Err(self.error("expected '\"'"));
        }
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None | Some('\n') | Some('\r') => return Err(TermError::new(start, "unterminated string literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') | Some('U') => {
                            lexical.push(self.unicode_escape()?);
                            continue;
                        }
                        _ => return Err(self.error("invalid escape sequence")),
                    };
                    self.pos += 1;
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        if self.eat('@') {
            let tag_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                self.pos += 1;
            }
            let tag = &self.src[tag_start..self.pos];
            Literal::lang(lexical, tag).map_err(|e| TermError::new(tag_start, e.message))
        } else if self.eat_str("^^") {
            let dt_start = self.pos;
            let dt = datatype(self)?;
            Literal::typed(lexical, dt).map_err(|e| TermError::new(dt_start, e.message))
        } else {
            Ok(Literal::string(lexical))
        }
    }

    /// Decodes `uXXXX` / `UXXXXXXXX` after a consumed backslash.
    fn unicode_escape(&mut self) -> Result<char, TermError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape sequence")),
        };
        let hex = self
            .rest()
            .get(..width)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| self.error("invalid unicode escape"))?;
        let c = u32::from_str_radix(hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error("escape is not a unicode scalar value"))?;
        self.pos += width;
        Ok(c)
    }

    pub(crate) fn blank_node(&mut self) -> Result<BlankNode, TermError> {
        let start = self.pos;
        if !self.eat_str("_:") {
            return Err(self.error("expected '_:'"));
        }
        let label_start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            self.bump();
        }
        // A trailing '.' terminates the statement, not the label.
        while self.src[label_start..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        BlankNode::new(&self.src[label_start..self.pos]).map_err(|e| TermError::new(start, e.message))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Iri::new("http://dbpedia.org/resource/Car").is_ok());
        assert!(Iri::new("urn:x-a:b").is_ok());
        assert!(Iri::new("relative/path").is_err());
        assert!(Iri::new("http://a b").is_err());
        assert!(Iri::new("1http://x").is_err());
    }

    #[test]
    fn literal_forms() {
        assert_eq!(Literal::string("a\"b\n").to_string(), r#""a\"b\n""#);
        assert_eq!(
            Literal::integer(1).to_string(),
            "\"1\"^^<http://www.w3.org/2001/XMLSchema#integer>"
        );
        assert_eq!(Literal::lang("chat", "FR").unwrap().to_string(), "\"chat\"@fr");
        assert_eq!(Literal::decimal6(3.0).lexical(), "3.000000");
        assert!(Literal::typed("x", Iri::new(ns::RDF_LANG_STRING).unwrap()).is_err());
        assert!(Literal::lang("x", "").is_err());
        assert!(Literal::lang("x", "en-").is_err());
    }

    #[test]
    fn parse_terms() {
        let t: Term = "<http://x/a>".parse().unwrap();
        assert_eq!(t, Term::iri("http://x/a").unwrap());
        let l: Term = r#""1"^^<http://www.w3.org/2001/XMLSchema#integer>"#.parse().unwrap();
        assert_eq!(l, Term::Literal(Literal::integer(1)));
        let s: Term = r#""tab\there \u00e9""#.parse().unwrap();
        assert_eq!(s.value(), "tab\there é");
        let b: Term = " _:b0 ".parse().unwrap();
        assert_eq!(b, Term::blank("b0").unwrap());
        for bad in ["", "<rel>", "\"open", "x", "<http://x> extra", "\"a\"@", "_:", "\"\\q\""] {
            assert!(bad.parse::<Term>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn display_parse_round_trip() {
        let terms = [
            Term::Literal(Literal::string("ctrl\u{1}\u{7f}\\ \"q\"")),
            Term::Literal(Literal::lang("x", "en-GB").unwrap()),
            Term::Literal(Literal::decimal6(0.5)),
            Term::iri("http://localhost:8080/res/a%20b.csv#cell=1,8").unwrap(),
            Term::blank("h1.x-2").unwrap(),
        ];
        for t in terms {
            assert_eq!(t.to_string().parse::<Term>().unwrap(), t);
        }
    }
}
