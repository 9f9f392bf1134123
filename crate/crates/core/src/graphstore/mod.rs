//! Embedded RDF triple store with basic graph pattern queries and N-Triples I/O.

mod ntriples;
mod query;
mod store;
pub mod term;

use thiserror::Error;

pub use ntriples::{export_ntriples, import_ntriples, parse_line, parse_ntriples, ParseError};
pub use query::{query_bgp, query_bgp_with, BgpQuery, BindingSet, PrefixMap, QueryError};
pub use store::{sort_triples, PatternTerm, Store, Triple, TriplePattern, Variable};
pub use term::{ns, BlankNode, Iri, Literal, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("malformed triple: {0}")]
    MalformedTriple(String),
}
