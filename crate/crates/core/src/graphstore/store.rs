use std::collections::{HashMap, HashSet};
use std::fmt;

use super::term::Term;
use super::GraphError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<Term>, predicate: impl Into<Term>, object: impl Into<Term>) -> Result<Self, GraphError> {
        let triple = Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        };
        triple.validate()?;
        Ok(triple)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.subject.is_literal() {
            return Err(GraphError::MalformedTriple(format!(
                "literal {} cannot be a subject",
                self.subject
            )));
        }
        if self.predicate.as_iri().is_none() {
            return Err(GraphError::MalformedTriple(format!(
                "predicate {} must be an IRI",
                self.predicate
            )));
        }
        Ok(())
    }

    /// Sort key used for export: subject, predicate, object as serialized text.
    pub fn sort_key(&self) -> (String, String, String) {
        (
            self.subject.to_string(),
            self.predicate.to_string(),
            self.object.to_string(),
        )
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// Sorts triples into export order.
pub fn sort_triples(triples: &mut [Triple]) {
    triples.sort_by_cached_key(Triple::sort_key);
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Term(Term),
    Var(Variable),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(Variable::new(name))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => t.fmt(f),
            PatternTerm::Var(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: impl Into<PatternTerm>, predicate: impl Into<PatternTerm>, object: impl Into<PatternTerm>) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

pub(crate) type TermId = u32;
pub(crate) type IdTriple = [TermId; 3];

/// In-memory triple set with one hash index per position.
///
/// Terms are interned; ids stay valid for the lifetime of the store.
#[derive(Debug, Default, Clone)]
pub struct Store {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    triples: HashSet<IdTriple>,
    index: [HashMap<TermId, HashSet<IdTriple>>; 3],
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Adds `t`. Returns `false` when it was already present.
    pub fn insert(&mut self, t: &Triple) -> Result<bool, GraphError> {
        t.validate()?;
        let key = [
            self.intern(&t.subject),
            self.intern(&t.predicate),
            self.intern(&t.object),
        ];
        if !self.triples.insert(key) {
            return Ok(false);
        }
        for (pos, index) in self.index.iter_mut().enumerate() {
            index.entry(key[pos]).or_default().insert(key);
        }
        Ok(true)
    }

    /// Removes `t`. Returns whether it was present.
    pub fn remove(&mut self, t: &Triple) -> bool {
        let Some(key) = self.lookup(t) else {
            return false;
        };
        if !self.triples.remove(&key) {
            return false;
        }
        for (pos, index) in self.index.iter_mut().enumerate() {
            if let Some(set) = index.get_mut(&key[pos]) {
                set.remove(&key);
                if set.is_empty() {
                    index.remove(&key[pos]);
                }
            }
        }
        true
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.lookup(t).is_some_and(|key| self.triples.contains(&key))
    }

    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|key| self.resolve(key))
    }

    /// All triples in export order.
    pub fn sorted(&self) -> Vec<Triple> {
        let mut all: Vec<_> = self.iter().collect();
        sort_triples(&mut all);
        all
    }

    /// Triples unifying with `pattern`, each once. Repeated variables must bind equal terms.
    pub fn match_pattern<'a>(&'a self, pattern: &TriplePattern) -> Box<dyn Iterator<Item = Triple> + 'a> {
        let mut bound = [None; 3];
        for (pos, term) in pattern.positions().into_iter().enumerate() {
            if let PatternTerm::Term(t) = term {
                match self.id_of(t) {
                    Some(id) => bound[pos] = Some(id),
                    None => return Box::new(std::iter::empty()),
                }
            }
        }
        let vars = pattern.positions().map(PatternTerm::as_var);
        let mut same: Vec<(usize, usize)> = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                if vars[i].is_some() && vars[i] == vars[j] {
                    same.push((i, j));
                }
            }
        }
        Box::new(
            self.candidates(bound)
                .filter(move |key| same.iter().all(|&(i, j)| key[i] == key[j]))
                .map(|key| self.resolve(&key)),
        )
    }

    pub(crate) fn id_of(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub(crate) fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    /// Number of stored triples having `id` at `pos`.
    pub(crate) fn count_at(&self, pos: usize, id: TermId) -> usize {
        self.index[pos].get(&id).map_or(0, HashSet::len)
    }

    /// Triples consistent with the bound positions, via the most selective index.
    pub(crate) fn candidates(&self, bound: [Option<TermId>; 3]) -> Box<dyn Iterator<Item = IdTriple> + '_> {
        let best = (0..3)
            .filter_map(|pos| bound[pos].map(|id| (pos, id)))
            .min_by_key(|&(pos, id)| self.count_at(pos, id));
        let matches = move |key: &IdTriple| (0..3).all(|i| bound[i].is_none_or(|id| key[i] == id));
        match best {
            None => Box::new(self.triples.iter().copied()),
            Some((pos, id)) => match self.index[pos].get(&id) {
                None => Box::new(std::iter::empty()),
                Some(set) => Box::new(set.iter().copied().filter(matches)),
            },
        }
    }

    fn intern(&mut self, term: &Term) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId::try_from(self.terms.len()).expect("term dictionary overflow");
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }

    fn lookup(&self, t: &Triple) -> Option<IdTriple> {
        Some([
            self.id_of(&t.subject)?,
            self.id_of(&t.predicate)?,
            self.id_of(&t.object)?,
        ])
    }

    fn resolve(&self, key: &IdTriple) -> Triple {
        Triple {
            subject: self.term(key[0]).clone(),
            predicate: self.term(key[1]).clone(),
            object: self.term(key[2]).clone(),
        }
    }
}

impl PartialEq for Store {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|t| other.contains(&t))
    }
}

impl Eq for Store {}
