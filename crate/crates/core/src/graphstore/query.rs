//! Basic graph pattern queries.
//!
//! ```text
//! query   = prefix* "SELECT" ["DISTINCT"] (var+ / "*") ["WHERE"] "{" [pattern ("." [pattern])*] "}"
//! prefix  = "PREFIX" name ":" <iri>
//! pattern = term term term
//! term    = ?var / $var / <iri> / prefix:local / "literal"[^^type / @lang] / _:label / a / integer / decimal / true / false
//! ```
//!
//! Blank nodes in patterns are constants. Solutions are distinct and sorted by
//! the N-Triples text of the selected terms, in selection order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::store::{PatternTerm, Store, TermId, TriplePattern, Variable};
use super::term::{ns, Iri, Literal, Scanner, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("selected variable {0} is not bound by any pattern")]
    UnboundSelectedVariable(String),
}

/// Prefix declarations available to queries without an explicit `PREFIX`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixMap(BTreeMap<String, String>);

impl PrefixMap {
    pub fn new() -> Self {
        PrefixMap::default()
    }

    /// `rdf`, `rdfs`, `xsd`, `owl`, `dbr`, plus `du` bound to `vocab_ns`.
    pub fn standard(vocab_ns: &str) -> Self {
        let mut map = PrefixMap::new();
        map.insert("du", vocab_ns);
        map.insert("rdf", ns::RDF);
        map.insert("rdfs", ns::RDFS);
        map.insert("xsd", ns::XSD);
        map.insert("owl", ns::OWL);
        map.insert("dbr", ns::DBPEDIA);
        map
    }

    pub fn insert(&mut self, prefix: &str, namespace: &str) {
        self.0.insert(prefix.to_string(), namespace.to_string());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.0.get(prefix).map(String::as_str)
    }

    /// Shortest prefixed form of `iri`, if a namespace matches.
    pub fn compact(&self, iri: &str) -> Option<String> {
        self.0
            .iter()
            .filter(|(_, namespace)| iri.starts_with(namespace.as_str()))
            .map(|(prefix, namespace)| (prefix, &iri[namespace.len()..]))
            .filter(|(_, local)| is_local_name(local))
            .min_by_key(|(_, local)| local.len())
            .map(|(prefix, local)| format!("{prefix}:{local}"))
    }
}

fn is_local_name(local: &str) -> bool {
    !local.is_empty()
        && !local.ends_with('.')
        && local
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpQuery {
    pub select: Vec<Variable>,
    pub patterns: Vec<TriplePattern>,
}

impl BgpQuery {
    pub fn parse(text: &str, prefixes: &PrefixMap) -> Result<Self, QueryError> {
        let mut parser = Parser {
            s: Scanner::new(text),
            prefixes: prefixes.clone(),
        };
        parser.query().map_err(|e| {
            let before = &text[..e.offset.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
            QueryError::Parse {
                line,
                column,
                message: e.message,
            }
        })
    }

    /// Variables in order of first appearance.
    pub fn pattern_variables(&self) -> Vec<Variable> {
        let mut seen = HashSet::new();
        self.patterns
            .iter()
            .flat_map(TriplePattern::variables)
            .filter(|v| seen.insert(*v))
            .cloned()
            .collect()
    }

    /// Every selected variable must occur in some pattern.
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.patterns.is_empty() {
            let name = self.select.first().map_or("*".to_string(), ToString::to_string);
            return Err(QueryError::UnboundSelectedVariable(name));
        }
        let bound: HashSet<&Variable> = self.patterns.iter().flat_map(TriplePattern::variables).collect();
        match self.select.iter().find(|v| !bound.contains(v)) {
            Some(v) => Err(QueryError::UnboundSelectedVariable(v.to_string())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for BgpQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT")?;
        if self.select.is_empty() {
            f.write_str(" *")?;
        }
        for v in &self.select {
            write!(f, " {v}")?;
        }
        f.write_str(" WHERE {")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(" .")?;
            }
            write!(f, " {p}")?;
        }
        f.write_str(" }")
    }
}

struct Parser<'a> {
    s: Scanner<'a>,
    prefixes: PrefixMap,
}

impl Parser<'_> {
    fn ws(&mut self) {
        loop {
            match self.s.peek() {
                Some(c) if c.is_whitespace() => {
                    self.s.bump();
                }
                Some('#') => {
                    while self.s.peek().is_some_and(|c| c != '\n') {
                        self.s.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.ws();
        let rest = self.s.rest();
        let matches = rest.len() >= kw.len()
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && !rest[kw.len()..]
                .chars()
                .next()
                .is_some_and(|c| c.is_alphanumeric() || c == '_');
        if matches {
            self.s.pos += kw.len();
        }
        matches
    }

    fn name(&mut self) -> &str {
        let start = self.s.pos;
        while self
            .s
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            self.s.bump();
        }
        while self.s.src[start..self.s.pos].ends_with('.') {
            self.s.pos -= 1;
        }
        &self.s.src[start..self.s.pos]
    }

    fn query(&mut self) -> Result<BgpQuery, TermError> {
        while self.keyword("PREFIX") {
            self.ws();
            let prefix = self.name().to_string();
            if !self.s.eat(':') {
                return Err(self.s.error("expected ':' after prefix name"));
            }
            self.ws();
            let namespace = self.s.iri_ref()?;
            self.prefixes.insert(&prefix, namespace.as_str());
        }
        if !self.keyword("SELECT") {
            return Err(self.s.error("expected SELECT"));
        }
        self.keyword("DISTINCT");
        let mut select = Vec::new();
        let mut star = false;
        self.ws();
        if self.s.eat('*') {
            star = true;
        } else {
            while matches!(self.s.peek(), Some('?' | '$')) {
                select.push(self.variable()?);
                self.ws();
            }
            if select.is_empty() {
                return Err(self.s.error("expected '*' or at least one variable"));
            }
        }
        self.keyword("WHERE");
        self.ws();
        if !self.s.eat('{') {
            return Err(self.s.error("expected '{'"));
        }
        let mut patterns = Vec::new();
        loop {
            self.ws();
            if self.s.eat('}') {
                break;
            }
            if self.s.at_end() {
                return Err(self.s.error("expected '}'"));
            }
            let subject = self.pattern_term(false)?;
            let predicate = self.pattern_term(true)?;
            let object = self.pattern_term(false)?;
            patterns.push(TriplePattern {
                subject,
                predicate,
                object,
            });
            self.ws();
            if !self.s.eat('.') && self.s.peek() != Some('}') {
                return Err(self.s.error("expected '.' or '}' after a triple pattern"));
            }
        }
        self.ws();
        if !self.s.at_end() {
            return Err(self.s.error("unexpected input after query"));
        }
        let mut query = BgpQuery { select, patterns };
        if star {
            query.select = query.pattern_variables();
        }
        Ok(query)
    }

    fn variable(&mut self) -> Result<Variable, TermError> {
        self.s.bump();
        let start = self.s.pos;
        while self.s.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.s.bump();
        }
        if start == self.s.pos {
            return Err(self.s.error("expected a variable name"));
        }
        Ok(Variable::new(&self.s.src[start..self.s.pos]))
    }

    fn pattern_term(&mut self, predicate: bool) -> Result<PatternTerm, TermError> {
        self.ws();
        let term = match self.s.peek() {
            Some('?' | '$') => return self.variable().map(PatternTerm::Var),
            Some('<') => Term::Iri(self.s.iri_ref()?),
            Some('"') => {
                let prefixes = &self.prefixes;
                Term::Literal(self.s.literal(|s| iri_or_prefixed(s, prefixes))?)
            }
            Some('_') if self.s.rest().starts_with("_:") => Term::BlankNode(self.s.blank_node()?),
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' => Term::Literal(self.number()?),
            Some(c) if c.is_alphabetic() => {
                if predicate && self.keyword("a") {
                    Term::iri(ns::RDF_TYPE).expect("valid")
                } else if let Some(lexical) = ["true", "false"].into_iter().find(|kw| self.keyword(kw)) {
                    Term::Literal(Literal::typed(lexical, Iri::new(ns::XSD_BOOLEAN).expect("valid"))?)
                } else {
                    Term::Iri(iri_or_prefixed(&mut self.s, &self.prefixes)?)
                }
            }
            Some(c) => return Err(self.s.error(format!("unexpected character {c:?}"))),
            None => return Err(self.s.error("unexpected end of query")),
        };
        Ok(PatternTerm::Term(term))
    }

    fn number(&mut self) -> Result<Literal, TermError> {
        let start = self.s.pos;
        if matches!(self.s.peek(), Some('-' | '+')) {
            self.s.bump();
        }
        let digits = |s: &mut Scanner<'_>| {
            let from = s.pos;
            while s.peek().is_some_and(|c| c.is_ascii_digit()) {
                s.bump();
            }
            s.pos - from
        };
        let int_digits = digits(&mut self.s);
        let mut datatype = ns::XSD_INTEGER;
        if self.s.peek() == Some('.') && self.s.rest()[1..].starts_with(|c: char| c.is_ascii_digit()) {
            self.s.bump();
            digits(&mut self.s);
            datatype = ns::XSD_DECIMAL;
        }
        if int_digits == 0 && datatype == ns::XSD_INTEGER {
            return Err(TermError::new(start, "expected a number"));
        }
        Literal::typed(&self.s.src[start..self.s.pos], Iri::new(datatype).expect("valid"))
    }
}

fn iri_or_prefixed(s: &mut Scanner<'_>, prefixes: &PrefixMap) -> Result<Iri, TermError> {
    if s.peek() == Some('<') {
        return s.iri_ref();
    }
    let start = s.pos;
    while s.peek().is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-')) {
        s.bump();
    }
    let prefix = &s.src[start..s.pos];
    if !s.eat(':') {
        return Err(TermError::new(start, "expected an IRI or prefixed name"));
    }
    let namespace = prefixes
        .get(prefix)
        .ok_or_else(|| TermError::new(start, format!("unknown prefix {prefix:?}")))?;
    let local_start = s.pos;
    while s
        .peek()
        .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
    {
        s.bump();
    }
    while s.src[local_start..s.pos].ends_with('.') {
        s.pos -= 1;
    }
    Iri::new(format!("{namespace}{}", &s.src[local_start..s.pos])).map_err(|e| TermError::new(start, e.message))
}

/// One solution: selected variables and the terms bound to them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BindingSet(Vec<(Variable, Term)>);

impl BindingSet {
    pub fn new() -> Self {
        BindingSet::default()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.0.iter().find(|(v, _)| v.name() == name).map(|(_, t)| t)
    }

    /// Adds or replaces a binding.
    pub fn insert(&mut self, var: Variable, term: Term) {
        match self.0.iter_mut().find(|(v, _)| *v == var) {
            Some(slot) => slot.1 = term,
            None => self.0.push((var, term)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter().map(|(v, t)| (v, t))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(Variable, Term)> for BindingSet {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        let mut set = BindingSet::new();
        for (v, t) in iter {
            set.insert(v, t);
        }
        set
    }
}

pub fn query_bgp(store: &Store, query: &BgpQuery) -> Result<Vec<BindingSet>, QueryError> {
    query_bgp_with(store, query, &BindingSet::new())
}

/// Like [`query_bgp`], with some variables fixed before evaluation.
pub fn query_bgp_with(store: &Store, query: &BgpQuery, initial: &BindingSet) -> Result<Vec<BindingSet>, QueryError> {
    query.validate()?;
    let vars = query.pattern_variables();
    let slot_of: HashMap<&Variable, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();

    let mut seed = vec![None; vars.len()];
    for (var, term) in initial.iter() {
        if let Some(&slot) = slot_of.get(var) {
            match store.id_of(term) {
                Some(id) => seed[slot] = Some(id),
                None => return Ok(Vec::new()),
            }
        }
    }

    let mut compiled = Vec::with_capacity(query.patterns.len());
    for pattern in &query.patterns {
        let mut slots = [Slot::Const(0); 3];
        for (pos, term) in pattern.positions().into_iter().enumerate() {
            slots[pos] = match term {
                PatternTerm::Var(v) => Slot::Var(slot_of[v]),
                PatternTerm::Term(t) => match store.id_of(t) {
                    Some(id) => Slot::Const(id),
                    None => return Ok(Vec::new()),
                },
            };
        }
        compiled.push(slots);
    }
    let order = join_order(store, &compiled, &seed);
    let plan: Vec<[Slot; 3]> = order.into_iter().map(|i| compiled[i]).collect();

    let projection: Vec<usize> = query.select.iter().map(|v| slot_of[v]).collect();
    let mut rows: HashSet<Vec<TermId>> = HashSet::new();
    let mut bindings = seed;
    search(store, &plan, &mut bindings, &mut |b| {
        rows.insert(projection.iter().map(|&slot| b[slot].expect("bound")).collect());
    });

    let mut solutions: Vec<(Vec<String>, BindingSet)> = rows
        .into_iter()
        .map(|row| {
            let terms: Vec<&Term> = row.iter().map(|&id| store.term(id)).collect();
            let key = terms.iter().map(ToString::to_string).collect();
            let set = query.select.iter().cloned().zip(terms.into_iter().cloned()).collect();
            (key, set)
        })
        .collect();
    solutions.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(solutions.into_iter().map(|(_, set)| set).collect())
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Const(TermId),
    Var(usize),
}

/// Greedy order: next is the pattern with the most bound positions, then the
/// smallest index bucket among its constants.
fn join_order(store: &Store, patterns: &[[Slot; 3]], seed: &[Option<TermId>]) -> Vec<usize> {
    let mut bound: Vec<bool> = seed.iter().map(Option::is_some).collect();
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score = |i: usize| {
            let mut bound_positions = 0;
            let mut estimate = usize::MAX;
            for (pos, slot) in patterns[i].iter().enumerate() {
                match *slot {
                    Slot::Const(id) => {
                        bound_positions += 1;
                        estimate = estimate.min(store.count_at(pos, id));
                    }
                    Slot::Var(v) if bound[v] => bound_positions += 1,
                    Slot::Var(_) => {}
                }
            }
            (std::cmp::Reverse(bound_positions), estimate, i)
        };
        let (at, &next) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| score(i))
            .expect("non-empty");
        remaining.remove(at);
        for slot in &patterns[next] {
            if let Slot::Var(v) = *slot {
                bound[v] = true;
            }
        }
        order.push(next);
    }
    order
}

fn search(store: &Store, plan: &[[Slot; 3]], bindings: &mut Vec<Option<TermId>>, emit: &mut dyn FnMut(&[Option<TermId>])) {
    let Some((pattern, rest)) = plan.split_first() else {
        emit(bindings);
        return;
    };
    let resolved = pattern.map(|slot| match slot {
        Slot::Const(id) => Some(id),
        Slot::Var(v) => bindings[v],
    });
    for key in store.candidates(resolved) {
        let mut newly_bound = Vec::new();
        let mut consistent = true;
        for (pos, slot) in pattern.iter().enumerate() {
            if let Slot::Var(v) = *slot {
                match bindings[v] {
                    Some(id) if id != key[pos] => {
                        consistent = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        bindings[v] = Some(key[pos]);
                        newly_bound.push(v);
                    }
                }
            }
        }
        if consistent {
            search(store, rest, bindings, emit);
        }
        for v in newly_bound {
            bindings[v] = None;
        }
    }
}
