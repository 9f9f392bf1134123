//! HTML reports rendered from the graph through query-driven templates.
//!
//! Template syntax:
//!
//! - `{name}` interpolates a variable, HTML-escaped. `{name|filter}` and
//!   `{name|filter:arg}` transform it first (see [`Filter`]).
//! - `{{query: <BGP> | <body>}}` evaluates the query and renders `body` once
//!   per solution, with the query's variables in scope. An optional
//!   `{{else}}` inside the body separates what to render when there are no
//!   solutions.
//! - `{{query(order=-f, limit=10): ...}}` reorders solutions by a variable
//!   (natural order, `-` for descending) and truncates them.
//!
//! Variables of enclosing queries and the context variables `table`,
//! `tableName`, `rows` and `cols` are pre-bound inside every query.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::graphstore::{query_bgp_with, BgpQuery, BindingSet, Literal, QueryError, Store, Term, Variable};
use crate::resources::TableResource;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("placeholder {{{name}}} does not name a variable in scope")]
    UnknownVariable { name: String },
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Value transformations available in `{name|filter}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    /// The part of an IRI after `#`.
    Fragment,
    /// The part of an IRI after the last `#` or `/`; literals unchanged.
    Local,
    /// The N-Triples form of the term.
    NTriples,
    /// A bar of block characters, proportional to value / `arg`.
    Bar(String),
}

impl Filter {
    fn parse(text: &str, offset: usize) -> Result<Self, TemplateError> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let with_arg = |make: fn(String) -> Filter| match arg {
            Some(a) if is_identifier(a) => Ok(make(a.to_string())),
            _ => Err(TemplateError::Syntax {
                offset,
                message: format!("filter {name:?} needs a variable argument"),
            }),
        };
        match (name, arg) {
            ("fragment", None) => Ok(Filter::Fragment),
            ("local", None) => Ok(Filter::Local),
            ("ntriples", None) => Ok(Filter::NTriples),
            ("bar", _) => with_arg(Filter::Bar),
            _ => Err(TemplateError::Syntax {
                offset,
                message: format!("unknown filter {text:?}"),
            }),
        }
    }

    fn argument(&self) -> Option<&str> {
        match self {
            Filter::Bar(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::Fragment => f.write_str("fragment"),
            Filter::Local => f.write_str("local"),
            Filter::NTriples => f.write_str("ntriples"),
            Filter::Bar(a) => write!(f, "bar:{a}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryOptions {
    /// Variable name and whether the order is descending.
    pub order: Option<(String, bool)>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Text(String),
    Var { name: String, filter: Option<Filter> },
    Query {
        options: QueryOptions,
        query: String,
        body: Vec<Node>,
        otherwise: Vec<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportTemplate {
    pub name: String,
    pub nodes: Vec<Node>,
}

const CONTEXT_VARIABLES: &[&str] = &["table", "tableName", "rows", "cols"];
const BAR_WIDTH: f64 = 30.0;

impl ReportTemplate {
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, TemplateError> {
        let mut parser = TemplateParser { src: text, pos: 0 };
        let (nodes, end) = parser.nodes(false)?;
        debug_assert_eq!(end, End::Eof);
        Ok(ReportTemplate {
            name: name.into(),
            nodes,
        })
    }
}

impl fmt::Display for ReportTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_nodes(f, &self.nodes)
    }
}

fn write_nodes(f: &mut fmt::Formatter<'_>, nodes: &[Node]) -> fmt::Result {
    for node in nodes {
        match node {
            Node::Text(t) => f.write_str(t)?,
            Node::Var { name, filter: None } => write!(f, "{{{name}}}")?,
            Node::Var {
                name,
                filter: Some(filter),
            } => write!(f, "{{{name}|{filter}}}")?,
            Node::Query {
                options,
                query,
                body,
                otherwise,
            } => {
                f.write_str("{{query")?;
                let mut opts = Vec::new();
                if let Some((var, desc)) = &options.order {
                    opts.push(format!("order={}{var}", if *desc { "-" } else { "" }));
                }
                if let Some(limit) = options.limit {
                    opts.push(format!("limit={limit}"));
                }
                if !opts.is_empty() {
                    write!(f, "({})", opts.join(", "))?;
                }
                write!(f, ":{query}|")?;
                write_nodes(f, body)?;
                if !otherwise.is_empty() {
                    f.write_str("{{else}}")?;
                    write_nodes(f, otherwise)?;
                }
                f.write_str("}}")?;
            }
        }
    }
    Ok(())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, PartialEq, Eq)]
enum End {
    Eof,
    Close,
    Else,
}

struct TemplateParser<'a> {
    src: &'a str,
    pos: usize,
}

impl TemplateParser<'_> {
    fn error(&self, offset: usize, message: impl Into<String>) -> TemplateError {
        TemplateError::Syntax {
            offset,
            message: message.into(),
        }
    }

    fn nodes(&mut self, nested: bool) -> Result<(Vec<Node>, End), TemplateError> {
        let mut nodes = Vec::new();
        let mut text = String::new();
        let flush = |text: &mut String, nodes: &mut Vec<Node>| {
            if !text.is_empty() {
                nodes.push(Node::Text(std::mem::take(text)));
            }
        };
        loop {
            let rest = &self.src[self.pos..];
            if rest.is_empty() {
                if nested {
                    return Err(self.error(self.pos, "unterminated {{query}} placeholder"));
                }
                flush(&mut text, &mut nodes);
                return Ok((nodes, End::Eof));
            }
            if nested && rest.starts_with("}}") {
                self.pos += 2;
                flush(&mut text, &mut nodes);
                return Ok((nodes, End::Close));
            }
            if rest.starts_with("{{else}}") {
                if !nested {
                    return Err(self.error(self.pos, "{{else}} outside a query placeholder"));
                }
                self.pos += "{{else}}".len();
                flush(&mut text, &mut nodes);
                return Ok((nodes, End::Else));
            }
            if rest.starts_with("{{query") {
                flush(&mut text, &mut nodes);
                nodes.push(self.query()?);
                continue;
            }
            if rest.starts_with("{{") {
                return Err(self.error(self.pos, "unknown placeholder; expected {{query: ...}}"));
            }
            if let Some(var) = self.variable()? {
                flush(&mut text, &mut nodes);
                nodes.push(var);
                continue;
            }
            let c = rest.chars().next().expect("non-empty");
            text.push(c);
            self.pos += c.len_utf8();
        }
    }

    /// `{name}` or `{name|filter}`; `None` when the text here is not a placeholder.
    fn variable(&mut self) -> Result<Option<Node>, TemplateError> {
        let rest = &self.src[self.pos..];
        if !rest.starts_with('{') {
            return Ok(None);
        }
        let Some(close) = rest.find('}') else {
            return Ok(None);
        };
        let inner = &rest[1..close];
        let (name, filter) = match inner.split_once('|') {
            Some((n, f)) => (n, Some(f)),
            None => (inner, None),
        };
        if !is_identifier(name) {
            return Ok(None);
        }
        let filter = filter.map(|f| Filter::parse(f, self.pos)).transpose()?;
        self.pos += close + 1;
        Ok(Some(Node::Var {
            name: name.to_string(),
            filter,
        }))
    }

    fn query(&mut self) -> Result<Node, TemplateError> {
        let start = self.pos;
        self.pos += "{{query".len();
        let mut options = QueryOptions::default();
        if self.src[self.pos..].starts_with('(') {
            let close = self.src[self.pos..]
                .find(')')
                .ok_or_else(|| self.error(self.pos, "unterminated query options"))?;
            for option in self.src[self.pos + 1..self.pos + close].split(',') {
                let (key, value) = option
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| self.error(self.pos, format!("malformed option {option:?}")))?;
                match key.trim() {
                    "order" => {
                        let value = value.trim();
                        let (var, desc) = match value.strip_prefix('-') {
                            Some(v) => (v, true),
                            None => (value, false),
                        };
                        if !is_identifier(var) {
                            return Err(self.error(self.pos, format!("invalid order variable {var:?}")));
                        }
                        options.order = Some((var.to_string(), desc));
                    }
                    "limit" => {
                        options.limit = Some(
                            value
                                .trim()
                                .parse()
                                .map_err(|_| self.error(self.pos, format!("invalid limit {value:?}")))?,
                        );
                    }
                    other => return Err(self.error(self.pos, format!("unknown option {other:?}"))),
                }
            }
            self.pos += close + 1;
        }
        if !self.src[self.pos..].starts_with(':') {
            return Err(self.error(self.pos, "expected ':' after {{query"));
        }
        self.pos += 1;
        let query_start = self.pos;
        let mut in_string = false;
        let mut escaped = false;
        let bar = self.src[query_start..].char_indices().find(|&(_, c)| {
            if in_string {
                match (escaped, c) {
                    (true, _) => escaped = false,
                    (false, '\\') => escaped = true,
                    (false, '"') => in_string = false,
                    _ => {}
                }
                false
            } else {
                in_string = c == '"';
                c == '|'
            }
        });
        let Some((offset, _)) = bar else {
            return Err(self.error(start, "query placeholder has no '|' separating the body"));
        };
        let query = self.src[query_start..query_start + offset].to_string();
        self.pos = query_start + offset + 1;
        let (body, end) = self.nodes(true)?;
        let otherwise = if end == End::Else {
            match self.nodes(true)? {
                (nodes, End::Close) => nodes,
                _ => return Err(self.error(self.pos, "a query placeholder allows one {{else}}")),
            }
        } else {
            Vec::new()
        };
        Ok(Node::Query {
            options,
            query,
            body,
            otherwise,
        })
    }
}

pub fn default_template() -> ReportTemplate {
    ReportTemplate::parse("default", DEFAULT_TEMPLATE).expect("built-in template parses")
}

const DEFAULT_TEMPLATE: &str = r##"<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Data report: {tableName}</title>
<style>
body { font-family: system-ui, sans-serif; margin: 2em auto; max-width: 60em; color: #222; }
h1 { font-size: 1.6em; }
section.column { border-top: 1px solid #ccc; margin-top: 1.5em; }
table.stats { border-collapse: collapse; }
table.stats th, table.stats td { border: 1px solid #ddd; padding: 0.25em 0.6em; text-align: left; }
table.stats td { text-align: right; font-variant-numeric: tabular-nums; }
.bar { color: #3b6ea5; font-family: monospace; }
.empty { color: #777; font-style: italic; }
a { color: #0b5394; }
</style>
</head>
<body>
<h1>Data report: {tableName}</h1>
<section id="summary">
<h2>Resource</h2>
<p><code>{table}</code> has {rows} rows and {cols} columns.</p>
</section>
<section id="columns">
<h2>Columns</h2>
{{query(order=c): SELECT ?c ?total ?distinct ?empty ?blank WHERE { ?c du:inTable ?table . ?c du:totalCount ?total . ?c du:distinctCount ?distinct . ?c du:emptyCount ?empty . ?c du:blankCount ?blank }|
<section class="column" id="{c|fragment}">
<h3><a href="{c}" title="Deep link to {c|fragment} of {tableName}: {total} values, {distinct} distinct">{c|fragment}</a>{{query: SELECT ?label WHERE { ?c rdfs:label ?label }| <q>{label}</q>}}</h3>
<table class="stats">
<tr><th title="Number of data values in the column">Total</th><td>{total}</td></tr>
<tr><th title="Number of distinct raw values, including empty and blank ones">Distinct</th><td>{distinct}</td></tr>
<tr><th title="Number of zero-length values">Empty</th><td>{empty}</td></tr>
<tr><th title="Number of non-empty values consisting only of whitespace">Blank</th><td>{blank}</td></tr>
{{query: SELECT ?min ?avg ?sd ?max WHERE { ?c du:minLength ?min . ?c du:avgLength ?avg . ?c du:stdDevLength ?sd . ?c du:maxLength ?max }|<tr><th title="Shortest value length in code points">Min. length</th><td>{min}</td></tr>
<tr><th title="Mean value length in code points">Avg. length</th><td>{avg}</td></tr>
<tr><th title="Population standard deviation of value lengths">Std. dev. length</th><td>{sd}</td></tr>
<tr><th title="Longest value length in code points">Max. length</th><td>{max}</td></tr>
}}</table>
<h4>Most frequent values</h4>
{{query(order=-f, limit=10): SELECT ?v ?f WHERE { ?c du:histogramEntry ?e . ?e du:value ?v . ?e du:frequency ?f }|<div class="hist" title="{f} of {total} values"><span class="bar">{f|bar:total}</span> {f} &times; <q>{v|local}</q></div>
{{else}}<p class="empty">No values.</p>
}}</section>
{{else}}<p class="empty">No analyses recorded for this table.</p>
}}</section>
</body>
</html>
"##;

/// Renders `template` for `table` against the current store contents.
pub fn render_report(
    store: &Store,
    table: &TableResource,
    template: &ReportTemplate,
    vocab: &Vocabulary,
) -> Result<String, ReportError> {
    let prefixes = vocab.prefixes();
    let table_name = table
        .base_iri
        .rsplit('/')
        .next()
        .map(|s| percent_encoding::percent_decode_str(s).decode_utf8_lossy().into_owned())
        .unwrap_or_default();
    let context: BindingSet = [
        ("table", Term::iri(&table.base_iri).map_err(|e| QueryError::Parse {
            line: 1,
            column: 1,
            message: e.message,
        })?),
        ("tableName", Literal::string(table_name).into()),
        ("rows", Literal::integer(table.row_count()).into()),
        ("cols", Literal::integer(table.col_count()).into()),
    ]
    .into_iter()
    .map(|(name, term)| (Variable::new(name), term))
    .collect();

    let compiled = compile(&template.nodes, &prefixes, &mut CONTEXT_VARIABLES.iter().map(|s| s.to_string()).collect())?;
    let mut out = String::new();
    render_nodes(store, &compiled, &context, &mut out)?;
    Ok(out)
}

enum Compiled<'t> {
    Text(&'t str),
    Var(&'t str, Option<&'t Filter>),
    Query {
        options: &'t QueryOptions,
        query: BgpQuery,
        body: Vec<Compiled<'t>>,
        otherwise: Vec<Compiled<'t>>,
    },
}

/// Parses every query and checks each placeholder against the variables in scope.
fn compile<'t>(
    nodes: &'t [Node],
    prefixes: &crate::graphstore::PrefixMap,
    scope: &mut Vec<String>,
) -> Result<Vec<Compiled<'t>>, ReportError> {
    let check = |scope: &[String], name: &str| {
        if scope.iter().any(|s| s == name) {
            Ok(())
        } else {
            Err(TemplateError::UnknownVariable { name: name.to_string() })
        }
    };
    let mut out = Vec::with_capacity(nodes.len());
    for node in nodes {
        out.push(match node {
            Node::Text(t) => Compiled::Text(t),
            Node::Var { name, filter } => {
                check(scope, name)?;
                if let Some(arg) = filter.as_ref().and_then(Filter::argument) {
                    check(scope, arg)?;
                }
                Compiled::Var(name, filter.as_ref())
            }
            Node::Query {
                options,
                query,
                body,
                otherwise,
            } => {
                let parsed = BgpQuery::parse(query, prefixes)?;
                let outer = scope.len();
                let otherwise = compile(otherwise, prefixes, scope)?;
                scope.extend(parsed.select.iter().map(|v| v.name().to_string()));
                if let Some((var, _)) = &options.order {
                    check(scope, var)?;
                }
                let body = compile(body, prefixes, scope)?;
                scope.truncate(outer);
                Compiled::Query {
                    options,
                    query: parsed,
                    body,
                    otherwise,
                }
            }
        });
    }
    Ok(out)
}

fn render_nodes(store: &Store, nodes: &[Compiled<'_>], scope: &BindingSet, out: &mut String) -> Result<(), ReportError> {
    for node in nodes {
        match node {
            Compiled::Text(t) => out.push_str(t),
            Compiled::Var(name, filter) => {
                let term = scope.get(name).expect("checked at compile time");
                escape_into(out, &apply_filter(term, *filter, scope));
            }
            Compiled::Query {
                options,
                query,
                body,
                otherwise,
            } => {
                let mut rows = query_bgp_with(store, query, scope)?;
                if let Some((var, desc)) = &options.order {
                    rows.sort_by(|a, b| {
                        let ord = natural_cmp(&a.get(var).map(Term::value).unwrap_or_default(), &b.get(var).map(Term::value).unwrap_or_default());
                        if *desc {
                            ord.reverse()
                        } else {
                            ord
                        }
                    });
                }
                if let Some(limit) = options.limit {
                    rows.truncate(limit);
                }
                if rows.is_empty() {
                    render_nodes(store, otherwise, scope, out)?;
                }
                for row in rows {
                    let mut inner = scope.clone();
                    for (var, term) in row.iter() {
                        inner.insert(var.clone(), term.clone());
                    }
                    render_nodes(store, body, &inner, out)?;
                }
            }
        }
    }
    Ok(())
}

fn apply_filter(term: &Term, filter: Option<&Filter>, scope: &BindingSet) -> String {
    let numeric = |t: &Term| t.value().parse::<f64>().ok();
    let ratio = |arg: &str| {
        let value = numeric(term)?;
        let whole = numeric(scope.get(arg)?)?;
        (whole > 0.0).then(|| value / whole)
    };
    match filter {
        None => term.value(),
        Some(Filter::NTriples) => term.to_string(),
        Some(Filter::Fragment) => {
            let value = term.value();
            match value.split_once('#') {
                Some((_, fragment)) if term.as_iri().is_some() => fragment.to_string(),
                _ => value,
            }
        }
        Some(Filter::Local) => match term {
            Term::Iri(iri) => iri
                .as_str()
                .rsplit(['#', '/'])
                .next()
                .unwrap_or_default()
                .to_string(),
            other => other.value(),
        },
        Some(Filter::Bar(arg)) => {
            let width = ratio(arg).map_or(0, |r| {
                let w = (r * BAR_WIDTH).round() as usize;
                if r > 0.0 {
                    w.max(1)
                } else {
                    0
                }
            });
            "\u{2588}".repeat(width)
        }
    }
}

fn escape_into(out: &mut String, text: &str) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
}

/// Compares digit runs numerically and everything else by character.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a.chars().next(), b.chars().next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.len() - a.trim_start_matches(|c: char| c.is_ascii_digit()).len();
                let db = b.len() - b.trim_start_matches(|c: char| c.is_ascii_digit()).len();
                let na = a[..da].trim_start_matches('0');
                let nb = b[..db].trim_start_matches('0');
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(&y);
                }
                a = &a[x.len_utf8()..];
                b = &b[y.len_utf8()..];
            }
        }
    }
}

/// Every `href` target in `html` that contains a `#`.
pub fn deep_link_anchors(html: &str) -> HashSet<String> {
    html.split("href=\"")
        .skip(1)
        .filter_map(|rest| rest.split('"').next())
        .map(|href| href.replace("&amp;", "&"))
        .filter(|href| href.contains('#'))
        .collect()
}
