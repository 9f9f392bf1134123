//! The catalog: a resource registry plus a persisted triple store.
//!
//! Both the HTTP server and the command-line tool go through this type, so
//! the same inputs yield the same graph regardless of the entry point.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard};

use datacat_core::deeplink::FragmentError;
use datacat_core::graphstore::{
    export_ntriples, parse_ntriples, query_bgp, BgpQuery, BindingSet, GraphError, ParseError, QueryError, Store,
    Term, TermError, Triple, Variable,
};
use datacat_core::profiler::{profile_table, profile_to_triples, ProfilerConfig};
use datacat_core::reportgen::{default_template, render_report, ReportError};
use datacat_core::resources::{CsvConfig, Resource, ResourceError, ResourceRegistry};
use datacat_core::vocab::Vocabulary;
use percent_encoding::percent_decode_str;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct CatalogConfig {
    pub root: PathBuf,
    pub origin: String,
    /// `None` keeps the graph in memory only.
    pub graph: Option<PathBuf>,
    pub csv: CsvConfig,
    pub profiler: ProfilerConfig,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown resource {0}")]
    UnknownResource(String),
    #[error("{0} is not a table resource")]
    NotATable(String),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error("invalid term: {0}")]
    Term(#[from] TermError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("N-Triples parse error at {0}")]
    Import(#[from] ParseError),
    #[error("graph file {}: {source}", path.display())]
    GraphFile { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Report(ReportError),
    #[error("cannot persist graph to {}: {source}", path.display())]
    Persistence { path: PathBuf, source: io::Error },
    #[error("missing parameter {0:?}")]
    MissingParameter(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed request: {0}")]
    MalformedRequest(String),
}

impl From<ReportError> for CatalogError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Query(q) => CatalogError::Query(q),
            other => CatalogError::Report(other),
        }
    }
}

/// Machine-readable error code and HTTP status for a catalog error.
impl CatalogError {
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::UnknownResource(_) => "UnknownResource",
            CatalogError::NotATable(_) => "ResourceKindMismatch",
            CatalogError::Fragment(FragmentError::Syntax { .. }) => "SyntaxError",
            CatalogError::Fragment(FragmentError::Bounds(_)) => "BoundsError",
            CatalogError::Resource(ResourceError::OutOfBounds { .. }) => "BoundsError",
            CatalogError::Resource(ResourceError::SelectorKindMismatch { .. }) => "SelectorKindMismatch",
            CatalogError::Resource(ResourceError::FileNotFound(_)) => "FileNotFound",
            CatalogError::Resource(ResourceError::OutsideRoot(_)) => "OutsideRoot",
            CatalogError::Resource(_) => "ResourceError",
            CatalogError::Term(_) | CatalogError::Import(_) => "ParseError",
            CatalogError::Query(QueryError::Parse { .. }) => "ParseError",
            CatalogError::Query(QueryError::UnboundSelectedVariable(_)) => "UnboundSelectedVariable",
            CatalogError::Graph(GraphError::MalformedTriple(_)) => "MalformedTriple",
            CatalogError::GraphFile { .. } => "GraphFileError",
            CatalogError::Report(_) => "TemplateError",
            CatalogError::Persistence { .. } => "PersistenceError",
            CatalogError::MissingParameter(_) => "MissingParameter",
            CatalogError::InvalidParameter(_) => "InvalidParameter",
            CatalogError::MalformedRequest(_) => "MalformedRequest",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self.code() {
            "UnknownResource" | "FileNotFound" => 404,
            "ResourceError" => 422,
            "GraphFileError" | "TemplateError" | "PersistenceError" => 500,
            _ => 400,
        }
    }

    /// Errors caused by malformed user input rather than by data.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            CatalogError::Query(_)
                | CatalogError::Fragment(_)
                | CatalogError::Term(_)
                | CatalogError::Graph(_)
                | CatalogError::MissingParameter(_)
                | CatalogError::InvalidParameter(_)
                | CatalogError::MalformedRequest(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileSummary {
    pub columns: usize,
    pub triples_added: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub variables: Vec<Variable>,
    pub rows: Vec<BindingSet>,
}

pub struct Catalog {
    registry: ResourceRegistry,
    store: RwLock<Store>,
    graph: Option<PathBuf>,
    vocab: Vocabulary,
    profiler: ProfilerConfig,
}

impl Catalog {
    /// Opens the catalog and loads the graph file if it exists. Resources
    /// are registered lazily or through [`Catalog::scan`].
    pub fn open(config: CatalogConfig) -> Result<Self, CatalogError> {
        let registry = ResourceRegistry::new(&config.root, &config.origin, config.csv)?;
        let vocab = Vocabulary::for_origin(registry.origin());
        let mut store = Store::new();
        if let Some(path) = &config.graph {
            match fs::read(path) {
                Ok(bytes) => {
                    let triples = parse_ntriples(&bytes).map_err(|source| CatalogError::GraphFile {
                        path: path.clone(),
                        source,
                    })?;
                    for t in &triples {
                        store.insert(t)?;
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(source) => {
                    return Err(CatalogError::Persistence {
                        path: path.clone(),
                        source,
                    })
                }
            }
        }
        Ok(Catalog {
            registry,
            store: RwLock::new(store),
            graph: config.graph,
            vocab,
            profiler: config.profiler,
        })
    }

    pub fn registry(&self) -> &ResourceRegistry {
        &self.registry
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn graph_path(&self) -> Option<&Path> {
        self.graph.as_deref()
    }

    /// A consistent read snapshot of the store.
    pub fn store(&self) -> RwLockReadGuard<'_, Store> {
        self.store.read().expect("store lock poisoned")
    }

    pub fn scan(&self) -> Vec<(PathBuf, ResourceError)> {
        self.registry.scan()
    }

    /// Looks up a resource by base IRI, registering files under the root
    /// that were added after startup.
    pub fn resource(&self, base_iri: &str) -> Result<Arc<Resource>, CatalogError> {
        if let Some(r) = self.registry.get(base_iri) {
            return Ok(r);
        }
        let unknown = || CatalogError::UnknownResource(base_iri.to_string());
        let relative = base_iri
            .strip_prefix(self.registry.origin())
            .and_then(|rest| rest.strip_prefix("/res/"))
            .ok_or_else(unknown)?;
        let mut path = self.registry.root().to_path_buf();
        for segment in relative.split('/') {
            let segment = percent_decode_str(segment).decode_utf8().map_err(|_| unknown())?;
            if segment.is_empty() || segment == "." || segment == ".." || segment.contains(['/', '\\']) {
                return Err(unknown());
            }
            path.push(segment.as_ref());
        }
        if !path.is_file() {
            return Err(unknown());
        }
        let resource = self.registry.register_path(&path)?;
        // The IRI must be canonical, or the lookup would not be stable.
        if resource.base_iri() != base_iri {
            return Err(unknown());
        }
        Ok(resource)
    }

    pub fn register_path(&self, path: &Path) -> Result<Arc<Resource>, CatalogError> {
        Ok(self.registry.register_path(path)?)
    }

    /// Inserts triples and persists the graph once; returns how many were new.
    /// On a persistence failure the new triples are rolled back.
    pub fn insert_all(&self, triples: impl IntoIterator<Item = Triple>) -> Result<usize, CatalogError> {
        let triples: Vec<Triple> = triples.into_iter().collect();
        for t in &triples {
            t.validate()?;
        }
        let mut store = self.store.write().expect("store lock poisoned");
        let mut added = Vec::new();
        for t in triples {
            if store.insert(&t)? {
                added.push(t);
            }
        }
        if !added.is_empty() {
            if let Err(e) = self.persist(&store) {
                for t in &added {
                    store.remove(t);
                }
                return Err(e);
            }
        }
        Ok(added.len())
    }

    pub fn add_triple(&self, triple: Triple) -> Result<bool, CatalogError> {
        Ok(self.insert_all([triple])? == 1)
    }

    pub fn remove_triple(&self, triple: &Triple) -> Result<bool, CatalogError> {
        let mut store = self.store.write().expect("store lock poisoned");
        if !store.remove(triple) {
            return Ok(false);
        }
        if let Err(e) = self.persist(&store) {
            store.insert(triple).expect("previously stored triple is valid");
            return Err(e);
        }
        Ok(true)
    }

    /// Triples with the given subject, or all triples, in export order.
    pub fn triples(&self, subject: Option<&Term>) -> Vec<Triple> {
        let store = self.store();
        match subject {
            None => store.sorted(),
            Some(s) => {
                let mut found: Vec<Triple> = store.iter().filter(|t| &t.subject == s).collect();
                datacat_core::graphstore::sort_triples(&mut found);
                found
            }
        }
    }

    pub fn profile(&self, base_iri: &str) -> Result<ProfileSummary, CatalogError> {
        let resource = self.resource(base_iri)?;
        let table = resource
            .as_table()
            .ok_or_else(|| CatalogError::NotATable(base_iri.to_string()))?;
        let profiles = profile_table(table, &self.profiler);
        let triples: Vec<Triple> = profiles
            .iter()
            .flat_map(|p| profile_to_triples(p, &self.vocab))
            .collect();
        let triples_added = self.insert_all(triples)?;
        Ok(ProfileSummary {
            columns: profiles.len(),
            triples_added,
        })
    }

    pub fn parse_query(&self, text: &str) -> Result<BgpQuery, CatalogError> {
        Ok(BgpQuery::parse(text, &self.vocab.prefixes())?)
    }

    pub fn query(&self, text: &str) -> Result<QueryResult, CatalogError> {
        let query = self.parse_query(text)?;
        let rows = query_bgp(&self.store(), &query)?;
        Ok(QueryResult {
            variables: query.select,
            rows,
        })
    }

    pub fn report(&self, base_iri: &str) -> Result<String, CatalogError> {
        let resource = self.resource(base_iri)?;
        let table = resource
            .as_table()
            .ok_or_else(|| CatalogError::NotATable(base_iri.to_string()))?;
        Ok(render_report(&self.store(), table, &default_template(), &self.vocab)?)
    }

    /// Imports N-Triples atomically; returns how many triples were new.
    pub fn import(&self, bytes: &[u8]) -> Result<usize, CatalogError> {
        let triples = parse_ntriples(bytes)?;
        self.insert_all(triples)
    }

    pub fn export(&self) -> Vec<u8> {
        export_ntriples(&self.store())
    }

    /// Writes the graph to a sibling temporary file and renames it into place.
    fn persist(&self, store: &Store) -> Result<(), CatalogError> {
        let Some(path) = &self.graph else {
            return Ok(());
        };
        let failed = |source| CatalogError::Persistence {
            path: path.clone(),
            source,
        };
        write_atomically(path, &export_ntriples(store)).map_err(failed)
    }
}

pub fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)
}
