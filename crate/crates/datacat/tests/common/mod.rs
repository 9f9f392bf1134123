#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use datacat::catalog::{Catalog, CatalogConfig};
use datacat::server::router;
use datacat_core::profiler::ProfilerConfig;
use datacat_core::resources::CsvConfig;
use http_body_util::BodyExt;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

pub const ORIGIN: &str = "http://localhost:8080";

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn res(name: &str) -> String {
    format!("{ORIGIN}/res/{name}")
}

pub fn enc(text: &str) -> String {
    percent_encoding::utf8_percent_encode(text, percent_encoding::NON_ALPHANUMERIC).to_string()
}

pub struct TestApp {
    pub dir: TempDir,
    pub catalog: Arc<Catalog>,
    pub router: Router,
}

impl TestApp {
    /// A catalog over a fresh root containing `files`, with the graph stored
    /// next to the root.
    pub fn new(files: &[(&str, &str)]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("data");
        std::fs::create_dir(&root).unwrap();
        for (name, content) in files {
            let path = root.join(name);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(path, content).unwrap();
        }
        let graph = dir.path().join("graph.nt");
        Self::open(dir, root, graph)
    }

    pub fn open(dir: TempDir, root: PathBuf, graph: PathBuf) -> Self {
        let catalog = Catalog::open(CatalogConfig {
            root,
            origin: ORIGIN.to_string(),
            graph: Some(graph),
            csv: CsvConfig::default(),
            profiler: ProfilerConfig::default(),
        })
        .unwrap();
        assert!(catalog.scan().is_empty());
        let catalog = Arc::new(catalog);
        TestApp {
            router: router(Arc::clone(&catalog)),
            catalog,
            dir,
        }
    }

    pub fn graph_path(&self) -> PathBuf {
        self.dir.path().join("graph.nt")
    }

    pub async fn call(&self, method: Method, uri: &str, body: &str) -> (StatusCode, Vec<u8>) {
        let request = Request::builder()
            .method(method)
            .uri(uri)
            .body(Body::from(body.to_string()))
            .unwrap();
        let response = self.router.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    pub async fn json(&self, method: Method, uri: &str, body: &str) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, body).await;
        let value = serde_json::from_slice(&bytes)
            .unwrap_or_else(|e| panic!("{uri}: body is not JSON ({e}): {}", String::from_utf8_lossy(&bytes)));
        (status, value)
    }

    pub async fn text(&self, method: Method, uri: &str, body: &str) -> (StatusCode, String) {
        let (status, bytes) = self.call(method, uri, body).await;
        (status, String::from_utf8(bytes).unwrap())
    }
}

/// The standard test catalog: the car table and a text document.
pub fn cars_app() -> TestApp {
    TestApp::new(&[("cars.csv", &fixture("cars.csv")), ("notes.md", &fixture("notes.md"))])
}

/// One documented error case of the HTTP API.
pub struct ErrorCase {
    pub name: &'static str,
    pub method: Method,
    pub uri: String,
    pub body: &'static str,
    pub status: u16,
    pub code: &'static str,
}

/// Every error case of the HTTP API against [`cars_app`].
pub fn error_cases() -> Vec<ErrorCase> {
    let table = enc(&res("cars.csv"));
    let text = enc(&res("notes.md"));
    let unknown = enc(&res("missing.csv"));
    let case = |name, method: Method, uri: String, body, status, code| ErrorCase {
        name,
        method,
        uri,
        body,
        status,
        code,
    };
    vec![
        case("view unknown resource", Method::GET, format!("/api/resource?iri={unknown}"), "", 404, "UnknownResource"),
        case("view foreign iri", Method::GET, format!("/api/resource?iri={}", enc("http://example.org/x.csv")), "", 404, "UnknownResource"),
        case("view without iri", Method::GET, "/api/resource".into(), "", 400, "MissingParameter"),
        case("view selector syntax", Method::GET, format!("/api/resource?iri={table}&sel=row%3Dx"), "", 400, "SyntaxError"),
        case("view selector list", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("row=1;row=2")), "", 400, "SyntaxError"),
        case("view fragment syntax", Method::GET, format!("/api/resource?iri={}", enc(&format!("{}#cell=1", res("cars.csv")))), "", 400, "SyntaxError"),
        case("view inverted range", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("row=4-2")), "", 400, "BoundsError"),
        case("view zero index", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("col=0")), "", 400, "BoundsError"),
        case("view star start", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("row=*")), "", 400, "BoundsError"),
        case("view beyond rows", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("row=14")), "", 400, "BoundsError"),
        case("view beyond columns", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("cell=1,10")), "", 400, "BoundsError"),
        case("view line on table", Method::GET, format!("/api/resource?iri={table}&sel={}", enc("line=1")), "", 400, "SelectorKindMismatch"),
        case("view cell on text", Method::GET, format!("/api/resource?iri={text}&sel={}", enc("cell=1,1")), "", 400, "SelectorKindMismatch"),
        case("view page zero", Method::GET, format!("/api/resource?iri={table}&page=0"), "", 400, "InvalidParameter"),
        case("view page beyond", Method::GET, format!("/api/resource?iri={table}&page=2"), "", 400, "InvalidParameter"),
        case("view double selector", Method::GET, format!("/api/resource?iri={}&sel={}", enc(&format!("{}#row=1", res("cars.csv"))), enc("row=2")), "", 400, "InvalidParameter"),
        case("add literal subject", Method::POST, "/api/triples".into(), r#"{"subject":"\"x\"","predicate":"<http://www.w3.org/2000/01/rdf-schema#comment>","object":"\"y\""}"#, 400, "MalformedTriple"),
        case("add blank predicate", Method::POST, "/api/triples".into(), r#"{"subject":"<http://x/s>","predicate":"_:p","object":"\"y\""}"#, 400, "MalformedTriple"),
        case("add bad term", Method::POST, "/api/triples".into(), r#"{"subject":"<http://x/s>","predicate":"<http://x/p>","object":"\"open"}"#, 400, "ParseError"),
        case("add relative iri", Method::POST, "/api/triples".into(), r#"{"subject":"<s>","predicate":"<http://x/p>","object":"\"o\""}"#, 400, "ParseError"),
        case("add non-json", Method::POST, "/api/triples".into(), "subject=x", 400, "MalformedRequest"),
        case("add missing field", Method::POST, "/api/triples".into(), r#"{"subject":"<http://x/s>"}"#, 400, "MalformedRequest"),
        case("delete bad term", Method::DELETE, "/api/triples".into(), r#"{"subject":"<http://x/s>","predicate":"<http://x/p>","object":"oops"}"#, 400, "ParseError"),
        case("list bad subject", Method::GET, format!("/api/triples?subject={}", enc("<not closed")), "", 400, "ParseError"),
        case("query syntax", Method::POST, "/api/query".into(), "SELECT ?c WHERE { ?c du:distinctCount }", 400, "ParseError"),
        case("query unknown prefix", Method::POST, "/api/query".into(), "SELECT ?c WHERE { ?c foo:bar ?o }", 400, "ParseError"),
        case("query unbound variable", Method::POST, "/api/query".into(), "SELECT ?x WHERE { ?c ?p ?o }", 400, "UnboundSelectedVariable"),
        case("query empty pattern", Method::POST, "/api/query".into(), "SELECT ?x WHERE { }", 400, "UnboundSelectedVariable"),
        case("profile unknown", Method::POST, format!("/api/profile?iri={unknown}"), "", 404, "UnknownResource"),
        case("profile text", Method::POST, format!("/api/profile?iri={text}"), "", 400, "ResourceKindMismatch"),
        case("profile without iri", Method::POST, "/api/profile".into(), "", 400, "MissingParameter"),
        case("report unknown", Method::GET, format!("/report?iri={unknown}"), "", 404, "UnknownResource"),
        case("report text", Method::GET, format!("/report?iri={text}"), "", 400, "ResourceKindMismatch"),
        case("report without iri", Method::GET, "/report".into(), "", 400, "MissingParameter"),
        case("html view unknown", Method::GET, "/res/missing.csv".into(), "", 404, "UnknownResource"),
        case("html view traversal", Method::GET, "/res/%2E%2E/graph.nt".into(), "", 404, "UnknownResource"),
    ]
}

/// Runs one error case; returns a description of the mismatch, if any.
pub async fn check_error_case(app: &TestApp, case: &ErrorCase) -> Result<(), String> {
    let (status, body) = app.call(case.method.clone(), &case.uri, case.body).await;
    let body: Value = serde_json::from_slice(&body).map_err(|e| format!("{}: non-JSON error body ({e})", case.name))?;
    let code = body["code"].as_str().unwrap_or_default();
    if status.as_u16() != case.status || code != case.code {
        return Err(format!(
            "{}: expected {} {}, got {} {} ({})",
            case.name, case.status, case.code, status, code, body["message"]
        ));
    }
    if body["status"].as_u64() != Some(u64::from(case.status)) || body["message"].as_str().is_none_or(str::is_empty) {
        return Err(format!("{}: error body lacks status or message: {body}", case.name));
    }
    Ok(())
}
