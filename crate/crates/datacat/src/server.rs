//! HTTP interface: a JSON API under `/api`, HTML reports and resource views.
//!
//! Browsers never send fragments, so selectors travel in the `sel` query
//! parameter while every IRI in a response keeps the canonical `#` form.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{StatusCode, Uri};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use datacat_core::deeplink::{a1_to_cell, column_letters, parse_fragment, resolve, DeepLink, Extent, FragmentError, ResolveError, Selector};
use datacat_core::graphstore::{Term, Triple};
use datacat_core::resources::{Resource, TableResource, TextResource};
use datacat_core::vocab::{TermKind, TERMS};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::catalog::{Catalog, CatalogError};

pub const PAGE_SIZE: usize = 50;

/// An error response: `{"status": .., "code": .., "message": ..}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        ApiError {
            status: StatusCode::from_u16(e.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, "{}", self.message);
        }
        let body = json!({ "status": self.status.as_u16(), "code": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Params = Query<HashMap<String, String>>;

pub fn router(catalog: Arc<Catalog>) -> Router {
    Router::new()
        .route("/", get(shell))
        .route("/vocab", get(vocabulary_page))
        .route("/res/{*path}", get(resource_page))
        .route("/report", get(report))
        .route("/api/resources", get(list_resources))
        .route("/api/resource", get(resource_view))
        .route("/api/triples", post(add_triple).get(list_triples).delete(remove_triple))
        .route("/api/query", post(run_query))
        .route("/api/profile", post(profile))
        .with_state(catalog)
}

fn required<'a>(params: &'a HashMap<String, String>, name: &'static str) -> Result<&'a str, CatalogError> {
    params
        .get(name)
        .map(String::as_str)
        .filter(|v| !v.is_empty())
        .ok_or(CatalogError::MissingParameter(name))
}

/// Parses a `sel` value: a fragment, or an A1 cell label such as `H1`.
pub fn parse_selection(sel: &str) -> Result<Selector, CatalogError> {
    match parse_fragment(sel) {
        Ok(s) => Ok(s),
        Err(e @ FragmentError::Syntax { .. }) => match a1_to_cell(sel) {
            Ok((row, col)) => Ok(Selector::cell(row, col)),
            Err(_) => Err(e.into()),
        },
        Err(e) => Err(e.into()),
    }
}

/// Combines the `iri` parameter, which may carry a fragment, with `sel`.
fn requested_link(params: &HashMap<String, String>) -> Result<DeepLink, CatalogError> {
    let iri = required(params, "iri")?;
    let (base, fragment) = match iri.split_once('#') {
        Some((base, fragment)) => (base, Some(fragment)),
        None => (iri, None),
    };
    let sel = params.get("sel").map(String::as_str).filter(|s| !s.is_empty());
    let selector = match (fragment, sel) {
        (Some(_), Some(_)) => {
            return Err(CatalogError::InvalidParameter(
                "a selector was given both as an IRI fragment and as sel".into(),
            ))
        }
        (Some(s), None) | (None, Some(s)) => Some(parse_selection(s)?),
        (None, None) => None,
    };
    Ok(DeepLink::new(base, selector))
}

fn page_param(params: &HashMap<String, String>) -> Result<usize, CatalogError> {
    match params.get("page") {
        None => Ok(1),
        Some(p) => p
            .parse::<usize>()
            .ok()
            .filter(|&p| p >= 1)
            .ok_or_else(|| CatalogError::InvalidParameter(format!("page must be a positive integer, got {p:?}"))),
    }
}

/// Rows `[start, end]` of page `page` over `[first, last]`, and the page count.
fn page_window(first: usize, last: usize, page: usize) -> Result<(usize, usize, usize), CatalogError> {
    let total = (last + 1).saturating_sub(first);
    let pages = total.div_ceil(PAGE_SIZE).max(1);
    if page > pages {
        return Err(CatalogError::InvalidParameter(format!("page {page} is beyond the last page {pages}")));
    }
    let start = first + (page - 1) * PAGE_SIZE;
    let end = (start + PAGE_SIZE - 1).min(last);
    Ok((start, end, pages))
}

fn resolve_link(catalog: &Catalog, link: &DeepLink) -> Result<(Arc<Resource>, Extent), CatalogError> {
    catalog.resource(&link.base_iri)?;
    match resolve(link, catalog.registry()) {
        Ok(region) => Ok((region.resource, region.extent)),
        Err(ResolveError::UnknownResource(iri)) => Err(CatalogError::UnknownResource(iri)),
        Err(ResolveError::Resource(e)) => Err(e.into()),
    }
}

async fn resource_view(State(catalog): State<Arc<Catalog>>, Query(params): Params) -> ApiResult<Json<Value>> {
    let link = requested_link(&params)?;
    let page = page_param(&params)?;
    let (resource, extent) = resolve_link(&catalog, &link)?;
    let payload = match (&*resource, extent) {
        (Resource::Table(table), Extent::Cells(bounds)) => {
            let (start, end, pages) = page_window(bounds.start_row, bounds.end_row, page)?;
            let link_to = |sel: Selector| link.with_selector(sel).to_string();
            let columns: Vec<Value> = (bounds.start_col..=bounds.end_col)
                .map(|c| {
                    let mut column = json!({ "col": c, "label": column_letters(c), "iri": link_to(Selector::col(c)) });
                    if table.header_row {
                        column["header"] = json!(table.cell(1, c));
                    }
                    column
                })
                .collect();
            let rows: Vec<Value> = (start..=end)
                .map(|r| {
                    let cells: Vec<Value> = (bounds.start_col..=bounds.end_col)
                        .map(|c| json!({ "col": c, "value": table.cell(r, c), "iri": link_to(Selector::cell(r, c)) }))
                        .collect();
                    json!({ "row": r, "iri": link_to(Selector::row(r)), "cells": cells })
                })
                .collect();
            json!({
                "iri": link.base_iri,
                "kind": "table",
                "link": link.to_string(),
                "selector": link.selector.as_ref().map(ToString::to_string),
                "dims": { "rows": table.row_count(), "cols": table.col_count() },
                "headerRow": table.header_row,
                "bounds": {
                    "startRow": bounds.start_row, "startCol": bounds.start_col,
                    "endRow": bounds.end_row, "endCol": bounds.end_col,
                },
                "page": page, "pageSize": PAGE_SIZE, "pageCount": pages,
                "view": { "startRow": start, "endRow": end },
                "columns": columns,
                "rows": rows,
            })
        }
        (Resource::Text(text), Extent::Lines(span)) => {
            let (start, end, pages) = page_window(span.start, span.end, page)?;
            let lines: Vec<Value> = (start..=end)
                .map(|n| {
                    json!({
                        "line": n,
                        "text": text.lines()[n - 1],
                        "iri": link.with_selector(Selector::line(n)).to_string(),
                    })
                })
                .collect();
            json!({
                "iri": link.base_iri,
                "kind": "text",
                "link": link.to_string(),
                "selector": link.selector.as_ref().map(ToString::to_string),
                "dims": { "lines": text.line_count() },
                "bounds": { "startLine": span.start, "endLine": span.end },
                "page": page, "pageSize": PAGE_SIZE, "pageCount": pages,
                "view": { "startLine": start, "endLine": end },
                "lines": lines,
            })
        }
        _ => unreachable!("resolve returns an extent matching the resource kind"),
    };
    Ok(Json(payload))
}

async fn list_resources(State(catalog): State<Arc<Catalog>>) -> Json<Value> {
    let resources: Vec<Value> = catalog
        .registry()
        .list()
        .iter()
        .map(|r| {
            let dims = match &**r {
                Resource::Table(t) => json!({ "rows": t.row_count(), "cols": t.col_count() }),
                Resource::Text(t) => json!({ "lines": t.line_count() }),
            };
            json!({ "iri": r.base_iri(), "kind": r.kind(), "dims": dims })
        })
        .collect();
    Json(json!({ "resources": resources }))
}

#[derive(Deserialize)]
struct TripleBody {
    subject: String,
    predicate: String,
    object: String,
}

fn triple_from_body(body: &[u8]) -> Result<Triple, CatalogError> {
    let body: TripleBody = serde_json::from_slice(body).map_err(|e| CatalogError::MalformedRequest(e.to_string()))?;
    let subject: Term = body.subject.parse()?;
    let predicate: Term = body.predicate.parse()?;
    let object: Term = body.object.parse()?;
    Ok(Triple::new(subject, predicate, object)?)
}

fn triple_json(t: &Triple) -> Value {
    json!({
        "subject": t.subject.to_string(),
        "predicate": t.predicate.to_string(),
        "object": t.object.to_string(),
    })
}

async fn add_triple(State(catalog): State<Arc<Catalog>>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let triple = triple_from_body(&body)?;
    let inserted = catalog.add_triple(triple.clone())?;
    let status = if inserted { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(json!({ "inserted": inserted, "triple": triple_json(&triple) }))))
}

async fn remove_triple(State(catalog): State<Arc<Catalog>>, body: Bytes) -> ApiResult<Json<Value>> {
    let triple = triple_from_body(&body)?;
    let removed = catalog.remove_triple(&triple)?;
    Ok(Json(json!({ "removed": removed, "triple": triple_json(&triple) })))
}

/// `subject` is a term in N-Triples syntax or a bare IRI; without it every triple is listed.
async fn list_triples(State(catalog): State<Arc<Catalog>>, Query(params): Params) -> ApiResult<Json<Value>> {
    let subject = match params.get("subject").map(String::as_str).filter(|s| !s.is_empty()) {
        None => None,
        Some(s) if s.starts_with('<') || s.starts_with("_:") => Some(s.parse::<Term>().map_err(CatalogError::from)?),
        Some(s) => Some(Term::iri(s).map_err(CatalogError::from)?),
    };
    let triples: Vec<Value> = catalog.triples(subject.as_ref()).iter().map(triple_json).collect();
    Ok(Json(json!({ "triples": triples })))
}

async fn run_query(State(catalog): State<Arc<Catalog>>, body: Bytes) -> ApiResult<Json<Value>> {
    let text = std::str::from_utf8(&body).map_err(|e| CatalogError::MalformedRequest(e.to_string()))?;
    let result = catalog.query(text)?;
    let bindings: Vec<Value> = result
        .rows
        .iter()
        .map(|row| {
            let mut object = Map::new();
            for (var, term) in row.iter() {
                object.insert(var.name().to_string(), Value::String(term.to_string()));
            }
            Value::Object(object)
        })
        .collect();
    let variables: Vec<&str> = result.variables.iter().map(|v| v.name()).collect();
    Ok(Json(json!({ "variables": variables, "bindings": bindings })))
}

async fn profile(State(catalog): State<Arc<Catalog>>, Query(params): Params) -> ApiResult<Json<Value>> {
    let iri = required(&params, "iri")?.to_string();
    let summary = {
        let iri = iri.clone();
        tokio::task::spawn_blocking(move || catalog.profile(&iri))
            .await
            .map_err(|e| ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "InternalError",
                message: e.to_string(),
            })??
    };
    Ok(Json(json!({ "iri": iri, "columns": summary.columns, "triplesAdded": summary.triples_added })))
}

async fn report(State(catalog): State<Arc<Catalog>>, Query(params): Params) -> ApiResult<Html<String>> {
    let iri = required(&params, "iri")?;
    Ok(Html(catalog.report(iri)?))
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
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
    out
}

fn query_component(text: &str) -> String {
    percent_encoding::utf8_percent_encode(text, percent_encoding::NON_ALPHANUMERIC).to_string()
}

const PAGE_STYLE: &str = "body{font-family:system-ui,sans-serif;margin:2em}table{border-collapse:collapse}\
th,td{border:1px solid #ccc;padding:.2em .5em}:target{background:#ddd}a{color:#0b5394}";

fn page(title: &str, body: &str) -> Html<String> {
    Html(format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{PAGE_STYLE}</style>\n</head>\n<body>\n{body}</body>\n</html>\n",
        escape(title)
    ))
}

/// Entry page listing the catalog's resources.
async fn shell(State(catalog): State<Arc<Catalog>>) -> Html<String> {
    let mut body = String::from("<h1>Data catalog</h1>\n<ul>\n");
    for r in catalog.registry().list() {
        let iri = r.base_iri();
        let _ = write!(body, "<li><a href=\"{}\">{}</a> ({})", escape(iri), escape(iri), r.kind());
        if r.as_table().is_some() {
            let _ = write!(body, " &middot; <a href=\"/report?iri={}\">report</a>", query_component(iri));
        }
        body.push_str("</li>\n");
    }
    body.push_str("</ul>\n<p><a href=\"/vocab\">Vocabulary</a></p>\n");
    page("Data catalog", &body)
}

/// Reference page for the `du:` vocabulary; each term is an anchor target.
async fn vocabulary_page(State(catalog): State<Arc<Catalog>>) -> Html<String> {
    let ns = catalog.vocab().namespace();
    let mut body = format!("<h1>Vocabulary</h1>\n<p>Namespace <code>{}</code></p>\n<dl>\n", escape(ns));
    for term in TERMS {
        let kind = match term.kind {
            TermKind::Class => "class",
            TermKind::Property => "property",
            TermKind::Individual => "individual",
        };
        let _ = writeln!(
            body,
            "<dt id=\"{0}\"><code>du:{0}</code> ({kind})</dt><dd>{1}</dd>",
            term.local,
            escape(term.comment)
        );
    }
    body.push_str("</dl>\n");
    page("Vocabulary", &body)
}

/// HTML view of a resource at its base IRI. Elements carry the fragment as
/// their id, so a browser scrolls to and highlights the addressed element.
async fn resource_page(State(catalog): State<Arc<Catalog>>, uri: Uri, Query(params): Params) -> ApiResult<Html<String>> {
    let base = format!("{}{}", catalog.registry().origin(), uri.path());
    let resource = catalog.resource(&base)?;
    let page_no = page_param(&params)?;
    let body = match &*resource {
        Resource::Table(t) => table_html(t, page_no)?,
        Resource::Text(t) => text_html(t, page_no)?,
    };
    Ok(page(&base, &body))
}

fn table_html(table: &TableResource, page_no: usize) -> Result<String, CatalogError> {
    let (start, end, pages) = page_window(1, table.row_count(), page_no)?;
    let base = &table.base_iri;
    let mut out = format!(
        "<h1>{}</h1>\n<p>{} rows, {} columns; page {page_no} of {pages}</p>\n<table>\n<tr><th></th>",
        escape(base),
        table.row_count(),
        table.col_count()
    );
    for c in 1..=table.col_count() {
        let _ = write!(out, "<th id=\"col={c}\"><a href=\"{}#col={c}\">{}</a></th>", escape(base), column_letters(c));
    }
    out.push_str("</tr>\n");
    for r in start..=end {
        let _ = write!(out, "<tr><th id=\"row={r}\"><a href=\"{}#row={r}\">{r}</a></th>", escape(base));
        for c in 1..=table.col_count() {
            let _ = write!(
                out,
                "<td id=\"cell={r},{c}\"><a href=\"{}#cell={r},{c}\">{}</a></td>",
                escape(base),
                escape(table.cell(r, c).unwrap_or_default())
            );
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
    if page_no < pages {
        let _ = writeln!(out, "<p><a href=\"?page={}\">next page</a></p>", page_no + 1);
    }
    let _ = writeln!(out, "<p><a href=\"/report?iri={}\">report</a></p>", query_component(base));
    Ok(out)
}

fn text_html(text: &TextResource, page_no: usize) -> Result<String, CatalogError> {
    let (start, end, pages) = page_window(1, text.line_count(), page_no)?;
    let base = &text.base_iri;
    let mut out = format!("<h1>{}</h1>\n<p>{} lines; page {page_no} of {pages}</p>\n<pre>\n", escape(base), text.line_count());
    for n in start..=end {
        let _ = writeln!(
            out,
            "<span id=\"line={n}\"><a href=\"{}#line={n}\">{n:>5}</a>  {}</span>",
            escape(base),
            escape(&text.lines()[n - 1])
        );
    }
    out.push_str("</pre>\n");
    if page_no < pages {
        let _ = writeln!(out, "<p><a href=\"?page={}\">next page</a></p>", page_no + 1);
    }
    Ok(out)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(catalog: Arc<Catalog>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(catalog))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pages_cover_the_range_once() {
        for (first, last) in [(1, 1), (1, 50), (1, 51), (3, 160), (1, 0)] {
            let (_, _, pages) = page_window(first, last, 1).unwrap();
            let mut seen = Vec::new();
            for p in 1..=pages {
                let (s, e, _) = page_window(first, last, p).unwrap();
                assert!(e + 1 - s <= PAGE_SIZE);
                seen.extend(s..=e);
            }
            assert_eq!(seen, (first..=last).collect::<Vec<_>>());
            assert!(page_window(first, last, pages + 1).is_err());
        }
    }

    #[test]
    fn selection_accepts_a1_labels() {
        assert_eq!(parse_selection("H1").unwrap(), Selector::cell(1, 8));
        assert_eq!(parse_selection("cell=1,8").unwrap(), Selector::cell(1, 8));
        assert_eq!(parse_selection("row=x").unwrap_err().code(), "SyntaxError");
        assert_eq!(parse_selection("row=0").unwrap_err().code(), "BoundsError");
    }
}
