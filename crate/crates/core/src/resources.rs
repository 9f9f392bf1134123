//! Tables and text documents loaded into memory, addressed by base IRI.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};
use thiserror::Error;

use crate::deeplink::{RangeEnd, Selector};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("{}: not valid UTF-8 (invalid byte at offset {offset})", path.display())]
    Encoding { path: PathBuf, offset: usize },
    #[error("{}: file contains no records", .0.display())]
    EmptyFile(PathBuf),
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: outside the catalog root", .0.display())]
    OutsideRoot(PathBuf),
    #[error("selector {selector} is out of bounds: {detail}")]
    OutOfBounds { selector: String, detail: String },
    #[error("selector {selector} cannot address a {kind} resource")]
    SelectorKindMismatch { selector: String, kind: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvConfig {
    pub delimiter: u8,
    pub header_row: bool,
}

impl Default for CsvConfig {
    fn default() -> Self {
        CsvConfig {
            delimiter: b',',
            header_row: true,
        }
    }
}

/// Inclusive, 1-based rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellBounds {
    pub start_row: usize,
    pub start_col: usize,
    pub end_row: usize,
    pub end_col: usize,
}

impl CellBounds {
    pub fn contains(&self, other: &CellBounds) -> bool {
        self.start_row <= other.start_row
            && self.start_col <= other.start_col
            && other.end_row <= self.end_row
            && other.end_col <= self.end_col
    }

    pub fn row_count(&self) -> usize {
        self.end_row + 1 - self.start_row
    }

    pub fn col_count(&self) -> usize {
        self.end_col + 1 - self.start_col
    }
}

/// Inclusive, 1-based range of lines. Empty when `end < start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn len(&self) -> usize {
        (self.end + 1).saturating_sub(self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableResource {
    pub base_iri: String,
    pub source_path: PathBuf,
    pub header_row: bool,
    cells: Vec<Vec<String>>,
    col_count: usize,
}

/// A rectangular view into a table, with its absolute coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGrid<'a> {
    pub bounds: CellBounds,
    pub rows: Vec<&'a [String]>,
}

impl TableResource {
    /// Builds a table from parsed records, padding short records with empty cells.
    pub fn from_records(
        base_iri: impl Into<String>,
        source_path: impl Into<PathBuf>,
        mut records: Vec<Vec<String>>,
        header_row: bool,
    ) -> Option<Self> {
        let col_count = records.iter().map(Vec::len).max()?;
        if col_count == 0 {
            return None;
        }
        for record in &mut records {
            record.resize(col_count, String::new());
        }
        Some(TableResource {
            base_iri: base_iri.into(),
            source_path: source_path.into(),
            header_row,
            cells: records,
            col_count,
        })
    }

    pub fn row_count(&self) -> usize {
        self.cells.len()
    }

    pub fn col_count(&self) -> usize {
        self.col_count
    }

    /// 1-based cell access.
    pub fn cell(&self, row: usize, col: usize) -> Option<&str> {
        self.cells
            .get(row.checked_sub(1)?)?
            .get(col.checked_sub(1)?)
            .map(String::as_str)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[String]> {
        self.cells.iter().map(Vec::as_slice)
    }

    /// Values of a 1-based column, top to bottom.
    pub fn column(&self, col: usize) -> impl Iterator<Item = &str> {
        self.cells.iter().map(move |row| row[col - 1].as_str())
    }

    pub fn full_bounds(&self) -> CellBounds {
        CellBounds {
            start_row: 1,
            start_col: 1,
            end_row: self.row_count(),
            end_col: self.col_count,
        }
    }

    /// Concrete bounds for a tabular selector. Open and overlong ends are clamped.
    pub fn bounds_for(&self, sel: &Selector) -> Result<CellBounds, ResourceError> {
        let rows = self.row_count();
        let cols = self.col_count;
        let (start_row, start_col, end_row, end_col) = match *sel {
            Selector::Rows { start, end } => (start, 1, end, RangeEnd::Last),
            Selector::Cols { start, end } => (1, start, RangeEnd::Last, end),
            Selector::Cells {
                start_row,
                start_col,
                end_row,
                end_col,
            } => (start_row, start_col, end_row, end_col),
            Selector::Lines { .. } => {
                return Err(ResourceError::SelectorKindMismatch {
                    selector: sel.to_string(),
                    kind: "table",
                })
            }
        };
        if start_row > rows || start_col > cols {
            return Err(ResourceError::OutOfBounds {
                selector: sel.to_string(),
                detail: format!("table has {rows} rows and {cols} columns"),
            });
        }
        Ok(CellBounds {
            start_row,
            start_col,
            end_row: end_row.clamp(rows),
            end_col: end_col.clamp(cols),
        })
    }

    pub fn region(&self, bounds: CellBounds) -> CellGrid<'_> {
        let rows = self.cells[bounds.start_row - 1..bounds.end_row]
            .iter()
            .map(|row| &row[bounds.start_col - 1..bounds.end_col])
            .collect();
        CellGrid { bounds, rows }
    }
}

/// The sub-rectangle of `table` addressed by `sel`.
pub fn get_region<'a>(table: &'a TableResource, sel: &Selector) -> Result<CellGrid<'a>, ResourceError> {
    Ok(table.region(table.bounds_for(sel)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextResource {
    pub base_iri: String,
    pub source_path: PathBuf,
    lines: Vec<String>,
}

impl TextResource {
    pub fn from_text(base_iri: impl Into<String>, source_path: impl Into<PathBuf>, text: &str) -> Self {
        TextResource {
            base_iri: base_iri.into(),
            source_path: source_path.into(),
            lines: split_lines(text),
        }
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn full_span(&self) -> LineSpan {
        LineSpan {
            start: 1,
            end: self.lines.len(),
        }
    }

    pub fn span_for(&self, sel: &Selector) -> Result<LineSpan, ResourceError> {
        let Selector::Lines { start, end } = *sel else {
            return Err(ResourceError::SelectorKindMismatch {
                selector: sel.to_string(),
                kind: "text",
            });
        };
        if start > self.lines.len() {
            return Err(ResourceError::OutOfBounds {
                selector: sel.to_string(),
                detail: format!("document has {} lines", self.lines.len()),
            });
        }
        Ok(LineSpan {
            start,
            end: end.clamp(self.lines.len()),
        })
    }

    pub fn slice(&self, span: LineSpan) -> &[String] {
        if span.is_empty() {
            &[]
        } else {
            &self.lines[span.start - 1..span.end]
        }
    }
}

/// Splits on `\n`, `\r\n` and lone `\r`. A trailing terminator does not
/// produce a final empty line.
fn split_lines(text: &str) -> Vec<String> {
    let mut lines = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        match rest.find(['\n', '\r']) {
            Some(i) => {
                lines.push(rest[..i].to_string());
                let skip = if rest[i..].starts_with("\r\n") { 2 } else { 1 };
                rest = &rest[i + skip..];
            }
            None => {
                lines.push(rest.to_string());
                break;
            }
        }
    }
    lines
}

fn read_utf8(path: &Path) -> Result<String, ResourceError> {
    let bytes = fs::read(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => ResourceError::FileNotFound(path.to_path_buf()),
        _ => ResourceError::Io {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let mut text = String::from_utf8(bytes).map_err(|e| ResourceError::Encoding {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    if text.starts_with('\u{feff}') {
        text.drain(..'\u{feff}'.len_utf8());
    }
    Ok(text)
}

pub fn parse_csv(
    base_iri: impl Into<String>,
    source_path: &Path,
    text: &str,
    config: &CsvConfig,
) -> Result<TableResource, ResourceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(config.delimiter)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ResourceError::Csv {
            path: source_path.to_path_buf(),
            message: e.to_string(),
        })?;
        records.push(record.iter().map(str::to_string).collect());
    }
    TableResource::from_records(base_iri, source_path, records, config.header_row)
        .ok_or_else(|| ResourceError::EmptyFile(source_path.to_path_buf()))
}

pub fn load_csv(path: &Path, base_iri: impl Into<String>, config: &CsvConfig) -> Result<TableResource, ResourceError> {
    let text = read_utf8(path)?;
    parse_csv(base_iri, path, &text, config)
}

pub fn load_text(path: &Path, base_iri: impl Into<String>) -> Result<TextResource, ResourceError> {
    let text = read_utf8(path)?;
    Ok(TextResource::from_text(base_iri, path, &text))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resource {
    Table(TableResource),
    Text(TextResource),
}

impl Resource {
    pub fn base_iri(&self) -> &str {
        match self {
            Resource::Table(t) => &t.base_iri,
            Resource::Text(t) => &t.base_iri,
        }
    }

    pub fn source_path(&self) -> &Path {
        match self {
            Resource::Table(t) => &t.source_path,
            Resource::Text(t) => &t.source_path,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Resource::Table(_) => "table",
            Resource::Text(_) => "text",
        }
    }

    pub fn as_table(&self) -> Option<&TableResource> {
        match self {
            Resource::Table(t) => Some(t),
            Resource::Text(_) => None,
        }
    }
}

/// Characters escaped inside a single path segment of a base IRI.
const SEGMENT: &AsciiSet = &CONTROLS
    .add(b' ')
    .add(b'"')
    .add(b'#')
    .add(b'%')
    .add(b'/')
    .add(b'<')
    .add(b'>')
    .add(b'?')
    .add(b'[')
    .add(b'\\')
    .add(b']')
    .add(b'^')
    .add(b'`')
    .add(b'{')
    .add(b'|')
    .add(b'}');

const TABLE_EXTENSIONS: &[&str] = &["csv", "tsv"];
const TEXT_EXTENSIONS: &[&str] = &["txt", "md", "text", "rst"];

/// Loaded resources keyed by base IRI.
///
/// Base IRIs are `<origin>/res/` followed by the percent-encoded path of
/// the file relative to the root directory.
#[derive(Debug)]
pub struct ResourceRegistry {
    root: PathBuf,
    origin: String,
    csv: CsvConfig,
    resources: RwLock<HashMap<String, Arc<Resource>>>,
}

impl ResourceRegistry {
    pub fn new(root: impl Into<PathBuf>, origin: impl Into<String>, csv: CsvConfig) -> Result<Self, ResourceError> {
        let root = root.into();
        let root = fs::canonicalize(&root).map_err(|source| match source.kind() {
            io::ErrorKind::NotFound => ResourceError::FileNotFound(root.clone()),
            _ => ResourceError::Io {
                path: root.clone(),
                source,
            },
        })?;
        Ok(ResourceRegistry {
            root,
            origin: origin.into().trim_end_matches('/').to_string(),
            csv,
            resources: RwLock::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    /// Base IRI for a file, which must live under the root directory.
    pub fn iri_for(&self, path: &Path) -> Result<String, ResourceError> {
        let absolute = if path.is_absolute() {
            path.to_path_buf()
        } else {
            std::env::current_dir()
                .map_err(|source| ResourceError::Io {
                    path: path.to_path_buf(),
                    source,
                })?
                .join(path)
        };
        let absolute = fs::canonicalize(&absolute).map_err(|source| match source.kind() {
            io::ErrorKind::NotFound => ResourceError::FileNotFound(path.to_path_buf()),
            _ => ResourceError::Io {
                path: path.to_path_buf(),
                source,
            },
        })?;
        let relative = absolute
            .strip_prefix(&self.root)
            .map_err(|_| ResourceError::OutsideRoot(path.to_path_buf()))?;
        let mut iri = format!("{}/res", self.origin);
        for component in relative.components() {
            let Component::Normal(segment) = component else {
                return Err(ResourceError::OutsideRoot(path.to_path_buf()));
            };
            iri.push('/');
            iri.extend(utf8_percent_encode(&segment.to_string_lossy(), SEGMENT));
        }
        Ok(iri)
    }

    /// Loads and registers one file; tables by extension, everything else as text.
    pub fn register_path(&self, path: &Path) -> Result<Arc<Resource>, ResourceError> {
        let iri = self.iri_for(path)?;
        let resource = if is_table_path(path) {
            let mut config = self.csv;
            if has_extension(path, &["tsv"]) {
                config.delimiter = b'\t';
            }
            Resource::Table(load_csv(path, iri.clone(), &config)?)
        } else {
            Resource::Text(load_text(path, iri.clone())?)
        };
        Ok(self.insert(resource))
    }

    pub fn insert(&self, resource: Resource) -> Arc<Resource> {
        let resource = Arc::new(resource);
        self.resources
            .write()
            .expect("registry lock poisoned")
            .insert(resource.base_iri().to_string(), Arc::clone(&resource));
        resource
    }

    /// Registers every table and text file under the root. Files that fail to
    /// load are returned alongside their error rather than aborting the scan.
    pub fn scan(&self) -> Vec<(PathBuf, ResourceError)> {
        let mut failures = Vec::new();
        for entry in walkdir::WalkDir::new(&self.root)
            .sort_by_file_name()
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
        {
            let path = entry.path();
            if !(is_table_path(path) || has_extension(path, TEXT_EXTENSIONS)) {
                continue;
            }
            if let Err(e) = self.register_path(path) {
                failures.push((path.to_path_buf(), e));
            }
        }
        failures
    }

    pub fn get(&self, base_iri: &str) -> Option<Arc<Resource>> {
        self.resources
            .read()
            .expect("registry lock poisoned")
            .get(base_iri)
            .cloned()
    }

    /// All registered resources, sorted by base IRI.
    pub fn list(&self) -> Vec<Arc<Resource>> {
        let mut all: Vec<_> = self
            .resources
            .read()
            .expect("registry lock poisoned")
            .values()
            .cloned()
            .collect();
        all.sort_by(|a, b| a.base_iri().cmp(b.base_iri()));
        all
    }
}

fn has_extension(path: &Path, extensions: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

fn is_table_path(path: &Path) -> bool {
    has_extension(path, TABLE_EXTENSIONS)
}
