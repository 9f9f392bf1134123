//! Command-line entry point. Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use datacat_core::profiler::ProfilerConfig;
use datacat_core::resources::CsvConfig;

use crate::catalog::{write_atomically, Catalog, CatalogConfig, CatalogError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const DEFAULT_GRAPH: &str = "graph.nt";

#[derive(Debug, Parser)]
#[command(name = "datacat", version, about = "Semantic data catalog with deep links into tables and documents")]
pub struct Cli {
    /// Directory whose files are served and addressed as resources.
    #[arg(long, env = "DATACAT_ROOT", default_value = ".", global = true)]
    pub root: PathBuf,
    #[arg(long, env = "DATACAT_PORT", default_value_t = 8080, global = true)]
    pub port: u16,
    /// N-Triples file holding the graph.
    #[arg(long, env = "DATACAT_GRAPH", default_value = DEFAULT_GRAPH, global = true)]
    pub graph: PathBuf,
    /// Origin used in minted IRIs [default: http://localhost:<port>].
    #[arg(long, env = "DATACAT_ORIGIN", global = true)]
    pub origin: Option<String>,
    /// CSV field delimiter: one ASCII character, or "tab".
    #[arg(long, default_value = ",", value_parser = parse_delimiter, global = true)]
    pub delimiter: u8,
    /// Treat the first CSV row as data rather than as column headers.
    #[arg(long, global = true)]
    pub no_header: bool,
    /// Maximum number of histogram entries per column.
    #[arg(long, default_value_t = datacat_core::profiler::DEFAULT_HISTOGRAM_CAP, global = true)]
    pub histogram_cap: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the catalog over HTTP.
    Serve,
    /// Profile CSV files and add the resulting statements to the graph.
    Profile {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run a basic graph pattern query and print the bindings as TSV.
    Query { text: String },
    /// Write the graph as sorted N-Triples.
    Export {
        /// Graph file, overriding --graph.
        graph: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Add the triples of an N-Triples file to the graph.
    Import {
        /// Graph file, overriding --graph.
        graph: Option<PathBuf>,
        #[arg(short, long)]
        input: PathBuf,
    },
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be a single ASCII character or \"tab\", got {s:?}")),
    }
}

impl Cli {
    pub fn origin(&self) -> String {
        self.origin
            .clone()
            .unwrap_or_else(|| format!("http://localhost:{}", self.port))
    }

    pub fn catalog_config(&self, graph: &Path) -> CatalogConfig {
        CatalogConfig {
            root: self.root.clone(),
            origin: self.origin(),
            graph: Some(graph.to_path_buf()),
            csv: CsvConfig {
                delimiter: self.delimiter,
                header_row: !self.no_header,
            },
            profiler: ProfilerConfig {
                histogram_cap: self.histogram_cap,
            },
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        if e.is_usage_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = execute(&cli, stdout, stderr);
    let _ = stdout.flush();
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let write_failed = |e: io::Error| Failure::Data(format!("cannot write output: {e}"));
    match &cli.command {
        Command::Serve => {
            let catalog = Catalog::open(cli.catalog_config(&cli.graph))?;
            for (path, e) in catalog.scan() {
                let _ = writeln!(stderr, "warning: skipping {}: {e}", path.display());
            }
            let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, cli.port));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Data(e.to_string()))?;
            runtime
                .block_on(crate::server::serve(Arc::new(catalog), addr))
                .map_err(|e| Failure::Data(format!("server failed: {e}")))?;
        }
        Command::Profile { files } => {
            let catalog = Catalog::open(cli.catalog_config(&cli.graph))?;
            for file in files {
                let resource = catalog.register_path(file)?;
                let summary = catalog.profile(resource.base_iri())?;
                writeln!(stdout, "{}\t{}\t{}", resource.base_iri(), summary.columns, summary.triples_added)
                    .map_err(write_failed)?;
            }
        }
        Command::Query { text } => {
            let catalog = Catalog::open(cli.catalog_config(&cli.graph))?;
            let result = catalog.query(unwrap_brackets(text))?;
            let header: Vec<String> = result.variables.iter().map(ToString::to_string).collect();
            writeln!(stdout, "{}", header.join("\t")).map_err(write_failed)?;
            for row in &result.rows {
                let cells: Vec<String> = result
                    .variables
                    .iter()
                    .map(|v| row.get(v.name()).map(ToString::to_string).unwrap_or_default())
                    .collect();
                writeln!(stdout, "{}", cells.join("\t")).map_err(write_failed)?;
            }
        }
        Command::Export { graph, output } => {
            let graph = graph.as_deref().unwrap_or(&cli.graph);
            if !graph.is_file() {
                return Err(Failure::Data(format!("graph file not found: {}", graph.display())));
            }
            let catalog = Catalog::open(cli.catalog_config(graph))?;
            let bytes = catalog.export();
            match output {
                Some(path) => write_atomically(path, &bytes).map_err(io_failure(path))?,
                None => stdout.write_all(&bytes).map_err(write_failed)?,
            }
        }
        Command::Import { graph, input } => {
            let graph = graph.as_deref().unwrap_or(&cli.graph);
            let bytes = fs::read(input).map_err(io_failure(input))?;
            let catalog = Catalog::open(cli.catalog_config(graph))?;
            let added = catalog
                .import(&bytes)
                .map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
            if added == 0 && !graph.exists() {
                write_atomically(graph, &[]).map_err(io_failure(graph))?;
            }
            writeln!(stdout, "{added}").map_err(write_failed)?;
        }
    }
    Ok(())
}

/// Accepts a query wrapped in angle brackets, as in `'<SELECT ...>'`.
fn unwrap_brackets(text: &str) -> &str {
    let trimmed = text.trim();
    trimmed
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .filter(|inner| {
            let head = inner.trim_start().get(..6).unwrap_or_default();
            head.eq_ignore_ascii_case("select") || head.eq_ignore_ascii_case("prefix")
        })
        .unwrap_or(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delimiters() {
        assert_eq!(parse_delimiter(";"), Ok(b';'));
        assert_eq!(parse_delimiter("tab"), Ok(b'\t'));
        assert!(parse_delimiter(";;").is_err());
        assert!(parse_delimiter("é").is_err());
    }

    #[test]
    fn bracketed_queries() {
        assert_eq!(unwrap_brackets("<SELECT ?c WHERE { ?c ?p ?o }>"), "SELECT ?c WHERE { ?c ?p ?o }");
        assert_eq!(unwrap_brackets("SELECT ?c WHERE { ?c ?p <http://x> }"), "SELECT ?c WHERE { ?c ?p <http://x> }");
        assert_eq!(unwrap_brackets("<http://x>"), "<http://x>");
    }
}
