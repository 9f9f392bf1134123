mod common;

use std::path::Path;
use std::process::Command;

use axum::http::Method;
use common::{enc, res, TestApp, ORIGIN};
use datacat::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn datacat(root: &Path, graph: &Path, args: &[&str]) -> Outcome {
    let mut argv = vec![
        "datacat".to_string(),
        "--root".into(),
        root.display().to_string(),
        "--graph".into(),
        graph.display().to_string(),
        "--origin".into(),
        ORIGIN.into(),
    ];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn workspace() -> (tempfile::TempDir, std::path::PathBuf, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    std::fs::create_dir(&root).unwrap();
    std::fs::write(root.join("a.csv"), "id,unit\n1,kg\n2,kg\n3,kg\n").unwrap();
    std::fs::write(root.join("b.csv"), "name,flag,kind\nx,,car\ny,1,car\n").unwrap();
    std::fs::write(root.join("notes.txt"), "hello\n").unwrap();
    let graph = dir.path().join("g.nt");
    (dir, root, graph)
}

#[test]
fn profile_then_query_across_files() {
    let (_dir, root, graph) = workspace();
    let a = root.join("a.csv");
    let b = root.join("b.csv");
    let out = datacat(&root, &graph, &["profile", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with(&format!("{}\t2\t", res("a.csv"))));

    let out = datacat(&root, &graph, &["query", r#"<SELECT ?c WHERE {?c du:distinctCount "1"^^xsd:integer}>"#]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(
        out.stdout,
        format!("?c\n<{0}#col=2>\n<{1}#col=3>\n", res("a.csv"), res("b.csv"))
    );

    let out = datacat(&root, &graph, &["query", "SELECT ?c ?l WHERE { ?c rdfs:label ?l . ?c du:emptyCount 1 }"]);
    assert_eq!(out.stdout, format!("?c\t?l\n<{}#col=2>\t\"flag\"\n", res("b.csv")));
}

#[test]
fn export_import_round_trip() {
    let (dir, root, graph) = workspace();
    let a = root.join("a.csv");
    assert_eq!(datacat(&root, &graph, &["profile", a.to_str().unwrap()]).code, EXIT_OK);
    let out_file = dir.path().join("out.nt");
    let out = datacat(&root, &graph, &["export", graph.to_str().unwrap(), "-o", out_file.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let exported = std::fs::read(&out_file).unwrap();
    assert_eq!(exported, std::fs::read(&graph).unwrap());

    let fresh = dir.path().join("fresh.nt");
    let out = datacat(&root, &graph, &["import", fresh.to_str().unwrap(), "-i", out_file.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout.trim().parse::<usize>().unwrap(), exported.iter().filter(|&&b| b == b'\n').count());
    let out = datacat(&root, &fresh, &["export"]);
    assert_eq!(out.stdout.as_bytes(), exported);
}

#[test]
fn usage_and_data_errors() {
    let (dir, root, graph) = workspace();
    let out = datacat(&root, &graph, &["query", "SELECT ?c WHERE { ?c du:distinctCount }"]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("parse error"), "{}", out.stderr);
    assert!(out.stdout.is_empty());

    assert_eq!(datacat(&root, &graph, &["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(datacat(&root, &graph, &["profile"]).code, EXIT_USAGE);
    assert_eq!(datacat(&root, &graph, &["--delimiter", ";;", "profile", "x.csv"]).code, EXIT_USAGE);

    let missing = root.join("missing.csv");
    let out = datacat(&root, &graph, &["profile", missing.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_DATA);
    assert!(out.stderr.contains("not found"), "{}", out.stderr);
    let notes = root.join("notes.txt");
    assert_eq!(datacat(&root, &graph, &["profile", notes.to_str().unwrap()]).code, EXIT_DATA);
    let outside = dir.path().join("outside.csv");
    std::fs::write(&outside, "a\n1\n").unwrap();
    assert_eq!(datacat(&root, &graph, &["profile", outside.to_str().unwrap()]).code, EXIT_DATA);

    let bad = dir.path().join("bad.nt");
    std::fs::write(&bad, "<http://a> <http://b> <http://c> .\nbad line\n").unwrap();
    let out = datacat(&root, &graph, &["import", "-i", bad.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_DATA);
    assert!(out.stderr.contains("line 2"), "{}", out.stderr);
    assert!(!graph.exists(), "a failed import must not touch the graph");

    assert_eq!(datacat(&root, &graph, &["export"]).code, EXIT_DATA);

    let out = datacat(&root, &graph, &["--help"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("profile"));
}

#[test]
fn delimiter_and_header_flags() {
    let (_dir, root, graph) = workspace();
    std::fs::write(root.join("semi.csv"), "1;a\n1;b\n").unwrap();
    let semi = root.join("semi.csv");
    let out = datacat(&root, &graph, &["--delimiter", ";", "--no-header", "profile", semi.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let out = datacat(&root, &graph, &["query", "SELECT ?c ?n WHERE { ?c du:totalCount ?n }"]);
    let ints = "<http://www.w3.org/2001/XMLSchema#integer>";
    assert_eq!(
        out.stdout,
        format!("?c\t?n\n<{0}#col=1>\t\"2\"^^{ints}\n<{0}#col=2>\t\"2\"^^{ints}\n", res("semi.csv"))
    );
}

#[tokio::test]
async fn cli_profiling_matches_http_profiling() {
    let cars = common::fixture("cars.csv");
    let app = TestApp::new(&[("cars.csv", &cars)]);
    app.json(Method::POST, &format!("/api/profile?iri={}", enc(&res("cars.csv"))), "").await;
    let via_http = app.catalog.export();

    let (_dir, root, graph) = workspace();
    std::fs::write(root.join("cars.csv"), &cars).unwrap();
    let path = root.join("cars.csv");
    assert_eq!(datacat(&root, &graph, &["profile", path.to_str().unwrap()]).code, EXIT_OK);
    assert_eq!(std::fs::read(&graph).unwrap(), via_http);

    let query = "SELECT ?c ?n WHERE { ?c du:distinctCount ?n }";
    let (_, http) = app.json(Method::POST, "/api/query", query).await;
    let cli = datacat(&root, &graph, &["query", query]).stdout;
    let http_rows: Vec<String> = http["bindings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| format!("{}\t{}", b["c"].as_str().unwrap(), b["n"].as_str().unwrap()))
        .collect();
    assert_eq!(cli.lines().skip(1).collect::<Vec<_>>(), http_rows);
}

#[test]
fn binary_exit_codes() {
    let (_dir, root, graph) = workspace();
    let bin = env!("CARGO_BIN_EXE_datacat");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(["--root", root.to_str().unwrap(), "--graph", graph.to_str().unwrap()])
            .args(args)
            .env_remove("DATACAT_ORIGIN")
            .output()
            .unwrap()
    };
    let out = status(&["query", "SELECT ?s WHERE { ?s ?p ?o }"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(out.stdout, b"?s\n");
    assert_eq!(status(&["query", "SELECT"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(status(&["profile", "/nonexistent/x.csv"]).status.code(), Some(EXIT_DATA));
    assert_eq!(status(&[]).status.code(), Some(EXIT_USAGE));
}
