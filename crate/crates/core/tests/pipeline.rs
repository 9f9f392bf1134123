use std::collections::BTreeSet;

use datacat_core::deeplink::{resolve, DeepLink, Extent, Selector};
use datacat_core::graphstore::{export_ntriples, import_ntriples, query_bgp, BgpQuery, Store, Term, Triple};
use datacat_core::profiler::{profile_table, profile_to_triples, ProfilerConfig};
use datacat_core::reportgen::{deep_link_anchors, default_template, render_report};
use datacat_core::resources::{get_region, CsvConfig, Resource, ResourceRegistry};
use datacat_core::vocab::Vocabulary;

const ORIGIN: &str = "http://localhost:8080";

fn registry() -> (tempfile::TempDir, ResourceRegistry) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("fleet")).unwrap();
    std::fs::write(
        dir.path().join("fleet/cars.csv"),
        "make,type,price\nOpel,Car,100\nFord,Car,\nOpel,Car, \n",
    )
    .unwrap();
    std::fs::write(dir.path().join("fleet/readme.txt"), "first\r\nsecond\nthird").unwrap();
    let registry = ResourceRegistry::new(dir.path(), ORIGIN, CsvConfig::default()).unwrap();
    assert!(registry.scan().is_empty());
    (dir, registry)
}

#[test]
fn deep_links_resolve_to_regions() {
    let (_dir, registry) = registry();
    let table_iri = format!("{ORIGIN}/res/fleet/cars.csv");
    let link = DeepLink::parse(&format!("{table_iri}#cell=2,1-*,2")).unwrap();
    let region = resolve(&link, &registry).unwrap();
    let Resource::Table(table) = &*region.resource else {
        panic!("expected a table")
    };
    let Extent::Cells(bounds) = region.extent else {
        panic!("expected cells")
    };
    let grid = table.region(bounds);
    let values: Vec<Vec<&str>> = grid.rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    assert_eq!(values, [["Opel", "Car"], ["Ford", "Car"], ["Opel", "Car"]]);
    assert_eq!(get_region(table, &Selector::cell(1, 2)).unwrap().rows[0], ["type"]);

    let text = resolve(&DeepLink::parse(&format!("{ORIGIN}/res/fleet/readme.txt#line=2-*")).unwrap(), &registry).unwrap();
    let Resource::Text(doc) = &*text.resource else {
        panic!("expected text")
    };
    let Extent::Lines(span) = text.extent else {
        panic!("expected lines")
    };
    assert_eq!(doc.slice(span), ["second", "third"]);
}

#[test]
fn profile_query_report() {
    let (_dir, registry) = registry();
    let vocab = Vocabulary::for_origin(ORIGIN);
    let resource = registry.get(&format!("{ORIGIN}/res/fleet/cars.csv")).unwrap();
    let table = resource.as_table().unwrap();
    let mut store = Store::new();
    for profile in profile_table(table, &ProfilerConfig::default()) {
        for t in profile_to_triples(&profile, &vocab) {
            store.insert(&t).unwrap();
        }
    }
    let link = Term::iri(format!("{}#col=2", table.base_iri)).unwrap();
    let car = Term::iri("http://dbpedia.org/resource/Car").unwrap();
    let see_also = Term::iri("http://www.w3.org/2000/01/rdf-schema#seeAlso").unwrap();
    assert!(store.insert(&Triple::new(link.clone(), see_also, car).unwrap()).unwrap());

    let query = BgpQuery::parse(
        "SELECT ?c ?label WHERE { ?c du:distinctCount \"1\"^^xsd:integer . ?c rdfs:label ?label . ?c rdfs:seeAlso dbr:Car }",
        &vocab.prefixes(),
    )
    .unwrap();
    let rows = query_bgp(&store, &query).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].get("c"), Some(&link));
    assert_eq!(rows[0].get("label").unwrap().value(), "type");

    let price = BgpQuery::parse(
        "SELECT ?e ?b WHERE { ?c rdfs:label \"price\" . ?c du:emptyCount ?e . ?c du:blankCount ?b }",
        &vocab.prefixes(),
    )
    .unwrap();
    let rows = query_bgp(&store, &price).unwrap();
    assert_eq!(rows[0].get("e").unwrap().value(), "1");
    assert_eq!(rows[0].get("b").unwrap().value(), "1");

    let html = render_report(&store, table, &default_template(), &vocab).unwrap();
    let expected: BTreeSet<String> = (1..=3).map(|c| format!("{}#col={c}", table.base_iri)).collect();
    assert_eq!(deep_link_anchors(&html).into_iter().collect::<BTreeSet<_>>(), expected);

    let mut reloaded = Store::new();
    import_ntriples(&mut reloaded, &export_ntriples(&store)).unwrap();
    assert_eq!(reloaded, store);
    assert_eq!(render_report(&reloaded, table, &default_template(), &vocab).unwrap(), html);
}
