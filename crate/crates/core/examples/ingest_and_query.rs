//! Load the bundled KB and query its structure: neighbors, hop distances and
//! a binary snapshot round trip.
//!
//! `cargo run --example ingest_and_query`

use std::path::PathBuf;

use kgrel::{KnowledgeGraph, NeighborMode};

fn main() -> kgrel::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/commonsense_kb.tsv");
    let kg = KnowledgeGraph::load_path(&path)?;
    println!(
        "{} concepts, {} relations, {} triples",
        kg.num_concepts(),
        kg.num_relations(),
        kg.num_triples()
    );

    let driving = kg.require("driving")?;
    println!("neighbors of driving (degree {}):", kg.degree(driving));
    for e in kg.neighbors(driving, 10, NeighborMode::TopK)? {
        println!(
            "  {:<12} {:<16} {:?} w={}",
            kg.surface(e.neighbor),
            kg.relation_name(e.relation),
            e.direction,
            e.weight
        );
    }

    for (a, b) in [
        ("driving", "road"),
        ("car", "destination"),
        ("car", "library"),
    ] {
        let d = kg.hop_distance_capped(kg.require(a)?, kg.require(b)?)?;
        println!("hop({a}, {b}) = {d:?}");
    }

    let mut snapshot = Vec::new();
    kg.write_binary(&mut snapshot)?;
    let back = KnowledgeGraph::read_binary(snapshot.as_slice())?;
    println!(
        "binary snapshot: {} bytes, identical triples: {}",
        snapshot.len(),
        back.triples() == kg.triples()
    );
    Ok(())
}
