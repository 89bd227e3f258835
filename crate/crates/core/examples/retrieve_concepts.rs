//! Link sentences to KB concepts by n-gram lookup.
//!
//! `cargo run --example retrieve_concepts -- "your sentence here"`

use std::path::PathBuf;

use kgrel::text::{tokenize, Retriever};
use kgrel::KnowledgeGraph;

fn main() -> kgrel::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/commonsense_kb.tsv");
    let kg = KnowledgeGraph::load_path(&path)?;
    let mut sentences: Vec<String> = std::env::args().skip(1).collect();
    if sentences.is_empty() {
        sentences = vec![
            "What does she need before driving? A license.".into(),
            "The driver parked the car in the garage.".into(),
            "Nothing here matches.".into(),
        ];
    }
    for s in &sentences {
        println!("{s}");
        println!("  tokens: {:?}", tokenize(s));
        for (label, r) in [
            ("filtered", Retriever::new()),
            ("unfiltered", Retriever::without_filter()),
        ] {
            let found = r.retrieve(s, &kg);
            let list: Vec<String> = found
                .matches
                .iter()
                .map(|m| format!("{}@{}..{}", m.ngram, m.span.0, m.span.1))
                .collect();
            println!("  {label:<10} {}", list.join(", "));
        }
    }
    Ok(())
}
