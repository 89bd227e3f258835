//! Train direct and indirect scorers on the bundled fixture KB, then rerank
//! the fixture questions: document scores alone, each commonsense channel
//! alone, and grid-searched weights.
//!
//! ```text
//! cargo run --release --example qa_rerank [key=value ...]
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use kgrel::encoder::EncoderScorer;
use kgrel::pretrain::{random_word_table, train, RelationKind, TrainConfig};
use kgrel::qa::{evaluate, grid_search, load_dataset, CombinationWeights, ScoringContext};
use kgrel::text::Retriever;
use kgrel::KnowledgeGraph;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn main() -> kgrel::Result<()> {
    let kg = KnowledgeGraph::load_path(&fixture("commonsense_kb.tsv"))?;
    let data = load_dataset(BufReader::new(File::open(fixture("commonsense_qa.jsonl"))?))?;
    println!(
        "{} concepts, {} triples, {} questions",
        kg.num_concepts(),
        kg.num_triples(),
        data.len()
    );

    let mut cfg = TrainConfig {
        epochs: 200,
        learning_rate: 1e-2,
        margin: 1.0,
        hidden: 8,
        word_dim: 8,
        batch_size: 16,
        heldout_fraction: 0.0,
        seed: 3,
        ..TrainConfig::default()
    };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| kgrel::Error::Config(format!("expected key=value, got {arg:?}")))?;
        cfg.set(k, v)?;
    }
    let dir_run = train(&kg, random_word_table(&kg, &cfg), &cfg)?;
    let ind_cfg = TrainConfig {
        kind: RelationKind::Indirect,
        ..cfg.clone()
    };
    let ind_run = train(&kg, random_word_table(&kg, &ind_cfg), &ind_cfg)?;
    let dir = EncoderScorer::new(&dir_run.params, &kg, "encoder-direct")?;
    let ind = EncoderScorer::new(&ind_run.params, &kg, "encoder-indirect")?;
    let ctx = ScoringContext {
        kg: &kg,
        retriever: Retriever::new(),
        dir: Some(&dir),
        ind: Some(&ind),
    };

    let base = CombinationWeights::default();
    for (label, a, d, i) in [
        ("doc only", 1.0, 0.0, 0.0),
        ("direct only", 0.0, 1.0, 0.0),
        ("indirect only", 0.0, 0.0, 1.0),
    ] {
        let r = evaluate(&data, &ctx, &base.with_weights(a, d, i))?;
        println!("{label:<14} accuracy {:.3}", r.accuracy);
    }
    let g = grid_search(&data, &ctx, &base)?;
    let r = evaluate(&data, &ctx, &g.best)?;
    println!(
        "grid-searched  accuracy {:.3} (alpha={} beta_dir={} beta_ind={})",
        r.accuracy, g.best.alpha, g.best.beta_dir, g.best.beta_ind
    );
    print!("{}", r.render_table());
    Ok(())
}
