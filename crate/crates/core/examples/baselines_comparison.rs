//! PMI, TransE and the trained encoders through the same QA pipeline on the
//! bundled fixture. Each scorer gets its own grid-searched weights.
//!
//! ```text
//! cargo run --release --example baselines_comparison
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use kgrel::baselines::{transe_train, PmiScorer, PmiTable, TransEConfig, TransEScorer};
use kgrel::encoder::EncoderScorer;
use kgrel::pretrain::{random_word_table, train, RelationKind, TrainConfig};
use kgrel::qa::{grid_search, load_dataset, CombinationWeights, PairScorer, ScoringContext};
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

    let pmi = PmiScorer::new(PmiTable::from_graph(&kg));
    let transe_run = transe_train(
        &kg,
        &TransEConfig {
            dim: 20,
            epochs: 300,
            batch_size: 16,
            ..TransEConfig::default()
        },
    )?;
    let transe = TransEScorer::new(transe_run.params, &kg)?;

    let cfg = TrainConfig {
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
    let ind_cfg = TrainConfig {
        kind: RelationKind::Indirect,
        ..cfg.clone()
    };
    let dir_run = train(&kg, random_word_table(&kg, &cfg), &cfg)?;
    let ind_run = train(&kg, random_word_table(&kg, &ind_cfg), &ind_cfg)?;
    let dir = EncoderScorer::new(&dir_run.params, &kg, "encoder-direct")?;
    let ind = EncoderScorer::new(&ind_run.params, &kg, "encoder-indirect")?;

    let systems: [(&str, &dyn PairScorer, Option<&dyn PairScorer>); 3] = [
        ("pmi", &pmi, None),
        ("transe", &transe, None),
        ("encoder", &dir, Some(&ind)),
    ];
    println!("{:<10} {:>8}  weights", "scorer", "accuracy");
    for (label, d, i) in systems {
        let ctx = ScoringContext {
            kg: &kg,
            retriever: Retriever::new(),
            dir: Some(d),
            ind: i,
        };
        let g = grid_search(&data, &ctx, &CombinationWeights::default())?;
        println!(
            "{label:<10} {:>8.3}  alpha={} beta_dir={} beta_ind={}",
            g.best_accuracy, g.best.alpha, g.best.beta_dir, g.best.beta_ind
        );
    }
    Ok(())
}
