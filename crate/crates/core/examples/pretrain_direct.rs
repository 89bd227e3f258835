//! Train a direct-relation scorer on a planted two-cluster graph and report
//! held-out ranking accuracy (adjacent pairs vs. random non-adjacent pairs).
//!
//! Any training setting can be overridden as `key=value`:
//!
//! `cargo run --release --example pretrain_direct -- epochs=20 learning_rate=0.003`
//!
//! The defaults take about a minute and a half on one core.

use kgrel::pretrain::{random_word_table, train, RelationKind, TrainConfig};
use kgrel::synthetic::two_cluster_graph;

fn main() -> kgrel::Result<()> {
    let kg = two_cluster_graph(200, 0.3, 7)?;
    println!(
        "{} concepts, {} triples",
        kg.num_concepts(),
        kg.num_triples()
    );

    let mut cfg = TrainConfig {
        kind: RelationKind::Direct,
        epochs: 200,
        learning_rate: 3e-3,
        weight_decay: 0.03,
        margin: 1.0,
        hidden: 32,
        word_dim: 32,
        freeze_words: true,
        neighbor_cap: 128,
        batch_size: 128,
        heldout_fraction: 0.05,
        seed: 1,
        ..TrainConfig::default()
    };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| kgrel::Error::Config(format!("expected key=value, got {arg:?}")))?;
        cfg.set(k, v)?;
    }

    let t = std::time::Instant::now();
    let run = train(&kg, random_word_table(&kg, &cfg), &cfg)?;
    for e in run
        .epochs()
        .iter()
        .filter(|e| e.epoch % 10 == 0 || e.epoch == 1)
    {
        println!(
            "epoch {:>2}  loss {:.4}  held-out accuracy {:.3}",
            e.epoch,
            e.mean_loss,
            e.heldout_accuracy.unwrap_or(f64::NAN)
        );
    }
    println!("trained in {:.1?}", t.elapsed());
    Ok(())
}
