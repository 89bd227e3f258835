//! Train an indirect-relation scorer on a forest of stars: leaves sharing a
//! hub are positives, leaves of different stars are negatives.
//!
//! `cargo run --release --example pretrain_indirect -- [key=value ...]`

use kgrel::encoder::save_encoder;
use kgrel::pretrain::{random_word_table, train, RelationKind, TrainConfig};
use kgrel::synthetic::star_forest;

fn main() -> kgrel::Result<()> {
    let kg = star_forest(20, 6)?;
    println!(
        "{} concepts, {} triples",
        kg.num_concepts(),
        kg.num_triples()
    );
    let mut cfg = TrainConfig {
        kind: RelationKind::Indirect,
        epochs: 30,
        learning_rate: 3e-3,
        margin: 1.0,
        hidden: 16,
        word_dim: 16,
        neighbor_cap: 16,
        batch_size: 64,
        heldout_fraction: 0.1,
        seed: 1,
        ..TrainConfig::default()
    };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| kgrel::Error::Config(format!("expected key=value, got {arg:?}")))?;
        cfg.set(k, v)?;
    }
    let run = train(&kg, random_word_table(&kg, &cfg), &cfg)?;
    for e in run.epochs() {
        println!(
            "epoch {:>2}  loss {:.4}  held-out accuracy {:.3}",
            e.epoch,
            e.mean_loss,
            e.heldout_accuracy.unwrap_or(f64::NAN)
        );
    }
    let mut checkpoint = Vec::new();
    save_encoder(&mut checkpoint, &run.params, &kg, "indirect")?;
    println!("checkpoint size {} bytes", checkpoint.len());
    Ok(())
}
