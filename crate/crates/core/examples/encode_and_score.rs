//! Build a random encoder over a small graph, inspect the two halves of a
//! concept encoding, and score concept pairs.
//!
//! `cargo run --example encode_and_score`

use kgrel::encoder::EncoderParams;
use kgrel::pretrain::{random_word_table, TrainConfig};
use kgrel::{KnowledgeGraph, NeighborMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kgrel::Result<()> {
    let kg = KnowledgeGraph::from_triples(&[
        ("HasPrerequisite", "driving", "a license", 1.0),
        ("HasSubevent", "driving", "getting to a destination", 1.0),
        ("UsedFor", "a car", "driving", 1.0),
        ("AtLocation", "driving", "road", 1.0),
    ])?;
    let cfg = TrainConfig {
        hidden: 4,
        word_dim: 6,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = EncoderParams::random(
        random_word_table(&kg, &cfg),
        kg.relations().to_vec(),
        cfg.hidden,
        cfg.neighbor_cap,
        &mut rng,
    );
    println!(
        "{} parameters, {} composition slots",
        params.num_params(),
        params.slots.len()
    );

    let enc = params.bind(&kg)?;
    let driving = kg.require("driving")?;
    let e = enc.encode_concept(driving, NeighborMode::TopK)?;
    println!("word part     {:.3?}", e.word);
    println!("neighbor part {:.3?}", e.neighbor);

    for other in ["a license", "road", "a car", "getting to a destination"] {
        let s = enc.score_pair(driving, kg.require(other)?, NeighborMode::TopK)?;
        println!("score(driving, {other}) = {s:+.4}");
    }
    Ok(())
}
