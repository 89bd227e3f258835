//! Compare backpropagated gradients with central finite differences on
//! random tiny encoders.
//!
//! `cargo run --release --example gradient_check`

use kgrel::encoder::EncoderParams;
use kgrel::pretrain::{gradient_check, random_word_table, sample, RelationKind, TrainConfig};
use kgrel::KnowledgeGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kgrel::Result<()> {
    let kg = KnowledgeGraph::from_triples(&[
        ("IsA", "car", "vehicle", 1.0),
        ("UsedFor", "car", "driving", 1.0),
        ("HasPrerequisite", "driving", "a license", 1.0),
        ("IsA", "bicycle", "vehicle", 1.0),
        ("UsedFor", "bicycle", "exercise", 1.0),
        ("RelatedTo", "exercise", "health", 1.0),
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in [RelationKind::Direct, RelationKind::Indirect] {
        for hidden in 1..=3 {
            let cfg = TrainConfig {
                hidden,
                word_dim: 3,
                ..TrainConfig::default()
            };
            let params = EncoderParams::random(
                random_word_table(&kg, &cfg),
                kg.relations().to_vec(),
                hidden,
                cfg.neighbor_cap,
                &mut rng,
            );
            for s in sample(&kg, kind, 2, hidden as u64)? {
                let r = gradient_check(&params, &kg, &s, 1.0, 1e-5)?;
                println!(
                    "{kind:?} H={hidden} {} / {}: loss {:.4}, {} params, max rel err {:.2e} at {:?}",
                    kg.surface(s.anchor),
                    kg.surface(s.positive),
                    r.loss,
                    r.num_params,
                    r.max_relative_error,
                    r.worst
                );
            }
        }
    }
    Ok(())
}
