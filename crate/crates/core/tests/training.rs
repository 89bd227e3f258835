mod common;

use common::BfsOracle;
use kgrel::encoder::{save_encoder, EncoderParams};
use kgrel::pretrain::{
    analytic_gradient, gradient_check, random_word_table, sample, sample_direct, sample_indirect,
    train, train_from, RelationKind, TrainConfig,
};
use kgrel::synthetic::{star_forest, two_cluster_graph};
use kgrel::{Error, KnowledgeGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn driving_graph() -> KnowledgeGraph {
    KnowledgeGraph::from_triples(&[
        ("HasPrerequisite", "driving", "a license", 1.0),
        ("RelatedTo", "driving", "road", 1.0),
        ("UsedFor", "a car", "driving", 1.0),
        ("UsedFor", "driving", "getting to a destination", 1.0),
        ("IsA", "a car", "vehicle", 1.0),
        ("UsedFor", "bicycle", "exercise", 1.0),
        ("IsA", "bicycle", "vehicle", 1.0),
    ])
    .unwrap()
}

#[test]
fn dense_two_cluster_graph_is_learned_in_five_epochs() {
    let kg = two_cluster_graph(200, 0.9, 3).unwrap();
    let cfg = TrainConfig {
        epochs: 5,
        learning_rate: 3e-3,
        margin: 1.0,
        hidden: 16,
        word_dim: 16,
        neighbor_cap: 16,
        batch_size: 128,
        seed: 2,
        ..TrainConfig::default()
    };
    let run = train(&kg, random_word_table(&kg, &cfg), &cfg).unwrap();
    let acc = run.final_accuracy().unwrap();
    assert!(acc > 0.9, "held-out accuracy {acc}");
    assert_eq!(run.loss_history.len(), 5);
    assert_eq!(run.heldout_accuracy.len(), 5);
}

#[test]
fn zero_learning_rate_keeps_initial_parameters() {
    let kg = driving_graph();
    let cfg = TrainConfig {
        learning_rate: 0.0,
        epochs: 3,
        hidden: 3,
        word_dim: 4,
        heldout_fraction: 0.0,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let init = EncoderParams::random(
        random_word_table(&kg, &cfg),
        kg.relations().to_vec(),
        3,
        cfg.neighbor_cap,
        &mut rng,
    );
    let run = train_from(&kg, init.clone(), &cfg).unwrap();
    assert_eq!(run.params, init);
}

#[test]
fn same_seed_gives_identical_checkpoints_in_either_thread_mode() {
    let kg = star_forest(4, 5).unwrap();
    let save = |threads: usize, seed: u64| {
        let cfg = TrainConfig {
            kind: RelationKind::Indirect,
            epochs: 4,
            hidden: 4,
            word_dim: 4,
            seed,
            threads,
            ..TrainConfig::default()
        };
        let run = train(&kg, random_word_table(&kg, &cfg), &cfg).unwrap();
        let mut buf = Vec::new();
        save_encoder(&mut buf, &run.params, &kg, "indirect").unwrap();
        buf
    };
    assert_eq!(save(1, 5), save(1, 5));
    assert_eq!(save(2, 5), save(2, 5));
    assert_ne!(save(1, 5), save(1, 6));
}

#[test]
fn training_reduces_loss_on_planted_stars() {
    let kg = star_forest(10, 5).unwrap();
    let cfg = TrainConfig {
        kind: RelationKind::Indirect,
        epochs: 20,
        margin: 1.0,
        learning_rate: 3e-3,
        hidden: 8,
        word_dim: 8,
        ..TrainConfig::default()
    };
    let run = train(&kg, random_word_table(&kg, &cfg), &cfg).unwrap();
    let first = run.loss_history[0];
    let last = *run.loss_history.last().unwrap();
    assert!(last < 0.5 * first, "loss {first} -> {last}");
    for e in run.epochs() {
        assert!(e.mean_loss.is_finite());
    }
}

#[test]
fn empty_graph_and_bad_config_are_rejected() {
    let empty = KnowledgeGraph::builder().build();
    let cfg = TrainConfig::default();
    let err = train(&empty, random_word_table(&empty, &cfg), &cfg).unwrap_err();
    assert!(matches!(err, Error::Sampling(_)), "{err:?}");

    let kg = driving_graph();
    let bad = TrainConfig {
        margin: 0.0,
        ..TrainConfig::default()
    };
    let err = train(&kg, random_word_table(&kg, &bad), &bad).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err:?}");
}

#[test]
fn sampling_examples() {
    // Driving graph plus three isolated concepts: positives are the four
    // edges, negatives never adjacent.
    let mut b = KnowledgeGraph::builder();
    for (r, s, o) in [
        ("HasPrerequisite", "driving", "a license"),
        ("RelatedTo", "driving", "road"),
        ("UsedFor", "a car", "driving"),
        ("UsedFor", "driving", "getting to a destination"),
    ] {
        b.add(r, s, o, 1.0).unwrap();
    }
    for c in ["moon", "piano", "salt"] {
        b.add_concept(c).unwrap();
    }
    let kg = b.build();
    let samples = sample_direct(&kg, 4, 1).unwrap();
    assert_eq!(samples.len(), 4);
    for s in &samples {
        assert!(kg.are_adjacent(s.anchor, s.positive));
        assert!(!kg.are_adjacent(s.anchor, s.negative));
        assert_ne!(s.anchor, s.negative);
    }
    assert_eq!(samples, sample_direct(&kg, 4, 1).unwrap());

    let triangle = KnowledgeGraph::from_triples(&[
        ("R", "a", "b", 1.0),
        ("R", "b", "c", 1.0),
        ("R", "a", "c", 1.0),
    ])
    .unwrap();
    assert!(matches!(
        sample_indirect(&triangle, 1, 0),
        Err(Error::Sampling(_))
    ));
    assert!(matches!(
        sample_direct(&triangle, 1, 0),
        Err(Error::Sampling(_))
    ));
}

#[test]
fn samples_satisfy_the_bfs_oracle() {
    let kg = two_cluster_graph(60, 0.1, 4).unwrap();
    let mut oracle = BfsOracle::new(&kg);
    for s in sample(&kg, RelationKind::Indirect, 2_000, 8).unwrap() {
        assert_eq!(oracle.distance(s.anchor, s.positive), Some(2));
        assert!(oracle.distance(s.anchor, s.negative).is_none_or(|d| d > 2));
    }
    for s in sample(&kg, RelationKind::Direct, 2_000, 8).unwrap() {
        assert_eq!(oracle.distance(s.anchor, s.positive), Some(1));
        assert_ne!(oracle.distance(s.anchor, s.negative), Some(1));
    }
}

#[test]
fn gradient_check_on_tiny_models() {
    let kg = driving_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for hidden in 1..=4 {
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
        for s in sample(&kg, RelationKind::Direct, 4, hidden as u64).unwrap() {
            let r = gradient_check(&params, &kg, &s, 1.0, 1e-5).unwrap();
            if r.loss > 0.0 {
                assert!(r.max_relative_error < 1e-4, "{r:?}");
            }
        }
    }
}

#[test]
fn inactive_hinge_has_exactly_zero_gradient() {
    let kg = driving_graph();
    let cfg = TrainConfig {
        hidden: 2,
        word_dim: 3,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = EncoderParams::random(
        random_word_table(&kg, &cfg),
        kg.relations().to_vec(),
        2,
        cfg.neighbor_cap,
        &mut rng,
    );
    let s = sample(&kg, RelationKind::Direct, 1, 0).unwrap()[0];
    // A hugely negative margin makes the hinge slack for any scores.
    let (loss, grad) = analytic_gradient(&params, &kg, &s, -1e9).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grad.iter().all(|&g| g == 0.0));
}

#[test]
fn first_epoch_loss_at_zero_init_equals_margin() {
    let kg = star_forest(5, 4).unwrap();
    for kind in [RelationKind::Direct, RelationKind::Indirect] {
        let cfg = TrainConfig {
            kind,
            margin: 0.7,
            epochs: 2,
            hidden: 3,
            word_dim: 4,
            batch_size: 4096,
            ..TrainConfig::default()
        };
        let init = EncoderParams::zeros(
            random_word_table(&kg, &cfg),
            kg.relations().to_vec(),
            3,
            cfg.neighbor_cap,
        );
        let run = train_from(&kg, init, &cfg).unwrap();
        assert!((run.loss_history[0] - 0.7).abs() < 1e-12, "{kind:?}");
    }
}

#[test]
fn doubling_epsilon_keeps_the_verdict() {
    let kg = driving_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = TrainConfig {
        hidden: 2,
        word_dim: 3,
        ..TrainConfig::default()
    };
    let mut checked = 0;
    let mut changed = false;
    for _ in 0..5 {
        let params = EncoderParams::random(
            random_word_table(&kg, &cfg),
            kg.relations().to_vec(),
            2,
            cfg.neighbor_cap,
            &mut rng,
        );
        for s in sample(&kg, RelationKind::Direct, 6, checked as u64).unwrap() {
            let a = gradient_check(&params, &kg, &s, 1.0, 1e-5).unwrap();
            let b = gradient_check(&params, &kg, &s, 1.0, 2e-5).unwrap();
            if a.loss > 0.0 {
                changed |= a.max_relative_error != b.max_relative_error;
                assert_eq!(a.max_relative_error < 1e-4, b.max_relative_error < 1e-4);
                assert!(a.max_relative_error < 1e-4);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
    assert!(changed);
}
