//! Margin-ranking pretraining loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::backprop::batch_pass;
use super::config::TrainConfig;
use super::optim::Adam;
use super::sampling::{draw_negative, positive_pool, PairSample, Positive};
use crate::encoder::{EncoderParams, EncoderScorer, WordVectorTable};
use crate::error::{Error, Result};
use crate::kb::{ConceptId, KnowledgeGraph, NeighborMode};
use crate::qa::PairScorer;

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub config: TrainConfig,
    /// Mean per-sample loss of each epoch.
    pub loss_history: Vec<f64>,
    /// Held-out ranking accuracy after each epoch (empty when nothing is held out).
    pub heldout_accuracy: Vec<f64>,
    /// Positive pairs kept out of training, with the fixed negatives used
    /// for `heldout_accuracy`.
    pub heldout: Vec<PairSample>,
    pub params: EncoderParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_loss: f64,
    pub heldout_accuracy: Option<f64>,
}

impl TrainingRun {
    pub fn epochs(&self) -> Vec<EpochSummary> {
        self.loss_history
            .iter()
            .enumerate()
            .map(|(i, &l)| EpochSummary {
                epoch: i + 1,
                mean_loss: l,
                heldout_accuracy: self.heldout_accuracy.get(i).copied(),
            })
            .collect()
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.heldout_accuracy.last().copied()
    }
}

/// Vocabulary of every token used by some concept, in first-seen order.
pub fn graph_vocabulary(kg: &KnowledgeGraph) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    kg.concepts()
        .iter()
        .flat_map(|c| c.tokens.iter())
        .filter(|t| seen.insert(t.as_str()))
        .cloned()
        .collect()
}

/// Random word table over the graph vocabulary, for runs without
/// pretrained vectors.
pub fn random_word_table(kg: &KnowledgeGraph, config: &TrainConfig) -> WordVectorTable {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 0x5eed_0001, 0, 0));
    WordVectorTable::random(
        graph_vocabulary(kg),
        config.word_dim,
        config.word_init_scale,
        &mut rng,
    )
}

/// Initialize parameters around `words` and train them.
pub fn train(
    kg: &KnowledgeGraph,
    words: WordVectorTable,
    config: &TrainConfig,
) -> Result<TrainingRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 0x5eed_0002, 0, 0));
    let params = EncoderParams::random(
        words,
        kg.relations().to_vec(),
        config.hidden,
        config.neighbor_cap,
        &mut rng,
    );
    train_from(kg, params, config)
}

/// Train starting from the given parameters. `config.hidden` and
/// `config.neighbor_cap` are ignored in favour of the parameters' own shape.
pub fn train_from(
    kg: &KnowledgeGraph,
    mut params: EncoderParams,
    config: &TrainConfig,
) -> Result<TrainingRun> {
    config.validate()?;
    params.bind(kg)?;
    let kind = config.kind;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pool = positive_pool(kg, kind, config.pairs_per_epoch, &mut rng)?;

    let mut held = (pool.len() as f64 * config.heldout_fraction).floor() as usize;
    if held == 0 && config.heldout_fraction > 0.0 && pool.len() >= 2 {
        held = 1;
    }
    let heldout_pos: Vec<Positive> = pool.split_off(pool.len() - held);
    let heldout: Vec<PairSample> = heldout_pos
        .iter()
        .map(|p| {
            Ok(PairSample {
                anchor: p.anchor,
                positive: p.positive,
                negative: draw_negative(kg, p.anchor, kind, &mut rng)?,
                kind,
            })
        })
        .collect::<Result<_>>()?;

    let threads = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut adam = Adam::new(&params, config.learning_rate);
    adam.weight_decay = config.weight_decay;
    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut heldout_accuracy = Vec::new();
    for epoch in 0..config.epochs {
        pool.shuffle(&mut rng);
        let mut samples = Vec::with_capacity(pool.len() * config.negatives_per_positive);
        for p in &pool {
            // Fresh orientation each epoch so both endpoints serve as anchors.
            let (anchor, positive) = if rng.gen_bool(0.5) {
                (p.anchor, p.positive)
            } else {
                (p.positive, p.anchor)
            };
            for _ in 0..config.negatives_per_positive {
                samples.push(PairSample {
                    anchor,
                    positive,
                    negative: draw_negative(kg, anchor, kind, &mut rng)?,
                    kind,
                });
            }
        }
        let mut total = 0.0;
        for (b, batch) in samples.chunks(config.batch_size).enumerate() {
            let seed = config.seed;
            let mode = move |c: ConceptId| {
                NeighborMode::Sample(mix(seed, epoch as u64, b as u64, c.0 as u64))
            };
            let outcome = {
                let encoder = params.bind(kg)?;
                batch_pass(&encoder, batch, config.margin, &mode, threads.as_ref())?
            };
            if !outcome.loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss {} at epoch {}, batch {}",
                    outcome.loss,
                    epoch + 1,
                    b + 1
                )));
            }
            total += outcome.loss * batch.len() as f64;
            adam.step(&mut params, &outcome.grads, !config.freeze_words);
        }
        if !params.all_finite() {
            return Err(Error::Numerical(format!(
                "parameters became non-finite during epoch {}",
                epoch + 1
            )));
        }
        loss_history.push(total / samples.len().max(1) as f64);
        if !heldout.is_empty() {
            heldout_accuracy.push(ranking_accuracy(kg, &params, &heldout)?);
        }
    }

    Ok(TrainingRun {
        config: config.clone(),
        loss_history,
        heldout_accuracy,
        heldout,
        params,
    })
}

/// Fraction of samples whose positive pair scores strictly above the
/// negative one, using inference-mode encodings.
pub fn ranking_accuracy(
    kg: &KnowledgeGraph,
    params: &EncoderParams,
    samples: &[PairSample],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to rank".into()));
    }
    let scorer = EncoderScorer::new(params, kg, "eval")?;
    let correct = samples
        .iter()
        .filter(|s| scorer.score(s.anchor, s.positive) > scorer.score(s.anchor, s.negative))
        .count();
    Ok(correct as f64 / samples.len() as f64)
}

/// splitmix64-style seed derivation.
pub(crate) fn mix(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut z = seed;
    for v in [a, b, c] {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(v);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
