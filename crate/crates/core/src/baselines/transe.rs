//! Translation embeddings: a triple `(h, r, t)` is plausible when
//! `e(h) + w(r)` lands near `e(t)`.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_container, write_container, SegmentReader};
use crate::error::{Error, Result};
use crate::kb::{ConceptId, KnowledgeGraph, RelationId};
use crate::qa::PairScorer;

pub const TRANSE_KIND: &str = "transe";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            other => Err(Error::Config(format!("unknown norm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransEConfig {
    pub dim: usize,
    pub norm: Norm,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TransEConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            norm: Norm::L2,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TransEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.batch_size == 0 {
            return Err(Error::Config("dim and batch_size must be positive".into()));
        }
        if !(self.margin >= 0.0) || !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite()
        {
            return Err(Error::Config(
                "margin and learning_rate must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransEParams {
    pub dim: usize,
    pub norm: Norm,
    pub margin: f64,
    /// `num_concepts × dim`, row-major.
    pub entities: Vec<f64>,
    /// `num_relations × dim`, row-major.
    pub relations: Vec<f64>,
}

impl TransEParams {
    pub fn num_entities(&self) -> usize {
        self.entities.len() / self.dim
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len() / self.dim
    }

    pub fn entity(&self, c: ConceptId) -> Result<&[f64]> {
        if c.index() >= self.num_entities() {
            return Err(Error::UnknownConcept(c.0));
        }
        Ok(&self.entities[c.index() * self.dim..(c.index() + 1) * self.dim])
    }

    pub fn relation(&self, r: RelationId) -> Result<&[f64]> {
        if r.index() >= self.num_relations() {
            return Err(Error::InvalidArgument(format!(
                "unknown relation id {}",
                r.0
            )));
        }
        Ok(&self.relations[r.index() * self.dim..(r.index() + 1) * self.dim])
    }

    /// `‖e(h) + w(r) − e(t)‖` under the configured norm.
    pub fn distance(&self, h: ConceptId, r: RelationId, t: ConceptId) -> Result<f64> {
        Ok(distance(
            self.norm,
            self.entity(h)?,
            self.relation(r)?,
            self.entity(t)?,
        ))
    }
}

fn distance(norm: Norm, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let it = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
    match norm {
        Norm::L1 => it.map(f64::abs).sum(),
        Norm::L2 => it.map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Gradient of the distance with respect to `h + r − t`.
fn distance_grad(norm: Norm, h: &[f64], r: &[f64], t: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = h
        .iter()
        .zip(r)
        .zip(t)
        .map(|((h, r), t)| h + r - t)
        .collect();
    match norm {
        Norm::L1 => v
            .iter()
            .map(|x| {
                if *x > 0.0 {
                    1.0
                } else if *x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
        Norm::L2 => {
            let d = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if d == 0.0 {
                vec![0.0; v.len()]
            } else {
                v.iter().map(|x| x / d).collect()
            }
        }
    }
}

fn normalize(row: &mut [f64]) {
    let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        row.iter_mut().for_each(|x| *x /= n);
    }
}

#[derive(Debug, Clone)]
pub struct TransERun {
    pub config: TransEConfig,
    /// Mean hinge loss of each epoch.
    pub loss_history: Vec<f64>,
    pub params: TransEParams,
}

/// Random unit-norm initialization.
pub fn transe_init(kg: &KnowledgeGraph, config: &TransEConfig) -> TransEParams {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.dim;
    let bound = 6.0 / (k as f64).sqrt();
    let mut draw = |n: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-bound..bound)).collect();
        v.chunks_mut(k).for_each(normalize);
        v
    };
    let relations = draw(kg.num_relations());
    let entities = draw(kg.num_concepts());
    TransEParams {
        dim: k,
        norm: config.norm,
        margin: config.margin,
        entities,
        relations,
    }
}

/// Minibatch SGD on `max(0, margin + d(h+r, t) − d(h'+r, t'))`, corrupting
/// the head or the tail uniformly. Touched entities are renormalized after
/// every batch.
pub fn transe_train(kg: &KnowledgeGraph, config: &TransEConfig) -> Result<TransERun> {
    config.validate()?;
    if kg.num_triples() == 0 {
        return Err(Error::Data("the knowledge graph has no triples".into()));
    }
    if kg.num_concepts() < 2 {
        return Err(Error::Data(
            "need at least two concepts to corrupt triples".into(),
        ));
    }
    let mut params = transe_init(kg, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7a5e_7a5e);
    let k = config.dim;
    let n = kg.num_concepts() as u32;
    let mut order: Vec<usize> = (0..kg.num_triples()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut g_ent: HashMap<usize, Vec<f64>> = HashMap::new();
            let mut g_rel: HashMap<usize, Vec<f64>> = HashMap::new();
            for &ti in batch {
                let t = kg.triples()[ti];
                let (h, r, tl) = (t.subject.index(), t.relation.index(), t.object.index());
                let corrupt_head = rng.gen_bool(0.5);
                let mut replacement = rng.gen_range(0..n - 1) as usize;
                let original = if corrupt_head { h } else { tl };
                if replacement >= original {
                    replacement += 1;
                }
                let (h2, t2) = if corrupt_head {
                    (replacement, tl)
                } else {
                    (h, replacement)
                };
                let e = |i: usize| &params.entities[i * k..(i + 1) * k];
                let w = &params.relations[r * k..(r + 1) * k];
                let d_pos = distance(params.norm, e(h), w, e(tl));
                let d_neg = distance(params.norm, e(h2), w, e(t2));
                let loss = (config.margin + d_pos - d_neg).max(0.0);
                total += loss;
                if loss > 0.0 {
                    let gp = distance_grad(params.norm, e(h), w, e(tl));
                    let gn = distance_grad(params.norm, e(h2), w, e(t2));
                    let acc = |map: &mut HashMap<usize, Vec<f64>>, i: usize, g: &[f64], s: f64| {
                        let row = map.entry(i).or_insert_with(|| vec![0.0; k]);
                        row.iter_mut().zip(g).for_each(|(a, b)| *a += s * b);
                    };
                    acc(&mut g_ent, h, &gp, 1.0);
                    acc(&mut g_ent, tl, &gp, -1.0);
                    acc(&mut g_rel, r, &gp, 1.0);
                    acc(&mut g_ent, h2, &gn, -1.0);
                    acc(&mut g_ent, t2, &gn, 1.0);
                    acc(&mut g_rel, r, &gn, -1.0);
                }
            }
            let lr = config.learning_rate;
            let mut touched: Vec<usize> = g_ent.keys().copied().collect();
            touched.sort_unstable();
            for i in &touched {
                let g = &g_ent[i];
                let row = &mut params.entities[i * k..(i + 1) * k];
                row.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
                normalize(row);
            }
            let mut rels: Vec<usize> = g_rel.keys().copied().collect();
            rels.sort_unstable();
            for i in rels {
                let g = &g_rel[&i];
                params.relations[i * k..(i + 1) * k]
                    .iter_mut()
                    .zip(g)
                    .for_each(|(p, g)| *p -= lr * g);
            }
        }
        let mean = total / order.len() as f64;
        if !mean.is_finite()
            || params
                .entities
                .iter()
                .chain(&params.relations)
                .any(|v| !v.is_finite())
        {
            return Err(Error::Numerical(format!(
                "non-finite TransE loss at epoch {}",
                epoch + 1
            )));
        }
        loss_history.push(mean);
    }
    Ok(TransERun {
        config: config.clone(),
        loss_history,
        params,
    })
}

/// `max_r −‖e(a) + w(r) − e(b)‖`. Never positive; not symmetric.
pub fn transe_pair_score(a: ConceptId, b: ConceptId, params: &TransEParams) -> Result<f64> {
    let (ea, eb) = (params.entity(a)?, params.entity(b)?);
    if params.num_relations() == 0 {
        return Err(Error::InvalidArgument(
            "TransE model has no relations".into(),
        ));
    }
    Ok(params
        .relations
        .chunks(params.dim)
        .map(|w| -distance(params.norm, ea, w, eb))
        .fold(f64::NEG_INFINITY, f64::max))
}

pub struct TransEScorer {
    params: TransEParams,
}

impl TransEScorer {
    /// Fails when the model's entity table does not cover `kg`.
    pub fn new(params: TransEParams, kg: &KnowledgeGraph) -> Result<Self> {
        if params.num_entities() != kg.num_concepts() {
            return Err(Error::Config(format!(
                "TransE model has {} entities but the graph has {} concepts",
                params.num_entities(),
                kg.num_concepts()
            )));
        }
        if params.num_relations() == 0 {
            return Err(Error::Config("TransE model has no relations".into()));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &TransEParams {
        &self.params
    }
}

impl PairScorer for TransEScorer {
    fn name(&self) -> &str {
        "transe"
    }

    fn score(&self, a: ConceptId, b: ConceptId) -> f64 {
        transe_pair_score(a, b, &self.params).expect("concept id covered by the model")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TransEHeader {
    dim: usize,
    norm: Norm,
    margin: f64,
    relations: Vec<String>,
    concepts: Vec<String>,
}

pub fn save_transe<W: Write>(w: W, params: &TransEParams, kg: &KnowledgeGraph) -> Result<()> {
    if params.num_entities() != kg.num_concepts() || params.num_relations() != kg.num_relations() {
        return Err(Error::InvalidArgument(
            "TransE model does not match the graph".into(),
        ));
    }
    let header = TransEHeader {
        dim: params.dim,
        norm: params.norm,
        margin: params.margin,
        relations: kg.relations().to_vec(),
        concepts: kg.concepts().iter().map(|c| c.surface.clone()).collect(),
    };
    write_container(
        w,
        TRANSE_KIND,
        &header,
        &[
            ("entities".to_string(), params.entities.as_slice()),
            ("relations".to_string(), params.relations.as_slice()),
        ],
    )
}

/// Load a model and check it against the graph it will score.
pub fn load_transe<R: Read>(r: R, kg: &KnowledgeGraph) -> Result<TransEParams> {
    let (h, segments): (TransEHeader, _) = read_container(r, TRANSE_KIND)?;
    let same_concepts = h.concepts.len() == kg.num_concepts()
        && h.concepts
            .iter()
            .zip(kg.concepts())
            .all(|(a, b)| *a == b.surface);
    if !same_concepts || h.relations != kg.relations() {
        return Err(Error::Config(
            "TransE checkpoint was trained on a different graph".into(),
        ));
    }
    if h.dim == 0 {
        return Err(Error::Format("TransE dim must be positive".into()));
    }
    let mut seg = SegmentReader::new(segments);
    let entities = seg.take("entities", h.concepts.len() * h.dim)?;
    let relations = seg.take("relations", h.relations.len() * h.dim)?;
    seg.finish()?;
    Ok(TransEParams {
        dim: h.dim,
        norm: h.norm,
        margin: h.margin,
        entities,
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(norm: Norm) -> (KnowledgeGraph, TransEParams) {
        let kg =
            KnowledgeGraph::from_triples(&[("R", "a", "b", 1.0), ("S", "b", "c", 1.0)]).unwrap();
        let params = TransEParams {
            dim: 2,
            norm,
            margin: 1.0,
            entities: vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0],
            relations: vec![1.0, 0.0, 0.5, 0.5],
        };
        (kg, params)
    }

    #[test]
    fn exact_translation_scores_zero() {
        let (kg, p) = tiny(Norm::L2);
        let (a, b) = (kg.require("a").unwrap(), kg.require("b").unwrap());
        assert_eq!(transe_pair_score(a, b, &p).unwrap(), 0.0);
        assert!(transe_pair_score(b, a, &p).unwrap() < 0.0);
    }

    #[test]
    fn pair_score_is_brute_force_max() {
        for norm in [Norm::L1, Norm::L2] {
            let (kg, p) = tiny(norm);
            for a in 0..3u32 {
                for b in 0..3u32 {
                    let (ca, cb) = (ConceptId(a), ConceptId(b));
                    let mut best = f64::NEG_INFINITY;
                    for r in 0..2u32 {
                        let ea = p.entity(ca).unwrap();
                        let eb = p.entity(cb).unwrap();
                        let w = p.relation(RelationId(r)).unwrap();
                        let d: f64 = match norm {
                            Norm::L1 => (0..2).map(|i| (ea[i] + w[i] - eb[i]).abs()).sum(),
                            Norm::L2 => (0..2)
                                .map(|i| (ea[i] + w[i] - eb[i]).powi(2))
                                .sum::<f64>()
                                .sqrt(),
                        };
                        best = best.max(-d);
                    }
                    let got = transe_pair_score(ca, cb, &p).unwrap();
                    assert_eq!(got, best);
                    assert!(got <= 0.0);
                }
            }
            assert!(matches!(
                transe_pair_score(ConceptId(9), ConceptId(0), &p),
                Err(Error::UnknownConcept(9))
            ));
            let _ = kg;
        }
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let kg = KnowledgeGraph::from_triples(&[
            ("R", "a", "b", 1.0),
            ("R", "b", "c", 1.0),
            ("S", "c", "d", 1.0),
        ])
        .unwrap();
        let cfg = TransEConfig {
            dim: 8,
            learning_rate: 0.0,
            epochs: 3,
            ..Default::default()
        };
        let run = transe_train(&kg, &cfg).unwrap();
        let init = transe_init(&kg, &cfg);
        // Renormalizing an already unit row may move the last bit.
        assert_eq!(run.params.relations, init.relations);
        for (a, b) in run.params.entities.iter().zip(&init.entities) {
            assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn entities_stay_unit_norm_and_checkpoint_round_trips() {
        let kg = KnowledgeGraph::from_triples(&[
            ("R", "a", "b", 1.0),
            ("R", "b", "c", 1.0),
            ("S", "c", "d", 1.0),
        ])
        .unwrap();
        let cfg = TransEConfig {
            dim: 8,
            epochs: 5,
            learning_rate: 0.1,
            ..Default::default()
        };
        let run = transe_train(&kg, &cfg).unwrap();
        for row in run.params.entities.chunks(8) {
            let n: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        save_transe(&mut buf, &run.params, &kg).unwrap();
        let back = load_transe(buf.as_slice(), &kg).unwrap();
        assert_eq!(back, run.params);
        let other = KnowledgeGraph::from_triples(&[("R", "x", "y", 1.0)]).unwrap();
        assert!(load_transe(buf.as_slice(), &other).is_err());
    }

    #[test]
    fn empty_graph_is_rejected() {
        let kg = KnowledgeGraph::builder().build();
        assert!(matches!(
            transe_train(&kg, &TransEConfig::default()),
            Err(Error::Data(_))
        ));
    }
}
