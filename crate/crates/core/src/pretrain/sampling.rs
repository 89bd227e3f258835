//! Positive/negative concept pair sampling for the two relation kinds.
//!
//! Direct: positives are KB edges (random orientation), negatives are
//! concepts with no edge to the anchor. Indirect: positives sit at exactly
//! two hops (shared pivot, not adjacent), negatives more than two hops away.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{ConceptId, HopDistance, KnowledgeGraph};

/// Rejection budget per drawn pair.
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Direct,
    Indirect,
}

impl RelationKind {
    /// Checkpoint file suffix.
    pub fn suffix(self) -> &'static str {
        match self {
            RelationKind::Direct => "dir",
            RelationKind::Indirect => "ind",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Direct => "direct",
            RelationKind::Indirect => "indirect",
        }
    }

    /// Is `(a, b)` a positive pair for this kind?
    pub fn is_positive(self, d: HopDistance) -> bool {
        match self {
            RelationKind::Direct => d == HopDistance::One,
            RelationKind::Indirect => d == HopDistance::Two,
        }
    }

    /// Is `(a, b)` an admissible negative for this kind?
    pub fn is_negative(self, d: HopDistance) -> bool {
        match self {
            RelationKind::Direct => d != HopDistance::One,
            RelationKind::Indirect => d == HopDistance::MoreThanTwo,
        }
    }
}

impl std::str::FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" | "dir" => Ok(RelationKind::Direct),
            "indirect" | "ind" => Ok(RelationKind::Indirect),
            other => Err(Error::Config(format!("unknown relation kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairSample {
    pub anchor: ConceptId,
    pub positive: ConceptId,
    pub negative: ConceptId,
    pub kind: RelationKind,
}

/// A positive pair without its negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Positive {
    pub anchor: ConceptId,
    pub positive: ConceptId,
}

fn random_edge_pair<R: Rng>(kg: &KnowledgeGraph, rng: &mut R) -> (ConceptId, ConceptId) {
    let t = kg.triples()[rng.gen_range(0..kg.num_triples())];
    if rng.gen_bool(0.5) {
        (t.subject, t.object)
    } else {
        (t.object, t.subject)
    }
}

fn require_triples(kg: &KnowledgeGraph) -> Result<()> {
    if kg.num_triples() == 0 {
        return Err(Error::Sampling("the knowledge graph has no triples".into()));
    }
    Ok(())
}

pub(crate) fn draw_direct_positive<R: Rng>(kg: &KnowledgeGraph, rng: &mut R) -> Positive {
    let (anchor, positive) = random_edge_pair(kg, rng);
    Positive { anchor, positive }
}

pub(crate) fn draw_indirect_positive<R: Rng>(kg: &KnowledgeGraph, rng: &mut R) -> Result<Positive> {
    for _ in 0..MAX_REJECTIONS {
        let (anchor, pivot) = random_edge_pair(kg, rng);
        let around = kg.neighbor_ids(pivot);
        let candidate = around[rng.gen_range(0..around.len())];
        if candidate != anchor && !kg.are_adjacent(anchor, candidate) {
            return Ok(Positive {
                anchor,
                positive: candidate,
            });
        }
    }
    Err(Error::Sampling(format!(
        "no two-hop pair found after {MAX_REJECTIONS} attempts"
    )))
}

pub(crate) fn draw_positive<R: Rng>(
    kg: &KnowledgeGraph,
    kind: RelationKind,
    rng: &mut R,
) -> Result<Positive> {
    match kind {
        RelationKind::Direct => Ok(draw_direct_positive(kg, rng)),
        RelationKind::Indirect => draw_indirect_positive(kg, rng),
    }
}

/// Uniform concept that is an admissible negative for `anchor`.
pub(crate) fn draw_negative<R: Rng>(
    kg: &KnowledgeGraph,
    anchor: ConceptId,
    kind: RelationKind,
    rng: &mut R,
) -> Result<ConceptId> {
    let n = kg.num_concepts() as u32;
    for _ in 0..MAX_REJECTIONS {
        let c = ConceptId(rng.gen_range(0..n));
        if c != anchor && kind.is_negative(kg.hop_class(anchor, c)) {
            return Ok(c);
        }
    }
    Err(Error::Sampling(format!(
        "no {} negative found for {:?} after {MAX_REJECTIONS} attempts",
        kind.as_str(),
        kg.surface(anchor)
    )))
}

pub fn sample(
    kg: &KnowledgeGraph,
    kind: RelationKind,
    n: usize,
    seed: u64,
) -> Result<Vec<PairSample>> {
    require_triples(kg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = draw_positive(kg, kind, &mut rng)?;
            let negative = draw_negative(kg, p.anchor, kind, &mut rng)?;
            Ok(PairSample {
                anchor: p.anchor,
                positive: p.positive,
                negative,
                kind,
            })
        })
        .collect()
}

/// `n` direct samples: KB edges against non-adjacent concepts.
pub fn sample_direct(kg: &KnowledgeGraph, n: usize, seed: u64) -> Result<Vec<PairSample>> {
    sample(kg, RelationKind::Direct, n, seed)
}

/// `n` indirect samples: two-hop pairs against pairs more than two hops apart.
pub fn sample_indirect(kg: &KnowledgeGraph, n: usize, seed: u64) -> Result<Vec<PairSample>> {
    sample(kg, RelationKind::Indirect, n, seed)
}

/// The fixed positive pool a training run iterates over each epoch.
///
/// Direct runs use every adjacent concept pair once (however many triples
/// link it); the trainer re-draws each pair's orientation every epoch; indirect runs draw `size` two-hop
/// pairs (default: one per triple).
pub(crate) fn positive_pool<R: Rng>(
    kg: &KnowledgeGraph,
    kind: RelationKind,
    size: Option<usize>,
    rng: &mut R,
) -> Result<Vec<Positive>> {
    require_triples(kg)?;
    let mut pool = match (kind, size) {
        (RelationKind::Direct, None) => {
            let mut seen = std::collections::HashSet::new();
            let mut pool = Vec::new();
            for t in kg.triples() {
                let key = (t.subject.min(t.object), t.subject.max(t.object));
                if !seen.insert(key) {
                    continue;
                }
                let (anchor, positive) = if rng.gen_bool(0.5) {
                    (t.subject, t.object)
                } else {
                    (t.object, t.subject)
                };
                pool.push(Positive { anchor, positive });
            }
            pool
        }
        (kind, size) => {
            let n = size.unwrap_or(kg.num_triples());
            (0..n)
                .map(|_| draw_positive(kg, kind, rng))
                .collect::<Result<Vec<_>>>()?
        }
    };
    pool.shuffle(rng);
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    fn star_plus_isolated() -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        b.add("HasPrerequisite", "driving", "a license", 1.0)
            .unwrap();
        b.add("HasSubevent", "driving", "getting to a destination", 1.0)
            .unwrap();
        b.add("UsedFor", "a car", "driving", 1.0).unwrap();
        b.add("AtLocation", "driving", "road", 1.0).unwrap();
        for s in ["moon", "violin", "glacier"] {
            b.add_concept(s).unwrap();
        }
        b.build()
    }

    fn bfs_distance(kg: &KnowledgeGraph, a: ConceptId, b: ConceptId) -> Option<usize> {
        let mut dist = vec![usize::MAX; kg.num_concepts()];
        let mut q = VecDeque::from([a]);
        dist[a.index()] = 0;
        while let Some(c) = q.pop_front() {
            for e in kg.edges(c).unwrap() {
                if dist[e.neighbor.index()] == usize::MAX {
                    dist[e.neighbor.index()] = dist[c.index()] + 1;
                    q.push_back(e.neighbor);
                }
            }
        }
        (dist[b.index()] != usize::MAX).then_some(dist[b.index()])
    }

    #[test]
    fn direct_samples_use_edges_and_non_edges() {
        let kg = star_plus_isolated();
        let edges: HashSet<(ConceptId, ConceptId)> = kg
            .triples()
            .iter()
            .flat_map(|t| [(t.subject, t.object), (t.object, t.subject)])
            .collect();
        let samples = sample_direct(&kg, 4, 11).unwrap();
        assert_eq!(samples.len(), 4);
        for s in &samples {
            assert!(edges.contains(&(s.anchor, s.positive)));
            assert!(!edges.contains(&(s.anchor, s.negative)));
            assert_ne!(s.anchor, s.negative);
        }
        assert_eq!(samples, sample_direct(&kg, 4, 11).unwrap());
    }

    #[test]
    fn complete_graph_has_no_direct_negatives() {
        let kg = KnowledgeGraph::from_triples(&[
            ("R", "a", "b", 1.0),
            ("R", "b", "c", 1.0),
            ("R", "a", "c", 1.0),
        ])
        .unwrap();
        assert!(matches!(sample_direct(&kg, 1, 0), Err(Error::Sampling(_))));
        assert!(matches!(
            sample_indirect(&kg, 1, 0),
            Err(Error::Sampling(_))
        ));
        let empty = KnowledgeGraph::builder().build();
        assert!(matches!(
            sample_direct(&empty, 1, 0),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn indirect_samples_on_star() {
        let kg = star_plus_isolated();
        let driving = kg.require("driving").unwrap();
        let samples = sample_indirect(&kg, 50, 3).unwrap();
        for s in &samples {
            assert_ne!(s.anchor, driving);
            assert_ne!(s.positive, driving);
            assert_eq!(bfs_distance(&kg, s.anchor, s.positive), Some(2));
            assert!(bfs_distance(&kg, s.anchor, s.negative).is_none_or(|d| d > 2));
        }
    }

    #[test]
    fn hop_class_agrees_with_bfs() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.gen_range(2..50);
            let mut b = KnowledgeGraph::builder();
            let ids: Vec<ConceptId> = (0..n)
                .map(|i| b.add_concept(&format!("c{i}")).unwrap())
                .collect();
            for _ in 0..rng.gen_range(0..2 * n) {
                let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if x != y {
                    b.add("R", &format!("c{x}"), &format!("c{y}"), 1.0).unwrap();
                }
            }
            let kg = b.build();
            for &a in &ids {
                for &c in &ids {
                    if a == c {
                        continue;
                    }
                    let expected = match bfs_distance(&kg, a, c) {
                        Some(1) => HopDistance::One,
                        Some(2) => HopDistance::Two,
                        _ => HopDistance::MoreThanTwo,
                    };
                    assert_eq!(kg.hop_distance_capped(a, c).unwrap(), expected);
                }
            }
        }
    }
}
