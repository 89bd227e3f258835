//! Concept representation and pairwise relatedness.
//!
//! A concept is encoded twice and the two views are concatenated:
//!
//! * the word part runs a bidirectional LSTM over the concept's tokens and
//!   joins the final forward and backward hidden states (`2H`);
//! * the neighbor part sums `W_slot * word_part(n) + b_slot` over (at most
//!   `K`) graph neighbors `n`, where the slot is picked by the connecting
//!   relation and its direction (`2H`).
//!
//! Two concepts are scored by the dot product of their `4H` encodings.

mod checkpoint;
pub mod lstm;
pub mod words;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use rand::Rng;

pub use checkpoint::{load_encoder, save_encoder, EncoderCheckpoint};
pub use lstm::LstmParams;
pub use words::{load_word_vectors, WordVectorTable};

use crate::error::{Error, Result};
use crate::kb::{ConceptId, Direction, KnowledgeGraph, NeighborMode};
use crate::qa::PairScorer;
use lstm::{add_into, dot};

/// Default neighbor cap `K`.
pub const DEFAULT_NEIGHBOR_CAP: usize = 16;
pub const DEFAULT_WORD_DIM: usize = 50;
pub const DEFAULT_HIDDEN: usize = 50;

/// Relation-specific affine map applied to a neighbor's word encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    /// `2H x 2H`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Composition {
    fn zeros(width: usize) -> Self {
        Self {
            weight: vec![0.0; width * width],
            bias: vec![0.0; width],
        }
    }

    /// `out += W x + count * b`, i.e. the map summed over `count` inputs
    /// whose sum is `x`.
    pub(crate) fn apply_sum_into(&self, x: &[f64], count: usize, out: &mut [f64]) {
        let n = out.len();
        let c = count as f64;
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(&self.weight[r * n..(r + 1) * n], x) + c * self.bias[r];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub words: WordVectorTable,
    pub forward: LstmParams,
    pub backward: LstmParams,
    /// Two slots per relation: `2 * r` forward, `2 * r + 1` inverse.
    pub slots: Vec<Composition>,
    pub relations: Vec<String>,
    pub neighbor_cap: usize,
}

impl EncoderParams {
    /// All LSTM and composition parameters zero.
    pub fn zeros(
        words: WordVectorTable,
        relations: Vec<String>,
        hidden: usize,
        neighbor_cap: usize,
    ) -> Self {
        let d = words.dim();
        let width = 2 * hidden;
        Self {
            forward: LstmParams::zeros(d, hidden),
            backward: LstmParams::zeros(d, hidden),
            slots: (0..2 * relations.len())
                .map(|_| Composition::zeros(width))
                .collect(),
            relations,
            neighbor_cap,
            words,
        }
    }

    /// LSTM weights uniform in `±1/sqrt(H)`, composition matrices uniform in
    /// `±sqrt(3/2H)` (unit-variance preserving), all biases zero.
    pub fn random<R: Rng>(
        words: WordVectorTable,
        relations: Vec<String>,
        hidden: usize,
        neighbor_cap: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(words, relations, hidden, neighbor_cap);
        let d = p.words.dim();
        p.forward = LstmParams::random(d, hidden, rng);
        p.backward = LstmParams::random(d, hidden, rng);
        let bound = (3.0 / (2 * hidden) as f64).sqrt();
        for slot in &mut p.slots {
            for w in &mut slot.weight {
                *w = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    pub fn word_dim(&self) -> usize {
        self.words.dim()
    }

    /// Width of the word and neighbor parts (`2H`).
    pub fn part_width(&self) -> usize {
        2 * self.hidden()
    }

    pub fn slot_index(&self, relation: usize, direction: Direction) -> usize {
        2 * relation + direction.offset()
    }

    /// Named parameter blocks in checkpoint order: word table (unk last),
    /// forward LSTM, backward LSTM, then each slot's weight and bias.
    pub fn segments(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![("words".into(), self.words.data())];
        for (name, lstm) in [("forward", &self.forward), ("backward", &self.backward)] {
            let [wx, wh, b] = lstm.segments();
            out.push((format!("{name}.w_x"), wx));
            out.push((format!("{name}.w_h"), wh));
            out.push((format!("{name}.bias"), b));
        }
        for (i, s) in self.slots.iter().enumerate() {
            out.push((format!("slot{i}.weight"), &s.weight));
            out.push((format!("slot{i}.bias"), &s.bias));
        }
        out
    }

    pub fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.words.data_mut()];
        out.extend(self.forward.segments_mut());
        out.extend(self.backward.segments_mut());
        for s in &mut self.slots {
            out.push(&mut s.weight);
            out.push(&mut s.bias);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.segments().iter().map(|(_, s)| s.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.segments()
            .iter()
            .all(|(_, s)| s.iter().all(|v| v.is_finite()))
    }

    /// Bidirectional LSTM over `tokens`: `[forward final ; backward final]`.
    pub fn encode_words<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot encode an empty token sequence".into(),
            ));
        }
        let rows: Vec<usize> = tokens
            .iter()
            .map(|t| self.words.row_of(t.as_ref()))
            .collect();
        Ok(self.encode_rows(&rows))
    }

    pub(crate) fn encode_rows(&self, rows: &[usize]) -> Vec<f64> {
        let inputs: Vec<&[f64]> = rows.iter().map(|&r| self.words.row(r)).collect();
        let reversed: Vec<&[f64]> = inputs.iter().rev().copied().collect();
        let mut out = self.forward.run(&inputs);
        out.extend(self.backward.run(&reversed));
        out
    }

    /// Bind to a graph, mapping each of its relations onto a slot pair.
    pub fn bind<'a>(&'a self, kg: &'a KnowledgeGraph) -> Result<ConceptEncoder<'a>> {
        ConceptEncoder::new(self, kg)
    }
}

/// Word and neighbor views of one concept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptEncoding {
    pub word: Vec<f64>,
    pub neighbor: Vec<f64>,
}

impl ConceptEncoding {
    /// `[word ; neighbor]`
    pub fn full(&self) -> Vec<f64> {
        let mut v = self.word.clone();
        v.extend_from_slice(&self.neighbor);
        v
    }

    /// Dot product of the full encodings without materializing them.
    pub fn dot(&self, other: &ConceptEncoding) -> f64 {
        dot(&self.word, &other.word) + dot(&self.neighbor, &other.neighbor)
    }
}

/// Parameters bound to a graph.
#[derive(Debug, Clone)]
pub struct ConceptEncoder<'a> {
    params: &'a EncoderParams,
    kg: &'a KnowledgeGraph,
    /// Graph relation id -> parameter relation index.
    relation_map: Vec<usize>,
}

impl<'a> ConceptEncoder<'a> {
    pub fn new(params: &'a EncoderParams, kg: &'a KnowledgeGraph) -> Result<Self> {
        let by_name: HashMap<&str, usize> = params
            .relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i))
            .collect();
        let relation_map = kg
            .relations()
            .iter()
            .map(|r| {
                by_name.get(r.as_str()).copied().ok_or_else(|| {
                    Error::Config(format!("relation {r:?} has no parameters in this model"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            kg,
            relation_map,
        })
    }

    pub fn params(&self) -> &'a EncoderParams {
        self.params
    }

    pub fn graph(&self) -> &'a KnowledgeGraph {
        self.kg
    }

    pub(crate) fn slot_for(&self, relation: crate::kb::RelationId, direction: Direction) -> usize {
        self.params
            .slot_index(self.relation_map[relation.index()], direction)
    }

    pub(crate) fn concept_rows(&self, c: ConceptId) -> Vec<usize> {
        self.kg.concepts()[c.index()]
            .tokens
            .iter()
            .map(|t| self.params.words.row_of(t))
            .collect()
    }

    pub fn encode_word_part(&self, c: ConceptId) -> Result<Vec<f64>> {
        self.kg.concept(c)?;
        Ok(self.params.encode_rows(&self.concept_rows(c)))
    }

    pub fn encode_neighbors(&self, c: ConceptId, mode: NeighborMode) -> Result<Vec<f64>> {
        let width = self.params.part_width();
        let edges = self.kg.neighbors(c, self.params.neighbor_cap, mode)?;
        // The map is affine, so neighbors sharing a slot are summed first.
        let mut groups: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
        for e in edges {
            let hw = self.params.encode_rows(&self.concept_rows(e.neighbor));
            let g = groups
                .entry(self.slot_for(e.relation, e.direction))
                .or_insert_with(|| (vec![0.0; width], 0));
            add_into(&mut g.0, &hw);
            g.1 += 1;
        }
        let mut acc = vec![0.0; width];
        for (slot, (sum, count)) in groups {
            self.params.slots[slot].apply_sum_into(&sum, count, &mut acc);
        }
        Ok(acc)
    }

    pub fn encode_concept(&self, c: ConceptId, mode: NeighborMode) -> Result<ConceptEncoding> {
        Ok(ConceptEncoding {
            word: self.encode_word_part(c)?,
            neighbor: self.encode_neighbors(c, mode)?,
        })
    }

    /// Sum of the elementwise product of the two encodings.
    pub fn score_pair(&self, a: ConceptId, b: ConceptId, mode: NeighborMode) -> Result<f64> {
        let ea = self.encode_concept(a, mode)?;
        let eb = self.encode_concept(b, mode)?;
        Ok(ea.dot(&eb))
    }
}

/// Inference-mode scorer that memoizes concept encodings.
#[derive(Debug)]
pub struct EncoderScorer<'a> {
    encoder: ConceptEncoder<'a>,
    cache: RwLock<HashMap<ConceptId, Arc<ConceptEncoding>>>,
    name: String,
}

impl<'a> EncoderScorer<'a> {
    pub fn new(
        params: &'a EncoderParams,
        kg: &'a KnowledgeGraph,
        name: impl Into<String>,
    ) -> Result<Self> {
        Ok(Self {
            encoder: ConceptEncoder::new(params, kg)?,
            cache: RwLock::new(HashMap::new()),
            name: name.into(),
        })
    }

    pub fn encoding(&self, c: ConceptId) -> Result<Arc<ConceptEncoding>> {
        if let Some(e) = self.cache.read().expect("encoding cache poisoned").get(&c) {
            return Ok(e.clone());
        }
        let enc = Arc::new(self.encoder.encode_concept(c, NeighborMode::TopK)?);
        self.cache
            .write()
            .expect("encoding cache poisoned")
            .insert(c, enc.clone());
        Ok(enc)
    }
}

impl PairScorer for EncoderScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    /// # Panics
    /// If either id does not belong to the bound graph.
    fn score(&self, a: ConceptId, b: ConceptId) -> f64 {
        let ea = self.encoding(a).expect("concept id from the bound graph");
        let eb = self.encoding(b).expect("concept id from the bound graph");
        ea.dot(&eb)
    }
}

pub(crate) fn add_scaled(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn driving() -> KnowledgeGraph {
        KnowledgeGraph::from_triples(&[
            ("HasPrerequisite", "driving", "a license", 1.0),
            ("HasSubevent", "driving", "getting to a destination", 1.0),
            ("UsedFor", "a car", "driving", 1.0),
            ("AtLocation", "driving", "road", 1.0),
        ])
        .unwrap()
    }

    fn vocab(kg: &KnowledgeGraph) -> Vec<String> {
        kg.concepts()
            .iter()
            .flat_map(|c| c.tokens.clone())
            .collect()
    }

    fn random_params(kg: &KnowledgeGraph, d: usize, h: usize, seed: u64) -> EncoderParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = WordVectorTable::random(vocab(kg), d, 0.5, &mut rng);
        EncoderParams::random(words, kg.relations().to_vec(), h, 16, &mut rng)
    }

    #[test]
    fn zero_model_single_token() {
        let words = WordVectorTable::zeros(vec!["car".into()], 4);
        let p = EncoderParams::zeros(words, vec![], 1, 4);
        assert_eq!(p.encode_words(&["car"]).unwrap(), vec![0.0, 0.0]);
        assert!(p.encode_words::<&str>(&[]).is_err());
    }

    #[test]
    fn shapes() {
        let kg = driving();
        let p = random_params(&kg, 5, 3, 1);
        let enc = p.bind(&kg).unwrap();
        for c in 0..kg.num_concepts() {
            let e = enc
                .encode_concept(ConceptId(c as u32), NeighborMode::TopK)
                .unwrap();
            assert_eq!(e.word.len(), 6);
            assert_eq!(e.neighbor.len(), 6);
            assert_eq!(e.full().len(), 12);
            assert_eq!(&e.full()[..6], e.word.as_slice());
            assert_eq!(&e.full()[6..], e.neighbor.as_slice());
        }
        assert_eq!(p.slots.len(), 2 * kg.num_relations());
    }

    #[test]
    fn neighbor_part_identity_composition() {
        let kg =
            KnowledgeGraph::from_triples(&[("R", "hub", "alpha", 1.0), ("R", "hub", "beta", 1.0)])
                .unwrap();
        let mut p = random_params(&kg, 4, 2, 2);
        let width = p.part_width();
        for s in &mut p.slots {
            s.weight = (0..width * width)
                .map(|i| if i / width == i % width { 1.0 } else { 0.0 })
                .collect();
            s.bias = vec![0.0; width];
        }
        let enc = p.bind(&kg).unwrap();
        let id = |s| kg.require(s).unwrap();
        let alpha = enc.encode_word_part(id("alpha")).unwrap();
        let beta = enc.encode_word_part(id("beta")).unwrap();
        let hub_n = enc.encode_neighbors(id("hub"), NeighborMode::TopK).unwrap();
        for k in 0..width {
            assert!((hub_n[k] - (alpha[k] + beta[k])).abs() < 1e-15);
        }
        // alpha's only neighbor is hub, through the inverse slot.
        let hub = enc.encode_word_part(id("hub")).unwrap();
        assert_eq!(
            enc.encode_neighbors(id("alpha"), NeighborMode::TopK)
                .unwrap(),
            hub
        );
    }

    #[test]
    fn isolated_concept_has_zero_neighbor_part() {
        let mut b = KnowledgeGraph::builder();
        b.add("R", "x", "y", 1.0).unwrap();
        let lonely = b.add_concept("lonely").unwrap();
        let kg = b.build();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let words = WordVectorTable::random(
            vec!["lonely".into(), "x".into(), "y".into()],
            3,
            0.5,
            &mut rng,
        );
        let p = EncoderParams::random(words, kg.relations().to_vec(), 2, 4, &mut rng);
        let enc = p.bind(&kg).unwrap();
        let e = enc.encode_concept(lonely, NeighborMode::TopK).unwrap();
        assert_eq!(e.neighbor, vec![0.0; 4]);
        assert!(e.word.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn score_is_symmetric_and_deterministic() {
        let kg = driving();
        let p = random_params(&kg, 4, 3, 5);
        let enc = p.bind(&kg).unwrap();
        for a in 0..5u32 {
            for b in 0..5u32 {
                let ab = enc
                    .score_pair(ConceptId(a), ConceptId(b), NeighborMode::TopK)
                    .unwrap();
                let ba = enc
                    .score_pair(ConceptId(b), ConceptId(a), NeighborMode::TopK)
                    .unwrap();
                assert_eq!(ab.to_bits(), ba.to_bits());
                let again = enc
                    .score_pair(ConceptId(a), ConceptId(b), NeighborMode::TopK)
                    .unwrap();
                assert_eq!(ab.to_bits(), again.to_bits());
            }
        }
    }

    #[test]
    fn zero_parameter_model_scores_zero() {
        let kg = driving();
        let words = WordVectorTable::zeros(vocab(&kg), 3);
        let p = EncoderParams::zeros(words, kg.relations().to_vec(), 2, 16);
        let enc = p.bind(&kg).unwrap();
        for a in 0..5u32 {
            for b in 0..5u32 {
                assert_eq!(
                    enc.score_pair(ConceptId(a), ConceptId(b), NeighborMode::TopK)
                        .unwrap(),
                    0.0
                );
            }
        }
    }

    #[test]
    fn binding_requires_relation_coverage() {
        let kg = driving();
        let words = WordVectorTable::zeros(vocab(&kg), 3);
        let p = EncoderParams::zeros(words, vec!["IsA".into()], 2, 16);
        assert!(matches!(p.bind(&kg), Err(Error::Config(_))));
    }

    #[test]
    fn scorer_caches_match_direct_computation() {
        let kg = driving();
        let p = random_params(&kg, 4, 3, 6);
        let scorer = EncoderScorer::new(&p, &kg, "dir").unwrap();
        let enc = p.bind(&kg).unwrap();
        let (a, b) = (ConceptId(0), ConceptId(3));
        let direct = enc.score_pair(a, b, NeighborMode::TopK).unwrap();
        assert_eq!(scorer.score(a, b).to_bits(), direct.to_bits());
        assert_eq!(scorer.score(a, b).to_bits(), direct.to_bits());
    }
}
