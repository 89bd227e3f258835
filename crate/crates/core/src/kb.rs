//! Commonsense triple store.
//!
//! Triples arrive as 4-field TSV lines (`relation \t subject \t object \t weight`)
//! and are interned into an immutable [`KnowledgeGraph`]. Concepts are deduplicated
//! by their normalized surface text and receive dense ids in first-seen order.
//! Every triple contributes a forward entry to its subject's adjacency list and an
//! inverse entry to its object's, so the graph can be walked in both directions
//! while keeping relation direction available to downstream encoders.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

impl ConceptId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Which way an adjacency entry traverses its triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// subject -> object
    Forward,
    /// object -> subject
    Inverse,
}

impl Direction {
    #[inline]
    pub fn offset(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Inverse => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub relation: RelationId,
    pub subject: ConceptId,
    pub object: ConceptId,
    pub weight: f64,
}

/// A parsed but not yet interned triple line.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTriple {
    pub relation: String,
    pub subject: String,
    pub object: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub surface: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub neighbor: ConceptId,
    pub relation: RelationId,
    pub direction: Direction,
    pub weight: f64,
}

/// How [`KnowledgeGraph::neighbors`] chooses entries when a concept has more
/// than `cap` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMode {
    /// Highest weight first, ties by ascending neighbor surface.
    TopK,
    /// Uniform without replacement, reproducible for a given seed.
    Sample(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopDistance {
    One,
    Two,
    MoreThanTwo,
}

/// Lowercase, turn underscores and whitespace runs into single spaces, and
/// strip punctuation from both ends.
pub fn normalize_surface(raw: &str) -> String {
    let lowered = raw.to_lowercase().replace('_', " ");
    let joined = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    joined
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Parse one TSV line. Blank and `#` comment lines yield `Ok(None)`.
pub fn parse_triple_line(line: &str) -> Result<Option<RawTriple>> {
    let trimmed = line.trim_end_matches(['\n', '\r']);
    if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = trimmed.split('\t').collect();
    if fields.len() != 4 {
        return Err(Error::parse(
            None,
            format!("expected 4 tab-separated fields, found {}", fields.len()),
            trimmed,
        ));
    }
    let relation = fields[0].trim();
    if relation.is_empty() {
        return Err(Error::parse(None, "empty relation field", trimmed));
    }
    let subject = normalize_surface(fields[1]);
    let object = normalize_surface(fields[2]);
    if subject.is_empty() || object.is_empty() {
        return Err(Error::parse(None, "empty concept field", trimmed));
    }
    let weight: f64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| Error::parse(None, "non-numeric weight", trimmed))?;
    if !weight.is_finite() || weight < 0.0 {
        return Err(Error::parse(
            None,
            "weight must be finite and non-negative",
            trimmed,
        ));
    }
    if subject == object {
        return Err(Error::parse(None, "self-loop", trimmed));
    }
    Ok(Some(RawTriple {
        relation: relation.to_string(),
        subject,
        object,
        weight,
    }))
}

/// Incremental interner used by [`ingest`] and by code that assembles graphs
/// programmatically.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    concepts: Vec<Concept>,
    surface_index: HashMap<String, ConceptId>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    triples: Vec<Triple>,
    triple_index: HashMap<(RelationId, ConceptId, ConceptId), usize>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern a concept by surface text (normalized here). Returns the
    /// existing id when the surface is already known.
    pub fn add_concept(&mut self, surface: &str) -> Result<ConceptId> {
        let surface = normalize_surface(surface);
        if surface.is_empty() {
            return Err(Error::InvalidArgument("empty concept surface".into()));
        }
        Ok(self.intern_normalized(surface))
    }

    fn intern_normalized(&mut self, surface: String) -> ConceptId {
        if let Some(&id) = self.surface_index.get(&surface) {
            return id;
        }
        let id = ConceptId(self.concepts.len() as u32);
        let tokens = surface.split(' ').map(str::to_string).collect();
        self.surface_index.insert(surface.clone(), id);
        self.concepts.push(Concept {
            id,
            surface,
            tokens,
        });
        id
    }

    pub fn add_relation(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.relation_index.get(name) {
            return id;
        }
        let id = RelationId(self.relations.len() as u32);
        self.relations.push(name.to_string());
        self.relation_index.insert(name.to_string(), id);
        id
    }

    /// Add an already-validated triple. Duplicates keep the larger weight.
    pub fn add_raw(&mut self, raw: RawTriple) {
        let relation = self.add_relation(&raw.relation);
        let subject = self.intern_normalized(raw.subject);
        let object = self.intern_normalized(raw.object);
        self.push_triple(relation, subject, object, raw.weight);
    }

    /// Convenience for literal fixtures: `(relation, subject, object, weight)`.
    pub fn add(&mut self, relation: &str, subject: &str, object: &str, weight: f64) -> Result<()> {
        let line = format!("{relation}\t{subject}\t{object}\t{weight}");
        match parse_triple_line(&line)? {
            Some(raw) => {
                self.add_raw(raw);
                Ok(())
            }
            None => Err(Error::InvalidArgument(format!("not a triple: {line:?}"))),
        }
    }

    fn push_triple(
        &mut self,
        relation: RelationId,
        subject: ConceptId,
        object: ConceptId,
        weight: f64,
    ) {
        match self.triple_index.get(&(relation, subject, object)) {
            Some(&i) => {
                let t = &mut self.triples[i];
                if weight > t.weight {
                    t.weight = weight;
                }
            }
            None => {
                self.triple_index
                    .insert((relation, subject, object), self.triples.len());
                self.triples.push(Triple {
                    relation,
                    subject,
                    object,
                    weight,
                });
            }
        }
    }

    pub fn build(self) -> KnowledgeGraph {
        let GraphBuilder {
            concepts,
            surface_index,
            relations,
            triples,
            ..
        } = self;
        let n = concepts.len();
        let mut adjacency: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for t in &triples {
            adjacency[t.subject.index()].push(Edge {
                neighbor: t.object,
                relation: t.relation,
                direction: Direction::Forward,
                weight: t.weight,
            });
            adjacency[t.object.index()].push(Edge {
                neighbor: t.subject,
                relation: t.relation,
                direction: Direction::Inverse,
                weight: t.weight,
            });
        }
        // Store each list in top-k order so inference selection is a prefix.
        for list in &mut adjacency {
            list.sort_by(|a, b| {
                b.weight
                    .total_cmp(&a.weight)
                    .then_with(|| {
                        concepts[a.neighbor.index()]
                            .surface
                            .cmp(&concepts[b.neighbor.index()].surface)
                    })
                    .then_with(|| a.relation.cmp(&b.relation))
                    .then_with(|| a.direction.cmp(&b.direction))
            });
        }
        let neighbor_ids = adjacency
            .iter()
            .map(|list| {
                let mut ids: Vec<ConceptId> = list.iter().map(|e| e.neighbor).collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            })
            .collect();
        let relation_index = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), RelationId(i as u32)))
            .collect();
        KnowledgeGraph {
            concepts,
            relations,
            relation_index,
            triples,
            adjacency,
            neighbor_ids,
            surface_index,
        }
    }
}

/// Immutable interned triple graph. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    concepts: Vec<Concept>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    triples: Vec<Triple>,
    adjacency: Vec<Vec<Edge>>,
    neighbor_ids: Vec<Vec<ConceptId>>,
    surface_index: HashMap<String, ConceptId>,
}

/// Read triple TSV lines into a graph. The first bad line aborts with its
/// 1-based line number.
pub fn ingest<R: BufRead>(reader: R) -> Result<KnowledgeGraph> {
    let mut builder = GraphBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(raw) = parse_triple_line(&line).map_err(|e| e.at_line(i + 1))? {
            builder.add_raw(raw);
        }
    }
    Ok(builder.build())
}

impl KnowledgeGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    /// Build from literal `(relation, subject, object, weight)` tuples.
    pub fn from_triples(triples: &[(&str, &str, &str, f64)]) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for &(r, s, o, w) in triples {
            b.add(r, s, o, w)?;
        }
        Ok(b.build())
    }

    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn concept(&self, id: ConceptId) -> Result<&Concept> {
        self.concepts
            .get(id.index())
            .ok_or(Error::UnknownConcept(id.0))
    }

    pub fn surface(&self, id: ConceptId) -> &str {
        &self.concepts[id.index()].surface
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations[id.index()]
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    /// Exact lookup of an already-normalized surface.
    pub fn lookup_normalized(&self, surface: &str) -> Option<ConceptId> {
        self.surface_index.get(surface).copied()
    }

    /// Lookup after normalizing `text`.
    pub fn lookup(&self, text: &str) -> Option<ConceptId> {
        self.lookup_normalized(&normalize_surface(text))
    }

    pub fn require(&self, text: &str) -> Result<ConceptId> {
        self.lookup(text)
            .ok_or_else(|| Error::UnknownSurface(text.to_string()))
    }

    /// All adjacency entries of `c`, in top-k order.
    pub fn edges(&self, c: ConceptId) -> Result<&[Edge]> {
        self.adjacency
            .get(c.index())
            .map(Vec::as_slice)
            .ok_or(Error::UnknownConcept(c.0))
    }

    /// Distinct undirected neighbors of `c`, sorted by id.
    pub fn neighbor_ids(&self, c: ConceptId) -> &[ConceptId] {
        &self.neighbor_ids[c.index()]
    }

    pub fn degree(&self, c: ConceptId) -> usize {
        self.adjacency[c.index()].len()
    }

    pub fn are_adjacent(&self, a: ConceptId, b: ConceptId) -> bool {
        self.neighbor_ids[a.index()].binary_search(&b).is_ok()
    }

    /// At most `cap` adjacency entries of `c` chosen per `mode`.
    pub fn neighbors(&self, c: ConceptId, cap: usize, mode: NeighborMode) -> Result<Vec<Edge>> {
        let all = self.edges(c)?;
        if cap == 0 {
            return Err(Error::InvalidArgument(
                "neighbor cap must be positive".into(),
            ));
        }
        if all.len() <= cap {
            return Ok(all.to_vec());
        }
        Ok(match mode {
            NeighborMode::TopK => all[..cap].to_vec(),
            NeighborMode::Sample(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picked = index::sample(&mut rng, all.len(), cap).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| all[i]).collect()
            }
        })
    }

    /// Undirected shortest-path class between two distinct concepts, with the
    /// search truncated at depth 2.
    pub fn hop_distance_capped(&self, a: ConceptId, b: ConceptId) -> Result<HopDistance> {
        self.concept(a)?;
        self.concept(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "hop distance needs two distinct concepts, got {a} twice"
            )));
        }
        Ok(self.hop_class(a, b))
    }

    /// Unchecked variant for hot sampling loops; `a != b` and both valid.
    pub(crate) fn hop_class(&self, a: ConceptId, b: ConceptId) -> HopDistance {
        let na = &self.neighbor_ids[a.index()];
        let nb = &self.neighbor_ids[b.index()];
        if na.binary_search(&b).is_ok() {
            return HopDistance::One;
        }
        // Sorted-list intersection test.
        let (mut i, mut j) = (0, 0);
        while i < na.len() && j < nb.len() {
            match na[i].cmp(&nb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return HopDistance::Two,
            }
        }
        HopDistance::MoreThanTwo
    }

    /// Write the triples back out as canonical TSV.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.triples {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.relations[t.relation.index()],
                self.concepts[t.subject.index()].surface,
                self.concepts[t.object.index()].surface,
                t.weight
            )?;
        }
        Ok(())
    }

    /// Binary snapshot: concept table (including isolated concepts), relation
    /// table, then triples. All integers little-endian.
    ///
    /// ```text
    /// magic   b"KGRELKB1"
    /// u64     concept count, then per concept: u32 byte length + UTF-8 surface
    /// u64     relation count, then per relation: u32 byte length + UTF-8 name
    /// u64     triple count, then per triple: u32 relation, u32 subject, u32 object, f64 weight
    /// ```
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(KB_MAGIC)?;
        w.write_all(&(self.concepts.len() as u64).to_le_bytes())?;
        for c in &self.concepts {
            write_str(&mut w, &c.surface)?;
        }
        w.write_all(&(self.relations.len() as u64).to_le_bytes())?;
        for r in &self.relations {
            write_str(&mut w, r)?;
        }
        w.write_all(&(self.triples.len() as u64).to_le_bytes())?;
        for t in &self.triples {
            w.write_all(&t.relation.0.to_le_bytes())?;
            w.write_all(&t.subject.0.to_le_bytes())?;
            w.write_all(&t.object.0.to_le_bytes())?;
            w.write_all(&t.weight.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != KB_MAGIC {
            return Err(Error::Format("not a knowledge-graph snapshot".into()));
        }
        let mut b = GraphBuilder::new();
        let n_concepts = read_u64(&mut r)?;
        for _ in 0..n_concepts {
            let s = read_str(&mut r)?;
            let id = b.add_concept(&s)?;
            if b.concepts[id.index()].surface != s || id.index() + 1 != b.concepts.len() {
                return Err(Error::Format(format!("non-canonical concept {s:?}")));
            }
        }
        let n_relations = read_u64(&mut r)?;
        for _ in 0..n_relations {
            let s = read_str(&mut r)?;
            b.add_relation(&s);
        }
        let n_triples = read_u64(&mut r)?;
        for _ in 0..n_triples {
            let rel = read_u32(&mut r)?;
            let s = read_u32(&mut r)?;
            let o = read_u32(&mut r)?;
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            let weight = f64::from_le_bytes(buf);
            if rel as usize >= b.relations.len()
                || s as usize >= b.concepts.len()
                || o as usize >= b.concepts.len()
                || s == o
                || !(weight >= 0.0 && weight.is_finite())
            {
                return Err(Error::Format("corrupt triple record".into()));
            }
            b.push_triple(RelationId(rel), ConceptId(s), ConceptId(o), weight);
        }
        Ok(b.build())
    }

    /// Load either a binary snapshot or a TSV file, sniffing the magic bytes.
    pub fn load_path(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(KB_MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            ingest(bytes.as_slice())
        }
    }
}

const KB_MAGIC: &[u8; 8] = b"KGRELKB1";

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("invalid UTF-8 string".into()))
}
