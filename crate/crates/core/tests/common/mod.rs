//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::path::PathBuf;

use kgrel::text::{tokenize, Stopwords};
use kgrel::{ConceptId, KnowledgeGraph};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Undirected BFS distances from `from`, ignoring relation types.
pub fn bfs(kg: &KnowledgeGraph, from: ConceptId) -> HashMap<ConceptId, usize> {
    let mut adj: HashMap<ConceptId, Vec<ConceptId>> = HashMap::new();
    for t in kg.triples() {
        adj.entry(t.subject).or_default().push(t.object);
        adj.entry(t.object).or_default().push(t.subject);
    }
    let mut dist = HashMap::from([(from, 0usize)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let d = dist[&c];
        for &n in adj.get(&c).map(Vec::as_slice).unwrap_or(&[]) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(n) {
                e.insert(d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Caches one BFS per source concept.
pub struct BfsOracle<'a> {
    kg: &'a KnowledgeGraph,
    cache: HashMap<ConceptId, HashMap<ConceptId, usize>>,
}

impl<'a> BfsOracle<'a> {
    pub fn new(kg: &'a KnowledgeGraph) -> Self {
        Self {
            kg,
            cache: HashMap::new(),
        }
    }

    /// `None` when unreachable.
    pub fn distance(&mut self, a: ConceptId, b: ConceptId) -> Option<usize> {
        let kg = self.kg;
        self.cache
            .entry(a)
            .or_insert_with(|| bfs(kg, a))
            .get(&b)
            .copied()
    }
}

/// Every concept surface compared against every token window of the
/// sentence. Unigram stopwords never match.
pub fn brute_force_retrieve(
    sentence: &str,
    kg: &KnowledgeGraph,
    stopwords: Option<&Stopwords>,
) -> BTreeSet<ConceptId> {
    let tokens = tokenize(sentence);
    let mut out = BTreeSet::new();
    for (i, c) in kg.concepts().iter().enumerate() {
        let parts: Vec<&str> = c.surface.split(' ').collect();
        if parts.len() > 3 || parts.len() > tokens.len() {
            continue;
        }
        if parts.len() == 1 && stopwords.is_some_and(|s| s.contains(parts[0])) {
            continue;
        }
        if tokens
            .windows(parts.len())
            .any(|w| w.iter().zip(&parts).all(|(a, b)| a == b))
        {
            out.insert(ConceptId(i as u32));
        }
    }
    out
}

pub const VOCAB: &[&str] = &[
    "car", "road", "driving", "license", "permit", "oven", "cooking", "book", "reading", "library",
    "rain", "cloud", "umbrella", "bed", "pillow", "sleep", "garden", "flower", "water", "soil",
    "river", "boat", "fish", "bird", "tree", "leaf", "house", "door", "window", "key", "music",
    "song", "guitar", "piano", "school", "student", "teacher", "class", "paper", "pen", "sun",
    "moon", "star", "night", "day", "coffee", "tea", "cup", "milk", "bread", "salt", "dog", "cat",
    "horse", "farm", "city", "street", "train", "station", "ticket", "money", "bank", "market",
    "shop", "shoe", "shirt", "hat", "cold", "warm", "fire", "smoke", "ice", "snow", "winter",
    "summer", "beach", "sand", "wave", "ship", "port", "map", "travel", "doctor", "nurse",
    "hospital", "medicine", "pain", "health", "run", "walk", "jump", "swim", "eat", "drink",
    "cook", "read", "write", "think", "learn", "teach", "play", "work", "rest", "get", "go",
    "make", "take", "see", "give", "find", "use", "keep", "hold", "open", "close", "big", "small",
    "fast", "slow", "old", "new", "good", "bad", "red", "blue", "green", "2", "3d", "x1", "room",
];

pub const FUNCTION_WORDS: &[&str] = &[
    "a", "the", "of", "to", "in", "and", "is", "for", "on", "with",
];

pub fn random_phrase<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(1..=3);
    let mut words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
    if n >= 2 && rng.gen_bool(0.3) {
        words[0] = FUNCTION_WORDS.choose(rng).unwrap();
    }
    words.join(" ")
}

/// Random graph with `concepts` distinct random phrases plus every function
/// word as a concept, linked by random triples.
pub fn random_phrase_graph<R: Rng>(concepts: usize, triples: usize, rng: &mut R) -> KnowledgeGraph {
    let mut names: HashSet<String> = FUNCTION_WORDS.iter().map(|s| s.to_string()).collect();
    while names.len() < concepts {
        names.insert(random_phrase(rng));
    }
    let mut names: Vec<String> = names.into_iter().collect();
    names.sort();
    let mut b = KnowledgeGraph::builder();
    for n in &names {
        b.add_concept(n).unwrap();
    }
    let rels = ["RelatedTo", "IsA", "UsedFor", "AtLocation"];
    for _ in 0..triples {
        let i = rng.gen_range(0..names.len());
        let j = rng.gen_range(0..names.len());
        if i != j {
            b.add(rels.choose(rng).unwrap(), &names[i], &names[j], 1.0)
                .unwrap();
        }
    }
    b.build()
}

/// Sentence of `len` tokens with mixed case and punctuation.
pub fn random_sentence<R: Rng>(len: usize, rng: &mut R) -> String {
    let mut s = String::new();
    for i in 0..len {
        let w = if rng.gen_bool(0.25) {
            *FUNCTION_WORDS.choose(rng).unwrap()
        } else {
            *VOCAB.choose(rng).unwrap()
        };
        let w = if rng.gen_bool(0.1) {
            w.to_uppercase()
        } else {
            w.to_string()
        };
        if i > 0 {
            s.push_str(if rng.gen_bool(0.1) { ", " } else { " " });
        }
        s.push_str(&w);
    }
    if rng.gen_bool(0.5) {
        s.push('?');
    }
    s
}
