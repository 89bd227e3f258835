//! Sentence-to-concept linking by exact {1,2,3}-gram lookup.

use std::collections::{BTreeSet, HashSet};
use std::io::BufRead;
use std::ops::Range;

use serde::Serialize;

use crate::error::Result;
use crate::kb::{ConceptId, KnowledgeGraph};

/// Longest n-gram considered.
pub const MAX_NGRAM: usize = 3;

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "all", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by", "can",
    "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "may", "most", "of", "on", "or", "our", "she",
    "so", "some", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this",
    "to", "was", "we", "were", "what", "when", "where", "which", "who", "why", "will", "with",
    "would", "you", "your",
];

/// Lowercased alphanumeric runs; everything else separates tokens and is dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Self(DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect())
    }
}

impl Stopwords {
    pub fn empty() -> Self {
        Self(HashSet::new())
    }

    /// One word per line; blank lines and `#` comments ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut set = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let w = line.trim();
            if !w.is_empty() && !w.starts_with('#') {
                set.insert(w.to_lowercase());
            }
        }
        Ok(Self(set))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ngram {
    pub text: String,
    /// Half-open token span.
    pub span: (usize, usize),
}

impl Ngram {
    pub fn range(&self) -> Range<usize> {
        self.span.0..self.span.1
    }
}

/// Contiguous 1..=3-grams ordered by start position then length. Unigrams in
/// `stopwords` are skipped; longer n-grams are always kept.
pub fn extract_ngrams(tokens: &[String], stopwords: Option<&Stopwords>) -> Vec<Ngram> {
    let mut out = Vec::with_capacity(tokens.len() * MAX_NGRAM);
    for start in 0..tokens.len() {
        for len in 1..=MAX_NGRAM {
            let end = start + len;
            if end > tokens.len() {
                break;
            }
            if len == 1 && stopwords.is_some_and(|s| s.contains(&tokens[start])) {
                continue;
            }
            out.push(Ngram {
                text: tokens[start..end].join(" "),
                span: (start, end),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptMatch {
    pub ngram: String,
    pub span: (usize, usize),
    pub concept: ConceptId,
}

/// The KB concepts found in one piece of text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetrievedConceptSet {
    pub source_text: String,
    pub concept_ids: BTreeSet<ConceptId>,
    pub matches: Vec<ConceptMatch>,
}

impl RetrievedConceptSet {
    pub fn is_empty(&self) -> bool {
        self.concept_ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.concept_ids.len()
    }

    pub fn ids(&self) -> Vec<ConceptId> {
        self.concept_ids.iter().copied().collect()
    }
}

/// Concept linker with a configurable stopword filter.
#[derive(Debug, Clone, Default)]
pub struct Retriever {
    stopwords: Option<Stopwords>,
}

impl Retriever {
    /// Default English stopword filter enabled.
    pub fn new() -> Self {
        Self {
            stopwords: Some(Stopwords::default()),
        }
    }

    pub fn with_stopwords(stopwords: Stopwords) -> Self {
        Self {
            stopwords: Some(stopwords),
        }
    }

    pub fn without_filter() -> Self {
        Self { stopwords: None }
    }

    pub fn stopwords(&self) -> Option<&Stopwords> {
        self.stopwords.as_ref()
    }

    pub fn retrieve(&self, sentence: &str, kg: &KnowledgeGraph) -> RetrievedConceptSet {
        let tokens = tokenize(sentence);
        let mut concept_ids = BTreeSet::new();
        let mut matches = Vec::new();
        for ng in extract_ngrams(&tokens, self.stopwords.as_ref()) {
            if let Some(id) = kg.lookup_normalized(&ng.text) {
                concept_ids.insert(id);
                matches.push(ConceptMatch {
                    ngram: ng.text,
                    span: ng.span,
                    concept: id,
                });
            }
        }
        RetrievedConceptSet {
            source_text: sentence.to_string(),
            concept_ids,
            matches,
        }
    }
}

/// Retrieval with the default stopword filter.
pub fn retrieve_concepts(sentence: &str, kg: &KnowledgeGraph) -> RetrievedConceptSet {
    Retriever::new().retrieve(sentence, kg)
}
