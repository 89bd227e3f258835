//! Word vector table with a shared unknown-word row.

use std::collections::HashMap;
use std::io::BufRead;

use rand::Rng;

use crate::error::{Error, Result};

/// Rows are stored contiguously; the unknown-word vector is the final row so
/// it can be trained like any other.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl WordVectorTable {
    /// Table with the given vocabulary, every vector (including unk) zero.
    pub fn zeros(words: Vec<String>, dim: usize) -> Self {
        let mut words = words;
        let mut seen = std::collections::HashSet::new();
        words.retain(|w| seen.insert(w.clone()));
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let data = vec![0.0; (words.len() + 1) * dim];
        Self {
            dim,
            words,
            index,
            data,
        }
    }

    /// Uniform init in `±scale`; unk stays zero.
    pub fn random<R: Rng>(words: Vec<String>, dim: usize, scale: f64, rng: &mut R) -> Self {
        let mut t = Self::zeros(words, dim);
        let n = t.words.len() * dim;
        for v in &mut t.data[..n] {
            *v = rng.gen_range(-scale..scale);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row index of `word`, or the unk row.
    pub fn row_of(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(self.words.len())
    }

    pub fn unk_row(&self) -> usize {
        self.words.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn lookup(&self, word: &str) -> &[f64] {
        self.row(self.row_of(word))
    }

    pub fn unk_vector(&self) -> &[f64] {
        self.row(self.unk_row())
    }

    /// Vectors followed by the unk row, flattened.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn from_parts(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != (words.len() + 1) * dim {
            return Err(Error::Format("word table size mismatch".into()));
        }
        let index: HashMap<String, usize> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        if index.len() != words.len() {
            return Err(Error::Format("duplicate word in vocabulary".into()));
        }
        Ok(Self {
            dim,
            words,
            index,
            data,
        })
    }
}

/// Parse `word v1 ... vd` lines (GloVe text format). Every line must carry
/// exactly `expected_dim` values; the unk vector is zero.
pub fn load_word_vectors<R: BufRead>(reader: R, expected_dim: usize) -> Result<WordVectorTable> {
    if expected_dim == 0 {
        return Err(Error::InvalidArgument(
            "word vector dimension must be positive".into(),
        ));
    }
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let start = data.len();
        for tok in parts {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(Some(i + 1), "non-numeric vector component", &line))?;
            data.push(v);
        }
        let got = data.len() - start;
        if got != expected_dim {
            return Err(Error::parse(
                Some(i + 1),
                format!("expected {expected_dim} values, found {got}"),
                &line,
            ));
        }
        // First occurrence wins for repeated words.
        if !seen.insert(word.to_string()) {
            data.truncate(start);
            continue;
        }
        words.push(word.to_string());
    }
    data.extend(std::iter::repeat_n(0.0, expected_dim));
    WordVectorTable::from_parts(words, expected_dim, data)
}
