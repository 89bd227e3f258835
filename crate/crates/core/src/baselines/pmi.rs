//! Pointwise mutual information over knowledge-graph co-occurrence.
//!
//! Every triple counts as one co-occurrence of its two endpoints. The table
//! serializes to a sorted TSV:
//!
//! ```text
//! # total<TAB>N
//! unit<TAB>surface<TAB>count
//! pair<TAB>surface_a<TAB>surface_b<TAB>count     (surface_a < surface_b)
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::kb::{ConceptId, KnowledgeGraph};
use crate::qa::PairScorer;

#[derive(Debug, Clone, PartialEq)]
pub struct PmiTable {
    units: Vec<u64>,
    pairs: HashMap<(u32, u32), u64>,
    total: u64,
}

fn key(a: ConceptId, b: ConceptId) -> (u32, u32) {
    (a.0.min(b.0), a.0.max(b.0))
}

impl PmiTable {
    pub fn from_graph(kg: &KnowledgeGraph) -> Self {
        let mut units = vec![0u64; kg.num_concepts()];
        let mut pairs = HashMap::new();
        for t in kg.triples() {
            units[t.subject.index()] += 1;
            units[t.object.index()] += 1;
            *pairs.entry(key(t.subject, t.object)).or_insert(0) += 1;
        }
        Self {
            units,
            pairs,
            total: kg.num_triples() as u64,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn unit_count(&self, c: ConceptId) -> u64 {
        self.units.get(c.index()).copied().unwrap_or(0)
    }

    pub fn pair_count(&self, a: ConceptId, b: ConceptId) -> u64 {
        self.pairs.get(&key(a, b)).copied().unwrap_or(0)
    }

    pub fn write_tsv<W: Write>(&self, kg: &KnowledgeGraph, mut w: W) -> Result<()> {
        writeln!(w, "# total\t{}", self.total)?;
        let mut units: Vec<(&str, u64)> = self
            .units
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (kg.surface(ConceptId(i as u32)), n))
            .collect();
        units.sort();
        for (s, n) in units {
            writeln!(w, "unit\t{s}\t{n}")?;
        }
        let mut pairs: Vec<(&str, &str, u64)> = self
            .pairs
            .iter()
            .map(|(&(a, b), &n)| {
                let (sa, sb) = (kg.surface(ConceptId(a)), kg.surface(ConceptId(b)));
                if sa <= sb {
                    (sa, sb, n)
                } else {
                    (sb, sa, n)
                }
            })
            .collect();
        pairs.sort();
        for (a, b, n) in pairs {
            writeln!(w, "pair\t{a}\t{b}\t{n}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a table written by [`PmiTable::write_tsv`], resolving surfaces
    /// against `kg`.
    pub fn read_tsv<R: BufRead>(reader: R, kg: &KnowledgeGraph) -> Result<Self> {
        let mut table = Self {
            units: vec![0; kg.num_concepts()],
            pairs: HashMap::new(),
            total: 0,
        };
        let resolve = |s: &str, line: usize, raw: &str| {
            kg.lookup_normalized(s)
                .ok_or_else(|| Error::parse(Some(line), format!("unknown concept {s:?}"), raw))
        };
        let count = |s: &str, line: usize, raw: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::parse(Some(line), "bad count", raw))
        };
        let mut saw_total = false;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["# total", t] => {
                    table.total = count(t, n, &line)?;
                    saw_total = true;
                }
                ["unit", s, c] => table.units[resolve(s, n, &line)?.index()] = count(c, n, &line)?,
                ["pair", a, b, c] => {
                    let k = key(resolve(a, n, &line)?, resolve(b, n, &line)?);
                    table.pairs.insert(k, count(c, n, &line)?);
                }
                _ => return Err(Error::parse(Some(n), "unrecognized PMI line", &line)),
            }
        }
        if !saw_total {
            return Err(Error::Format("PMI table has no total line".into()));
        }
        let pair_sum: u64 = table.pairs.values().sum();
        if table.units.iter().sum::<u64>() != 2 * pair_sum {
            return Err(Error::Format("unit counts do not match pair counts".into()));
        }
        Ok(table)
    }
}

/// `ln((count(a,b) + 1) * total / (count(a) * count(b)))`, or 0 when either
/// concept never occurs. Symmetric.
pub fn pmi_score(a: ConceptId, b: ConceptId, table: &PmiTable) -> f64 {
    let (ua, ub) = (table.unit_count(a), table.unit_count(b));
    if ua == 0 || ub == 0 {
        return 0.0;
    }
    ((table.pair_count(a, b) as f64 + 1.0) * table.total as f64 / (ua as f64 * ub as f64)).ln()
}

pub struct PmiScorer {
    table: PmiTable,
}

impl PmiScorer {
    pub fn new(table: PmiTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &PmiTable {
        &self.table
    }
}

impl PairScorer for PmiScorer {
    fn name(&self) -> &str {
        "pmi"
    }

    fn score(&self, a: ConceptId, b: ConceptId) -> f64 {
        pmi_score(a, b, &self.table)
    }
}
