//! Multiple-choice reranking with commonsense channels.
//!
//! For each candidate answer, concept-pair scores are aggregated into text
//! pair scores: every concept on the question (or passage) side takes its
//! best match on the candidate side, and those maxima are averaged. The
//! direct and indirect channels, along with an external document score, are
//! standardized across the candidates of an instance and mixed linearly.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{ConceptId, KnowledgeGraph};
use crate::text::{RetrievedConceptSet, Retriever};

/// Anything that scores the relatedness of two concepts.
pub trait PairScorer: Sync {
    fn name(&self) -> &str;
    fn score(&self, a: ConceptId, b: ConceptId) -> f64;
}

/// Closure-backed scorer, handy for stubs and ad-hoc experiments.
pub struct FnScorer<F> {
    name: String,
    f: F,
}

impl<F: Fn(ConceptId, ConceptId) -> f64 + Sync> FnScorer<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(ConceptId, ConceptId) -> f64 + Sync> PairScorer for FnScorer<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, a: ConceptId, b: ConceptId) -> f64 {
        (self.f)(a, b)
    }
}

/// Mean over `e1` of the best score against `e2`; 0 if either side is empty.
pub fn aggregate(e1: &[ConceptId], e2: &[ConceptId], scorer: &dyn PairScorer) -> f64 {
    if e1.is_empty() || e2.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for &x in e1 {
        let best = e2
            .iter()
            .map(|&y| scorer.score(x, y))
            .fold(f64::NEG_INFINITY, f64::max);
        sum += best;
    }
    sum / e1.len() as f64
}

pub fn aggregate_sets(
    e1: &RetrievedConceptSet,
    e2: &RetrievedConceptSet,
    scorer: &dyn PairScorer,
) -> f64 {
    aggregate(&e1.ids(), &e2.ids(), scorer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaInstance {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passage: Option<String>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_scores: Option<Vec<f64>>,
}

impl QaInstance {
    pub fn validate(&self) -> Result<()> {
        if self.candidates.len() < 2 {
            return Err(Error::Data(format!(
                "instance {:?}: needs at least 2 candidates",
                self.id
            )));
        }
        if let Some(g) = self.gold {
            if g >= self.candidates.len() {
                return Err(Error::Data(format!(
                    "instance {:?}: gold index {g} out of range",
                    self.id
                )));
            }
        }
        if let Some(d) = &self.doc_scores {
            if d.len() != self.candidates.len() {
                return Err(Error::Data(format!(
                    "instance {:?}: {} doc scores for {} candidates",
                    self.id,
                    d.len(),
                    self.candidates.len()
                )));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "instance {:?}: non-finite doc score",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// One JSON object per line; blank lines skipped.
pub fn load_dataset<R: BufRead>(reader: R) -> Result<Vec<QaInstance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: QaInstance = serde_json::from_str(&line)
            .map_err(|e| Error::parse(Some(i + 1), format!("bad instance JSON: {e}"), &line))?;
        inst.validate()?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_dataset<W: Write>(mut w: W, data: &[QaInstance]) -> Result<()> {
    for inst in data {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Which text pairs feed a commonsense channel. The first text is the `E1`
/// side of [`aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairChannel {
    QuestionAnswer,
    AnswerPassage,
    QuestionPassage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationWeights {
    pub alpha: f64,
    pub beta_dir: f64,
    pub beta_ind: f64,
    pub dir_channels: Vec<PairChannel>,
    pub ind_channels: Vec<PairChannel>,
}

impl Default for CombinationWeights {
    fn default() -> Self {
        Self::new(0.5, 0.25, 0.25)
    }
}

impl CombinationWeights {
    /// Weights with the default channel sets: question-answer and
    /// answer-passage for both kinds, plus question-passage for indirect.
    pub fn new(alpha: f64, beta_dir: f64, beta_ind: f64) -> Self {
        Self {
            alpha,
            beta_dir,
            beta_ind,
            dir_channels: vec![PairChannel::QuestionAnswer, PairChannel::AnswerPassage],
            ind_channels: vec![
                PairChannel::QuestionAnswer,
                PairChannel::AnswerPassage,
                PairChannel::QuestionPassage,
            ],
        }
    }

    pub fn with_weights(&self, alpha: f64, beta_dir: f64, beta_ind: f64) -> Self {
        Self {
            alpha,
            beta_dir,
            beta_ind,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.alpha, self.beta_dir, self.beta_ind]
            .iter()
            .any(|w| !w.is_finite())
        {
            return Err(Error::Config("weights must be finite".into()));
        }
        if self.alpha == 0.0 && self.beta_dir == 0.0 && self.beta_ind == 0.0 {
            return Err(Error::Config(
                "at least one of alpha, beta_dir, beta_ind must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// Inputs shared by every instance: graph, linker and the two scorers.
/// A missing scorer makes its channel constant (and therefore neutral).
pub struct ScoringContext<'a> {
    pub kg: &'a KnowledgeGraph,
    pub retriever: Retriever,
    pub dir: Option<&'a dyn PairScorer>,
    pub ind: Option<&'a dyn PairScorer>,
}

/// Unstandardized channel values for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawChannels {
    pub doc: Option<f64>,
    pub dir: f64,
    pub ind: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateScore {
    pub doc: Option<f64>,
    pub dir: f64,
    pub ind: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub chosen: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
    pub candidates: Vec<CandidateScore>,
}

/// Z-score within one instance; a constant channel maps to all zeros.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 0 || values.iter().all(|&v| v == values[0]) {
        return vec![0.0; n];
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return vec![0.0; n];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn channel_value(
    channels: &[PairChannel],
    q: &[ConceptId],
    p: &[ConceptId],
    a: &[ConceptId],
    scorer: &dyn PairScorer,
) -> f64 {
    channels
        .iter()
        .map(|ch| match ch {
            PairChannel::QuestionAnswer => aggregate(q, a, scorer),
            PairChannel::AnswerPassage => aggregate(p, a, scorer),
            PairChannel::QuestionPassage => aggregate(q, p, scorer),
        })
        .sum()
}

/// Raw doc/dir/ind values for every candidate of `inst`.
pub fn raw_channels(
    inst: &QaInstance,
    ctx: &ScoringContext<'_>,
    weights: &CombinationWeights,
) -> Vec<RawChannels> {
    let q = ctx.retriever.retrieve(&inst.question, ctx.kg).ids();
    let p = inst
        .passage
        .as_deref()
        .map(|t| ctx.retriever.retrieve(t, ctx.kg).ids())
        .unwrap_or_default();
    inst.candidates
        .iter()
        .enumerate()
        .map(|(i, cand)| {
            let a = ctx.retriever.retrieve(cand, ctx.kg).ids();
            RawChannels {
                doc: inst.doc_scores.as_ref().map(|d| d[i]),
                dir: ctx
                    .dir
                    .map_or(0.0, |s| channel_value(&weights.dir_channels, &q, &p, &a, s)),
                ind: ctx
                    .ind
                    .map_or(0.0, |s| channel_value(&weights.ind_channels, &q, &p, &a, s)),
            }
        })
        .collect()
}

/// Mix standardized channels with the given weights.
pub fn combine(raw: &[RawChannels], weights: &CombinationWeights) -> Result<Vec<CandidateScore>> {
    let docs: Option<Vec<f64>> = raw.iter().map(|r| r.doc).collect();
    if weights.alpha != 0.0 && docs.is_none() {
        return Err(Error::Config(
            "alpha is nonzero but the instance has no doc_scores".into(),
        ));
    }
    let z_doc = docs
        .as_deref()
        .map(standardize)
        .unwrap_or_else(|| vec![0.0; raw.len()]);
    let z_dir = standardize(&raw.iter().map(|r| r.dir).collect::<Vec<_>>());
    let z_ind = standardize(&raw.iter().map(|r| r.ind).collect::<Vec<_>>());
    Ok(raw
        .iter()
        .enumerate()
        .map(|(i, r)| CandidateScore {
            doc: r.doc,
            dir: r.dir,
            ind: r.ind,
            combined: weights.alpha * z_doc[i]
                + weights.beta_dir * z_dir[i]
                + weights.beta_ind * z_ind[i],
        })
        .collect())
}

pub fn score_candidate(
    inst: &QaInstance,
    index: usize,
    ctx: &ScoringContext<'_>,
    weights: &CombinationWeights,
) -> Result<CandidateScore> {
    if index >= inst.candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "candidate {index} out of range"
        )));
    }
    Ok(combine(&raw_channels(inst, ctx, weights), weights)?[index])
}

fn prediction_from(
    inst: &QaInstance,
    raw: &[RawChannels],
    weights: &CombinationWeights,
) -> Result<Prediction> {
    let candidates = combine(raw, weights)?;
    let combined: Vec<f64> = candidates.iter().map(|c| c.combined).collect();
    Ok(Prediction {
        id: inst.id.clone(),
        chosen: argmax(&combined),
        gold: inst.gold,
        candidates,
    })
}

pub fn predict(
    inst: &QaInstance,
    ctx: &ScoringContext<'_>,
    weights: &CombinationWeights,
) -> Result<Prediction> {
    inst.validate()?;
    weights.validate()?;
    prediction_from(inst, &raw_channels(inst, ctx, weights), weights)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub weights: CombinationWeights,
    pub scorers: Vec<String>,
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    /// Plain-text table: one row per instance, then the accuracy line.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<16} {:>6} {:>6}  {:>10} {:>10} {:>10} {:>10}\n",
            "id", "chosen", "gold", "doc", "dir", "ind", "combined"
        ));
        for p in &self.predictions {
            let c = &p.candidates[p.chosen];
            s.push_str(&format!(
                "{:<16} {:>6} {:>6}  {:>10} {:>10.4} {:>10.4} {:>10.4}\n",
                truncate(&p.id, 16),
                p.chosen,
                p.gold.map_or("-".to_string(), |g| g.to_string()),
                c.doc.map_or("-".to_string(), |d| format!("{d:.4}")),
                c.dir,
                c.ind,
                c.combined
            ));
        }
        s.push_str(&format!(
            "accuracy {:.4} ({}/{})  alpha={} beta_dir={} beta_ind={}\n",
            self.accuracy,
            self.correct,
            self.total,
            self.weights.alpha,
            self.weights.beta_dir,
            self.weights.beta_ind
        ));
        s
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn require_gold(dataset: &[QaInstance]) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    if let Some(inst) = dataset.iter().find(|i| i.gold.is_none()) {
        return Err(Error::Data(format!(
            "instance {:?} has no gold label",
            inst.id
        )));
    }
    Ok(())
}

/// Channel values for a whole dataset, computed in parallel across instances.
pub fn dataset_channels(
    dataset: &[QaInstance],
    ctx: &ScoringContext<'_>,
    weights: &CombinationWeights,
) -> Result<Vec<Vec<RawChannels>>> {
    for inst in dataset {
        inst.validate()?;
    }
    Ok(dataset
        .par_iter()
        .map(|inst| raw_channels(inst, ctx, weights))
        .collect())
}

fn scorer_names(ctx: &ScoringContext<'_>) -> Vec<String> {
    [ctx.dir, ctx.ind]
        .iter()
        .flatten()
        .map(|s| s.name().to_string())
        .collect()
}

fn report_from(
    dataset: &[QaInstance],
    raws: &[Vec<RawChannels>],
    weights: &CombinationWeights,
    scorers: Vec<String>,
) -> Result<EvalReport> {
    let predictions = dataset
        .iter()
        .zip(raws)
        .map(|(inst, raw)| prediction_from(inst, raw, weights))
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions
        .iter()
        .filter(|p| Some(p.chosen) == p.gold)
        .count();
    Ok(EvalReport {
        accuracy: correct as f64 / dataset.len() as f64,
        correct,
        total: dataset.len(),
        weights: weights.clone(),
        scorers,
        predictions,
    })
}

pub fn evaluate(
    dataset: &[QaInstance],
    ctx: &ScoringContext<'_>,
    weights: &CombinationWeights,
) -> Result<EvalReport> {
    require_gold(dataset)?;
    weights.validate()?;
    let raws = dataset_channels(dataset, ctx, weights)?;
    report_from(dataset, &raws, weights, scorer_names(ctx))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta_dir: f64,
    pub beta_ind: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub best: CombinationWeights,
    pub best_accuracy: f64,
    pub grid: Vec<GridPoint>,
}

/// All `(alpha, beta_dir, beta_ind)` on the 0.1 lattice summing to 1. When
/// `allow_alpha` is false only `alpha = 0` points are produced.
pub fn weight_grid(allow_alpha: bool) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for a in 0..=10u32 {
        if a > 0 && !allow_alpha {
            break;
        }
        for d in 0..=(10 - a) {
            let i = 10 - a - d;
            out.push((a as f64 / 10.0, d as f64 / 10.0, i as f64 / 10.0));
        }
    }
    out
}

/// Exhaustive search over [`weight_grid`]; the first point (in grid order)
/// with the best accuracy wins. Alpha is pinned to 0 when any instance lacks
/// doc scores.
pub fn grid_search(
    validation: &[QaInstance],
    ctx: &ScoringContext<'_>,
    template: &CombinationWeights,
) -> Result<GridSearchResult> {
    require_gold(validation)?;
    let raws = dataset_channels(validation, ctx, template)?;
    let allow_alpha = validation.iter().all(|i| i.doc_scores.is_some());
    let mut grid = Vec::new();
    let mut best: Option<(CombinationWeights, f64)> = None;
    for (a, d, i) in weight_grid(allow_alpha) {
        let w = template.with_weights(a, d, i);
        let report = report_from(validation, &raws, &w, Vec::new())?;
        grid.push(GridPoint {
            alpha: a,
            beta_dir: d,
            beta_ind: i,
            accuracy: report.accuracy,
        });
        if best.as_ref().is_none_or(|(_, acc)| report.accuracy > *acc) {
            best = Some((w, report.accuracy));
        }
    }
    let (best, best_accuracy) = best.expect("grid is never empty");
    Ok(GridSearchResult {
        best,
        best_accuracy,
        grid,
    })
}
