//! Batched margin-loss forward and backward pass.
//!
//! Each distinct concept in a batch is word-encoded once; its gradient is
//! accumulated from every place it appears (as an anchor, a candidate, or a
//! neighbor inside some neighbor part) before a single LSTM backward pass.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::sampling::PairSample;
use crate::encoder::lstm::{add_into, dot, LstmParams, LstmTrace};
use crate::encoder::{add_scaled, Composition, ConceptEncoder, EncoderParams};
use crate::kb::{ConceptId, Edge, NeighborMode};

/// Gradient with the same layout as [`EncoderParams`]; word rows are sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub words: BTreeMap<usize, Vec<f64>>,
    pub forward: LstmParams,
    pub backward: LstmParams,
    pub slots: Vec<Composition>,
}

impl EncoderGrads {
    pub fn zeros_like(p: &EncoderParams) -> Self {
        let width = p.part_width();
        Self {
            words: BTreeMap::new(),
            forward: LstmParams::zeros(p.word_dim(), p.hidden()),
            backward: LstmParams::zeros(p.word_dim(), p.hidden()),
            slots: p
                .slots
                .iter()
                .map(|_| Composition {
                    weight: vec![0.0; width * width],
                    bias: vec![0.0; width],
                })
                .collect(),
        }
    }

    /// Dense blocks in [`EncoderParams::segments`] order, minus the word table.
    pub fn dense_segments(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.extend(self.forward.segments());
        out.extend(self.backward.segments());
        for s in &self.slots {
            out.push(&s.weight);
            out.push(&s.bias);
        }
        out
    }

    /// Flatten into the full parameter order (dense word table included).
    pub fn to_flat(&self, p: &EncoderParams) -> Vec<f64> {
        let d = p.word_dim();
        let mut words = vec![0.0; p.words.data().len()];
        for (&row, g) in &self.words {
            words[row * d..(row + 1) * d].copy_from_slice(g);
        }
        let mut out = words;
        for seg in self.dense_segments() {
            out.extend_from_slice(seg);
        }
        out
    }
}

struct SlotGroup {
    slot: usize,
    sum: Vec<f64>,
    members: Vec<usize>,
}

/// Word encoding of one concept plus what its backward pass needs.
struct WordPass {
    rows: Vec<usize>,
    output: Vec<f64>,
    forward: LstmTrace,
    backward: LstmTrace,
}

fn word_pass(params: &EncoderParams, rows: Vec<usize>) -> WordPass {
    let inputs: Vec<&[f64]> = rows.iter().map(|&r| params.words.row(r)).collect();
    let reversed: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    let (mut output, forward) = params.forward.forward(&inputs);
    let (hb, backward) = params.backward.forward(&reversed);
    output.extend(hb);
    WordPass {
        rows,
        output,
        forward,
        backward,
    }
}

/// Per-chunk accumulator for the LSTM backward passes.
struct LstmAccum {
    forward: LstmParams,
    backward: LstmParams,
    words: Vec<(usize, Vec<f64>)>,
}

fn lstm_backward(params: &EncoderParams, passes: &[(&WordPass, &[f64])]) -> LstmAccum {
    let h = params.hidden();
    let d = params.word_dim();
    let mut acc = LstmAccum {
        forward: LstmParams::zeros(d, h),
        backward: LstmParams::zeros(d, h),
        words: Vec::new(),
    };
    for (pass, grad) in passes {
        let n = pass.rows.len();
        let inputs: Vec<&[f64]> = pass.rows.iter().map(|&r| params.words.row(r)).collect();
        let reversed: Vec<&[f64]> = inputs.iter().rev().copied().collect();
        let mut d_fwd = vec![vec![0.0; d]; n];
        let mut d_bwd = vec![vec![0.0; d]; n];
        params.forward.backward(
            &inputs,
            &pass.forward,
            &grad[..h],
            &mut acc.forward,
            &mut d_fwd,
        );
        params.backward.backward(
            &reversed,
            &pass.backward,
            &grad[h..],
            &mut acc.backward,
            &mut d_bwd,
        );
        for t in 0..n {
            let mut g = std::mem::take(&mut d_fwd[t]);
            add_into(&mut g, &d_bwd[n - 1 - t]);
            acc.words.push((pass.rows[t], g));
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// Mean hinge loss over the batch.
    pub loss: f64,
    /// `(positive score, negative score)` per sample.
    pub scores: Vec<(f64, f64)>,
    pub grads: EncoderGrads,
}

/// `max(0, margin - (pos - neg))`. Zero exactly when `pos - neg >= margin`
/// as evaluated in floating point.
pub fn margin_loss(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin - (pos_score - neg_score)).max(0.0)
}

/// Forward and backward pass of the mean margin loss over `samples`.
///
/// `mode_for` picks the neighbor selection for each concept whose neighbor
/// part is needed. With `pool` set, per-concept LSTM work is spread over its
/// threads; accumulation order then depends on the pool size only.
pub fn batch_pass(
    encoder: &ConceptEncoder<'_>,
    samples: &[PairSample],
    margin: f64,
    mode_for: &(dyn Fn(ConceptId) -> NeighborMode + Sync),
    pool: Option<&rayon::ThreadPool>,
) -> crate::error::Result<BatchOutcome> {
    let params = encoder.params();
    let kg = encoder.graph();
    let width = params.part_width();

    // Concepts scored directly, in first-appearance order.
    let mut scored: Vec<ConceptId> = Vec::new();
    let mut scored_idx: HashMap<ConceptId, usize> = HashMap::new();
    for s in samples {
        for c in [s.anchor, s.positive, s.negative] {
            scored_idx.entry(c).or_insert_with(|| {
                scored.push(c);
                scored.len() - 1
            });
        }
    }
    let neighbor_lists: Vec<Vec<Edge>> = scored
        .iter()
        .map(|&c| kg.neighbors(c, params.neighbor_cap, mode_for(c)))
        .collect::<crate::error::Result<_>>()?;

    // Every concept that needs a word encoding.
    let mut word_concepts: Vec<ConceptId> = scored.clone();
    let mut word_idx: HashMap<ConceptId, usize> = scored_idx.clone();
    for list in &neighbor_lists {
        for e in list {
            word_idx.entry(e.neighbor).or_insert_with(|| {
                word_concepts.push(e.neighbor);
                word_concepts.len() - 1
            });
        }
    }

    let run_forward = || -> Vec<WordPass> {
        word_concepts
            .par_iter()
            .map(|&c| word_pass(params, encoder.concept_rows(c)))
            .collect()
    };
    let passes: Vec<WordPass> = match pool {
        Some(p) => p.install(run_forward),
        None => word_concepts
            .iter()
            .map(|&c| word_pass(params, encoder.concept_rows(c)))
            .collect(),
    };

    // Per scored concept: neighbors grouped by slot, with the summed word
    // encoding of each group (the slot map is affine in that sum).
    let groups: Vec<Vec<SlotGroup>> = neighbor_lists
        .iter()
        .map(|list| {
            let mut by_slot: BTreeMap<usize, SlotGroup> = BTreeMap::new();
            for e in list {
                let wi = word_idx[&e.neighbor];
                let slot = encoder.slot_for(e.relation, e.direction);
                let g = by_slot.entry(slot).or_insert_with(|| SlotGroup {
                    slot,
                    sum: vec![0.0; width],
                    members: Vec::new(),
                });
                add_into(&mut g.sum, &passes[wi].output);
                g.members.push(wi);
            }
            by_slot.into_values().collect()
        })
        .collect();
    let neighbor_parts: Vec<Vec<f64>> = groups
        .iter()
        .map(|gs| {
            let mut acc = vec![0.0; width];
            for g in gs {
                params.slots[g.slot].apply_sum_into(&g.sum, g.members.len(), &mut acc);
            }
            acc
        })
        .collect();

    let score = |a: ConceptId, b: ConceptId| -> f64 {
        let (ia, ib) = (scored_idx[&a], scored_idx[&b]);
        dot(&passes[word_idx[&a]].output, &passes[word_idx[&b]].output)
            + dot(&neighbor_parts[ia], &neighbor_parts[ib])
    };

    let inv_n = 1.0 / samples.len().max(1) as f64;
    let mut d_word = vec![vec![0.0; width]; word_concepts.len()];
    let mut d_neighbor = vec![vec![0.0; width]; scored.len()];
    let mut total = 0.0;
    let mut scores = Vec::with_capacity(samples.len());
    for s in samples {
        let pos = score(s.anchor, s.positive);
        let neg = score(s.anchor, s.negative);
        scores.push((pos, neg));
        let l = margin_loss(pos, neg, margin);
        total += l;
        if l > 0.0 {
            for (other, coef) in [(s.positive, -inv_n), (s.negative, inv_n)] {
                let (wa, wb) = (word_idx[&s.anchor], word_idx[&other]);
                let (na, nb) = (scored_idx[&s.anchor], scored_idx[&other]);
                let hw_a = passes[wa].output.clone();
                add_scaled(&mut d_word[wa], &passes[wb].output, coef);
                add_scaled(&mut d_word[wb], &hw_a, coef);
                let hn_a = neighbor_parts[na].clone();
                let hn_b = neighbor_parts[nb].clone();
                add_scaled(&mut d_neighbor[na], &hn_b, coef);
                add_scaled(&mut d_neighbor[nb], &hn_a, coef);
            }
        }
    }

    let mut grads = EncoderGrads::zeros_like(params);

    // Neighbor parts -> composition slots and neighbor word encodings.
    for (i, gs) in groups.iter().enumerate() {
        let dn = &d_neighbor[i];
        if dn.iter().all(|&v| v == 0.0) {
            continue;
        }
        for g in gs {
            let slot = &params.slots[g.slot];
            let grad = &mut grads.slots[g.slot];
            let count = g.members.len() as f64;
            let mut back = vec![0.0; width];
            for r in 0..width {
                let dr = dn[r];
                if dr == 0.0 {
                    continue;
                }
                grad.bias[r] += count * dr;
                add_scaled(&mut grad.weight[r * width..(r + 1) * width], &g.sum, dr);
                add_scaled(&mut back, &slot.weight[r * width..(r + 1) * width], dr);
            }
            for &wi in &g.members {
                add_into(&mut d_word[wi], &back);
            }
        }
    }

    // Word encodings -> LSTMs and word rows.
    let work: Vec<(&WordPass, &[f64])> = passes
        .iter()
        .zip(&d_word)
        .filter(|(_, g)| g.iter().any(|&v| v != 0.0))
        .map(|(p, g)| (p, g.as_slice()))
        .collect();
    let accums: Vec<LstmAccum> = match pool {
        Some(p) if work.len() > 1 => {
            let chunk = work.len().div_ceil(p.current_num_threads());
            p.install(|| {
                work.par_chunks(chunk)
                    .map(|c| lstm_backward(params, c))
                    .collect()
            })
        }
        _ => vec![lstm_backward(params, &work)],
    };
    let d = params.word_dim();
    for acc in accums {
        grads.forward.add_assign(&acc.forward);
        grads.backward.add_assign(&acc.backward);
        for (row, g) in acc.words {
            add_into(grads.words.entry(row).or_insert_with(|| vec![0.0; d]), &g);
        }
    }

    Ok(BatchOutcome {
        loss: total * inv_n,
        scores,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hinge_identities() {
        assert_eq!(margin_loss(1.0, 0.5, 0.1), 0.0);
        assert_eq!(margin_loss(0.5, 0.5, 0.1), 0.1);
        // 0.1 - (0.2 - 0.3) rounds to the double just below 0.2.
        let l = margin_loss(0.2, 0.3, 0.1);
        assert!((l - 0.2).abs() <= f64::EPSILON * 0.2, "{l}");
    }
}
