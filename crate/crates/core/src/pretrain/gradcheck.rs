//! Central finite-difference check of the hand-written backward pass.
//!
//! The numeric side perturbs one parameter at a time and re-scores through
//! the inference API ([`ConceptEncoder::score_pair`]), so it never touches the
//! batched backprop code it is checking.

use serde::Serialize;

use super::backprop::{batch_pass, margin_loss};
use super::sampling::PairSample;
use crate::encoder::{ConceptEncoder, EncoderParams};
use crate::error::Result;
use crate::kb::{KnowledgeGraph, NeighborMode};

/// Denominator floor of the relative error. Entries whose gradients are
/// smaller than this (often exactly zero, e.g. recurrent weights of one-word
/// concepts) are judged on absolute error instead of amplified round-off.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    /// `max |g_a - g_n| / max(REL_FLOOR, |g_a| + |g_n|)` over all parameters.
    pub max_relative_error: f64,
    /// Segment name and offset of the worst parameter.
    pub worst: Option<(String, usize)>,
    pub num_params: usize,
    pub loss: f64,
    /// Largest analytic gradient magnitude (0 means an inactive hinge).
    pub max_abs_gradient: f64,
}

fn sample_loss(
    params: &EncoderParams,
    kg: &KnowledgeGraph,
    sample: &PairSample,
    margin: f64,
) -> Result<f64> {
    let enc = ConceptEncoder::new(params, kg)?;
    let pos = enc.score_pair(sample.anchor, sample.positive, NeighborMode::TopK)?;
    let neg = enc.score_pair(sample.anchor, sample.negative, NeighborMode::TopK)?;
    Ok(margin_loss(pos, neg, margin))
}

/// Analytic gradient of the single-sample loss in flat parameter order.
pub fn analytic_gradient(
    params: &EncoderParams,
    kg: &KnowledgeGraph,
    sample: &PairSample,
    margin: f64,
) -> Result<(f64, Vec<f64>)> {
    let enc = ConceptEncoder::new(params, kg)?;
    let out = batch_pass(
        &enc,
        std::slice::from_ref(sample),
        margin,
        &|_| NeighborMode::TopK,
        None,
    )?;
    Ok((out.loss, out.grads.to_flat(params)))
}

pub fn gradient_check(
    params: &EncoderParams,
    kg: &KnowledgeGraph,
    sample: &PairSample,
    margin: f64,
    epsilon: f64,
) -> Result<GradCheckReport> {
    let (loss, analytic) = analytic_gradient(params, kg, sample, margin)?;
    let names: Vec<(String, usize)> = params
        .segments()
        .iter()
        .map(|(n, s)| (n.clone(), s.len()))
        .collect();
    let mut probe = params.clone();
    let mut flat = 0usize;
    let mut max_err = 0.0f64;
    let mut worst = None;
    for (seg_idx, (name, len)) in names.iter().enumerate() {
        for k in 0..*len {
            let orig = probe.segments_mut()[seg_idx][k];
            probe.segments_mut()[seg_idx][k] = orig + epsilon;
            let up = sample_loss(&probe, kg, sample, margin)?;
            probe.segments_mut()[seg_idx][k] = orig - epsilon;
            let down = sample_loss(&probe, kg, sample, margin)?;
            probe.segments_mut()[seg_idx][k] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic[flat];
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(REL_FLOOR);
            if err > max_err {
                max_err = err;
                worst = Some((name.clone(), k));
            }
            flat += 1;
        }
    }
    Ok(GradCheckReport {
        max_relative_error: max_err,
        worst,
        num_params: flat,
        loss,
        max_abs_gradient: analytic.iter().fold(0.0, |m, g| m.max(g.abs())),
    })
}
