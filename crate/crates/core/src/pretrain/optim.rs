//! Adam with lazy (touched-rows-only) updates for the word table and
//! optional decoupled weight decay.

use super::backprop::EncoderGrads;
use crate::encoder::EncoderParams;

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled decay: each updated parameter shrinks by `lr * weight_decay * p`.
    pub weight_decay: f64,
    step: u64,
    dense_m: Vec<Vec<f64>>,
    dense_v: Vec<Vec<f64>>,
    word_m: Vec<f64>,
    word_v: Vec<f64>,
}

impl Adam {
    pub fn new(params: &EncoderParams, learning_rate: f64) -> Self {
        let segments = params.segments();
        let dense: Vec<usize> = segments[1..].iter().map(|(_, s)| s.len()).collect();
        let words = segments[0].1.len();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            step: 0,
            dense_m: dense.iter().map(|&n| vec![0.0; n]).collect(),
            dense_v: dense.iter().map(|&n| vec![0.0; n]).collect(),
            word_m: vec![0.0; words],
            word_v: vec![0.0; words],
        }
    }

    pub fn step(&mut self, params: &mut EncoderParams, grads: &EncoderGrads, update_words: bool) {
        self.step += 1;
        if self.learning_rate == 0.0 {
            return;
        }
        let t = self.step as i32;
        let lr_t =
            self.learning_rate * (1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t));
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let decay = self.learning_rate * self.weight_decay;
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            if decay != 0.0 {
                *p -= decay * *p;
            }
            *p -= lr_t * *m / (v.sqrt() + eps);
        };

        let d = params.word_dim();
        let mut segments = params.segments_mut();
        if update_words {
            let table = &mut segments[0];
            for (&row, g) in &grads.words {
                for k in 0..d {
                    let i = row * d + k;
                    update(
                        &mut table[i],
                        g[k],
                        &mut self.word_m[i],
                        &mut self.word_v[i],
                    );
                }
            }
        }
        for (((seg, g), m), v) in segments[1..]
            .iter_mut()
            .zip(grads.dense_segments())
            .zip(&mut self.dense_m)
            .zip(&mut self.dense_v)
        {
            for i in 0..seg.len() {
                update(&mut seg[i], g[i], &mut m[i], &mut v[i]);
            }
        }
    }
}
