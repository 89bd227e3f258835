//! Single-layer LSTM with hand-written backpropagation through time.
//!
//! Gate layout in every `4H` block is `[input, forget, cell candidate, output]`.
//! Weight matrices are row-major: `w_x` is `4H x D`, `w_h` is `4H x H`.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub bias: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Everything a step needs to run backwards.
#[derive(Debug, Clone)]
struct Step {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates, `4H`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Forward record of one sequence.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<Step>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w_x: vec![0.0; 4 * hidden * input_dim],
            w_h: vec![0.0; 4 * hidden * hidden],
            bias: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform in `±1/sqrt(H)`, biases zero.
    pub fn random<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(input_dim, hidden);
        for w in p.w_x.iter_mut().chain(p.w_h.iter_mut()) {
            *w = rng.gen_range(-bound..bound);
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.w_x.len() + self.w_h.len() + self.bias.len()
    }

    pub fn segments(&self) -> [&[f64]; 3] {
        [&self.w_x, &self.w_h, &self.bias]
    }

    pub fn segments_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.w_x, &mut self.w_h, &mut self.bias]
    }

    fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, Step) {
        let h = self.hidden;
        let d = self.input_dim;
        let mut pre = self.bias.clone();
        for (row, p) in pre.iter_mut().enumerate() {
            let wx = &self.w_x[row * d..(row + 1) * d];
            let wh = &self.w_h[row * h..(row + 1) * h];
            *p += dot(wx, x) + dot(wh, h_prev);
        }
        let mut gates = pre;
        for k in 0..h {
            gates[k] = sigmoid(gates[k]);
            gates[h + k] = sigmoid(gates[h + k]);
            gates[2 * h + k] = gates[2 * h + k].tanh();
            gates[3 * h + k] = sigmoid(gates[3 * h + k]);
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut h_out = vec![0.0; h];
        for k in 0..h {
            c[k] = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
            tanh_c[k] = c[k].tanh();
            h_out[k] = gates[3 * h + k] * tanh_c[k];
        }
        let step = Step {
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            tanh_c,
        };
        (h_out, c, step)
    }

    /// Final hidden state after consuming `inputs` in order from zero states.
    pub fn run(&self, inputs: &[&[f64]]) -> Vec<f64> {
        self.forward(inputs).0
    }

    pub fn forward(&self, inputs: &[&[f64]]) -> (Vec<f64>, LstmTrace) {
        let mut h = vec![0.0; self.hidden];
        let mut c = vec![0.0; self.hidden];
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            debug_assert_eq!(x.len(), self.input_dim);
            let (h_next, c_next, step) = self.step(x, &h, &c);
            steps.push(step);
            h = h_next;
            c = c_next;
        }
        (h, LstmTrace { steps })
    }

    /// Backpropagate a gradient on the final hidden state. Parameter gradients
    /// accumulate into `grads`; `d_inputs[t]` receives the gradient of input `t`.
    pub fn backward(
        &self,
        inputs: &[&[f64]],
        trace: &LstmTrace,
        d_h_final: &[f64],
        grads: &mut LstmParams,
        d_inputs: &mut [Vec<f64>],
    ) {
        let h = self.hidden;
        let d = self.input_dim;
        let mut dh = d_h_final.to_vec();
        let mut dc = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];
        for (t, step) in trace.steps.iter().enumerate().rev() {
            let g = &step.gates;
            for k in 0..h {
                let (i, f, cand, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let tc = step.tanh_c[k];
                let d_o = dh[k] * tc;
                dc[k] += dh[k] * o * (1.0 - tc * tc);
                let d_i = dc[k] * cand;
                let d_cand = dc[k] * i;
                let d_f = dc[k] * step.c_prev[k];
                da[k] = d_i * i * (1.0 - i);
                da[h + k] = d_f * f * (1.0 - f);
                da[2 * h + k] = d_cand * (1.0 - cand * cand);
                da[3 * h + k] = d_o * o * (1.0 - o);
                dc[k] *= f;
            }
            let x = inputs[t];
            let dx = &mut d_inputs[t];
            let mut dh_prev = vec![0.0; h];
            for (row, &a) in da.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                grads.bias[row] += a;
                let gx = &mut grads.w_x[row * d..(row + 1) * d];
                let wx = &self.w_x[row * d..(row + 1) * d];
                for j in 0..d {
                    gx[j] += a * x[j];
                    dx[j] += a * wx[j];
                }
                let gh = &mut grads.w_h[row * h..(row + 1) * h];
                let wh = &self.w_h[row * h..(row + 1) * h];
                for j in 0..h {
                    gh[j] += a * step.h_prev[j];
                    dh_prev[j] += a * wh[j];
                }
            }
            dh = dh_prev;
        }
    }

    pub fn add_assign(&mut self, other: &LstmParams) {
        add_into(&mut self.w_x, &other.w_x);
        add_into(&mut self.w_h, &other.w_h);
        add_into(&mut self.bias, &other.bias);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameters_give_zero_state() {
        let p = LstmParams::zeros(3, 1);
        let out = p.run(&[&[0.4, -1.0, 2.0]]);
        // tanh(0 * c) with c = sigmoid(0) * tanh(0) = 0
        assert_eq!(out, vec![0.0]);
    }

    /// Straight-line single step with H = 1, D = 1, written out gate by gate.
    #[test]
    fn single_step_matches_scalar_oracle() {
        let x = 0.7;
        let (wi, wf, wg, wo) = (0.5, -0.3, 0.8, 0.2);
        let (bi, bf, bg, bo) = (0.1, 0.4, -0.2, 0.3);
        let p = LstmParams {
            input_dim: 1,
            hidden: 1,
            w_x: vec![wi, wf, wg, wo],
            w_h: vec![0.9, 0.9, 0.9, 0.9],
            bias: vec![bi, bf, bg, bo],
        };
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let i = s(wi * x + bi);
        let g = (wg * x + bg).tanh();
        let o = s(wo * x + bo);
        let c = i * g;
        let expected = o * c.tanh();
        let got = p.run(&[&[x]]);
        assert!(
            (got[0] - expected).abs() < 1e-15,
            "{} vs {expected}",
            got[0]
        );
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = LstmParams::random(3, 2, &mut rng);
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let upstream = [0.7, -1.3];
        let loss = |p: &LstmParams| dot(&p.run(&inputs), &upstream);
        let (_, trace) = p.forward(&inputs);
        let mut grads = LstmParams::zeros(3, 2);
        let mut dx = vec![vec![0.0; 3]; 3];
        p.backward(&inputs, &trace, &upstream, &mut grads, &mut dx);
        let eps = 1e-6;
        let mut q = p.clone();
        for seg in 0..3 {
            for k in 0..q.segments()[seg].len() {
                let orig = q.segments()[seg][k];
                q.segments_mut()[seg][k] = orig + eps;
                let up = loss(&q);
                q.segments_mut()[seg][k] = orig - eps;
                let down = loss(&q);
                q.segments_mut()[seg][k] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads.segments()[seg][k];
                assert!(
                    (numeric - analytic).abs() < 1e-8,
                    "seg {seg} idx {k}: {numeric} vs {analytic}"
                );
            }
        }
        for t in 0..3 {
            for j in 0..3 {
                let mut xs2 = xs.clone();
                xs2[t][j] += eps;
                let up = dot(
                    &p.run(&xs2.iter().map(Vec::as_slice).collect::<Vec<_>>()),
                    &upstream,
                );
                xs2[t][j] -= 2.0 * eps;
                let down = dot(
                    &p.run(&xs2.iter().map(Vec::as_slice).collect::<Vec<_>>()),
                    &upstream,
                );
                assert!(((up - down) / (2.0 * eps) - dx[t][j]).abs() < 1e-8);
            }
        }
    }
}
