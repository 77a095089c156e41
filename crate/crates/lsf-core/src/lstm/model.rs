//! Model parameters, forward pass, pooling, loss, and backpropagation
//! through time.
//!
//! All parameters live in one flat `Vec<f64>`; `TensorSlot` names the
//! individual weight matrices and bias vectors inside it. Gradients use the
//! same layout, which keeps the optimizer, gradient clipping, checkpointing,
//! and finite-difference checks simple.

use super::LstmError;
use crate::linalg::{dot, matvec_add, matvec_t_add, outer_add};
use crate::preprocess::FeatureTensor;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ops::Range;

pub const DEFAULT_HIDDEN: usize = 100;
/// Predicted probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]`
/// before taking logs.
pub const BCE_CLAMP: f64 = 1e-7;

const GATES: usize = 4; // input, forget, output, cell in parameter order

/// A named contiguous tensor inside the flat parameter vector.
#[derive(Debug, Clone)]
pub struct TensorSlot {
    pub name: String,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, Copy)]
struct LayerLayout {
    input_dim: usize,
    hidden: usize,
    offset: usize,
}

impl LayerLayout {
    fn span(&self) -> usize {
        GATES * (self.hidden * self.input_dim + self.hidden * self.hidden + self.hidden)
    }
    /// Input weights for a gate: `hidden x input_dim`.
    fn input_w(&self, gate: usize) -> Range<usize> {
        let per_gate = self.hidden * self.input_dim;
        let start = self.offset + gate * per_gate;
        start..start + per_gate
    }
    /// Recurrent weights for a gate: `hidden x hidden`.
    fn recurrent_w(&self, gate: usize) -> Range<usize> {
        let base = self.offset + GATES * self.hidden * self.input_dim;
        let per_gate = self.hidden * self.hidden;
        let start = base + gate * per_gate;
        start..start + per_gate
    }
    /// Bias for a gate: `hidden`.
    fn bias(&self, gate: usize) -> Range<usize> {
        let base = self.offset
            + GATES * (self.hidden * self.input_dim + self.hidden * self.hidden);
        let start = base + gate * self.hidden;
        start..start + self.hidden
    }
}

/// Two stacked LSTM layers plus a dense sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    hidden: usize,
    input_dim: usize,
    params: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmModel {
    fn layer1(&self) -> LayerLayout {
        LayerLayout {
            input_dim: self.input_dim,
            hidden: self.hidden,
            offset: 0,
        }
    }
    fn layer2(&self) -> LayerLayout {
        let l1 = self.layer1();
        LayerLayout {
            input_dim: self.hidden,
            hidden: self.hidden,
            offset: l1.span(),
        }
    }
    fn head_w(&self) -> Range<usize> {
        let start = self.layer1().span() + self.layer2().span();
        start..start + self.hidden
    }
    fn head_b(&self) -> usize {
        self.layer1().span() + self.layer2().span() + self.hidden
    }

    pub fn n_params(hidden: usize, input_dim: usize) -> usize {
        let l1 = GATES * (hidden * input_dim + hidden * hidden + hidden);
        let l2 = GATES * (hidden * hidden + hidden * hidden + hidden);
        l1 + l2 + hidden + 1
    }

    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        Self {
            hidden,
            input_dim,
            params: vec![0.0; Self::n_params(hidden, input_dim)],
        }
    }

    /// Seeded initialization: weights uniform in `(-1/sqrt(u), 1/sqrt(u))`,
    /// forget-gate bias 1, remaining biases and head bias 0.
    pub fn new(hidden: usize, input_dim: usize, seed: u64) -> Self {
        let mut model = Self::zeros(hidden, input_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (hidden as f64).sqrt();
        let dist = Uniform::new(-k, k);
        for layer in [model.layer1(), model.layer2()] {
            for gate in 0..GATES {
                for idx in layer.input_w(gate).chain(layer.recurrent_w(gate)) {
                    model.params[idx] = dist.sample(&mut rng);
                }
            }
            // Gate order is input, forget, output, cell; bias the forget gate
            // open so early training does not erase the cell state.
            for idx in layer.bias(1) {
                model.params[idx] = 1.0;
            }
        }
        for idx in model.head_w() {
            model.params[idx] = dist.sample(&mut rng);
        }
        model
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn from_params(
        hidden: usize,
        input_dim: usize,
        params: Vec<f64>,
    ) -> Result<Self, LstmError> {
        if params.len() != Self::n_params(hidden, input_dim) {
            return Err(LstmError::InvalidParam(format!(
                "parameter vector length {} does not match shape (u={hidden}, in={input_dim})",
                params.len()
            )));
        }
        Ok(Self {
            hidden,
            input_dim,
            params,
        })
    }

    /// Named tensors in parameter order (used by the gradient check and to
    /// document the checkpoint layout).
    pub fn tensor_slots(&self) -> Vec<TensorSlot> {
        let gate_names = ["input", "forget", "output", "cell"];
        let mut slots = Vec::new();
        for (li, layer) in [self.layer1(), self.layer2()].into_iter().enumerate() {
            for (gi, gname) in gate_names.iter().enumerate() {
                slots.push(TensorSlot {
                    name: format!("layer{}.{}_gate.input_w", li + 1, gname),
                    range: layer.input_w(gi),
                });
            }
            for (gi, gname) in gate_names.iter().enumerate() {
                slots.push(TensorSlot {
                    name: format!("layer{}.{}_gate.recurrent_w", li + 1, gname),
                    range: layer.recurrent_w(gi),
                });
            }
            for (gi, gname) in gate_names.iter().enumerate() {
                slots.push(TensorSlot {
                    name: format!("layer{}.{}_gate.bias", li + 1, gname),
                    range: layer.bias(gi),
                });
            }
        }
        slots.push(TensorSlot {
            name: "head.weights".into(),
            range: self.head_w(),
        });
        slots.push(TensorSlot {
            name: "head.bias".into(),
            range: self.head_b()..self.head_b() + 1,
        });
        slots
    }

    fn check_input(&self, input: &FeatureTensor) -> Result<(), LstmError> {
        if input.rows == 0 {
            return Err(LstmError::EmptyInput);
        }
        if input.cols != self.input_dim {
            return Err(LstmError::DimensionMismatch {
                expected: self.input_dim,
                found: input.cols,
            });
        }
        if !input.is_finite() {
            return Err(LstmError::NonFinite);
        }
        Ok(())
    }

    /// Run one layer over `steps` timesteps; `inputs` holds the timestep
    /// vectors contiguously (`steps * layer.input_dim` values).
    fn run_layer(&self, layer: LayerLayout, steps: usize, inputs: &[f64]) -> LayerCache {
        debug_assert_eq!(inputs.len(), steps * layer.input_dim);
        let u = layer.hidden;
        let mut cache = LayerCache::new(steps, u);
        let mut h_prev = vec![0.0; u];
        let mut c_prev = vec![0.0; u];
        let mut acts = vec![0.0; GATES * u];
        let p = &self.params;
        for t in 0..steps {
            let x = &inputs[t * layer.input_dim..(t + 1) * layer.input_dim];
            for gate in 0..GATES {
                let a = &mut acts[gate * u..(gate + 1) * u];
                a.copy_from_slice(&p[layer.bias(gate)]);
                matvec_add(&p[layer.input_w(gate)], u, layer.input_dim, x, a);
                matvec_add(&p[layer.recurrent_w(gate)], u, u, &h_prev, a);
            }
            for j in 0..u {
                let i_g = sigmoid(acts[j]);
                let f_g = sigmoid(acts[u + j]);
                let o_g = sigmoid(acts[2 * u + j]);
                let c_hat = acts[3 * u + j].tanh();
                let c = f_g * c_prev[j] + i_g * c_hat;
                let tanh_c = c.tanh();
                let h = o_g * tanh_c;
                let at = t * u + j;
                cache.gate_i[at] = i_g;
                cache.gate_f[at] = f_g;
                cache.gate_o[at] = o_g;
                cache.gate_c[at] = c_hat;
                cache.cell[at] = c;
                cache.tanh_cell[at] = tanh_c;
                cache.hidden[at] = h;
                h_prev[j] = h;
                c_prev[j] = c;
            }
        }
        cache
    }

    /// Run both layers and the head; keeps every intermediate needed by the
    /// backward pass.
    pub fn forward(&self, input: &FeatureTensor) -> Result<ForwardPass, LstmError> {
        self.check_input(input)?;
        let steps = input.rows;
        let u = self.hidden;

        let cache1 = self.run_layer(self.layer1(), steps, &input.data);
        let cache2 = self.run_layer(self.layer2(), steps, &cache1.hidden);

        let (pooled, argmax) = global_max_pool_flat(&cache2.hidden, steps, u);
        let logit = dot(&self.params[self.head_w()], &pooled) + self.params[self.head_b()];
        let prob = sigmoid(logit);
        Ok(ForwardPass {
            steps,
            cache1,
            cache2,
            pooled,
            argmax,
            logit,
            prob,
        })
    }

    /// Pooled second-layer hidden state: the feature vector handed to the SVM.
    pub fn features(&self, input: &FeatureTensor) -> Result<Vec<f64>, LstmError> {
        Ok(self.forward(input)?.pooled)
    }

    /// Sigmoid head output in (0, 1).
    pub fn predict_proba(&self, input: &FeatureTensor) -> Result<f64, LstmError> {
        Ok(self.forward(input)?.prob)
    }

    /// Accumulate gradients of `weight * bce(prob, label)` into `grads`
    /// (same flat layout as the parameters). Returns the unweighted sample
    /// loss.
    pub fn accumulate_gradients(
        &self,
        input: &FeatureTensor,
        pass: &ForwardPass,
        label: f64,
        weight: f64,
        grads: &mut [f64],
    ) -> f64 {
        debug_assert_eq!(grads.len(), self.params.len());
        let u = self.hidden;
        let steps = pass.steps;

        // Sigmoid + binary cross-entropy collapses to (prob - label) at the
        // logit.
        let dlogit = (pass.prob - label) * weight;
        grads[self.head_b()] += dlogit;
        let head_w = self.head_w();
        {
            let g = &mut grads[head_w.clone()];
            for (gj, &vj) in g.iter_mut().zip(&pass.pooled) {
                *gj += dlogit * vj;
            }
        }
        // Max pooling routes the feature gradient to each unit's argmax
        // timestep.
        let mut dh2 = vec![0.0; steps * u];
        for j in 0..u {
            dh2[pass.argmax[j] * u + j] = dlogit * self.params[head_w.clone()][j];
        }

        let dh1 = self.backward_layer(self.layer2(), &pass.cache2, &pass.cache1.hidden, u, &dh2, grads);
        let _dx = self.backward_layer(self.layer1(), &pass.cache1, &input.data, self.input_dim, &dh1, grads);

        let p = pass.prob.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
    }

    /// BPTT through one layer. `dh_ext` is the per-timestep upstream
    /// gradient; returns the gradient w.r.t. the layer inputs.
    fn backward_layer(
        &self,
        layer: LayerLayout,
        cache: &LayerCache,
        inputs: &[f64],
        input_dim: usize,
        dh_ext: &[f64],
        grads: &mut [f64],
    ) -> Vec<f64> {
        let u = layer.hidden;
        let steps = cache.steps;
        let p = &self.params;
        let mut dx_all = vec![0.0; steps * input_dim];
        let mut dh_next = vec![0.0; u];
        let mut dc_next = vec![0.0; u];
        let mut da = vec![0.0; GATES * u];
        for t in (0..steps).rev() {
            let at = t * u;
            for j in 0..u {
                let dh = dh_ext[at + j] + dh_next[j];
                let o_g = cache.gate_o[at + j];
                let tanh_c = cache.tanh_cell[at + j];
                let dc = dc_next[j] + dh * o_g * (1.0 - tanh_c * tanh_c);
                let i_g = cache.gate_i[at + j];
                let f_g = cache.gate_f[at + j];
                let c_hat = cache.gate_c[at + j];
                let c_prev = if t > 0 { cache.cell[at - u + j] } else { 0.0 };
                let d_o = dh * tanh_c;
                let d_i = dc * c_hat;
                let d_f = dc * c_prev;
                let d_chat = dc * i_g;
                dc_next[j] = dc * f_g;
                da[j] = d_i * i_g * (1.0 - i_g);
                da[u + j] = d_f * f_g * (1.0 - f_g);
                da[2 * u + j] = d_o * o_g * (1.0 - o_g);
                da[3 * u + j] = d_chat * (1.0 - c_hat * c_hat);
            }
            let x = &inputs[t * input_dim..(t + 1) * input_dim];
            let h_prev = if t > 0 {
                Some(&cache.hidden[at - u..at])
            } else {
                None
            };
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            let dx = &mut dx_all[t * input_dim..(t + 1) * input_dim];
            for gate in 0..GATES {
                let da_g = &da[gate * u..(gate + 1) * u];
                outer_add(&mut grads[layer.input_w(gate)], u, input_dim, da_g, x);
                if let Some(hp) = h_prev {
                    outer_add(&mut grads[layer.recurrent_w(gate)], u, u, da_g, hp);
                }
                {
                    let gb = &mut grads[layer.bias(gate)];
                    for (g, &d) in gb.iter_mut().zip(da_g) {
                        *g += d;
                    }
                }
                matvec_t_add(&p[layer.input_w(gate)], u, input_dim, da_g, dx);
                matvec_t_add(&p[layer.recurrent_w(gate)], u, u, da_g, &mut dh_next);
            }
        }
        dx_all
    }
}

/// Per-layer forward cache.
#[derive(Debug, Clone)]
pub struct LayerCache {
    steps: usize,
    pub gate_i: Vec<f64>,
    pub gate_f: Vec<f64>,
    pub gate_o: Vec<f64>,
    /// Candidate cell activation (tanh).
    pub gate_c: Vec<f64>,
    pub cell: Vec<f64>,
    pub tanh_cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl LayerCache {
    fn new(steps: usize, u: usize) -> Self {
        let z = vec![0.0; steps * u];
        Self {
            steps,
            gate_i: z.clone(),
            gate_f: z.clone(),
            gate_o: z.clone(),
            gate_c: z.clone(),
            cell: z.clone(),
            tanh_cell: z.clone(),
            hidden: z,
        }
    }
}

/// Everything the backward pass needs from one forward run.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub steps: usize,
    pub cache1: LayerCache,
    pub cache2: LayerCache,
    /// Max-pooled second-layer hidden state (the feature vector v).
    pub pooled: Vec<f64>,
    /// Argmax timestep per unit; ties resolve to the lowest timestep.
    pub argmax: Vec<usize>,
    pub logit: f64,
    pub prob: f64,
}

fn global_max_pool_flat(h: &[f64], steps: usize, u: usize) -> (Vec<f64>, Vec<usize>) {
    let mut pooled = h[..u].to_vec();
    let mut argmax = vec![0usize; u];
    for t in 1..steps {
        for j in 0..u {
            let v = h[t * u + j];
            if v > pooled[j] {
                pooled[j] = v;
                argmax[j] = t;
            }
        }
    }
    (pooled, argmax)
}

/// Column-wise max over timesteps: `v[j] = max_t h[t][j]`.
pub fn global_max_pool(h: &FeatureTensor) -> Result<Vec<f64>, LstmError> {
    if h.rows == 0 {
        return Err(LstmError::EmptyInput);
    }
    Ok(global_max_pool_flat(&h.data, h.rows, h.cols).0)
}

/// Mean binary cross-entropy with predictions clamped away from {0, 1}.
pub fn bce_loss(predictions: &[f64], labels: &[f64]) -> Result<f64, LstmError> {
    if predictions.len() != labels.len() {
        return Err(LstmError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(LstmError::EmptyInput);
    }
    let mut total = 0.0;
    for (&p, &y) in predictions.iter().zip(labels) {
        if !p.is_finite() || !y.is_finite() {
            return Err(LstmError::NonFinite);
        }
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        total += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    }
    Ok(total / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> FeatureTensor {
        let mut t = FeatureTensor::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                t.data[r * cols + c] = f(r, c);
            }
        }
        t
    }

    #[test]
    fn zero_parameters_give_zero_hidden_states() {
        // Gates sit at 0.5 and the candidate at 0, so the cell never moves.
        let model = LstmModel::zeros(5, 2);
        let input = tensor(7, 2, |r, c| (r as f64 + 1.0) * (c as f64 - 0.5));
        let pass = model.forward(&input).unwrap();
        assert!(pass.cache1.hidden.iter().all(|&h| h == 0.0));
        assert!(pass.cache2.hidden.iter().all(|&h| h == 0.0));
        assert!(pass.cache1.gate_i.iter().all(|&g| g == 0.5));
        assert_eq!(pass.prob, 0.5);
    }

    #[test]
    fn zero_input_zero_biases_matches_zero_param_case_at_t1() {
        let model = LstmModel::new(4, 2, 9);
        let input = tensor(1, 2, |_, _| 0.0);
        let pass = model.forward(&input).unwrap();
        // At t=1 with zero input and h0=0, activations are the biases; the
        // seeded init zeroes all but the forget bias, so i=o=0.5, c_hat=0.
        for j in 0..4 {
            assert!((pass.cache1.gate_i[j] - 0.5).abs() < 1e-15);
            assert!((pass.cache1.gate_o[j] - 0.5).abs() < 1e-15);
            assert_eq!(pass.cache1.gate_c[j], 0.0);
            assert_eq!(pass.cache1.hidden[j], 0.0);
        }
    }

    /// Scalar-loop re-implementation of the cell equations, written directly
    /// from the update rules as an independent oracle.
    fn oracle_forward(model: &LstmModel, input: &FeatureTensor) -> (Vec<f64>, f64) {
        let u = model.hidden();
        let slots = model.tensor_slots();
        let get = |name: &str| -> &[f64] {
            let s = slots.iter().find(|s| s.name == name).unwrap();
            &model.params()[s.range.clone()]
        };
        let mut layer_in: Vec<Vec<f64>> = (0..input.rows).map(|t| input.row(t).to_vec()).collect();
        for layer in 1..=2 {
            let names = ["input", "forget", "output", "cell"];
            let iw: Vec<&[f64]> = names
                .iter()
                .map(|g| get(&format!("layer{layer}.{g}_gate.input_w")))
                .collect();
            let rw: Vec<&[f64]> = names
                .iter()
                .map(|g| get(&format!("layer{layer}.{g}_gate.recurrent_w")))
                .collect();
            let bs: Vec<&[f64]> = names
                .iter()
                .map(|g| get(&format!("layer{layer}.{g}_gate.bias")))
                .collect();
            let in_dim = layer_in[0].len();
            let mut h = vec![0.0; u];
            let mut c = vec![0.0; u];
            let mut out = Vec::new();
            for x in &layer_in {
                let mut h_new = vec![0.0; u];
                let mut c_new = vec![0.0; u];
                for j in 0..u {
                    let mut acts = [0.0; 4];
                    for (g, act) in acts.iter_mut().enumerate() {
                        let mut a = bs[g][j];
                        for (k, &xv) in x.iter().enumerate().take(in_dim) {
                            a += iw[g][j * in_dim + k] * xv;
                        }
                        for (k, &hv) in h.iter().enumerate() {
                            a += rw[g][j * u + k] * hv;
                        }
                        *act = a;
                    }
                    let ig = 1.0 / (1.0 + (-acts[0]).exp());
                    let fg = 1.0 / (1.0 + (-acts[1]).exp());
                    let og = 1.0 / (1.0 + (-acts[2]).exp());
                    let ch = acts[3].tanh();
                    c_new[j] = fg * c[j] + ig * ch;
                    h_new[j] = og * c_new[j].tanh();
                }
                h = h_new;
                c = c_new;
                out.push(h.clone());
            }
            layer_in = out;
        }
        let mut v = layer_in[0].clone();
        for row in &layer_in {
            for (vj, &hj) in v.iter_mut().zip(row) {
                if hj > *vj {
                    *vj = hj;
                }
            }
        }
        let w = get("head.weights");
        let b = get("head.bias")[0];
        let mut z = b;
        for (wj, vj) in w.iter().zip(&v) {
            z += wj * vj;
        }
        (v, 1.0 / (1.0 + (-z).exp()))
    }

    #[test]
    fn forward_matches_scalar_oracle() {
        let model = LstmModel::new(3, 2, 42);
        let input = tensor(4, 2, |r, c| ((r * 2 + c) as f64 * 0.9).sin());
        let pass = model.forward(&input).unwrap();
        let (v, prob) = oracle_forward(&model, &input);
        for (a, b) in pass.pooled.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((pass.prob - prob).abs() < 1e-12);
    }

    #[test]
    fn pool_hand_case() {
        // Two units over three timesteps.
        let h = tensor(3, 2, |r, c| [[1.0, 2.0], [5.0, 0.0], [3.0, 4.0]][r][c]);
        assert_eq!(global_max_pool(&h).unwrap(), vec![5.0, 4.0]);
    }

    #[test]
    fn pool_single_timestep() {
        let h = tensor(1, 3, |_, c| c as f64);
        assert_eq!(global_max_pool(&h).unwrap(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn pool_invariant_to_timestep_permutation() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = tensor(8, 3, |_, _| rng.gen::<f64>() - 0.5);
        let base = global_max_pool(&h).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..8).map(|r| h.row(r).to_vec()).collect();
        for _ in 0..10 {
            rows.shuffle(&mut rng);
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let shuffled = FeatureTensor { rows: 8, cols: 3, data: flat };
            assert_eq!(global_max_pool(&shuffled).unwrap(), base);
        }
    }

    #[test]
    fn bce_values() {
        // Perfect prediction after clamping.
        let loss = bce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(loss <= 1e-6);
        // Coin-flip prediction.
        let loss = bce_loss(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        // Hand evaluation: -(ln 0.9 + ln 0.8) / 2 = 0.1643 to four places.
        let loss = bce_loss(&[0.9, 0.2], &[1.0, 0.0]).unwrap();
        let want = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
        assert!((loss - want).abs() < 1e-15);
        assert!((loss - 0.1643).abs() < 1e-4);
    }

    #[test]
    fn bce_length_mismatch() {
        assert!(matches!(
            bce_loss(&[0.5], &[1.0, 0.0]),
            Err(LstmError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn nan_input_rejected() {
        let model = LstmModel::new(3, 2, 1);
        let mut input = tensor(4, 2, |_, _| 0.1);
        input.data[3] = f64::NAN;
        assert!(matches!(model.forward(&input), Err(LstmError::NonFinite)));
    }

    #[test]
    fn gates_bounded_and_cell_telescopes() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..5 {
            let model = LstmModel::new(6, 2, rng.gen());
            let steps = 40;
            let input = tensor(steps, 2, |_, _| rng.gen::<f64>() * 4.0 - 2.0);
            let pass = model.forward(&input).unwrap();
            for cache in [&pass.cache1, &pass.cache2] {
                assert!(cache.gate_i.iter().all(|&g| g > 0.0 && g < 1.0));
                assert!(cache.gate_f.iter().all(|&g| g > 0.0 && g < 1.0));
                assert!(cache.gate_o.iter().all(|&g| g > 0.0 && g < 1.0));
                assert!(cache.gate_c.iter().all(|&g| g > -1.0 && g < 1.0));
                // |c_t| <= t+1 telescoping bound, so L' bounds every cell.
                assert!(cache.cell.iter().all(|&c| c.abs() <= steps as f64));
            }
        }
    }

    #[test]
    fn pooling_gradient_routes_to_argmax_only() {
        let model = LstmModel::new(4, 2, 7);
        let input = tensor(6, 2, |r, c| ((r + c) as f64 * 1.3).cos());
        let pass = model.forward(&input).unwrap();
        let mut grads = vec![0.0; model.params().len()];
        model.accumulate_gradients(&input, &pass, 1.0, 1.0, &mut grads);
        // Indirect check: the head weight gradient must equal dlogit * pooled.
        let dlogit = pass.prob - 1.0;
        let slots = model.tensor_slots();
        let head_w = slots.iter().find(|s| s.name == "head.weights").unwrap();
        for (g, &v) in grads[head_w.range.clone()].iter().zip(&pass.pooled) {
            assert!((g - dlogit * v).abs() < 1e-12);
        }
    }
}
