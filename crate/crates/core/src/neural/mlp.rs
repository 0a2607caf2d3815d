use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{NeuralError, Result};

/// Row-major `c = a · b` with arbitrary strides, via `matrixmultiply`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], rsa: usize, csa: usize, b: &[f64], rsb: usize, csb: usize, c: &mut [f64], beta: f64) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!((m - 1) * rsa + (k - 1) * csa < a.len());
        assert!((k - 1) * rsb + (n - 1) * csb < b.len());
    }
    assert!(m * n <= c.len());
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Fully connected network: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Gradient of the loss, laid out exactly like [`Mlp::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

/// Regression batch on selected outputs: row `i` asks for output
/// `actions[i]` of `inputs[i]` to equal `targets[i]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    /// Row-major, `len × input_dim`.
    pub inputs: Vec<f64>,
    pub actions: Vec<usize>,
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn with_capacity(rows: usize, input_dim: usize) -> Self {
        Self { inputs: Vec::with_capacity(rows * input_dim), actions: Vec::with_capacity(rows), targets: Vec::with_capacity(rows) }
    }

    pub fn push(&mut self, input: &[f64], action: usize, target: f64) {
        self.inputs.extend_from_slice(input);
        self.actions.push(action);
        self.targets.push(target);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn clear(&mut self) {
        self.inputs.clear();
        self.actions.clear();
        self.targets.clear();
    }
}

/// Fan-in scaled Gaussian weights, zero biases. The first layer uses
/// variance `1/fan_in` (inputs are not rectified), later layers `2/fan_in`.
pub fn init_network(dims: &[usize], seed: u64) -> Result<Mlp> {
    let mut net = Mlp::zeros(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in 0..net.num_layers() {
        let fan_in = dims[l] as f64;
        let gain = if l == 0 { 1.0 } else { 2.0 };
        let normal = Normal::new(0.0, (gain / fan_in).sqrt()).expect("positive std");
        let (w, _) = net.layer_range(l);
        for v in &mut net.params[w] {
            *v = normal.sample(&mut rng);
        }
    }
    Ok(net)
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(NeuralError::InvalidDims(dims.to_vec()));
        }
        let n = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self { dims: dims.to_vec(), params: vec![0.0; n] })
    }

    /// Rebuilds a network from dims and a flat parameter vector.
    pub fn from_parts(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(NeuralError::ShapeMismatch { expected: net.params.len(), found: params.len() });
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.dims[..=layer].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Index ranges of layer `l`'s weights and biases in the flat vector.
    pub fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start = self.layer_offset(l);
        let (i, o) = (self.dims[l], self.dims[l + 1]);
        (start..start + i * o, start + i * o..start + i * o + o)
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        &self.params[self.layer_range(l).0]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        &self.params[self.layer_range(l).1]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.layer_range(l).0;
        &mut self.params[r]
    }

    pub fn biases_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.layer_range(l).1;
        &mut self.params[r]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    /// SHA-256 over dims and parameter bit patterns.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for d in &self.dims {
            h.update((*d as u64).to_le_bytes());
        }
        for p in &self.params {
            h.update(p.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Q-values for one input.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(NeuralError::InputSize { expected: self.input_dim(), found: input.len() });
        }
        if !input.iter().all(|v| v.is_finite()) {
            return Err(NeuralError::NonFinite);
        }
        Ok(self.forward_batch(input, 1))
    }

    /// Outputs for `rows` stacked inputs, row-major `rows × output_dim`.
    /// Inputs are assumed finite and correctly sized.
    pub fn forward_batch(&self, inputs: &[f64], rows: usize) -> Vec<f64> {
        let mut acts = inputs.to_vec();
        for l in 0..self.num_layers() {
            acts = self.layer_forward(l, &acts, rows);
            if l + 1 < self.num_layers() {
                acts.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        acts
    }

    /// Pre-activations `x · Wᵀ + b` of layer `l`.
    fn layer_forward(&self, l: usize, x: &[f64], rows: usize) -> Vec<f64> {
        let (i, o) = (self.dims[l], self.dims[l + 1]);
        let b = self.biases(l);
        let mut z = Vec::with_capacity(rows * o);
        for _ in 0..rows {
            z.extend_from_slice(b);
        }
        gemm(rows, i, o, x, i, 1, self.weights(l), 1, i, &mut z, 1.0);
        z
    }

    /// Mean squared error over the selected outputs, and its exact gradient.
    pub fn loss_and_gradients(&self, batch: &Batch) -> Result<(f64, Gradients)> {
        let rows = batch.len();
        if rows == 0 {
            return Err(NeuralError::EmptyBatch);
        }
        let in_dim = self.input_dim();
        let out_dim = self.output_dim();
        if batch.inputs.len() != rows * in_dim || batch.targets.len() != rows {
            return Err(NeuralError::InputSize { expected: rows * in_dim, found: batch.inputs.len() });
        }
        if let Some(&a) = batch.actions.iter().find(|&&a| a >= out_dim) {
            return Err(NeuralError::ActionOutOfRange { action: a, outputs: out_dim });
        }
        if !batch.inputs.iter().chain(&batch.targets).all(|v| v.is_finite()) {
            return Err(NeuralError::NonFinite);
        }

        // forward, keeping every layer's input (post-activation)
        let layers = self.num_layers();
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut acts = batch.inputs.clone();
        for l in 0..layers {
            let mut z = self.layer_forward(l, &acts, rows);
            if l + 1 < layers {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(std::mem::replace(&mut acts, z));
        }
        let q = acts;

        let n = rows as f64;
        let mut loss = 0.0;
        let mut delta = vec![0.0; rows * out_dim];
        for r in 0..rows {
            let idx = r * out_dim + batch.actions[r];
            let err = q[idx] - batch.targets[r];
            loss += err * err;
            delta[idx] = 2.0 * err / n;
        }
        loss /= n;

        let mut grads = vec![0.0; self.params.len()];
        for l in (0..layers).rev() {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let (wr, br) = self.layer_range(l);
            let x = &inputs[l];
            // dW = deltaᵀ · x
            gemm(o, rows, i, &delta, 1, o, x, i, 1, &mut grads[wr], 0.0);
            let db = &mut grads[br];
            for r in 0..rows {
                for (g, d) in db.iter_mut().zip(&delta[r * o..(r + 1) * o]) {
                    *g += d;
                }
            }
            if l > 0 {
                // dx = delta · W, gated by the ReLU that produced x
                let mut dx = vec![0.0; rows * i];
                gemm(rows, o, i, &delta, o, 1, self.weights(l), i, 1, &mut dx, 0.0);
                for (d, &a) in dx.iter_mut().zip(x) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = dx;
            }
        }
        Ok((loss, Gradients(grads)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Q_NETWORK_DIMS;
    use rand::Rng;

    #[test]
    fn dims_validation() {
        assert!(Mlp::zeros(&[4]).is_err());
        assert!(Mlp::zeros(&[4, 0, 2]).is_err());
        let net = Mlp::zeros(&Q_NETWORK_DIMS).unwrap();
        assert_eq!(net.params().len(), 4 * 64 + 64 + 64 * 64 + 64 + 64 * 64 + 64 + 64 * 4 + 4);
    }

    #[test]
    fn init_is_seeded_with_zero_biases() {
        let a = init_network(&Q_NETWORK_DIMS, 1).unwrap();
        assert_eq!(a, init_network(&Q_NETWORK_DIMS, 1).unwrap());
        assert_ne!(a, init_network(&Q_NETWORK_DIMS, 2).unwrap());
        for l in 0..a.num_layers() {
            assert!(a.biases(l).iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_preserves_variance() {
        let net = init_network(&Q_NETWORK_DIMS, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rows = 10_000;
        let x: Vec<f64> = (0..rows * 4).map(|_| normal.sample(&mut rng)).collect();
        let z = net.layer_forward(0, &x, rows);
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!(var > 0.5 && var < 2.0, "pre-activation variance {var}");
    }

    #[test]
    fn zero_weights_give_output_bias() {
        let mut net = Mlp::zeros(&[4, 8, 3]).unwrap();
        net.biases_mut(1).copy_from_slice(&[0.5, -1.0, 2.0]);
        assert_eq!(net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn hand_computed_two_layer() {
        // x = [1, -2]; h = relu([2x0 + x1 + 0.5, -x0 + 3x1]) = relu([0.5, -7]) = [0.5, 0]
        // y = [h0 - 2 h1 + 1] = [1.5]
        let mut net = Mlp::zeros(&[2, 2, 1]).unwrap();
        net.weights_mut(0).copy_from_slice(&[2.0, 1.0, -1.0, 3.0]);
        net.biases_mut(0).copy_from_slice(&[0.5, 0.0]);
        net.weights_mut(1).copy_from_slice(&[1.0, -2.0]);
        net.biases_mut(1).copy_from_slice(&[1.0]);
        assert_eq!(net.forward(&[1.0, -2.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn scaling_input_weights_scales_preactivations() {
        let net = init_network(&[4, 16, 2], 3).unwrap();
        let mut scaled = net.clone();
        scaled.weights_mut(0).iter_mut().for_each(|w| *w *= 3.0);
        let x = [0.3, -0.2, 0.9, 0.1];
        let a = net.layer_forward(0, &x, 1);
        let b = scaled.layer_forward(0, &x, 1);
        for (u, v) in a.iter().zip(&b) {
            assert!((3.0 * u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = init_network(&Q_NETWORK_DIMS, 0).unwrap();
        assert!(matches!(net.forward(&[0.0; 3]), Err(NeuralError::InputSize { .. })));
        assert!(matches!(net.forward(&[0.0, f64::NAN, 0.0, 0.0]), Err(NeuralError::NonFinite)));
    }

    #[test]
    fn batch_forward_matches_single() {
        let net = init_network(&Q_NETWORK_DIMS, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let batched = net.forward_batch(&x, 10);
        for r in 0..10 {
            let single = net.forward(&x[r * 4..(r + 1) * 4]).unwrap();
            for a in 0..4 {
                assert!((single[a] - batched[r * 4 + a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_error_zero_gradient() {
        let net = init_network(&Q_NETWORK_DIMS, 2).unwrap();
        let x = [0.1, 0.7, -0.3, 1.0];
        let q = net.forward(&x).unwrap();
        let mut batch = Batch::default();
        batch.push(&x, 2, q[2]);
        let (loss, g) = net.loss_and_gradients(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_closed_form() {
        // single linear layer: dL/dW[a] = 2 (q - t) x / N, dL/db[a] = 2 (q - t) / N
        let net = init_network(&[3, 2], 4).unwrap();
        let x = [0.5, -1.5, 2.0];
        let q = net.forward(&x).unwrap();
        let mut batch = Batch::default();
        batch.push(&x, 1, 0.25);
        let (loss, g) = net.loss_and_gradients(&batch).unwrap();
        let err = q[1] - 0.25;
        assert!((loss - err * err).abs() < 1e-12);
        let (wr, br) = net.layer_range(0);
        let gw = &g.0[wr];
        assert_eq!(&gw[..3], &[0.0, 0.0, 0.0]);
        for k in 0..3 {
            assert!((gw[3 + k] - 2.0 * err * x[k]).abs() < 1e-12);
        }
        assert!((g.0[br][1] - 2.0 * err).abs() < 1e-12);
    }

    #[test]
    fn batch_errors() {
        let net = init_network(&[4, 4], 0).unwrap();
        assert!(matches!(net.loss_and_gradients(&Batch::default()), Err(NeuralError::EmptyBatch)));
        let mut b = Batch::default();
        b.push(&[0.0; 4], 7, 1.0);
        assert!(matches!(net.loss_and_gradients(&b), Err(NeuralError::ActionOutOfRange { .. })));
    }
}
