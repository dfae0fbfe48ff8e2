use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{accumulate_weight_grad, affine, input_grad, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }
}

/// Parameters of a fully connected network. The same shape doubles as the
/// container for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub layers: Vec<DenseLayer>,
}

/// Activation on the last layer; hidden layers always use ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Linear,
    Tanh,
}

/// Layer activations kept from [`forward`] for [`backward`]. Entry 0 is the
/// input batch, entry `k` the output of layer `k`; ReLU masks are recovered
/// from the sign of the stored activations.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Matrix>,
    pub output_activation: OutputActivation,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: DenseParams,
    pub input: Matrix,
}

impl DenseParams {
    /// All-zero parameters for the given layer widths.
    pub fn zeros(sizes: &[usize]) -> Self {
        DenseParams {
            layers: sizes.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        DenseParams::zeros(&self.sizes())
    }

    /// Layer widths, input first.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.layers.len() + 1);
        if let Some(first) = self.layers.first() {
            s.push(first.inputs);
        }
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Weight and bias buffers in layer order.
    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.slices().all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &DenseParams) -> bool {
        self.sizes() == other.sizes()
    }

    /// Flat copy of every parameter, layer by layer (weights then bias).
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().flatten().copied().collect()
    }

    /// Overwrites every parameter from a flat slice in [`DenseParams::to_flat`] order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::contract(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut rest = flat;
        for s in self.slices_mut() {
            let (head, tail) = rest.split_at(s.len());
            s.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, other: &DenseParams, scale: f64) {
        for (a, b) in self.slices_mut().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::contract("network has no layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weight.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::contract(format!("layer {i} buffers do not match its shape")));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(Error::contract(format!("layer {i} input width does not chain")));
            }
        }
        Ok(())
    }
}

/// Uniform `±sqrt(1 / fan_in)` weights, zero biases; deterministic per seed.
pub fn init_params(seed: u64, sizes: &[usize]) -> Result<DenseParams> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::contract(format!("invalid layer sizes {sizes:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = DenseParams::zeros(sizes);
    for layer in &mut params.layers {
        let bound = (1.0 / layer.inputs as f64).sqrt();
        for w in &mut layer.weight {
            *w = bound * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
    Ok(params)
}

fn relu_in_place(m: &mut Matrix) {
    for x in m.as_mut_slice() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Batched forward pass: affine layers with ReLU between them.
pub fn forward(
    params: &DenseParams,
    input: &Matrix,
    output_activation: OutputActivation,
) -> Result<(Matrix, ForwardCache)> {
    params.check_shapes()?;
    if input.cols() != params.input_dim() {
        return Err(Error::contract(format!(
            "input width {} does not match network input {}",
            input.cols(),
            params.input_dim()
        )));
    }
    let mut activations = Vec::with_capacity(params.layers.len() + 1);
    activations.push(input.clone());
    let last = params.layers.len() - 1;
    for (k, layer) in params.layers.iter().enumerate() {
        let mut z = Matrix::zeros(input.rows(), layer.outputs);
        affine(&activations[k], &layer.weight, &layer.bias, &mut z);
        if k < last {
            relu_in_place(&mut z);
        } else if output_activation == OutputActivation::Tanh {
            for x in z.as_mut_slice() {
                *x = x.tanh();
            }
        }
        activations.push(z);
    }
    let out = activations.last().cloned().unwrap_or_else(|| input.clone());
    Ok((
        out,
        ForwardCache {
            activations,
            output_activation,
        },
    ))
}

/// Forward pass without keeping a cache.
pub fn predict(params: &DenseParams, input: &Matrix, output_activation: OutputActivation) -> Result<Matrix> {
    params.check_shapes()?;
    if input.cols() != params.input_dim() {
        return Err(Error::contract(format!(
            "input width {} does not match network input {}",
            input.cols(),
            params.input_dim()
        )));
    }
    let last = params.layers.len() - 1;
    let mut x = input.clone();
    for (k, layer) in params.layers.iter().enumerate() {
        let mut z = Matrix::zeros(input.rows(), layer.outputs);
        affine(&x, &layer.weight, &layer.bias, &mut z);
        if k < last {
            relu_in_place(&mut z);
        } else if output_activation == OutputActivation::Tanh {
            for v in z.as_mut_slice() {
                *v = v.tanh();
            }
        }
        x = z;
    }
    Ok(x)
}

/// Reverse pass: gradients of `Σ output ⊙ output_grad` with respect to every
/// parameter and to the input batch.
pub fn backward(params: &DenseParams, cache: &ForwardCache, output_grad: &Matrix) -> Result<Gradients> {
    params.check_shapes()?;
    let n_layers = params.layers.len();
    if cache.activations.len() != n_layers + 1 {
        return Err(Error::contract("forward cache does not match network depth"));
    }
    let out = &cache.activations[n_layers];
    if output_grad.rows() != out.rows() || output_grad.cols() != out.cols() {
        return Err(Error::contract(format!(
            "output gradient {}x{} does not match output {}x{}",
            output_grad.rows(),
            output_grad.cols(),
            out.rows(),
            out.cols()
        )));
    }

    let mut grads = params.zeros_like();
    let mut dz = output_grad.clone();
    if cache.output_activation == OutputActivation::Tanh {
        for (g, y) in dz.as_mut_slice().iter_mut().zip(out.as_slice()) {
            *g *= 1.0 - y * y;
        }
    }
    for k in (0..n_layers).rev() {
        let layer = &params.layers[k];
        let x = &cache.activations[k];
        let g = &mut grads.layers[k];
        accumulate_weight_grad(&dz, x, &mut g.weight, &mut g.bias);
        let mut dx = input_grad(&dz, &layer.weight, layer.inputs);
        if k > 0 {
            // Through the ReLU that produced this layer's input.
            for (d, a) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        dz = dx;
    }
    Ok(Gradients {
        params: grads,
        input: dz,
    })
}
