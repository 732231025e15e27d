use alloc::vec;
use alloc::vec::Vec;

use super::activation::{activation_grad, Activation};
use crate::error::{numeric_err, param_err, shape_err, Result};
use crate::{Matrix, Rng};

/// Layer widths plus one activation per affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(layer_dims: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(param_err!("an MLP needs at least input and output widths"));
        }
        if layer_dims.contains(&0) {
            return Err(param_err!("layer widths must be positive: {layer_dims:?}"));
        }
        if activations.len() != layer_dims.len() - 1 {
            return Err(param_err!(
                "{} activations for {} layers",
                activations.len(),
                layer_dims.len() - 1
            ));
        }
        for a in &activations {
            if let Activation::LeakyRelu(s) = a {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(param_err!("leaky ReLU slope {s} outside (0, 1)"));
                }
            }
        }
        Ok(MlpSpec {
            layer_dims,
            activations,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }
}

/// Weights (`dims[i] x dims[i+1]`) and biases of an MLP. Gradients use the
/// same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let dims = spec.layer_dims();
        MlpParams {
            weights: dims.windows(2).map(|w| Matrix::zeros(w[0], w[1])).collect(),
            biases: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn check(&self, spec: &MlpSpec) -> Result<()> {
        let dims = spec.layer_dims();
        if self.weights.len() != spec.num_layers() || self.biases.len() != spec.num_layers() {
            return Err(shape_err!(
                "{} weight and {} bias tensors for {} layers",
                self.weights.len(),
                self.biases.len(),
                spec.num_layers()
            ));
        }
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            w.ensure_shape(dims[l], dims[l + 1], "layer weight")?;
            if b.len() != dims[l + 1] {
                return Err(shape_err!(
                    "layer {l} bias has {} entries, expected {}",
                    b.len(),
                    dims[l + 1]
                ));
            }
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.weights.len() == other.weights.len()
            && self.biases.len() == other.biases.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.shape() == b.shape())
            && self
                .biases
                .iter()
                .zip(&other.biases)
                .all(|(a, b)| a.len() == b.len())
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.as_slice().len())
            .sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All tensors in a fixed order: weights by layer, then biases by layer.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .map(Matrix::as_slice)
            .chain(self.biases.iter().map(Vec::as_slice))
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .map(Matrix::as_mut_slice)
            .chain(self.biases.iter_mut().map(Vec::as_mut_slice))
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += other`, tensor by tensor.
    pub fn accumulate(&mut self, other: &MlpParams) -> Result<()> {
        if !self.same_shape(other) {
            return Err(shape_err!(
                "cannot accumulate gradients of different shapes"
            ));
        }
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Matrix,
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ForwardCache {
    fn layer_input(&self, l: usize) -> &Matrix {
        if l == 0 {
            &self.input
        } else {
            &self.post[l - 1]
        }
    }
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Result<Matrix> {
    let mut z = x.matmul(w)?;
    z.add_row_vector(b)?;
    Ok(z)
}

fn check_input(spec: &MlpSpec, params: &MlpParams, x: &Matrix) -> Result<()> {
    params.check(spec)?;
    if x.cols() != spec.input_dim() {
        return Err(shape_err!(
            "input has {} columns, network expects {}",
            x.cols(),
            spec.input_dim()
        ));
    }
    Ok(())
}

/// Forward pass keeping everything the backward pass needs.
pub fn mlp_forward(
    spec: &MlpSpec,
    params: &MlpParams,
    x: &Matrix,
) -> Result<(Matrix, ForwardCache)> {
    check_input(spec, params, x)?;
    let mut pre = Vec::with_capacity(spec.num_layers());
    let mut post: Vec<Matrix> = Vec::with_capacity(spec.num_layers());
    for (l, &act) in spec.activations().iter().enumerate() {
        let input = if l == 0 { x } else { &post[l - 1] };
        let z = affine(input, &params.weights[l], &params.biases[l])?;
        let a = z.map(|v| act.apply(v));
        pre.push(z);
        post.push(a);
    }
    let y = post.last().unwrap().clone();
    if !y.is_finite() {
        return Err(numeric_err!("non-finite network output"));
    }
    Ok((
        y,
        ForwardCache {
            input: x.clone(),
            pre,
            post,
        },
    ))
}

/// Forward pass without a cache.
pub fn mlp_predict(spec: &MlpSpec, params: &MlpParams, x: &Matrix) -> Result<Matrix> {
    check_input(spec, params, x)?;
    let mut h: Option<Matrix> = None;
    for (l, &act) in spec.activations().iter().enumerate() {
        let input = h.as_ref().unwrap_or(x);
        let mut z = affine(input, &params.weights[l], &params.biases[l])?;
        for v in z.as_mut_slice() {
            *v = act.apply(*v);
        }
        h = Some(z);
    }
    let y = h.unwrap();
    if !y.is_finite() {
        return Err(numeric_err!("non-finite network output"));
    }
    Ok(y)
}

fn backward(
    spec: &MlpSpec,
    params: &MlpParams,
    cache: &ForwardCache,
    dy: &Matrix,
    mut grads: Option<&mut MlpParams>,
) -> Result<Matrix> {
    params.check(spec)?;
    let layers = spec.num_layers();
    if cache.pre.len() != layers || cache.post.len() != layers {
        return Err(shape_err!(
            "cache holds {} layers, network has {layers}",
            cache.pre.len()
        ));
    }
    let out = &cache.post[layers - 1];
    dy.ensure_shape(out.rows(), out.cols(), "upstream gradient")?;

    let mut delta = dy.clone();
    for l in (0..layers).rev() {
        let dz = activation_grad(spec.activations()[l], &cache.pre[l], &delta);
        if let Some(g) = grads.as_deref_mut() {
            g.weights[l] = cache.layer_input(l).matmul_t(true, &dz, false)?;
            g.biases[l] = dz.column_sums();
        }
        delta = dz.matmul_t(false, &params.weights[l], true)?;
    }
    Ok(delta)
}

/// Gradients with respect to the input and to every parameter, given the
/// upstream gradient `dy` of the network output.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &MlpParams,
    cache: &ForwardCache,
    dy: &Matrix,
) -> Result<(Matrix, MlpParams)> {
    let mut grads = MlpParams::zeros(spec);
    let dx = backward(spec, params, cache, dy, Some(&mut grads))?;
    Ok((dx, grads))
}

/// Input gradient only; parameter gradients are not formed.
pub fn mlp_backward_input(
    spec: &MlpSpec,
    params: &MlpParams,
    cache: &ForwardCache,
    dy: &Matrix,
) -> Result<Matrix> {
    backward(spec, params, cache, dy, None)
}

/// Glorot-uniform weights in `(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`,
/// and zero biases.
pub fn init_params(spec: &MlpSpec, rng: &mut Rng) -> MlpParams {
    let mut params = MlpParams::zeros(spec);
    for w in &mut params.weights {
        let a = libm::sqrt(6.0 / (w.rows() + w.cols()) as f64);
        for v in w.as_mut_slice() {
            *v = rng.uniform_symmetric(a);
        }
    }
    params
}
