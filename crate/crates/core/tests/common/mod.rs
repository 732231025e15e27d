#![allow(dead_code)]

use disco_core::models::{build_variant, ModelSet, NetDims, Network, VariantKind};
use disco_core::numgrad::{Activation, MlpParams, MlpSpec};
use disco_core::{Matrix, Rng};

pub fn identity_generator() -> Network {
    let spec = MlpSpec::new(vec![2, 2], vec![Activation::Identity]).unwrap();
    Network::new(
        spec,
        MlpParams {
            weights: vec![Matrix::identity(2)],
            biases: vec![vec![0.0; 2]],
        },
    )
    .unwrap()
}

/// Affine generator `x -> x W + b` with identity activation.
pub fn affine_generator(w: [[f64; 2]; 2], b: [f64; 2]) -> Network {
    let spec = MlpSpec::new(vec![2, 2], vec![Activation::Identity]).unwrap();
    Network::new(
        spec,
        MlpParams {
            weights: vec![Matrix::from_rows(&w).unwrap()],
            biases: vec![b.to_vec()],
        },
    )
    .unwrap()
}

/// Generator that ignores its input and emits `point`.
pub fn constant_generator(point: [f64; 2]) -> Network {
    affine_generator([[0.0; 2]; 2], point)
}

/// Single-layer sigmoid discriminator `sigmoid(x w + c)`.
pub fn linear_discriminator(w: [f64; 2], c: f64) -> Network {
    let spec = MlpSpec::new(vec![2, 1], vec![Activation::Sigmoid]).unwrap();
    let params = MlpParams {
        weights: vec![Matrix::from_vec(2, 1, w.to_vec()).unwrap()],
        biases: vec![vec![c]],
    };
    Network::new(spec, params).unwrap()
}

pub fn half_discriminator() -> Network {
    linear_discriminator([0.0, 0.0], 0.0)
}

pub fn random_points(rng: &mut Rng, n: usize, scale: f64, offset: f64) -> Matrix {
    Matrix::from_vec(
        n,
        2,
        (0..2 * n).map(|_| offset + scale * rng.normal()).collect(),
    )
    .unwrap()
}

/// Small smooth networks so finite differences are reliable.
pub fn smooth_dims() -> NetDims {
    NetDims {
        gen_hidden: vec![5, 4],
        disc_hidden: vec![6, 5, 4, 3],
        hidden_activation: Activation::Sigmoid,
        gen_output_activation: Activation::Identity,
    }
}

pub fn smooth_set(kind: VariantKind, seed: u64) -> ModelSet {
    build_variant(kind, &smooth_dims(), &mut Rng::new(seed)).unwrap()
}

pub fn bits(p: &MlpParams) -> Vec<u64> {
    p.tensors().flatten().map(|v| v.to_bits()).collect()
}
