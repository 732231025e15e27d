//! Randomized comparison of [`mlp_backward`] against central differences.
//!
//! Each trial draws an MLP (widths in `2..=16`, depth `1..=5`, every
//! activation kind), a small input batch and a fixed upstream gradient `g`,
//! then differentiates `L(p) = sum(g * f_p(x))`. Batches that put a
//! ReLU-family pre-activation within [`KINK_MARGIN`] of zero are redrawn so
//! the finite difference never straddles a kink.

use alloc::vec::Vec;

use super::{
    finite_diff_grads, init_params, mlp_backward, mlp_forward, mlp_predict, Activation, MlpSpec,
};
use crate::error::Result;
use crate::{Matrix, Rng};

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-7;
pub const KINK_MARGIN: f64 = 1e-3;
const BATCH: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub nets: usize,
    pub entries_checked: usize,
    pub failures: usize,
    /// Largest `|analytic - numeric| / max(rel_tol * scale, abs_tol)`; at most
    /// 1 when every entry passes.
    pub worst_ratio: f64,
    pub worst_net: usize,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// True when `analytic` and `numeric` agree within `max(rel * scale, abs)`.
pub fn within_tolerance(analytic: f64, numeric: f64) -> (bool, f64) {
    let scale = analytic.abs().max(numeric.abs());
    let allowed = (REL_TOL * scale).max(ABS_TOL);
    let ratio = (analytic - numeric).abs() / allowed;
    (ratio <= 1.0, ratio)
}

fn random_activation(rng: &mut Rng) -> Activation {
    match rng.below(4) {
        0 => Activation::Relu,
        1 => Activation::LeakyRelu(0.05 + 0.45 * rng.uniform()),
        2 => Activation::Sigmoid,
        _ => Activation::Identity,
    }
}

pub fn random_spec(rng: &mut Rng) -> MlpSpec {
    let depth = 1 + rng.below(5);
    let dims: Vec<usize> = (0..=depth).map(|_| 2 + rng.below(15)).collect();
    let acts = (0..depth).map(|_| random_activation(rng)).collect();
    MlpSpec::new(dims, acts).expect("random spec is valid")
}

fn near_kink(spec: &MlpSpec, pre: &[Matrix]) -> bool {
    spec.activations().iter().zip(pre).any(|(a, z)| {
        matches!(a, Activation::Relu | Activation::LeakyRelu(_))
            && z.as_slice().iter().any(|v| v.abs() < KINK_MARGIN)
    })
}

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// Runs `nets` randomized trials from `seed`.
pub fn random_gradcheck(seed: u64, nets: usize) -> Result<GradcheckReport> {
    let mut rng = Rng::new(seed);
    let mut report = GradcheckReport {
        nets,
        entries_checked: 0,
        failures: 0,
        worst_ratio: 0.0,
        worst_net: 0,
    };
    for net in 0..nets {
        let spec = random_spec(&mut rng);
        let mut params = init_params(&spec, &mut rng);
        for b in &mut params.biases {
            for v in b.iter_mut() {
                *v = 0.1 * rng.normal();
            }
        }
        let (x, cache) = loop {
            let x = random_matrix(BATCH, spec.input_dim(), &mut rng);
            let (_, cache) = mlp_forward(&spec, &params, &x)?;
            if !near_kink(&spec, &cache.pre) {
                break (x, cache);
            }
        };
        let upstream = random_matrix(BATCH, spec.output_dim(), &mut rng);
        let (_, analytic) = mlp_backward(&spec, &params, &cache, &upstream)?;
        let numeric = finite_diff_grads(
            |p| {
                let y = mlp_predict(&spec, p, &x)?;
                Ok(y.as_slice()
                    .iter()
                    .zip(upstream.as_slice())
                    .map(|(a, b)| a * b)
                    .sum())
            },
            &params,
            FD_STEP,
        )?;
        for (a, n) in analytic
            .tensors()
            .flatten()
            .zip(numeric.tensors().flatten())
        {
            let (ok, ratio) = within_tolerance(*a, *n);
            report.entries_checked += 1;
            if !ok {
                report.failures += 1;
            }
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_net = net;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = random_gradcheck(99, 10).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.entries_checked > 0);
    }

    #[test]
    fn tolerance_rule() {
        assert!(within_tolerance(1.0, 1.0 + 0.5e-4).0);
        assert!(!within_tolerance(1.0, 1.0 + 2e-4).0);
        assert!(within_tolerance(0.0, 5e-8).0);
        assert!(!within_tolerance(0.0, 5e-7).0);
    }
}
