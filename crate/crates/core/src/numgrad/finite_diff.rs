use super::mlp::MlpParams;
use crate::error::{numeric_err, Result};

/// Central-difference gradient `(L(p + h) - L(p - h)) / 2h`, one parameter
/// entry at a time.
pub fn finite_diff_grads<F>(mut loss_fn: F, params: &MlpParams, step: f64) -> Result<MlpParams>
where
    F: FnMut(&MlpParams) -> Result<f64>,
{
    let mut probe = params.clone();
    let mut grads = params.clone();
    let n_tensors = params.weights.len() + params.biases.len();
    for t in 0..n_tensors {
        let len = tensor(&probe, t).len();
        for i in 0..len {
            let orig = tensor(&probe, t)[i];
            tensor_mut(&mut probe, t)[i] = orig + step;
            let up = loss_fn(&probe)?;
            tensor_mut(&mut probe, t)[i] = orig - step;
            let down = loss_fn(&probe)?;
            tensor_mut(&mut probe, t)[i] = orig;
            if !(up.is_finite() && down.is_finite()) {
                return Err(numeric_err!("loss is not finite near tensor {t} entry {i}"));
            }
            tensor_mut(&mut grads, t)[i] = (up - down) / (2.0 * step);
        }
    }
    Ok(grads)
}

fn tensor(p: &MlpParams, t: usize) -> &[f64] {
    let nw = p.weights.len();
    if t < nw {
        p.weights[t].as_slice()
    } else {
        &p.biases[t - nw]
    }
}

fn tensor_mut(p: &mut MlpParams, t: usize) -> &mut [f64] {
    let nw = p.weights.len();
    if t < nw {
        p.weights[t].as_mut_slice()
    } else {
        &mut p.biases[t - nw]
    }
}
