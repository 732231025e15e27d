use crate::error::{numeric_err, shape_err, Result};
use crate::Matrix;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-7;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(numeric_err!("{what} contains non-finite entries"))
    }
}

fn ensure_nonempty(m: &Matrix, what: &str) -> Result<()> {
    if m.as_slice().is_empty() {
        Err(shape_err!("{what} is empty"))
    } else {
        Ok(())
    }
}

/// Mean over all entries of `(a - b)^2`.
pub fn mse_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    b.ensure_shape(a.rows(), a.cols(), "mse_distance")?;
    ensure_nonempty(a, "mse_distance input")?;
    let n = a.as_slice().len() as f64;
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let d = sum / n;
    if !d.is_finite() {
        return Err(numeric_err!("non-finite reconstruction distance"));
    }
    Ok(d)
}

/// [`mse_distance`] and its gradient with respect to `a`.
pub fn mse_distance_grad(a: &Matrix, b: &Matrix) -> Result<(f64, Matrix)> {
    let d = mse_distance(a, b)?;
    let scale = 2.0 / a.as_slice().len() as f64;
    let mut g = a.clone();
    for (g, y) in g.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *g = scale * (*g - y);
    }
    Ok((d, g))
}

/// `-mean(log d_fake)`.
pub fn gan_generator_loss(d_fake: &Matrix) -> Result<f64> {
    ensure_finite(d_fake, "discriminator output")?;
    ensure_nonempty(d_fake, "discriminator output")?;
    let n = d_fake.as_slice().len() as f64;
    let sum: f64 = d_fake
        .as_slice()
        .iter()
        .map(|&p| libm::log(clamp_prob(p)))
        .sum();
    Ok(-sum / n)
}

/// [`gan_generator_loss`] and its gradient with respect to `d_fake`. The
/// derivative is taken at the clamped probability, so it stays nonzero for
/// saturated outputs.
pub fn gan_generator_loss_grad(d_fake: &Matrix) -> Result<(f64, Matrix)> {
    let loss = gan_generator_loss(d_fake)?;
    let n = d_fake.as_slice().len() as f64;
    let g = d_fake.map(|p| -1.0 / (n * clamp_prob(p)));
    Ok((loss, g))
}

/// `-mean(log d_real) - mean(log(1 - d_fake))`.
pub fn gan_discriminator_loss(d_real: &Matrix, d_fake: &Matrix) -> Result<f64> {
    ensure_finite(d_real, "discriminator output on real samples")?;
    ensure_finite(d_fake, "discriminator output on generated samples")?;
    ensure_nonempty(d_real, "discriminator output on real samples")?;
    ensure_nonempty(d_fake, "discriminator output on generated samples")?;
    let nr = d_real.as_slice().len() as f64;
    let nf = d_fake.as_slice().len() as f64;
    let real: f64 = d_real
        .as_slice()
        .iter()
        .map(|&p| libm::log(clamp_prob(p)))
        .sum();
    let fake: f64 = d_fake
        .as_slice()
        .iter()
        .map(|&p| libm::log(1.0 - clamp_prob(p)))
        .sum();
    Ok(-real / nr - fake / nf)
}

/// [`gan_discriminator_loss`] with gradients for the real and generated
/// halves.
pub fn gan_discriminator_loss_grad(
    d_real: &Matrix,
    d_fake: &Matrix,
) -> Result<(f64, Matrix, Matrix)> {
    let loss = gan_discriminator_loss(d_real, d_fake)?;
    let nr = d_real.as_slice().len() as f64;
    let nf = d_fake.as_slice().len() as f64;
    let g_real = d_real.map(|p| -1.0 / (nr * clamp_prob(p)));
    let g_fake = d_fake.map(|p| 1.0 / (nf * (1.0 - clamp_prob(p))));
    Ok((loss, g_real, g_fake))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::LN_2;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn mse_values() {
        let a = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(mse_distance(&a, &b).unwrap(), 12.5);
        assert_eq!(mse_distance(&b, &a).unwrap(), 12.5);
        assert_eq!(mse_distance(&b, &b).unwrap(), 0.0);
        assert!(matches!(
            mse_distance(&a, &col(&[1.0, 2.0])),
            Err(crate::Error::Shape(_))
        ));
        let (_, g) = mse_distance_grad(&a, &b).unwrap();
        assert_eq!(g.as_slice(), &[-3.0, -4.0]);
    }

    #[test]
    fn generator_loss_values() {
        assert!((gan_generator_loss(&col(&[0.5; 4])).unwrap() - LN_2).abs() < 1e-15);
        let inv_e = libm::exp(-1.0);
        assert!((gan_generator_loss(&col(&[inv_e; 3])).unwrap() - 1.0).abs() < 1e-15);
        assert!((gan_generator_loss(&col(&[0.9, 0.1])).unwrap() - 1.203972804325936).abs() < 1e-12);
        assert!(matches!(
            gan_generator_loss(&col(&[f64::NAN])),
            Err(crate::Error::Numeric(_))
        ));
    }

    #[test]
    fn generator_loss_decreasing() {
        let losses: Vec<f64> = (1..100)
            .map(|i| gan_generator_loss(&col(&[i as f64 / 100.0])).unwrap())
            .collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]));
        assert!(losses.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn discriminator_loss_values() {
        let half = col(&[0.5; 3]);
        assert!((gan_discriminator_loss(&half, &half).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        let l = gan_discriminator_loss(&col(&[0.9]), &col(&[0.1])).unwrap();
        assert!((l - 0.21072103131565256).abs() < 1e-12);
        assert!(gan_discriminator_loss(&col(&[f64::INFINITY]), &half).is_err());
    }

    #[test]
    fn discriminator_loss_vanishes_at_perfect_separation() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let e = 0.5 / i as f64;
            let l = gan_discriminator_loss(&col(&[1.0 - e]), &col(&[e])).unwrap();
            assert!(l < prev && l >= 0.0);
            prev = l;
        }
        assert!(prev < 0.03);
    }

    #[test]
    fn clamping_keeps_losses_finite() {
        let l = gan_generator_loss(&col(&[0.0, 1.0])).unwrap();
        assert!(l.is_finite());
        let l = gan_discriminator_loss(&col(&[0.0]), &col(&[1.0])).unwrap();
        assert!(l.is_finite());
        let (_, g) = gan_generator_loss_grad(&col(&[0.0])).unwrap();
        assert!(g[(0, 0)].is_finite() && g[(0, 0)] < 0.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        let p = [0.3, 0.7, 0.55];
        let h = 1e-6;
        let (_, g) = gan_generator_loss_grad(&col(&p)).unwrap();
        let (_, gr, gf) = gan_discriminator_loss_grad(&col(&p), &col(&p)).unwrap();
        for i in 0..p.len() {
            let mut up = p;
            let mut dn = p;
            up[i] += h;
            dn[i] -= h;
            let fd = (gan_generator_loss(&col(&up)).unwrap()
                - gan_generator_loss(&col(&dn)).unwrap())
                / (2.0 * h);
            assert!((fd - g[(i, 0)]).abs() < 1e-7);
            let fd_r = (gan_discriminator_loss(&col(&up), &col(&p)).unwrap()
                - gan_discriminator_loss(&col(&dn), &col(&p)).unwrap())
                / (2.0 * h);
            assert!((fd_r - gr[(i, 0)]).abs() < 1e-7);
            let fd_f = (gan_discriminator_loss(&col(&p), &col(&up)).unwrap()
                - gan_discriminator_loss(&col(&p), &col(&dn)).unwrap())
                / (2.0 * h);
            assert!((fd_f - gf[(i, 0)]).abs() < 1e-7);
        }
    }
}
