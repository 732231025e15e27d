//! Generators, discriminators and the three model variants.
//!
//! A [`ModelSet`] owns each network exactly once. In the DiscoGAN variant the
//! A-to-B generator serves both the direct translation of A samples and the
//! second leg of the B-side cycle, so both paths always see the same weights.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{param_err, shape_err, Error, Result};
use crate::numgrad::{
    clamp_prob, init_params, mlp_forward, mlp_predict, Activation, ForwardCache, MlpParams, MlpSpec,
};
use crate::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    StandardGan,
    ReconGan,
    DiscoGan,
}

impl VariantKind {
    pub const ALL: [VariantKind; 3] = [
        VariantKind::StandardGan,
        VariantKind::ReconGan,
        VariantKind::DiscoGan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::StandardGan => "standard",
            VariantKind::ReconGan => "recon",
            VariantKind::DiscoGan => "disco",
        }
    }

    pub fn network_count(self) -> usize {
        match self {
            VariantKind::StandardGan => 2,
            VariantKind::ReconGan => 3,
            VariantKind::DiscoGan => 4,
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(VariantKind::StandardGan),
            "recon" => Ok(VariantKind::ReconGan),
            "disco" => Ok(VariantKind::DiscoGan),
            other => Err(param_err!(
                "unknown variant {other:?} (expected standard, recon or disco)"
            )),
        }
    }
}

/// Hidden widths and activation choices for generators and discriminators.
#[derive(Debug, Clone, PartialEq)]
pub struct NetDims {
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    /// Activation after every hidden layer of both network kinds.
    pub hidden_activation: Activation,
    /// Activation after the generator's last layer.
    pub gen_output_activation: Activation,
}

impl Default for NetDims {
    fn default() -> Self {
        NetDims {
            gen_hidden: vec![64, 64],
            disc_hidden: vec![128, 128, 128, 128],
            hidden_activation: Activation::Relu,
            gen_output_activation: Activation::Relu,
        }
    }
}

impl NetDims {
    pub fn generator_spec(&self) -> Result<MlpSpec> {
        let mut dims = vec![2];
        dims.extend_from_slice(&self.gen_hidden);
        dims.push(2);
        let mut acts = vec![self.hidden_activation; self.gen_hidden.len()];
        acts.push(self.gen_output_activation);
        MlpSpec::new(dims, acts)
    }

    pub fn discriminator_spec(&self) -> Result<MlpSpec> {
        let mut dims = vec![2];
        dims.extend_from_slice(&self.disc_hidden);
        dims.push(1);
        let mut acts = vec![self.hidden_activation; self.disc_hidden.len()];
        acts.push(Activation::Sigmoid);
        MlpSpec::new(dims, acts)
    }
}

/// A network's architecture together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Network {
    pub fn new(spec: MlpSpec, params: MlpParams) -> Result<Self> {
        params.check(&spec)?;
        Ok(Network { spec, params })
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        mlp_forward(&self.spec, &self.params, x)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        mlp_predict(&self.spec, &self.params, x)
    }
}

pub fn build_generator(dims: &NetDims, rng: &mut Rng) -> Result<Network> {
    let spec = dims.generator_spec()?;
    let params = init_params(&spec, rng);
    Network::new(spec, params)
}

pub fn build_discriminator(dims: &NetDims, rng: &mut Rng) -> Result<Network> {
    let spec = dims.discriminator_spec()?;
    let params = init_params(&spec, rng);
    Network::new(spec, params)
}

/// The networks of one variant. `g_ba` is present for recon and disco,
/// `d_a` for disco only.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub kind: VariantKind,
    pub g_ab: Network,
    pub g_ba: Option<Network>,
    pub d_a: Option<Network>,
    pub d_b: Network,
}

impl ModelSet {
    pub fn new(
        kind: VariantKind,
        g_ab: Network,
        g_ba: Option<Network>,
        d_a: Option<Network>,
        d_b: Network,
    ) -> Result<Self> {
        let want = match kind {
            VariantKind::StandardGan => (false, false),
            VariantKind::ReconGan => (true, false),
            VariantKind::DiscoGan => (true, true),
        };
        if (g_ba.is_some(), d_a.is_some()) != want {
            return Err(param_err!("network presence does not match variant {kind}"));
        }
        let set = ModelSet {
            kind,
            g_ab,
            g_ba,
            d_a,
            d_b,
        };
        for (name, net) in set.networks() {
            let expect_out = if name.starts_with('d') { 1 } else { 2 };
            if net.spec.input_dim() != 2 || net.spec.output_dim() != expect_out {
                return Err(shape_err!(
                    "{name} maps {} -> {} dims, expected 2 -> {expect_out}",
                    net.spec.input_dim(),
                    net.spec.output_dim()
                ));
            }
        }
        Ok(set)
    }

    /// Present networks, named `g_ab`, `g_ba`, `d_a`, `d_b`, in that order.
    pub fn networks(&self) -> Vec<(&'static str, &Network)> {
        let mut out = vec![("g_ab", &self.g_ab)];
        if let Some(g) = &self.g_ba {
            out.push(("g_ba", g));
        }
        if let Some(d) = &self.d_a {
            out.push(("d_a", d));
        }
        out.push(("d_b", &self.d_b));
        out
    }

    pub fn network_count(&self) -> usize {
        self.networks().len()
    }
}

/// Builds a variant. Networks are initialised in the order `g_ab`, `d_b`,
/// `g_ba`, `d_a`, so variants sharing a seed start from the same `g_ab` and
/// `d_b`.
pub fn build_variant(kind: VariantKind, dims: &NetDims, rng: &mut Rng) -> Result<ModelSet> {
    let g_ab = build_generator(dims, rng)?;
    let d_b = build_discriminator(dims, rng)?;
    let g_ba = match kind {
        VariantKind::StandardGan => None,
        _ => Some(build_generator(dims, rng)?),
    };
    let d_a = match kind {
        VariantKind::DiscoGan => Some(build_discriminator(dims, rng)?),
        _ => None,
    };
    ModelSet::new(kind, g_ab, g_ba, d_a, d_b)
}

fn ensure_points(x: &Matrix) -> Result<()> {
    if x.cols() != 2 {
        return Err(shape_err!("expected 2-D points, got {} columns", x.cols()));
    }
    Ok(())
}

/// `G(x)` for a batch of points.
pub fn translate(gen: &Network, x: &Matrix) -> Result<Matrix> {
    ensure_points(x)?;
    gen.predict(x)
}

/// `(G_AB(x), G_BA(G_AB(x)))`.
pub fn roundtrip(g_ab: &Network, g_ba: &Network, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let translated = translate(g_ab, x)?;
    let reconstructed = translate(g_ba, &translated)?;
    Ok((translated, reconstructed))
}

/// Discriminator probabilities clamped to the open interval used by the
/// losses, so reported values lie strictly inside `(0, 1)`.
pub fn discriminate(d: &Network, x: &Matrix) -> Result<Matrix> {
    ensure_points(x)?;
    Ok(d.predict(x)?.map(clamp_prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrad::mse_distance;

    fn identity_gen() -> Network {
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

    fn points(rng: &mut Rng, n: usize) -> Matrix {
        Matrix::from_vec(n, 2, (0..2 * n).map(|_| 3.0 * rng.normal()).collect()).unwrap()
    }

    #[test]
    fn default_shapes() {
        let dims = NetDims::default();
        let g = build_generator(&dims, &mut Rng::new(1)).unwrap();
        let shapes: Vec<_> = g.params.weights.iter().map(Matrix::shape).collect();
        assert_eq!(shapes, vec![(2, 64), (64, 64), (64, 2)]);
        assert_eq!(g.spec.activations(), &[Activation::Relu; 3]);
        let d = build_discriminator(&dims, &mut Rng::new(1)).unwrap();
        assert_eq!(d.spec.layer_dims(), &[2, 128, 128, 128, 128, 1]);
        assert_eq!(d.spec.activations().last(), Some(&Activation::Sigmoid));
        assert_eq!(d.params.weights.len(), 5);
    }

    #[test]
    fn relu_generator_output_nonnegative() {
        let g = build_generator(&NetDims::default(), &mut Rng::new(2)).unwrap();
        let mut rng = Rng::new(3);
        let y = translate(&g, &points(&mut rng, 200)).unwrap();
        assert!(y.as_slice().iter().all(|&v| v >= 0.0));
        assert_eq!(y.shape(), (200, 2));
    }

    #[test]
    fn discriminator_range_and_zero_weights() {
        let mut d = build_discriminator(&NetDims::default(), &mut Rng::new(4)).unwrap();
        let x = points(&mut Rng::new(5), 100);
        let p = discriminate(&d, &x).unwrap();
        assert_eq!(p.cols(), 1);
        assert!(p.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        for w in &mut d.params.weights {
            w.as_mut_slice().fill(0.0);
        }
        assert!(discriminate(&d, &x)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.5));
    }

    #[test]
    fn same_seed_same_networks() {
        let dims = NetDims::default();
        let a = build_variant(VariantKind::DiscoGan, &dims, &mut Rng::new(8)).unwrap();
        let b = build_variant(VariantKind::DiscoGan, &dims, &mut Rng::new(8)).unwrap();
        assert_eq!(a, b);
        let s = build_variant(VariantKind::StandardGan, &dims, &mut Rng::new(8)).unwrap();
        assert_eq!(s.g_ab, a.g_ab);
        assert_eq!(s.d_b, a.d_b);
    }

    #[test]
    fn variant_network_counts() {
        let dims = NetDims::default();
        for (kind, n) in [
            (VariantKind::StandardGan, 2),
            (VariantKind::ReconGan, 3),
            (VariantKind::DiscoGan, 4),
        ] {
            let set = build_variant(kind, &dims, &mut Rng::new(1)).unwrap();
            assert_eq!(set.network_count(), n);
            assert_eq!(kind.network_count(), n);
        }
        let set = build_variant(VariantKind::ReconGan, &dims, &mut Rng::new(1)).unwrap();
        assert!(set.g_ba.is_some() && set.d_a.is_none());
    }

    #[test]
    fn presence_pattern_enforced() {
        let dims = NetDims::default();
        let set = build_variant(VariantKind::DiscoGan, &dims, &mut Rng::new(1)).unwrap();
        let r = ModelSet::new(
            VariantKind::StandardGan,
            set.g_ab.clone(),
            set.g_ba.clone(),
            None,
            set.d_b.clone(),
        );
        assert!(r.is_err());
        let r = ModelSet::new(
            VariantKind::DiscoGan,
            set.g_ab.clone(),
            set.g_ba.clone(),
            None,
            set.d_b.clone(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn generator_is_shared_between_paths() {
        let mut set = build_variant(
            VariantKind::DiscoGan,
            &NetDims::default(),
            &mut Rng::new(12),
        )
        .unwrap();
        let b = points(&mut Rng::new(13), 16).map(|v| v.abs());
        let bab_before = roundtrip(set.g_ba.as_ref().unwrap(), &set.g_ab, &b)
            .unwrap()
            .1;
        // Perturb G_AB as the A-side update would.
        set.g_ab.params.biases[2][0] += 0.5;
        let bab_after = roundtrip(set.g_ba.as_ref().unwrap(), &set.g_ab, &b)
            .unwrap()
            .1;
        assert_ne!(bab_before, bab_after);
    }

    #[test]
    fn translate_and_roundtrip() {
        let id = identity_gen();
        let x = points(&mut Rng::new(6), 10);
        assert_eq!(translate(&id, &x).unwrap(), x);
        let (t, r) = roundtrip(&id, &id, &x).unwrap();
        assert_eq!(t, x);
        assert_eq!(r, x);
        assert_eq!(mse_distance(&x, &r).unwrap(), 0.0);
        assert!(translate(&id, &Matrix::zeros(3, 3)).is_err());

        let g = build_generator(
            &NetDims {
                gen_output_activation: Activation::Identity,
                ..NetDims::default()
            },
            &mut Rng::new(7),
        )
        .unwrap();
        let h = build_generator(&NetDims::default(), &mut Rng::new(8)).unwrap();
        let (t, r) = roundtrip(&g, &h, &x).unwrap();
        assert_eq!(t, translate(&g, &x).unwrap());
        assert_eq!(r, translate(&h, &t).unwrap());
        assert!(mse_distance(&x, &r).unwrap() > 0.0);
        let one = Matrix::from_rows(&[x.row(3)]).unwrap();
        assert_eq!(translate(&g, &one).unwrap().row(0), t.row(3));
        assert!(t.is_finite());
    }

    #[test]
    fn variant_names_round_trip() {
        for k in VariantKind::ALL {
            assert_eq!(k.as_str().parse::<VariantKind>().unwrap(), k);
        }
        assert!("cycle".parse::<VariantKind>().is_err());
    }
}
