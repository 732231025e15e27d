//! Loss wiring and the alternating discriminator/generator schedule.
//!
//! Per iteration: one discriminator update, then one generator update, both on
//! the same pair of freshly sampled minibatches. Generator terms for the
//! A-to-B direction and (DiscoGAN only) the B-to-A direction come from the
//! same [`translation_half`] routine with the networks' roles swapped.

use alloc::vec::Vec;

use crate::domains::{sample, DomainSpec, GaussianMixture};
use crate::error::{numeric_err, param_err, Result};
use crate::models::{build_variant, ModelSet, NetDims, Network, VariantKind};
use crate::numgrad::{
    adam_step, gan_discriminator_loss_grad, gan_generator_loss_grad, mlp_backward,
    mlp_backward_input, mse_distance_grad, AdamConfig, AdamState, MlpParams,
};
use crate::{Matrix, Rng};

/// Distance used for the reconstruction terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconDistance {
    #[default]
    Mse,
}

impl ReconDistance {
    pub fn as_str(self) -> &'static str {
        match self {
            ReconDistance::Mse => "mse",
        }
    }

    /// Distance between `reconstructed` and `original`, with its gradient
    /// with respect to `reconstructed`.
    pub fn distance_grad(self, reconstructed: &Matrix, original: &Matrix) -> Result<(f64, Matrix)> {
        match self {
            ReconDistance::Mse => mse_distance_grad(reconstructed, original),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: VariantKind,
    pub iterations: u64,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub dims: NetDims,
    pub domain_a: DomainSpec,
    pub domain_b: DomainSpec,
    pub recon_distance: ReconDistance,
    pub log_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: VariantKind::DiscoGan,
            iterations: 50_000,
            batch_size: 200,
            adam: AdamConfig::default(),
            seed: 0,
            dims: NetDims::default(),
            domain_a: DomainSpec::default_a(),
            domain_b: DomainSpec::default_b(),
            recon_distance: ReconDistance::Mse,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(param_err!("iterations must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(param_err!("batch_size must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(param_err!("log_every must be at least 1"));
        }
        if !(self.adam.lr > 0.0) {
            return Err(param_err!("learning rate must be positive"));
        }
        self.adam.validate()?;
        self.domain_a.build()?;
        self.domain_b.build()?;
        self.dims.generator_spec()?;
        self.dims.discriminator_spec()?;
        Ok(())
    }
}

/// Losses of one iteration. Terms a variant does not have are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub iteration: u64,
    pub l_gan_b: f64,
    pub l_const_a: Option<f64>,
    pub l_gan_a: Option<f64>,
    pub l_const_b: Option<f64>,
    pub l_g_total: f64,
    pub l_d_a: Option<f64>,
    pub l_d_b: f64,
    pub l_d_total: f64,
}

impl LossReport {
    /// Present generator terms summed in reporting order.
    pub fn generator_component_sum(&self) -> f64 {
        sum_present(
            self.l_gan_b,
            &[self.l_const_a, self.l_gan_a, self.l_const_b],
        )
    }

    pub fn discriminator_component_sum(&self) -> f64 {
        sum_present(self.l_d_b, &[self.l_d_a])
    }
}

fn sum_present(first: f64, rest: &[Option<f64>]) -> f64 {
    rest.iter().flatten().fold(first, |acc, v| acc + v)
}

/// Loss reports in strictly increasing iteration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    reports: Vec<LossReport>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn push(&mut self, report: LossReport) -> Result<()> {
        if let Some(last) = self.reports.last() {
            if report.iteration <= last.iteration {
                return Err(param_err!(
                    "history iteration {} does not follow {}",
                    report.iteration,
                    last.iteration
                ));
            }
        }
        self.reports.push(report);
        Ok(())
    }

    pub fn reports(&self) -> &[LossReport] {
        &self.reports
    }

    pub fn first(&self) -> Option<&LossReport> {
        self.reports.first()
    }

    pub fn last(&self) -> Option<&LossReport> {
        self.reports.last()
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorLosses {
    pub l_gan_b: f64,
    pub l_const_a: Option<f64>,
    pub l_gan_a: Option<f64>,
    pub l_const_b: Option<f64>,
    pub total: f64,
    pub grad_g_ab: MlpParams,
    pub grad_g_ba: Option<MlpParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorLosses {
    pub l_d_a: Option<f64>,
    pub l_d_b: f64,
    pub total: f64,
    pub grad_d_a: Option<MlpParams>,
    pub grad_d_b: MlpParams,
}

/// Generator-side terms of one translation direction.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLosses {
    pub gan: f64,
    pub recon: Option<f64>,
    pub grad_forward: MlpParams,
    pub grad_backward: Option<MlpParams>,
}

/// Adversarial loss of `forward(x)` under `disc`, plus, when `backward` is
/// given, the reconstruction distance of `backward(forward(x))` to `x`.
/// The discriminator is only read.
pub fn translation_half(
    forward: &Network,
    backward: Option<&Network>,
    disc: &Network,
    x: &Matrix,
    distance: ReconDistance,
) -> Result<HalfLosses> {
    let (translated, fwd_cache) = forward.forward(x)?;
    let (scores, disc_cache) = disc.forward(&translated)?;
    let (gan, d_scores) = gan_generator_loss_grad(&scores)?;
    let mut d_translated = mlp_backward_input(&disc.spec, &disc.params, &disc_cache, &d_scores)?;

    let mut recon = None;
    let mut grad_backward = None;
    if let Some(back) = backward {
        let (reconstructed, back_cache) = back.forward(&translated)?;
        let (dist, d_rec) = distance.distance_grad(&reconstructed, x)?;
        let (dx, g_back) = mlp_backward(&back.spec, &back.params, &back_cache, &d_rec)?;
        d_translated.add_assign(&dx)?;
        recon = Some(dist);
        grad_backward = Some(g_back);
    }
    let (_, grad_forward) =
        mlp_backward(&forward.spec, &forward.params, &fwd_cache, &d_translated)?;
    Ok(HalfLosses {
        gan,
        recon,
        grad_forward,
        grad_backward,
    })
}

/// Generator objective of the variant with discriminators frozen.
pub fn generator_losses(
    set: &ModelSet,
    batch_a: &Matrix,
    batch_b: &Matrix,
) -> Result<GeneratorLosses> {
    generator_losses_with(set, batch_a, batch_b, ReconDistance::Mse)
}

pub fn generator_losses_with(
    set: &ModelSet,
    batch_a: &Matrix,
    batch_b: &Matrix,
    distance: ReconDistance,
) -> Result<GeneratorLosses> {
    let a_side = translation_half(&set.g_ab, set.g_ba.as_ref(), &set.d_b, batch_a, distance)?;
    let mut grad_g_ab = a_side.grad_forward;
    let mut grad_g_ba = a_side.grad_backward;
    let mut l_gan_a = None;
    let mut l_const_b = None;

    if let (VariantKind::DiscoGan, Some(g_ba), Some(d_a)) = (set.kind, &set.g_ba, &set.d_a) {
        let b_side = translation_half(g_ba, Some(&set.g_ab), d_a, batch_b, distance)?;
        grad_g_ab.accumulate(
            b_side
                .grad_backward
                .as_ref()
                .expect("reconstruction leg present"),
        )?;
        grad_g_ba
            .as_mut()
            .expect("G_BA gradient present")
            .accumulate(&b_side.grad_forward)?;
        l_gan_a = Some(b_side.gan);
        l_const_b = b_side.recon;
    }

    let l_gan_b = a_side.gan;
    let l_const_a = a_side.recon;
    let total = sum_present(l_gan_b, &[l_const_a, l_gan_a, l_const_b]);
    if !total.is_finite() {
        return Err(numeric_err!("generator loss is not finite"));
    }
    Ok(GeneratorLosses {
        l_gan_b,
        l_const_a,
        l_gan_a,
        l_const_b,
        total,
        grad_g_ab,
        grad_g_ba,
    })
}

fn discriminator_half(disc: &Network, real: &Matrix, fake: &Matrix) -> Result<(f64, MlpParams)> {
    let (p_real, c_real) = disc.forward(real)?;
    let (p_fake, c_fake) = disc.forward(fake)?;
    let (loss, g_real, g_fake) = gan_discriminator_loss_grad(&p_real, &p_fake)?;
    let (_, mut grads) = mlp_backward(&disc.spec, &disc.params, &c_real, &g_real)?;
    let (_, grads_fake) = mlp_backward(&disc.spec, &disc.params, &c_fake, &g_fake)?;
    grads.accumulate(&grads_fake)?;
    Ok((loss, grads))
}

/// Discriminator objective of the variant. Generated samples come from
/// forward passes only, so no gradient reaches the generators.
pub fn discriminator_losses(
    set: &ModelSet,
    batch_a: &Matrix,
    batch_b: &Matrix,
) -> Result<DiscriminatorLosses> {
    let fake_b = set.g_ab.predict(batch_a)?;
    let (l_d_b, grad_d_b) = discriminator_half(&set.d_b, batch_b, &fake_b)?;
    let (l_d_a, grad_d_a) = match (&set.d_a, &set.g_ba) {
        (Some(d_a), Some(g_ba)) => {
            let fake_a = g_ba.predict(batch_b)?;
            let (l, g) = discriminator_half(d_a, batch_a, &fake_a)?;
            (Some(l), Some(g))
        }
        _ => (None, None),
    };
    let total = sum_present(l_d_b, &[l_d_a]);
    if !total.is_finite() {
        return Err(numeric_err!("discriminator loss is not finite"));
    }
    Ok(DiscriminatorLosses {
        l_d_a,
        l_d_b,
        total,
        grad_d_a,
        grad_d_b,
    })
}

/// One Adam state per network of a [`ModelSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub g_ab: AdamState,
    pub g_ba: Option<AdamState>,
    pub d_a: Option<AdamState>,
    pub d_b: AdamState,
}

impl Optimizers {
    pub fn new(set: &ModelSet, hyper: AdamConfig) -> Self {
        Optimizers {
            g_ab: AdamState::new(&set.g_ab.spec, hyper),
            g_ba: set.g_ba.as_ref().map(|n| AdamState::new(&n.spec, hyper)),
            d_a: set.d_a.as_ref().map(|n| AdamState::new(&n.spec, hyper)),
            d_b: AdamState::new(&set.d_b.spec, hyper),
        }
    }
}

fn step_optional(
    state: Option<&mut AdamState>,
    net: Option<&mut Network>,
    grads: Option<&MlpParams>,
) -> Result<()> {
    match (state, net, grads) {
        (Some(s), Some(n), Some(g)) => adam_step(s, &mut n.params, g),
        (None, None, None) => Ok(()),
        _ => Err(param_err!("optimizer state does not match the model set")),
    }
}

/// Discriminator update followed by generator update. The reported losses
/// are the ones each update was computed from.
pub fn train_step(
    set: &mut ModelSet,
    opts: &mut Optimizers,
    batch_a: &Matrix,
    batch_b: &Matrix,
    iteration: u64,
) -> Result<LossReport> {
    train_step_with(set, opts, batch_a, batch_b, iteration, ReconDistance::Mse)
}

pub fn train_step_with(
    set: &mut ModelSet,
    opts: &mut Optimizers,
    batch_a: &Matrix,
    batch_b: &Matrix,
    iteration: u64,
    distance: ReconDistance,
) -> Result<LossReport> {
    let d = discriminator_losses(set, batch_a, batch_b)?;
    adam_step(&mut opts.d_b, &mut set.d_b.params, &d.grad_d_b)?;
    step_optional(opts.d_a.as_mut(), set.d_a.as_mut(), d.grad_d_a.as_ref())?;

    let g = generator_losses_with(set, batch_a, batch_b, distance)?;
    adam_step(&mut opts.g_ab, &mut set.g_ab.params, &g.grad_g_ab)?;
    step_optional(opts.g_ba.as_mut(), set.g_ba.as_mut(), g.grad_g_ba.as_ref())?;

    Ok(LossReport {
        iteration,
        l_gan_b: g.l_gan_b,
        l_const_a: g.l_const_a,
        l_gan_a: g.l_gan_a,
        l_const_b: g.l_const_b,
        l_g_total: g.total,
        l_d_a: d.l_d_a,
        l_d_b: d.l_d_b,
        l_d_total: d.total,
    })
}

/// Everything needed to continue a run: models, optimizer moments, the data
/// stream and the number of completed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub config: TrainConfig,
    pub models: ModelSet,
    pub optimizers: Optimizers,
    pub rng: Rng,
    pub iteration: u64,
    domain_a: GaussianMixture,
    domain_b: GaussianMixture,
}

/// Seed stream for network initialisation.
pub const INIT_STREAM: u64 = 0;
/// Seed stream for minibatch sampling.
pub const DATA_STREAM: u64 = 1;

impl TrainState {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut init_rng = Rng::stream(config.seed, INIT_STREAM);
        let models = build_variant(config.variant, &config.dims, &mut init_rng)?;
        let optimizers = Optimizers::new(&models, config.adam);
        let rng = Rng::stream(config.seed, DATA_STREAM);
        TrainState::from_parts(config, models, optimizers, rng, 0)
    }

    /// Reassembles a state, e.g. from a checkpoint.
    pub fn from_parts(
        config: TrainConfig,
        models: ModelSet,
        optimizers: Optimizers,
        rng: Rng,
        iteration: u64,
    ) -> Result<Self> {
        if models.kind != config.variant {
            return Err(param_err!(
                "models are {} but config says {}",
                models.kind,
                config.variant
            ));
        }
        let domain_a = config.domain_a.build()?;
        let domain_b = config.domain_b.build()?;
        Ok(TrainState {
            config,
            models,
            optimizers,
            rng,
            iteration,
            domain_a,
            domain_b,
        })
    }

    pub fn domain_a(&self) -> &GaussianMixture {
        &self.domain_a
    }

    pub fn domain_b(&self) -> &GaussianMixture {
        &self.domain_b
    }

    /// Samples fresh minibatches and runs one [`train_step`].
    pub fn step(&mut self) -> Result<LossReport> {
        let n = self.config.batch_size;
        let a = sample(&self.domain_a, n, &mut self.rng).points;
        let b = sample(&self.domain_b, n, &mut self.rng).points;
        let it = self.iteration + 1;
        let distance = self.config.recon_distance;
        let report = train_step_with(&mut self.models, &mut self.optimizers, &a, &b, it, distance)
            .map_err(|e| numeric_err!("iteration {it}: {e}"))?;
        self.iteration = it;
        Ok(report)
    }

    /// Trains until `until` iterations are complete. Reports at multiples of
    /// `log_every` and at `until` itself go to `history`; on error the
    /// history keeps everything logged so far.
    pub fn run_until(&mut self, until: u64, history: &mut History) -> Result<()> {
        while self.iteration < until {
            let report = self.step()?;
            if report.iteration % self.config.log_every == 0 || report.iteration == until {
                history.push(report)?;
            }
        }
        Ok(())
    }
}

/// Runs `config.iterations` iterations from a fresh initialisation.
pub fn train(config: TrainConfig) -> Result<(ModelSet, History)> {
    let mut state = TrainState::new(config)?;
    let mut history = History::new();
    let until = state.config.iterations;
    state.run_until(until, &mut history)?;
    Ok((state.models, history))
}
