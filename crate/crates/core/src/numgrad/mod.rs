//! Reverse-mode gradients for sequential MLPs, the GAN and reconstruction
//! losses, and the Adam optimizer.
//!
//! Every batch loss here is a mean over entries, and the gradients it returns
//! already carry the `1/n` factor. [`mlp_backward`] therefore sums over rows.

mod activation;
mod adam;
mod finite_diff;
pub mod gradcheck;
mod loss;
mod mlp;

pub use activation::{activation, activation_grad, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use finite_diff::finite_diff_grads;
pub use loss::{
    clamp_prob, gan_discriminator_loss, gan_discriminator_loss_grad, gan_generator_loss,
    gan_generator_loss_grad, mse_distance, mse_distance_grad, PROB_CLAMP,
};
pub use mlp::{
    init_params, mlp_backward, mlp_backward_input, mlp_forward, mlp_predict, ForwardCache,
    MlpParams, MlpSpec,
};
