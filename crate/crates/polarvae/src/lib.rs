//! Generative modeling of multivariate heavy-tailed data in polar form.
//!
//! The crate factors a sample X ∈ ℝ₊^m into radius R = ‖X‖₁ and angle
//! Θ = X/R on the L¹ simplex, and fits two coupled variational autoencoders:
//! a radius model whose inverse-gamma prior and gamma likelihood give the
//! generator a provable regularly-varying tail, and a radius-conditional
//! angular model that captures how the spectral distribution deforms as the
//! radius grows. Baselines (a standard Gaussian-latent VAE and a relu
//! pushforward of heavy-tailed noise), extreme-value diagnostics, a synthetic
//! data generator, and a command-line driver round out the pipeline.
//!
//! Modules are layered bottom-up: [`special_fn`] (gamma-family special
//! functions), [`autodiff`] (a small reverse-mode tape), [`distributions`],
//! [`polar`], the models ([`radius_vae`], [`angular_vae`], [`baselines`]),
//! [`train`], [`metrics`], [`data`], and [`cli`].

pub mod angular_vae;
pub mod autodiff;
pub mod baselines;
pub mod cli;
pub mod data;
pub mod distributions;
pub mod error;
pub mod metrics;
pub mod polar;
pub mod radius_vae;
pub mod rng;
pub mod special_fn;
pub mod train;

pub use error::{Error, Result};
