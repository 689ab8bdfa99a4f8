//! The radius-conditional angular VAE: projected-normal or Dirichlet
//! likelihood on the L¹ simplex, with the radius entering every network
//! through the bounded reparameterization u = 1/(1+r) ∈ (0, 1].
//!
//! Generative story: z ~ N(0, I_n); the decoder reads (z, u) and emits
//! either (μ_ν, ln σ_ν) for a projected normal — draw s ~ N(μ_ν, diag σ_ν²),
//! rectify negatives to zero, divide by the sum — or a concentration vector
//! for a Dirichlet on the simplex. Because the decoder is a finite relu
//! network of the bounded input u, it is Lipschitz in u, so its outputs
//! converge as r → ∞; evaluating at u = 0 exactly is therefore sampling
//! from the model's limiting angular measure, the object that governs the
//! composition of the most extreme joint events.
//!
//! Variational family: q(z | θ, r) = N(μ_ω, diag σ_ω²) from the encoder on
//! [θ, u], with σ_ω = exp(raw) for strict positivity. The minimized
//! per-point loss is −½ Σ_j (1 + ln σ_ω,j² − μ_ω,j² − σ_ω,j²) minus the
//! Monte Carlo mean of the decoder log-density at the observed θ, using the
//! explicit Gaussian reparameterization z = μ_ω + σ_ω ⊙ ε. For the
//! projected-normal kind the log-density is the normal one evaluated at θ
//! itself (the fiber integral over {s : Π(s) = θ} is never computed).
//!
//! Default architecture: encoder (m+1)→8→8→4→2n with relu hidden layers
//! and a linear output; decoder (n+1)→5→10→5→out likewise. Kernels are
//! Glorot-uniform, biases zero, except the decoder's output bias, drawn
//! uniformly in [0.5, 3] so initial concentrations/scales are non-degenerate.

use crate::autodiff::{Activation, DenseNet, Graph, Layer, NodeId};
use crate::distributions::{sample_dirichlet, DiagNormalParams, DirichletParams};
use crate::error::{Error, Result};
use crate::polar::PolarDataset;
use crate::radius_vae::ElboEval;
use crate::rng::uniform_open;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floor applied to Dirichlet concentrations decoded from raw relu outputs.
pub const CONC_FLOOR: f64 = 1e-4;

/// Maximum projected-normal rejection retries before giving up.
const MAX_PROJECT_RETRIES: usize = 100;

/// Which likelihood the decoder parameterizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LikelihoodKind {
    /// N(μ_ν, diag σ_ν²) draws rectified and L¹-normalized onto the simplex.
    ProjectedNormal,
    /// Dirichlet(a_ν) directly on the simplex.
    Dirichlet,
}

impl LikelihoodKind {
    pub fn name(self) -> &'static str {
        match self {
            LikelihoodKind::ProjectedNormal => "projected_normal",
            LikelihoodKind::Dirichlet => "dirichlet",
        }
    }

    /// # Errors
    /// Unknown names are config errors.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "projected_normal" => Ok(LikelihoodKind::ProjectedNormal),
            "dirichlet" => Ok(LikelihoodKind::Dirichlet),
            other => Err(Error::Config(format!(
                "unknown likelihood '{other}' (expected projected_normal or dirichlet)"
            ))),
        }
    }
}

/// Decoded likelihood parameters at one (z, r).
#[derive(Clone, Debug)]
pub enum AngularLikelihood {
    /// Mean and std over the ambient m coordinates.
    ProjectedNormal(DiagNormalParams),
    Dirichlet(DirichletParams),
}

/// Radius-conditional angular model over the (m−1)-simplex.
#[derive(Clone, Debug)]
pub struct AngularVaeModel {
    pub likelihood_kind: LikelihoodKind,
    /// Latent dimension n.
    pub latent_dim: usize,
    pub enc_net: DenseNet,
    pub dec_net: DenseNet,
    /// Ambient dimension m.
    pub m: usize,
}

fn glorot_layer<R: Rng + ?Sized>(rows: usize, cols: usize, act: Activation, rng: &mut R) -> Layer {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let weight = (0..rows * cols).map(|_| limit * (2.0 * uniform_open(rng) - 1.0)).collect();
    Layer { rows, cols, weight, bias: vec![0.0; rows], activation: act }
}

impl AngularVaeModel {
    /// Fresh model with the default architecture and initialization.
    ///
    /// # Errors
    /// m must be ≥ 2 and latent_dim ≥ 1.
    pub fn new<R: Rng + ?Sized>(
        m: usize,
        latent_dim: usize,
        likelihood_kind: LikelihoodKind,
        rng: &mut R,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::Shape(format!("angular model needs ambient dimension ≥ 2, got {m}")));
        }
        if latent_dim == 0 {
            return Err(Error::Shape("angular model needs latent dimension ≥ 1".into()));
        }
        let enc_net = DenseNet::new(vec![
            glorot_layer(8, m + 1, Activation::Relu, rng),
            glorot_layer(8, 8, Activation::Relu, rng),
            glorot_layer(4, 8, Activation::Relu, rng),
            glorot_layer(2 * latent_dim, 4, Activation::Identity, rng),
        ])?;
        let out_dim = match likelihood_kind {
            LikelihoodKind::ProjectedNormal => 2 * m,
            LikelihoodKind::Dirichlet => m,
        };
        let mut dec_net = DenseNet::new(vec![
            glorot_layer(5, latent_dim + 1, Activation::Relu, rng),
            glorot_layer(10, 5, Activation::Relu, rng),
            glorot_layer(5, 10, Activation::Relu, rng),
            glorot_layer(out_dim, 5, Activation::Identity, rng),
        ])?;
        let last = dec_net.layers.len() - 1;
        for b in &mut dec_net.layers[last].bias {
            *b = 0.5 + 2.5 * uniform_open(rng);
        }
        Ok(AngularVaeModel { likelihood_kind, latent_dim, enc_net, dec_net, m })
    }

    /// Assemble from explicit parts (tests, checkpoint loading).
    ///
    /// # Errors
    /// Encoder must map (m+1)→2n and decoder (n+1)→(2m or m per kind).
    pub fn from_parts(
        likelihood_kind: LikelihoodKind,
        latent_dim: usize,
        enc_net: DenseNet,
        dec_net: DenseNet,
        m: usize,
    ) -> Result<Self> {
        if m < 2 || latent_dim == 0 {
            return Err(Error::Shape(format!(
                "angular model needs m ≥ 2 and latent_dim ≥ 1, got m = {m}, n = {latent_dim}"
            )));
        }
        let dec_out = match likelihood_kind {
            LikelihoodKind::ProjectedNormal => 2 * m,
            LikelihoodKind::Dirichlet => m,
        };
        if enc_net.input_dim != m + 1 || enc_net.output_dim != 2 * latent_dim {
            return Err(Error::Shape(format!(
                "angular encoder must map {}→{}, got {}→{}",
                m + 1,
                2 * latent_dim,
                enc_net.input_dim,
                enc_net.output_dim
            )));
        }
        if dec_net.input_dim != latent_dim + 1 || dec_net.output_dim != dec_out {
            return Err(Error::Shape(format!(
                "angular decoder must map {}→{dec_out}, got {}→{}",
                latent_dim + 1,
                dec_net.input_dim,
                dec_net.output_dim
            )));
        }
        Ok(AngularVaeModel { likelihood_kind, latent_dim, enc_net, dec_net, m })
    }

    pub fn param_count(&self) -> usize {
        self.enc_net.param_count() + self.dec_net.param_count()
    }

    /// Flat parameter vector [encoder, decoder].
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.enc_net.append_params(&mut out);
        self.dec_net.append_params(&mut out);
        out
    }

    /// # Errors
    /// Wrong length is a shape error.
    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut off = 0;
        self.enc_net.set_params(flat, &mut off)?;
        self.dec_net.set_params(flat, &mut off)?;
        Ok(())
    }

    /// Decode at an explicit u ∈ [0, 1] (u = 0 is the angular-measure limit).
    fn decode_at_u(&self, z_ang: &[f64], u: f64) -> Result<AngularLikelihood> {
        if z_ang.len() != self.latent_dim {
            return Err(Error::Shape(format!(
                "decode expects a {}-dimensional latent, got {}",
                self.latent_dim,
                z_ang.len()
            )));
        }
        let mut input = z_ang.to_vec();
        input.push(u);
        let raw = self.dec_net.forward(&input)?;
        Ok(match self.likelihood_kind {
            LikelihoodKind::ProjectedNormal => {
                let mean = raw[..self.m].to_vec();
                let std = raw[self.m..].iter().map(|&v| v.exp()).collect();
                AngularLikelihood::ProjectedNormal(DiagNormalParams { mean, std })
            }
            LikelihoodKind::Dirichlet => {
                let concentration = raw.iter().map(|&v| v.max(0.0).max(CONC_FLOOR)).collect();
                AngularLikelihood::Dirichlet(DirichletParams { concentration })
            }
        })
    }

    /// One simplex draw from decoded parameters; None signals a rejected
    /// projected-normal draw (all coordinates nonpositive).
    fn draw_from_likelihood<R: Rng + ?Sized>(
        &self,
        lik: &AngularLikelihood,
        rng: &mut R,
    ) -> Option<Vec<f64>> {
        match lik {
            AngularLikelihood::ProjectedNormal(p) => {
                let s: Vec<f64> = p
                    .mean
                    .iter()
                    .zip(&p.std)
                    .map(|(&m, &sd)| {
                        let e: f64 = rng.sample(StandardNormal);
                        m + sd * e
                    })
                    .collect();
                project_l1(&s)
            }
            AngularLikelihood::Dirichlet(p) => Some(sample_dirichlet(p, rng)),
        }
    }

    /// One angle at radius r: z ~ N(0, I_n), decode, draw; rejected
    /// projected-normal draws retry with a fresh z up to 100 times.
    ///
    /// # Errors
    /// Exhausting the retries is a numerical error.
    pub fn draw_one_angle<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> Result<Vec<f64>> {
        self.draw_one_at_u(1.0 / (1.0 + r), rng)
    }

    fn draw_one_at_u<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..MAX_PROJECT_RETRIES {
            let z: Vec<f64> = (0..self.latent_dim).map(|_| rng.sample(StandardNormal)).collect();
            let lik = self.decode_at_u(&z, u)?;
            if let Some(theta) = self.draw_from_likelihood(&lik, rng) {
                return Ok(theta);
            }
        }
        Err(Error::Numerical(format!(
            "angular sampling rejected {MAX_PROJECT_RETRIES} consecutive projected-normal draws \
             (all coordinates nonpositive); the decoder is degenerate"
        )))
    }

    /// Build the batch-mean loss node from a flat parameter leaf over
    /// (θ, r) pairs. `eps` holds batch·l·latent_dim standard normals,
    /// datum-major then draw-major. Returns the loss node.
    ///
    /// # Errors
    /// A non-finite per-datum loss is a training error naming the datum.
    pub(crate) fn elbo_graph(
        &self,
        g: &mut Graph,
        flat: NodeId,
        batch: &PolarDataset,
        eps: &[f64],
        l: usize,
    ) -> Result<NodeId> {
        assert!(l >= 1, "elbo needs at least one MC sample");
        assert_eq!(
            eps.len(),
            batch.len() * l * self.latent_dim,
            "noise/batch size mismatch"
        );
        if batch.dim() != self.m {
            return Err(Error::Shape(format!(
                "angular model is {}-dimensional but the batch has {} columns",
                self.m,
                batch.dim()
            )));
        }
        let n = self.latent_dim;
        let mut off = 0;
        let enc_slices = self.enc_net.graph_param_slices(g, flat, &mut off);
        let dec_slices = self.dec_net.graph_param_slices(g, flat, &mut off);
        let one = g.constant_scalar(1.0);
        let half = g.constant_scalar(0.5);
        let neg_half = g.constant_scalar(-0.5);
        let two = g.constant_scalar(2.0);
        let half_ln_two_pi = g.constant_scalar(crate::special_fn::HALF_LN_TWO_PI);

        let mut batch_acc: Option<NodeId> = None;
        for i in 0..batch.len() {
            let r = batch.radii[i];
            let theta = batch.angles.row(i);
            let u = 1.0 / (1.0 + r);
            let mut enc_in = theta.to_vec();
            enc_in.push(u);
            let input = g.constant(&enc_in);
            let raw = self.enc_net.forward_graph(g, input, &enc_slices);
            let mean = g.slice(raw, 0, n);
            let log_std = g.slice(raw, n, n);
            let std = g.exp(log_std);

            // KL(N(μ, σ²) ‖ N(0, I)) = −½ Σ (1 + 2 ln σ − μ² − σ²).
            let kl = {
                let mu2 = g.square(mean);
                let s2 = g.square(std);
                let tls = g.mul(two, log_std);
                let inner = g.add(one, tls);
                let inner = g.sub(inner, mu2);
                let inner = g.sub(inner, s2);
                let summed = g.sum(inner);
                g.mul(neg_half, summed)
            };

            let u_node = g.constant_scalar(u);
            let theta_node = g.constant(theta);
            let mut recon_acc: Option<NodeId> = None;
            for k in 0..l {
                let e = &eps[(i * l + k) * n..(i * l + k + 1) * n];
                let e_node = g.constant(e);
                let scaled = g.mul(std, e_node);
                let z = g.add(mean, scaled);
                let dec_in = g.concat(z, u_node);
                let raw = self.dec_net.forward_graph(g, dec_in, &dec_slices);
                let loglik = match self.likelihood_kind {
                    LikelihoodKind::ProjectedNormal => {
                        // Σ_j [−½ ln 2π − ln σ_j − ½((θ_j − μ_j)/σ_j)²],
                        // with ln σ_j equal to the raw decoder output.
                        let mu = g.slice(raw, 0, self.m);
                        let raw_ls = g.slice(raw, self.m, self.m);
                        let sd = g.exp(raw_ls);
                        let diff = g.sub(theta_node, mu);
                        let w = g.div(diff, sd);
                        let sq = g.square(w);
                        let s_sq = g.sum(sq);
                        let s_ls = g.sum(raw_ls);
                        let m_node = g.constant_scalar(self.m as f64);
                        let c = g.mul(m_node, half_ln_two_pi);
                        let t = g.mul(half, s_sq);
                        let t = g.add(t, s_ls);
                        let t = g.add(t, c);
                        let zero = g.constant_scalar(0.0);
                        g.sub(zero, t)
                    }
                    LikelihoodKind::Dirichlet => {
                        // ln Γ(Σa) − Σ ln Γ(a_j) + Σ (a_j − 1) ln θ_j.
                        let conc = g.floor_at(raw, CONC_FLOOR);
                        let a0 = g.sum(conc);
                        let t1 = g.log_gamma(a0);
                        let lg = g.log_gamma(conc);
                        let t2 = g.sum(lg);
                        let ln_theta: Vec<f64> =
                            theta.iter().map(|&t| t.max(1e-12).ln()).collect();
                        let lt = g.constant(&ln_theta);
                        let am1 = g.sub(conc, one);
                        let prod = g.mul(am1, lt);
                        let t3 = g.sum(prod);
                        let s = g.sub(t1, t2);
                        g.add(s, t3)
                    }
                };
                recon_acc = Some(match recon_acc {
                    None => loglik,
                    Some(acc) => g.add(acc, loglik),
                });
            }
            let inv_l = g.constant_scalar(1.0 / l as f64);
            let recon_mean = g.mul(recon_acc.expect("l ≥ 1"), inv_l);
            let loss_i = g.sub(kl, recon_mean);
            if !g.scalar(loss_i).is_finite() {
                return Err(Error::Training(format!(
                    "non-finite angular ELBO at datum {i} (r = {r})"
                )));
            }
            batch_acc = Some(match batch_acc {
                None => loss_i,
                Some(acc) => g.add(acc, loss_i),
            });
        }
        let total = batch_acc
            .ok_or_else(|| Error::Training("angular ELBO over an empty batch".into()))?;
        let inv_b = g.constant_scalar(1.0 / batch.len() as f64);
        Ok(g.mul(total, inv_b))
    }
}

/// Project onto the L¹ simplex: rectify negatives to 0, divide by the sum.
/// Returns None when every coordinate is nonpositive (caller resamples).
pub fn project_l1(s: &[f64]) -> Option<Vec<f64>> {
    let rect: Vec<f64> = s.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = rect.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    Some(rect.into_iter().map(|v| v / sum).collect())
}

/// Variational posterior N(μ_ω, diag σ_ω²) at (θ, r): encoder on [θ, u]
/// with u = 1/(1+r), mean raw, std = exp(raw).
pub fn encode(model: &AngularVaeModel, theta: &[f64], r: f64) -> Result<DiagNormalParams> {
    if theta.len() != model.m {
        return Err(Error::Shape(format!(
            "encode expects a {}-coordinate angle, got {}",
            model.m,
            theta.len()
        )));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!("encode needs a positive finite radius, got {r}")));
    }
    let mut input = theta.to_vec();
    input.push(1.0 / (1.0 + r));
    let raw = model.enc_net.forward(&input)?;
    let n = model.latent_dim;
    Ok(DiagNormalParams {
        mean: raw[..n].to_vec(),
        std: raw[n..].iter().map(|&v| v.exp()).collect(),
    })
}

/// Decode likelihood parameters at (z_ang, r), reading the radius only
/// through u = 1/(1+r).
///
/// # Errors
/// Latent dimension mismatch is a shape error.
pub fn decode(model: &AngularVaeModel, z_ang: &[f64], r: f64) -> Result<AngularLikelihood> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("decode needs a nonnegative finite radius, got {r}")));
    }
    model.decode_at_u(z_ang, 1.0 / (1.0 + r))
}

/// n_draws conditional angle samples at radius r (rows on the simplex).
///
/// # Errors
/// Exhausted projected-normal retries propagate as numerical errors.
pub fn sample_angle<R: Rng + ?Sized>(
    model: &AngularVaeModel,
    r: f64,
    n_draws: usize,
    rng: &mut R,
) -> Result<crate::polar::SampleMatrix> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!("sample_angle needs a positive finite radius, got {r}")));
    }
    let mut data = Vec::with_capacity(n_draws * model.m);
    for _ in 0..n_draws {
        data.extend(model.draw_one_at_u(1.0 / (1.0 + r), rng)?);
    }
    crate::polar::SampleMatrix::new(data, n_draws, model.m)
}

/// n_draws samples from the model's limiting angular measure: identical to
/// [`sample_angle`] but with the decoder input pinned at u = 0 exactly.
///
/// # Errors
/// As [`sample_angle`].
pub fn sample_angular_measure<R: Rng + ?Sized>(
    model: &AngularVaeModel,
    n_draws: usize,
    rng: &mut R,
) -> Result<crate::polar::SampleMatrix> {
    let mut data = Vec::with_capacity(n_draws * model.m);
    for _ in 0..n_draws {
        data.extend(model.draw_one_at_u(0.0, rng)?);
    }
    crate::polar::SampleMatrix::new(data, n_draws, model.m)
}

/// Batch-averaged minimized angular loss with gradients:
/// KL(q(z|θ,r) ‖ N(0,I)) − (1/L) Σ_ℓ ln p(θ | z⁽ℓ⁾, r).
///
/// # Errors
/// Dimension mismatches and non-finite losses are reported with context.
pub fn elbo_angular<R: Rng + ?Sized>(
    model: &AngularVaeModel,
    batch: &PolarDataset,
    l: usize,
    rng: &mut R,
) -> Result<ElboEval> {
    let eps: Vec<f64> = (0..batch.len() * l * model.latent_dim)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    elbo_angular_with_noise(model, batch, l, &eps)
}

/// Deterministic core of [`elbo_angular`] with caller-supplied standard
/// normals (batch·l·latent_dim values).
pub fn elbo_angular_with_noise(
    model: &AngularVaeModel,
    batch: &PolarDataset,
    l: usize,
    eps: &[f64],
) -> Result<ElboEval> {
    let params = model.params();
    let b = batch.len();
    let chunk = (2000 / (l + 1)).max(1);
    let mut g = Graph::new();
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    let mut start = 0;
    while start < b {
        let end = (start + chunk).min(b);
        let sub = PolarDataset {
            radii: batch.radii[start..end].to_vec(),
            angles: crate::polar::SampleMatrix::new(
                batch
                    .angles
                    .as_slice()[start * model.m..end * model.m]
                    .to_vec(),
                end - start,
                model.m,
            )?,
        };
        g.reset();
        let flat = g.leaf(&params);
        let nd = model.latent_dim;
        let mean_node = model
            .elbo_graph(&mut g, flat, &sub, &eps[start * l * nd..end * l * nd], l)
            .map_err(|e| match e {
                Error::Training(msg) => Error::Training(format!("{msg} (batch offset {start})")),
                other => other,
            })?;
        let weight = (end - start) as f64 / b as f64;
        let wnode = g.constant_scalar(weight);
        let scaled = g.mul(mean_node, wnode);
        g.backward(scaled)?;
        loss += g.scalar(scaled);
        for (acc, d) in grad.iter_mut().zip(g.grad(flat)) {
            *acc += d;
        }
        start = end;
    }
    Ok(ElboEval { loss, grad, floor_events: 0, clamped_grads: 0 })
}
