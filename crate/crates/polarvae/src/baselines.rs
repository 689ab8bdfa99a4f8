//! Baselines and probes: the all-Gaussian VAE the polar models are
//! compared against, and the rectified-pushforward generator whose tail
//! behavior the probes measure.
//!
//! The StdVAE is the textbook parameterization — Gaussian prior, Gaussian
//! encoder and decoder, the usual reparameterization z = μ + σ⊙ε — trained
//! on raw data rather than a polar factorization. Its role here is the
//! contrast: a Gaussian decoder puts exponentially little mass in the far
//! tail, so its likelihood on heavy-tailed hold-out points collapses while
//! the radius model stays stable.
//!
//! The pushforward generator draws z with i.i.d. Pareto marginals and maps
//! it through a relu/linear network with rectified outputs. Two structural
//! facts about this family are checked empirically by the probes:
//!
//! * its radius stays heavy-tailed with the prior's tail index (the
//!   identity map preserves Pareto marginals exactly), and
//! * its extremal angles concentrate near finitely many simplex points —
//!   at most one direction per latent coordinate — because a far-out draw
//!   is dominated by a single huge z_j and the piecewise-linear map sends
//!   each dominating coordinate along a fixed ray.
//!
//! [`angular_concentration_probe`] quantifies the second fact with a
//! greedy coverage clustering of the extremal angles;
//! [`tail_probe`] quantifies tail weight by fitting a generalized Pareto
//! shape to threshold exceedances.

use crate::autodiff::{Activation, DenseNet, Graph, Layer, NodeId};
use crate::distributions::GpParams;
use crate::error::{Error, Result};
use crate::polar::SampleMatrix;
use crate::radius_vae::ElboEval;
use crate::rng::{stream, uniform_open};
use crate::train::{adam_step, minibatch_order, AdamState, TrainConfig};
use rand::Rng;
use rand_distr::StandardNormal;

/// Standard Gaussian VAE on raw multivariate data: encoder m → … → 2n
/// (mean, log-std of q(z|x)), decoder n → … → 2m (mean, log-std of
/// p(x|z)). Realized standard deviations are exp of the raw outputs, hence
/// strictly positive.
#[derive(Clone, Debug)]
pub struct StdVaeModel {
    /// Latent dimension n.
    pub latent_dim: usize,
    pub enc_net: DenseNet,
    pub dec_net: DenseNet,
}

impl StdVaeModel {
    /// Fresh model on m-dimensional data: encoder m→8→8→2n and decoder
    /// n→8→8→2m, relu hidden layers, linear outputs, Glorot weights, zero
    /// biases.
    ///
    /// # Errors
    /// m and latent_dim must be ≥ 1.
    pub fn new<R: Rng + ?Sized>(m: usize, latent_dim: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || latent_dim == 0 {
            return Err(Error::Config(format!(
                "StdVAE needs data dimension ≥ 1 and latent dimension ≥ 1, got {m} and {latent_dim}"
            )));
        }
        let enc_net = DenseNet::new(vec![
            Layer::glorot(8, m, Activation::Relu, rng),
            Layer::glorot(8, 8, Activation::Relu, rng),
            Layer::glorot(2 * latent_dim, 8, Activation::Identity, rng),
        ])?;
        let dec_net = DenseNet::new(vec![
            Layer::glorot(8, latent_dim, Activation::Relu, rng),
            Layer::glorot(8, 8, Activation::Relu, rng),
            Layer::glorot(2 * m, 8, Activation::Identity, rng),
        ])?;
        Ok(StdVaeModel { latent_dim, enc_net, dec_net })
    }

    /// Assemble a model from existing networks.
    ///
    /// # Errors
    /// The encoder must output 2·latent_dim values, the decoder must read
    /// latent_dim values and output 2·(encoder input dim).
    pub fn from_parts(latent_dim: usize, enc_net: DenseNet, dec_net: DenseNet) -> Result<Self> {
        if enc_net.output_dim != 2 * latent_dim {
            return Err(Error::Shape(format!(
                "encoder outputs {} values, expected 2·{latent_dim}",
                enc_net.output_dim
            )));
        }
        if dec_net.input_dim != latent_dim {
            return Err(Error::Shape(format!(
                "decoder reads {} values, expected latent_dim = {latent_dim}",
                dec_net.input_dim
            )));
        }
        if dec_net.output_dim != 2 * enc_net.input_dim {
            return Err(Error::Shape(format!(
                "decoder outputs {} values, expected 2·{} for Gaussian (mean, log-std)",
                dec_net.output_dim, enc_net.input_dim
            )));
        }
        Ok(StdVaeModel { latent_dim, enc_net, dec_net })
    }

    /// Data dimension m the model was built for.
    pub fn data_dim(&self) -> usize {
        self.enc_net.input_dim
    }

    pub fn param_count(&self) -> usize {
        self.enc_net.param_count() + self.dec_net.param_count()
    }

    /// Flat parameter vector: encoder parameters then decoder parameters.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.enc_net.append_params(&mut out);
        self.dec_net.append_params(&mut out);
        out
    }

    /// # Errors
    /// The flat vector must have exactly [`Self::param_count`] entries.
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

    /// Build the batch-mean loss node from a flat parameter leaf.
    /// `eps` holds batch·l·latent_dim standard normals, datum-major.
    ///
    /// # Errors
    /// A non-finite per-datum loss is a training error naming the datum.
    pub(crate) fn elbo_graph(
        &self,
        g: &mut Graph,
        flat: NodeId,
        batch: &SampleMatrix,
        eps: &[f64],
        l: usize,
    ) -> Result<NodeId> {
        assert!(l >= 1, "elbo needs at least one MC sample");
        assert_eq!(eps.len(), batch.n_rows() * l * self.latent_dim, "noise/batch size mismatch");
        let m = self.data_dim();
        if batch.n_cols() != m {
            return Err(Error::Shape(format!(
                "model is {m}-dimensional but the batch has {} columns",
                batch.n_cols()
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
        let m_half_ln_two_pi =
            g.constant_scalar(m as f64 * crate::special_fn::HALF_LN_TWO_PI);

        let mut batch_acc: Option<NodeId> = None;
        for i in 0..batch.n_rows() {
            let x = batch.row(i);
            let input = g.constant(x);
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

            let x_node = g.constant(x);
            let mut recon_acc: Option<NodeId> = None;
            for k in 0..l {
                let e = &eps[(i * l + k) * n..(i * l + k + 1) * n];
                let e_node = g.constant(e);
                let scaled = g.mul(std, e_node);
                let z = g.add(mean, scaled);
                let raw = self.dec_net.forward_graph(g, z, &dec_slices);
                // Σ_j [−½ ln 2π − ln σ_j − ½((x_j − μ_j)/σ_j)²].
                let mu = g.slice(raw, 0, m);
                let raw_ls = g.slice(raw, m, m);
                let sd = g.exp(raw_ls);
                let diff = g.sub(x_node, mu);
                let w = g.div(diff, sd);
                let sq = g.square(w);
                let s_sq = g.sum(sq);
                let s_ls = g.sum(raw_ls);
                let t = g.mul(half, s_sq);
                let t = g.add(t, s_ls);
                let t = g.add(t, m_half_ln_two_pi);
                let zero = g.constant_scalar(0.0);
                let loglik = g.sub(zero, t);
                recon_acc = Some(match recon_acc {
                    None => loglik,
                    Some(acc) => g.add(acc, loglik),
                });
            }
            let inv_l = g.constant_scalar(1.0 / l as f64);
            let recon_mean = g.mul(recon_acc.expect("l ≥ 1"), inv_l);
            let loss_i = g.sub(kl, recon_mean);
            if !g.scalar(loss_i).is_finite() {
                return Err(Error::Training(format!("non-finite StdVAE ELBO at datum {i}")));
            }
            batch_acc = Some(match batch_acc {
                None => loss_i,
                Some(acc) => g.add(acc, loss_i),
            });
        }
        let total =
            batch_acc.ok_or_else(|| Error::Training("StdVAE ELBO over an empty batch".into()))?;
        let inv_b = g.constant_scalar(1.0 / batch.n_rows() as f64);
        Ok(g.mul(total, inv_b))
    }
}

/// Batch-averaged minimized StdVAE loss with gradients:
/// KL(q(z|x) ‖ N(0,I)) − (1/L) Σ_ℓ ln p(x | z⁽ℓ⁾).
///
/// # Errors
/// Dimension mismatches and non-finite losses are reported with context.
pub fn stdvae_elbo<R: Rng + ?Sized>(
    model: &StdVaeModel,
    batch: &SampleMatrix,
    l: usize,
    rng: &mut R,
) -> Result<ElboEval> {
    let eps: Vec<f64> = (0..batch.n_rows() * l * model.latent_dim)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    stdvae_elbo_with_noise(model, batch, l, &eps)
}

/// Deterministic core of [`stdvae_elbo`] with caller-supplied standard
/// normals (batch·l·latent_dim values).
pub fn stdvae_elbo_with_noise(
    model: &StdVaeModel,
    batch: &SampleMatrix,
    l: usize,
    eps: &[f64],
) -> Result<ElboEval> {
    let params = model.params();
    let b = batch.n_rows();
    let m = model.data_dim();
    let chunk = (2000 / (l + 1)).max(1);
    let mut g = Graph::new();
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    let mut start = 0;
    while start < b {
        let end = (start + chunk).min(b);
        let sub = SampleMatrix::new(
            batch.as_slice()[start * m..end * m].to_vec(),
            end - start,
            m,
        )?;
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
        let w_node = g.constant_scalar(weight);
        let scaled = g.mul(mean_node, w_node);
        loss += g.scalar(scaled);
        g.backward(scaled)?;
        for (gi, gv) in grad.iter_mut().zip(g.grad(flat)) {
            *gi += gv;
        }
        start = end;
    }
    Ok(ElboEval { loss, grad, floor_events: 0, clamped_grads: 0 })
}

/// Train the StdVAE in place with the shared optimizer contract (Adam,
/// global-norm clipping, per-epoch reshuffles including the tail batch);
/// uses the radius learning rate. Returns per-epoch mean minibatch losses.
///
/// # Errors
/// Empty data, batch size exceeding the data, and non-finite losses or
/// gradients are reported with context.
pub fn stdvae_train(
    model: &mut StdVaeModel,
    data: &SampleMatrix,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::Data("stdvae_train on an empty dataset".into()));
    }
    if config.batch_size > n {
        return Err(Error::Config(format!(
            "batch size {} exceeds the {n} available rows",
            config.batch_size
        )));
    }
    let m = model.data_dim();
    if data.n_cols() != m {
        return Err(Error::Shape(format!(
            "model is {m}-dimensional but the data has {} columns",
            data.n_cols()
        )));
    }
    let mut shuffle_rng = stream(config.seed, "train.stdvae.shuffle");
    let mut noise_rng = stream(config.seed, "train.stdvae.noise");
    let mut params = model.params();
    let mut adam = AdamState::new(params.len());
    let mut history = Vec::with_capacity(config.epochs);
    for _epoch in 0..config.epochs {
        let order = minibatch_order(n, &mut shuffle_rng);
        let mut epoch_losses = Vec::new();
        for chunk in order.chunks(config.batch_size) {
            let mut buf = Vec::with_capacity(chunk.len() * m);
            for &i in chunk {
                buf.extend_from_slice(data.row(i));
            }
            let batch = SampleMatrix::new(buf, chunk.len(), m)?;
            let eval =
                stdvae_elbo(model, &batch, config.mc_samples, &mut noise_rng)?;
            adam_step(&mut params, &eval.grad, &mut adam, config, config.lr_radius)?;
            model.set_params(&params)?;
            epoch_losses.push(eval.loss);
        }
        history.push(epoch_losses.iter().sum::<f64>() / epoch_losses.len() as f64);
    }
    Ok(history)
}

/// n samples from the trained generative model: z ~ N(0, I_n), then
/// x = μ_dec(z) + σ_dec(z)⊙ε.
///
/// # Errors
/// A non-finite coordinate (overflowing decoder) is a numerical error.
pub fn stdvae_sample<R: Rng + ?Sized>(
    model: &StdVaeModel,
    n: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    let m = model.data_dim();
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        let z: Vec<f64> = (0..model.latent_dim).map(|_| rng.sample(StandardNormal)).collect();
        let raw = model.dec_net.forward(&z)?;
        for j in 0..m {
            let sd = raw[m + j].exp();
            let e: f64 = rng.sample(StandardNormal);
            let x = raw[j] + sd * e;
            if !x.is_finite() {
                return Err(Error::Numerical(format!(
                    "StdVAE sample {i} produced a non-finite coordinate {j}"
                )));
            }
            data.push(x);
        }
    }
    SampleMatrix::new(data, n, m)
}

/// Heavy-tailed pushforward: x = relu(net(z)) with z carrying i.i.d.
/// Pareto marginals of the given tail index. The network is relu/linear
/// by construction, so the realized map is piecewise linear.
#[derive(Clone, Debug)]
pub struct PushforwardGenerator {
    pub net: DenseNet,
    /// Tail index of the i.i.d. Pareto prior marginals (> 0).
    pub prior_tail_index: f64,
}

impl PushforwardGenerator {
    /// # Errors
    /// The tail index must be a positive finite number.
    pub fn new(net: DenseNet, prior_tail_index: f64) -> Result<Self> {
        if !(prior_tail_index > 0.0) || !prior_tail_index.is_finite() {
            return Err(Error::Domain(format!(
                "prior tail index must be positive and finite, got {prior_tail_index}"
            )));
        }
        Ok(PushforwardGenerator { net, prior_tail_index })
    }

    /// Latent dimension n (network input).
    pub fn latent_dim(&self) -> usize {
        self.net.input_dim
    }

    /// Output dimension m.
    pub fn output_dim(&self) -> usize {
        self.net.output_dim
    }
}

/// n_draws pushforward samples: z_j = u^(−1/α) i.i.d. Pareto(α) with
/// support [1, ∞), x = relu(net(z)).
///
/// # Errors
/// Only an astronomically unlikely float overflow inside the network can
/// fail the output-matrix finiteness check.
pub fn pushforward_sample<R: Rng + ?Sized>(
    gen: &PushforwardGenerator,
    n_draws: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    let n = gen.latent_dim();
    let m = gen.output_dim();
    let inv_alpha = 1.0 / gen.prior_tail_index;
    let mut data = Vec::with_capacity(n_draws * m);
    for _ in 0..n_draws {
        let z: Vec<f64> =
            (0..n).map(|_| uniform_open(rng).powf(-inv_alpha)).collect();
        let out = gen.net.forward(&z)?;
        data.extend(out.into_iter().map(|v| v.max(0.0)));
    }
    SampleMatrix::new(data, n_draws, m)
}

/// Polar-decompose the rows above the radius quantile and greedily cluster
/// their angles into at most `cluster_count_max` centers, each step
/// picking the angle whose 0.05 L1 ball covers the most uncovered angles.
/// Returns (mean L1 distance to the nearest center, fraction of angles
/// within L1 distance 0.05 of a center). Concentrated extremal directions
/// show up as a fraction near 1 with small dispersion.
///
/// # Errors
/// Fewer than 10 exceedances above the quantile is a data error; the
/// quantile must lie in (0, 1) and the cluster budget must be ≥ 1.
pub fn angular_concentration_probe(
    samples: &SampleMatrix,
    radius_quantile: f64,
    cluster_count_max: usize,
) -> Result<(f64, f64)> {
    if !(radius_quantile > 0.0 && radius_quantile < 1.0) {
        return Err(Error::Domain(format!(
            "radius quantile must lie in (0, 1), got {radius_quantile}"
        )));
    }
    if cluster_count_max == 0 {
        return Err(Error::Config("cluster budget must be at least 1".into()));
    }
    let radii: Vec<f64> =
        samples.rows().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).collect();
    let mut sorted = radii.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    // When the radii are all (numerically) equal — angular-measure samples
    // live on the simplex, radius ≡ 1 — the radial filter has no extremes
    // to isolate and thresholding on float dust would select noise, so the
    // probe covers every row instead.
    let spread = sorted[sorted.len() - 1] - sorted[0];
    let threshold = if spread <= 1e-9 * sorted[sorted.len() - 1].abs() {
        0.0 // keep every normalizable row, still excluding zero rows
    } else {
        crate::metrics::quantile_type7(&sorted, radius_quantile)
    };
    let mut angles: Vec<Vec<f64>> = Vec::new();
    for (i, row) in samples.rows().enumerate() {
        if radii[i] > threshold {
            angles.push(row.iter().map(|v| v.abs() / radii[i]).collect());
        }
    }
    if angles.len() < 10 {
        return Err(Error::Data(format!(
            "only {} rows exceed the {radius_quantile} radius quantile; need ≥ 10 for the probe",
            angles.len()
        )));
    }
    let l1 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    };
    // Greedy max-coverage center selection: each step picks the angle
    // whose 0.05 ball covers the most not-yet-covered angles (ties break
    // to the lowest index), until the budget is spent or everything is
    // covered. Selecting for coverage rather than farthest-point spread
    // keeps a handful of stray mid-transition angles — which a
    // heavy-tailed pushforward always produces at any finite threshold —
    // from hijacking center slots that belong to the bulk directions.
    let n = angles.len();
    let mut covered = vec![false; n];
    let mut centers: Vec<usize> = Vec::new();
    while centers.len() < cluster_count_max && covered.iter().any(|c| !c) {
        let mut best_idx = 0usize;
        let mut best_count = 0usize;
        for c in 0..n {
            let count = (0..n)
                .filter(|&i| !covered[i] && l1(&angles[c], &angles[i]) <= 0.05)
                .count();
            if count > best_count {
                best_count = count;
                best_idx = c;
            }
        }
        centers.push(best_idx);
        for i in 0..n {
            if !covered[i] && l1(&angles[best_idx], &angles[i]) <= 0.05 {
                covered[i] = true;
            }
        }
    }
    let nearest: Vec<f64> = angles
        .iter()
        .map(|a| {
            centers
                .iter()
                .map(|&c| l1(a, &angles[c]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let within = nearest.iter().filter(|&&d| d <= 0.05).count();
    let dispersion = nearest.iter().sum::<f64>() / n as f64;
    Ok((dispersion, within as f64 / n as f64))
}

/// Generalized Pareto fit to the exceedances above the empirical
/// `threshold_quantile` of the sample: a shape estimate ξ̂ near 0 indicates
/// a light tail, ξ̂ ≈ 1/α a heavy tail of index α.
///
/// # Errors
/// The quantile must lie in (0, 1); too few exceedances propagate from the
/// fitter as data errors.
pub fn tail_probe(samples: &[f64], threshold_quantile: f64) -> Result<GpParams> {
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return Err(Error::Domain(format!(
            "threshold quantile must lie in (0, 1), got {threshold_quantile}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Data("tail_probe on an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let u = crate::metrics::quantile_type7(&sorted, threshold_quantile);
    let exceedances: Vec<f64> =
        samples.iter().filter(|&&x| x > u).map(|&x| x - u).collect();
    crate::distributions::gp_mle_fit(&exceedances)
}
