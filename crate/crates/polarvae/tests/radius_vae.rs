//! Radius-model behavior at scale: encoder overflow sweep, Monte Carlo
//! variance ordering in the sample count, and the heavy-tail property of the
//! generative pipeline checked by log–log survival slopes and the Hill
//! estimator on large draws.

mod common;

use polarvae::autodiff::{Activation, DenseNet, Layer};
use polarvae::radius_vae::{elbo_radius, encode, sample_radius, RadiusVaeModel};
use polarvae::rng::stream;
use rand::Rng;

#[test]
fn encode_stays_finite_and_floored_out_to_extreme_radii() {
    let mut rng = stream(1, "rv.sweep");
    let mut model = RadiusVaeModel::new(1.5, true, &mut rng).unwrap();
    // Randomize every net parameter so the sweep exercises a non-constant
    // encoder; keep alpha (the leading coordinate) positive.
    let mut flat = model.params();
    for v in flat.iter_mut().skip(1) {
        *v = rng.gen_range(-3.0..3.0);
    }
    model.set_params(&flat).unwrap();
    for exp in [-6, -3, 0, 3, 6, 9, 12] {
        let r = 10f64.powi(exp);
        let q = encode(&model, r);
        assert!(
            q.shape.is_finite() && q.rate.is_finite(),
            "encoder overflowed at r = 1e{exp}: ({}, {})",
            q.shape,
            q.rate
        );
        assert!(q.shape >= 1e-6 && q.rate >= 1e-6, "floor violated at r = 1e{exp}");
    }
}

#[test]
fn loss_variance_shrinks_when_mc_samples_increase() {
    let model = RadiusVaeModel::new(1.5, false, &mut stream(2, "rv.var.init")).unwrap();
    let batch = [0.5, 1.2, 3.3, 0.9, 2.1, 5.0, 0.3, 1.7];
    let reps = 24;
    let var_at = |l: usize, label: &str| -> f64 {
        let losses: Vec<f64> = (0..reps)
            .map(|i| elbo_radius(&model, &batch, l, &mut stream(i, label)).unwrap().loss)
            .collect();
        let mean = losses.iter().sum::<f64>() / reps as f64;
        losses.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
    };
    let v1 = var_at(1, "rv.var.l1");
    let v64 = var_at(64, "rv.var.l64");
    assert!(
        v64 < v1,
        "averaging 64 MC samples must cut the loss variance: var(L=1) = {v1}, var(L=64) = {v64}"
    );
}

/// 1→1 net that ignores its input and outputs the constant c.
fn constant_net(c: f64) -> DenseNet {
    DenseNet::new(vec![Layer::new(1, 1, vec![0.0], vec![c], Activation::Identity).unwrap()])
        .unwrap()
}

#[test]
fn constant_decoder_nets_inherit_the_prior_tail_slope() {
    // With f ≡ c₂ and g ≡ c₁ the conditional law is Gamma(c₁/z, c₂/z²),
    // whose mean is proportional to z ~ InvGamma(α, 1); the product keeps
    // tail index α, so the log–log survival slope between the 0.99 and
    // 0.9999 quantiles is ≈ −α.
    let alpha = 1.5;
    let enc = DenseNet::new(vec![Layer::zeros(2, 1, Activation::Relu)]).unwrap();
    let model =
        RadiusVaeModel::from_parts(alpha, false, enc, constant_net(2.0), constant_net(1.2), 1e-6)
            .unwrap();
    let n = 1_000_000usize;
    let mut draws = sample_radius(&model, n, &mut stream(3, "rv.slope"));
    draws.sort_by(f64::total_cmp);
    let q99 = draws[n * 99 / 100];
    let q9999 = draws[n * 9999 / 10000];
    let slope = (1e-4f64 / 1e-2f64).ln() / (q9999 / q99).ln();
    assert!(
        (slope + alpha).abs() <= 0.25 * alpha,
        "log–log survival slope {slope}, want ≈ −{alpha}"
    );
}

#[test]
fn hill_estimator_on_large_samples_recovers_the_reciprocal_tail_index() {
    // Default construction keeps zero kernels, so f and g are already
    // constant nets and Proposition-style tail inheritance applies.
    let alpha = 1.5;
    let model = RadiusVaeModel::new(alpha, false, &mut stream(4, "rv.hill.init")).unwrap();
    let n = 1_000_000usize;
    let mut draws = sample_radius(&model, n, &mut stream(5, "rv.hill"));
    draws.sort_by(|a, b| b.total_cmp(a));
    let k = n / 100;
    let threshold = draws[k];
    let hill = draws[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    let want = 1.0 / alpha;
    assert!(
        (hill - want).abs() <= 0.25 * want,
        "Hill estimate {hill} outside ±25% of {want}"
    );
}
