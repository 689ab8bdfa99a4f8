//! Parametric distributions for the polar VAE stack: log-densities,
//! samplers, closed-form KL divergences, and implicit-reparameterization
//! gradients.
//!
//! Conventions. Gamma and inverse-gamma use the shape/rate parameterization:
//! Gamma(α, β) has density β^α/Γ(α) · x^{α−1} e^{−βx}, and Z ~ InvGamma(α, β)
//! is distributed as 1/Y for Y ~ Gamma(α, β), with density
//! β^α/Γ(α) · z^{−α−1} e^{−β/z}. The generalized Pareto survival function is
//! S(x) = (1 + ξx/σ)₊^{−1/ξ}, degenerating to e^{−x/σ} at ξ = 0.
//!
//! Heavy-tail plumbing. GP(σ, ξ) sampling for ξ > 0 goes through the product
//! construction A·Z with A ~ Exp(scale c) and Z ~ InvGamma(α, β), which is
//! GP with scale βc/α and shape 1/α; we use c = 1, α = 1/ξ, β = σ/ξ. Gamma
//! draws are differentiated by the implicit-function rule on F(z) = P(α, βz):
//! dz/dθ = −(∂F/∂θ)/(∂F/∂z), giving dz/dβ = −z/β in closed form and dz/dα
//! via the ∂P/∂a evaluation of [`crate::special_fn::reg_inc_gamma`].
//!
//! KL forms. KL(InvGamma(α_φ, β_φ) ‖ InvGamma(α, 1)) equals the Gamma–Gamma
//! divergence of the reciprocals,
//! (α_φ − α)ψ(α_φ) − ln Γ(α_φ) + ln Γ(α) + α ln β_φ + α_φ(1 − β_φ)/β_φ,
//! with the digamma at the variational shape α_φ (quadrature-verified).
//! KL(N(μ, diag σ²) ‖ N(0, I)) = −½ Σ_j (1 + ln σ_j² − μ_j² − σ_j²).
//!
//! All functions are pure; samplers mutate only the caller's RNG, so
//! unrestricted parallel use is safe.

use crate::error::{Error, Result};
use crate::rng::uniform_open;
use crate::special_fn::{ln_gamma, psi, reg_lower_gamma_da, reg_lower_gamma_dx, std_gamma_draw};
use rand::Rng;

fn require_positive_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Gamma(shape, rate) parameters; both strictly positive and finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    /// # Errors
    /// Non-positive or non-finite parameters are a domain error.
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        require_positive_finite("Gamma shape", shape)?;
        require_positive_finite("Gamma rate", rate)?;
        Ok(GammaParams { shape, rate })
    }
}

/// InvGamma(α, β) parameters; both strictly positive and finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl InvGammaParams {
    /// # Errors
    /// Non-positive or non-finite parameters are a domain error.
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        require_positive_finite("InvGamma shape", shape)?;
        require_positive_finite("InvGamma rate", rate)?;
        Ok(InvGammaParams { shape, rate })
    }
}

/// Diagonal Gaussian parameters: mean vector and coordinate-wise positive
/// standard deviations of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagNormalParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl DiagNormalParams {
    /// # Errors
    /// Mismatched lengths are a shape error; non-finite means or
    /// non-positive deviations are domain errors.
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::Shape(format!(
                "diagonal normal needs equal-length mean and std, got {} and {}",
                mean.len(),
                std.len()
            )));
        }
        for &m in &mean {
            if !m.is_finite() {
                return Err(Error::Domain(format!("normal mean entries must be finite, got {m}")));
            }
        }
        for &s in &std {
            require_positive_finite("normal std entry", s)?;
        }
        Ok(DiagNormalParams { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Dirichlet concentration vector, length ≥ 2, entries strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    pub concentration: Vec<f64>,
}

impl DirichletParams {
    /// # Errors
    /// Fewer than two coordinates is a shape error; non-positive entries
    /// are domain errors.
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.len() < 2 {
            return Err(Error::Shape(format!(
                "Dirichlet needs at least 2 coordinates, got {}",
                concentration.len()
            )));
        }
        for &a in &concentration {
            require_positive_finite("Dirichlet concentration entry", a)?;
        }
        Ok(DirichletParams { concentration })
    }

    pub fn dim(&self) -> usize {
        self.concentration.len()
    }
}

/// Generalized Pareto parameters: scale σ > 0, shape (tail) ξ ∈ ℝ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpParams {
    pub scale: f64,
    pub shape: f64,
}

impl GpParams {
    /// # Errors
    /// Non-positive scale or non-finite parameters are domain errors.
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        require_positive_finite("GP scale", scale)?;
        if !shape.is_finite() {
            return Err(Error::Domain(format!("GP shape must be finite, got {shape}")));
        }
        Ok(GpParams { scale, shape })
    }
}

/// ln of the Gamma(shape, rate) density at r:
/// shape·ln rate − ln Γ(shape) + (shape−1)·ln r − rate·r.
///
/// Out-of-support r (r ≤ 0, or non-finite) yields −∞; callers that feed
/// whole batches are expected to log the event once per batch.
pub fn gamma_logpdf(r: f64, p: GammaParams) -> f64 {
    debug_assert!(p.shape > 0.0 && p.rate > 0.0, "invalid GammaParams");
    if !(r > 0.0) || !r.is_finite() {
        return f64::NEG_INFINITY;
    }
    p.shape * p.rate.ln() - ln_gamma(p.shape) + (p.shape - 1.0) * r.ln() - p.rate * r
}

/// ln of the InvGamma(α, β) density at z:
/// α·ln β − ln Γ(α) − (α+1)·ln z − β/z. Out-of-support z yields −∞.
pub fn invgamma_logpdf(z: f64, p: InvGammaParams) -> f64 {
    debug_assert!(p.shape > 0.0 && p.rate > 0.0, "invalid InvGammaParams");
    if !(z > 0.0) || !z.is_finite() {
        return f64::NEG_INFINITY;
    }
    p.shape * p.rate.ln() - ln_gamma(p.shape) - (p.shape + 1.0) * z.ln() - p.rate / z
}

/// One InvGamma(α, β) draw as the reciprocal of a Gamma(α, rate β) draw.
pub fn sample_invgamma<R: Rng + ?Sized>(p: InvGammaParams, rng: &mut R) -> f64 {
    debug_assert!(p.shape > 0.0 && p.rate > 0.0, "invalid InvGammaParams");
    let y = std_gamma_draw(p.shape, rng) / p.rate;
    // A zero Gamma draw (possible underflow at tiny shapes) would map to
    // +∞; clamp to keep the output finite and astronomically large instead.
    1.0 / y.max(1e-300)
}

/// Pathwise derivatives of a Gamma draw with respect to its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImplicitGammaGrad {
    /// dz/dshape.
    pub d_shape: f64,
    /// dz/drate (closed form −z/rate).
    pub d_rate: f64,
    /// True when ∂F/∂z underflowed (< 1e-300) and dz/dshape was clamped
    /// to 0; callers count these events in their diagnostics.
    pub clamped: bool,
}

/// Implicit-reparameterization gradient of a Gamma(shape, rate) draw z:
/// dz/dθ = −(∂F/∂θ)/(∂F/∂z) for F(z) = P(shape, rate·z).
///
/// # Panics
/// z must be positive and finite (it came from the sampler being
/// differentiated); violating that is a caller bug.
pub fn implicit_grad_gamma(z: f64, p: GammaParams) -> ImplicitGammaGrad {
    assert!(z > 0.0 && z.is_finite(), "implicit_grad_gamma needs a positive finite draw, got {z}");
    debug_assert!(p.shape > 0.0 && p.rate > 0.0, "invalid GammaParams");
    let d_rate = -z / p.rate;
    let x = p.rate * z;
    let d_dx = reg_lower_gamma_dx(p.shape, x);
    let denom = d_dx * p.rate;
    if denom < 1e-300 {
        ImplicitGammaGrad { d_shape: 0.0, d_rate, clamped: true }
    } else {
        ImplicitGammaGrad { d_shape: -reg_lower_gamma_da(p.shape, x) / denom, d_rate, clamped: false }
    }
}

/// KL(InvGamma(α_φ, β_φ) ‖ InvGamma(α, 1)) in closed form:
/// (α_φ − α)ψ(α_φ) − ln Γ(α_φ) + ln Γ(α) + α·ln β_φ + α_φ(1 − β_φ)/β_φ.
///
/// Equals the Gamma–Gamma KL of the reciprocal variables (the change of
/// variables z ↦ 1/z maps both measures to Gamma with the same parameters,
/// and KL is invariant under smooth bijections).
pub fn kl_invgamma_vs_prior(q: InvGammaParams, prior_shape: f64) -> f64 {
    debug_assert!(q.shape > 0.0 && q.rate > 0.0 && prior_shape > 0.0);
    let (af, bf) = (q.shape, q.rate);
    let a = prior_shape;
    (af - a) * psi(af) - ln_gamma(af) + ln_gamma(a) + a * bf.ln() + af * (1.0 - bf) / bf
}

/// KL(N(μ, diag σ²) ‖ N(0, I)) = −½ Σ_j (1 + ln σ_j² − μ_j² − σ_j²).
pub fn kl_diagnormal_vs_std(q: &DiagNormalParams) -> f64 {
    debug_assert_eq!(q.mean.len(), q.std.len());
    let mut acc = 0.0;
    for (m, s) in q.mean.iter().zip(&q.std) {
        acc += -0.5 * (1.0 + 2.0 * s.ln() - m * m - s * s);
    }
    acc
}

/// ln of the Dirichlet density at a point θ of the L¹ simplex:
/// ln Γ(Σ aᵢ) − Σ ln Γ(aᵢ) + Σ (aᵢ − 1) ln θᵢ, with coordinates clamped to
/// ≥ 1e-12 before the logarithm so points sitting exactly on a face stay
/// finite.
///
/// # Errors
/// A length mismatch is a shape error; coordinates below −1e-9 or a sum
/// off 1 by more than 1e-9 are domain errors.
pub fn dirichlet_logpdf(theta: &[f64], p: &DirichletParams) -> Result<f64> {
    if theta.len() != p.concentration.len() {
        return Err(Error::Shape(format!(
            "dirichlet_logpdf: point has {} coordinates, concentration has {}",
            theta.len(),
            p.concentration.len()
        )));
    }
    let mut sum = 0.0;
    for &t in theta {
        if !t.is_finite() || t < -1e-9 {
            return Err(Error::Domain(format!(
                "dirichlet_logpdf: coordinate {t} is outside the simplex"
            )));
        }
        sum += t;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "dirichlet_logpdf: coordinates sum to {sum}, expected 1 within 1e-9"
        )));
    }
    let a0: f64 = p.concentration.iter().sum();
    let mut acc = ln_gamma(a0);
    for (&a, &t) in p.concentration.iter().zip(theta) {
        acc -= ln_gamma(a);
        acc += (a - 1.0) * t.max(1e-12).ln();
    }
    Ok(acc)
}

/// One Dirichlet draw: independent Gamma(aᵢ, 1) draws normalized by their
/// sum. An all-zero draw (possible only by underflow at tiny shapes) is
/// resampled.
pub fn sample_dirichlet<R: Rng + ?Sized>(p: &DirichletParams, rng: &mut R) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = p.concentration.iter().map(|&a| std_gamma_draw(a, rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 {
            return draws.into_iter().map(|y| y / sum).collect();
        }
    }
}

/// GP survival S(x) = (1 + ξx/σ)₊^{−1/ξ}, with the ξ = 0 limit e^{−x/σ}.
/// Defined for x ≥ 0 (debug-asserted); values in [0, 1].
pub fn gp_survival(x: f64, p: GpParams) -> f64 {
    debug_assert!(x >= 0.0, "gp_survival wants x ≥ 0, got {x}");
    debug_assert!(p.scale > 0.0, "invalid GpParams");
    if p.shape == 0.0 {
        return (-x / p.scale).exp();
    }
    let u = p.shape * x / p.scale;
    if u <= -1.0 {
        // Beyond the upper endpoint σ/|ξ| of a bounded (ξ < 0) GP.
        return 0.0;
    }
    (-u.ln_1p() / p.shape).exp()
}

/// One GP(σ, ξ) draw for ξ > 0 via the heavy-tailed product construction:
/// A · Z with A ~ Exp(scale 1) and Z ~ InvGamma(1/ξ, σ/ξ), whose product is
/// GP with scale β·c/α = σ and shape 1/α = ξ.
///
/// # Errors
/// ξ ≤ 0 is unsupported here (the ξ = 0 case is plain exponential
/// sampling) and reported as a domain error.
pub fn sample_gp<R: Rng + ?Sized>(p: GpParams, rng: &mut R) -> Result<f64> {
    if p.shape <= 0.0 {
        return Err(Error::Domain(format!(
            "sample_gp supports ξ > 0 only (got ξ = {}); draw σ·Exp(1) directly for ξ = 0",
            p.shape
        )));
    }
    let alpha = 1.0 / p.shape;
    let beta = p.scale * alpha;
    let z = sample_invgamma(InvGammaParams { shape: alpha, rate: beta }, rng);
    let a = -uniform_open(rng).ln();
    Ok(a * z)
}

/// Negative GP log-likelihood of `data` at (σ, ξ); +∞ off the support.
fn gp_nll(data: &[f64], scale: f64, shape: f64) -> f64 {
    let ln_scale = scale.ln();
    let mut acc = 0.0;
    if shape.abs() < 1e-10 {
        for &y in data {
            acc += ln_scale + y / scale;
        }
        return acc;
    }
    let c = 1.0 + 1.0 / shape;
    for &y in data {
        let u = shape * y / scale;
        if u <= -1.0 {
            return f64::INFINITY;
        }
        acc += ln_scale + c * u.ln_1p();
    }
    acc
}

/// Maximum-likelihood GP fit to threshold exceedances via Nelder–Mead in
/// the unconstrained coordinates (ln σ, logit-mapped ξ ∈ (−0.5, 5)), started
/// from the moment estimator ξ₀ = (1 − m̄²/s²)/2, σ₀ = m̄(1 − ξ₀).
///
/// # Errors
/// Fewer than 30 exceedances, non-positive values, or zero sample variance
/// are data errors; exceeding 10⁴ Nelder–Mead iterations is a numerical
/// error.
pub fn gp_mle_fit(exceedances: &[f64]) -> Result<GpParams> {
    let n = exceedances.len();
    if n < 30 {
        return Err(Error::Data(format!("GP fit needs at least 30 exceedances, got {n}")));
    }
    for &y in exceedances {
        if !y.is_finite() || y <= 0.0 {
            return Err(Error::Data(format!("GP fit needs positive finite exceedances, got {y}")));
        }
    }
    let mean = exceedances.iter().sum::<f64>() / n as f64;
    let var = exceedances.iter().map(|&y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(Error::Data("GP fit needs non-degenerate exceedances (zero variance)".into()));
    }

    // Box (−0.5, 5) for ξ through a logistic map; σ through exp.
    let to_params = |x: [f64; 2]| -> (f64, f64) {
        let scale = x[0].exp();
        let shape = -0.5 + 5.5 / (1.0 + (-x[1]).exp());
        (scale, shape)
    };
    let xi0 = (0.5 * (1.0 - mean * mean / var)).clamp(-0.45, 4.5);
    let sigma0 = (mean * (1.0 - xi0)).max(1e-8);
    let s0 = (xi0 + 0.5) / 5.5;
    let x0 = [sigma0.ln(), (s0 / (1.0 - s0)).ln()];

    let f = |x: [f64; 2]| {
        let (scale, shape) = to_params(x);
        gp_nll(exceedances, scale, shape)
    };

    // Standard Nelder–Mead (reflect 1, expand 2, contract 1/2, shrink 1/2).
    let mut simplex = [x0, [x0[0] + 0.1, x0[1]], [x0[0], x0[1] + 0.1]];
    let mut fv = [f(simplex[0]), f(simplex[1]), f(simplex[2])];
    let evals_ordered = |simplex: &mut [[f64; 2]; 3], fv: &mut [f64; 3]| {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap_or(std::cmp::Ordering::Equal));
        *simplex = [simplex[idx[0]], simplex[idx[1]], simplex[idx[2]]];
        *fv = [fv[idx[0]], fv[idx[1]], fv[idx[2]]];
    };
    let mut converged = false;
    for _ in 0..10_000 {
        evals_ordered(&mut simplex, &mut fv);
        let diam = (0..2)
            .map(|d| {
                let lo = simplex.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        if (fv[2] - fv[0]).abs() < 1e-10 && diam < 1e-8 {
            converged = true;
            break;
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let reflect = [2.0 * centroid[0] - simplex[2][0], 2.0 * centroid[1] - simplex[2][1]];
        let fr = f(reflect);
        if fr < fv[0] {
            let expand = [
                centroid[0] + 2.0 * (reflect[0] - centroid[0]),
                centroid[1] + 2.0 * (reflect[1] - centroid[1]),
            ];
            let fe = f(expand);
            if fe < fr {
                simplex[2] = expand;
                fv[2] = fe;
            } else {
                simplex[2] = reflect;
                fv[2] = fr;
            }
        } else if fr < fv[1] {
            simplex[2] = reflect;
            fv[2] = fr;
        } else {
            // Contract toward the better of worst/reflected; shrink on failure.
            let (target, ft) = if fr < fv[2] { (reflect, fr) } else { (simplex[2], fv[2]) };
            let contract = [
                centroid[0] + 0.5 * (target[0] - centroid[0]),
                centroid[1] + 0.5 * (target[1] - centroid[1]),
            ];
            let fc = f(contract);
            if fc < ft {
                simplex[2] = contract;
                fv[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    fv[k] = f(simplex[k]);
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "GP maximum-likelihood fit did not converge within 10000 Nelder–Mead iterations".into(),
        ));
    }
    let (scale, shape) = to_params(simplex[0]);
    GpParams::new(scale, shape)
}
