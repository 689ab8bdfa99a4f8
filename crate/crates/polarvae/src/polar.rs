//! Polar decomposition of nonnegative data and the three-step generative
//! pipeline: draw a radius, draw an angle conditioned on it, scale.
//!
//! A sample x ∈ ℝ₊^m factors as x = r·θ with radius r = ‖x‖₁ = Σⱼ xⱼ and
//! angle θ = x/r on the L¹ unit simplex. The L¹ norm is fixed throughout —
//! for nonnegative coordinates it is a plain sum, and the angular support
//! becomes the (m−1)-simplex, which is what the Dirichlet and projected-
//! normal angular likelihoods parameterize.
//!
//! Rows with vanishing norm are hard errors rather than silent drops: a
//! zero row cannot be assigned an angle and almost always signals degenerate
//! preprocessing upstream.

use crate::angular_vae::AngularVaeModel;
use crate::error::{Error, Result};
use crate::radius_vae::{sample_radius, RadiusVaeModel};
use rand::Rng;

/// Dense row-major N×m matrix of finite reals.
///
/// Construction accepts any N ≥ 0 and m ≥ 1 (the standard-VAE baseline
/// trains on 1-column radius matrices, and generators may be asked for zero
/// samples); [`polar_decompose`] itself requires N ≥ 1, m ≥ 2 and
/// nonnegative entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    m: usize,
}

impl SampleMatrix {
    /// Wrap a row-major buffer of length n·m.
    ///
    /// # Errors
    /// Shape error when the buffer length disagrees with n·m or m = 0;
    /// domain error on non-finite entries.
    pub fn new(data: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Shape("SampleMatrix needs at least one column".into()));
        }
        if data.len() != n * m {
            return Err(Error::Shape(format!(
                "SampleMatrix buffer holds {} values, expected {n}×{m} = {}",
                data.len(),
                n * m
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("SampleMatrix entries must be finite, got {bad}")));
        }
        Ok(SampleMatrix { data, n, m })
    }

    /// Build from equal-length rows.
    ///
    /// # Errors
    /// Empty row set or ragged/non-finite rows are rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Shape(
                "from_rows cannot infer a column count from zero rows; use SampleMatrix::new".into(),
            ));
        };
        let m = first.len();
        let mut data = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {m}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        SampleMatrix::new(data, rows.len(), m)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Paired radii and simplex angles produced by [`polar_decompose`].
#[derive(Clone, Debug, PartialEq)]
pub struct PolarDataset {
    pub radii: Vec<f64>,
    pub angles: SampleMatrix,
}

impl PolarDataset {
    /// # Errors
    /// Radii must be positive and match the angle row count; every angle
    /// row must be nonnegative and sum to 1 within 1e-9.
    pub fn new(radii: Vec<f64>, angles: SampleMatrix) -> Result<Self> {
        if radii.len() != angles.n_rows() {
            return Err(Error::Shape(format!(
                "{} radii for {} angle rows",
                radii.len(),
                angles.n_rows()
            )));
        }
        for &r in &radii {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::Domain(format!("radii must be positive and finite, got {r}")));
            }
        }
        for (i, row) in angles.rows().enumerate() {
            check_simplex(row).map_err(|e| Error::Domain(format!("angle row {i}: {e}")))?;
        }
        Ok(PolarDataset { radii, angles })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Angular dimension m.
    pub fn dim(&self) -> usize {
        self.angles.n_cols()
    }
}

fn check_simplex(theta: &[f64]) -> std::result::Result<(), String> {
    let mut sum = 0.0;
    for &t in theta {
        if !t.is_finite() || t < -1e-9 {
            return Err(format!("coordinate {t} is outside the simplex"));
        }
        sum += t;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("coordinates sum to {sum}, expected 1 within 1e-9"));
    }
    Ok(())
}

/// Split nonnegative data into radii (row L¹ sums) and angles (rows scaled
/// to the simplex).
///
/// # Errors
/// Data errors: fewer than 2 columns or zero rows, a negative entry, or a
/// row with L¹ norm below 1e-12 (reported by row index).
pub fn polar_decompose(x: &SampleMatrix) -> Result<PolarDataset> {
    if x.n_cols() < 2 {
        return Err(Error::Data(format!(
            "polar decomposition needs at least 2 columns, got {}",
            x.n_cols()
        )));
    }
    if x.is_empty() {
        return Err(Error::Data("polar decomposition of an empty sample".into()));
    }
    let mut radii = Vec::with_capacity(x.n_rows());
    let mut angle_buf = Vec::with_capacity(x.n_rows() * x.n_cols());
    for (i, row) in x.rows().enumerate() {
        let mut r = 0.0;
        for &v in row {
            if v < 0.0 {
                return Err(Error::Data(format!(
                    "row {i} has negative coordinate {v}; the polar pipeline models (ℝ₊)^m data"
                )));
            }
            r += v;
        }
        if r < 1e-12 {
            return Err(Error::Data(format!(
                "row {i} has L1 norm {r} < 1e-12 and cannot be assigned an angle"
            )));
        }
        radii.push(r);
        angle_buf.extend(row.iter().map(|&v| v / r));
    }
    let angles = SampleMatrix::new(angle_buf, x.n_rows(), x.n_cols())?;
    Ok(PolarDataset { radii, angles })
}

/// Scale a simplex angle by a radius: coordinate-wise r·θ.
///
/// # Errors
/// Non-positive r or an off-simplex θ is a domain error.
pub fn compose(r: f64, theta: &[f64]) -> Result<Vec<f64>> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!("compose needs a positive finite radius, got {r}")));
    }
    check_simplex(theta).map_err(Error::Domain)?;
    Ok(theta.iter().map(|&t| r * t).collect())
}

/// Generate n joint samples by the three-step scheme: draw radii from the
/// radius VAE, draw one angle per radius from the angular VAE, emit r·θ
/// rows. All radii are drawn first, so the radius sequence is identical to
/// a plain [`sample_radius`] call on the same rng stream.
///
/// # Errors
/// Propagates model sampling failures (e.g. exhausted projected-normal
/// resampling).
pub fn sample_joint<R: Rng + ?Sized>(
    radius_model: &RadiusVaeModel,
    angular_model: &AngularVaeModel,
    n: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    let m = angular_model.m;
    if n == 0 {
        return SampleMatrix::new(Vec::new(), 0, m);
    }
    let radii = sample_radius(radius_model, n, rng);
    let mut data = Vec::with_capacity(n * m);
    for &r in &radii {
        let theta = angular_model.draw_one_angle(r, rng)?;
        data.extend(theta.iter().map(|&t| r * t));
    }
    SampleMatrix::new(data, n, m)
}
