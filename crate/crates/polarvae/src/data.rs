//! Data sources: the synthetic heavy-tailed benchmark and river-discharge
//! CSV ingestion, plus the small CSV helpers shared with the CLI.
//!
//! The synthetic generator draws radii R = 2U·Z with U uniform on (0, 1)
//! and Z ~ InvGamma(α₁, β). A product of a bounded positive factor and an
//! inverse-gamma variable keeps the inverse-gamma's tail index, so R is
//! heavy-tailed with index α₁ (= 1.5 at defaults) and mean
//! 2·E[U]·β/(α₁−1) = 1.2. Angles live on the 4-simplex and follow a
//! radius-dependent Dirichlet(a₁, a₁, a₂, a₂, a₂) with
//! a₁(r) = 3(2 − t), a₂(r) = 3(1 + t), t = min(1, 1/(2r)): small radii tilt
//! mass toward the last three coordinates, large radii toward the first
//! two, and the limiting concentration (6, 6, 3, 3, 3) defines the angular
//! law at infinity.
//!
//! The discharge loader consumes a plain CSV — one header row naming the
//! station columns, one row per day, decimal floats, no missing values —
//! selects the configured stations, and splits rows by a fixed stride:
//! indices 0, s, 2s, … train, everything else test.

use crate::distributions::{sample_dirichlet, sample_invgamma, DirichletParams, InvGammaParams};
use crate::error::{Error, Result};
use crate::polar::{compose, SampleMatrix};
use crate::rng::{stream, uniform_open};
use rand::Rng;
use std::path::{Path, PathBuf};

/// Synthetic benchmark parameters: split sizes, radius law, seed.
#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Tail index α₁ of the radius law (InvGamma shape).
    pub alpha1: f64,
    /// InvGamma rate β of the radius law.
    pub beta: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_train: 250,
            n_val: 750,
            n_test: 10_000,
            alpha1: 1.5,
            beta: 0.6,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// # Errors
    /// Counts must be ≥ 1 and the radius-law parameters positive.
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Config(format!(
                "split sizes must be ≥ 1, got ({}, {}, {})",
                self.n_train, self.n_val, self.n_test
            )));
        }
        if !(self.alpha1 > 0.0) || !self.alpha1.is_finite() {
            return Err(Error::Config(format!("alpha1 must be positive, got {}", self.alpha1)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// River-discharge ingestion parameters.
#[derive(Clone, Debug)]
pub struct DanubeConfig {
    pub csv_path: PathBuf,
    /// Gauging stations to keep, in output column order.
    pub station_ids: Vec<u32>,
    /// Every `train_stride_days`-th row (starting at 0) goes to training.
    pub train_stride_days: usize,
    /// Header name of station id S is `column_prefix` followed by S.
    pub column_prefix: String,
}

impl DanubeConfig {
    /// Defaults: stations 23–27, one training measurement every 25 days,
    /// columns named `station_<id>`.
    pub fn new(csv_path: impl Into<PathBuf>) -> Self {
        DanubeConfig {
            csv_path: csv_path.into(),
            station_ids: (23..=27).collect(),
            train_stride_days: 25,
            column_prefix: "station_".into(),
        }
    }
}

/// n radius draws R = 2U·Z, U ~ Uniform(0, 1) open, Z ~ InvGamma(α₁, β).
/// All draws are strictly positive.
///
/// # Panics
/// On a config violating its invariants (nonpositive α₁ or β).
pub fn synth_radius<R: Rng + ?Sized>(n: usize, cfg: &SyntheticConfig, rng: &mut R) -> Vec<f64> {
    let params = InvGammaParams::new(cfg.alpha1, cfg.beta).expect("validated config");
    (0..n).map(|_| 2.0 * uniform_open(rng) * sample_invgamma(params, rng)).collect()
}

/// The radius-dependent Dirichlet concentration (a₁, a₁, a₂, a₂, a₂) with
/// a₁ = 3(2 − t), a₂ = 3(1 + t), t = min(1, 1/(2r)).
pub fn synth_concentration(r: f64) -> DirichletParams {
    let t = (1.0 / (2.0 * r)).min(1.0);
    let a1 = 3.0 * (2.0 - t);
    let a2 = 3.0 * (1.0 + t);
    DirichletParams::new(vec![a1, a1, a2, a2, a2]).expect("positive concentrations")
}

/// One angle draw on the 4-simplex conditional on the radius.
///
/// # Panics
/// On a nonpositive radius (caller contract).
pub fn synth_angle<R: Rng + ?Sized>(r: f64, rng: &mut R) -> Vec<f64> {
    assert!(r > 0.0, "synth_angle needs a positive radius, got {r}");
    sample_dirichlet(&synth_concentration(r), rng)
}

/// The full benchmark: (train, val, test) sample matrices with the
/// configured split sizes, each row compose(r, θ|r), drawn from disjoint
/// per-split rng streams derived from the seed ("synth.train",
/// "synth.val", "synth.test").
///
/// # Errors
/// Config violations are config errors.
pub fn synth_dataset(cfg: &SyntheticConfig) -> Result<(SampleMatrix, SampleMatrix, SampleMatrix)> {
    cfg.validate()?;
    let split = |label: &str, n: usize| -> Result<SampleMatrix> {
        let mut rng = stream(cfg.seed, label);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let r = synth_radius(1, cfg, &mut rng)[0];
            let theta = synth_angle(r, &mut rng);
            rows.push(compose(r, &theta)?);
        }
        SampleMatrix::from_rows(&rows)
    };
    Ok((
        split("synth.train", cfg.n_train)?,
        split("synth.val", cfg.n_val)?,
        split("synth.test", cfg.n_test)?,
    ))
}

/// Split one CSV line, handling a trailing carriage return.
fn split_csv_line(line: &str) -> Vec<&str> {
    line.trim_end_matches('\r').split(',').map(str::trim).collect()
}

/// Load the discharge CSV, keep the configured station columns, and split
/// rows into (train, test) by the stride: row indices 0, s, 2s, … train.
///
/// # Errors
/// A missing file or station column, non-numeric or negative cell, zero
/// stride, or an empty resulting split is reported with row/column
/// context.
pub fn danube_load(cfg: &DanubeConfig) -> Result<(SampleMatrix, SampleMatrix)> {
    if cfg.train_stride_days == 0 {
        return Err(Error::Config("train stride must be ≥ 1 day".into()));
    }
    if cfg.station_ids.is_empty() {
        return Err(Error::Config("no station ids configured".into()));
    }
    let text = std::fs::read_to_string(&cfg.csv_path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{} is empty", cfg.csv_path.display())))?;
    let names = split_csv_line(header);
    let mut col_of = Vec::with_capacity(cfg.station_ids.len());
    for &id in &cfg.station_ids {
        let want = format!("{}{}", cfg.column_prefix, id);
        let idx = names.iter().position(|&n| n == want).ok_or_else(|| {
            Error::Data(format!(
                "station column '{want}' not in header ({})",
                names.join(", ")
            ))
        })?;
        col_of.push(idx);
    }
    let mut train_rows: Vec<Vec<f64>> = Vec::new();
    let mut test_rows: Vec<Vec<f64>> = Vec::new();
    let mut day = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line);
        let mut row = Vec::with_capacity(col_of.len());
        for (&ci, &id) in col_of.iter().zip(&cfg.station_ids) {
            let cell = fields.get(ci).copied().unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "line {}: station {id} cell '{cell}' is not a number",
                    lineno + 2
                ))
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Data(format!(
                    "line {}: station {id} discharge {v} is negative or non-finite",
                    lineno + 2
                )));
            }
            row.push(v);
        }
        if day % cfg.train_stride_days == 0 {
            train_rows.push(row);
        } else {
            test_rows.push(row);
        }
        day += 1;
    }
    if train_rows.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", cfg.csv_path.display())));
    }
    if test_rows.is_empty() {
        return Err(Error::Config(format!(
            "stride {} leaves no rows for the test split",
            cfg.train_stride_days
        )));
    }
    Ok((SampleMatrix::from_rows(&train_rows)?, SampleMatrix::from_rows(&test_rows)?))
}

/// Load a plain N×m sample CSV (header line, then one row of
/// decimal floats per line).
///
/// # Errors
/// Io, parse, and shape problems are reported with row context.
pub fn load_sample_csv(path: &Path) -> Result<SampleMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{} is empty", path.display())))?;
    let m = split_csv_line(header).len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != m {
            return Err(Error::Data(format!(
                "line {}: {} fields, header has {m}",
                lineno + 2,
                fields.len()
            )));
        }
        let row: Result<Vec<f64>> = fields
            .iter()
            .map(|cell| {
                cell.parse().map_err(|_| {
                    Error::Data(format!("line {}: cell '{cell}' is not a number", lineno + 2))
                })
            })
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    SampleMatrix::from_rows(&rows)
}

/// Write a sample matrix as CSV with the given column names, one row per
/// line, full-precision floats.
///
/// # Errors
/// Header length must match the column count; io errors propagate.
pub fn write_sample_csv(path: &Path, columns: &[String], samples: &SampleMatrix) -> Result<()> {
    if columns.len() != samples.n_cols() {
        return Err(Error::Shape(format!(
            "{} column names for {} columns",
            columns.len(),
            samples.n_cols()
        )));
    }
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in samples.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::polar_decompose;

    #[test]
    fn radius_draws_are_positive_with_the_analytic_mean() {
        let cfg = SyntheticConfig::default();
        let mut rng = stream(31, "test.data.radius");
        let n = 1_000_000;
        let draws = synth_radius(n, &cfg, &mut rng);
        assert!(draws.iter().all(|&r| r > 0.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        // E[R] = 2·E[U]·β/(α₁−1) = 1·0.6/0.5 = 1.2. With α₁ = 1.5 the
        // variance is infinite, so a CLT ±3·SE band is meaningless here:
        // the sample mean fluctuates on the stable-law scale n^(1/α₁−1)
        // = n^(−1/3) = 0.01 at n = 10⁶. Allow a dozen of those.
        assert!(
            (mean - 1.2).abs() <= 0.12,
            "mean {mean} strays from the analytic value 1.2"
        );
    }

    #[test]
    fn angle_concentrations_hit_both_regimes() {
        let low = synth_concentration(0.4);
        assert_eq!(low.concentration, vec![3.0, 3.0, 6.0, 6.0, 6.0]);
        let high = synth_concentration(1.0e12);
        for (got, want) in high.concentration.iter().zip([6.0, 6.0, 3.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let mut rng = stream(37, "test.data.angle");
        // Empirical mean at large radius → concentration / total = 2/7, 1/7.
        let n = 20_000;
        let mut acc = [0.0; 5];
        for _ in 0..n {
            let theta = synth_angle(1.0e9, &mut rng);
            assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9, "not on the simplex");
            for (a, t) in acc.iter_mut().zip(&theta) {
                *a += t;
            }
        }
        for (j, &want) in [2.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0]
            .iter()
            .enumerate()
        {
            let got = acc[j] / n as f64;
            assert!((got - want).abs() < 0.01, "coordinate {j}: {got} vs {want}");
        }
    }

    #[test]
    fn dataset_has_exact_sizes_and_reproduces() {
        let cfg = SyntheticConfig { n_train: 40, n_val: 30, n_test: 50, seed: 9, ..SyntheticConfig::default() };
        let (train, val, test) = synth_dataset(&cfg).unwrap();
        assert_eq!((train.n_rows(), val.n_rows(), test.n_rows()), (40, 30, 50));
        assert_eq!(train.n_cols(), 5);
        let (train2, _, _) = synth_dataset(&cfg).unwrap();
        assert_eq!(train.as_slice(), train2.as_slice());
        // Full defaults produce the documented split sizes.
        let (t, v, s) = synth_dataset(&SyntheticConfig::default()).unwrap();
        assert_eq!((t.n_rows(), v.n_rows(), s.n_rows()), (250, 750, 10_000));
        assert!(synth_dataset(&SyntheticConfig { n_train: 0, ..cfg.clone() }).is_err());
        assert!(synth_dataset(&SyntheticConfig { beta: -1.0, ..cfg }).is_err());
    }

    #[test]
    fn polar_decompose_inverts_the_composition() {
        let cfg = SyntheticConfig { n_train: 200, n_val: 1, n_test: 1, seed: 4, ..SyntheticConfig::default() };
        let (train, _, _) = synth_dataset(&cfg).unwrap();
        let polar = polar_decompose(&train).unwrap();
        // Re-generate the same radii from the stream to compare.
        let mut rng = stream(4, "synth.train");
        for (i, &r_rec) in polar.radii.iter().enumerate() {
            let r = synth_radius(1, &cfg, &mut rng)[0];
            let _ = synth_angle(r, &mut rng);
            assert!(
                (r_rec - r).abs() <= 1e-12 * r,
                "row {i}: recovered {r_rec} vs generated {r}"
            );
        }
    }

    #[test]
    fn danube_loader_selects_splits_and_reports_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("danube.csv");
        let mut text = String::from("date,station_23,station_24,station_25,station_26,station_27\n");
        for day in 0..101 {
            text.push_str(&format!(
                "d{day},{},{},{},{},{}\n",
                day, day + 1, day + 2, day + 3, day + 4
            ));
        }
        std::fs::write(&path, &text).unwrap();
        let mut cfg = DanubeConfig::new(&path);
        // The date column is non-numeric but unselected, so loading works.
        let (train, test) = danube_load(&cfg).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (5, 96), "stride-25 split of 101 rows");
        assert_eq!(train.n_cols(), 5);
        assert_eq!(train.row(1), &[25.0, 26.0, 27.0, 28.0, 29.0]);
        // Union is everything, splits disjoint: counts add up and the
        // train rows are exactly the stride multiples.
        assert_eq!(train.n_rows() + test.n_rows(), 101);
        assert_eq!(test.row(0), &[1.0, 2.0, 3.0, 4.0, 5.0]);

        cfg.station_ids = vec![23, 99];
        assert!(matches!(danube_load(&cfg), Err(Error::Data(_))), "missing station");
        cfg.station_ids = vec![23];
        cfg.train_stride_days = 1;
        assert!(matches!(danube_load(&cfg), Err(Error::Config(_))), "empty test split");
        cfg.train_stride_days = 0;
        assert!(danube_load(&cfg).is_err());

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "station_23\nx\n").unwrap();
        let bad_cfg = DanubeConfig { station_ids: vec![23], ..DanubeConfig::new(&bad) };
        let err = danube_load(&bad_cfg).unwrap_err();
        assert!(err.to_string().contains("line 2"), "context missing: {err}");
        std::fs::write(&bad, "station_23\n-4.0\n5.0\n").unwrap();
        assert!(danube_load(&bad_cfg).is_err(), "negative discharge");
    }

    #[test]
    fn sample_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let m = SampleMatrix::from_rows(&[vec![1.5, 2.25], vec![0.125, 3.0e-7]]).unwrap();
        write_sample_csv(&path, &["c1".into(), "c2".into()], &m).unwrap();
        let back = load_sample_csv(&path).unwrap();
        assert_eq!(back.as_slice(), m.as_slice(), "full-precision round trip");
        assert!(load_sample_csv(dir.path().join("absent.csv").as_path()).is_err());
        std::fs::write(&path, "a,b\n1.0\n").unwrap();
        assert!(load_sample_csv(&path).is_err(), "ragged row");
    }
}
