//! Command-line front end: run configuration, text checkpoints, CSV report
//! emission, and the five subcommands (synth, train, sample, evaluate,
//! probe) wiring the library together.
//!
//! Checkpoints are plain text with 17-significant-digit decimals, so f64
//! values survive a save/load cycle bit-exactly and the files diff
//! cleanly. The writer emits one canonical form (fixed key order, fixed
//! float format); the reader enforces that order, which makes
//! load-then-save byte-identical.
//!
//! All randomness descends from the single configured seed through named
//! streams (`stream(seed, purpose)`), so each command — and each phase
//! inside a command — is independently reproducible.

use crate::angular_vae::{self, AngularVaeModel, LikelihoodKind};
use crate::autodiff::{Activation, DenseNet, Layer};
use crate::baselines::{
    angular_concentration_probe, pushforward_sample, stdvae_sample, stdvae_train,
    PushforwardGenerator, StdVaeModel,
};
use crate::data::{
    load_sample_csv, synth_dataset, write_sample_csv, SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::metrics::{
    hill_plot, independence_pvalues, kl_above_threshold, log_qq, region_proportion, wasserstein,
    wasserstein_above, KlVariant,
};
use crate::polar::{polar_decompose, sample_joint, SampleMatrix};
use crate::radius_vae::{sample_radius, tail_index, RadiusVaeModel};
use crate::rng::stream;
use crate::train::{train_full, TrainConfig};
use clap::{Parser, Subcommand};
use rand::seq::SliceRandom;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Checkpoint format version this build reads and writes.
pub const FORMAT_VERSION: u32 = 1;

/// Which model a checkpoint holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    RadiusVae,
    AngularVae,
    StdVae,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RadiusVae => "radius_vae",
            ModelKind::AngularVae => "angular_vae",
            ModelKind::StdVae => "stdvae",
        }
    }

    /// # Errors
    /// Unknown names are data errors (they come from checkpoint files).
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "radius_vae" => Ok(ModelKind::RadiusVae),
            "angular_vae" => Ok(ModelKind::AngularVae),
            "stdvae" => Ok(ModelKind::StdVae),
            other => Err(Error::Data(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Scalar metadata carried by every checkpoint; fields that do not apply
/// to a model kind are absent (serialized as "-").
#[derive(Clone, Debug)]
pub struct CheckpointMeta {
    pub alpha: Option<f64>,
    pub alpha_learnable: Option<bool>,
    pub likelihood_kind: Option<LikelihoodKind>,
    pub latent_dim: usize,
    pub m: usize,
    pub eps_floor: Option<f64>,
    pub seed: u64,
    /// FNV-1a digest of the canonical run-config text.
    pub config_digest: u64,
}

/// One named row-major array.
#[derive(Clone, Debug)]
pub struct NamedArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

/// A saved model: format version, kind, metadata, per-net activation
/// lists, and the named parameter arrays (two per layer: weight, bias).
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub meta: CheckpointMeta,
    /// (net name, activation per layer) in serialization order.
    pub nets: Vec<(String, Vec<Activation>)>,
    pub arrays: Vec<NamedArray>,
}

fn push_net(ck: &mut Checkpoint, name: &str, net: &DenseNet) {
    ck.nets.push((name.to_string(), net.layers.iter().map(|l| l.activation).collect()));
    for (i, l) in net.layers.iter().enumerate() {
        ck.arrays.push(NamedArray {
            name: format!("{name}.{i}.weight"),
            rows: l.rows,
            cols: l.cols,
            values: l.weight.clone(),
        });
        ck.arrays.push(NamedArray {
            name: format!("{name}.{i}.bias"),
            rows: 1,
            cols: l.rows,
            values: l.bias.clone(),
        });
    }
}

impl Checkpoint {
    pub fn from_radius(model: &RadiusVaeModel, seed: u64, config_digest: u64) -> Self {
        let mut ck = Checkpoint {
            format_version: FORMAT_VERSION,
            model_kind: ModelKind::RadiusVae,
            meta: CheckpointMeta {
                alpha: Some(model.alpha),
                alpha_learnable: Some(model.alpha_learnable),
                likelihood_kind: None,
                latent_dim: 1,
                m: 1,
                eps_floor: Some(model.eps_floor),
                seed,
                config_digest,
            },
            nets: Vec::new(),
            arrays: Vec::new(),
        };
        push_net(&mut ck, "enc", &model.enc_net);
        push_net(&mut ck, "f", &model.f_net);
        push_net(&mut ck, "g", &model.g_net);
        ck
    }

    pub fn from_angular(model: &AngularVaeModel, seed: u64, config_digest: u64) -> Self {
        let mut ck = Checkpoint {
            format_version: FORMAT_VERSION,
            model_kind: ModelKind::AngularVae,
            meta: CheckpointMeta {
                alpha: None,
                alpha_learnable: None,
                likelihood_kind: Some(model.likelihood_kind),
                latent_dim: model.latent_dim,
                m: model.m,
                eps_floor: None,
                seed,
                config_digest,
            },
            nets: Vec::new(),
            arrays: Vec::new(),
        };
        push_net(&mut ck, "enc", &model.enc_net);
        push_net(&mut ck, "dec", &model.dec_net);
        ck
    }

    pub fn from_stdvae(model: &StdVaeModel, seed: u64, config_digest: u64) -> Self {
        let mut ck = Checkpoint {
            format_version: FORMAT_VERSION,
            model_kind: ModelKind::StdVae,
            meta: CheckpointMeta {
                alpha: None,
                alpha_learnable: None,
                likelihood_kind: None,
                latent_dim: model.latent_dim,
                m: model.data_dim(),
                eps_floor: None,
                seed,
                config_digest,
            },
            nets: Vec::new(),
            arrays: Vec::new(),
        };
        push_net(&mut ck, "enc", &model.enc_net);
        push_net(&mut ck, "dec", &model.dec_net);
        ck
    }

    /// Reassemble the named net from the activation list and arrays.
    fn extract_net(&self, name: &str) -> Result<DenseNet> {
        let acts = self
            .nets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a.clone())
            .ok_or_else(|| Error::Data(format!("checkpoint has no net '{name}'")))?;
        let mut layers = Vec::with_capacity(acts.len());
        for (i, act) in acts.iter().enumerate() {
            let find = |suffix: &str| -> Result<&NamedArray> {
                let full = format!("{name}.{i}.{suffix}");
                self.arrays
                    .iter()
                    .find(|a| a.name == full)
                    .ok_or_else(|| Error::Data(format!("checkpoint array '{full}' missing")))
            };
            let w = find("weight")?;
            let b = find("bias")?;
            layers.push(Layer::new(w.rows, w.cols, w.values.clone(), b.values.clone(), *act)?);
        }
        DenseNet::new(layers)
    }

    /// # Errors
    /// Kind mismatch or missing metadata/arrays are data (load) errors.
    pub fn to_radius(&self) -> Result<RadiusVaeModel> {
        if self.model_kind != ModelKind::RadiusVae {
            return Err(Error::Data(format!(
                "checkpoint holds a {} model, expected radius_vae",
                self.model_kind.name()
            )));
        }
        let alpha = self.meta.alpha.ok_or_else(|| Error::Data("alpha missing".into()))?;
        let learnable =
            self.meta.alpha_learnable.ok_or_else(|| Error::Data("alpha_learnable missing".into()))?;
        let eps =
            self.meta.eps_floor.ok_or_else(|| Error::Data("eps_floor missing".into()))?;
        RadiusVaeModel::from_parts(
            alpha,
            learnable,
            self.extract_net("enc")?,
            self.extract_net("f")?,
            self.extract_net("g")?,
            eps,
        )
    }

    /// # Errors
    /// As [`Self::to_radius`].
    pub fn to_angular(&self) -> Result<AngularVaeModel> {
        if self.model_kind != ModelKind::AngularVae {
            return Err(Error::Data(format!(
                "checkpoint holds a {} model, expected angular_vae",
                self.model_kind.name()
            )));
        }
        let kind = self
            .meta
            .likelihood_kind
            .ok_or_else(|| Error::Data("likelihood_kind missing".into()))?;
        AngularVaeModel::from_parts(
            kind,
            self.meta.latent_dim,
            self.extract_net("enc")?,
            self.extract_net("dec")?,
            self.meta.m,
        )
    }

    /// # Errors
    /// As [`Self::to_radius`].
    pub fn to_stdvae(&self) -> Result<StdVaeModel> {
        if self.model_kind != ModelKind::StdVae {
            return Err(Error::Data(format!(
                "checkpoint holds a {} model, expected stdvae",
                self.model_kind.name()
            )));
        }
        StdVaeModel::from_parts(
            self.meta.latent_dim,
            self.extract_net("enc")?,
            self.extract_net("dec")?,
        )
    }

    /// Canonical text form; the only form [`Self::parse`] accepts.
    pub fn render(&self) -> String {
        let opt_f = |v: Option<f64>| match v {
            Some(x) => format!("{x:.16e}"),
            None => "-".into(),
        };
        let opt_b = |v: Option<bool>| match v {
            Some(x) => x.to_string(),
            None => "-".into(),
        };
        let mut s = String::new();
        let _ = writeln!(s, "polarvae-checkpoint v{}", self.format_version);
        let _ = writeln!(s, "model_kind {}", self.model_kind.name());
        let _ = writeln!(s, "alpha {}", opt_f(self.meta.alpha));
        let _ = writeln!(s, "alpha_learnable {}", opt_b(self.meta.alpha_learnable));
        let _ = writeln!(
            s,
            "likelihood_kind {}",
            self.meta.likelihood_kind.map_or("-", LikelihoodKind::name)
        );
        let _ = writeln!(s, "latent_dim {}", self.meta.latent_dim);
        let _ = writeln!(s, "m {}", self.meta.m);
        let _ = writeln!(s, "eps_floor {}", opt_f(self.meta.eps_floor));
        let _ = writeln!(s, "seed {}", self.meta.seed);
        let _ = writeln!(s, "config_digest {:016x}", self.meta.config_digest);
        for (name, acts) in &self.nets {
            let act_names: Vec<&str> = acts.iter().map(|a| a.name()).collect();
            let _ = writeln!(s, "net {name} {}", act_names.join(","));
            for array in self.arrays.iter().filter(|a| {
                a.name.starts_with(name.as_str())
                    && a.name[name.len()..].starts_with('.')
            }) {
                let _ = writeln!(s, "array {} {} {}", array.name, array.rows, array.cols);
                for row in array.values.chunks(array.cols) {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                    let _ = writeln!(s, "{}", cells.join(" "));
                }
            }
        }
        s
    }

    /// # Errors
    /// Any deviation from the canonical form — wrong version, unexpected
    /// key order, malformed numbers — is a data error naming the line.
    pub fn parse(text: &str) -> Result<Self> {
        struct Cursor<'a> {
            lines: Vec<&'a str>,
            pos: usize,
        }
        impl<'a> Cursor<'a> {
            fn next(&mut self) -> Result<(usize, &'a str)> {
                let item = self
                    .lines
                    .get(self.pos)
                    .map(|&l| (self.pos, l))
                    .ok_or_else(|| Error::Data("checkpoint truncated".into()))?;
                self.pos += 1;
                Ok(item)
            }
            fn peek(&self) -> Option<(usize, &'a str)> {
                self.lines.get(self.pos).map(|&l| (self.pos, l))
            }
        }
        let mut cur = Cursor { lines: text.lines().collect(), pos: 0 };
        let (_, header) = cur.next()?;
        let version: u32 = header
            .strip_prefix("polarvae-checkpoint v")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad checkpoint header '{header}'")))?;
        if version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "checkpoint format v{version} unsupported (this build reads v{FORMAT_VERSION})"
            )));
        }
        fn field<'a>(line: (usize, &'a str), key: &str) -> Result<&'a str> {
            let (no, text) = line;
            text.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| {
                    Error::Data(format!("line {}: expected '{key} …', got '{text}'", no + 1))
                })
        }
        fn opt_f64(s: &str, what: &str) -> Result<Option<f64>> {
            if s == "-" {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::Data(format!("bad {what} value '{s}'")))
        }
        let model_kind = ModelKind::parse(field(cur.next()?, "model_kind")?)?;
        let alpha = opt_f64(field(cur.next()?, "alpha")?, "alpha")?;
        let alpha_learnable = match field(cur.next()?, "alpha_learnable")? {
            "-" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(Error::Data(format!("bad alpha_learnable '{other}'"))),
        };
        let likelihood_kind = match field(cur.next()?, "likelihood_kind")? {
            "-" => None,
            other => Some(LikelihoodKind::parse(other)?),
        };
        let latent_dim: usize = field(cur.next()?, "latent_dim")?
            .parse()
            .map_err(|_| Error::Data("bad latent_dim".into()))?;
        let m: usize =
            field(cur.next()?, "m")?.parse().map_err(|_| Error::Data("bad m".into()))?;
        let eps_floor = opt_f64(field(cur.next()?, "eps_floor")?, "eps_floor")?;
        let seed: u64 =
            field(cur.next()?, "seed")?.parse().map_err(|_| Error::Data("bad seed".into()))?;
        let config_digest = u64::from_str_radix(field(cur.next()?, "config_digest")?, 16)
            .map_err(|_| Error::Data("bad config_digest".into()))?;
        let mut nets = Vec::new();
        let mut arrays = Vec::new();
        while cur.peek().is_some() {
            let rest = field(cur.next()?, "net")?;
            let (name, act_list) = rest
                .split_once(' ')
                .ok_or_else(|| Error::Data(format!("bad net line '{rest}'")))?;
            let acts: Result<Vec<Activation>> =
                act_list.split(',').map(Activation::parse).collect();
            let acts = acts?;
            let n_arrays = 2 * acts.len();
            nets.push((name.to_string(), acts));
            for _ in 0..n_arrays {
                let spec = field(cur.next()?, "array")?;
                let parts: Vec<&str> = spec.split(' ').collect();
                if parts.len() != 3 {
                    return Err(Error::Data(format!("bad array line '{spec}'")));
                }
                let rows: usize =
                    parts[1].parse().map_err(|_| Error::Data("bad array rows".into()))?;
                let cols: usize =
                    parts[2].parse().map_err(|_| Error::Data("bad array cols".into()))?;
                let mut values = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (no, row) = cur.next()?;
                    for cell in row.split(' ') {
                        let v: f64 = cell.parse().map_err(|_| {
                            Error::Data(format!("line {}: bad value '{cell}'", no + 1))
                        })?;
                        values.push(v);
                    }
                }
                if values.len() != rows * cols {
                    return Err(Error::Data(format!(
                        "array {} has {} values, expected {rows}×{cols}",
                        parts[0],
                        values.len()
                    )));
                }
                arrays.push(NamedArray { name: parts[0].to_string(), rows, cols, values });
            }
        }
        Ok(Checkpoint {
            format_version: version,
            model_kind,
            meta: CheckpointMeta {
                alpha,
                alpha_learnable,
                likelihood_kind,
                latent_dim,
                m,
                eps_floor,
                seed,
                config_digest,
            },
            nets,
            arrays,
        })
    }

    /// # Errors
    /// Io errors propagate.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    /// # Errors
    /// Io and parse errors propagate as data errors.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Where training/evaluation data comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSource {
    Synth,
    Csv,
}

/// Flat key=value run configuration. Every key except `data.source` has a
/// default; unknown and duplicate keys are rejected.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub data_source: DataSource,
    pub data_path: Option<PathBuf>,
    pub model_alpha: f64,
    pub model_alpha_learnable: bool,
    pub model_likelihood: LikelihoodKind,
    pub train: TrainConfig,
    pub eval_thresholds: Vec<f64>,
    pub eval_quantiles: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// # Errors
    /// Missing `data.source`, unknown or duplicate keys, malformed values,
    /// and a csv source without `data.path` are config errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: Vec<String> = Vec::new();
        let mut source: Option<DataSource> = None;
        let mut cfg = RunConfig {
            data_source: DataSource::Synth, // replaced below; source is mandatory
            data_path: None,
            model_alpha: 1.0,
            model_alpha_learnable: true,
            model_likelihood: LikelihoodKind::ProjectedNormal,
            train: TrainConfig::default(),
            eval_thresholds: vec![1.0, 1.3, 1.6, 2.0, 2.5, 3.0, 5.0, 10.0],
            eval_quantiles: vec![0.9, 0.99],
            seed: 0,
            out_dir: PathBuf::from("out"),
        };
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{line}'", no + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!("duplicate key '{key}'")));
            }
            seen.push(key.to_string());
            let bad =
                |what: &str| Error::Config(format!("line {}: bad {what} '{value}'", no + 1));
            let parse_f64 = || value.parse::<f64>().map_err(|_| bad(key));
            let parse_usize = || value.parse::<usize>().map_err(|_| bad(key));
            let parse_bool = || match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(bad(key)),
            };
            let parse_list = || -> Result<Vec<f64>> {
                value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad(key)))
                    .collect()
            };
            match key {
                "data.source" => {
                    source = Some(match value {
                        "synth" => DataSource::Synth,
                        "csv" => DataSource::Csv,
                        _ => return Err(bad("data.source (synth|csv)")),
                    });
                }
                "data.path" => cfg.data_path = Some(PathBuf::from(value)),
                "model.alpha" => cfg.model_alpha = parse_f64()?,
                "model.alpha_learnable" => cfg.model_alpha_learnable = parse_bool()?,
                "model.likelihood" => {
                    cfg.model_likelihood = LikelihoodKind::parse(value)?;
                }
                "train.epochs" => cfg.train.epochs = parse_usize()?,
                "train.lr_radius" => cfg.train.lr_radius = parse_f64()?,
                "train.lr_angular" => cfg.train.lr_angular = parse_f64()?,
                "train.batch_size" => cfg.train.batch_size = parse_usize()?,
                "train.mc_samples" => cfg.train.mc_samples = parse_usize()?,
                "train.grad_clip" => cfg.train.grad_clip = parse_f64()?,
                "train.adam_beta1" => cfg.train.adam_beta1 = parse_f64()?,
                "train.adam_beta2" => cfg.train.adam_beta2 = parse_f64()?,
                "train.adam_eps" => cfg.train.adam_eps = parse_f64()?,
                "eval.thresholds" => cfg.eval_thresholds = parse_list()?,
                "eval.quantiles" => cfg.eval_quantiles = parse_list()?,
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| bad("seed"))?;
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                other => {
                    return Err(Error::Config(format!("unknown config key '{other}'")));
                }
            }
        }
        cfg.data_source =
            source.ok_or_else(|| Error::Config("config must set data.source".into()))?;
        if cfg.data_source == DataSource::Csv && cfg.data_path.is_none() {
            return Err(Error::Config("data.source = csv requires data.path".into()));
        }
        if cfg.eval_thresholds.is_empty() || cfg.eval_thresholds.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("eval.thresholds must be positive".into()));
        }
        if cfg.eval_quantiles.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::Config("eval.quantiles must lie in (0, 1)".into()));
        }
        cfg.train.seed = cfg.seed;
        Ok(cfg)
    }

    /// # Errors
    /// Io and parse errors propagate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialized form: every key in fixed order with canonical
    /// value formatting. Input to the digest.
    pub fn canonical_text(&self) -> String {
        let list = |v: &[f64]| -> String {
            v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "data.source={}",
            match self.data_source {
                DataSource::Synth => "synth",
                DataSource::Csv => "csv",
            }
        );
        let _ = writeln!(
            s,
            "data.path={}",
            self.data_path.as_deref().map_or(String::new(), |p| p.display().to_string())
        );
        let _ = writeln!(s, "model.alpha={:.16e}", self.model_alpha);
        let _ = writeln!(s, "model.alpha_learnable={}", self.model_alpha_learnable);
        let _ = writeln!(s, "model.likelihood={}", self.model_likelihood.name());
        let _ = writeln!(s, "train.epochs={}", self.train.epochs);
        let _ = writeln!(s, "train.lr_radius={:.16e}", self.train.lr_radius);
        let _ = writeln!(s, "train.lr_angular={:.16e}", self.train.lr_angular);
        let _ = writeln!(s, "train.batch_size={}", self.train.batch_size);
        let _ = writeln!(s, "train.mc_samples={}", self.train.mc_samples);
        let _ = writeln!(s, "train.grad_clip={:.16e}", self.train.grad_clip);
        let _ = writeln!(s, "train.adam_beta1={:.16e}", self.train.adam_beta1);
        let _ = writeln!(s, "train.adam_beta2={:.16e}", self.train.adam_beta2);
        let _ = writeln!(s, "train.adam_eps={:.16e}", self.train.adam_eps);
        let _ = writeln!(s, "eval.thresholds={}", list(&self.eval_thresholds));
        let _ = writeln!(s, "eval.quantiles={}", list(&self.eval_quantiles));
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "out_dir={}", self.out_dir.display());
        s
    }

    /// FNV-1a digest of the canonical text; stamped into checkpoints.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.canonical_text().bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// What [`cmd_sample`] draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    Joint,
    AngularMeasure,
    Radius,
}

impl SampleMode {
    /// # Errors
    /// Unknown names are config errors.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(SampleMode::Joint),
            "angular_measure" => Ok(SampleMode::AngularMeasure),
            "radius" => Ok(SampleMode::Radius),
            other => Err(Error::Config(format!(
                "unknown sample mode '{other}' (joint|angular_measure|radius)"
            ))),
        }
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Resolve the configured training data: the synthetic train split, or the
/// csv at data.path.
fn resolve_data(cfg: &RunConfig) -> Result<SampleMatrix> {
    match cfg.data_source {
        DataSource::Synth => {
            let synth = SyntheticConfig { seed: cfg.seed, ..SyntheticConfig::default() };
            let (train, _, _) = synth_dataset(&synth)?;
            Ok(train)
        }
        DataSource::Csv => {
            let path = cfg.data_path.as_deref().expect("validated at parse");
            load_sample_csv(path)
        }
    }
}

/// Write the synthetic train/val/test splits as CSVs into out_dir.
///
/// # Errors
/// Config and io errors propagate.
pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let synth = SyntheticConfig { seed: cfg.seed, ..SyntheticConfig::default() };
    let (train, val, test) = synth_dataset(&synth)?;
    let columns: Vec<String> = (1..=train.n_cols()).map(|j| format!("x{j}")).collect();
    for (name, split) in [("train", &train), ("val", &val), ("test", &test)] {
        let path = cfg.out_dir.join(format!("{name}.csv"));
        write_sample_csv(&path, &columns, split)?;
        println!("wrote {} ({} rows × {})", path.display(), split.n_rows(), split.n_cols());
    }
    Ok(())
}

/// Train the polar pair on the configured data; write radius_vae.ckpt,
/// angular_vae.ckpt, and losses.csv into out_dir; print the final tail
/// index.
///
/// # Errors
/// Data, config, and training errors propagate with context.
pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = resolve_data(cfg)?;
    let m = data.n_cols();
    let mut radius_model = RadiusVaeModel::new(
        cfg.model_alpha,
        cfg.model_alpha_learnable,
        &mut stream(cfg.seed, "init.radius"),
    )?;
    let mut angular_model = AngularVaeModel::new(
        m,
        4,
        cfg.model_likelihood,
        &mut stream(cfg.seed, "init.angular"),
    )?;
    let history = train_full(&mut radius_model, &mut angular_model, &data, &cfg.train)?;
    let digest = cfg.digest();
    Checkpoint::from_radius(&radius_model, cfg.seed, digest)
        .save(&cfg.out_dir.join("radius_vae.ckpt"))?;
    Checkpoint::from_angular(&angular_model, cfg.seed, digest)
        .save(&cfg.out_dir.join("angular_vae.ckpt"))?;
    let mut csv = String::from("epoch,loss_radius,loss_angular\n");
    for (i, (lr, la)) in history.loss_radius.iter().zip(&history.loss_angular).enumerate() {
        let _ = writeln!(csv, "{},{lr:.16e},{la:.16e}", i + 1);
    }
    write_text(&cfg.out_dir.join("losses.csv"), &csv)?;
    println!("checkpoints and losses.csv written to {}", cfg.out_dir.display());
    println!("final tail index: {}", tail_index(&radius_model));
    Ok(())
}

fn load_checkpoints(paths: &[PathBuf]) -> Result<Vec<Checkpoint>> {
    if paths.is_empty() {
        return Err(Error::Config("pass at least one --checkpoint".into()));
    }
    paths.iter().map(|p| Checkpoint::load(p)).collect()
}

fn find_kind(cks: &[Checkpoint], kind: ModelKind) -> Result<&Checkpoint> {
    cks.iter().find(|c| c.model_kind == kind).ok_or_else(|| {
        let found: Vec<&str> = cks.iter().map(|c| c.model_kind.name()).collect();
        Error::Data(format!(
            "no {} checkpoint among [{}]",
            kind.name(),
            found.join(", ")
        ))
    })
}

/// Draw n samples in the requested mode from loaded checkpoints and write
/// samples.csv into out_dir.
///
/// # Errors
/// Checkpoint load/kind mismatches are data errors; sampling errors
/// propagate.
pub fn cmd_sample(
    cfg: &RunConfig,
    checkpoint_paths: &[PathBuf],
    n: usize,
    mode: SampleMode,
) -> Result<()> {
    ensure_out_dir(cfg)?;
    let cks = load_checkpoints(checkpoint_paths)?;
    let path = cfg.out_dir.join("samples.csv");
    let (columns, samples): (Vec<String>, SampleMatrix) = match mode {
        SampleMode::Joint => {
            let radius = find_kind(&cks, ModelKind::RadiusVae)?.to_radius()?;
            let angular = find_kind(&cks, ModelKind::AngularVae)?.to_angular()?;
            let s = sample_joint(&radius, &angular, n, &mut stream(cfg.seed, "sample.joint"))?;
            ((1..=s.n_cols()).map(|j| format!("x{j}")).collect(), s)
        }
        SampleMode::AngularMeasure => {
            let angular = find_kind(&cks, ModelKind::AngularVae)?.to_angular()?;
            let s = angular_vae::sample_angular_measure(
                &angular,
                n,
                &mut stream(cfg.seed, "sample.angular_measure"),
            )?;
            ((1..=s.n_cols()).map(|j| format!("theta{j}")).collect(), s)
        }
        SampleMode::Radius => {
            let radius = find_kind(&cks, ModelKind::RadiusVae)?.to_radius()?;
            let r = sample_radius(&radius, n, &mut stream(cfg.seed, "sample.radius"));
            (vec!["r".to_string()], SampleMatrix::new(r, n, 1)?)
        }
    };
    write_sample_csv(&path, &columns, &samples)?;
    println!("wrote {} ({} rows × {})", path.display(), samples.n_rows(), samples.n_cols());
    Ok(())
}

/// Exact-OT evaluation cap: larger sides are subsampled to this many rows.
const OT_EVAL_CAP: usize = 2000;

fn subsample_rows<R: rand::Rng + ?Sized>(
    x: &SampleMatrix,
    cap: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    if x.n_rows() <= cap {
        return Ok(x.clone());
    }
    let idx: Vec<usize> = (0..x.n_rows()).collect();
    let chosen: Vec<usize> = idx.choose_multiple(rng, cap).copied().collect();
    let mut buf = Vec::with_capacity(cap * x.n_cols());
    for &i in &chosen {
        buf.extend_from_slice(x.row(i));
    }
    SampleMatrix::new(buf, cap, x.n_cols())
}

/// Polar-decompose after dropping rows whose L1 norm sits below the
/// decomposition floor. A heavy-tailed generator can emit radii
/// arbitrarily close to zero; such rows carry no angular information and
/// are irrelevant to every tail metric, so they are excluded with a
/// warning instead of aborting the report.
fn decompose_nonzero(x: &SampleMatrix, label: &str) -> Result<crate::polar::PolarDataset> {
    let keep: Vec<usize> = x
        .rows()
        .enumerate()
        .filter(|(_, row)| row.iter().map(|v| v.abs()).sum::<f64>() >= 1e-12)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::Data(format!("{label} sample has no nonzero rows")));
    }
    if keep.len() < x.n_rows() {
        eprintln!(
            "warning: excluding {} near-zero row(s) of the {label} sample from polar metrics",
            x.n_rows() - keep.len()
        );
        let mut buf = Vec::with_capacity(keep.len() * x.n_cols());
        for &i in &keep {
            buf.extend_from_slice(x.row(i));
        }
        return polar_decompose(&SampleMatrix::new(buf, keep.len(), x.n_cols())?);
    }
    polar_decompose(x)
}

/// Run the full metric suite comparing a generated sample against a
/// reference sample; write the report CSVs into out_dir.
///
/// Emits: logqq.csv, kl.csv (both variants), wasserstein.csv, wr.csv,
/// independence_generated.csv, independence_reference.csv,
/// hill_generated.csv, hill_reference.csv, regions.csv, summary.csv.
///
/// # Errors
/// Dimension mismatches are data errors; metric errors at individual
/// thresholds are skipped with a warning instead of aborting the report.
pub fn cmd_evaluate(cfg: &RunConfig, generated: &Path, reference: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let gen = load_sample_csv(generated)?;
    let reference = load_sample_csv(reference)?;
    if gen.n_cols() != reference.n_cols() {
        return Err(Error::Data(format!(
            "generated sample has {} columns, reference {}",
            gen.n_cols(),
            reference.n_cols()
        )));
    }
    let polar_gen = decompose_nonzero(&gen, "generated")?;
    let polar_ref = decompose_nonzero(&reference, "reference")?;

    // Log-QQ over the full upper tail.
    let qq = log_qq(&polar_ref.radii, &polar_gen.radii, 1.0)?;
    let mut csv = String::from("log_q_reference,log_q_generated\n");
    for (a, b) in &qq {
        let _ = writeln!(csv, "{a:.16e},{b:.16e}");
    }
    write_text(&cfg.out_dir.join("logqq.csv"), &csv)?;

    // Tail KL in both variants per threshold.
    let mut csv = String::from("threshold,kl_literal,kl_cross\n");
    for &u in &cfg.eval_thresholds {
        let lit = kl_above_threshold(&polar_ref.radii, &polar_gen.radii, u, KlVariant::Literal);
        let cross = kl_above_threshold(&polar_ref.radii, &polar_gen.radii, u, KlVariant::Cross);
        match (lit, cross) {
            (Ok(l), Ok(c)) => {
                let _ = writeln!(csv, "{u},{l:.16e},{c:.16e}");
            }
            (Err(e), _) | (_, Err(e)) => {
                eprintln!("warning: tail KL at threshold {u} skipped: {e}");
            }
        }
    }
    write_text(&cfg.out_dir.join("kl.csv"), &csv)?;

    // Exact OT on (at most) OT_EVAL_CAP rows per side.
    let gen_ot = subsample_rows(&gen, OT_EVAL_CAP, &mut stream(cfg.seed, "eval.subsample.gen"))?;
    let ref_ot =
        subsample_rows(&reference, OT_EVAL_CAP, &mut stream(cfg.seed, "eval.subsample.ref"))?;
    let w = wasserstein(&gen_ot, &ref_ot)?;
    write_text(
        &cfg.out_dir.join("wasserstein.csv"),
        &format!("wasserstein\n{w:.16e}\n"),
    )?;
    let mut csv = String::from("threshold,w_r\n");
    for &r in &cfg.eval_thresholds {
        match wasserstein_above(&gen_ot, &ref_ot, r) {
            Ok(wr) => {
                let _ = writeln!(csv, "{r},{wr:.16e}");
            }
            Err(e) => eprintln!("warning: W_r at threshold {r} skipped: {e}"),
        }
    }
    write_text(&cfg.out_dir.join("wr.csv"), &csv)?;

    // Independence p-value tables.
    let mut selected = Vec::new();
    for (name, polar, label) in [
        ("independence_generated.csv", &polar_gen, "eval.indep.gen"),
        ("independence_reference.csv", &polar_ref, "eval.indep.ref"),
    ] {
        let res = independence_pvalues(
            polar,
            &cfg.eval_thresholds,
            500,
            100,
            10,
            &mut stream(cfg.seed, label),
        )?;
        let mut csv = String::from("threshold,mean_pvalue\n");
        for (t, p) in res.thresholds.iter().zip(&res.mean_pvalues) {
            let _ = writeln!(csv, "{t},{p:.16e}");
        }
        write_text(&cfg.out_dir.join(name), &csv)?;
        selected.push(res.selected_threshold);
    }

    // Hill tables.
    for (name, polar) in
        [("hill_generated.csv", &polar_gen), ("hill_reference.csv", &polar_ref)]
    {
        let mut csv = String::from("k,alpha\n");
        for (k, alpha) in hill_plot(&polar.radii)? {
            let _ = writeln!(csv, "{k},{alpha:.16e}");
        }
        write_text(&cfg.out_dir.join(name), &csv)?;
    }

    // Joint-exceedance proportions at the configured quantiles, thresholds
    // taken from the reference marginals.
    let m = reference.n_cols();
    let mut csv = String::from("quantile,j,proportion_reference,proportion_generated\n");
    for &q in &cfg.eval_quantiles {
        let mut thresholds = Vec::with_capacity(m);
        for j in 0..m {
            let mut col: Vec<f64> = reference.rows().map(|row| row[j]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            thresholds.push(crate::metrics::quantile_type7(&col, q));
        }
        let props_ref = region_proportion(&reference, &thresholds, m)?;
        let props_gen = region_proportion(&gen, &thresholds, m)?;
        for j in 1..=m {
            let _ =
                writeln!(csv, "{q},{j},{:.16e},{:.16e}", props_ref[j - 1], props_gen[j - 1]);
        }
    }
    write_text(&cfg.out_dir.join("regions.csv"), &csv)?;

    // One-line rollup.
    let fmt_sel = |s: Option<f64>| s.map_or(String::new(), |v| format!("{v}"));
    let mut csv = String::from("key,value\n");
    let _ = writeln!(csv, "n_generated,{}", gen.n_rows());
    let _ = writeln!(csv, "n_reference,{}", reference.n_rows());
    let _ = writeln!(csv, "m,{m}");
    let _ = writeln!(csv, "wasserstein,{w:.16e}");
    let _ = writeln!(csv, "selected_threshold_generated,{}", fmt_sel(selected[0]));
    let _ = writeln!(csv, "selected_threshold_reference,{}", fmt_sel(selected[1]));
    write_text(&cfg.out_dir.join("summary.csv"), &csv)?;
    println!("evaluation report written to {}", cfg.out_dir.display());
    Ok(())
}

/// Which probe [`cmd_probe`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeMode {
    ReluPushforward,
    StdvaeTail,
}

impl ProbeMode {
    /// # Errors
    /// Unknown names are config errors.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu_pushforward" => Ok(ProbeMode::ReluPushforward),
            "stdvae_tail" => Ok(ProbeMode::StdvaeTail),
            other => Err(Error::Config(format!(
                "unknown probe mode '{other}' (relu_pushforward|stdvae_tail)"
            ))),
        }
    }
}

/// Run a structural probe and write probe.csv (key,value rows) into
/// out_dir.
///
/// relu_pushforward: draws 10⁶ samples from a random rectified network fed
/// with i.i.d. Pareto(1.5) latents and reports the angular concentration
/// above the 0.999 radius quantile, next to the same probe on the
/// configured data for contrast.
///
/// stdvae_tail: trains a StdVAE on the data radii, samples 10⁴ radii, and
/// reports the generalized Pareto fit of their upper tail.
///
/// # Errors
/// Data resolution, training, and probe errors propagate.
pub fn cmd_probe(cfg: &RunConfig, mode: ProbeMode) -> Result<()> {
    ensure_out_dir(cfg)?;
    let mut csv = String::from("key,value\n");
    match mode {
        ProbeMode::ReluPushforward => {
            let mut net_rng = stream(cfg.seed, "probe.net");
            let data = resolve_data(cfg)?;
            let m = data.n_cols();
            let net = DenseNet::new(vec![
                Layer::glorot(8, 3, Activation::Relu, &mut net_rng),
                Layer::glorot(m, 8, Activation::Identity, &mut net_rng),
            ])?;
            let generator = PushforwardGenerator::new(net, 1.5)?;
            let draws =
                pushforward_sample(&generator, 1_000_000, &mut stream(cfg.seed, "probe.draws"))?;
            let (disp, frac) = angular_concentration_probe(&draws, 0.999, 3)?;
            let _ = writeln!(csv, "pushforward_dispersion,{disp:.16e}");
            let _ = writeln!(csv, "pushforward_cluster_fraction,{frac:.16e}");
            let (disp_d, frac_d) = angular_concentration_probe(&data, 0.9, 3)?;
            let _ = writeln!(csv, "data_dispersion,{disp_d:.16e}");
            let _ = writeln!(csv, "data_cluster_fraction,{frac_d:.16e}");
            println!(
                "pushforward cluster fraction {frac:.3} vs data {frac_d:.3} (≤ 3 centers)"
            );
        }
        ProbeMode::StdvaeTail => {
            let data = resolve_data(cfg)?;
            let radii = polar_decompose(&data)?.radii;
            let matrix = SampleMatrix::new(radii.clone(), radii.len(), 1)?;
            let mut model = StdVaeModel::new(1, 2, &mut stream(cfg.seed, "probe.stdvae.init"))?;
            let mut train_cfg = cfg.train.clone();
            train_cfg.seed = cfg.seed;
            stdvae_train(&mut model, &matrix, &train_cfg)?;
            let samples =
                stdvae_sample(&model, 10_000, &mut stream(cfg.seed, "probe.stdvae.sample"))?;
            let positive: Vec<f64> =
                samples.as_slice().iter().copied().filter(|&v| v > 0.0).collect();
            let gp = crate::baselines::tail_probe(&positive, 0.9)?;
            let _ = writeln!(csv, "stdvae_gp_scale,{:.16e}", gp.scale);
            let _ = writeln!(csv, "stdvae_gp_shape,{:.16e}", gp.shape);
            println!("StdVAE tail fit: scale {:.4}, shape {:.4}", gp.scale, gp.shape);
        }
    }
    let path = cfg.out_dir.join("probe.csv");
    write_text(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Parser)]
#[command(
    name = "polarvae",
    about = "Generative modeling of multivariate heavy-tailed data via a polar (radius × angle) factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Write synthetic train/val/test CSV splits.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the radius and angular models; write checkpoints and losses.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw samples from saved checkpoints.
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint path; repeat for the joint mode (radius + angular).
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        n: usize,
        /// joint | angular_measure | radius
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare a generated sample against a reference sample.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Generated sample CSV.
        #[arg(long)]
        data: PathBuf,
        /// Reference sample CSV.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Structural probes of baseline generators.
    Probe {
        #[arg(long)]
        config: PathBuf,
        /// relu_pushforward | stdvae_tail
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = out {
        cfg.out_dir = dir;
    }
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.train.seed = s;
    }
    Ok(cfg)
}

/// Parse the command line and dispatch. The binary maps the error to its
/// exit code.
///
/// # Errors
/// Everything the subcommands can raise.
pub fn run() -> Result<()> {
    match Cli::parse().command {
        CliCommand::Synth { config, out, seed } => cmd_synth(&load_config(&config, out, seed)?),
        CliCommand::Train { config, out, seed } => cmd_train(&load_config(&config, out, seed)?),
        CliCommand::Sample { config, checkpoints, n, mode, out, seed } => {
            let cfg = load_config(&config, out, seed)?;
            cmd_sample(&cfg, &checkpoints, n, SampleMode::parse(&mode)?)
        }
        CliCommand::Evaluate { config, data, reference, out, seed } => {
            let cfg = load_config(&config, out, seed)?;
            cmd_evaluate(&cfg, &data, &reference)
        }
        CliCommand::Probe { config, mode, out, seed } => {
            let cfg = load_config(&config, out, seed)?;
            cmd_probe(&cfg, ProbeMode::parse(&mode)?)
        }
    }
}
