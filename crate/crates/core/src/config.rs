//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scode::TrainConfig;

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_MIN_COUNT: u64 = 2;

/// Every tunable of the corpus-to-embeddings pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub lm_corpus: Option<PathBuf>,
    /// Corpus whose tokens get embedded; defaults to the LM corpus.
    pub embed_corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub lowercase_ratio: Option<f64>,
    pub min_count: u64,
    pub order: usize,
    pub top_k: usize,
    pub pruned: bool,
    pub samples: usize,
    pub dim: usize,
    pub z_constant: f64,
    pub lambda0: f64,
    pub nu: f64,
    pub epochs: usize,
    /// Overrides the training seed derived from `seed`.
    pub scode_seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let scode = TrainConfig::default();
        PipelineConfig {
            lm_corpus: None,
            embed_corpus: None,
            out_dir: PathBuf::from("out"),
            seed: 1,
            threads: 0,
            lowercase_ratio: None,
            min_count: DEFAULT_MIN_COUNT,
            order: DEFAULT_ORDER,
            top_k: crate::substitutes::DEFAULT_TOP_K,
            pruned: true,
            samples: crate::discretize::DEFAULT_SAMPLES,
            dim: scode.dim,
            z_constant: scode.z_constant,
            lambda0: scode.lambda0,
            nu: scode.nu,
            epochs: scode.epochs,
            scode_seed: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "corpus.lm",
    "corpus.embed",
    "out_dir",
    "seed",
    "threads",
    "clean.lowercase_ratio",
    "vocab.min_count",
    "lm.order",
    "subs.K",
    "subs.pruned",
    "sample.S",
    "scode.d",
    "scode.z_constant",
    "scode.lambda0",
    "scode.nu",
    "scode.epochs",
    "scode.seed",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

/// Derives an independent seed for one pipeline stage.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl PipelineConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(name, i + 1, "expected `key = value`"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus.lm" => self.lm_corpus = Some(PathBuf::from(value)),
            "corpus.embed" => self.embed_corpus = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse_value(key, value)?,
            "threads" => self.threads = parse_value(key, value)?,
            "clean.lowercase_ratio" => {
                self.lowercase_ratio = match value {
                    "" | "none" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "vocab.min_count" => self.min_count = parse_value(key, value)?,
            "lm.order" => self.order = parse_value(key, value)?,
            "subs.K" => self.top_k = parse_value(key, value)?,
            "subs.pruned" => self.pruned = parse_value(key, value)?,
            "sample.S" => self.samples = parse_value(key, value)?,
            "scode.d" => self.dim = parse_value(key, value)?,
            "scode.z_constant" => self.z_constant = parse_value(key, value)?,
            "scode.lambda0" => self.lambda0 = parse_value(key, value)?,
            "scode.nu" => self.nu = parse_value(key, value)?,
            "scode.epochs" => self.epochs = parse_value(key, value)?,
            "scode.seed" => self.scode_seed = Some(parse_value(key, value)?),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must be `key=value`"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.lowercase_ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config("clean.lowercase_ratio", "must lie in [0, 1]"));
            }
        }
        if self.min_count < 1 {
            return Err(Error::config("vocab.min_count", "must be at least 1"));
        }
        if self.order < 1 || self.order > crate::ngram::MAX_ORDER {
            return Err(Error::config(
                "lm.order",
                format!("must be between 1 and {}", crate::ngram::MAX_ORDER),
            ));
        }
        if self.top_k < 1 {
            return Err(Error::config("subs.K", "must be at least 1"));
        }
        if self.samples < 1 {
            return Err(Error::config("sample.S", "must be at least 1"));
        }
        self.train_config().validate()
    }

    pub fn sample_seed(&self) -> u64 {
        derive_seed(self.seed, "sample")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            z_constant: self.z_constant,
            lambda0: self.lambda0,
            nu: self.nu,
            epochs: self.epochs,
            seed: self
                .scode_seed
                .unwrap_or_else(|| derive_seed(self.seed, "scode")),
        }
    }

    /// Every key with its effective value, one `key=value` per line.
    pub fn canonical(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        };
        let values = [
            path(&self.lm_corpus),
            path(&self.embed_corpus),
            self.out_dir.display().to_string(),
            self.seed.to_string(),
            self.threads.to_string(),
            self.lowercase_ratio
                .map_or("none".into(), |r| r.to_string()),
            self.min_count.to_string(),
            self.order.to_string(),
            self.top_k.to_string(),
            self.pruned.to_string(),
            self.samples.to_string(),
            self.dim.to_string(),
            self.z_constant.to_string(),
            self.lambda0.to_string(),
            self.nu.to_string(),
            self.epochs.to_string(),
            self.scode_seed.map_or("derived".into(), |s| s.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// SHA-256 of [`canonical`](Self::canonical), excluding `threads`, which
    /// does not affect any output.
    pub fn digest(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("threads="))
            .map(|l| format!("{l}\n"))
            .collect();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
