//! `key = value` configuration files.
//!
//! ```text
//! # synthetic suite
//! subjects = 15
//! n_samples = 360
//! strategies = bl, qbc, eemcm
//! ```
//!
//! Blank lines and `#` comments are ignored, unknown keys are rejected and
//! missing keys keep their defaults.

use std::path::Path;

use crate::dataset::{synth_generate, SynthConfig, SynthSubject};
use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::seed::{RunSeeds, Stream};
use crate::strategies::StrategySpec;

pub const DEFAULT_SUBJECTS: usize = 15;

pub struct KeyDoc {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

/// Every recognised key with its default.
pub const KEYS: &[KeyDoc] = &[
    KeyDoc { key: "subjects", default: "15", help: "number of synthetic subjects" },
    KeyDoc { key: "n_samples", default: "360", help: "samples per synthetic subject" },
    KeyDoc { key: "n_features", default: "10", help: "feature dimension" },
    KeyDoc { key: "noise_sd", default: "0.2", help: "target noise sd before rescaling" },
    KeyDoc { key: "outlier_fraction", default: "0.02", help: "share of planted outliers" },
    KeyDoc { key: "outlier_scale", default: "2.5", help: "outlier distance from the cube centre" },
    KeyDoc { key: "seed", default: "0", help: "synthesis seed" },
    KeyDoc { key: "k", default: "5", help: "samples labeled per batch" },
    KeyDoc { key: "batches", default: "12", help: "number of batches M" },
    KeyDoc { key: "pool_fraction", default: "0.8", help: "share of each subject drawn into the pool" },
    KeyDoc { key: "runs", default: "30", help: "pool draws per subject" },
    KeyDoc { key: "master_seed", default: "0", help: "experiment seed (env ALBATCH_SEED overrides)" },
    KeyDoc { key: "sigma", default: "0.01", help: "ridge parameter" },
    KeyDoc { key: "gamma", default: "0.02", help: "outlier cluster size threshold as a pool share" },
    KeyDoc { key: "committee_size", default: "4", help: "bootstrap committee size P" },
    KeyDoc {
        key: "strategies",
        default: "bl,qbc,eqbc,emcm,eemcm,eemcm1,eemcm2,eemcm3",
        help: "comma-separated strategy names",
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub subjects: usize,
    pub synth: SynthConfig,
    pub experiment: ExperimentConfig,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self { subjects: DEFAULT_SUBJECTS, synth: SynthConfig::default(), experiment: ExperimentConfig::default() }
    }
}

fn num<T: std::str::FromStr>(origin: &Path, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(origin, format!("line {line}: `{key}` expects a number, got `{v}`")))
}

pub fn parse_strategies(list: &str) -> Result<Vec<StrategySpec>> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(Error::parse(origin, format!("line {line}: `{key}` set twice")));
            }
            let s = &mut cfg.synth;
            let e = &mut cfg.experiment;
            match key {
                "subjects" => cfg.subjects = num(origin, line, key, value)?,
                "n_samples" => s.n_samples = num(origin, line, key, value)?,
                "n_features" => s.n_features = num(origin, line, key, value)?,
                "noise_sd" => s.noise_sd = num(origin, line, key, value)?,
                "outlier_fraction" => s.outlier_fraction = num(origin, line, key, value)?,
                "outlier_scale" => s.outlier_scale = num(origin, line, key, value)?,
                "seed" => s.seed = num(origin, line, key, value)?,
                "k" => e.k = num(origin, line, key, value)?,
                "batches" => e.batches = num(origin, line, key, value)?,
                "pool_fraction" => e.pool_fraction = num(origin, line, key, value)?,
                "runs" => e.runs = num(origin, line, key, value)?,
                "master_seed" => e.master_seed = num(origin, line, key, value)?,
                "sigma" => e.sigma = num(origin, line, key, value)?,
                "gamma" => e.gamma = num(origin, line, key, value)?,
                "committee_size" => e.committee_size = num(origin, line, key, value)?,
                "strategies" => {
                    e.strategies =
                        parse_strategies(value).map_err(|err| Error::parse(origin, format!("line {line}: {err}")))?
                }
                _ => return Err(Error::parse(origin, format!("line {line}: unknown key `{key}`"))),
            }
            seen.push(key);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        Self::parse(&text, path)
    }

    /// Generates `subjects` synthetic subjects, each from its own derived seed.
    pub fn synth_suite(&self) -> Result<Vec<SynthSubject>> {
        if self.subjects == 0 {
            return Err(Error::invalid("subjects must be at least 1"));
        }
        self.synth.validate()?;
        let seeds = RunSeeds::from_base(self.synth.seed);
        (0..self.subjects)
            .map(|i| synth_generate(&SynthConfig { seed: seeds.seed(Stream::Synth, i), ..self.synth.clone() }))
            .collect()
    }
}
