//! Flat key=value run configuration with # comments. Command-line flags
//! override file keys; the resolved result can be echoed back out so any
//! run directory documents itself.

use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};

use crate::error::{Result, VganError};
use crate::trainer::TrainerConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub target_stage: usize,
    pub reals_per_phase: u64,
    pub batch_sizes: Vec<usize>,
    pub lr_table: Vec<f64>,
    pub late_lr_rate: f64,
    pub late_lr_fraction: f64,
    pub latent_dim: usize,
    pub n_filters: usize,
    /// No wall-clock default: runs must be reproducible from their config.
    pub seed: Option<u64>,
    pub checkpoint_every: u64,
    pub augment_k: usize,
    pub augment_sigma: f64,
    pub eval_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            target_stage: 3,
            reals_per_phase: crate::schedule::DEFAULT_REALS_PER_PHASE,
            batch_sizes: crate::trainer::DEFAULT_BATCH_SIZES.to_vec(),
            lr_table: crate::schedule::DEFAULT_LR_TABLE.to_vec(),
            late_lr_rate: crate::schedule::DEFAULT_LATE_LR.0,
            late_lr_fraction: crate::schedule::DEFAULT_LATE_LR.1,
            latent_dim: 128,
            n_filters: 128,
            seed: None,
            checkpoint_every: 0,
            augment_k: 10,
            augment_sigma: 10.0,
            eval_count: 0,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("bad list element {s:?}")))
        .collect()
}

impl RunConfig {
    /// Applies one key=value pair; unknown keys and unparsable values are
    /// reported, not silently dropped.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let bad = |k: &str, v: &str| format!("key {k}: cannot parse value {v:?}");
        match key {
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "target_stage" => self.target_stage = value.parse().map_err(|_| bad(key, value))?,
            "reals_per_phase" => self.reals_per_phase = value.parse().map_err(|_| bad(key, value))?,
            "batch_sizes" => self.batch_sizes = parse_list(value).map_err(|e| format!("key {key}: {e}"))?,
            "lr_table" => self.lr_table = parse_list(value).map_err(|e| format!("key {key}: {e}"))?,
            "late_lr_rate" => self.late_lr_rate = value.parse().map_err(|_| bad(key, value))?,
            "late_lr_fraction" => {
                self.late_lr_fraction = value.parse().map_err(|_| bad(key, value))?
            }
            "latent_dim" => self.latent_dim = value.parse().map_err(|_| bad(key, value))?,
            "n_filters" => self.n_filters = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = Some(value.parse().map_err(|_| bad(key, value))?),
            "checkpoint_every" => {
                self.checkpoint_every = value.parse().map_err(|_| bad(key, value))?
            }
            "augment_k" => self.augment_k = value.parse().map_err(|_| bad(key, value))?,
            "augment_sigma" => self.augment_sigma = value.parse().map_err(|_| bad(key, value))?,
            "eval_count" => self.eval_count = value.parse().map_err(|_| bad(key, value))?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = cfg.set(k.trim(), v.trim()) {
                        problems.push(format!("line {}: {e}", lineno + 1));
                    }
                }
                None => problems.push(format!("line {}: expected key=value, got {line:?}", lineno + 1)),
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(VganError::Config(problems.join("; ")))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VganError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// All validation failures at once, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.seed.is_none() {
            problems.push("seed is mandatory (no wall-clock default)".to_string());
        }
        if self.target_stage > 3 {
            problems.push(format!("target_stage {} above the 32^3 ladder (max 3)", self.target_stage));
        }
        if self.reals_per_phase == 0 {
            problems.push("reals_per_phase must be positive".to_string());
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            problems.push(format!("batch_sizes {:?} must be nonempty and positive", self.batch_sizes));
        }
        if self.lr_table.is_empty() || self.lr_table.iter().any(|&lr| lr <= 0.0) {
            problems.push(format!("lr_table {:?} must be nonempty and positive", self.lr_table));
        }
        if !(0.0..=1.0).contains(&self.late_lr_fraction) {
            problems.push(format!("late_lr_fraction {} outside [0,1]", self.late_lr_fraction));
        }
        if self.latent_dim == 0 {
            problems.push("latent_dim must be positive".to_string());
        }
        if self.n_filters == 0 || self.n_filters > 128 {
            problems.push(format!("n_filters {} outside 1..=128", self.n_filters));
        }
        if self.augment_k == 0 {
            problems.push("augment_k must be >= 1".to_string());
        }
        if self.augment_sigma < 0.0 {
            problems.push(format!("augment_sigma {} is negative", self.augment_sigma));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(VganError::Config(problems.join("; ")))
        }
    }

    /// Canonical key=value echo of the resolved config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let join_us = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let join_f = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "data_dir = {}", self.data_dir.display());
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "target_stage = {}", self.target_stage);
        let _ = writeln!(s, "reals_per_phase = {}", self.reals_per_phase);
        let _ = writeln!(s, "batch_sizes = {}", join_us(&self.batch_sizes));
        let _ = writeln!(s, "lr_table = {}", join_f(&self.lr_table));
        let _ = writeln!(s, "late_lr_rate = {}", self.late_lr_rate);
        let _ = writeln!(s, "late_lr_fraction = {}", self.late_lr_fraction);
        let _ = writeln!(s, "latent_dim = {}", self.latent_dim);
        let _ = writeln!(s, "n_filters = {}", self.n_filters);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "checkpoint_every = {}", self.checkpoint_every);
        let _ = writeln!(s, "augment_k = {}", self.augment_k);
        let _ = writeln!(s, "augment_sigma = {}", self.augment_sigma);
        let _ = writeln!(s, "eval_count = {}", self.eval_count);
        s
    }

    pub fn trainer_config(&self) -> Result<TrainerConfig> {
        self.validate()?;
        let mut t = TrainerConfig::desk(self.target_stage, self.seed.unwrap());
        t.n_filters = self.n_filters;
        t.latent_dim = self.latent_dim;
        t.reals_per_phase = self.reals_per_phase;
        t.lr_table = self.lr_table.clone();
        t.late_lr = Some((self.late_lr_rate, self.late_lr_fraction));
        t.batch_sizes = self.batch_sizes.clone();
        t.checkpoint_every = self.checkpoint_every;
        t.out_dir = Some(self.out_dir.clone());
        Ok(t)
    }
}
