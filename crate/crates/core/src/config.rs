use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Tracker hyper-parameters. Field names double as config-file keys and CLI
/// flag names.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerConfig {
    /// Ridge weight on the spatial filter.
    pub lambda: f64,
    /// Moving-average learning rate for the template and filter.
    pub eta: f64,
    /// Number of scales searched per frame (odd).
    pub num_scales: usize,
    pub scale_step: f64,
    /// Pixels per HOG cell side.
    pub cell_size: usize,
    /// Target fraction of above-threshold cells in the quantized response.
    pub proposal_ratio: f64,
    /// Accepted deviation from `proposal_ratio`, as a fraction.
    pub ratio_tolerance: f64,
    /// Minimum component area, as a fraction of the target area in cells.
    pub area_threshold: f64,
    /// Search window area = target area * (1 + search_padding); both sides
    /// grow by the same factor.
    pub search_padding: f64,
    pub admm_iterations: usize,
    pub admm_penalty_init: f64,
    pub admm_penalty_scale: f64,
    pub admm_penalty_max: f64,
    /// When false the response map is used unmasked (plain background-aware
    /// filter). Used for ablations.
    pub reliable_mask: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        default_config()
    }
}

pub fn default_config() -> TrackerConfig {
    TrackerConfig {
        lambda: 0.001,
        eta: 0.013,
        num_scales: 5,
        scale_step: 1.01,
        cell_size: 4,
        proposal_ratio: 0.05,
        ratio_tolerance: 0.10,
        area_threshold: 0.20,
        search_padding: 4.0,
        admm_iterations: 2,
        admm_penalty_init: 1.0,
        admm_penalty_scale: 10.0,
        admm_penalty_max: 1000.0,
        reliable_mask: true,
    }
}

const KEYS: &[&str] = &[
    "lambda",
    "eta",
    "num_scales",
    "scale_step",
    "cell_size",
    "proposal_ratio",
    "ratio_tolerance",
    "area_threshold",
    "search_padding",
    "admm_iterations",
    "admm_penalty_init",
    "admm_penalty_scale",
    "admm_penalty_max",
    "reliable_mask",
];

impl TrackerConfig {
    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return fail(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if self.num_scales == 0 || self.num_scales.is_multiple_of(2) {
            return fail(format!("num_scales must be odd and >= 1, got {}", self.num_scales));
        }
        if !(self.scale_step > 1.0 && self.scale_step.is_finite()) {
            return fail(format!("scale_step must be > 1, got {}", self.scale_step));
        }
        if self.cell_size == 0 {
            return fail("cell_size must be >= 1".into());
        }
        if !(self.proposal_ratio > 0.0 && self.proposal_ratio < 1.0) {
            return fail(format!("proposal_ratio must lie in (0, 1), got {}", self.proposal_ratio));
        }
        if !(self.ratio_tolerance > 0.0) {
            return fail(format!("ratio_tolerance must be > 0, got {}", self.ratio_tolerance));
        }
        if !(self.area_threshold > 0.0 && self.area_threshold < 1.0) {
            return fail(format!("area_threshold must lie in (0, 1), got {}", self.area_threshold));
        }
        if !(self.search_padding > 0.0 && self.search_padding.is_finite()) {
            return fail(format!("search_padding must be > 0, got {}", self.search_padding));
        }
        if self.admm_iterations == 0 {
            return fail("admm_iterations must be >= 1".into());
        }
        if !(self.admm_penalty_init > 0.0
            && self.admm_penalty_scale >= 1.0
            && self.admm_penalty_max >= self.admm_penalty_init)
        {
            return fail(format!(
                "admm penalty schedule needs init > 0, scale >= 1, max >= init (got {}, {}, {})",
                self.admm_penalty_init, self.admm_penalty_scale, self.admm_penalty_max
            ));
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
        }
        match key {
            "lambda" => self.lambda = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "num_scales" => self.num_scales = num(key, value)?,
            "scale_step" => self.scale_step = num(key, value)?,
            "cell_size" => self.cell_size = num(key, value)?,
            "proposal_ratio" => self.proposal_ratio = num(key, value)?,
            "ratio_tolerance" => self.ratio_tolerance = num(key, value)?,
            "area_threshold" => self.area_threshold = num(key, value)?,
            "search_padding" => self.search_padding = num(key, value)?,
            "admm_iterations" => self.admm_iterations = num(key, value)?,
            "admm_penalty_init" => self.admm_penalty_init = num(key, value)?,
            "admm_penalty_scale" => self.admm_penalty_scale = num(key, value)?,
            "admm_penalty_max" => self.admm_penalty_max = num(key, value)?,
            "reliable_mask" => self.reliable_mask = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = default_config();
        cfg.apply(text)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        let cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = self;
        for (k, v) in [
            ("lambda", c.lambda.to_string()),
            ("eta", c.eta.to_string()),
            ("num_scales", c.num_scales.to_string()),
            ("scale_step", c.scale_step.to_string()),
            ("cell_size", c.cell_size.to_string()),
            ("proposal_ratio", c.proposal_ratio.to_string()),
            ("ratio_tolerance", c.ratio_tolerance.to_string()),
            ("area_threshold", c.area_threshold.to_string()),
            ("search_padding", c.search_padding.to_string()),
            ("admm_iterations", c.admm_iterations.to_string()),
            ("admm_penalty_init", c.admm_penalty_init.to_string()),
            ("admm_penalty_scale", c.admm_penalty_scale.to_string()),
            ("admm_penalty_max", c.admm_penalty_max.to_string()),
            ("reliable_mask", c.reliable_mask.to_string()),
        ] {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
