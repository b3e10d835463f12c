//! Flat `key = value` pipeline configuration.
//!
//! Every tunable of the segmentation and free-space pipelines has a key
//! here with its default; `to_text` writes the complete set so a dumped
//! config round-trips. Lines starting with `#` and blank lines are ignored.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evolve::EvolveOptions;
use crate::forces::{EvolutionParams, DEFAULT_GRADIENT_REF};

/// Which edge map feeds the diffusion function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeDetector {
    /// Smoothed gradient magnitude raised to `edge_power`.
    Gradient,
    /// Binary Canny edges with hysteresis thresholds.
    Canny,
}

/// Complete pipeline configuration with library defaults.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub degree: usize,
    pub n_patches: usize,
    /// Initial circle center; `None` = image center.
    pub init_center_x: Option<f64>,
    pub init_center_y: Option<f64>,
    /// Initial circle radius; `None` = 12% of the smaller image dimension.
    pub init_radius: Option<f64>,

    pub sigma: f64,
    pub edge_power: u32,
    pub gradient_ref: f64,
    pub edge_detector: EdgeDetector,
    pub canny_low: f64,
    pub canny_high: f64,

    pub step: f64,
    pub edge_stop: f64,
    pub samples_per_patch: usize,
    pub move_eps: f64,
    pub steady_fraction: f64,
    pub max_iters: u32,

    pub refine_enabled: bool,
    pub split_epsilon: f64,
    pub merge_enabled: bool,
    pub merge_epsilon: f64,
    pub topology_enabled: bool,

    pub eps_alt: f64,
    pub harris_sigma: f64,
    pub harris_k: f64,
    pub harris_threshold: f64,
    pub match_window: usize,
    pub match_max_disp: f64,
    pub match_min_correlation: f64,

    /// Emit a snapshot every k iterations (0 = off).
    pub snapshot_every: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            degree: 3,
            n_patches: 8,
            init_center_x: None,
            init_center_y: None,
            init_radius: None,
            sigma: 2.0,
            edge_power: 2,
            gradient_ref: DEFAULT_GRADIENT_REF,
            edge_detector: EdgeDetector::Gradient,
            canny_low: 0.1,
            canny_high: 0.3,
            step: 1.0,
            edge_stop: 0.15,
            samples_per_patch: 4,
            move_eps: 0.1,
            steady_fraction: 0.98,
            max_iters: 2000,
            refine_enabled: true,
            split_epsilon: 40.0,
            merge_enabled: false,
            merge_epsilon: 8.0,
            topology_enabled: true,
            eps_alt: 0.05,
            harris_sigma: 1.5,
            harris_k: 0.06,
            harris_threshold: 0.01,
            match_window: 3,
            match_max_disp: 30.0,
            match_min_correlation: 0.8,
            snapshot_every: 0,
        }
    }
}

impl PipelineConfig {
    /// Parse a flat key=value document on top of the defaults. Unknown keys
    /// are errors so typos do not silently fall back.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, e)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        fn opt(key: &str, value: &str) -> Result<Option<f64>> {
            if value == "auto" {
                Ok(None)
            } else {
                num::<f64>(key, value).map(Some)
            }
        }
        fn boolean(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean {value:?} for {key}"))),
            }
        }
        match key {
            "degree" => self.degree = num(key, value)?,
            "n_patches" => self.n_patches = num(key, value)?,
            "init_center_x" => self.init_center_x = opt(key, value)?,
            "init_center_y" => self.init_center_y = opt(key, value)?,
            "init_radius" => self.init_radius = opt(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "edge_power" => self.edge_power = num(key, value)?,
            "gradient_ref" => self.gradient_ref = num(key, value)?,
            "edge_detector" => {
                self.edge_detector = match value {
                    "gradient" => EdgeDetector::Gradient,
                    "canny" => EdgeDetector::Canny,
                    _ => return Err(Error::Config(format!("unknown edge detector {value:?}"))),
                }
            }
            "canny_low" => self.canny_low = num(key, value)?,
            "canny_high" => self.canny_high = num(key, value)?,
            "step" => self.step = num(key, value)?,
            "edge_stop" => self.edge_stop = num(key, value)?,
            "samples_per_patch" => self.samples_per_patch = num(key, value)?,
            "move_eps" => self.move_eps = num(key, value)?,
            "steady_fraction" => self.steady_fraction = num(key, value)?,
            "max_iters" => self.max_iters = num(key, value)?,
            "refine_enabled" => self.refine_enabled = boolean(key, value)?,
            "split_epsilon" => self.split_epsilon = num(key, value)?,
            "merge_enabled" => self.merge_enabled = boolean(key, value)?,
            "merge_epsilon" => self.merge_epsilon = num(key, value)?,
            "topology_enabled" => self.topology_enabled = boolean(key, value)?,
            "eps_alt" => self.eps_alt = num(key, value)?,
            "harris_sigma" => self.harris_sigma = num(key, value)?,
            "harris_k" => self.harris_k = num(key, value)?,
            "harris_threshold" => self.harris_threshold = num(key, value)?,
            "match_window" => self.match_window = num(key, value)?,
            "match_max_disp" => self.match_max_disp = num(key, value)?,
            "match_min_correlation" => self.match_min_correlation = num(key, value)?,
            "snapshot_every" => self.snapshot_every = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::Config("degree must be >= 1".into()));
        }
        if self.n_patches < 3 {
            return Err(Error::Config("n_patches must be >= 3".into()));
        }
        if self.samples_per_patch != self.degree + 1 {
            return Err(Error::Config(format!(
                "samples_per_patch must equal degree + 1 = {}",
                self.degree + 1
            )));
        }
        self.evolution_params().validate()?;
        Ok(())
    }

    /// Dump every key with its current value.
    pub fn to_text(&self) -> String {
        fn auto(v: Option<f64>) -> String {
            v.map_or_else(|| "auto".to_string(), |x| x.to_string())
        }
        let mut s = String::new();
        let _ = writeln!(s, "degree = {}", self.degree);
        let _ = writeln!(s, "n_patches = {}", self.n_patches);
        let _ = writeln!(s, "init_center_x = {}", auto(self.init_center_x));
        let _ = writeln!(s, "init_center_y = {}", auto(self.init_center_y));
        let _ = writeln!(s, "init_radius = {}", auto(self.init_radius));
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "edge_power = {}", self.edge_power);
        let _ = writeln!(s, "gradient_ref = {}", self.gradient_ref);
        let _ = writeln!(
            s,
            "edge_detector = {}",
            match self.edge_detector {
                EdgeDetector::Gradient => "gradient",
                EdgeDetector::Canny => "canny",
            }
        );
        let _ = writeln!(s, "canny_low = {}", self.canny_low);
        let _ = writeln!(s, "canny_high = {}", self.canny_high);
        let _ = writeln!(s, "step = {}", self.step);
        let _ = writeln!(s, "edge_stop = {}", self.edge_stop);
        let _ = writeln!(s, "samples_per_patch = {}", self.samples_per_patch);
        let _ = writeln!(s, "move_eps = {}", self.move_eps);
        let _ = writeln!(s, "steady_fraction = {}", self.steady_fraction);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "refine_enabled = {}", self.refine_enabled);
        let _ = writeln!(s, "split_epsilon = {}", self.split_epsilon);
        let _ = writeln!(s, "merge_enabled = {}", self.merge_enabled);
        let _ = writeln!(s, "merge_epsilon = {}", self.merge_epsilon);
        let _ = writeln!(s, "topology_enabled = {}", self.topology_enabled);
        let _ = writeln!(s, "eps_alt = {}", self.eps_alt);
        let _ = writeln!(s, "harris_sigma = {}", self.harris_sigma);
        let _ = writeln!(s, "harris_k = {}", self.harris_k);
        let _ = writeln!(s, "harris_threshold = {}", self.harris_threshold);
        let _ = writeln!(s, "match_window = {}", self.match_window);
        let _ = writeln!(s, "match_max_disp = {}", self.match_max_disp);
        let _ = writeln!(s, "match_min_correlation = {}", self.match_min_correlation);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        s
    }

    pub fn evolution_params(&self) -> EvolutionParams {
        EvolutionParams {
            step: self.step,
            edge_stop: self.edge_stop,
            samples_per_patch: self.samples_per_patch,
            move_eps: self.move_eps,
            steady_fraction: self.steady_fraction,
            max_iters: self.max_iters,
        }
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            params: self.evolution_params(),
            split_epsilon: self.split_epsilon,
            refine_enabled: self.refine_enabled,
            topology_enabled: self.topology_enabled,
            merge_epsilon: if self.merge_enabled { Some(self.merge_epsilon) } else { None },
        }
    }
}
