//! Flat key = value run configuration.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse {key} value {value:?}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("invariant violated: {0}")]
    Invalid(String),
}

/// All tunables of a run. Lengths in metres, angles in degrees, z_switch in
/// metres.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub wavelength: f64,
    pub packet_waist: f64,
    pub slit_separation: f64,
    pub plane_min: f64,
    pub plane_max: f64,
    pub plane_count: usize,
    pub zeta: f64,
    pub phi0: f64,
    pub beta: f64,
    /// Kernel-regression bandwidth in units of the detector pixel pitch.
    pub kernel_bandwidth_px: f64,
    pub photon_budget: f64,
    pub theta_list_deg: Vec<f64>,
    pub z_switch_list: Vec<f64>,
    pub seed: u64,
    pub trajectories_per_packet: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            wavelength: 808e-9,
            packet_waist: 3e-4,
            slit_separation: 3e-3,
            plane_min: 1.492,
            plane_max: 4.500,
            plane_count: 45,
            zeta: 336.0,
            phi0: 0.0,
            beta: 1.0,
            kernel_bandwidth_px: 1.0,
            photon_budget: 1e7,
            theta_list_deg: vec![18.5, 31.4, 45.1, 62.9],
            z_switch_list: vec![1.492, 2.245, 3.038, 3.749],
            seed: 1,
            trajectories_per_packet: 16,
        }
    }
}

impl ExperimentConfig {
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("wavelength", self.wavelength),
            ("packet_waist", self.packet_waist),
            ("slit_separation", self.slit_separation),
            ("zeta", self.zeta),
            ("beta", self.beta),
            ("kernel_bandwidth_px", self.kernel_bandwidth_px),
            ("photon_budget", self.photon_budget),
        ];
        for (name, v) in positive {
            if !crate::positive(v) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.plane_min.is_finite() || !self.plane_max.is_finite() {
            return Err(ConfigError::Invalid("plane range must be finite".into()));
        }
        if self.plane_max <= self.plane_min {
            return Err(ConfigError::Invalid(format!(
                "plane_max must exceed plane_min ({} <= {})",
                self.plane_max, self.plane_min
            )));
        }
        if self.plane_count < 2 {
            return Err(ConfigError::Invalid(format!(
                "plane_count must be at least 2, got {}",
                self.plane_count
            )));
        }
        if !self.phi0.is_finite() {
            return Err(ConfigError::Invalid("phi0 must be finite".into()));
        }
        if self.theta_list_deg.is_empty() {
            return Err(ConfigError::Invalid("theta_list must be nonempty".into()));
        }
        for &theta in &self.theta_list_deg {
            if !(0.0..180.0).contains(&theta) {
                return Err(ConfigError::Invalid(format!(
                    "theta must lie in [0, 180) degrees, got {theta}"
                )));
            }
        }
        for &z in &self.z_switch_list {
            if z < self.plane_min || z > self.plane_max {
                return Err(ConfigError::Invalid(format!(
                    "z_switch {z} outside plane range [{}, {}]",
                    self.plane_min, self.plane_max
                )));
            }
        }
        if self.trajectories_per_packet == 0 {
            return Err(ConfigError::Invalid(
                "trajectories_per_packet must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let f = |cfg_key: &str| parse_f64(line, cfg_key, value);
            match key {
                "wavelength" => config.wavelength = f(key)?,
                "packet_waist" => config.packet_waist = f(key)?,
                "slit_separation" => config.slit_separation = f(key)?,
                "plane_min" => config.plane_min = f(key)?,
                "plane_max" => config.plane_max = f(key)?,
                "plane_count" => config.plane_count = parse_usize(line, key, value)?,
                "zeta" => config.zeta = f(key)?,
                "phi0" => config.phi0 = f(key)?,
                "beta" => config.beta = f(key)?,
                "kernel_bandwidth_px" => config.kernel_bandwidth_px = f(key)?,
                "photon_budget" => config.photon_budget = f(key)?,
                "theta_list" => config.theta_list_deg = parse_list(line, key, value)?,
                "z_switch_list" => config.z_switch_list = parse_list(line, key, value)?,
                "seed" => {
                    config.seed = value.parse().map_err(|e| ConfigError::BadValue {
                        line,
                        key: key.into(),
                        value: value.into(),
                        reason: format!("{e}"),
                    })?
                }
                "trajectories_per_packet" => {
                    config.trajectories_per_packet = parse_usize(line, key, value)?
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.into(),
                    })
                }
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|e| ConfigError::BadValue {
        line,
        key: key.into(),
        value: value.into(),
        reason: format!("{e}"),
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|e| ConfigError::BadValue {
        line,
        key: key.into(),
        value: value.into(),
        reason: format!("{e}"),
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_f64(line, key, part.trim()))
        .collect()
}
