//! Flat `key = value` run configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::controller::{ControllerParams, SwitchingLaw};
use crate::error::ParamError;
use crate::plant::{self, DeadZoneShape, PlantParams, PlantState, PressureRipple};
use crate::rbf::{RbfNetwork, TargetMode};
use crate::sim::{SimConfig, DEFAULT_RBF_PER_AXIS, DEFAULT_RBF_SPAN};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot parse `{key}`: {reason}")]
    Value {
        line: usize,
        key: String,
        reason: String,
    },
    #[error(transparent)]
    Invalid(#[from] ParamError),
}

impl ConfigError {
    /// Config key the error is about, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::UnknownKey { key, .. }
            | Self::DuplicateKey { key, .. }
            | Self::Value { key, .. } => Some(key),
            Self::Invalid(e) => Some(e.key),
            Self::Read { .. } | Self::Syntax { .. } => None,
        }
    }
}

/// Everything one `run`, `compare` or `check` invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: PlantParams,
    pub controller: ControllerParams,
    pub sim: SimConfig,
    pub rbf_per_axis: usize,
    pub rbf_span: f64,
    /// Window for the RMS(s) comparison.
    pub improvement_window: (f64, f64),
    /// Pass threshold for RMS(s) with / without compensation.
    pub improvement_ratio: f64,
    /// Initial position offset from the reference for the reaching check [m].
    pub reach_offset: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plant = PlantParams::default();
        let controller = ControllerParams::nominal(&plant);
        Self {
            plant,
            controller,
            sim: SimConfig::default(),
            rbf_per_axis: DEFAULT_RBF_PER_AXIS,
            rbf_span: DEFAULT_RBF_SPAN,
            improvement_window: (60.0, 100.0),
            improvement_ratio: 0.5,
            reach_offset: 0.05,
            out_dir: PathBuf::from("out"),
        }
    }
}

pub const KEYS: &[&str] = &[
    // plant
    "rho",
    "c_d",
    "w",
    "a_p",
    "c_tp",
    "beta_e",
    "v_t",
    "m_t",
    "b_t",
    "k_s",
    "p_s_nominal",
    "p_s_variation",
    "p_s_ripple",
    "delta_l",
    "delta_r",
    "k_l",
    "k_r",
    "dead_zone",
    // controller
    "lambda",
    "phi",
    "eta",
    "gamma",
    "delta",
    "alpha_ratio",
    "alpha_cap",
    "a_hat0",
    "a_hat1",
    "a_hat2",
    "k_v_hat",
    "p_s_hat",
    "b_hat_floor_ratio",
    // simulation
    "t_end",
    "dt_plant",
    "dt_control",
    "t_train",
    "initial_x",
    "initial_v",
    "initial_acc",
    "compensation",
    "target_mode",
    "retrain_interval",
    "reference_amplitude",
    "reference_omega",
    "switching_law",
    "seed",
    "divergence_limit",
    // network and report
    "rbf_per_axis",
    "rbf_span",
    "improvement_start",
    "improvement_end",
    "improvement_ratio",
    "reach_offset",
    "out_dir",
];

fn parse_word<T>(value: &str, choices: &[(&str, T)]) -> Result<T, String>
where
    T: Copy,
{
    choices
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(value))
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<_> = choices.iter().map(|(n, _)| *n).collect();
            format!("expected one of {}, got `{value}`", names.join(", "))
        })
}

fn parse_num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("`{value}`: {e}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses and validates. Blank lines and `#` comments are ignored; an
    /// empty document yields the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut a_hat_given = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            a_hat_given |= key.starts_with("a_hat");
            cfg.set(key, value).map_err(|reason| ConfigError::Value {
                line,
                key: key.to_string(),
                reason,
            })?;
        }
        if !a_hat_given {
            cfg.controller.a_hat = plant::plant_coefficients(&cfg.plant);
        } else {
            // unspecified entries still follow the plant
            let a = plant::plant_coefficients(&cfg.plant);
            for (k, key) in ["a_hat0", "a_hat1", "a_hat2"].into_iter().enumerate() {
                if !seen.contains(key) {
                    cfg.controller.a_hat[k] = a[k];
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let p = &mut self.plant;
        let c = &mut self.controller;
        let s = &mut self.sim;
        match key {
            "rho" => p.rho = parse_num(v)?,
            "c_d" => p.c_d = parse_num(v)?,
            "w" => p.w = parse_num(v)?,
            "a_p" => p.a_p = parse_num(v)?,
            "c_tp" => p.c_tp = parse_num(v)?,
            "beta_e" => p.beta_e = parse_num(v)?,
            "v_t" => p.v_t = parse_num(v)?,
            "m_t" => p.m_t = parse_num(v)?,
            "b_t" => p.b_t = parse_num(v)?,
            "k_s" => p.k_s = parse_num(v)?,
            "p_s_nominal" => p.p_s_nominal = parse_num(v)?,
            "p_s_variation" => p.p_s_variation = parse_num(v)?,
            "p_s_ripple" => {
                p.p_s_ripple = parse_word(
                    v,
                    &[
                        ("displacement", PressureRipple::Displacement),
                        ("time", PressureRipple::Time),
                    ],
                )?
            }
            "delta_l" => p.delta_l = parse_num(v)?,
            "delta_r" => p.delta_r = parse_num(v)?,
            "k_l" => p.k_l = parse_num(v)?,
            "k_r" => p.k_r = parse_num(v)?,
            "dead_zone" => {
                p.dead_zone = parse_word(
                    v,
                    &[
                        ("nonlinear", DeadZoneShape::Nonlinear),
                        ("linear", DeadZoneShape::Linear),
                    ],
                )?
            }
            "lambda" => c.lambda = parse_num(v)?,
            "phi" => c.phi = parse_num(v)?,
            "eta" => c.eta = parse_num(v)?,
            "gamma" => c.gamma = parse_num(v)?,
            "delta" => c.delta = parse_num(v)?,
            "alpha_ratio" => c.alpha_ratio = parse_num(v)?,
            "alpha_cap" => c.alpha_cap = parse_num(v)?,
            "a_hat0" => c.a_hat[0] = parse_num(v)?,
            "a_hat1" => c.a_hat[1] = parse_num(v)?,
            "a_hat2" => c.a_hat[2] = parse_num(v)?,
            "k_v_hat" => c.k_v_hat = parse_num(v)?,
            "p_s_hat" => c.p_s_hat = parse_num(v)?,
            "b_hat_floor_ratio" => c.b_hat_floor_ratio = parse_num(v)?,
            "t_end" => s.t_end = parse_num(v)?,
            "dt_plant" => s.dt_plant = parse_num(v)?,
            "dt_control" => s.dt_control = parse_num(v)?,
            "t_train" => s.t_train = parse_num(v)?,
            "initial_x" => s.initial_state.x = parse_num(v)?,
            "initial_v" => s.initial_state.v = parse_num(v)?,
            "initial_acc" => s.initial_state.acc = parse_num(v)?,
            "compensation" => {
                s.compensation = parse_word(
                    v,
                    &[
                        ("enabled", true),
                        ("disabled", false),
                        ("true", true),
                        ("false", false),
                    ],
                )?
            }
            "target_mode" => {
                s.target_mode = parse_word(
                    v,
                    &[("residual", TargetMode::Residual), ("nu", TargetMode::Nu)],
                )?
            }
            "retrain_interval" => {
                s.retrain_interval = if v.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse_num(v)?)
                }
            }
            "reference_amplitude" => s.reference.amplitude = parse_num(v)?,
            "reference_omega" => s.reference.omega = parse_num(v)?,
            "switching_law" => {
                s.law = parse_word(
                    v,
                    &[
                        ("saturation", SwitchingLaw::Saturation),
                        ("sign", SwitchingLaw::Sign),
                    ],
                )?
            }
            "seed" => s.seed = parse_num(v)?,
            "divergence_limit" => s.divergence_limit = parse_num(v)?,
            "rbf_per_axis" => self.rbf_per_axis = parse_num(v)?,
            "rbf_span" => self.rbf_span = parse_num(v)?,
            "improvement_start" => self.improvement_window.0 = parse_num(v)?,
            "improvement_end" => self.improvement_window.1 = parse_num(v)?,
            "improvement_ratio" => self.improvement_ratio = parse_num(v)?,
            "reach_offset" => self.reach_offset = parse_num(v)?,
            "out_dir" => {
                if v.is_empty() {
                    return Err("must not be empty".into());
                }
                self.out_dir = PathBuf::from(v)
            }
            _ => unreachable!("key list and setter out of sync: {key}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.plant.validate()?;
        self.controller.validate()?;
        self.sim.validate()?;
        if self.rbf_per_axis == 0 {
            return Err(ParamError::new("rbf_per_axis", "must be at least 1"));
        }
        if !(self.rbf_span.is_finite() && self.rbf_span > 0.0) {
            return Err(ParamError::new(
                "rbf_span",
                format!("must be positive, got {}", self.rbf_span),
            ));
        }
        let (a, b) = self.improvement_window;
        if !(a.is_finite() && a >= 0.0) {
            return Err(ParamError::new(
                "improvement_start",
                format!("must be non-negative, got {a}"),
            ));
        }
        if !(b.is_finite() && b > a && b <= self.sim.t_end) {
            return Err(ParamError::new(
                "improvement_end",
                format!("must lie in (improvement_start, t_end], got {b}"),
            ));
        }
        if !(self.improvement_ratio.is_finite() && self.improvement_ratio > 0.0) {
            return Err(ParamError::new(
                "improvement_ratio",
                format!("must be positive, got {}", self.improvement_ratio),
            ));
        }
        if !self.reach_offset.is_finite() {
            return Err(ParamError::new("reach_offset", "must be finite"));
        }
        Ok(())
    }

    pub fn network(&self) -> RbfNetwork {
        crate::sim::default_network(&self.controller, self.rbf_per_axis, self.rbf_span)
    }

    /// Same scenario with the compensator switched off.
    pub fn without_compensation(&self) -> SimConfig {
        SimConfig {
            compensation: false,
            ..self.sim.clone()
        }
    }

    /// Uncompensated scenario started `reach_offset` away from the reference
    /// with matched velocity and acceleration.
    pub fn offset_start(&self) -> SimConfig {
        let r = self.sim.reference.at(0.0);
        SimConfig {
            initial_state: PlantState::new(r.xd + self.reach_offset, r.dxd, r.ddxd),
            ..self.without_compensation()
        }
    }
}
