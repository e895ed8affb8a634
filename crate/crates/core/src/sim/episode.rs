//! Dual-rate closed-loop episode: the plant is integrated at `dt_plant` with
//! the control value held over each `dt_control` interval.

use serde::{Deserialize, Serialize};

use crate::controller::{
    self, ControllerParams, Reference, SlidingModeController, SwitchingLaw, TrackingError,
};
use crate::error::{ParamError, SimError, SimResult};
use crate::plant::{self, PlantParams, PlantState};
use crate::rbf::{self, RbfNetwork, TargetMode, TrainingReport, TrainingSample, TrainingSet};
use crate::sim::reference::SineReference;
use crate::sim::rk4::rk4_step;

/// Record flag bits.
pub mod flags {
    /// The plant input gain hit the square-root clamp during the hold interval.
    pub const GAIN_CLAMPED: u32 = 1;
    /// `b_hat` was raised to its floor.
    pub const B_HAT_FLOORED: u32 = 2;
    /// The network was (re)trained right before this sample.
    pub const TRAINED: u32 = 4;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt_plant: f64,
    pub dt_control: f64,
    /// End of the data-collection phase; the network is trained here.
    pub t_train: f64,
    pub initial_state: PlantState,
    pub compensation: bool,
    pub target_mode: TargetMode,
    /// Retrain on the latest interval's samples every this many seconds
    /// after `t_train`.
    pub retrain_interval: Option<f64>,
    pub reference: SineReference,
    pub law: SwitchingLaw,
    /// Seed for randomized batch orchestration; a single episode draws no
    /// random numbers.
    pub seed: u64,
    pub divergence_limit: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 100.0,
            dt_plant: 1e-3,
            dt_control: 2e-3,
            t_train: 50.0,
            initial_state: PlantState::default(),
            compensation: true,
            target_mode: TargetMode::Residual,
            retrain_interval: None,
            reference: SineReference::default(),
            law: SwitchingLaw::Saturation,
            seed: 0,
            divergence_limit: 1e6,
        }
    }
}

const RATE_TOLERANCE: f64 = 1e-9;

impl SimConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("t_end", self.t_end),
            ("dt_plant", self.dt_plant),
            ("dt_control", self.dt_control),
            ("divergence_limit", self.divergence_limit),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::new(
                    key,
                    format!("must be positive, got {value}"),
                ));
            }
        }
        let ratio = self.dt_control / self.dt_plant;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > RATE_TOLERANCE * ratio {
            return Err(ParamError::new(
                "dt_control",
                format!(
                    "must be an integer multiple of dt_plant = {}, got {}",
                    self.dt_plant, self.dt_control
                ),
            ));
        }
        let steps = self.t_end / self.dt_control;
        if (steps - steps.round()).abs() > RATE_TOLERANCE * steps.max(1.0) {
            return Err(ParamError::new(
                "t_end",
                format!("must be a multiple of dt_control = {}", self.dt_control),
            ));
        }
        if !(self.t_train.is_finite() && self.t_train >= 0.0 && self.t_train <= self.t_end) {
            return Err(ParamError::new(
                "t_train",
                format!("must lie in [0, t_end], got {}", self.t_train),
            ));
        }
        if let Some(interval) = self.retrain_interval {
            if !(interval.is_finite() && interval > 0.0) {
                return Err(ParamError::new(
                    "retrain_interval",
                    format!("must be positive, got {interval}"),
                ));
            }
        }
        if !self.initial_state.is_finite() {
            return Err(ParamError::new("initial_x", "initial state must be finite"));
        }
        for (key, value) in [
            ("reference_amplitude", self.reference.amplitude),
            ("reference_omega", self.reference.omega),
        ] {
            if !value.is_finite() {
                return Err(ParamError::new(key, "must be finite"));
            }
        }
        Ok(())
    }

    /// Plant steps per control sample.
    pub fn hold_steps(&self) -> usize {
        (self.dt_control / self.dt_plant).round() as usize
    }

    /// Number of control intervals; the log holds one more record.
    pub fn control_steps(&self) -> usize {
        (self.t_end / self.dt_control).round() as usize
    }
}

/// One control sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub state: PlantState,
    pub reference: Reference,
    pub err: TrackingError,
    pub s: f64,
    pub s_phi: f64,
    pub u: f64,
    pub u_eq: f64,
    pub gain: f64,
    pub b_hat: f64,
    pub d_hat: f64,
    /// Plant-side `d(u)`; never seen by the controller.
    pub d_true: f64,
    /// Central-difference estimate of `x'''` at this sample.
    pub jerk: Option<f64>,
    pub flags: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingEvent {
    pub t: f64,
    pub report: TrainingReport,
    /// Samples dropped by target construction.
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub records: Vec<StepRecord>,
    pub dt_control: f64,
    pub lambda: f64,
    pub phi: f64,
    pub eta: f64,
    pub trainings: Vec<TrainingEvent>,
}

impl EpisodeLog {
    /// Index of the first record inside the boundary layer.
    pub fn reach_index(&self) -> Option<usize> {
        self.records.iter().position(|r| r.s_phi == 0.0)
    }

    pub fn reach_time(&self) -> Option<f64> {
        self.reach_index().map(|i| self.records[i].t)
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub log: EpisodeLog,
    /// Network as it stands at the end of the episode.
    pub network: RbfNetwork,
}

fn training_set(
    records: &[StepRecord],
    cp: &ControllerParams,
    mode: TargetMode,
) -> (TrainingSet, usize) {
    let mut set = TrainingSet::default();
    let mut rejected = 0;
    for r in records {
        let sample = TrainingSample {
            state: r.state,
            reference: r.reference,
            u: r.u,
            d_hat: r.d_hat,
            b_hat: r.b_hat,
            jerk: r.jerk,
            saturated: r.flags & flags::GAIN_CLAMPED != 0,
        };
        match rbf::training_target(&sample, cp, mode) {
            Ok(target) => set.push(r.err, target),
            Err(_) => rejected += 1,
        }
    }
    (set, rejected)
}

/// Runs one closed-loop episode.
///
/// Before `t_train` the controller runs with `d_hat = 0` while samples are
/// collected; at `t_train` the network is fitted to those samples and, with
/// compensation enabled, its clamped output is fed to the controller from
/// then on. Deterministic for fixed inputs.
pub fn run_episode(
    cfg: &SimConfig,
    pp: &PlantParams,
    cp: &ControllerParams,
    net: &RbfNetwork,
) -> SimResult<Episode> {
    cfg.validate()?;
    pp.validate()?;
    cp.validate()?;

    let steps = cfg.control_steps();
    let hold = cfg.hold_steps();
    let dt_c = cfg.dt_control;
    let dt_p = cfg.dt_plant;

    let mut network = net.clone();
    let mut trained = false;
    let mut next_training = if cfg.compensation && cfg.t_train < cfg.t_end {
        Some(cfg.t_train)
    } else {
        None
    };
    let mut window_start = 0;
    let mut trainings = Vec::new();

    let mut ctrl = SlidingModeController::new(cp.clone(), pp.clone(), cfg.law);
    let mut state = cfg.initial_state;
    let mut acc_before: Option<f64> = None;
    let mut records: Vec<StepRecord> = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = k as f64 * dt_c;
        let mut record_flags = 0;

        if let Some(at) = next_training {
            // small slack so float time stamps land on the intended sample
            if t >= at - 0.5 * dt_c {
                let (set, rejected) = training_set(&records[window_start..], cp, cfg.target_mode);
                if !set.is_empty() {
                    let report =
                        network
                            .train_least_squares(&set)
                            .map_err(|e| SimError::Training {
                                t,
                                reason: e.to_string(),
                            })?;
                    trainings.push(TrainingEvent {
                        t,
                        report,
                        rejected,
                    });
                    trained = true;
                    record_flags |= flags::TRAINED;
                }
                window_start = records.len();
                next_training = cfg
                    .retrain_interval
                    .map(|dt| at + dt)
                    .filter(|n| *n < cfg.t_end);
            }
        }

        let reference = cfg.reference.at(t);
        let err = TrackingError::between(&state, &reference);
        let d_hat = if cfg.compensation && trained {
            network.predict_clamped(&err, cp.delta)
        } else {
            0.0
        };
        let out = ctrl.update(&state, &reference, d_hat);
        if out.floored {
            record_flags |= flags::B_HAT_FLOORED;
        }
        let mut record = StepRecord {
            t,
            state,
            reference,
            err,
            s: out.s,
            s_phi: controller::boundary_distance(out.s, cp.phi),
            u: out.u,
            u_eq: out.u_eq,
            gain: out.gain,
            b_hat: out.b_hat,
            d_hat,
            d_true: plant::dead_zone_decompose(out.u, pp).d,
            jerk: None,
            flags: record_flags,
        };
        if k == steps {
            records.push(record);
            break;
        }

        let acc_minus = acc_before.take();
        let u = out.u;
        let mut clamped = false;
        for j in 0..hold {
            let tj = t + j as f64 * dt_p;
            if j + 1 == hold {
                acc_before = Some(state.acc);
            }
            let field = |tt: f64, y: &[f64; 3]| {
                let rate = plant::plant_derivative(&PlantState::from_array(*y), u, tt, pp);
                clamped |= rate.gain.saturated;
                rate.rate
            };
            state = PlantState::from_array(rk4_step(field, &state.to_array(), tj, dt_p)?);
            if state.x.abs() > cfg.divergence_limit {
                return Err(SimError::Diverged {
                    t: tj + dt_p,
                    x: state.x,
                    limit: cfg.divergence_limit,
                });
            }
            if j == 0 {
                record.jerk = acc_minus.map(|a| (state.acc - a) / (2.0 * dt_p));
            }
        }
        if clamped {
            record.flags |= flags::GAIN_CLAMPED;
        }
        records.push(record);
    }

    Ok(Episode {
        log: EpisodeLog {
            records,
            dt_control: dt_c,
            lambda: cp.lambda,
            phi: cp.phi,
            eta: cp.eta,
            trainings,
        },
        network,
    })
}

/// Neurons per error axis in the default grid.
pub const DEFAULT_RBF_PER_AXIS: usize = 2;
/// Default grid half-extent in units of the steady-state error box; with two
/// neurons per axis the centers sit on the box corners.
pub const DEFAULT_RBF_SPAN: f64 = 1.0;

/// A `per_axis^3` grid over the steady-state error box scaled by `span`.
pub fn default_network(cp: &ControllerParams, per_axis: usize, span: f64) -> RbfNetwork {
    RbfNetwork::grid(per_axis, cp.error_box(), span).expect("grid layout with per_axis >= 1")
}
