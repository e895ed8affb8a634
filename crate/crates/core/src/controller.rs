//! Smooth sliding-mode tracking controller.
//!
//! The law is `u = u_eq + d_hat - K sat(s / phi)` with the sliding variable
//! `s = e'' + 2 lambda e' + lambda^2 e` and the gain
//! `K = gamma (eta + alpha) / b_hat + delta + |d_hat| + (gamma - 1) |u_eq|`.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::plant::{self, PlantParams, PlantState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Surface bandwidth [1/s]
    pub lambda: f64,
    /// Boundary-layer thickness
    pub phi: f64,
    /// Reaching-rate constant
    pub eta: f64,
    /// Gain-ratio bound `sqrt(b_max / b_min)`
    pub gamma: f64,
    /// Dead-band bound [V]
    pub delta: f64,
    /// Mismatch bound is `alpha_ratio * |a_hat . x|` ...
    pub alpha_ratio: f64,
    /// ... capped at this value.
    pub alpha_cap: f64,
    pub a_hat: [f64; 3],
    /// Estimated dead-zone slope [m/V]
    pub k_v_hat: f64,
    /// Estimated supply pressure [Pa]
    pub p_s_hat: f64,
    /// `b_hat` never drops below this fraction of its zero-load value.
    pub b_hat_floor_ratio: f64,
}

impl ControllerParams {
    /// Tuning used for the reference scenario, with `a_hat` taken from the
    /// nominal plant.
    pub fn nominal(plant: &PlantParams) -> Self {
        Self {
            lambda: 8.0,
            phi: 1.0,
            eta: 0.1,
            gamma: 1.2,
            delta: 1.1,
            alpha_ratio: 0.05,
            alpha_cap: 100.0,
            a_hat: plant::plant_coefficients(plant),
            k_v_hat: 2e-6,
            p_s_hat: 7e6,
            b_hat_floor_ratio: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |key, value: f64, ok: bool, what: &str| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(ParamError::new(key, format!("{what}, got {value}")))
            }
        };
        check("lambda", self.lambda, self.lambda > 0.0, "must be positive")?;
        check("phi", self.phi, self.phi > 0.0, "must be positive")?;
        check("eta", self.eta, self.eta > 0.0, "must be positive")?;
        check("gamma", self.gamma, self.gamma >= 1.0, "must be at least 1")?;
        check(
            "delta",
            self.delta,
            self.delta >= 0.0,
            "must be non-negative",
        )?;
        check(
            "alpha_ratio",
            self.alpha_ratio,
            self.alpha_ratio >= 0.0,
            "must be non-negative",
        )?;
        check(
            "alpha_cap",
            self.alpha_cap,
            self.alpha_cap >= 0.0,
            "must be non-negative",
        )?;
        for (key, value) in ["a_hat0", "a_hat1", "a_hat2"].into_iter().zip(self.a_hat) {
            check(key, value, true, "must be finite")?;
        }
        check(
            "k_v_hat",
            self.k_v_hat,
            self.k_v_hat > 0.0,
            "must be positive",
        )?;
        check(
            "p_s_hat",
            self.p_s_hat,
            self.p_s_hat > 0.0,
            "must be positive",
        )?;
        check(
            "b_hat_floor_ratio",
            self.b_hat_floor_ratio,
            self.b_hat_floor_ratio > 0.0 && self.b_hat_floor_ratio <= 1.0,
            "must lie in (0, 1]",
        )
    }

    /// Half-widths of the steady-state error box `(phi/lambda^2, 2 phi/lambda, 6 phi)`.
    pub fn error_box(&self) -> [f64; 3] {
        [
            self.phi / (self.lambda * self.lambda),
            2.0 * self.phi / self.lambda,
            6.0 * self.phi,
        ]
    }

    /// Online bound on `|(a_hat - a) . x|`.
    pub fn alpha_at(&self, state: &PlantState) -> f64 {
        (self.alpha_ratio * dot(&self.a_hat, state).abs()).min(self.alpha_cap)
    }
}

fn dot(a: &[f64; 3], state: &PlantState) -> f64 {
    a[0] * state.x + a[1] * state.v + a[2] * state.acc
}

/// Desired position and its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub xd: f64,
    pub dxd: f64,
    pub ddxd: f64,
    pub dddxd: f64,
}

/// `x - x_d` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingError {
    pub e: f64,
    pub de: f64,
    pub dde: f64,
}

impl TrackingError {
    pub const fn new(e: f64, de: f64, dde: f64) -> Self {
        Self { e, de, dde }
    }

    pub fn between(state: &PlantState, reference: &Reference) -> Self {
        Self {
            e: state.x - reference.xd,
            de: state.v - reference.dxd,
            dde: state.acc - reference.ddxd,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.e, self.de, self.dde]
    }
}

pub fn sliding_variable(err: &TrackingError, lambda: f64) -> f64 {
    err.dde + 2.0 * lambda * err.de + lambda * lambda * err.e
}

/// `sgn(z)` outside `[-1, 1]`, identity inside.
pub fn saturation(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        plant::sgn(z)
    } else {
        z
    }
}

/// Distance from `s` to the boundary layer `|s| <= phi`, signed like `s`.
pub fn boundary_distance(s: f64, phi: f64) -> f64 {
    s - phi * saturation(s / phi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub b_hat: f64,
    /// Raised to the configured floor (includes the square-root clamp case).
    pub floored: bool,
}

/// `b` evaluated with `k_v_hat` and constant `p_s_hat`; the sign in the
/// load term comes from the previous control sample.
pub fn b_hat_estimate(
    state: &PlantState,
    u_prev: f64,
    cp: &ControllerParams,
    pp: &PlantParams,
) -> GainEstimate {
    let raw = plant::input_gain_b(state, u_prev, cp.k_v_hat, cp.p_s_hat, pp);
    let floor = cp.b_hat_floor_ratio * nominal_b_hat(cp, pp);
    if raw.saturated || raw.b < floor {
        GainEstimate {
            b_hat: floor,
            floored: true,
        }
    } else {
        GainEstimate {
            b_hat: raw.b,
            floored: false,
        }
    }
}

/// `b_hat` at zero load.
pub fn nominal_b_hat(cp: &ControllerParams, pp: &PlantParams) -> f64 {
    plant::input_gain_b(&PlantState::default(), 0.0, cp.k_v_hat, cp.p_s_hat, pp).b
}

/// Model-based term `(a_hat . x + x_d''' - 2 lambda e'' - lambda^2 e') / b_hat`.
pub fn equivalent_control(
    state: &PlantState,
    reference: &Reference,
    err: &TrackingError,
    b_hat: f64,
    cp: &ControllerParams,
) -> f64 {
    let lambda = cp.lambda;
    (dot(&cp.a_hat, state) + reference.dddxd - 2.0 * lambda * err.dde - lambda * lambda * err.de)
        / b_hat
}

/// Tightest gain satisfying the reaching condition.
pub fn control_gain(u_eq: f64, d_hat: f64, b_hat: f64, alpha: f64, cp: &ControllerParams) -> f64 {
    cp.gamma * (cp.eta + alpha) / b_hat + cp.delta + d_hat.abs() + (cp.gamma - 1.0) * u_eq.abs()
}

/// Switching term used in the control law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchingLaw {
    /// `sat(s / phi)`, continuous.
    #[default]
    Saturation,
    /// `sgn(s)`, the discontinuous relay. Only useful to exhibit chattering.
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u: f64,
    pub u_eq: f64,
    pub gain: f64,
    pub s: f64,
    pub b_hat: f64,
    pub floored: bool,
}

/// Evaluates the control law for one sample.
pub fn control_output(
    state: &PlantState,
    reference: &Reference,
    d_hat: f64,
    u_prev: f64,
    law: SwitchingLaw,
    cp: &ControllerParams,
    pp: &PlantParams,
) -> ControlOutput {
    let err = TrackingError::between(state, reference);
    let s = sliding_variable(&err, cp.lambda);
    let estimate = b_hat_estimate(state, u_prev, cp, pp);
    let u_eq = equivalent_control(state, reference, &err, estimate.b_hat, cp);
    let gain = control_gain(u_eq, d_hat, estimate.b_hat, cp.alpha_at(state), cp);
    let switching = match law {
        SwitchingLaw::Saturation => saturation(s / cp.phi),
        SwitchingLaw::Sign => plant::sgn(s),
    };
    ControlOutput {
        u: u_eq + d_hat - gain * switching,
        u_eq,
        gain,
        s,
        b_hat: estimate.b_hat,
        floored: estimate.floored,
    }
}

/// Controller instance; remembers the last control sample for the sign in `b_hat`.
#[derive(Debug, Clone)]
pub struct SlidingModeController {
    params: ControllerParams,
    plant: PlantParams,
    law: SwitchingLaw,
    u_prev: f64,
}

impl SlidingModeController {
    /// `plant` supplies the physical constants of the gain formula; only
    /// `k_v_hat` and `p_s_hat` are taken from the controller side.
    pub fn new(params: ControllerParams, plant: PlantParams, law: SwitchingLaw) -> Self {
        Self {
            params,
            plant,
            law,
            u_prev: 0.0,
        }
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn update(
        &mut self,
        state: &PlantState,
        reference: &Reference,
        d_hat: f64,
    ) -> ControlOutput {
        let out = control_output(
            state,
            reference,
            d_hat,
            self.u_prev,
            self.law,
            &self.params,
            &self.plant,
        );
        self.u_prev = out.u;
        out
    }
}
