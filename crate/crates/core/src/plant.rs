//! Electro-hydraulic servo plant with an unknown dead-zone at the valve input.
//!
//! The plant is the combined third-order model
//!
//! ```text
//! x''' = -a . [x, x', x''] + b(x, u) * (u - d(u))
//! ```
//!
//! where the input gain `b` folds the orifice flow law into the cylinder
//! dynamics and `d(u)` is the saturation-like term left over after writing
//! the dead-zone as `k_v(u) * (u - d(u))`.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Amplitude of the sinusoidal perturbation in the nonlinear branches.
pub const BRANCH_PERTURBATION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeadZoneShape {
    /// `g_l(u) = k_l (u + 0.2 sin u - delta_l)`, `g_r(u) = k_r (u - 0.2 cos u - delta_r)`.
    Nonlinear,
    /// `g_l(u) = k_l (u - delta_l)`, `g_r(u) = k_r (u - delta_r)`.
    Linear,
}

/// What the supply-pressure ripple is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureRipple {
    Displacement,
    Time,
}

/// Physical constants of the valve, cylinder and load, plus the dead-zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Fluid density [kg/m^3]
    pub rho: f64,
    /// Discharge coefficient [-]
    pub c_d: f64,
    /// Orifice area gradient [m]
    pub w: f64,
    /// Ram area [m^2]
    pub a_p: f64,
    /// Total leakage coefficient [m^3/(s Pa)]
    pub c_tp: f64,
    /// Effective bulk modulus [Pa]
    pub beta_e: f64,
    /// Total compressed volume [m^3]
    pub v_t: f64,
    /// Total mass of piston and load [kg]
    pub m_t: f64,
    /// Viscous damping [N s/m]
    pub b_t: f64,
    /// Load spring constant [N/m]
    pub k_s: f64,
    /// Nominal supply pressure [Pa]
    pub p_s_nominal: f64,
    /// Relative amplitude of the supply-pressure ripple [-]
    pub p_s_variation: f64,
    pub p_s_ripple: PressureRipple,
    /// Left dead-band edge [V]
    pub delta_l: f64,
    /// Right dead-band edge [V]
    pub delta_r: f64,
    /// Left branch slope constant [m/V]
    pub k_l: f64,
    /// Right branch slope constant [m/V]
    pub k_r: f64,
    pub dead_zone: DeadZoneShape,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            rho: 850.0,
            c_d: 0.6,
            w: 2.5e-2,
            a_p: 3e-4,
            c_tp: 2e-12,
            beta_e: 700e6,
            v_t: 6e-5,
            m_t: 250.0,
            b_t: 100.0,
            k_s: 75.0,
            p_s_nominal: 7e6,
            p_s_variation: 0.2,
            p_s_ripple: PressureRipple::Displacement,
            delta_l: -1.1,
            delta_r: 0.9,
            k_l: 2e-6,
            k_r: 2e-6,
            dead_zone: DeadZoneShape::Nonlinear,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("rho", self.rho),
            ("c_d", self.c_d),
            ("w", self.w),
            ("a_p", self.a_p),
            ("beta_e", self.beta_e),
            ("v_t", self.v_t),
            ("m_t", self.m_t),
            ("k_l", self.k_l),
            ("k_r", self.k_r),
            ("p_s_nominal", self.p_s_nominal),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::new(
                    key,
                    format!("must be positive, got {value}"),
                ));
            }
        }
        let non_negative = [("c_tp", self.c_tp), ("b_t", self.b_t), ("k_s", self.k_s)];
        for (key, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::new(
                    key,
                    format!("must be non-negative, got {value}"),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.p_s_variation) {
            return Err(ParamError::new(
                "p_s_variation",
                format!("must lie in [0, 1), got {}", self.p_s_variation),
            ));
        }
        // A degenerate band (edges at zero) only makes sense without the
        // perturbation terms, which would otherwise leave an offset at u = 0.
        let strict = self.dead_zone == DeadZoneShape::Nonlinear;
        let left_ok = if strict {
            self.delta_l < 0.0
        } else {
            self.delta_l <= 0.0
        };
        let right_ok = if strict {
            self.delta_r > 0.0
        } else {
            self.delta_r >= 0.0
        };
        if !(self.delta_l.is_finite() && left_ok) {
            return Err(ParamError::new(
                "delta_l",
                format!("must be negative, got {}", self.delta_l),
            ));
        }
        if !(self.delta_r.is_finite() && right_ok) {
            return Err(ParamError::new(
                "delta_r",
                format!("must be positive, got {}", self.delta_r),
            ));
        }
        Ok(())
    }

    /// Bound on `|d(u)|`: `max(-delta_l, delta_r)`.
    pub fn dead_band_bound(&self) -> f64 {
        (-self.delta_l).max(self.delta_r)
    }

    /// Hydraulic stiffness factor `4 beta_e / (V_t M_t)` shared by several terms.
    fn stiffness(&self) -> f64 {
        4.0 * self.beta_e / (self.v_t * self.m_t)
    }
}

/// Mechanical state `(x, x', x'')` of the piston.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub x: f64,
    pub v: f64,
    pub acc: f64,
}

impl PlantState {
    pub const fn new(x: f64, v: f64, acc: f64) -> Self {
        Self { x, v, acc }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.v, self.acc]
    }

    pub fn from_array(y: [f64; 3]) -> Self {
        Self::new(y[0], y[1], y[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.acc.is_finite()
    }

    /// Force the piston must deliver: `M_t x'' + B_t x' + K_s x`.
    pub fn load_force(&self, p: &PlantParams) -> f64 {
        p.m_t * self.acc + p.b_t * self.v + p.k_s * self.x
    }
}

/// `k_v(u) * (u - d(u))` form of the dead-zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeadZoneDecomposition {
    /// Effective slope [m/V]
    pub k_v: f64,
    /// Saturation-like term [V]
    pub d: f64,
}

/// Sign function with `sgn(0) = 0`.
pub fn sgn(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn left_branch(u: f64, p: &PlantParams) -> f64 {
    match p.dead_zone {
        DeadZoneShape::Nonlinear => p.k_l * (u + BRANCH_PERTURBATION * u.sin() - p.delta_l),
        DeadZoneShape::Linear => p.k_l * (u - p.delta_l),
    }
}

fn right_branch(u: f64, p: &PlantParams) -> f64 {
    match p.dead_zone {
        DeadZoneShape::Nonlinear => p.k_r * (u - BRANCH_PERTURBATION * u.cos() - p.delta_r),
        DeadZoneShape::Linear => p.k_r * (u - p.delta_r),
    }
}

/// Analytic derivative of the left branch, `g_l'(u)`.
pub fn left_branch_slope(u: f64, p: &PlantParams) -> f64 {
    match p.dead_zone {
        DeadZoneShape::Nonlinear => p.k_l * (1.0 + BRANCH_PERTURBATION * u.cos()),
        DeadZoneShape::Linear => p.k_l,
    }
}

/// Analytic derivative of the right branch, `g_r'(u)`.
pub fn right_branch_slope(u: f64, p: &PlantParams) -> f64 {
    match p.dead_zone {
        DeadZoneShape::Nonlinear => p.k_r * (1.0 + BRANCH_PERTURBATION * u.sin()),
        DeadZoneShape::Linear => p.k_r,
    }
}

/// Effective spool displacement [m] for a control voltage `u` [V].
///
/// The nonlinear branches do not vanish at the band edges, so the map jumps
/// at `delta_l` and `delta_r`. Each edge belongs to its outer branch.
pub fn dead_zone_output(u: f64, p: &PlantParams) -> f64 {
    if u <= p.delta_l {
        left_branch(u, p)
    } else if u < p.delta_r {
        0.0
    } else {
        right_branch(u, p)
    }
}

/// Splits the dead-zone into slope and offset so that
/// `dead_zone_output(u) == k_v * (u - d)`.
///
/// Inside the band (and exactly on an edge, where `u - d` vanishes) the
/// slope is the analytic one-sided slope at the nearest edge.
pub fn dead_zone_decompose(u: f64, p: &PlantParams) -> DeadZoneDecomposition {
    let d = if u <= p.delta_l {
        p.delta_l
    } else if u < p.delta_r {
        u
    } else {
        p.delta_r
    };
    let offset = u - d;
    let k_v = if offset != 0.0 {
        dead_zone_output(u, p) / offset
    } else if (u - p.delta_l).abs() <= (u - p.delta_r).abs() {
        left_branch_slope(p.delta_l, p)
    } else {
        right_branch_slope(p.delta_r, p)
    };
    DeadZoneDecomposition { k_v, d }
}

/// Coefficients `(a0, a1, a2)` of the unforced third-order dynamics.
pub fn plant_coefficients(p: &PlantParams) -> [f64; 3] {
    let stiffness = p.stiffness();
    let a0 = stiffness * p.c_tp * p.k_s;
    let a1 = p.k_s / p.m_t + stiffness * p.a_p * p.a_p + stiffness * p.c_tp * p.b_t;
    let a2 = p.b_t / p.m_t + 4.0 * p.beta_e * p.c_tp / p.v_t;
    [a0, a1, a2]
}

/// Supply pressure [Pa]. `arg` is displacement or time depending on
/// [`PlantParams::p_s_ripple`].
pub fn supply_pressure(arg: f64, p: &PlantParams) -> f64 {
    p.p_s_nominal * (1.0 + p.p_s_variation * arg.sin())
}

/// Supply pressure seen by the plant at a given state and time.
pub fn plant_supply_pressure(state: &PlantState, t: f64, p: &PlantParams) -> f64 {
    match p.p_s_ripple {
        PressureRipple::Displacement => supply_pressure(state.x, p),
        PressureRipple::Time => supply_pressure(t, p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputGain {
    pub b: f64,
    /// The square-root argument went negative and was clamped to zero,
    /// i.e. the load pressure reached the supply pressure.
    pub saturated: bool,
}

/// Input gain `b(x, u)` for a given slope and supply pressure.
pub fn input_gain_b(state: &PlantState, u: f64, k_v: f64, p_s: f64, p: &PlantParams) -> InputGain {
    let load_pressure = state.load_force(p) / p.a_p;
    let arg = (p_s - sgn(u) * load_pressure) / p.rho;
    let saturated = arg <= 0.0;
    let b = p.stiffness() * p.a_p * p.c_d * p.w * k_v * arg.max(0.0).sqrt();
    InputGain { b, saturated }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantDerivative {
    /// `(x', x'', x''')`
    pub rate: [f64; 3],
    pub gain: InputGain,
    pub decomposition: DeadZoneDecomposition,
}

/// Right-hand side of the plant for a held control voltage `u` at time `t`.
pub fn plant_derivative(state: &PlantState, u: f64, t: f64, p: &PlantParams) -> PlantDerivative {
    let a = plant_coefficients(p);
    let decomposition = dead_zone_decompose(u, p);
    let p_s = plant_supply_pressure(state, t, p);
    let gain = input_gain_b(state, u, decomposition.k_v, p_s, p);
    let jerk = -(a[0] * state.x + a[1] * state.v + a[2] * state.acc) + gain.b * u
        - gain.b * decomposition.d;
    PlantDerivative {
        rate: [state.v, state.acc, jerk],
        gain,
        decomposition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn dead_zone_output_branches() {
        let p = params();
        assert_eq!(dead_zone_output(0.5, &p), 0.0);
        assert_relative_eq!(dead_zone_output(2.0, &p), 2.36646e-6, max_relative = 1e-5);
        assert_relative_eq!(dead_zone_output(-2.0, &p), -2.16373e-6, max_relative = 1e-5);
    }

    #[test]
    fn band_edges_belong_to_outer_branches() {
        let p = params();
        let right = -0.2 * p.k_r * p.delta_r.cos();
        let left = 0.2 * p.k_l * p.delta_l.sin();
        assert_relative_eq!(dead_zone_output(p.delta_r, &p), right, max_relative = 1e-12);
        assert_relative_eq!(dead_zone_output(p.delta_l, &p), left, max_relative = 1e-12);
        // the jump: just inside the band the output is exactly zero
        assert_eq!(dead_zone_output(p.delta_r - 1e-12, &p), 0.0);
    }

    #[test]
    fn decompose_examples() {
        let p = params();
        let outside = dead_zone_decompose(2.0, &p);
        assert_eq!(outside.d, 0.9);
        let rebuilt = outside.k_v * (2.0 - outside.d);
        assert_relative_eq!(rebuilt, dead_zone_output(2.0, &p), max_relative = 1e-15);

        let inside = dead_zone_decompose(0.5, &p);
        assert_eq!(inside.d, 0.5);
        // nearest edge is delta_r
        assert_eq!(inside.k_v, right_branch_slope(p.delta_r, &p));
        let inside_left = dead_zone_decompose(-0.9, &p);
        assert_eq!(inside_left.k_v, left_branch_slope(p.delta_l, &p));

        let low = dead_zone_decompose(-3.0, &p);
        assert_eq!(low.d, -1.1);
    }

    #[test]
    fn coefficients_match_hand_values() {
        let a = plant_coefficients(&params());
        // 4*7e8*2e-12*75/(6e-5*250)
        assert_relative_eq!(a[0], 28.0, max_relative = 1e-9);
        // 75/250 + 4*7e8*9e-8/0.015 + 4*7e8*2e-12*100/0.015
        assert_relative_eq!(a[1], 0.3 + 16800.0 + 0.56 / 0.015, max_relative = 1e-9);
        // 100/250 + 4*7e8*2e-12/6e-5
        assert_relative_eq!(a[2], 0.4 + 5.6e-3 / 6e-5, max_relative = 1e-9);
    }

    #[test]
    fn supply_pressure_ripple() {
        let mut p = params();
        assert_eq!(supply_pressure(0.0, &p), 7e6);
        assert_relative_eq!(
            supply_pressure(std::f64::consts::FRAC_PI_2, &p),
            8.4e6,
            max_relative = 1e-12
        );
        p.p_s_variation = 0.0;
        assert_eq!(supply_pressure(1.234, &p), 7e6);
    }

    #[test]
    fn input_gain_nominal_and_clamped() {
        let p = params();
        let zero = PlantState::default();
        let pos = input_gain_b(&zero, 1.0, 2e-6, 7e6, &p);
        let neg = input_gain_b(&zero, -1.0, 2e-6, 7e6, &p);
        let expected = 5.6e7 * 0.6 * 0.025 * 2e-6 * (7e6_f64 / 850.0).sqrt();
        assert_relative_eq!(pos.b, expected, max_relative = 1e-12);
        assert_relative_eq!(pos.b, 152.457, max_relative = 1e-5);
        assert!(!pos.saturated);
        assert_eq!(pos.b, neg.b);

        // load force equal to A_p P_s: M_t * acc = 250 * 8.4 = 2100 = 3e-4 * 7e6
        let stalled = input_gain_b(&PlantState::new(0.0, 0.0, 8.4), 1.0, 2e-6, 7e6, &p);
        assert_eq!(stalled.b, 0.0);
        assert!(stalled.saturated);
        let x = p.a_p * 7e6 / p.k_s;
        let beyond = input_gain_b(&PlantState::new(1.01 * x, 0.0, 0.0), 1.0, 2e-6, 7e6, &p);
        assert_eq!(beyond.b, 0.0);
        assert!(beyond.saturated);
    }

    #[test]
    fn derivative_examples() {
        let p = params();
        let zero = PlantState::default();
        assert_eq!(plant_derivative(&zero, 0.0, 0.0, &p).rate, [0.0, 0.0, 0.0]);
        assert_eq!(plant_derivative(&zero, 0.5, 0.0, &p).rate, [0.0, 0.0, 0.0]);
        let r = plant_derivative(&PlantState::new(0.01, 0.0, 0.0), 0.0, 0.0, &p).rate;
        assert_eq!(&r[..2], &[0.0, 0.0]);
        assert_relative_eq!(r[2], -0.28, max_relative = 1e-12);
    }

    #[test]
    fn validation_names_key() {
        let mut p = params();
        p.delta_l = 0.1;
        assert_eq!(p.validate().unwrap_err().key, "delta_l");
        let mut p = params();
        p.p_s_variation = 1.0;
        assert_eq!(p.validate().unwrap_err().key, "p_s_variation");
        let mut p = params();
        p.dead_zone = DeadZoneShape::Linear;
        p.delta_l = 0.0;
        p.delta_r = 0.0;
        assert!(p.validate().is_ok());
        assert!(params().validate().is_ok());
    }

    fn symmetric_linear() -> PlantParams {
        PlantParams {
            p_s_variation: 0.0,
            delta_l: -1.0,
            delta_r: 1.0,
            dead_zone: DeadZoneShape::Linear,
            ..params()
        }
    }

    proptest! {
        #[test]
        fn decomposition_identity(u in -10.0f64..10.0) {
            let p = params();
            let dz = dead_zone_decompose(u, &p);
            let out = dead_zone_output(u, &p);
            let rebuilt = dz.k_v * (u - dz.d);
            prop_assert!((rebuilt - out).abs() <= 1e-12 * out.abs().max(f64::MIN_POSITIVE));
            prop_assert!(dz.d.abs() <= p.dead_band_bound());
        }

        #[test]
        fn band_is_null(frac in 0.0f64..1.0) {
            let p = params();
            let u = p.delta_l + frac * (p.delta_r - p.delta_l);
            if u > p.delta_l && u < p.delta_r {
                prop_assert_eq!(dead_zone_output(u, &p), 0.0);
            }
        }

        #[test]
        fn derivative_is_odd_for_symmetric_plant(
            x in -0.5f64..0.5, v in -0.1f64..0.1, acc in -1.0f64..1.0, u in -5.0f64..5.0
        ) {
            let p = symmetric_linear();
            let s = PlantState::new(x, v, acc);
            let m = PlantState::new(-x, -v, -acc);
            let f = plant_derivative(&s, u, 0.0, &p).rate;
            let g = plant_derivative(&m, -u, 0.0, &p).rate;
            for i in 0..3 {
                prop_assert!((f[i] + g[i]).abs() <= 1e-9 * f[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn analytic_slopes_within_assumed_bounds() {
        let p = params();
        for i in 0..=20_000 {
            let u = p.delta_r + i as f64 * 1e-3;
            let k = right_branch_slope(u, &p);
            assert!(k >= 0.8 * p.k_r && k <= 1.2 * p.k_r);
            let u = p.delta_l - i as f64 * 1e-3;
            let k = left_branch_slope(u, &p);
            assert!(k >= 0.8 * p.k_l && k <= 1.2 * p.k_l);
        }
    }

    #[test]
    fn mean_value_slope_bounded_away_from_edges() {
        // The secant slope inherits the edge jump, so it only respects the
        // derivative bounds once |u - delta| dominates the 0.2 offset.
        let p = params();
        for i in 0..=8_000 {
            let u = 3.0 + i as f64 * 1e-3;
            let k = dead_zone_decompose(u, &p).k_v;
            assert!(k >= 0.8 * p.k_r && k <= 1.2 * p.k_r, "u = {u}, k_v = {k}");
            let k = dead_zone_decompose(-u, &p).k_v;
            assert!(
                k >= 0.8 * p.k_l && k <= 1.2 * p.k_l,
                "u = {}, k_v = {k}",
                -u
            );
        }
    }
}
