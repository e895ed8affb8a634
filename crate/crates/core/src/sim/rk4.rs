//! Classical fixed-step fourth-order Runge-Kutta.

use crate::error::{SimError, SimResult};

/// One RK4 step of `y' = f(t, y)`. Any input the field depends on (such as a
/// held control value) is captured by `f` and stays fixed across the four
/// stages.
pub fn rk4_step<const N: usize, F>(mut f: F, y: &[f64; N], t: f64, dt: f64) -> SimResult<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    debug_assert!(dt > 0.0);
    let stage = |k: [f64; N], t: f64| -> SimResult<[f64; N]> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(SimError::NonFinite { t })
        }
    };
    let offset = |k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + h * k[i]) };

    let half = 0.5 * dt;
    let k1 = stage(f(t, y), t)?;
    let k2 = stage(f(t + half, &offset(&k1, half)), t + half)?;
    let k3 = stage(f(t + half, &offset(&k2, half)), t + half)?;
    let k4 = stage(f(t + dt, &offset(&k3, dt)), t + dt)?;
    let next: [f64; N] =
        std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    stage(next, t + dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_exp(dt: f64, t_end: f64) -> f64 {
        let steps = (t_end / dt).round() as usize;
        let mut y = [1.0];
        for i in 0..steps {
            y = rk4_step(|_, y| [y[0]], &y, i as f64 * dt, dt).unwrap();
        }
        y[0]
    }

    #[test]
    fn zero_field_is_identity() {
        let y = [1.5, -2.0, 3.25];
        assert_eq!(rk4_step(|_, _| [0.0; 3], &y, 0.0, 0.1).unwrap(), y);
    }

    #[test]
    fn exponential_single_step() {
        let y = rk4_step(|_, y| [y[0]], &[1.0], 0.0, 0.1).unwrap();
        // 1 + h + h^2/2 + h^3/6 + h^4/24
        let series = 1.0 + 0.1 + 0.005 + 0.001 / 6.0 + 0.0001 / 24.0;
        assert!((y[0] - series).abs() < 1e-15);
        assert!((y[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = 1.0f64.exp();
        let coarse = (integrate_exp(0.1, 1.0) - exact).abs();
        let fine = (integrate_exp(0.05, 1.0) - exact).abs();
        let order = (coarse / fine).log2();
        assert!((order - 4.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn time_dependent_field() {
        // y' = 3 t^2 is integrated exactly (Simpson's rule)
        let y = rk4_step(|t, _| [3.0 * t * t], &[0.0], 1.0, 0.5).unwrap();
        assert!((y[0] - (1.5f64.powi(3) - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn non_finite_stage_fails() {
        let err = rk4_step(|_, y| [1.0 / (y[0] - 1.0)], &[1.0], 0.0, 0.1).unwrap_err();
        assert!(matches!(err, SimError::NonFinite { .. }));
    }
}
