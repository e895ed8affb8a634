//! Summary statistics over an episode log, plus the analytic bound checks.

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::sim::episode::{EpisodeLog, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub start: f64,
    pub end: f64,
    pub rms_s: f64,
    pub max_abs_s: f64,
    pub max_abs_e: f64,
    /// Largest `|u(t_{k+1}) - u(t_k)|` with both samples in the window.
    pub max_du: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    /// First entry into `|s| <= phi`.
    pub reach_time: Option<f64>,
    pub windows: Vec<WindowMetrics>,
}

pub fn window_records(log: &EpisodeLog, start: f64, end: f64) -> &[StepRecord] {
    let lo = log.records.partition_point(|r| r.t < start);
    let hi = log.records.partition_point(|r| r.t <= end);
    &log.records[lo..hi.max(lo)]
}

pub fn window_metrics(log: &EpisodeLog, start: f64, end: f64) -> SimResult<WindowMetrics> {
    let rows = window_records(log, start, end);
    if rows.is_empty() {
        return Err(SimError::EmptyWindow { start, end });
    }
    let n = rows.len() as f64;
    let rms_s = (rows.iter().map(|r| r.s * r.s).sum::<f64>() / n).sqrt();
    let max_abs_s = rows.iter().map(|r| r.s.abs()).fold(0.0, f64::max);
    let max_abs_e = rows.iter().map(|r| r.err.e.abs()).fold(0.0, f64::max);
    let max_du = rows
        .windows(2)
        .map(|w| (w[1].u - w[0].u).abs())
        .fold(0.0, f64::max);
    Ok(WindowMetrics {
        start,
        end,
        rms_s,
        max_abs_s,
        max_abs_e,
        max_du,
    })
}

pub fn metrics_summary(log: &EpisodeLog, windows: &[(f64, f64)]) -> SimResult<MetricTable> {
    let windows = windows
        .iter()
        .map(|&(a, b)| window_metrics(log, a, b))
        .collect::<SimResult<Vec<_>>>()?;
    Ok(MetricTable {
        reach_time: log.reach_time(),
        windows,
    })
}

/// Outcome of one bound check: `measured` is compared against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub measured: f64,
    pub passed: bool,
    pub note: String,
}

impl BoundCheck {
    fn at_most(name: &str, measured: f64, bound: f64, note: String) -> Self {
        Self {
            name: name.to_string(),
            bound,
            measured,
            passed: measured <= bound,
            note,
        }
    }

    fn failed(name: &str, bound: f64, note: &str) -> Self {
        Self {
            name: name.to_string(),
            bound,
            measured: f64::NAN,
            passed: false,
            note: note.to_string(),
        }
    }
}

/// Reach time against `|s_phi(0)| / eta + 2 dt_control`.
pub fn check_reaching(log: &EpisodeLog) -> BoundCheck {
    let s_phi0 = log.records.first().map_or(0.0, |r| r.s_phi.abs());
    let bound = s_phi0 / log.eta + 2.0 * log.dt_control;
    match log.reach_time() {
        Some(t) => {
            BoundCheck::at_most("reach_time", t, bound, format!("|s_phi(0)| = {s_phi0:.6e}"))
        }
        None => BoundCheck::failed("reach_time", bound, "never entered the boundary layer"),
    }
}

/// `|s| <= phi` on every sample from the reach time on.
pub fn check_layer_invariance(log: &EpisodeLog) -> BoundCheck {
    match log.reach_index() {
        Some(i) => {
            let worst = log.records[i..]
                .iter()
                .map(|r| r.s.abs())
                .fold(0.0, f64::max);
            BoundCheck::at_most(
                "layer_invariance",
                worst,
                log.phi,
                "max |s| after reaching".into(),
            )
        }
        None => BoundCheck::failed(
            "layer_invariance",
            log.phi,
            "never entered the boundary layer",
        ),
    }
}

/// Largest ratio of `(|e|, |e'|, |e''|)` to the box half-widths over
/// `[t_reach + settle, t_end]`; passes when at most 1.
pub fn check_error_box(log: &EpisodeLog, settle: f64) -> BoundCheck {
    let (l, phi) = (log.lambda, log.phi);
    let limits = [phi / (l * l), 2.0 * phi / l, 6.0 * phi];
    let Some(t_reach) = log.reach_time() else {
        return BoundCheck::failed("error_box", 1.0, "never entered the boundary layer");
    };
    let from = t_reach + settle;
    let mut worst = [0.0f64; 3];
    for r in log.records.iter().filter(|r| r.t >= from) {
        let e = r.err.to_array();
        for k in 0..3 {
            worst[k] = worst[k].max(e[k].abs());
        }
    }
    let ratio = (0..3).map(|k| worst[k] / limits[k]).fold(0.0, f64::max);
    BoundCheck::at_most(
        "error_box",
        ratio,
        1.0,
        format!(
            "from t = {from:.3} s: max |e| = {:.4e} (<= {:.4e}), max |de| = {:.4e} (<= {:.4e}), max |dde| = {:.4e} (<= {:.4e})",
            worst[0], limits[0], worst[1], limits[1], worst[2], limits[2]
        ),
    )
}

/// Control smoothness after reaching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatterStats {
    pub mean_gain: f64,
    pub max_du: f64,
    /// Consecutive samples of opposite sign, both with magnitude at least the mean gain.
    pub sign_flips: usize,
}

pub fn chatter_stats(records: &[StepRecord]) -> ChatterStats {
    let mean_gain = if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.gain).sum::<f64>() / records.len() as f64
    };
    let mut max_du: f64 = 0.0;
    let mut sign_flips = 0;
    for w in records.windows(2) {
        max_du = max_du.max((w[1].u - w[0].u).abs());
        if w[0].u * w[1].u < 0.0 && w[0].u.abs() >= mean_gain && w[1].u.abs() >= mean_gain {
            sign_flips += 1;
        }
    }
    ChatterStats {
        mean_gain,
        max_du,
        sign_flips,
    }
}

/// Passes when `max |du| <= 0.2 K_mean` and no large sign alternation occurs
/// after reaching. `measured` is `max |du| / K_mean`.
pub fn check_chattering(log: &EpisodeLog) -> BoundCheck {
    let Some(i) = log.reach_index() else {
        return BoundCheck::failed("chattering", 0.2, "never entered the boundary layer");
    };
    let stats = chatter_stats(&log.records[i..]);
    let ratio = stats.max_du / stats.mean_gain;
    let mut check = BoundCheck::at_most(
        "chattering",
        ratio,
        0.2,
        format!(
            "max |du| = {:.4e} V, mean K = {:.4e} V, large sign flips = {}",
            stats.max_du, stats.mean_gain, stats.sign_flips
        ),
    );
    check.passed &= stats.sign_flips == 0;
    check
}

/// RMS(s) with compensation over RMS(s) without, on the same window.
pub fn check_improvement(
    with: &EpisodeLog,
    without: &EpisodeLog,
    window: (f64, f64),
    max_ratio: f64,
) -> SimResult<BoundCheck> {
    let a = window_metrics(with, window.0, window.1)?;
    let b = window_metrics(without, window.0, window.1)?;
    Ok(BoundCheck::at_most(
        "compensation_improvement",
        a.rms_s / b.rms_s,
        max_ratio,
        format!(
            "RMS(s) on [{}, {}] s: {:.4e} with, {:.4e} without",
            window.0, window.1, a.rms_s, b.rms_s
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{Reference, TrackingError};
    use crate::plant::PlantState;

    fn record(t: f64, s: f64, u: f64) -> StepRecord {
        StepRecord {
            t,
            state: PlantState::default(),
            reference: Reference::default(),
            err: TrackingError::new(s / 64.0, 0.0, 0.0),
            s,
            s_phi: crate::controller::boundary_distance(s, 1.0),
            u,
            u_eq: 0.0,
            gain: 1.0,
            b_hat: 150.0,
            d_hat: 0.0,
            d_true: 0.0,
            jerk: None,
            flags: 0,
        }
    }

    fn log_of(records: Vec<StepRecord>) -> EpisodeLog {
        EpisodeLog {
            records,
            dt_control: 0.002,
            lambda: 8.0,
            phi: 1.0,
            eta: 0.1,
            trainings: vec![],
        }
    }

    #[test]
    fn rms_of_zero_and_alternating() {
        let zero = log_of((0..10).map(|k| record(k as f64, 0.0, 0.0)).collect());
        assert_eq!(window_metrics(&zero, 0.0, 9.0).unwrap().rms_s, 0.0);

        let alt = log_of(
            (0..10)
                .map(|k| record(k as f64, if k % 2 == 0 { 0.3 } else { -0.3 }, 0.0))
                .collect(),
        );
        let m = window_metrics(&alt, 0.0, 9.0).unwrap();
        assert!((m.rms_s - 0.3).abs() < 1e-15);
        assert_eq!(m.max_abs_s, 0.3);
    }

    #[test]
    fn window_bounds_are_inclusive() {
        let log = log_of(
            (0..10)
                .map(|k| record(k as f64, k as f64 / 10.0, k as f64))
                .collect(),
        );
        let m = window_metrics(&log, 2.0, 4.0).unwrap();
        assert_eq!(m.max_abs_s, 0.4);
        assert_eq!(m.max_du, 1.0);
        assert!(matches!(
            window_metrics(&log, 20.0, 30.0),
            Err(SimError::EmptyWindow { .. })
        ));
        let table = metrics_summary(&log, &[(0.0, 9.0), (5.0, 6.0)]).unwrap();
        assert_eq!(table.windows.len(), 2);
        assert_eq!(table.reach_time, Some(0.0));
    }

    #[test]
    fn reaching_and_layer_checks() {
        let mut rows: Vec<_> = (0..5)
            .map(|k| record(k as f64 * 0.002, 3.0 - k as f64, 0.0))
            .collect();
        rows.push(record(0.01, 0.5, 0.0));
        let log = log_of(rows);
        // s = 3, 2, 1, ... reaches at the third sample
        assert_eq!(log.reach_time(), Some(0.004));
        let reach = check_reaching(&log);
        assert!(reach.passed);
        assert!((reach.bound - (2.0 / 0.1 + 0.004)).abs() < 1e-12);
        assert!(check_layer_invariance(&log).passed);

        let mut rows = log.records.clone();
        rows.push(record(0.012, 1.2, 0.0));
        assert!(!check_layer_invariance(&log_of(rows)).passed);
    }

    #[test]
    fn chattering_detects_relay() {
        let smooth = log_of(
            (0..50)
                .map(|k| record(k as f64, 0.0, (k as f64 * 0.01).sin()))
                .collect(),
        );
        assert!(check_chattering(&smooth).passed);
        let relay = log_of(
            (0..50)
                .map(|k| record(k as f64, 0.0, if k % 2 == 0 { 1.5 } else { -1.5 }))
                .collect(),
        );
        let check = check_chattering(&relay);
        assert!(!check.passed);
        assert_eq!(chatter_stats(&relay.records).sign_flips, 49);
    }
}
