//! Gaussian radial-basis-function network estimating the dead-zone term
//! `d` from the tracking error, trained in batch by least squares.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::controller::{ControllerParams, Reference, TrackingError};
use crate::error::RbfError;
use crate::plant::PlantState;

/// Singular values below this fraction of the largest are dropped.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RbfNetwork {
    centers: Vec<[f64; 3]>,
    widths: Vec<f64>,
    weights: Vec<f64>,
    /// Each error component is divided by its scale before the distance is
    /// taken; widths live in these normalized units.
    input_scale: [f64; 3],
}

impl RbfNetwork {
    /// Network with zero output weights.
    pub fn new(
        centers: Vec<[f64; 3]>,
        widths: Vec<f64>,
        input_scale: [f64; 3],
    ) -> Result<Self, RbfError> {
        let weights = vec![0.0; centers.len()];
        Self::with_weights(centers, widths, weights, input_scale)
    }

    pub fn with_weights(
        centers: Vec<[f64; 3]>,
        widths: Vec<f64>,
        weights: Vec<f64>,
        input_scale: [f64; 3],
    ) -> Result<Self, RbfError> {
        if centers.is_empty() {
            return Err(RbfError::Empty);
        }
        assert_eq!(centers.len(), widths.len(), "one width per center");
        assert_eq!(centers.len(), weights.len(), "one weight per center");
        assert!(
            input_scale.iter().all(|s| s.is_finite() && *s > 0.0),
            "input scale must be positive"
        );
        for (index, &width) in widths.iter().enumerate() {
            if !(width.is_finite() && width > 0.0) {
                return Err(RbfError::BadWidth { index, width });
            }
        }
        for first in 0..centers.len() {
            for second in first + 1..centers.len() {
                if centers[first] == centers[second] {
                    return Err(RbfError::DuplicateCenter { first, second });
                }
            }
        }
        Ok(Self {
            centers,
            widths,
            weights,
            input_scale,
        })
    }

    /// Regular grid of `per_axis^3` neurons covering `[-span, span]` times
    /// `half_widths` on each axis. Inputs are normalized by `half_widths`
    /// and every width equals the normalized grid spacing.
    pub fn grid(per_axis: usize, half_widths: [f64; 3], span: f64) -> Result<Self, RbfError> {
        if per_axis == 0 {
            return Err(RbfError::Empty);
        }
        let nodes: Vec<f64> = if per_axis == 1 {
            vec![0.0]
        } else {
            let step = 2.0 * span / (per_axis - 1) as f64;
            (0..per_axis).map(|i| -span + step * i as f64).collect()
        };
        let width = if per_axis == 1 {
            span
        } else {
            2.0 * span / (per_axis - 1) as f64
        };
        let mut centers = Vec::with_capacity(per_axis.pow(3));
        for &a in &nodes {
            for &b in &nodes {
                for &c in &nodes {
                    centers.push([a * half_widths[0], b * half_widths[1], c * half_widths[2]]);
                }
            }
        }
        let widths = vec![width; centers.len()];
        Self::new(centers, widths, half_widths)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_scale(&self) -> [f64; 3] {
        self.input_scale
    }

    pub fn is_trained(&self) -> bool {
        self.weights.iter().any(|w| *w != 0.0)
    }

    fn activation(&self, i: usize, err: &[f64; 3]) -> f64 {
        let c = &self.centers[i];
        let r2: f64 = (0..3)
            .map(|k| {
                let z = (err[k] - c[k]) / self.input_scale[k];
                z * z
            })
            .sum();
        let w = self.widths[i];
        (-r2 / (2.0 * w * w)).exp()
    }

    pub fn activations(&self, err: &TrackingError) -> Vec<f64> {
        let x = err.to_array();
        (0..self.len()).map(|i| self.activation(i, &x)).collect()
    }

    /// Raw network output `sum_i w_i phi_i`.
    pub fn predict(&self, err: &TrackingError) -> f64 {
        let x = err.to_array();
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.activation(i, &x))
            .sum()
    }

    /// Output clamped to `[-bound, bound]`.
    pub fn predict_clamped(&self, err: &TrackingError, bound: f64) -> f64 {
        self.predict(err).clamp(-bound, bound)
    }

    /// Minimum-norm least-squares fit of the output weights.
    pub fn train_least_squares(&mut self, ts: &TrainingSet) -> Result<TrainingReport, RbfError> {
        ts.validate()?;
        let p = ts.len();
        let m = self.len();
        let mut design = DMatrix::<f64>::zeros(p, m);
        for (row, input) in ts.inputs.iter().enumerate() {
            let x = input.to_array();
            for col in 0..m {
                design[(row, col)] = self.activation(col, &x);
            }
        }
        let targets = DVector::from_column_slice(&ts.targets);
        let solution = pseudo_inverse_solve(&design, &targets, SVD_RELATIVE_CUTOFF)?;
        let residual = &targets - &design * &solution.x;
        self.weights = solution.x.iter().copied().collect();
        Ok(TrainingReport {
            samples: p,
            error: residual.norm(),
            rank: solution.rank,
            truncated: solution.truncated,
        })
    }

    /// Header line `M`, then one `cx cy cz width weight` line per neuron.
    /// Centers are in error units, widths in normalized units.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.len());
        for i in 0..self.len() {
            let c = self.centers[i];
            writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                c[0], c[1], c[2], self.widths[i], self.weights[i]
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Parses [`RbfNetwork::to_text`] output. The input scale is not part of
    /// the file and has to come from the controller configuration.
    pub fn from_text(text: &str, input_scale: [f64; 3]) -> Result<Self, RbfError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(RbfError::Parse {
            line: 1,
            reason: "missing neuron count".into(),
        })?;
        let count: usize = header.trim().parse().map_err(|e| RbfError::Parse {
            line: 1,
            reason: format!("bad neuron count: {e}"),
        })?;
        let mut centers = Vec::with_capacity(count);
        let mut widths = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for (idx, line) in lines {
            let fields: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let fields = fields.map_err(|e| RbfError::Parse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            if fields.len() != 5 {
                return Err(RbfError::Parse {
                    line: idx + 1,
                    reason: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            centers.push([fields[0], fields[1], fields[2]]);
            widths.push(fields[3]);
            weights.push(fields[4]);
        }
        if centers.len() != count {
            return Err(RbfError::Parse {
                line: 1,
                reason: format!("header says {count} neurons, found {}", centers.len()),
            });
        }
        Self::with_weights(centers, widths, weights, input_scale)
    }
}

/// Pairs of tracking error and dead-zone target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<TrackingError>,
    pub targets: Vec<f64>,
}

impl TrainingSet {
    pub fn push(&mut self, input: TrackingError, target: f64) {
        self.inputs.push(input);
        self.targets.push(target);
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn clear(&mut self) {
        self.inputs.clear();
        self.targets.clear();
    }

    fn validate(&self) -> Result<(), RbfError> {
        if self.inputs.len() != self.targets.len() {
            return Err(RbfError::LengthMismatch {
                inputs: self.inputs.len(),
                targets: self.targets.len(),
            });
        }
        if self.inputs.is_empty() {
            return Err(RbfError::EmptyTrainingSet);
        }
        if let Some(i) = self
            .inputs
            .iter()
            .position(|x| !x.to_array().iter().all(|v| v.is_finite()))
        {
            return Err(RbfError::NonFiniteInput(i));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub samples: usize,
    /// `||d - Phi w||_2`
    pub error: f64,
    pub rank: usize,
    /// Number of singular values dropped by the cutoff. Non-zero means the
    /// design matrix was numerically rank deficient.
    pub truncated: usize,
}

pub(crate) struct PinvSolution {
    pub x: DVector<f64>,
    pub rank: usize,
    pub truncated: usize,
}

/// `x = A^+ b` through a thin SVD with a relative singular-value cutoff.
pub(crate) fn pseudo_inverse_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    relative_cutoff: f64,
) -> Result<PinvSolution, RbfError> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or(RbfError::Decomposition)?;
    let v_t = svd.v_t.as_ref().ok_or(RbfError::Decomposition)?;
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = relative_cutoff * sigma_max;
    let utb = u.transpose() * b;
    let mut scaled = DVector::<f64>::zeros(svd.singular_values.len());
    let mut rank = 0;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > cutoff && sigma > 0.0 {
            scaled[i] = utb[i] / sigma;
            rank += 1;
        }
    }
    Ok(PinvSolution {
        x: v_t.transpose() * scaled,
        rank,
        truncated: svd.singular_values.len() - rank,
    })
}

/// How training targets for `d` are reconstructed from logged signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// Invert the plant model with the controller's estimates:
    /// `u - (x''' + a_hat . x) / b_hat`.
    #[default]
    Residual,
    /// `d_hat - nu / b_hat` with `nu = e''' + 2 lambda e'' + lambda^2 e' - d_hat b_hat`.
    Nu,
}

/// One control-rate sample as needed to build a training target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub state: PlantState,
    pub reference: Reference,
    pub u: f64,
    pub d_hat: f64,
    pub b_hat: f64,
    /// Estimate of `x'''`; `None` at episode boundaries.
    pub jerk: Option<f64>,
    /// Plant gain hit the square-root clamp during this sample.
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TargetRejected {
    #[error("sample was taken while the input gain was clamped")]
    Saturated,
    #[error("no third-derivative estimate for this sample")]
    NoJerk,
}

pub fn training_target(
    sample: &TrainingSample,
    cp: &ControllerParams,
    mode: TargetMode,
) -> Result<f64, TargetRejected> {
    if sample.saturated {
        return Err(TargetRejected::Saturated);
    }
    let jerk = sample.jerk.ok_or(TargetRejected::NoJerk)?;
    let s = &sample.state;
    match mode {
        TargetMode::Residual => {
            let a_x = cp.a_hat[0] * s.x + cp.a_hat[1] * s.v + cp.a_hat[2] * s.acc;
            Ok(sample.u - (jerk + a_x) / sample.b_hat)
        }
        TargetMode::Nu => {
            let err = TrackingError::between(s, &sample.reference);
            let e3 = jerk - sample.reference.dddxd;
            let l = cp.lambda;
            let nu = e3 + 2.0 * l * err.dde + l * l * err.de - sample.d_hat * sample.b_hat;
            Ok(sample.d_hat - nu / sample.b_hat)
        }
    }
}
