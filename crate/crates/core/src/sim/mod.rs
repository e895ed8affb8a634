//! Fixed-step closed-loop simulation and episode metrics.

pub mod episode;
pub mod metrics;
pub mod reference;
pub mod rk4;

pub use episode::{
    default_network, flags, run_episode, Episode, EpisodeLog, SimConfig, StepRecord,
    DEFAULT_RBF_PER_AXIS, DEFAULT_RBF_SPAN,
};
pub use metrics::{metrics_summary, MetricTable, WindowMetrics};
pub use reference::{reference_trajectory, SineReference};
pub use rk4::rk4_step;
