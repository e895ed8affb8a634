//! Electro-hydraulic servo simulation with a smooth sliding-mode controller
//! and a radial-basis-function compensator for the valve dead-zone.

pub mod cli;
pub mod controller;
pub mod error;
pub mod plant;
pub mod rbf;
pub mod sim;

pub use controller::{
    ControllerParams, Reference, SlidingModeController, SwitchingLaw, TrackingError,
};
pub use error::{ParamError, RbfError, SimError};
pub use plant::{PlantParams, PlantState};
pub use rbf::{RbfNetwork, TargetMode, TrainingSet};
pub use sim::{run_episode, EpisodeLog, SimConfig};
