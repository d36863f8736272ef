//! Reduced-order interconnection frequency-response simulator with
//! energy-storage primary frequency control.
//!
//! The grid is an aggregated swing equation plus a reheat governor fleet
//! ([`grid`]). Storage devices inject power under droop or ROCOF-sized step
//! control ([`storage`]). [`scenario`] holds the EI and ERCOT presets and the
//! renewable derating, [`sim`] runs a contingency, [`analysis`] extracts
//! nadir metrics and runs sensitivity sweeps, and [`output`] writes CSV and
//! SVG files.

pub mod analysis;
pub mod error;
pub mod grid;
pub mod output;
pub mod scenario;
pub mod sim;
pub mod storage;

pub use analysis::{
    compute_metrics, sweep_capacity, sweep_duration, sweep_penetration, sweep_study, Metrics, SweepResult,
};
pub use error::{Error, Result};
pub use grid::{GovernorFleet, GridModel, SystemState, UflsStage};
pub use scenario::{build_model, load_config, preset, ConfigFile, ControlMode, Preset, Scenario, Study, SweepSpec};
pub use sim::{run_simulation, Trace};
pub use storage::{Controller, DroopController, Measurement, StepController, StepPhase, StorageDevice, StorageKind};
