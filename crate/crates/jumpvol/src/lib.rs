//! Monte Carlo harness, file formats and command line for `jumpvol-core`.

pub mod cli;
pub mod config;
pub mod defaults;
pub mod experiment;
pub mod output;

pub use crate::config::RunConfig;
pub use crate::experiment::{
    calibration_sweep, empirical_error, figure_data, run_cell, BoundsMode, CalibrationRow,
    CellConfig, ExperimentError, ExperimentReport, FigureData, ReplicationRecord, Target,
};
