//! Crossbar IR-drop simulation with row-agglomeration remapping and
//! partial word-line activation.
//!
//! The pipeline runs from wire geometry to per-segment resistance
//! ([`interconnect`]), through calibrated cell I-V models ([`cells`]) and a
//! Newton column solver ([`solver`]), to bit-sliced MVM with ADC
//! quantization ([`mvm`]). [`wagonn`] reorders weight rows so that heavy rows
//! sit near the sense amplifier and [`schedule`] splits activation into
//! groups. [`config`], [`experiment`] and [`demo`] drive sweeps and the
//! bundled MLP from files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cells;
pub mod config;
pub mod demo;
pub mod error;
pub mod experiment;
pub mod interconnect;
pub mod mvm;
pub mod schedule;
pub mod solver;
pub mod wagonn;
pub mod xbw;

pub use cells::{calibrate, BiasConfig, CellGrid, CellKind, CellState, CellTechnology, ConductanceTable};
pub use config::{load_config, ExperimentConfig};
pub use demo::{demo_mlp, DemoResult};
pub use error::{Error, Result};
pub use experiment::{run_experiments, ReportRow};
pub use interconnect::{build_wire_model, line_resistance, ScatteringParams, WireGeometry, WireModel};
pub use mvm::{
    adc_quantize, bit_slice, error_stats, mvm_execute, AdcConfig, AdcPolicy, ArrayShape, CrossbarInstance,
    DeviceSetup, ErrorStats, MappedMatrix, Mapping, MvmReport,
};
pub use schedule::{make_groups, ActivationSchedule, Strategy};
pub use solver::{oracle_solve, solve_array, solve_column, ColumnNetwork, ColumnSolution};
pub use wagonn::{build_tracking_vector, remap_inputs, remap_weights, row_sums, BitMatrix, TrackingVector};
pub use xbw::WeightFile;
