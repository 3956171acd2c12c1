//! JSON experiment configuration.
//!
//! Every key is optional; `{}` is a single Baseline trial on a 128×128
//! 7 nm 8T-SRAM array with full activation, no variation and seed 0.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cells::{BiasConfig, CellKind, CellTechnology, ConductanceTable, DEFAULT_SMOOTHING, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::interconnect::{
    build_wire_model, ScatteringParams, WireGeometry, WireModel, DEFAULT_DRIVER_RESISTANCE,
    DEFAULT_SINK_RESISTANCE, DEFAULT_SRAM_CELL_HEIGHT_UM,
};
use crate::mvm::{AdcPolicy, ArrayShape, Mapping};
use crate::schedule::{make_groups, ActivationSchedule, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WireConfig {
    pub geometry: WireGeometry,
    pub scattering: ScatteringParams,
    pub sram_cell_height_um: f64,
    pub r_driver: f64,
    pub r_sink: f64,
    /// Drop every parasitic resistance.
    pub ideal: bool,
}

impl Default for WireConfig {
    fn default() -> Self {
        Self {
            geometry: WireGeometry::default(),
            scattering: ScatteringParams::default(),
            sram_cell_height_um: DEFAULT_SRAM_CELL_HEIGHT_UM,
            r_driver: DEFAULT_DRIVER_RESISTANCE,
            r_sink: DEFAULT_SINK_RESISTANCE,
            ideal: false,
        }
    }
}

impl WireConfig {
    pub fn model(&self) -> Result<WireModel> {
        if self.ideal {
            return Ok(WireModel::ideal());
        }
        build_wire_model(&self.geometry, &self.scattering, self.sram_cell_height_um, self.r_driver, self.r_sink)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub strategy: Strategy,
    #[serde(default = "one")]
    pub groups: usize,
}

fn one() -> usize {
    1
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self { strategy: Strategy::Full, groups: 1 }
    }
}

impl ScheduleSpec {
    pub fn build(&self, n_rows: usize) -> Result<ActivationSchedule> {
        make_groups(n_rows, self.groups, self.strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSource {
    /// Fresh matrix per seed: each weight is zero with probability
    /// `1 - density`, otherwise uniform over the non-zero representable values.
    Random {
        density: f64,
        #[serde(default = "one_bit")]
        bits: u32,
        #[serde(default)]
        signed: bool,
        /// Defaults to the array rows.
        #[serde(default)]
        rows: Option<usize>,
        /// Defaults to as many weight columns as fit in the array.
        #[serde(default)]
        cols: Option<usize>,
    },
    File(PathBuf),
}

fn one_bit() -> u32 {
    1
}

impl Default for WeightSource {
    fn default() -> Self {
        WeightSource::Random { density: 0.5, bits: 1, signed: false, rows: None, cols: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    #[default]
    AllOnes,
    /// Fresh vector per seed, uniform over `0..2^bits`.
    Random { bits: u32 },
    File { path: PathBuf, bits: u32 },
}

impl InputSource {
    pub fn bits(&self) -> u32 {
        match self {
            InputSource::AllOnes => 1,
            InputSource::Random { bits } | InputSource::File { bits, .. } => *bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub technology: CellKind,
    pub array_rows: usize,
    pub array_cols: usize,
    pub wire: WireConfig,
    pub bias: BiasConfig,
    /// Overrides the technology's default conductance table.
    pub conductance: Option<ConductanceTable>,
    pub mapping: Vec<Mapping>,
    pub schedule: Vec<ScheduleSpec>,
    pub sigma: Vec<f64>,
    pub seeds: Vec<u64>,
    pub weights: WeightSource,
    pub inputs: InputSource,
    pub adc: AdcPolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            technology: CellKind::Sram8T,
            array_rows: 128,
            array_cols: 128,
            wire: WireConfig::default(),
            bias: BiasConfig::default(),
            conductance: None,
            mapping: vec![Mapping::Baseline],
            schedule: vec![ScheduleSpec::default()],
            sigma: vec![0.0],
            seeds: vec![0],
            weights: WeightSource::default(),
            inputs: InputSource::default(),
            adc: AdcPolicy::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn shape(&self) -> ArrayShape {
        ArrayShape { rows: self.array_rows, cols: self.array_cols }
    }

    pub fn conductance_table(&self) -> ConductanceTable {
        self.conductance.unwrap_or_else(|| ConductanceTable::for_kind(self.technology))
    }

    pub fn cell_technology(&self) -> Result<CellTechnology> {
        CellTechnology::calibrated(
            self.technology,
            self.conductance_table(),
            &self.bias,
            DEFAULT_THRESHOLD,
            DEFAULT_SMOOTHING,
        )
    }

    /// Weight bits, signedness and matrix shape implied by the weight source
    /// (files are not read here).
    pub fn random_weight_shape(&self) -> Option<(usize, usize, u32, bool)> {
        match &self.weights {
            WeightSource::Random { bits, signed, rows, cols, .. } => Some((
                rows.unwrap_or(self.array_rows),
                cols.unwrap_or(self.array_cols / (*bits).max(1) as usize),
                *bits,
                *signed,
            )),
            WeightSource::File(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.array_rows == 0 || self.array_cols == 0 {
            return bad("array_rows and array_cols must be positive".into());
        }
        if self.mapping.is_empty() || self.schedule.is_empty() || self.sigma.is_empty() || self.seeds.is_empty() {
            return bad("mapping, schedule, sigma and seeds must be non-empty lists".into());
        }
        for s in &self.sigma {
            if !(s.is_finite() && *s >= 0.0) {
                return bad(format!("sigma {s} must be finite and non-negative"));
            }
        }
        for s in &self.schedule {
            s.build(self.array_rows).map_err(|e| Error::Config(format!("schedule {s:?}: {e}")))?;
        }
        if let WeightSource::Random { density, bits, rows, cols, .. } = &self.weights {
            if !(0.0..=1.0).contains(density) {
                return bad(format!("weight density {density} outside [0, 1]"));
            }
            if !(1..=32).contains(bits) {
                return bad(format!("weight bits {bits} outside 1..=32"));
            }
            if (*bits as usize) > self.array_cols {
                return bad(format!("{bits}-bit weights do not fit in {} columns", self.array_cols));
            }
            if *rows == Some(0) || *cols == Some(0) {
                return bad("random weight matrix must be non-empty".into());
            }
        }
        let ib = self.inputs.bits();
        if !(1..=32).contains(&ib) {
            return bad(format!("input bits {ib} outside 1..=32"));
        }
        self.bias.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.conductance_table()
            .validate(self.technology)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.wire.model().map_err(|e| Error::Config(format!("wire: {e}")))?;
        if let Some(b) = self.adc.bits {
            if !(1..=32).contains(&b) {
                return bad(format!("adc bits {b} outside 1..=32"));
            }
        }
        if let Some(fs) = self.adc.full_scale {
            if !(fs > 0.0) {
                return bad("adc full_scale must be positive".into());
            }
        }
        Ok(())
    }

    /// Resolve relative file paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let WeightSource::File(p) = &mut self.weights {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let InputSource::File { path, .. } = &mut self.inputs {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Read, parse and validate a config file; relative paths inside it are
/// taken relative to the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::from_json(&text, &path.display().to_string())?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}
