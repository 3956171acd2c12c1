//! Bit-cell electrical models for G-input crossbars.
//!
//! A cell with input 1 and weight 1 is a transistor in its ON state and is
//! modeled as a smoothed square-law device with tanh saturation. All other
//! input/weight combinations are small linear conductances. Every cell also
//! carries a multiplicative variation factor applied to its whole I-V.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.25;
pub const DEFAULT_SMOOTHING: f64 = 0.05;
/// Lower clamp on sampled variation multipliers.
pub const VARIATION_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    #[serde(rename = "sram8t")]
    Sram8T,
    #[serde(rename = "fefet")]
    FeFet,
}

impl CellKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Sram8T => "sram8t",
            CellKind::FeFet => "fefet",
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sram8t" => Ok(CellKind::Sram8T),
            "fefet" => Ok(CellKind::FeFet),
            other => Err(Error::invalid(format!("unknown technology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiasConfig {
    /// Gate voltage applied for input bit 1.
    pub v_wl: f64,
    /// Bit-line drive voltage.
    pub v_bl: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self { v_wl: 0.7, v_bl: 0.25 }
    }
}

impl BiasConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_wl > 0.0 && self.v_bl > 0.0) {
            return Err(Error::invalid("bias voltages must be positive"));
        }
        Ok(())
    }
}

/// Small-signal conductances (S) per input/weight combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductanceTable {
    pub g_on: f64,
    pub g_in1_w0: f64,
    pub g_in0_w1: f64,
    pub g_in0_w0: f64,
}

impl ConductanceTable {
    pub fn for_kind(kind: CellKind) -> Self {
        match kind {
            CellKind::Sram8T => Self {
                g_on: 1.6e-5,
                g_in1_w0: 4.7e-12,
                g_in0_w1: 6.6e-12,
                g_in0_w0: 2.2e-12,
            },
            CellKind::FeFet => Self {
                g_on: 1.6e-5,
                g_in1_w0: 2.5e-7,
                g_in0_w1: 4.3e-8,
                g_in0_w0: 2.0e-10,
            },
        }
    }

    pub fn validate(&self, kind: CellKind) -> Result<()> {
        let leak = [self.g_in1_w0, self.g_in0_w1, self.g_in0_w0];
        if leak.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::invalid("leakage conductances must be positive"));
        }
        if leak.iter().any(|g| *g >= self.g_on) {
            return Err(Error::invalid("ON conductance must exceed every leakage state"));
        }
        if kind == CellKind::FeFet && !(self.g_in1_w0 > self.g_in0_w0) {
            return Err(Error::invalid("FeFET requires g_in1_w0 > g_in0_w0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellTechnology {
    pub kind: CellKind,
    pub g_on: f64,
    pub g_in1_w0: f64,
    pub g_in0_w1: f64,
    pub g_in0_w0: f64,
    pub v_t: f64,
    /// Transconductance factor, A/V².
    pub beta: f64,
    /// Softplus width of the gate overdrive, V.
    pub smoothing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub input_bit: bool,
    pub weight_bit: bool,
    pub variation_mult: f64,
}

impl CellState {
    pub fn new(input_bit: bool, weight_bit: bool) -> Self {
        Self { input_bit, weight_bit, variation_mult: 1.0 }
    }

    pub fn is_on(&self) -> bool {
        self.input_bit && self.weight_bit
    }
}

/// Current through a cell and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEval {
    pub current: f64,
    pub d_drain: f64,
    pub d_source: f64,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl CellTechnology {
    /// Technology with the given conductance table and a fitted ON-state beta.
    pub fn calibrated(
        kind: CellKind,
        table: ConductanceTable,
        bias: &BiasConfig,
        v_t: f64,
        smoothing: f64,
    ) -> Result<Self> {
        bias.validate()?;
        if !(smoothing > 0.0) {
            return Err(Error::invalid("smoothing must be positive"));
        }
        let mut tech = Self {
            kind,
            g_on: table.g_on,
            g_in1_w0: table.g_in1_w0,
            g_in0_w1: table.g_in0_w1,
            g_in0_w0: table.g_in0_w0,
            v_t,
            beta: 0.0,
            smoothing,
        };
        tech.beta = fit_beta(&tech, table.g_on, bias)?;
        table.validate(kind)?;
        Ok(tech)
    }

    pub fn table(&self) -> ConductanceTable {
        ConductanceTable {
            g_on: self.g_on,
            g_in1_w0: self.g_in1_w0,
            g_in0_w1: self.g_in0_w1,
            g_in0_w0: self.g_in0_w0,
        }
    }

    fn leakage(&self, s: &CellState) -> f64 {
        match (s.input_bit, s.weight_bit) {
            (true, false) => self.g_in1_w0,
            (false, true) => self.g_in0_w1,
            (false, false) => self.g_in0_w0,
            (true, true) => unreachable!("ON state is not a linear conductance"),
        }
    }

    /// Current BL-node → SL-node with derivatives w.r.t. the drain (BL) and
    /// source (SL) voltages.
    pub fn eval(&self, s: &CellState, v_g: f64, v_d: f64, v_s: f64) -> CellEval {
        let m = s.variation_mult;
        let v_ds = v_d - v_s;
        if !s.is_on() {
            let g = m * self.leakage(s);
            return CellEval { current: g * v_ds, d_drain: g, d_source: -g };
        }
        let u = (v_g - v_s - self.v_t) / self.smoothing;
        let v_eff = self.smoothing * softplus(u);
        if v_eff <= 0.0 {
            return CellEval { current: 0.0, d_drain: 0.0, d_source: 0.0 };
        }
        let t = (v_ds / v_eff).tanh();
        let sech2 = 1.0 - t * t;
        let mb = m * self.beta;
        let di_dvds = mb * v_eff * sech2;
        let di_dveff = mb * (2.0 * v_eff * t - v_ds * sech2);
        CellEval {
            current: mb * v_eff * v_eff * t,
            d_drain: di_dvds,
            d_source: -di_dvds - di_dveff * sigmoid(u),
        }
    }
}

/// Current flowing from the BL (drain) node to the SL (source) node.
pub fn cell_current(tech: &CellTechnology, s: &CellState, v_g: f64, v_d: f64, v_s: f64) -> f64 {
    tech.eval(s, v_g, v_d, v_s).current
}

/// Fit beta by bisection so that the ON cell at the reference bias conducts
/// `g_on_target · v_bl`.
fn fit_beta(tech: &CellTechnology, g_on_target: f64, bias: &BiasConfig) -> Result<f64> {
    let on = CellState::new(true, true);
    let residual = |beta: f64| {
        let t = CellTechnology { beta, ..*tech };
        cell_current(&t, &on, bias.v_wl, bias.v_bl, 0.0) / bias.v_bl - g_on_target
    };
    let mut lo = 0.0;
    let mut hi = 1e-6;
    if !(residual(lo) < 0.0) {
        return Err(Error::Calibration(format!(
            "ON conductance target {g_on_target:e} S is not bracketed"
        )));
    }
    while residual(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Calibration(format!(
                "ON conductance target {g_on_target:e} S is not bracketed"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let achieved = residual(beta) + g_on_target;
    if ((achieved - g_on_target) / g_on_target).abs() > 1e-9 {
        return Err(Error::Calibration(format!(
            "bisection stalled at {achieved:e} S for target {g_on_target:e} S"
        )));
    }
    Ok(beta)
}

/// Technology with the default conductance table for `kind` and ON
/// conductance `g_on_target`.
pub fn calibrate(kind: CellKind, g_on_target: f64, bias: &BiasConfig) -> Result<CellTechnology> {
    let table = ConductanceTable { g_on: g_on_target, ..ConductanceTable::for_kind(kind) };
    CellTechnology::calibrated(kind, table, bias, DEFAULT_THRESHOLD, DEFAULT_SMOOTHING)
}

/// Row-major grid of cell states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    rows: usize,
    cols: usize,
    cells: Vec<CellState>,
}

impl CellGrid {
    pub fn new(rows: usize, cols: usize, fill: CellState) -> Self {
        Self { rows, cols, cells: vec![fill; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> CellState) -> Self {
        let cells = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &CellState {
        &self.cells[r * self.cols + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut CellState {
        &mut self.cells[r * self.cols + c]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CellState> {
        self.cells.iter()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = &CellState> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }
}

/// Resample every cell's variation multiplier from N(1, sigma), clamped
/// below at [`VARIATION_FLOOR`]. Deterministic in `(seed, grid shape)`.
pub fn apply_variation(states: &CellGrid, sigma: f64, seed: u64) -> Result<CellGrid> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma {sigma} must be finite and non-negative")));
    }
    let mut out = states.clone();
    if sigma == 0.0 {
        out.cells.iter_mut().for_each(|c| c.variation_mult = 1.0);
        return Ok(out);
    }
    let normal = Normal::new(1.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for cell in &mut out.cells {
        cell.variation_mult = normal.sample(&mut rng).max(VARIATION_FLOOR);
    }
    Ok(out)
}
