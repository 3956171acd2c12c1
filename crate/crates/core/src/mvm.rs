//! Bit-sliced, bit-serial MVM through non-ideal crossbars.
//!
//! Weights are split into 1-bit slices stored in adjacent physical columns
//! (`weight_col * bits + slice`). Inputs stream one bit per cycle. Each
//! cycle's column currents are digitized, accumulated over the activation
//! groups, and recombined by shift-and-add; two's-complement weights give
//! their top slice a negative place value.

use serde::{Deserialize, Serialize};

use crate::cells::{apply_variation, BiasConfig, CellGrid, CellKind, CellState, CellTechnology};
use crate::error::{Error, Result};
use crate::interconnect::WireModel;
use crate::schedule::{accumulate, masked_inputs, ActivationSchedule, Strategy};
use crate::solver::{solve_array, ColumnCell, ColumnNetwork};
use crate::wagonn::{build_tracking_vector, remap_inputs, remap_weights, row_sums, BitMatrix, TrackingVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mapping {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "wagonn")]
    Wagonn,
}

impl Mapping {
    pub fn as_str(self) -> &'static str {
        match self {
            Mapping::Baseline => "baseline",
            Mapping::Wagonn => "wagonn",
        }
    }
}

impl std::str::FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mapping::Baseline),
            "wagonn" => Ok(Mapping::Wagonn),
            other => Err(Error::invalid(format!("unknown mapping `{other}`"))),
        }
    }
}

/// One physical crossbar with its deployed bits and device state.
#[derive(Debug, Clone)]
pub struct CrossbarInstance {
    /// Physical layout (after any remap).
    pub weights: BitMatrix,
    pub cells: CellGrid,
    pub wire: WireModel,
    pub tech: CellTechnology,
    pub bias: BiasConfig,
    pub mapping: Mapping,
    pub tracking: Option<TrackingVector>,
}

impl CrossbarInstance {
    /// Deploy `weights` (original row order). With [`Mapping::Wagonn`] the
    /// rows are sorted by row-sum and the tracking vector is kept.
    pub fn deploy(
        weights: &BitMatrix,
        mapping: Mapping,
        tech: CellTechnology,
        wire: WireModel,
        bias: BiasConfig,
    ) -> Result<Self> {
        let (physical, tracking) = match mapping {
            Mapping::Baseline => (weights.clone(), None),
            Mapping::Wagonn => {
                let tv = build_tracking_vector(&row_sums(weights));
                (remap_weights(weights, &tv)?, Some(tv))
            }
        };
        let cells = CellGrid::from_fn(physical.rows(), physical.cols(), |r, c| {
            CellState::new(false, physical.get(r, c))
        });
        let x = Self { weights: physical, cells, wire, tech, bias, mapping, tracking };
        x.validate()?;
        Ok(x)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.mapping == Mapping::Wagonn) != self.tracking.is_some() {
            return Err(Error::invalid("tracking vector must be present exactly for remapped crossbars"));
        }
        if self.cells.rows() != self.weights.rows() || self.cells.cols() != self.weights.cols() {
            return Err(Error::DimensionMismatch("cell grid does not match weights".into()));
        }
        if let Some(tv) = &self.tracking {
            if tv.len() != self.weights.rows() {
                return Err(Error::DimensionMismatch("tracking vector length".into()));
            }
        }
        self.wire.validate()?;
        self.bias.validate()
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn cols(&self) -> usize {
        self.weights.cols()
    }

    /// Resample device variation for every cell (weights untouched).
    pub fn with_variation(mut self, sigma: f64, seed: u64) -> Result<Self> {
        self.cells = apply_variation(&self.cells, sigma, seed)?;
        Ok(self)
    }

    /// Drive the word lines; `bits` is in original (logical) row order and
    /// is permuted through the tracking vector when remapped.
    pub fn set_inputs(&mut self, bits: &[bool]) -> Result<()> {
        let physical = match &self.tracking {
            Some(tv) => remap_inputs(bits, tv)?,
            None => bits.to_vec(),
        };
        self.set_physical_inputs(&physical)
    }

    pub fn set_physical_inputs(&mut self, bits: &[bool]) -> Result<()> {
        if bits.len() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} input bits for {} rows",
                bits.len(),
                self.rows()
            )));
        }
        for (r, &b) in bits.iter().enumerate() {
            for c in 0..self.cols() {
                self.cells.get_mut(r, c).input_bit = b;
            }
        }
        Ok(())
    }

    pub fn column_network(&self, c: usize) -> ColumnNetwork {
        ColumnNetwork {
            r_segment: self.wire.segment(self.tech.kind),
            r_driver: self.wire.r_driver,
            r_sink: self.wire.r_sink,
            v_bl: self.bias.v_bl,
            cells: self
                .cells
                .column(c)
                .map(|&state| ColumnCell {
                    state,
                    v_gate: if state.input_bit { self.bias.v_wl } else { 0.0 },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    /// Input current that maps to the top code.
    pub full_scale: f64,
}

impl AdcConfig {
    /// One LSB per unit cell current, enough codes for `active_rows`.
    pub fn exact_count(active_rows: usize, unit_current: f64) -> Self {
        let bits = exact_count_bits(active_rows);
        Self { bits, full_scale: ((1u64 << bits) - 1) as f64 * unit_current }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 || self.bits > 32 {
            return Err(Error::invalid("ADC bits must lie in 1..=32"));
        }
        if !(self.full_scale > 0.0) {
            return Err(Error::invalid("ADC full scale must be positive"));
        }
        Ok(())
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << self.bits) - 1
    }

    pub fn lsb(&self) -> f64 {
        self.full_scale / self.max_code() as f64
    }
}

fn exact_count_bits(active_rows: usize) -> u32 {
    // ceil(log2(active_rows + 1)), at least one bit
    (usize::BITS - active_rows.leading_zeros()).max(1)
}

/// Uniform quantizer with saturation at both ends.
pub fn adc_quantize(i: f64, cfg: &AdcConfig) -> i64 {
    let code = (i / cfg.lsb()).round();
    if code.is_nan() {
        return 0;
    }
    (code as i64).clamp(0, cfg.max_code())
}

/// How the per-cycle ADC is sized. Unset fields fall back to exact-count
/// resolution for the number of rows active in a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdcPolicy {
    pub bits: Option<u32>,
    pub full_scale: Option<f64>,
    /// Size the ADC for the rows of one activation group rather than the
    /// whole array.
    pub scale_with_schedule: bool,
}

impl Default for AdcPolicy {
    fn default() -> Self {
        Self { bits: None, full_scale: None, scale_with_schedule: true }
    }
}

impl AdcPolicy {
    pub fn config_for(&self, schedule: &ActivationSchedule, unit_current: f64) -> Result<AdcConfig> {
        let active = if self.scale_with_schedule {
            schedule.max_active_rows()
        } else {
            schedule.n_rows()
        };
        let cfg = match (self.bits, self.full_scale) {
            (None, None) => AdcConfig::exact_count(active, unit_current),
            (bits, fs) => AdcConfig {
                bits: bits.unwrap_or_else(|| exact_count_bits(active)),
                full_scale: fs.unwrap_or(active as f64 * unit_current),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Place value of slice `s` (LSB = 0).
pub fn slice_weight(s: u32, bits: u32, signed: bool) -> i64 {
    let v = 1i64 << s;
    if signed && s == bits - 1 {
        -v
    } else {
        v
    }
}

pub fn check_representable(value: i64, bits: u32, signed: bool) -> Result<()> {
    let (lo, hi) = if signed {
        (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1)
    } else {
        (0, (1i64 << bits) - 1)
    };
    if value < lo || value > hi {
        return Err(Error::Overflow { value, bits, kind: if signed { "signed" } else { "unsigned" } });
    }
    Ok(())
}

/// One bit-plane per significance position, LSB first.
pub fn bit_slice(weights: &[Vec<i64>], bits_per_weight: u32, signed: bool) -> Result<Vec<BitMatrix>> {
    if !(1..=32).contains(&bits_per_weight) {
        return Err(Error::invalid("bits per weight must lie in 1..=32"));
    }
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("weight matrix must be non-empty"));
    }
    for row in weights {
        if row.len() != cols {
            return Err(Error::DimensionMismatch("ragged weight matrix".into()));
        }
        for &w in row {
            check_representable(w, bits_per_weight, signed)?;
        }
    }
    Ok((0..bits_per_weight)
        .map(|s| BitMatrix::from_fn(rows, cols, |r, c| (weights[r][c] >> s) & 1 == 1))
        .collect())
}

pub fn recombine(slices: &[BitMatrix], signed: bool) -> Vec<Vec<i64>> {
    let bits = slices.len() as u32;
    let (rows, cols) = (slices[0].rows(), slices[0].cols());
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    slices
                        .iter()
                        .enumerate()
                        .filter(|(_, m)| m.get(r, c))
                        .map(|(s, _)| slice_weight(s as u32, bits, signed))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Physical crossbar geometry used when mapping a weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayShape {
    pub rows: usize,
    pub cols: usize,
}

/// Everything needed to build crossbars for one weight matrix.
#[derive(Debug, Clone)]
pub struct DeviceSetup {
    pub tech: CellTechnology,
    pub wire: WireModel,
    pub bias: BiasConfig,
    pub shape: ArrayShape,
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Tile {
    /// First logical row covered by this crossbar.
    pub row_start: usize,
    /// Logical rows actually used; the rest of the crossbar is padding.
    pub row_len: usize,
    /// `(weight column, slice)` for each physical column.
    pub columns: Vec<(usize, u32)>,
    pub xbar: CrossbarInstance,
}

/// A weight matrix spread over as many crossbars as it needs.
#[derive(Debug, Clone)]
pub struct MappedMatrix {
    pub rows: usize,
    pub weight_cols: usize,
    pub bits: u32,
    pub signed: bool,
    pub mapping: Mapping,
    pub sigma: f64,
    pub seed: u64,
    pub weights: Vec<Vec<i64>>,
    pub tiles: Vec<Tile>,
}

fn tile_seed(seed: u64, tile: usize) -> u64 {
    seed ^ (tile as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl MappedMatrix {
    pub fn new(
        weights: &[Vec<i64>],
        bits: u32,
        signed: bool,
        mapping: Mapping,
        setup: &DeviceSetup,
    ) -> Result<Self> {
        let slices = bit_slice(weights, bits, signed)?;
        let (rows, weight_cols) = (weights.len(), weights[0].len());
        let ArrayShape { rows: xr, cols: xc } = setup.shape;
        if xr == 0 || xc == 0 {
            return Err(Error::invalid("array shape must be positive"));
        }
        let per_tile = xc / bits as usize;
        if per_tile == 0 {
            return Err(Error::invalid(format!("{bits}-bit weights do not fit in {xc} columns")));
        }
        let mut tiles = Vec::new();
        for row_start in (0..rows).step_by(xr) {
            let row_len = xr.min(rows - row_start);
            for col_start in (0..weight_cols).step_by(per_tile) {
                let ncols = per_tile.min(weight_cols - col_start);
                let columns: Vec<(usize, u32)> = (0..ncols)
                    .flat_map(|c| (0..bits).map(move |s| (col_start + c, s)))
                    .collect();
                let bitmap = BitMatrix::from_fn(xr, columns.len(), |r, p| {
                    let (wc, s) = columns[p];
                    r < row_len && slices[s as usize].get(row_start + r, wc)
                });
                let xbar = CrossbarInstance::deploy(&bitmap, mapping, setup.tech, setup.wire, setup.bias)?
                    .with_variation(setup.sigma, tile_seed(setup.seed, tiles.len()))?;
                tiles.push(Tile { row_start, row_len, columns, xbar });
            }
        }
        Ok(Self {
            rows,
            weight_cols,
            bits,
            signed,
            mapping,
            sigma: setup.sigma,
            seed: setup.seed,
            weights: weights.to_vec(),
            tiles,
        })
    }

    pub fn technology(&self) -> CellKind {
        self.tiles[0].xbar.tech.kind
    }

    pub fn array_rows(&self) -> usize {
        self.tiles[0].xbar.rows()
    }

    pub fn physical_cols(&self) -> usize {
        self.tiles.iter().map(|t| t.columns.len()).sum()
    }
}

/// Experiment axes echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub technology: CellKind,
    pub mapping: Mapping,
    pub strategy: Strategy,
    pub groups: usize,
    pub sigma: f64,
    pub seed: u64,
    pub input_bits: u32,
    pub adc_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvmReport {
    pub ideal: Vec<i64>,
    pub measured: Vec<i64>,
    /// Pre-ADC current per physical column, summed over all cycles.
    pub analog_currents: Vec<f64>,
    pub abs_err: Vec<i64>,
    pub rmse: f64,
    pub max_err: i64,
    pub newton_iters_total: usize,
    pub newton_iters_max: usize,
    pub column_solves: usize,
    pub config_echo: ConfigEcho,
}

impl MvmReport {
    pub fn mean_abs_err(&self) -> f64 {
        if self.abs_err.is_empty() {
            return 0.0;
        }
        self.abs_err.iter().sum::<i64>() as f64 / self.abs_err.len() as f64
    }

    pub fn analog_total(&self) -> f64 {
        self.analog_currents.iter().sum()
    }
}

/// Exact integer `Σ_r w[r][c] · x[r]`.
pub fn ideal_mvm(weights: &[Vec<i64>], x: &[i64]) -> Vec<i64> {
    let cols = weights.first().map_or(0, Vec::len);
    let mut out = vec![0i64; cols];
    for (row, &xr) in weights.iter().zip(x) {
        for (o, &w) in out.iter_mut().zip(row) {
            *o += w * xr;
        }
    }
    out
}

/// Run one MVM. `schedule` must cover the crossbar rows.
pub fn mvm_execute(
    x: &[i64],
    matrix: &MappedMatrix,
    schedule: &ActivationSchedule,
    adc: &AdcPolicy,
    input_bits: u32,
) -> Result<MvmReport> {
    if x.len() != matrix.rows {
        return Err(Error::DimensionMismatch(format!(
            "input has {} entries, matrix has {} rows",
            x.len(),
            matrix.rows
        )));
    }
    if !(1..=32).contains(&input_bits) {
        return Err(Error::invalid("input bits must lie in 1..=32"));
    }
    for &v in x {
        check_representable(v, input_bits, false)?;
    }
    if schedule.n_rows() != matrix.array_rows() {
        return Err(Error::DimensionMismatch(format!(
            "schedule covers {} rows, crossbars have {}",
            schedule.n_rows(),
            matrix.array_rows()
        )));
    }
    let unit = matrix.tiles[0].xbar.tech.g_on * matrix.tiles[0].xbar.bias.v_bl;
    let adc_cfg = adc.config_for(schedule, unit)?;

    let mut measured = vec![0i64; matrix.weight_cols];
    let mut analog = vec![0.0; matrix.physical_cols()];
    let (mut iters_total, mut iters_max, mut solves) = (0, 0, 0);

    let mut col_offset = 0;
    for tile in &matrix.tiles {
        let mut xbar = tile.xbar.clone();
        let n_phys = tile.columns.len();
        for j in 0..input_bits {
            let mut logical = vec![false; xbar.rows()];
            for r in 0..tile.row_len {
                logical[r] = (x[tile.row_start + r] >> j) & 1 == 1;
            }
            let physical = match &xbar.tracking {
                Some(tv) => remap_inputs(&logical, tv)?,
                None => logical,
            };
            let mut cycles = Vec::with_capacity(schedule.n_groups());
            for g in 0..schedule.n_groups() {
                xbar.set_physical_inputs(&masked_inputs(&physical, schedule, g)?)?;
                let sols = solve_array(&xbar)?;
                let mut counts = Vec::with_capacity(n_phys);
                for (p, sol) in sols.iter().enumerate() {
                    analog[col_offset + p] += sol.i_out;
                    iters_total += sol.newton_iters;
                    iters_max = iters_max.max(sol.newton_iters);
                    solves += 1;
                    let code = adc_quantize(sol.i_out, &adc_cfg);
                    counts.push((code as f64 * adc_cfg.lsb() / unit).round() as i64);
                }
                cycles.push(counts);
            }
            let totals = accumulate(&cycles)?;
            for (p, &(wc, s)) in tile.columns.iter().enumerate() {
                measured[wc] += slice_weight(s, matrix.bits, matrix.signed) * (totals[p] << j);
            }
        }
        col_offset += n_phys;
    }

    let ideal = ideal_mvm(&matrix.weights, x);
    let abs_err: Vec<i64> = ideal.iter().zip(&measured).map(|(a, b)| (a - b).abs()).collect();
    let rmse = (abs_err.iter().map(|&e| (e * e) as f64).sum::<f64>() / abs_err.len() as f64).sqrt();
    let max_err = abs_err.iter().copied().max().unwrap_or(0);
    Ok(MvmReport {
        ideal,
        measured,
        analog_currents: analog,
        abs_err,
        rmse,
        max_err,
        newton_iters_total: iters_total,
        newton_iters_max: iters_max,
        column_solves: solves,
        config_echo: ConfigEcho {
            technology: matrix.technology(),
            mapping: matrix.mapping,
            strategy: schedule.strategy(),
            groups: schedule.n_groups(),
            sigma: matrix.sigma,
            seed: matrix.seed,
            input_bits,
            adc_bits: adc_cfg.bits,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean_abs_err: f64,
    pub rmse: f64,
    pub p95_err: f64,
    /// Fraction of paired trials where these reports beat the baseline;
    /// `None` without a baseline or when every pair ties.
    pub win_rate: Option<f64>,
    /// Mean over pairs of (this − baseline) per-trial mean abs error.
    pub mean_diff: Option<f64>,
}

/// Pooled statistics over all columns of all reports, optionally paired
/// against `baseline` by (seed, sigma).
pub fn error_stats(reports: &[MvmReport], baseline: Option<&[MvmReport]>) -> Result<ErrorStats> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports"));
    }
    let mut errs: Vec<i64> = reports.iter().flat_map(|r| r.abs_err.iter().copied()).collect();
    let n = errs.len().max(1) as f64;
    let mean_abs_err = errs.iter().sum::<i64>() as f64 / n;
    let rmse = (errs.iter().map(|&e| (e * e) as f64).sum::<f64>() / n).sqrt();
    errs.sort_unstable();
    let p95_err = if errs.is_empty() {
        0.0
    } else {
        // nearest rank
        let rank = (0.95 * errs.len() as f64).ceil() as usize;
        errs[rank.clamp(1, errs.len()) - 1] as f64
    };

    let (win_rate, mean_diff) = match baseline {
        None => (None, None),
        Some(base) => {
            if base.len() != reports.len() {
                return Err(Error::Pairing(format!(
                    "{} reports against {} baseline reports",
                    reports.len(),
                    base.len()
                )));
            }
            let key = |r: &MvmReport| (r.config_echo.seed, r.config_echo.sigma.to_bits());
            let mut wins = 0usize;
            let mut ties = 0usize;
            let mut diff = 0.0;
            for r in reports {
                let b = base
                    .iter()
                    .find(|b| key(b) == key(r))
                    .ok_or_else(|| Error::Pairing(format!("no baseline for seed {}", r.config_echo.seed)))?;
                if b.ideal != r.ideal {
                    return Err(Error::Pairing(format!(
                        "seed {} pairs reports with different ideal outputs",
                        r.config_echo.seed
                    )));
                }
                let (a, bb) = (r.mean_abs_err(), b.mean_abs_err());
                diff += a - bb;
                if a < bb {
                    wins += 1;
                } else if a == bb {
                    ties += 1;
                }
            }
            let total = reports.len();
            let rate = if ties == total { None } else { Some(wins as f64 / total as f64) };
            (rate, Some(diff / total as f64))
        }
    };
    Ok(ErrorStats { mean_abs_err, rmse, p95_err, win_rate, mean_diff })
}
