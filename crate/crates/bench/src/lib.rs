//! Shared inputs for the criterion benchmarks.

use xbar_core::solver::ColumnCell;
use xbar_core::{calibrate, BiasConfig, CellKind, CellState, CellTechnology, ColumnNetwork, WireModel};

pub fn sram() -> CellTechnology {
    calibrate(CellKind::Sram8T, 1.6e-5, &BiasConfig::default()).expect("default calibration")
}

/// Column with every `period`-th cell ON and the rest input-on, weight-off.
pub fn column(rows: usize, period: usize) -> ColumnNetwork {
    let wire = WireModel::default();
    ColumnNetwork {
        r_segment: wire.r_segment_sram,
        r_driver: wire.r_driver,
        r_sink: wire.r_sink,
        v_bl: 0.25,
        cells: (0..rows)
            .map(|r| ColumnCell { state: CellState::new(true, r % period == 0), v_gate: 0.7 })
            .collect(),
    }
}

/// Deterministic 0/1 matrix with roughly half the bits set.
pub fn half_dense(rows: usize, cols: usize) -> Vec<Vec<i64>> {
    (0..rows)
        .map(|r| (0..cols).map(|c| (((r * 7 + c * 13) ^ (r * c)) & 1) as i64).collect())
        .collect()
}
