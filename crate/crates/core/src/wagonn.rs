//! Weight-bit agglomeration.
//!
//! Rows are sorted by row-sum so that the rows holding the most 1-bits land
//! next to the ADC (the bottom of the array), where source degeneration is
//! weakest. The tracking vector records where every original row went and
//! drives the matching permutation of the input activations at run time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense binary matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::invalid("bit matrix must have positive dimensions"));
        }
        let mut bits = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged bit matrix rows".into()));
            }
            for &b in row {
                match b {
                    0 => bits.push(false),
                    1 => bits.push(true),
                    other => return Err(Error::invalid(format!("bit value {other} is not 0/1"))),
                }
            }
        }
        Ok(Self { rows: r, cols: c, bits })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                bits.push(f(r, c));
            }
        }
        Self { rows, cols, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|&b| b as u8).collect()).collect()
    }
}

/// `dest[r]` is the physical row that original row `r` is deployed to.
/// Row 0 is the top (driver end), row `N - 1` is next to the ADC.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TrackingVector {
    dest: Vec<usize>,
}

impl TryFrom<Vec<usize>> for TrackingVector {
    type Error = Error;

    fn try_from(dest: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; dest.len()];
        for &d in &dest {
            if d >= dest.len() || std::mem::replace(&mut seen[d], true) {
                return Err(Error::invalid("tracking vector is not a permutation"));
            }
        }
        Ok(Self { dest })
    }
}

impl From<TrackingVector> for Vec<usize> {
    fn from(tv: TrackingVector) -> Self {
        tv.dest
    }
}

impl TrackingVector {
    pub fn identity(n: usize) -> Self {
        Self { dest: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.dest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dest.is_empty()
    }

    pub fn dest(&self) -> &[usize] {
        &self.dest
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.dest.len()];
        for (r, &d) in self.dest.iter().enumerate() {
            inv[d] = r;
        }
        Self { dest: inv }
    }

    /// Move element `r` of `items` to position `dest[r]`.
    pub fn permute<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.dest.len() {
            return Err(Error::DimensionMismatch(format!(
                "tracking vector has {} rows, got {}",
                self.dest.len(),
                items.len()
            )));
        }
        let mut out = items.to_vec();
        for (r, item) in items.iter().enumerate() {
            out[self.dest[r]] = item.clone();
        }
        Ok(out)
    }
}

pub fn row_sums(w: &BitMatrix) -> Vec<usize> {
    (0..w.rows()).map(|r| w.row(r).iter().filter(|b| **b).count()).collect()
}

/// Row-sums over several bit-slices that share the same rows (all slices
/// live in one crossbar, so rows move together). Each bit counts once.
pub fn row_sums_sliced(slices: &[BitMatrix]) -> Result<Vec<usize>> {
    let rows = slices.first().map_or(0, BitMatrix::rows);
    let mut sums = vec![0; rows];
    for s in slices {
        if s.rows() != rows {
            return Err(Error::DimensionMismatch("slices disagree on row count".into()));
        }
        for (acc, v) in sums.iter_mut().zip(row_sums(s)) {
            *acc += v;
        }
    }
    Ok(sums)
}

/// Stable ascending sort of the row-sums: the largest row-sum goes to the
/// bottom row, ties keep their original order.
pub fn build_tracking_vector(sums: &[usize]) -> TrackingVector {
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by_key(|&r| sums[r]);
    let mut dest = vec![0; sums.len()];
    for (pos, &r) in order.iter().enumerate() {
        dest[r] = pos;
    }
    TrackingVector { dest }
}

pub fn remap_weights(w: &BitMatrix, tv: &TrackingVector) -> Result<BitMatrix> {
    if tv.len() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "tracking vector has {} rows, matrix has {}",
            tv.len(),
            w.rows()
        )));
    }
    let mut out = BitMatrix::zeros(w.rows(), w.cols());
    for r in 0..w.rows() {
        let d = tv.dest()[r];
        out.bits[d * w.cols..(d + 1) * w.cols].copy_from_slice(w.row(r));
    }
    Ok(out)
}

/// Input `r` follows weight row `r` to its destination.
pub fn remap_inputs<T: Clone>(x: &[T], tv: &TrackingVector) -> Result<Vec<T>> {
    tv.permute(x)
}

/// Cycle model for the input re-mapping unit (one row per read/write cycle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IruCostModel {
    pub n_rows: usize,
    pub adcs_per_xbar: usize,
    pub adc_conversion_cycles: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IruLatency {
    pub remap_cycles: usize,
    pub baseline_mvm_cycles: usize,
    pub overhead_fraction: f64,
}

/// Remap assumed not overlapped with the MVM.
pub fn iru_latency(m: &IruCostModel) -> Result<IruLatency> {
    if m.n_rows == 0 || m.adcs_per_xbar == 0 || m.adc_conversion_cycles == 0 || m.cols == 0 {
        return Err(Error::invalid("IRU cost model fields must be positive"));
    }
    if m.adcs_per_xbar > m.cols {
        return Err(Error::invalid("more ADCs than columns"));
    }
    let remap_cycles = m.n_rows;
    let baseline_mvm_cycles = m.cols.div_ceil(m.adcs_per_xbar) * m.adc_conversion_cycles;
    Ok(IruLatency {
        remap_cycles,
        baseline_mvm_cycles,
        overhead_fraction: remap_cycles as f64 / baseline_mvm_cycles as f64,
    })
}
