//! Two-layer integer MLP classified through the crossbar pipeline.
//!
//! Fixture directory layout:
//!
//! - `mlp.json`: `input_bits`, `hidden_bits`, `hidden_shift`,
//!   `hidden_constant` (optional extra hidden input carrying the layer-2
//!   bias) and the three file names below
//! - `layer1.xbw`, `layer2.xbw`: signed weights, `inputs × outputs`
//! - `samples.csv`: `label,x0,x1,...` without a header
//!
//! Hidden activations are `clamp(h >> hidden_shift, 0, 2^hidden_bits - 1)`.
//! The predicted class is the first index of the largest output.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{calibrate, BiasConfig, CellKind};
use crate::error::{Error, Result};
use crate::interconnect::WireModel;
use crate::mvm::{ideal_mvm, mvm_execute, AdcPolicy, ArrayShape, DeviceSetup, MappedMatrix, Mapping};
use crate::schedule::ActivationSchedule;
use crate::xbw::WeightFile;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpMeta {
    pub input_bits: u32,
    pub hidden_bits: u32,
    pub hidden_shift: u32,
    #[serde(default)]
    pub hidden_constant: Option<i64>,
    pub layer1: PathBuf,
    pub layer2: PathBuf,
    pub samples: PathBuf,
}

#[derive(Debug, Clone)]
pub struct MlpFixture {
    pub meta: MlpMeta,
    pub layer1: WeightFile,
    pub layer2: WeightFile,
    pub samples: Vec<(usize, Vec<i64>)>,
}

impl MlpFixture {
    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("mlp.json");
        let text = std::fs::read_to_string(&meta_path)?;
        let meta: MlpMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: meta_path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let layer1 = WeightFile::load(&dir.join(&meta.layer1))?;
        let layer2 = WeightFile::load(&dir.join(&meta.layer2))?;

        let samples_path = dir.join(&meta.samples);
        let origin = samples_path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(&samples_path)
            .map_err(|e| Error::Parse { path: origin.clone(), line: 0, msg: e.to_string() })?;
        let mut samples = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { path: origin.clone(), line: i + 1, msg: e.to_string() })?;
            let nums = rec
                .iter()
                .map(|f| f.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { path: origin.clone(), line: i + 1, msg: e.to_string() })?;
            let (label, x) = nums
                .split_first()
                .ok_or_else(|| Error::Parse { path: origin.clone(), line: i + 1, msg: "empty record".into() })?;
            samples.push((*label as usize, x.to_vec()));
        }
        let f = Self { meta, layer1, layer2, samples };
        f.validate()?;
        Ok(f)
    }

    fn hidden_len(&self) -> usize {
        self.layer1.cols() + usize::from(self.meta.hidden_constant.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        let shape = |m: String| Err(Error::DimensionMismatch(m));
        if self.samples.is_empty() {
            return Err(Error::invalid("fixture has no samples"));
        }
        if self.layer2.rows() != self.hidden_len() {
            return shape(format!(
                "layer2 has {} rows, hidden layer has {} values",
                self.layer2.rows(),
                self.hidden_len()
            ));
        }
        let max_x = (1i64 << self.meta.input_bits) - 1;
        for (i, (label, x)) in self.samples.iter().enumerate() {
            if x.len() != self.layer1.rows() {
                return shape(format!("sample {i} has {} features, layer1 has {} rows", x.len(), self.layer1.rows()));
            }
            if *label >= self.layer2.cols() {
                return Err(Error::invalid(format!("sample {i} label {label} has no output")));
            }
            if x.iter().any(|&v| v < 0 || v > max_x) {
                return Err(Error::invalid(format!("sample {i} exceeds {} input bits", self.meta.input_bits)));
            }
        }
        if let Some(c) = self.meta.hidden_constant {
            if c < 0 || c >= 1i64 << self.meta.hidden_bits {
                return Err(Error::invalid("hidden_constant exceeds hidden bits"));
            }
        }
        Ok(())
    }

    fn requantize(&self, h: &[i64]) -> Vec<i64> {
        let max = (1i64 << self.meta.hidden_bits) - 1;
        let mut out: Vec<i64> = h.iter().map(|&v| (v >> self.meta.hidden_shift).clamp(0, max)).collect();
        out.extend(self.meta.hidden_constant);
        out
    }

    /// Exact integer inference.
    pub fn classify_exact(&self, x: &[i64]) -> usize {
        let h = self.requantize(&ideal_mvm(&self.layer1.values, x));
        argmax(&ideal_mvm(&self.layer2.values, &h))
    }
}

fn argmax(v: &[i64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct DemoOptions {
    pub technology: CellKind,
    pub wire: WireModel,
    pub shape: ArrayShape,
    pub adc: AdcPolicy,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            technology: CellKind::Sram8T,
            wire: WireModel::default(),
            shape: ArrayShape { rows: 128, cols: 128 },
            adc: AdcPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoResult {
    pub baseline_accuracy: f64,
    pub wagonn_accuracy: f64,
    pub exact_accuracy: f64,
    pub samples: usize,
}

struct Network {
    layer1: MappedMatrix,
    layer2: MappedMatrix,
}

pub fn demo_mlp(dir: &Path) -> Result<DemoResult> {
    demo_mlp_with(&MlpFixture::load(dir)?, &DemoOptions::default())
}

pub fn demo_mlp_with(fx: &MlpFixture, opts: &DemoOptions) -> Result<DemoResult> {
    let bias = BiasConfig::default();
    let setup = DeviceSetup {
        tech: calibrate(opts.technology, 1.6e-5, &bias)?,
        wire: opts.wire,
        bias,
        shape: opts.shape,
        sigma: 0.0,
        seed: 0,
    };
    let schedule = ActivationSchedule::full(opts.shape.rows);
    let build = |mapping| -> Result<Network> {
        Ok(Network {
            layer1: MappedMatrix::new(&fx.layer1.values, fx.layer1.bits, fx.layer1.signed, mapping, &setup)?,
            layer2: MappedMatrix::new(&fx.layer2.values, fx.layer2.bits, fx.layer2.signed, mapping, &setup)?,
        })
    };
    let accuracy = |net: &Network| -> Result<f64> {
        let correct = fx
            .samples
            .par_iter()
            .map(|(label, x)| -> Result<bool> {
                let h = mvm_execute(x, &net.layer1, &schedule, &opts.adc, fx.meta.input_bits)?.measured;
                let h = fx.requantize(&h);
                let y = mvm_execute(&h, &net.layer2, &schedule, &opts.adc, fx.meta.hidden_bits)?.measured;
                Ok(argmax(&y) == *label)
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(correct.iter().filter(|&&c| c).count() as f64 / fx.samples.len() as f64)
    };
    let exact = fx.samples.iter().filter(|(l, x)| fx.classify_exact(x) == *l).count() as f64 / fx.samples.len() as f64;
    Ok(DemoResult {
        baseline_accuracy: accuracy(&build(Mapping::Baseline)?)?,
        wagonn_accuracy: accuracy(&build(Mapping::Wagonn)?)?,
        exact_accuracy: exact,
        samples: fx.samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[1, 3, 3, 2]), 1);
        assert_eq!(argmax(&[-5]), 0);
    }
}
