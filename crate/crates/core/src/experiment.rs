//! Sweep runner: one MVM per (mapping, schedule, sigma, seed) and a CSV
//! row per trial.
//!
//! Random weights and inputs are drawn from the trial seed on their own
//! ChaCha streams, so every mapping and schedule sees the same matrix for a
//! given seed and two sweeps can be paired by seed.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{CellKind, CellTechnology};
use crate::config::{ExperimentConfig, InputSource, ScheduleSpec, WeightSource};
use crate::error::{Error, Result};
use crate::interconnect::WireModel;
use crate::mvm::{mvm_execute, DeviceSetup, MappedMatrix, Mapping, MvmReport};
use crate::schedule::Strategy;
use crate::xbw::{parse_inputs, WeightFile};

const WEIGHT_STREAM: u64 = 1;
const INPUT_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub mapping: Mapping,
    pub schedule: ScheduleSpec,
    pub sigma: f64,
    pub seed: u64,
}

/// Cartesian product, seed varying fastest.
pub fn trials(cfg: &ExperimentConfig) -> Vec<Trial> {
    let mut out = Vec::new();
    for &mapping in &cfg.mapping {
        for &schedule in &cfg.schedule {
            for &sigma in &cfg.sigma {
                for &seed in &cfg.seeds {
                    out.push(Trial { index: out.len(), mapping, schedule, sigma, seed });
                }
            }
        }
    }
    out
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn random_weights(rows: usize, cols: usize, density: f64, bits: u32, signed: bool, seed: u64) -> Vec<Vec<i64>> {
    let (lo, hi) = if signed {
        (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1)
    } else {
        (0, (1i64 << bits) - 1)
    };
    let mut r = rng(seed, WEIGHT_STREAM);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if !r.random_bool(density) {
                        return 0;
                    }
                    // uniform over [lo, hi] without zero
                    let v = r.random_range(lo..hi);
                    if v >= 0 {
                        v + 1
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

pub fn random_inputs(n: usize, bits: u32, seed: u64) -> Vec<i64> {
    let mut r = rng(seed, INPUT_STREAM);
    (0..n).map(|_| r.random_range(0..1i64 << bits)).collect()
}

/// Shared, seed-independent state for a sweep.
struct Prepared {
    tech: CellTechnology,
    wire: WireModel,
    file_weights: Option<WeightFile>,
    file_inputs: Option<Vec<i64>>,
}

impl Prepared {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let file_weights = match &cfg.weights {
            WeightSource::File(p) => Some(WeightFile::load(p)?),
            WeightSource::Random { .. } => None,
        };
        let file_inputs = match &cfg.inputs {
            InputSource::File { path, bits } => {
                let text = std::fs::read_to_string(path)?;
                Some(parse_inputs(&text, &path.display().to_string(), *bits)?)
            }
            _ => None,
        };
        Ok(Self { tech: cfg.cell_technology()?, wire: cfg.wire.model()?, file_weights, file_inputs })
    }
}

fn run_trial(cfg: &ExperimentConfig, prep: &Prepared, t: &Trial) -> Result<MvmReport> {
    let (weights, bits, signed) = match (&cfg.weights, &prep.file_weights) {
        (_, Some(f)) => (f.values.clone(), f.bits, f.signed),
        (WeightSource::Random { density, .. }, None) => {
            let (rows, cols, bits, signed) = cfg.random_weight_shape().expect("random source");
            (random_weights(rows, cols, *density, bits, signed, t.seed), bits, signed)
        }
        (WeightSource::File(_), None) => unreachable!("file weights are loaded up front"),
    };
    let n = weights.len();
    let x = match (&cfg.inputs, &prep.file_inputs) {
        (_, Some(v)) => v.clone(),
        (InputSource::AllOnes, _) => vec![1; n],
        (InputSource::Random { bits }, _) => random_inputs(n, *bits, t.seed),
        (InputSource::File { .. }, None) => unreachable!("file inputs are loaded up front"),
    };
    let setup = DeviceSetup {
        tech: prep.tech,
        wire: prep.wire,
        bias: cfg.bias,
        shape: cfg.shape(),
        sigma: t.sigma,
        seed: t.seed,
    };
    let matrix = MappedMatrix::new(&weights, bits, signed, t.mapping, &setup)?;
    let schedule = t.schedule.build(cfg.array_rows)?;
    mvm_execute(&x, &matrix, &schedule, &cfg.adc, cfg.inputs.bits())
}

pub struct TrialResult {
    pub trial: Trial,
    pub outcome: Result<MvmReport>,
}

/// Run every trial (concurrently) and return results in trial order.
/// Per-trial failures are kept as errors; only setup failures abort.
pub fn run_experiments(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let prep = Prepared::new(cfg)?;
    Ok(trials(cfg)
        .into_par_iter()
        .map(|trial| TrialResult { outcome: run_trial(cfg, &prep, &trial), trial })
        .collect())
}

/// One CSV line. Metric columns are empty on error rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub trial: usize,
    pub technology: CellKind,
    pub mapping: Mapping,
    pub strategy: Strategy,
    pub groups: usize,
    pub sigma: f64,
    pub seed: u64,
    pub status: String,
    pub mean_abs_err: Option<f64>,
    pub rmse: Option<f64>,
    pub max_err: Option<i64>,
    pub analog_total_a: Option<f64>,
    pub newton_iters_total: Option<usize>,
    pub newton_iters_max: Option<usize>,
    pub column_solves: Option<usize>,
    pub error: String,
}

impl ReportRow {
    pub fn new(technology: CellKind, r: &TrialResult) -> Self {
        let t = &r.trial;
        let mut row = ReportRow {
            trial: t.index,
            technology,
            mapping: t.mapping,
            strategy: t.schedule.strategy,
            groups: t.schedule.groups,
            sigma: t.sigma,
            seed: t.seed,
            status: "ok".into(),
            mean_abs_err: None,
            rmse: None,
            max_err: None,
            analog_total_a: None,
            newton_iters_total: None,
            newton_iters_max: None,
            column_solves: None,
            error: String::new(),
        };
        match &r.outcome {
            Ok(rep) => {
                row.mean_abs_err = Some(rep.mean_abs_err());
                row.rmse = Some(rep.rmse);
                row.max_err = Some(rep.max_err);
                row.analog_total_a = Some(rep.analog_total());
                row.newton_iters_total = Some(rep.newton_iters_total);
                row.newton_iters_max = Some(rep.newton_iters_max);
                row.column_solves = Some(rep.column_solves);
            }
            Err(e) => {
                row.status = "error".into();
                row.error = e.to_string();
            }
        }
        row
    }

    pub fn schedule(&self) -> ScheduleSpec {
        ScheduleSpec { strategy: self.strategy, groups: self.groups }
    }
}

/// Write rows as CSV. Without `deterministic`, a `#` comment line with the
/// generation time precedes the header.
pub fn write_csv<W: Write>(mut out: W, rows: &[ReportRow], deterministic: bool) -> Result<()> {
    if !deterministic {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated at unix time {secs}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { path: "<csv>".into(), line, msg: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> ExperimentConfig {
        let text = format!(r#"{{"array_rows": 16, "array_cols": 8 {extra}}}"#);
        ExperimentConfig::from_json(&text, "mem").unwrap()
    }

    #[test]
    fn trial_count_and_order() {
        let cfg = small(r#", "seeds": [4, 5, 6], "mapping": ["baseline", "wagonn"], "sigma": [0.0, 0.1]"#);
        let t = trials(&cfg);
        assert_eq!(t.len(), 12);
        assert_eq!(t[0].seed, 4);
        assert_eq!(t[1].seed, 5);
        assert_eq!(t[3].sigma, 0.1);
        assert_eq!(t[6].mapping, Mapping::Wagonn);
        assert!(t.iter().enumerate().all(|(i, t)| t.index == i));
    }

    #[test]
    fn three_seeds_three_rows() {
        let cfg = small(r#", "seeds": [0, 1, 2]"#);
        let res = run_experiments(&cfg).unwrap();
        assert_eq!(res.len(), 3);
        assert!(res.iter().all(|r| r.outcome.is_ok()));
    }

    #[test]
    fn random_weights_respect_density_and_range() {
        let w = random_weights(64, 64, 0.0, 4, true, 1);
        assert!(w.iter().flatten().all(|&v| v == 0));
        let w = random_weights(64, 64, 1.0, 4, true, 1);
        assert!(w.iter().flatten().all(|&v| v != 0 && (-8..=7).contains(&v)));
        assert!(w.iter().flatten().any(|&v| v == -8) && w.iter().flatten().any(|&v| v == 7));
        let w = random_weights(128, 128, 0.25, 1, false, 9);
        let ones = w.iter().flatten().filter(|&&v| v == 1).count() as f64 / (128.0 * 128.0);
        assert!((ones - 0.25).abs() < 0.02);
        assert_eq!(random_weights(8, 8, 0.5, 1, false, 3), random_weights(8, 8, 0.5, 1, false, 3));
        assert_ne!(random_weights(8, 8, 0.5, 1, false, 3), random_weights(8, 8, 0.5, 1, false, 4));
    }

    #[test]
    fn csv_roundtrip_and_determinism() {
        let cfg = small(r#", "seeds": [0, 1], "mapping": ["baseline", "wagonn"], "sigma": [0.05],
            "schedule": [{"strategy": "pwa", "groups": 2}]"#);
        let rows: Vec<ReportRow> =
            run_experiments(&cfg).unwrap().iter().map(|r| ReportRow::new(cfg.technology, r)).collect();
        let mut a = Vec::new();
        write_csv(&mut a, &rows, true).unwrap();
        let mut b = Vec::new();
        let again: Vec<ReportRow> =
            run_experiments(&cfg).unwrap().iter().map(|r| ReportRow::new(cfg.technology, r)).collect();
        write_csv(&mut b, &again, true).unwrap();
        assert_eq!(a, b);

        let back = read_csv(a.as_slice()).unwrap();
        assert_eq!(back, rows);
        for (row, t) in back.iter().zip(trials(&cfg)) {
            assert_eq!((row.mapping, row.schedule(), row.sigma, row.seed), (t.mapping, t.schedule, t.sigma, t.seed));
        }

        let mut stamped = Vec::new();
        write_csv(&mut stamped, &rows, false).unwrap();
        assert!(stamped.starts_with(b"# generated"));
        assert_eq!(read_csv(stamped.as_slice()).unwrap(), rows);
    }

    #[test]
    fn seed_isolation() {
        let a = small(r#", "seeds": [0, 1, 2], "sigma": [0.1]"#);
        let b = small(r#", "seeds": [0, 7, 2], "sigma": [0.1]"#);
        let row = |cfg: &ExperimentConfig| -> Vec<ReportRow> {
            run_experiments(cfg).unwrap().iter().map(|r| ReportRow::new(cfg.technology, r)).collect()
        };
        let (ra, rb) = (row(&a), row(&b));
        assert_eq!(ra[0], rb[0]);
        assert_eq!(ra[2], rb[2]);
        assert_ne!(ra[1], rb[1]);
    }

    #[test]
    fn failing_trial_becomes_error_row() {
        let dir = tempfile::tempdir().unwrap();
        let wpath = dir.path().join("w.xbw");
        std::fs::write(&wpath, "XBW v1 2 1 1 0\n1\n1\n").unwrap();
        let xpath = dir.path().join("x.txt");
        // three inputs for a two-row matrix
        std::fs::write(&xpath, "1 1 1\n").unwrap();
        let mut cfg = small(r#", "weights": {"file": "w.xbw"}, "inputs": {"file": {"path": "x.txt", "bits": 1}}"#);
        cfg.resolve_paths(dir.path());
        let res = run_experiments(&cfg).unwrap();
        let row = ReportRow::new(cfg.technology, &res[0]);
        assert_eq!(row.status, "error");
        assert!(row.error.contains("dimension"), "{}", row.error);
        assert_eq!(row.mean_abs_err, None);
    }
}
