//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Thresholds are fixed here and never tuned to results.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xbar_core::config::{ScheduleSpec, WireConfig};
use xbar_core::demo::{demo_mlp_with, DemoOptions, MlpFixture};
use xbar_core::experiment::{run_experiments, TrialResult};
use xbar_core::interconnect::{DEFAULT_DRIVER_RESISTANCE, DEFAULT_SINK_RESISTANCE};
use xbar_core::mvm::{ideal_mvm, recombine};
use xbar_core::schedule::masked_inputs;
use xbar_core::solver::{ColumnCell, RESIDUAL_TOLERANCE};
use xbar_core::wagonn::{iru_latency, IruCostModel};
use xbar_core::*;

const UNIT_CURRENT: f64 = 4.0e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn sram() -> CellTechnology {
    calibrate(CellKind::Sram8T, 1.6e-5, &BiasConfig::default()).unwrap()
}

fn column(cells: Vec<ColumnCell>, wire: &WireModel) -> ColumnNetwork {
    ColumnNetwork {
        r_segment: wire.r_segment_sram,
        r_driver: wire.r_driver,
        r_sink: wire.r_sink,
        v_bl: 0.25,
        cells,
    }
}

fn cell(input: bool, weight: bool, mult: f64) -> ColumnCell {
    let mut state = CellState::new(input, weight);
    state.variation_mult = mult;
    ColumnCell { state, v_gate: if input { 0.7 } else { 0.0 } }
}

fn a1() -> Result<Outcome> {
    let r = line_resistance(&WireGeometry::default(), &ScatteringParams::default())?;
    let pass = (r - 182.0).abs() <= 0.20 * 182.0;
    outcome(pass, format!("line resistance {r:.2} Ω/µm, target 182 ±20%"))
}

fn a2() -> Result<Outcome> {
    let p = ScatteringParams::default();
    let g = WireGeometry::default();
    let ratio = line_resistance(&g, &p)? / line_resistance(&g.scaled(2.0), &p)?;
    let pass = ratio > 4.0 && (4.2..=5.6).contains(&ratio);
    outcome(pass, format!("R(7nm)/R(2x geometry) = {ratio:.3}, band [4.2, 5.6]"))
}

fn a3() -> Result<Outcome> {
    let w = WireModel::default();
    let sram_ok = (w.r_segment_sram - 20.0).abs() <= 2.0;
    let fefet_ok = (w.r_segment_fefet - w.r_segment_sram / 2.0).abs() <= 1e-12 * w.r_segment_sram;
    outcome(
        sram_ok && fefet_ok,
        format!("segment SRAM {:.3} Ω (20 ±10%), FeFET {:.3} Ω (= half)", w.r_segment_sram, w.r_segment_fefet),
    )
}

fn a4() -> Result<Outcome> {
    let tech = sram();
    let wire = WireModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut max_dv, mut max_res, mut max_kcl, mut max_rel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let cells: Vec<ColumnCell> = (0..128)
            .map(|_| cell(rng.random_bool(0.5), rng.random_bool(0.5), 1.0 + 0.1 * (rng.random::<f64>() - 0.5)))
            .collect();
        let net = column(cells, &wire);
        let fast = solve_column(&net, &tech)?;
        let slow = oracle_solve(&net, &tech)?;
        for (a, b) in fast.bl_voltages.iter().chain(&fast.sl_voltages).zip(slow.bl_voltages.iter().chain(&slow.sl_voltages)) {
            max_dv = max_dv.max((a - b).abs());
        }
        max_res = max_res.max(fast.max_residual).max(slow.max_residual);
        max_kcl = max_kcl.max((fast.i_in - fast.i_out).abs());
    }
    // zero parasitics: every cell sees exactly v_bl
    let table = ConductanceTable::for_kind(CellKind::Sram8T);
    for _ in 0..50 {
        let cells: Vec<ColumnCell> = (0..128).map(|_| cell(rng.random_bool(0.5), rng.random_bool(0.5), 1.0)).collect();
        let k = cells.iter().filter(|c| c.state.is_on()).count() as f64;
        let leak: f64 = cells
            .iter()
            .map(|c| match (c.state.input_bit, c.state.weight_bit) {
                (true, true) => 0.0,
                (true, false) => table.g_in1_w0,
                (false, true) => table.g_in0_w1,
                (false, false) => table.g_in0_w0,
            } * 0.25)
            .sum();
        let sol = solve_column(&column(cells, &WireModel::ideal()), &tech)?;
        let expect = k * UNIT_CURRENT + leak;
        if expect > 0.0 {
            max_rel = max_rel.max((sol.i_out - expect).abs() / expect);
        }
        max_res = max_res.max(sol.max_residual);
    }
    let pass = max_dv <= 1e-10 && max_res <= RESIDUAL_TOLERANCE && max_kcl <= 1e-12 && max_rel <= 1e-9;
    outcome(
        pass,
        format!(
            "max |V fast - V oracle| {max_dv:.1e} V, max residual {max_res:.1e} A, max |I_in - I_out| {max_kcl:.1e} A, zero-parasitic rel err {max_rel:.1e}"
        ),
    )
}

fn a5() -> Result<Outcome> {
    let tech = sram();
    let wire = WireModel::default();
    let n = 128;
    let currents: Vec<f64> = (0..n)
        .map(|pos| {
            let cells = (0..n).map(|r| if r == pos { cell(true, true, 1.0) } else { cell(false, false, 1.0) }).collect();
            solve_column(&column(cells, &wire), &tech).map(|s| s.i_out)
        })
        .collect::<Result<_>>()?;
    // row n-1 is next to the ADC; moving toward row 0 must never raise the current
    let violations = currents.windows(2).filter(|w| w[0] > w[1]).count();
    outcome(
        violations == 0,
        format!(
            "single ON cell: {:.4} µA at ADC end, {:.4} µA at driver end, {violations} monotonicity violations",
            currents[n - 1] * 1e6,
            currents[0] * 1e6
        ),
    )
}

fn suite_config(technology: &str, density: f64, seeds: u64, sigma: &[f64], schedules: &str, mappings: &str) -> ExperimentConfig {
    let seeds: Vec<u64> = (0..seeds).collect();
    let text = format!(
        r#"{{"technology": "{technology}", "mapping": {mappings}, "schedule": {schedules},
            "sigma": {sigma:?}, "seeds": {seeds:?},
            "weights": {{"random": {{"density": {density}}}}}, "inputs": "all_ones"}}"#
    );
    ExperimentConfig::from_json(&text, "acceptance").unwrap()
}

fn reports(results: &[TrialResult], mapping: Mapping, schedule: ScheduleSpec, sigma: f64) -> Result<Vec<MvmReport>> {
    results
        .iter()
        .filter(|r| r.trial.mapping == mapping && r.trial.schedule == schedule && r.trial.sigma == sigma)
        .map(|r| match &r.outcome {
            Ok(rep) => Ok(rep.clone()),
            Err(e) => Err(Error::Config(format!("trial {} failed: {e}", r.trial.index))),
        })
        .collect()
}

const FULL: ScheduleSpec = ScheduleSpec { strategy: Strategy::Full, groups: 1 };
const PWA2: ScheduleSpec = ScheduleSpec { strategy: Strategy::ConsecutivePwa, groups: 2 };
const DPWA2: ScheduleSpec = ScheduleSpec { strategy: Strategy::StridedDpwa, groups: 2 };

/// Paired Baseline/Wagonn suite at one density with full, PWA and DPWA schedules.
struct Suite {
    density: f64,
    baseline: Vec<MvmReport>,
    wagonn: Vec<MvmReport>,
    pwa_wagonn: Vec<MvmReport>,
    dpwa_wagonn: Vec<MvmReport>,
}

fn run_suite(density: f64) -> Result<Suite> {
    let cfg = suite_config(
        "sram8t",
        density,
        100,
        &[0.0],
        r#"[{"strategy": "full"}, {"strategy": "pwa", "groups": 2}, {"strategy": "dpwa", "groups": 2}]"#,
        r#"["baseline", "wagonn"]"#,
    );
    let res = run_experiments(&cfg)?;
    Ok(Suite {
        density,
        baseline: reports(&res, Mapping::Baseline, FULL, 0.0)?,
        wagonn: reports(&res, Mapping::Wagonn, FULL, 0.0)?,
        pwa_wagonn: reports(&res, Mapping::Wagonn, PWA2, 0.0)?,
        dpwa_wagonn: reports(&res, Mapping::Wagonn, DPWA2, 0.0)?,
    })
}

fn a6(suites: &[Suite]) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in suites {
        let b = error_stats(&s.baseline, None)?;
        let w = error_stats(&s.wagonn, Some(&s.baseline))?;
        let win = w.win_rate.unwrap_or(0.0);
        pass &= w.mean_abs_err < b.mean_abs_err && win >= 0.95;
        parts.push(format!(
            "density {}: mean err baseline {:.4} wagonn {:.4}, win-rate {:.2} (>= 0.95)",
            s.density, b.mean_abs_err, w.mean_abs_err, win
        ));
    }
    outcome(pass, parts.join("; "))
}

fn a7(suites: &[Suite]) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in suites {
        let m = |r: &[MvmReport]| error_stats(r, None).map(|e| e.mean_abs_err);
        let (b, w, p, d) = (m(&s.baseline)?, m(&s.wagonn)?, m(&s.pwa_wagonn)?, m(&s.dpwa_wagonn)?);
        pass &= d <= p && p <= w && w <= b;
        parts.push(format!(
            "density {}: dpwa+w {d:.4} <= pwa+w {p:.4} <= wagonn {w:.4} <= baseline {b:.4}",
            s.density
        ));
    }
    outcome(pass, parts.join("; "))
}

fn a8() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for density in [0.5, 0.25] {
        let cfg = suite_config("sram8t", density, 50, &[0.1, 0.2], r#"[{"strategy": "full"}]"#, r#"["baseline", "wagonn"]"#);
        let res = run_experiments(&cfg)?;
        for sigma in [0.1, 0.2] {
            let base = reports(&res, Mapping::Baseline, FULL, sigma)?;
            let wag = reports(&res, Mapping::Wagonn, FULL, sigma)?;
            let win = error_stats(&wag, Some(&base))?.win_rate.unwrap_or(0.0);
            pass &= win >= 0.90;
            parts.push(format!("density {density} sigma {sigma}: win-rate {win:.2}"));
        }
    }
    outcome(pass, format!("{} (each >= 0.90)", parts.join(", ")))
}

fn a9() -> Result<Outcome> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny_mlp");
    let fx = MlpFixture::load(&dir)?;
    let real = demo_mlp_with(&fx, &DemoOptions::default())?;
    let ideal = demo_mlp_with(&fx, &DemoOptions { wire: WireModel::ideal(), ..DemoOptions::default() })?;
    let pass = real.wagonn_accuracy >= real.baseline_accuracy
        && ideal.baseline_accuracy == ideal.exact_accuracy
        && ideal.wagonn_accuracy == ideal.exact_accuracy;
    outcome(
        pass,
        format!(
            "default wires: baseline {:.3} wagonn {:.3}; zero parasitics: baseline {:.3} wagonn {:.3} exact {:.3}",
            real.baseline_accuracy, real.wagonn_accuracy, ideal.baseline_accuracy, ideal.wagonn_accuracy, ideal.exact_accuracy
        ),
    )
}

fn a10(suites: &[Suite]) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in suites {
        let cfg = suite_config("fefet", s.density, 100, &[0.0], r#"[{"strategy": "full"}]"#, r#"["baseline"]"#);
        let fefet = reports(&run_experiments(&cfg)?, Mapping::Baseline, FULL, 0.0)?;
        let f = error_stats(&fefet, None)?.mean_abs_err;
        let sr = error_stats(&s.baseline, None)?.mean_abs_err;
        pass &= f < sr;
        parts.push(format!("density {}: FeFET {f:.4} < SRAM {sr:.4}", s.density));
    }
    outcome(pass, parts.join("; "))
}

fn a11() -> Result<Outcome> {
    let model = |adcs| IruCostModel { n_rows: 128, adcs_per_xbar: adcs, adc_conversion_cycles: 1, cols: 128 };
    let one = iru_latency(&model(1))?;
    let sixteen = iru_latency(&model(16))?;
    let ratio = sixteen.overhead_fraction / one.overhead_fraction;
    let pass = one.remap_cycles == 128 && sixteen.remap_cycles == 128 && (ratio - 16.0).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "remap cycles {}, overhead 1 ADC {:.4}, 16 ADCs {:.4} (ratio {ratio})",
            one.remap_cycles, one.overhead_fraction, sixteen.overhead_fraction
        ),
    )
}

fn a12() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut remap_bad, mut slice_bad, mut sched_bad, mut pipe_bad) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let rows = rng.random_range(1..=64);
        let cols = rng.random_range(1..=16);
        let bits = rng.random_range(1..=8u32);
        let signed = rng.random_bool(0.5);
        let (lo, hi) = if signed { (-(1i64 << (bits - 1)), 1i64 << (bits - 1)) } else { (0, 1i64 << bits) };
        let w: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(lo..hi)).collect()).collect();
        let x: Vec<i64> = (0..rows).map(|_| rng.random_range(0..16)).collect();
        let ideal = ideal_mvm(&w, &x);

        let slices = bit_slice(&w, bits, signed)?;
        if recombine(&slices, signed) != w {
            slice_bad += 1;
        }

        let wf = WeightFile::new(w.clone(), bits, signed)?;
        let (remapped, tv) = wf.remapped()?;
        if ideal_mvm(&remapped.values, &remap_inputs(&x, &tv)?) != ideal {
            remap_bad += 1;
        }

        let bin: Vec<Vec<i64>> = w.iter().map(|r| r.iter().map(|v| v & 1).collect()).collect();
        let xb: Vec<bool> = x.iter().map(|v| v & 1 == 1).collect();
        let full = ideal_mvm(&bin, &xb.iter().map(|&b| i64::from(b)).collect::<Vec<_>>());
        for g in [1, 2, 4, 8] {
            if rows % g != 0 {
                continue;
            }
            for strat in [Strategy::ConsecutivePwa, Strategy::StridedDpwa] {
                let sched = make_groups(rows, g, strat)?;
                let cycles: Vec<Vec<i64>> = (0..g)
                    .map(|k| {
                        let m = masked_inputs(&xb, &sched, k)?;
                        Ok(ideal_mvm(&bin, &m.iter().map(|&b| i64::from(b)).collect::<Vec<_>>()))
                    })
                    .collect::<Result<_>>()?;
                if xbar_core::schedule::accumulate(&cycles)? != full {
                    sched_bad += 1;
                }
            }
        }
    }
    // whole pipeline with zero parasitics, both mappings and schedules
    let setup = DeviceSetup {
        tech: sram(),
        wire: WireModel::ideal(),
        bias: BiasConfig::default(),
        shape: ArrayShape { rows: 32, cols: 32 },
        sigma: 0.0,
        seed: 0,
    };
    for _ in 0..20 {
        let w: Vec<Vec<i64>> = (0..40).map(|_| (0..6).map(|_| rng.random_range(-8..8)).collect()).collect();
        let x: Vec<i64> = (0..40).map(|_| rng.random_range(0..16)).collect();
        for mapping in [Mapping::Baseline, Mapping::Wagonn] {
            let m = MappedMatrix::new(&w, 4, true, mapping, &setup)?;
            for sched in [ActivationSchedule::full(32), make_groups(32, 4, Strategy::StridedDpwa)?] {
                let r = mvm_execute(&x, &m, &sched, &AdcPolicy::default(), 4)?;
                if r.measured != r.ideal {
                    pipe_bad += 1;
                }
            }
        }
    }
    outcome(
        remap_bad + slice_bad + sched_bad + pipe_bad == 0,
        format!(
            "1000 random cases: remap mismatches {remap_bad}, slice round-trip failures {slice_bad}, schedule accumulation mismatches {sched_bad}; ideal pipeline mismatches {pipe_bad}/80"
        ),
    )
}

fn report(id: &str, started: Instant, r: Result<Outcome>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match r {
        Ok(o) => {
            println!("{id} {} {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("{id} FAIL error: {e} [{secs:.1}s]");
            false
        }
    }
}

fn check(id: &str, f: &dyn Fn() -> Result<Outcome>) -> bool {
    let t = Instant::now();
    report(id, t, f())
}

fn main() -> ExitCode {
    // the suites depend on these defaults
    assert_eq!(WireConfig::default().r_driver, DEFAULT_DRIVER_RESISTANCE);
    assert_eq!(WireConfig::default().r_sink, DEFAULT_SINK_RESISTANCE);

    let mut ok = true;
    ok &= check("A1", &a1);
    ok &= check("A2", &a2);
    ok &= check("A3", &a3);
    ok &= check("A4", &a4);
    ok &= check("A5", &a5);

    let t = Instant::now();
    match [0.5, 0.25].into_iter().map(run_suite).collect::<Result<Vec<Suite>>>() {
        Ok(s) => {
            println!("   paired suites built [{:.1}s]", t.elapsed().as_secs_f64());
            ok &= check("A6", &|| a6(&s));
            ok &= check("A7", &|| a7(&s));
            ok &= check("A8", &a8);
            ok &= check("A9", &a9);
            ok &= check("A10", &|| a10(&s));
        }
        Err(e) => {
            for id in ["A6", "A7"] {
                ok &= report(id, t, Err(Error::Config(format!("suite failed: {e}"))));
            }
            ok &= check("A8", &a8);
            ok &= check("A9", &a9);
            ok &= report("A10", t, Err(Error::Config(format!("suite failed: {e}"))));
        }
    }
    ok &= check("A11", &a11);
    ok &= check("A12", &a12);

    println!("acceptance: {}", if ok { "all criteria pass" } else { "some criteria FAIL" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
