//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line, even when all of them pass.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use twpa::circuit::derive_device;
use twpa::dispersion::{total_mismatch, wavenumber};
use twpa::mixer::{
    coefficients, device_squeezing, gain_db, Amplifier, LossModel, PumpConfig,
};
use twpa::sweep::{
    evaluate_metric, loss_sweep, spectrum, sweep_2d, CellFlag, Design, FrequencyGrid, Metric,
    PointFlag,
};

type Outcome = Result<String, String>;

fn check(condition: bool, pass: String, fail: String) -> Outcome {
    if condition {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Random amplifier on the reference line with `C_c`, `C_r`, pump current and
/// resonance drawn from broad ranges.
fn random_amplifier(rng: &mut ChaCha8Rng) -> Amplifier {
    let device = reference_device();
    let pump = PumpConfig::new(&device, rng.gen_range(0.0..2.0e-6), rng.gen_range(4.0..8.0) * GHZ).unwrap();
    let design = Design {
        device,
        pump,
        resonance_hz: rng.gen_range(5.0..9.0) * GHZ,
    };
    let cell = design
        .cell(rng.gen_range(1.0..45.0) * FF, rng.gen_range(1.0..60.0) * PF)
        .unwrap();
    Amplifier::new(&device, &cell, pump)
}

// 1
fn plasma_frequency() -> Outcome {
    let device = derive_device(2.75e-6, 39.5e-15, 2000, 50.0).map_err(|e| e.to_string())?;
    let f_j = device.plasma_frequency() / (2.0 * PI);
    let relative = (f_j / 73.17e9 - 1.0).abs();
    check(
        relative <= 1e-3,
        format!("f_J = {:.4} GHz (rel. error {relative:.2e} <= 1e-3)", f_j / 1e9),
        format!("f_J = {:.4} GHz, rel. error {relative:.2e} > 1e-3", f_j / 1e9),
    )
}

// 2
fn symplectic() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let (mut samples, mut real_g, mut imaginary_g) = (0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    while samples < 10_000 {
        let amp = random_amplifier(&mut rng);
        let omega = 2.0 * PI * rng.gen_range(0.5..11.5) * GHZ;
        let x = rng.gen_range(0.0..2000.0);
        let Ok(c) = coefficients(&amp.ctx, &amp.pump, omega, x) else {
            continue;
        };
        samples += 1;
        if c.g.im.abs() > c.g.re.abs() {
            imaginary_g += 1;
        } else {
            real_g += 1;
        }
        worst = worst.max((c.u.norm_sqr() - c.v.norm_sqr() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(5) && real_g > 0 && imaginary_g > 0,
        format!(
            "{samples} samples ({real_g} real g, {imaginary_g} imaginary g), max ||u|^2-|v|^2-1| = {worst:.2e} <= 1e-9, {elapsed:.2?} < 5 s"
        ),
        format!(
            "max deviation {worst:.2e} (limit 1e-9), {real_g} real / {imaginary_g} imaginary g, {elapsed:.2?} (limit 5 s)"
        ),
    )
}

// 3
fn ode_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let (mut sets, mut real_g, mut imaginary_g) = (0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    while sets < 24 || real_g < 4 || imaginary_g < 4 {
        let amp = random_amplifier(&mut rng);
        let omega = 2.0 * PI * rng.gen_range(1.0..11.0) * GHZ;
        let x = rng.gen_range(1.0..2000.0);
        let Ok(c) = coefficients(&amp.ctx, &amp.pump, omega, x) else {
            continue;
        };
        let ws = amp.ctx.to_normalized(omega);
        let wp = amp.ctx.to_normalized(amp.pump.pump_omega());
        let beta = amp.pump.beta();
        let ks = wavenumber(&amp.ctx, ws).unwrap();
        let ki = wavenumber(&amp.ctx, 2.0 * wp - ws).unwrap();
        let system = CoupledModes {
            delta_k: total_mismatch(&amp.ctx, ws, wp, beta).unwrap(),
            kappa: beta * beta * (ks * ki).sqrt(),
        };
        let (u, v) = system.integrate(x, 1e-10);
        sets += 1;
        if c.g.im.abs() > c.g.re.abs() {
            imaginary_g += 1;
        } else {
            real_g += 1;
        }
        let du = (u.norm() - c.u.norm()).abs() / c.u.norm();
        let dv = if c.v.norm() > 0.0 {
            (v.norm() - c.v.norm()).abs() / c.v.norm()
        } else {
            v.norm()
        };
        worst = worst.max(du).max(dv);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-6 && elapsed < Duration::from_secs(30),
        format!("{sets} parameter sets, max relative |u|,|v| error {worst:.2e} <= 1e-6, {elapsed:.2?} < 30 s"),
        format!("max relative error {worst:.2e} (limit 1e-6) over {sets} sets, {elapsed:.2?} (limit 30 s)"),
    )
}

// 4
fn identities() -> Outcome {
    let design = design_with_pump(0.0);
    let cell = reference_cell(&design);
    let result = spectrum(
        &design.device,
        &cell,
        &design.pump,
        &LossModel::lossless(),
        &FrequencyGrid::default_band(),
    )
    .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for i in 0..result.len() {
        if result.flags[i] != PointFlag::Ok {
            continue;
        }
        evaluated += 1;
        for value in [result.gain_db[i], result.squeeze_min_db[i], result.squeeze_max_db[i]] {
            worst = worst.max(value.unwrap().abs());
        }
    }

    let pumped = reference_design();
    let amp = pumped.amplifier(20.0 * FF, 11.0 * PF).unwrap();
    let mut origin_exact = true;
    for f in linspace(1.0 * GHZ, 11.0 * GHZ, 201) {
        if let Ok(c) = coefficients(&amp.ctx, &amp.pump, 2.0 * PI * f, 0.0) {
            origin_exact &= c.u == num_complex::Complex64::new(1.0, 0.0) && c.v.norm() == 0.0;
        }
    }
    check(
        worst <= 1e-12 && origin_exact && evaluated > 0,
        format!("beta = 0: max |G|,|S| = {worst:.1e} dB over {evaluated} points; u = 1, v = 0 at x = 0"),
        format!("beta = 0 residual {worst:.2e} dB, x = 0 exact: {origin_exact}"),
    )
}

// 5
fn loss_floor() -> Outcome {
    let design = reference_design();
    let cell = reference_cell(&design);
    let loss = LossModel::new(0.9).unwrap();
    let result = spectrum(&design.device, &cell, &design.pump, &loss, &FrequencyGrid::default_band())
        .map_err(|e| e.to_string())?;
    let abs = result.abs_squeeze_db();
    let ceiling = abs.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let peak = (0..result.len())
        .filter(|&i| result.gain_db[i].is_some())
        .max_by(|&a, &b| result.gain_db[a].partial_cmp(&result.gain_db[b]).unwrap())
        .ok_or("no valid points")?;
    let at_peak = abs[peak].unwrap();
    check(
        ceiling <= 10.0 && at_peak >= 9.0,
        format!(
            "eta = 0.9: max |S_min| = {ceiling:.3} dB <= 10, |S_min| = {at_peak:.3} dB >= 9 at the gain peak ({:.3} GHz)",
            result.frequencies[peak] / 1e9
        ),
        format!("max |S_min| = {ceiling:.3} dB (ceiling 10), {at_peak:.3} dB at the gain peak (floor 9)"),
    )
}

// 6
fn optimal_region() -> Outcome {
    let start = Instant::now();
    let design = reference_design();
    let loss = LossModel::lossless();
    let metric = Metric::GainAt { frequency: 5.0 * GHZ };
    let cc_axis = linspace(1.0 * FF, 60.0 * FF, 100);
    let cr_axis = linspace(1.0 * PF, 60.0 * PF, 100);
    let map = sweep_2d(&design, &loss, &cc_axis, &cr_axis, &metric);
    let elapsed = start.elapsed();
    let (ridge_max, _, _) = map.max().ok_or("empty map")?;

    let at_reference = evaluate_metric(&design, &loss, &metric, 20.0 * FF, 11.0 * PF)
        .map_err(|e| e.to_string())?
        .ok_or("undefined at the reference point")?;

    let low_cr: Vec<f64> = cr_axis.iter().copied().filter(|&cr| cr < 25.0 * PF).collect();
    let column = sweep_2d(&design, &loss, &[43.0 * FF], &low_cr, &metric);
    let column_max = column
        .field
        .iter()
        .flatten()
        .flatten()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let column_valid = column.flags.iter().flatten().all(|f| *f == CellFlag::Ok);

    let slice_cc = linspace(1.0 * FF, 60.0 * FF, 591);
    let slice = sweep_2d(&design, &loss, &slice_cc, &[11.0 * PF], &metric);
    let (_, _, column_index) = slice.max().ok_or("empty slice")?;
    let slice_peak = slice_cc[column_index] / FF;

    let ok = at_reference > 16.0
        && column_valid
        && column_max <= ridge_max - 10.0
        && (15.0..=25.0).contains(&slice_peak)
        && elapsed < Duration::from_secs(120);
    check(
        ok,
        format!(
            "G(20 fF, 11 pF) = {at_reference:.2} dB > 16; max G(43 fF, C_r < 25 pF) = {column_max:.2} dB <= ridge max {ridge_max:.2} - 10; C_r = 11 pF slice peaks at {slice_peak:.1} fF in [15, 25]; 100x100 map in {elapsed:.2?} < 2 min"
        ),
        format!(
            "G(20, 11) = {at_reference:.2} dB, column max {column_max:.2} dB vs ridge {ridge_max:.2} dB (valid: {column_valid}), slice peak {slice_peak:.1} fF, map time {elapsed:.2?}"
        ),
    )
}

// 7
fn improvement() -> Outcome {
    let design = reference_design();
    let loss = LossModel::lossless();
    let cc_axis = linspace(1.0 * FF, 60.0 * FF, 100);
    let cr_axis = linspace(1.0 * PF, 60.0 * PF, 100);
    let corners = [
        (cc_axis[0], cr_axis[0]),
        (cc_axis[0], cr_axis[99]),
        (cc_axis[99], cr_axis[0]),
        (cc_axis[99], cr_axis[99]),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, metric) in [
        ("gain", Metric::GainAt { frequency: 5.0 * GHZ }),
        ("|squeezing|", Metric::AbsSqueezingAt { frequency: 5.0 * GHZ }),
    ] {
        let map = sweep_2d(&design, &loss, &cc_axis, &cr_axis, &metric);
        let (best, _, _) = map.max().ok_or("empty map")?;
        let worst_corner = corners
            .iter()
            .filter_map(|&(cc, cr)| evaluate_metric(&design, &loss, &metric, cc, cr).ok().flatten())
            .fold(f64::INFINITY, f64::min);
        let gap = best - worst_corner;
        ok &= worst_corner.is_finite() && gap > 5.0;
        lines.push(format!("{name}: max {best:.2} dB vs worst feasible corner {worst_corner:.2} dB (+{gap:.2} dB)"));
    }
    let summary = lines.join("; ");
    check(ok, format!("{summary}, both > 5 dB"), summary)
}

// 8
fn loss_monotonicity() -> Outcome {
    let design = reference_design();
    let cell = reference_cell(&design);
    let etas: Vec<LossModel> = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5]
        .iter()
        .map(|&e| LossModel::new(e).unwrap())
        .collect();
    let sweep = loss_sweep(&design.device, &cell, &design.pump, &etas, &FrequencyGrid::default_band())
        .map_err(|e| e.to_string())?;
    let mut violations = 0;
    let mut compared = 0;
    for pair in sweep.spectra.windows(2) {
        let (higher, lower) = (&pair[0], &pair[1]);
        for i in 0..higher.len() {
            if let (Some(a), Some(b)) = (higher.squeeze_min_db[i], lower.squeeze_min_db[i]) {
                compared += 1;
                // squeezing magnitude may only shrink as eta drops
                if b.abs() > a.abs() {
                    violations += 1;
                }
            }
        }
    }
    check(
        violations == 0 && sweep.squeezing_monotone && compared > 0,
        format!("|S_min| non-increasing as eta goes 1.0 -> 0.5 at all {compared} comparisons"),
        format!("{violations} violations out of {compared} comparisons"),
    )
}

// 9
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("sweep.toml");
    fs::write(
        &config,
        r#"
[search]
fr_ghz = 6.06
cc_min_ff = 1.0
cc_max_ff = 60.0
cr_min_pf = 1.0
cr_max_pf = 60.0
n_cc = 24
n_cr = 20

[grid]
f_start_ghz = 1.0
f_stop_ghz = 11.0
points = 401
exclusion_mhz = 10.0

[sweep]
metrics = ["gain", "squeezing", "gain_bandwidth"]
frequency_ghz = 5.0
threshold_db = 16.0
band_ghz = [1.0, 11.0]
"#,
    )
    .map_err(|e| e.to_string())?;

    let run = |threads: &str, out: &Path| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_twpa"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .args(["--threads", threads, "--format", "csv"])
            .output()
            .map_err(|e| e.to_string())?;
        if status.status.success() {
            Ok(())
        } else {
            Err(format!("twpa exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)))
        }
    };
    let outs = [dir.path().join("t1"), dir.path().join("t8"), dir.path().join("t8b")];
    run("1", &outs[0])?;
    run("8", &outs[1])?;
    run("8", &outs[2])?;

    let mut names: Vec<_> = fs::read_dir(&outs[0])
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut identical = names.len() == 3;
    for name in &names {
        let reference = fs::read(outs[0].join(name)).map_err(|e| e.to_string())?;
        for other in &outs[1..] {
            identical &= fs::read(other.join(name)).ok().as_deref() == Some(reference.as_slice());
        }
    }
    check(
        identical,
        format!("{} CSV files byte-identical across --threads 1, 8, 8", names.len()),
        format!("outputs differ or are missing ({} files)", names.len()),
    )
}

// 10
fn idler_mirror() -> Outcome {
    let design = reference_design();
    let cell = reference_cell(&design);
    let grid = FrequencyGrid::default_band();
    let result = spectrum(&design.device, &cell, &design.pump, &LossModel::lossless(), &grid)
        .map_err(|e| e.to_string())?;
    let n = result.len();
    let mut worst: f64 = 0.0;
    let mut flags_mirror = true;
    let mut pairs = 0;
    for i in 0..n {
        let j = n - 1 - i;
        if (result.frequencies[i] + result.frequencies[j] - 12.0 * GHZ).abs() > 1.0 {
            return Err(format!("grid point {i} has no mirror"));
        }
        flags_mirror &= result.flags[i] == result.flags[j];
        if let (Some(a), Some(b)) = (result.gain_db[i], result.gain_db[j]) {
            pairs += 1;
            let (ga, gb) = (10f64.powf(a / 10.0), 10f64.powf(b / 10.0));
            worst = worst.max((ga - gb).abs() / ga.max(gb));
        }
    }
    // exact mirror frequencies, off the grid
    let amp = design.amplifier(20.0 * FF, 11.0 * PF).unwrap();
    for f in linspace(1.0 * GHZ, 5.9 * GHZ, 97) {
        let a = amp.output_coefficients(f).map_err(|e| e.to_string())?;
        let b = amp.output_coefficients(12.0 * GHZ - f).map_err(|e| e.to_string())?;
        let (ga, gb) = (10f64.powf(gain_db(&a) / 10.0), 10f64.powf(gain_db(&b) / 10.0));
        worst = worst.max((ga - gb).abs() / ga.max(gb));
        worst = worst.max((device_squeezing(&a, &LossModel::lossless()).min
            - device_squeezing(&b, &LossModel::lossless()).min)
            .abs());
    }
    check(
        worst <= 1e-10 && flags_mirror,
        format!("G(f) = G(12 GHz - f) on {pairs} grid pairs, max relative difference {worst:.1e} <= 1e-10"),
        format!("max relative difference {worst:.2e} (limit 1e-10), flags mirrored: {flags_mirror}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("plasma frequency", plasma_frequency),
        ("symplectic identity", symplectic),
        ("closed form vs ODE integration", ode_oracle),
        ("zero-pump and zero-length identities", identities),
        ("loss floor at eta = 0.9", loss_floor),
        ("optimal region at 5 GHz", optimal_region),
        ("optimization improvement > 5 dB", improvement),
        ("squeezing monotone in eta", loss_monotonicity),
        ("CLI determinism across thread counts", determinism),
        ("idler mirror symmetry", idler_mirror),
    ];
    let mut failures = 0;
    for (index, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = criterion();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.2?}]", index + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{elapsed:.2?}]", index + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
