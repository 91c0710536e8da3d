//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use casimir_trace::logfit::{fit_log_periodic, residual_by_order, FitConfig};
use casimir_trace::prefractal::{min_level, PrefractalSpec};
use casimir_trace::quadrature::QuadratureSpec;
use casimir_trace::scatter1d::{
    cantor_stack, extract_coefficient, interaction_energy_per_area, log_grid, pair_energy_per_area,
    stack_energy_per_area, PlateStack,
};
use casimir_trace::trace_core::{
    energy_per_area, normal_pressure, CoefficientModel, Harmonic, ThermalState, VacuumStress,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn random_model(rng: &mut ChaCha8Rng) -> CoefficientModel {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let c0 = sign * 10f64.powf(rng.gen_range(-2.0..0.0));
    let k = rng.gen_range(0..=3);
    let harmonics = (0..k)
        .map(|_| Harmonic {
            cos: rng.gen_range(-0.2..0.2),
            sin: rng.gen_range(-0.2..0.2),
        })
        .collect();
    CoefficientModel::new(c0, rng.gen_range(0.5..3.0), harmonics, rng.gen_range(0.5..2.0)).unwrap()
}

fn random_d(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-2.0..2.0))
}

/// `∫₀^∞ κ² ln(1 − e^{−2κ}) dκ` as `−Σ 2/(n(2n)³)`, tail below 1e-14.
fn dirichlet_series() -> f64 {
    let mut sum = 0.0;
    let mut n = 1.0f64;
    while 1.0 / (12.0 * n.powi(3)) >= 1e-14 {
        sum -= 2.0 / (n * (2.0 * n).powi(3));
        n += 1.0;
    }
    sum - 2.0 / (n * (2.0 * n).powi(3))
}

fn flat_plate_benchmark() -> Outcome {
    let c0 = -PI * PI / 720.0;
    let model = CoefficientModel::constant(c0);
    let ((e, p), elapsed) = timed(|| (energy_per_area(&model, 1.0).unwrap(), normal_pressure(&model, 1.0).unwrap()));
    let (re, rp) = (rel(e, -PI * PI / 720.0), rel(p, -PI * PI / 240.0));
    check(
        re <= 1e-12 && rp <= 1e-12 && elapsed < Duration::from_millis(1),
        format!("rel err e {re:.1e}, P⊥ {rp:.1e}, {elapsed:?}"),
    )
}

fn conformal_tracelessness() -> Outcome {
    let model = CoefficientModel::constant(-PI * PI / 720.0);
    let grid = log_grid(1e-3, 1e3, 10_000).unwrap();
    let (worst, elapsed) = timed(|| {
        grid.iter()
            .map(|&d| {
                let s = VacuumStress::assemble(&model, d).unwrap();
                s.trace.abs() / (s.rho_vac.abs() + 2.0 * s.p_parallel.abs() + s.p_perp.abs())
            })
            .fold(0.0f64, f64::max)
    });
    check(
        worst <= 4.0 * f64::EPSILON && elapsed < Duration::from_millis(100),
        format!("max |trace|/scale {worst:.1e}, {elapsed:?}"),
    )
}

fn trace_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let model = random_model(&mut rng);
        for _ in 0..100 {
            let d = random_d(&mut rng);
            let s = VacuumStress::assemble(&model, d).unwrap();
            let x = (d / model.ell_star).ln();
            let expected = -model.slope_at(x) / d.powi(4);
            let scale = s.rho_vac.abs() + 2.0 * s.p_parallel.abs() + s.p_perp.abs();
            worst = worst.max((s.trace - expected).abs() / scale);
        }
    }
    check(worst <= 8.0 * f64::EPSILON, format!("max deviation {worst:.1e} of stress scale"))
}

fn virtual_work() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let model = random_model(&mut rng);
        for _ in 0..100 {
            let d = random_d(&mut rng);
            let h = 1e-5 * d;
            let fd = -(energy_per_area(&model, d + h).unwrap() - energy_per_area(&model, d - h).unwrap()) / (2.0 * h);
            let p = normal_pressure(&model, d).unwrap();
            let x = (d / model.ell_star).ln();
            let scale = (3.0 * model.value_at(x).abs() + model.slope_at(x).abs()) / d.powi(4);
            worst = worst.max((p - fd).abs() / scale);
        }
    }
    check(worst <= 1e-6, format!("max relative error {worst:.1e}"))
}

fn thermal_sector() -> Outcome {
    let three = ThermalState::new(7.0, 3.0, 3.0).unwrap().trace();
    let fractal = ThermalState::new(2.0, 1.0, 1.5).unwrap().trace();
    check(three == 0.0 && fractal == 2.0, format!("d_s = 3: {three:e}, d_s = 1.5: {fractal:e}"))
}

fn dirichlet_quadrature() -> Outcome {
    let oracle = dirichlet_series() / (4.0 * PI * PI);
    let quad = QuadratureSpec::default();
    let (errs, elapsed) = timed(|| {
        [0.5, 1.0, 2.0]
            .map(|d| rel(pair_energy_per_area(1e6 / d, 1e6 / d, d, &quad).unwrap(), oracle / d.powi(3)))
    });
    let worst = errs.iter().copied().fold(0.0, f64::max);
    check(
        worst < 1e-3 && elapsed < Duration::from_secs(1),
        format!("max rel err {worst:.1e} vs series oracle, {elapsed:?}"),
    )
}

fn two_plate_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let quad = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l1 = 10f64.powf(rng.gen_range(-1.0..2.0));
        let l2 = 10f64.powf(rng.gen_range(-1.0..2.0));
        let d = rng.gen_range(0.1..5.0);
        let stack = PlateStack::new(vec![0.0, d], vec![l1, l2]).unwrap();
        let n = stack_energy_per_area(&stack, &quad).unwrap();
        let p = pair_energy_per_area(l1, l2, d, &quad).unwrap();
        worst = worst.max(rel(n, p));
    }
    check(worst < 1e-10, format!("max rel diff {worst:.1e}"))
}

fn scale_invariance() -> Outcome {
    let quad = QuadratureSpec::default();
    let base = cantor_stack(2, 1.0, 1.0, 3.0).unwrap();
    let e = stack_energy_per_area(&base, &quad).unwrap();
    let mut worst = 0.0f64;
    for s in [0.5, 2.0, 10.0] {
        let scaled = cantor_stack(2, s, 1.0 / s, 3.0).unwrap();
        worst = worst.max(rel(stack_energy_per_area(&scaled, &quad).unwrap() * s.powi(3), e));
    }
    check(worst < 1e-9, format!("max rel diff {worst:.1e}"))
}

fn level_zero_extraction() -> Outcome {
    let grid = log_grid(0.25, 16.0, 64).unwrap();
    let (r, elapsed) = timed(|| extract_coefficient(0, 5.0, &grid, &QuadratureSpec::default()).unwrap());
    let c0 = r.c_values[0];
    let spread = r.c_values.iter().map(|c| (c - c0).abs() / c0.abs()).fold(0.0, f64::max);
    let trace = r.traces.iter().map(|t| t.abs()).fold(0.0, f64::max);
    check(
        spread < 1e-8 && trace < 1e-8 && elapsed < Duration::from_secs(10),
        format!("C spread {spread:.1e}, max |trace| {trace:.1e}, {elapsed:?}"),
    )
}

fn fit_round_trip() -> Outcome {
    let p = 3f64.ln();
    let truth = vec![Harmonic { cos: 0.1, sin: 0.0 }, Harmonic { cos: 0.0, sin: 0.05 }];
    let model = CoefficientModel::new(-0.01, p, truth.clone(), 1.0).unwrap();
    let x: Vec<f64> = (0..128).map(|i| -2.0 + 3.0 * p * i as f64 / 128.0).collect();
    let c: Vec<f64> = x.iter().map(|&x| model.value_at(x)).collect();
    let fit = fit_log_periodic(&x, &c, &FitConfig::new(p, 2)).map_err(|e| e.to_string())?;
    let worst = fit
        .model
        .harmonics
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a.cos - b.cos).abs().max((a.sin - b.sin).abs()))
        .fold(0.0, f64::max);
    let orders = residual_by_order(&x, &c, &FitConfig::new(p, 4)).map_err(|e| e.to_string())?;
    let monotone = orders.windows(2).all(|w| w[1].1 <= w[0].1);
    check(
        worst < 1e-8 && monotone,
        format!("max amplitude error {worst:.1e}, residual monotone in K: {monotone}"),
    )
}

fn design_bound() -> Outcome {
    let n = min_level(100.0, 1.0, 3.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    for _ in 0..10_000 {
        let outer = 10f64.powf(rng.gen_range(-3.0..3.0));
        let b = rng.gen_range(1.01..10.0);
        let d = outer * 10f64.powf(rng.gen_range(-8.0..-1e-6));
        let level = min_level(outer, d, b).unwrap();
        if PrefractalSpec::new(outer, b, level).unwrap().min_feature() > d {
            violations += 1;
        }
    }
    check(n == 5 && violations == 0, format!("n_min = {n}, violations {violations}/10000"))
}

fn mirror_attraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let quad = QuadratureSpec::default();
    let mut bad = 0;
    for _ in 0..10 {
        let n = rng.gen_range(1..=5);
        let mut z = 0.0;
        let mut positions = Vec::new();
        for _ in 0..n {
            positions.push(z);
            z += rng.gen_range(0.2..2.0);
        }
        let couplings = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.5))).collect();
        let body = PlateStack::new(positions, couplings).unwrap();
        let image = body.mirrored();
        let e: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&g| interaction_energy_per_area(&body, &image, g, &quad).unwrap())
            .collect();
        if !(e[0] < e[1] && e[1] < e[2] && e[2] < 0.0) {
            bad += 1;
        }
    }
    check(bad == 0, format!("{bad}/10 stacks with a non-attractive slope"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("flat-plate benchmark", flat_plate_benchmark),
        ("conformal tracelessness", conformal_tracelessness),
        ("trace identity", trace_identity),
        ("virtual work", virtual_work),
        ("thermal sector", thermal_sector),
        ("Dirichlet quadrature", dirichlet_quadrature),
        ("two-plate reduction", two_plate_reduction),
        ("scale invariance", scale_invariance),
        ("level-0 extraction", level_zero_extraction),
        ("fit round trip", fit_round_trip),
        ("design bound", design_bound),
        ("mirror-pair attraction", mirror_attraction),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
