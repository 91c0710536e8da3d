use std::f64::consts::PI;

use casimir_trace::quadrature::{QuadratureSpec, Scheme};
use casimir_trace::scatter1d::{
    cantor_stack, dirichlet_energy_per_area, extract_coefficient, interaction_energy_per_area, pair_energy_per_area,
    reflection_delta, stack_energy_per_area, stack_transfer, PlateStack, DIRICHLET_PAIR_COEFFICIENT,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pair value for λ₁ = λ₂ = 1, d = 1 from a 40-digit evaluation of the
/// Green's-function determinant integral.
const PAIR_UNIT: f64 = -0.000701448362361298797092035297004;
/// Level-1 triadic stack {0, 1/3, 2/3, 1}, λ = 1, same evaluation.
const CANTOR_LEVEL1_UNIT: f64 = -0.0142791132930486793490182074289;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `∫₀^∞ κ² ln(1 − e^{−2κ}) dκ = −Σ 2/(n(2n)³)`, summed until the tail bound
/// `1/(12N³)` drops below 1e-14.
fn dirichlet_series() -> f64 {
    let mut sum = 0.0;
    let mut n = 1u64;
    loop {
        let nf = n as f64;
        sum -= 2.0 / (nf * (2.0 * nf).powi(3));
        if 1.0 / (12.0 * nf.powi(3)) < 1e-14 {
            break;
        }
        n += 1;
    }
    sum
}

/// Plain trapezoid rule with `nodes` points on `[0, kmax]`.
fn trapezoid_pair(l1: f64, l2: f64, d: f64, nodes: usize, kmax: f64) -> f64 {
    let h = kmax / (nodes - 1) as f64;
    let f = |k: f64| {
        if k == 0.0 {
            return 0.0;
        }
        let r1 = l1 / (l1 + 2.0 * k);
        let r2 = l2 / (l2 + 2.0 * k);
        k * k * (-r1 * r2 * (-2.0 * k * d).exp()).ln_1p()
    };
    let mut s = 0.5 * (f(0.0) + f(kmax));
    for i in 1..nodes - 1 {
        s += f(i as f64 * h);
    }
    s * h / (4.0 * PI * PI)
}

/// `ln Δ` from the Green's-function determinant `det(δᵢⱼ + rᵢ e^{−κ|zᵢ−zⱼ|})`,
/// diagonal excluded from the coupling term.
fn green_log_det(stack: &PlateStack, kappa: f64) -> f64 {
    let z = stack.positions();
    let l = stack.couplings();
    let n = z.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            l[i] / (l[i] + 2.0 * kappa) * (-kappa * (z[i] - z[j]).abs()).exp()
        }
    });
    m.determinant().ln()
}

fn random_stack(rng: &mut ChaCha8Rng, max_plates: usize) -> PlateStack {
    let n = rng.gen_range(2..=max_plates);
    let mut z = 0.0;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push(z);
        z += rng.gen_range(0.2..2.0);
    }
    let couplings = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.5))).collect();
    PlateStack::new(positions, couplings).unwrap()
}

#[test]
fn dirichlet_series_matches_closed_form() {
    let series = dirichlet_series();
    assert!((series + PI.powi(4) / 360.0).abs() < 1e-13, "{series}");
}

#[test]
fn dirichlet_limit_pair() {
    // series oracle mapped to energy: (1/4π²)·(−π⁴/360)/d³
    let oracle_coeff = dirichlet_series() / (4.0 * PI * PI);
    assert!(rel(oracle_coeff, DIRICHLET_PAIR_COEFFICIENT) < 1e-12);
    for d in [0.5, 1.0, 2.0] {
        let e = pair_energy_per_area(1e6 / d, 1e6 / d, d, &quad()).unwrap();
        assert!(rel(e, oracle_coeff / d.powi(3)) < 1e-3, "d = {d}: {e}");
    }
}

#[test]
fn pinned_pair_value_against_trapezoid() {
    let e = pair_energy_per_area(1.0, 1.0, 1.0, &quad()).unwrap();
    let brute = trapezoid_pair(1.0, 1.0, 1.0, 1_000_000, 40.0);
    assert!(rel(e, brute) < 1e-8, "{e} vs {brute}");
    assert!(rel(e, PAIR_UNIT) < 1e-9, "{e} vs {PAIR_UNIT}");
}

#[test]
fn transparent_limit() {
    let e = pair_energy_per_area(1e-12, 1.0, 1.0, &quad()).unwrap();
    assert!(e < 0.0 && e.abs() < 1e-12, "{e}");
}

#[test]
fn level_one_cantor_binds_deeper_than_outer_pair() {
    let stack = cantor_stack(1, 1.0, 1.0, 3.0).unwrap();
    let e = stack_energy_per_area(&stack, &quad()).unwrap();
    let outer = pair_energy_per_area(1.0, 1.0, 1.0, &quad()).unwrap();
    assert!(e < outer, "{e} vs {outer}");
    assert!(rel(e, CANTOR_LEVEL1_UNIT) < 1e-9, "{e} vs {CANTOR_LEVEL1_UNIT}");
}

#[test]
fn transfer_matches_green_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let stack = random_stack(&mut rng, 8);
        for kappa in [0.05, 0.3, 1.0, 4.0] {
            let t = stack_transfer(&stack, kappa).unwrap();
            let g = green_log_det(&stack, kappa);
            assert!((t.log_det - g).abs() < 1e-11 * (1.0 + g.abs()), "κ = {kappa}: {} vs {g}", t.log_det);
        }
    }
}

#[test]
fn single_plate_reflection_is_stack_reflection() {
    for (l, k) in [(1.0, 0.5), (3.0, 2.0), (1e-3, 10.0)] {
        let s = PlateStack::uniform(vec![0.0], l).unwrap();
        let t = stack_transfer(&s, k).unwrap();
        assert!((t.reflection - reflection_delta(l, k).unwrap()).abs() < 1e-15);
        assert_eq!(t.log_det, 0.0);
    }
}

#[test]
fn two_plate_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let l1 = 10f64.powf(rng.gen_range(-1.0..2.0));
        let l2 = 10f64.powf(rng.gen_range(-1.0..2.0));
        let d = rng.gen_range(0.1..5.0);
        let stack = PlateStack::new(vec![0.3, 0.3 + d], vec![l1, l2]).unwrap();
        let n = stack_energy_per_area(&stack, &quad()).unwrap();
        let p = pair_energy_per_area(l1, l2, d, &quad()).unwrap();
        assert!(rel(n, p) < 1e-10, "{n} vs {p}");
    }
}

#[test]
fn scale_invariance_level_two() {
    let base = cantor_stack(2, 1.0, 2.0, 3.0).unwrap();
    let e = stack_energy_per_area(&base, &quad()).unwrap();
    for s in [0.5, 2.0, 10.0] {
        let scaled = PlateStack::new(
            base.positions().iter().map(|z| z * s).collect(),
            base.couplings().iter().map(|l| l / s).collect(),
        )
        .unwrap();
        let es = stack_energy_per_area(&scaled, &quad()).unwrap() * s.powi(3);
        assert!(rel(es, e) < 1e-9, "s = {s}: {es} vs {e}");
    }
}

#[test]
fn quadrature_refinement_is_monotone() {
    let stack = cantor_stack(2, 1.0, 1.0, 3.0).unwrap();
    let mut prev_tol = 1e-6;
    let mut prev = stack_energy_per_area(&stack, &QuadratureSpec { rel_tol: prev_tol, ..quad() }).unwrap();
    for _ in 0..4 {
        let tol = prev_tol / 2.0;
        let e = stack_energy_per_area(&stack, &QuadratureSpec { rel_tol: tol, ..quad() }).unwrap();
        assert!((e - prev).abs() <= prev_tol * prev.abs(), "{e} vs {prev}");
        prev = e;
        prev_tol = tol;
    }
}

#[test]
fn fixed_and_adaptive_agree() {
    let stack = cantor_stack(3, 1.0, 5.0, 3.0).unwrap();
    let fixed = stack_energy_per_area(&stack, &quad()).unwrap();
    let adaptive = stack_energy_per_area(&stack, &QuadratureSpec { scheme: Scheme::Adaptive, ..quad() }).unwrap();
    assert!(rel(fixed, adaptive) < 1e-8, "{fixed} vs {adaptive}");
}

#[test]
fn cluster_decomposition() {
    // Cross term between two halves, as a direct two-body integral and as a
    // difference of total energies. The outer scale is the unit of length.
    let left = cantor_stack(1, 1.0, 1.0, 3.0).unwrap();
    let right = left.clone();
    let cross_at = |sep: f64| interaction_energy_per_area(&left, &right, sep, &quad()).unwrap();

    let near = 2.0;
    let joined = left.joined(&right.translated(left.extent() + near).unwrap()).unwrap();
    let total = stack_energy_per_area(&joined, &quad()).unwrap();
    let own = stack_energy_per_area(&left, &quad()).unwrap();
    let diff = total - 2.0 * own;
    assert!(rel(cross_at(near), diff) < 1e-8, "{} vs {diff}", cross_at(near));

    let far = 1e3 * left.extent();
    let cross = cross_at(far);
    let tail = DIRICHLET_PAIR_COEFFICIENT / far.powi(3);
    assert!(
        cross.abs() < 1e-12,
        "cross-interaction {cross:e} at separation {far}; the perfect-mirror tail there is {tail:e}"
    );
}

#[test]
fn cross_interaction_decays_as_inverse_cube() {
    let body = cantor_stack(1, 1.0, 1.0, 3.0).unwrap();
    let a = interaction_energy_per_area(&body, &body, 1e3, &quad()).unwrap();
    let b = interaction_energy_per_area(&body, &body, 1e4, &quad()).unwrap();
    assert!(rel(a / b, 1e3) < 2e-2, "{}", a / b);
    assert!(a.abs() < DIRICHLET_PAIR_COEFFICIENT.abs() / 1e9);
    assert!(b.abs() < 1e-12);
}

#[test]
fn mirror_pairs_attract() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let body = random_stack(&mut rng, 5);
        let image = body.mirrored();
        let energies: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&gap| interaction_energy_per_area(&body, &image, gap, &quad()).unwrap())
            .collect();
        for w in energies.windows(2) {
            assert!(w[0] < w[1] && w[1] < 0.0, "{energies:?}");
        }
    }
}

#[test]
fn dirichlet_ceiling() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let stack = random_stack(&mut rng, 6);
        let e = stack_energy_per_area(&stack, &quad()).unwrap();
        let ceiling = dirichlet_energy_per_area(&stack);
        assert!(e.abs() < ceiling.abs(), "{e} vs {ceiling}");
    }
}

#[test]
fn level_zero_fixed_coupling_is_scale_free() {
    let grid: Vec<f64> = (0..16).map(|i| 0.5 * 1.2f64.powi(i)).collect();
    for lambda_hat in [0.3, 10.0, 1e6] {
        let r = extract_coefficient(0, lambda_hat, &grid, &quad()).unwrap();
        let c0 = r.c_values[0];
        for (c, t) in r.c_values.iter().zip(&r.traces) {
            assert!((c - c0).abs() < 1e-8 * c0.abs());
            assert!(t.abs() < 1e-8);
        }
    }
    let r = extract_coefficient(0, 1e6, &grid, &quad()).unwrap();
    assert!(rel(r.c_values[0], DIRICHLET_PAIR_COEFFICIENT) < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_energy_is_negative_and_bounded(l1 in 1e-2f64..1e3, l2 in 1e-2f64..1e3, d in 0.05f64..20.0) {
        let e = pair_energy_per_area(l1, l2, d, &quad()).unwrap();
        prop_assert!(e < 0.0);
        prop_assert!(e.abs() < DIRICHLET_PAIR_COEFFICIENT.abs() / d.powi(3));
    }

    #[test]
    fn energy_is_translation_invariant(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_stack(&mut rng, 6);
        let a = stack_energy_per_area(&stack, &quad()).unwrap();
        let b = stack_energy_per_area(&stack.translated(shift).unwrap(), &quad()).unwrap();
        prop_assert!(rel(a, b) < 1e-9);
    }

    #[test]
    fn energy_is_mirror_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_stack(&mut rng, 6);
        let a = stack_energy_per_area(&stack, &quad()).unwrap();
        let b = stack_energy_per_area(&stack.mirrored(), &quad()).unwrap();
        prop_assert!(rel(a, b) < 1e-9);
    }
}
