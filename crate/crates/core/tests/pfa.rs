//! Parallel plates, the thermal functions g and h, and the PFA energy, force
//! and regime expansions.

use std::f64::consts::PI;

use casimir::kernel::Geometry;
use casimir::pfa::{
    g_asymptotic, g_function, g_integral, g_large, g_moment, g_small, h_function, h_integral, h_large, h_small,
    parallel_plates_free_energy, pfa_force, pfa_free_energy, pfa_regime, PlatePoint, Regime, SMALL_ARGUMENT,
};
use casimir::specfun::ZETA3;
use proptest::prelude::*;

const INVERSION_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Independent oracle for g: direct summation of the image series with
/// coth and sinh, no splitting of the algebraic part (converges for x ≳ 0.05).
fn g_direct(x: f64) -> f64 {
    const TERMS: u32 = 200_000;
    let mut s = 0.0;
    for m in 1..=TERMS {
        let y = f64::from(m) * PI * x;
        s += 1.0 / (y.tanh() * y.powi(3)) + 1.0 / (y * y.sinh()).powi(2);
    }
    // The coth series converges only like m⁻³: add the Euler–Maclaurin tail
    // of Σ_{m>N} (mπx)⁻³.
    let n = f64::from(TERMS);
    s += (1.0 / (2.0 * n * n) - 1.0 / (2.0 * n.powi(3))) / (PI * x).powi(3);
    -1.0 + 45.0 * x.powi(4) * s
}

#[test]
fn plates_at_zero_temperature() {
    for d in [0.3, 1.0, 4.0] {
        let p = PlatePoint::new(d, 0.0, 2).unwrap();
        assert!(rel(parallel_plates_free_energy(p), -PI * PI / (720.0 * d.powi(3))) < 1e-15);
    }
}

#[test]
fn plates_at_high_temperature() {
    // (mode_count = 2) −ζ(3)T/(8πd²) up to exponentially small terms.
    let (d, t) = (1.0, 20.0);
    let p = PlatePoint::new(d, t, 2).unwrap();
    let want = -ZETA3 * t / (8.0 * PI * d * d);
    let got = parallel_plates_free_energy(p);
    // the constant −1 of g's large line is a relative 1/(g+1) ~ 1e−2 here
    assert!(rel(got, want * (1.0 + g_large(2.0 * d * t)) / (45.0 * ZETA3 * 2.0 * d * t / PI.powi(3))) < 1e-12);
    assert!(rel(got, want) < 2e-2);
}

#[test]
fn plates_reject_bad_input() {
    assert!(PlatePoint::new(0.0, 1.0, 2).is_err());
    assert!(PlatePoint::new(1.0, -1.0, 2).is_err());
    assert!(PlatePoint::new(1.0, 1.0, 3).is_err());
}

#[test]
fn g_examples() {
    assert_eq!(g_function(0.0), 0.0);
    assert!((g_function(0.1) - 1.6446e-3).abs() < 1e-7);
    assert!((g_function(0.1) - (45.0 * ZETA3 / PI.powi(3) * 1e-3 - 1e-4)).abs() < 1e-15);
    assert!((g_function(1.0) - 0.7842).abs() < 1e-4);
    assert!((g_function(1.0) - 0.784201545331).abs() < 1e-11);
}

#[test]
fn g_against_direct_summation() {
    for x in [0.1, 0.2, 0.3, 1.0, 2.0, 5.0] {
        let (a, b) = (g_function(x), g_direct(x));
        assert!(rel(a, b) < 1e-9, "x={x}: {a} vs {b}");
    }
}

#[test]
fn g_small_argument_switch_is_seamless() {
    let above = SMALL_ARGUMENT * (1.0 + 1e-9);
    assert!(rel(g_function(above), g_small(above)) < 1e-12);
    assert!(rel(h_function(above), h_small(above)) < 1e-12);
    // Just above the switch the image sum and the small line still agree.
    for x in [0.16, 0.2] {
        assert!(rel(g_function(x), g_small(x)) < 2e-12, "x={x}");
    }
    for x in [0.02, 0.05, 0.1, 0.16] {
        assert!(rel(g_integral(x).unwrap(), g_function(x)) < 1e-8, "x={x}");
    }
}

#[test]
fn g_integral_representation() {
    for x in [0.3, 1.0, 3.0] {
        assert!(rel(g_integral(x).unwrap(), g_function(x)) < 1e-8, "x={x}");
    }
}

#[test]
fn g_inversion_symmetry() {
    for x in INVERSION_GRID {
        let (a, b) = (g_function(x), x.powi(4) * g_function(1.0 / x));
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "x={x}: {a} vs {b}");
    }
}

#[test]
fn g_asymptotic_lines() {
    assert_eq!(g_function(0.02), g_small(0.02));
    assert!(rel(g_function(20.0), g_large(20.0)) < 1e-12);
    assert_eq!(g_asymptotic(0.5), g_small(0.5));
    assert_eq!(g_asymptotic(2.0), g_large(2.0));
    // Both lines agree at x = 1 and lie about 5% below the exact value
    // there; the 5% bound itself is checked by the acceptance suite.
    assert!((g_small(1.0) - g_large(1.0)).abs() < 1e-15);
    let dev = rel(g_asymptotic(1.0), g_function(1.0));
    assert!((dev - 0.0505).abs() < 5e-4, "deviation {dev}");
}

#[test]
fn g_moment_is_five_halves() {
    assert!((g_moment().unwrap() - 2.5).abs() < 1e-6);
}

#[test]
fn h_examples() {
    assert_eq!(h_function(0.0), 0.0);
    assert!((h_function(1.0) - 2.5).abs() < 1e-12);
    // In the doubled-argument convention the small line is 20x² and the
    // large line 180ζ(3)x/π³ − 1.
    for x in [1e-3, 3e-3] {
        assert!(rel(h_function(2.0 * x), 20.0 * x * x) < 3.0 * x);
    }
    assert!((h_function(20.0) - 68.79).abs() < 0.01);
    // In this normalization the same arguments give:
    assert!((h_function(0.1) - 0.04661).abs() < 1e-5);
    assert!((h_function(10.0) - 33.891).abs() < 1e-3);
}

#[test]
fn h_sum_and_integral_agree() {
    for x in [0.05, 0.1, 0.3, 0.7, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let (a, b) = (h_function(x), h_integral(x).unwrap());
        assert!(rel(a, b) < 1e-8, "x={x}: {a} vs {b}");
    }
}

#[test]
fn h_asymptotic_lines() {
    assert_eq!(h_function(0.02), h_small(0.02));
    assert!(rel(h_function(0.2), h_small(0.2)) < 2e-12);
    assert!(rel(h_function(20.0), h_large(20.0)) < 1e-12);
}

#[test]
fn h_inversion_symmetry() {
    for x in INVERSION_GRID {
        let lhs = h_function(1.0 / x);
        let rhs = 5.0 / (x * x) - h_function(x) / x.powi(4);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0 / (x * x)), "x={x}: {lhs} vs {rhs}");
    }
}

#[test]
fn h_derivative_identity() {
    // d/dx [h(x)/x²] = −2g(x)/x³
    for x in [0.3, 1.0, 3.0] {
        let f = |y: f64| h_function(y) / (y * y);
        let step = 1e-4 * x;
        let fd = (f(x - 2.0 * step) - 8.0 * f(x - step) + 8.0 * f(x + step) - f(x + 2.0 * step)) / (12.0 * step);
        let want = -2.0 * g_function(x) / x.powi(3);
        assert!(rel(fd, want) < 1e-6, "x={x}: {fd} vs {want}");
    }
}

#[test]
fn pfa_energy_at_zero_temperature() {
    for eps in [1e-3, 1e-2, 0.1, 1.0] {
        let g = Geometry::from_epsilon(1.0, eps).unwrap();
        let want = -PI.powi(3) * g.r() / (720.0 * g.d().powi(2)) / (1.0 + eps);
        assert!(rel(pfa_free_energy(&g, 0.0, 2).unwrap(), want) < 1e-6, "ε={eps}");
    }
}

#[test]
fn pfa_energy_at_fixed_dt_approaches_the_h_formula() {
    let eps = 1e-5;
    let g = Geometry::from_epsilon(1.0, eps).unwrap();
    let t = 1.0 / g.d();
    let want = -PI.powi(3) * g.r() / (720.0 * g.d().powi(2)) * (1.0 + h_function(2.0));
    assert!(rel(pfa_free_energy(&g, t, 2).unwrap(), want) < 1e-3);
}

#[test]
fn fixed_dt_expansion_is_first_order_accurate() {
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let g = Geometry::from_epsilon(1.0, eps).unwrap();
        let t = 1.0 / g.d();
        let regime = pfa_regime(&g, t, Regime::MediumHigh, 2).unwrap();
        let full = pfa_free_energy(&g, t, 2).unwrap();
        let dev = rel(regime.energy, full);
        assert!(dev < 20.0 * eps, "ε={eps}: {dev}");
        assert!(dev < prev);
        prev = dev;
    }
}

#[test]
fn low_temperature_limit_of_the_fixed_rt_expansion() {
    // RT ≪ 1: thermal part ≈ e0·ε²·(360ζ(3)/π³)(RT)³
    let eps = 1e-3;
    let g = Geometry::from_epsilon(1.0, eps).unwrap();
    for rt in [0.05, 0.1] {
        let t = rt / g.r();
        let e0 = -PI.powi(3) * g.r() / (720.0 * g.d().powi(2));
        let thermal = pfa_free_energy(&g, t, 2).unwrap() - pfa_free_energy(&g, 0.0, 2).unwrap();
        let want = e0 * eps * eps * 360.0 * ZETA3 / PI.powi(3) * rt.powi(3);
        assert!(rel(thermal, want) < 0.1, "RT={rt}: {thermal} vs {want}");
        let regime = pfa_regime(&g, t, Regime::LowMedium, 2).unwrap();
        let lim = regime.limits.iter().find(|l| l.condition == "RT << 1").unwrap();
        // (the subtraction of e0 cancels all but ~1e−9 of it)
        assert!(rel(lim.energy - e0, want) < 1e-6);
        assert!(regime.warnings.is_empty(), "{:?}", regime.warnings);
    }
    // At RT = 2 the inequality is violated and flagged.
    let regime = pfa_regime(&g, 2.0, Regime::LowMedium, 2).unwrap();
    assert!(pfa_regime(&g, 2.0, Regime::LowMedium, 2).is_ok());
    let lim = regime.limits.iter().find(|l| l.condition == "RT << 1").unwrap();
    let thermal = pfa_free_energy(&g, 2.0, 2).unwrap() - pfa_free_energy(&g, 0.0, 2).unwrap();
    let e0 = -PI.powi(3) / (720.0 * g.d().powi(2));
    assert!(rel(lim.energy - e0, thermal) > 0.1, "outside its regime the limit is not accurate");
}

#[test]
fn fixed_rt_expansion_tracks_the_full_integral() {
    let eps = 1e-3;
    let g = Geometry::from_epsilon(1.0, eps).unwrap();
    for rt in [0.5, 2.0, 10.0] {
        let r = pfa_regime(&g, rt, Regime::LowMedium, 2).unwrap();
        let full = pfa_free_energy(&g, rt, 2).unwrap();
        let full0 = pfa_free_energy(&g, 0.0, 2).unwrap();
        let reg0 = pfa_regime(&g, 0.0, Regime::LowMedium, 2).unwrap().energy;
        // thermal corrections agree at leading order
        assert!(rel(r.energy - reg0, full - full0) < 0.05, "RT={rt}");
        let ff = pfa_force(&g, rt, 2).unwrap() - pfa_force(&g, 0.0, 2).unwrap();
        let rf = r.force - pfa_regime(&g, 0.0, Regime::LowMedium, 2).unwrap().force;
        assert!(rel(rf, ff) < 0.05, "RT={rt}: force {rf} vs {ff}");
    }
}

#[test]
fn regime_force_bracket_is_one_plus_g() {
    let g = Geometry::from_epsilon(1.0, 1e-3).unwrap();
    for dt in [0.2, 1.0, 5.0] {
        let t = dt / g.d();
        let r = pfa_regime(&g, t, Regime::MediumHigh, 1).unwrap();
        let f0 = -0.5 * PI.powi(3) * g.r() / (360.0 * g.d().powi(3));
        assert!(rel(r.force / f0 - 1.0, g_function(2.0 * dt)) < 1e-12);
        assert!(rel(pfa_force(&g, t, 1).unwrap(), r.force) < 20.0 * 1e-3);
    }
}

#[test]
fn moment_limit_of_the_fixed_rt_expansion() {
    // RT ≫ 1: the energy integral tends to the moment 5/2, giving 20ε²(RT)².
    let g = Geometry::from_epsilon(1.0, 1e-4).unwrap();
    let rt = 200.0;
    let r = pfa_regime(&g, rt, Regime::LowMedium, 2).unwrap();
    let lim = r.limits.iter().find(|l| l.condition == "RT >> 1").unwrap();
    let e0 = -PI.powi(3) * g.r() / (720.0 * g.d().powi(2));
    assert!(rel(r.energy - e0, lim.energy - e0) < 0.02);
    assert!(rel(lim.energy / e0 - 1.0, 20.0 * 1e-8 * rt * rt) < 1e-12);
}

#[test]
fn high_temperature_force() {
    let g = Geometry::from_epsilon(1.0, 1e-3).unwrap();
    let t = 5.0 / g.d();
    for mode_count in [1, 2] {
        let want = -f64::from(mode_count) / 2.0 * ZETA3 * g.r() * t / (4.0 * g.d().powi(2));
        let r = pfa_regime(&g, t, Regime::MediumHigh, mode_count).unwrap();
        let lim = r.limits.iter().find(|l| l.condition == "dT >> 1").unwrap();
        assert!(rel(lim.force, want) < 1e-15);
        // exact force: the large-dT line of g differs by the constant −1
        let got = pfa_force(&g, t, mode_count).unwrap();
        assert!(rel(got, want) < 0.02, "{got} vs {want}");
    }
}

#[test]
fn proximity_force_theorem() {
    for eps in [1e-3, 1e-4] {
        let g = Geometry::from_epsilon(1.0, eps).unwrap();
        let p = PlatePoint::new(g.d(), 0.0, 2).unwrap();
        let want = 2.0 * PI * g.r() * parallel_plates_free_energy(p);
        assert!(rel(pfa_force(&g, 0.0, 2).unwrap(), want) < 2.0 * eps);
    }
}

#[test]
fn force_is_minus_the_energy_derivative() {
    for (eps, t) in [(0.01, 1.0), (0.1, 1.0), (0.5, 3.0)] {
        let g = Geometry::from_epsilon(1.0, eps).unwrap();
        let h = 1e-4 * g.d();
        let e = |d: f64| pfa_free_energy(&g.with_d(d).unwrap(), t, 1).unwrap();
        let fd = -(e(g.d() + h) - e(g.d() - h)) / (2.0 * h);
        assert!(rel(pfa_force(&g, t, 1).unwrap(), fd) < 1e-6, "ε={eps}");
    }
}

#[test]
fn table_point_thermal_force() {
    // ε = 0.01, T = 1, R = 1, one scalar mode: thermal part of the force,
    // reported together with its R·f magnitude (see the acceptance suite).
    let g = Geometry::from_epsilon(1.0, 0.01).unwrap();
    let thermal = pfa_force(&g, 1.0, 1).unwrap() - pfa_force(&g, 0.0, 1).unwrap();
    assert!(thermal < 0.0, "thermal force is attractive: {thermal}");
    assert!(thermal.is_finite());
}

#[test]
fn regime_warnings() {
    let g = Geometry::from_epsilon(1.0, 0.5).unwrap();
    let r = pfa_regime(&g, 1.0, Regime::MediumHigh, 2).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("d/R")));
    assert!(r.warnings.iter().any(|w| w.contains("RT")));
    assert!(pfa_regime(&g, 1.0, Regime::LowMedium, 3).is_err());
}

#[test]
fn moment_oracle_matches_regime_energy_integral() {
    // The fixed-dT energy at dT → 0 corresponds to the integral limit.
    assert!((h_function(2e-3) / (20.0 * 1e-6) - 1.0).abs() < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_count_is_linear(d in 0.05f64..5.0, t in 0.0f64..10.0, eps in 0.01f64..1.0) {
        let a = parallel_plates_free_energy(PlatePoint::new(d, t, 1).unwrap());
        let b = parallel_plates_free_energy(PlatePoint::new(d, t, 2).unwrap());
        prop_assert!((2.0 * a - b).abs() <= 1e-15 * b.abs());
        let g = Geometry::from_epsilon(1.0, eps).unwrap();
        let (e1, e2) = (pfa_free_energy(&g, t, 1).unwrap(), pfa_free_energy(&g, t, 2).unwrap());
        prop_assert!((2.0 * e1 - e2).abs() <= 1e-13 * e2.abs());
        let (f1, f2) = (pfa_force(&g, t, 1).unwrap(), pfa_force(&g, t, 2).unwrap());
        prop_assert!((2.0 * f1 - f2).abs() <= 1e-13 * f2.abs());
    }

    #[test]
    fn g_inversion_everywhere(x in 0.02f64..50.0) {
        let (a, b) = (g_function(x), x.powi(4) * g_function(1.0 / x));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }

    #[test]
    fn h_inversion_everywhere(x in 0.02f64..50.0) {
        let lhs = h_function(1.0 / x);
        let rhs = 5.0 / (x * x) - h_function(x) / x.powi(4);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0 / (x * x)));
    }

    #[test]
    fn thermal_corrections_increase_with_temperature(x in 0.0f64..20.0, dx in 0.01f64..1.0) {
        prop_assert!(g_function(x + dx) > g_function(x));
        prop_assert!(h_function(x + dx) > h_function(x));
    }
}
