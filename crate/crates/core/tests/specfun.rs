//! Bessel-function oracles: exact rational ascending series, the finite
//! sum for K of half-integer order, Wronskians and LogValue arithmetic.

use std::f64::consts::PI;

use casimir::specfun::{
    bessel_j_half, bessel_y_half, hankel2_half, log_bessel_i_half, log_bessel_k_half, log_k_seq, ratio_jy, wrap_phase,
    ComplexLogValue, LogValue, ModifiedBesselSeq, OrdinaryBesselSeq, L_CAP,
};
use casimir::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn factorial(n: u32) -> BigRational {
    (1..=i64::from(n)).fold(BigRational::one(), |acc, k| acc * big(k))
}

/// Γ(n + 1/2)/√π as an exact rational, any integer n.
fn gamma_half_over_sqrt_pi(n: i64) -> BigRational {
    if n >= 0 {
        let n = n as u32;
        factorial(2 * n) / (factorial(n) * (0..n).fold(BigRational::one(), |acc, _| acc * big(4)))
    } else {
        let k = (-n) as u32;
        let four = (0..k).fold(BigRational::one(), |acc, _| acc * big(-4));
        four * factorial(k) / factorial(2 * k)
    }
}

/// Σ_k (−1)^k (x²/4)^k / (k! · Γ(k + n + 1/2)/√π), exactly, for rational x.
fn half_order_series(n: i64, x: &BigRational, terms: u32) -> BigRational {
    let q = x * x / big(4);
    let mut sum = BigRational::zero();
    let mut qk = BigRational::one();
    for k in 0..terms {
        let term = &qk / (factorial(k) * gamma_half_over_sqrt_pi(i64::from(k) + n));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        qk = qk * &q;
    }
    sum
}

/// Converts an exact rational to (sign, ln|value|) without overflow.
fn ln_abs(r: &BigRational) -> (f64, f64) {
    let num = r.numer().abs();
    let den = r.denom().abs();
    let (nb, db) = (num.bits() as i64, den.bits() as i64);
    let shift_n = (nb - 900).max(0) as usize;
    let shift_d = (db - 900).max(0) as usize;
    let nf = (&num >> shift_n).to_f64().unwrap();
    let df = (&den >> shift_d).to_f64().unwrap();
    let ln = nf.ln() - df.ln() + (shift_n as f64 - shift_d as f64) * std::f64::consts::LN_2;
    (if r.is_negative() { -1.0 } else { 1.0 }, ln)
}

fn series_terms(x: f64) -> u32 {
    40 + (4.0 * x) as u32
}

/// J_{l+1/2}(x) = (x/2)^{l+1/2}/√π · S_{l+1}(x).
fn j_oracle(l: u32, x: &BigRational) -> (f64, f64) {
    let xf = x.to_f64().unwrap();
    let (s, ln) = ln_abs(&half_order_series(i64::from(l) + 1, x, series_terms(xf)));
    (s, ln + (f64::from(l) + 0.5) * (xf / 2.0).ln() - 0.5 * PI.ln())
}

/// Y_{l+1/2}(x) = (−1)^{l+1} J_{−l−1/2}(x) = (−1)^{l+1}(x/2)^{−l−1/2}/√π · S_{−l}(x).
fn y_oracle(l: u32, x: &BigRational) -> (f64, f64) {
    let xf = x.to_f64().unwrap();
    let (s, ln) = ln_abs(&half_order_series(-i64::from(l), x, series_terms(xf)));
    let sign = if l % 2 == 0 { -s } else { s };
    (sign, ln - (f64::from(l) + 0.5) * (xf / 2.0).ln() - 0.5 * PI.ln())
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_log(v: LogValue, (sign, ln): (f64, f64), tol: f64) {
    assert_eq!(f64::from(v.sign()), sign, "sign mismatch");
    assert!(
        (v.log_magnitude() - ln).abs() < tol,
        "log magnitude {} vs oracle {ln} (diff {:e})",
        v.log_magnitude(),
        v.log_magnitude() - ln
    );
}

/// I_{l+1/2}(x) = (x/2)^{l+1/2} Σ_k (x²/4)^k/(k! Γ(k+l+3/2)): all terms
/// positive, so f64 summation is accurate.
fn i_oracle_ln(l: usize, x: f64) -> f64 {
    let nu = l as f64 + 0.5;
    let q = x * x / 4.0;
    let lg = |z: f64| casimir::specfun::ln_gamma_half((z - 0.5).round() as usize);
    let mut term = (-lg(nu + 1.0)).exp();
    let mut sum = term;
    let mut k = 0.0;
    while term > 1e-18 * sum {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
    }
    nu * (x / 2.0).ln() + sum.ln()
}

/// K_{l+1/2}(x) = √(π/2x) e^{−x} Σ_{k≤l} (l+k)!/(k!(l−k)!) (2x)^{−k}.
fn k_oracle_ln(l: usize, x: f64) -> f64 {
    // ln of (l+k)!/(k!(l−k)!) (2x)^{−k}, summed relative to the largest term.
    let mut logs = Vec::with_capacity(l + 1);
    let mut c = 0.0;
    for k in 0..=l {
        logs.push(c);
        let kf = k as f64;
        c += ((l as f64 + kf + 1.0) * (l as f64 - kf) / ((kf + 1.0) * 2.0 * x)).ln();
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|v| (v - top).exp()).sum();
    0.5 * (PI / (2.0 * x)).ln() - x + top + sum.ln()
}

#[test]
fn modified_i_closed_form_and_series() {
    let v = log_bessel_i_half(0, 1.0).unwrap();
    assert!(rel(v.value(), (2.0 / PI).sqrt() * 1f64.sinh()) < 1e-14);
    assert!((v.value() - 0.93767).abs() < 1e-5);
    let v = log_bessel_i_half(5, 0.1).unwrap();
    assert!((v.log_magnitude() - i_oracle_ln(5, 0.1)).abs() < 1e-12);
    for &x in &[0.01, 0.3, 1.0, 7.5, 30.0, 120.0] {
        let s = ModifiedBesselSeq::new(60, x).unwrap();
        for l in 0..=60 {
            let diff = s.log_i(l) - i_oracle_ln(l, x);
            assert!(diff.abs() < 1e-12, "I_{l}+1/2({x}): log diff {diff:e}");
        }
    }
}

#[test]
fn modified_i_small_argument_power_law() {
    let a = log_bessel_i_half(0, 1e-8).unwrap().log_magnitude();
    let b = log_bessel_i_half(0, 1e-10).unwrap().log_magnitude();
    // ln I_{1/2}(x) ≈ (1/2) ln x + const as x → 0.
    assert!(((a - b) / (1e-8f64 / 1e-10).ln() - 0.5).abs() < 1e-8);
}

#[test]
fn modified_k_closed_form_and_finite_sum() {
    let v = log_bessel_k_half(0, 1.0).unwrap();
    assert_eq!(v.sign(), 1);
    assert!(rel(v.value(), (PI / 2.0).sqrt() * (-1f64).exp()) < 1e-14);
    assert!((v.value() - 0.46107).abs() < 1e-5);
    let v = log_bessel_k_half(0, 100.0).unwrap();
    assert!((v.log_magnitude() - (-100.0 + (PI / 200.0).sqrt().ln())).abs() < 1e-12);
    let v = log_bessel_k_half(10, 2.0).unwrap();
    assert!(rel(v.log_magnitude().exp(), k_oracle_ln(10, 2.0).exp()) < 1e-12);
    for &x in &[0.01, 0.3, 1.0, 7.5, 30.0, 500.0] {
        let k = log_k_seq(300, x).unwrap();
        let s = ModifiedBesselSeq::new(300, x).unwrap();
        for l in 0..=300 {
            let oracle = k_oracle_ln(l, x);
            assert!((k[l] - oracle).abs() < 1e-12 * oracle.abs().max(1.0), "K_{l}+1/2({x})");
            assert_eq!(k[l], s.log_k(l));
        }
    }
}

#[test]
fn ordinary_bessel_against_exact_rational_series() {
    for (num, den) in [(1, 10), (1, 1), (5, 2), (10, 1)] {
        let xr = rational(num, den);
        let x = num as f64 / den as f64;
        let s = OrdinaryBesselSeq::new(50, x).unwrap();
        for l in 0..=50u32 {
            check_log(s.j(l as usize), j_oracle(l, &xr), 1e-10);
            check_log(s.y(l as usize), y_oracle(l, &xr), 1e-10);
        }
    }
}

#[test]
fn ordinary_bessel_low_order_zeros() {
    let j = bessel_j_half(0, PI).unwrap();
    assert!(j.value().abs() < 1e-12);
    let y = bessel_y_half(0, PI / 2.0).unwrap();
    assert!(y.value().abs() < 1e-12);
}

#[test]
fn large_index_leading_behaviour() {
    // Leading large-order forms: J ≈ e^{ν − ν ln ν + ν ln(z/2)}/√(2πν) and
    // |Y| ≈ √(2/πν) e^{−ν + ν ln ν − ν ln(z/2)}, so |J·Y| ≈ 1/(πν).
    let (l, x) = (20usize, 1.0f64);
    let nu = l as f64 + 0.5;
    let j = bessel_j_half(l, x).unwrap();
    let y = bessel_y_half(l, x).unwrap();
    assert!(j.log_magnitude() < -40.0 && y.log_magnitude() > 40.0);
    let product = (j * y).value();
    assert!(product.is_finite());
    let lead_j = (nu - nu * nu.ln() + nu * (x / 2.0).ln()).exp() / (2.0 * PI * nu).sqrt();
    let lead_y = (2.0 / (PI * nu)).sqrt() * (-nu + nu * nu.ln() - nu * (x / 2.0).ln()).exp();
    assert!(rel(product.abs(), lead_j * lead_y) < 0.1, "J·Y = {product}");
}

#[test]
fn ratio_jy_values() {
    assert!((ratio_jy(0, PI / 4.0).unwrap() + 1.0).abs() < 1e-14);
    assert!(ratio_jy(0, 1e-6).unwrap().abs() < 1e-5);
    let (l, x) = (10usize, 1.0f64);
    let nu = l as f64 + 0.5;
    let lead = -0.5 * (2.0 * (-nu * nu.ln() + nu + nu * (x / 2.0).ln())).exp();
    let r = ratio_jy(l, x).unwrap();
    assert!(rel(r, lead) < 0.2, "ratio {r} vs leading {lead}");
    assert!(matches!(ratio_jy(0, PI / 2.0), Err(Error::Pole(_))));
}

#[test]
fn hankel_order_half() {
    let h = hankel2_half(0, 1.0).unwrap().value();
    let c = (2.0 / PI).sqrt();
    assert!((h.re - c * 1f64.sin()).abs() < 1e-14 && (h.im - c * 1f64.cos()).abs() < 1e-14);
    assert!((h.norm() - c).abs() < 1e-14);
    let mut prev = hankel2_half(0, 1.0).unwrap().phase();
    let mut x = 1.0;
    while x < 10.0 {
        x += 0.05;
        let ph = hankel2_half(0, x).unwrap().phase();
        assert!(wrap_phase(ph - prev) < 0.0, "phase must decrease at x = {x}");
        prev = ph;
    }
    let s = OrdinaryBesselSeq::new(3, 2.0).unwrap();
    let h = hankel2_half(3, 2.0).unwrap().value();
    let (j, y) = (s.j(3).value(), s.y(3).value());
    assert!((h.re - j).abs() < 1e-12 * j.abs() && (h.im + y).abs() < 1e-12 * y.abs());
}

#[test]
fn domain_errors() {
    assert!(matches!(log_bessel_i_half(0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(log_bessel_i_half(0, -1.0), Err(Error::Domain(_))));
    assert!(matches!(log_bessel_k_half(0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(log_bessel_i_half(L_CAP + 1, 1.0), Err(Error::Domain(_))));
    assert!(matches!(bessel_j_half(0, f64::NAN), Err(Error::Domain(_))));
    assert!(L_CAP >= 200);
}

fn wronskian_j(l: usize, x: f64) -> f64 {
    let s = OrdinaryBesselSeq::new(l + 1, x).unwrap();
    let a = (s.j(l + 1) * s.y(l)).value();
    let b = (s.j(l) * s.y(l + 1)).value();
    (a - b) * PI * x / 2.0
}

fn wronskian_ik(l: usize, x: f64) -> f64 {
    let s = ModifiedBesselSeq::new(l + 1, x).unwrap();
    let a = (s.log_i(l) + s.log_k(l + 1)).exp();
    let b = (s.log_i(l + 1) + s.log_k(l)).exp();
    -(a + b) * x
}

#[test]
fn wronskians_grid() {
    for &x in &[0.1, 1.0, 10.0] {
        for l in 0..=50 {
            assert!((wronskian_j(l, x) - 1.0).abs() < 1e-9, "J/Y Wronskian l={l} x={x}");
            assert!((wronskian_ik(l, x) + 1.0).abs() < 1e-10, "I/K Wronskian l={l} x={x}");
        }
    }
}

#[test]
fn log_value_arithmetic() {
    assert_eq!(LogValue::ZERO.value(), 0.0);
    assert_eq!(LogValue::from_f64(0.0).sign(), 0);
    let a = LogValue::new(-1, 9.0e5);
    let b = LogValue::new(1, 9.0e5);
    let p = a * b;
    assert_eq!(p.sign(), -1);
    assert_eq!(p.log_magnitude(), 1.8e6);
    assert!(((a / b).value() + 1.0).abs() < 1e-15);
    let z = ComplexLogValue::new(1.0, 3.0) * ComplexLogValue::new(2.0, 3.0);
    assert!((z.log_magnitude() - 3.0).abs() < 1e-15);
    assert!((z.phase() - (6.0 - 2.0 * PI)).abs() < 1e-14);
    assert!(z.phase() <= PI && z.phase() > -PI);
}

proptest! {
    #[test]
    fn wronskian_j_random(l in 0usize..200, x in 0.05f64..200.0) {
        prop_assert!((wronskian_j(l, x) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wronskian_ik_random(l in 0usize..300, x in 0.01f64..500.0) {
        prop_assert!((wronskian_ik(l, x) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_product_matches_direct(l in 0usize..40, x in 0.1f64..20.0, y in 0.1f64..20.0) {
        let i = log_bessel_i_half(l, x).unwrap();
        let k = log_bessel_k_half(l, y).unwrap();
        let direct = i.value() * k.value();
        prop_assume!(direct.is_normal());
        prop_assert!(rel((i * k).value(), direct) < 1e-12);
    }

    #[test]
    fn log_value_roundtrip(v in -1e300f64..1e300) {
        let lv = LogValue::from_f64(v);
        // The log representation carries a relative error of about |ln v|·ε.
        prop_assert!(v == 0.0 || rel(lv.value(), v) < 1e-12);
        prop_assert_eq!(f64::from(lv.sign()), if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
    }

    #[test]
    fn log_value_product_never_overflows(a in -1e6f64..1e6, b in -1e6f64..1e6, sa in prop::bool::ANY, sb in prop::bool::ANY) {
        let x = LogValue::new(if sa { 1 } else { -1 }, a);
        let y = LogValue::new(if sb { 1 } else { -1 }, b);
        let p = x * y;
        prop_assert!(p.log_magnitude().is_finite());
        prop_assert!((p.log_magnitude() - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs()).max(1.0));
        prop_assert_eq!(p.sign(), x.sign() * y.sign());
    }

    #[test]
    fn complex_phase_wraps(m1 in -50.0f64..50.0, p1 in -3.14f64..3.14, m2 in -50.0f64..50.0, p2 in -3.14f64..3.14) {
        let z = ComplexLogValue::new(m1, p1) * ComplexLogValue::new(m2, p2);
        prop_assert!(z.phase() > -PI && z.phase() <= PI);
        prop_assert!((wrap_phase(z.phase() - p1 - p2)).abs() < 1e-12);
    }
}
