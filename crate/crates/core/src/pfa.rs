//! Parallel-plate free energy at finite temperature, the thermal correction
//! functions g and h, and the proximity-force approximation (PFA) for the
//! sphere–plane geometry together with its closed-form regime expansions.
//!
//! Normalization: `mode_count = 2` is the electromagnetic pair of
//! polarizations, `mode_count = 1` a single scalar mode; every result is
//! linear in the mode count.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::Geometry;
use crate::quad::{integrate, integrate_to_infinity};
use crate::specfun::{ZETA3, ZETA4};

/// Below this argument g and h are evaluated from their small-argument
/// lines. The neglected terms are relatively of order e^{−2π/x}/x (below
/// 1e−16 here), while the image sum would lose digits to the cancellation
/// of its leading −1.
pub const SMALL_ARGUMENT: f64 = 0.15;

const QUAD_REL: f64 = 1e-12;
const QUAD_SUBDIVISIONS: usize = 2000;

/// A parallel-plate configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlatePoint {
    d: f64,
    t: f64,
    mode_count: u8,
}

impl PlatePoint {
    pub fn new(d: f64, t: f64, mode_count: u8) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("plate separation must be positive, got {d}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("temperature must be non-negative, got {t}")));
        }
        check_mode_count(mode_count)?;
        Ok(Self { d, t, mode_count })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mode_count(&self) -> u8 {
        self.mode_count
    }
}

fn check_mode_count(mode_count: u8) -> Result<()> {
    if mode_count == 1 || mode_count == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("mode count must be 1 or 2, got {mode_count}")))
    }
}

fn mode_factor(mode_count: u8) -> f64 {
    0.5 * f64::from(mode_count)
}

fn check_temperature(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be non-negative, got {t}")))
    }
}

/// Free energy per unit area of two parallel plates:
/// (mode_count/2)·(−π²/(720 d³))·(1 + g(2dT)).
pub fn parallel_plates_free_energy(p: PlatePoint) -> f64 {
    plates(p.d, p.t, mode_factor(p.mode_count))
}

fn plates(d: f64, t: f64, factor: f64) -> f64 {
    -factor * PI * PI / (720.0 * d * d * d) * (1.0 + g_function(2.0 * d * t))
}

/// Sums `term(m)` for m = 1, 2, … until a term drops below
/// 1e−17·(|base| + |partial|); the terms are positive and decreasing.
fn exp_tail_sum(base: f64, term: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut m = 1.0;
    loop {
        let v = term(m);
        sum += v;
        if v <= 1e-17 * (base.abs() + sum.abs()) {
            return sum;
        }
        m += 1.0;
    }
}

/// The plate thermal correction g, summed over images with the algebraic
/// part ζ(3)/(πx)³ split off so the remaining terms decay exponentially.
/// Below [`SMALL_ARGUMENT`] the small-argument line 45ζ(3)x³/π³ − x⁴ is used.
pub fn g_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < SMALL_ARGUMENT {
        return g_small(x);
    }
    let px = PI * x;
    let base = ZETA3 / (px * px * px);
    let tail = exp_tail_sum(base, |m| {
        let y = m * px;
        let q = (-2.0 * y).exp();
        let one_minus_q = -(-2.0 * y).exp_m1();
        // (coth y − 1)/y³ + 1/(y sinh y)²
        2.0 * q / (y * y * y * one_minus_q) + 4.0 * q / (y * y * one_minus_q * one_minus_q)
    });
    -1.0 + 45.0 * ZETA3 * x / PI.powi(3) + 45.0 * x.powi(4) * tail
}

/// Small-argument line of g: 45ζ(3)x³/π³ − x⁴.
pub fn g_small(x: f64) -> f64 {
    45.0 * ZETA3 / PI.powi(3) * x.powi(3) - x.powi(4)
}

/// Large-argument line of g: 45ζ(3)x/π³ − 1.
pub fn g_large(x: f64) -> f64 {
    45.0 * ZETA3 / PI.powi(3) * x - 1.0
}

/// The small- or large-argument line of g, whichever applies (they
/// coincide at x = 1).
pub fn g_asymptotic(x: f64) -> f64 {
    if x <= 1.0 {
        g_small(x)
    } else {
        g_large(x)
    }
}

/// g from its momentum-integral representation: the frequency sum over
/// n ≥ 1 of ∫₀^∞ k ln(1 − exp(−√((2πnx)² + k²))) dk, each by quadrature.
/// Independent of [`g_function`]; used for validation.
pub fn g_integral(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    let mut n = 1.0;
    loop {
        let a = 2.0 * PI * n * x;
        if a > 60.0 {
            break;
        }
        let q = integrate_to_infinity(
            |k: f64| {
                let r = (a * a + k * k).sqrt();
                Ok(k * (-(-r).exp()).ln_1p())
            },
            0.0,
            0.0,
            QUAD_REL,
            QUAD_SUBDIVISIONS,
        )?;
        sum += q.value;
        n += 1.0;
    }
    Ok(-1.0 + 45.0 * ZETA3 * x / PI.powi(3) - 90.0 * x / PI.powi(3) * sum)
}

/// The sphere–plane thermal correction h(x) = 90x⁴ Σ_m [coth(mπx)/(mπx)³ −
/// (mπx)⁻⁴], equal to 2∫₁^∞ g(tx)/t³ dt. Below [`SMALL_ARGUMENT`] the
/// small-argument line 5x² − 90ζ(3)x³/π³ + x⁴ is used.
pub fn h_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < SMALL_ARGUMENT {
        return h_small(x);
    }
    let px = PI * x;
    let base = ZETA3 / (px * px * px);
    let tail = exp_tail_sum(base, |m| {
        let y = m * px;
        let q = (-2.0 * y).exp();
        let one_minus_q = -(-2.0 * y).exp_m1();
        2.0 * q / (y * y * y * one_minus_q)
    });
    // 90x⁴·ζ(4)/(πx)⁴ = 1 exactly.
    90.0 * ZETA3 * x / PI.powi(3) - 90.0 * ZETA4 / PI.powi(4) + 90.0 * x.powi(4) * tail
}

/// Small-argument line of h: 5x² − 90ζ(3)x³/π³ + x⁴.
pub fn h_small(x: f64) -> f64 {
    5.0 * x * x - 90.0 * ZETA3 / PI.powi(3) * x.powi(3) + x.powi(4)
}

/// Large-argument line of h: 90ζ(3)x/π³ − 1.
pub fn h_large(x: f64) -> f64 {
    90.0 * ZETA3 / PI.powi(3) * x - 1.0
}

/// h(x) = 2∫₁^∞ g(tx)/t³ dt by adaptive quadrature; validation path.
pub fn h_integral(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let q = integrate_to_infinity(|t| Ok(g_function(t * x) / (t * t * t)), 1.0, 0.0, QUAD_REL, QUAD_SUBDIVISIONS)?;
    Ok(2.0 * q.value)
}

/// ∫₀^∞ g(t)/t³ dt by quadrature, split at t = 1.
pub fn g_moment() -> Result<f64> {
    let near = integrate(|t| Ok(if t == 0.0 { 0.0 } else { g_function(t) / (t * t * t) }), 0.0, 1.0, 0.0, QUAD_REL, QUAD_SUBDIVISIONS)?;
    let far = integrate_to_infinity(|t| Ok(g_function(t) / (t * t * t)), 1.0, 0.0, QUAD_REL, QUAD_SUBDIVISIONS)?;
    Ok(near.value + far.value)
}

/// Integrates `weight(a)·F_∥(a)` over the local separation a ∈ [d, d+R] in
/// the variable u = ln a, which flattens the 1/a³ peak at contact.
fn over_profile(geom: &Geometry, t: f64, factor: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
    let (d, r) = (geom.d(), geom.r());
    let q = integrate(
        |u: f64| {
            let a = u.exp();
            Ok(weight(a) * a * plates(a, t, factor))
        },
        d.ln(),
        (d + r).ln(),
        0.0,
        QUAD_REL,
        QUAD_SUBDIVISIONS,
    )?;
    Ok(q.value)
}

/// PFA free energy 2πR² ∫₀¹ (1−t) F_∥(d+Rt, T) dt.
pub fn pfa_free_energy(geom: &Geometry, t: f64, mode_count: u8) -> Result<f64> {
    check_mode_count(mode_count)?;
    check_temperature(t)?;
    geom.require_separated()?;
    let top = geom.d() + geom.r();
    Ok(2.0 * PI * over_profile(geom, t, mode_factor(mode_count), |a| top - a)?)
}

/// PFA force 2πR (F_∥(d, T) − ∫₀¹ F_∥(d+Rt, T) dt), the negative
/// separation derivative of [`pfa_free_energy`].
pub fn pfa_force(geom: &Geometry, t: f64, mode_count: u8) -> Result<f64> {
    check_mode_count(mode_count)?;
    check_temperature(t)?;
    geom.require_separated()?;
    let factor = mode_factor(mode_count);
    let mean = over_profile(geom, t, factor, |_| 1.0)? / geom.r();
    Ok(2.0 * PI * geom.r() * (plates(geom.d(), t, factor) - mean))
}

/// Which parameter is held fixed as ε = d/R → 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// RT fixed, dT = εRT → 0: low and medium temperature.
    LowMedium,
    /// dT fixed, RT = dT/ε → ∞: medium and high temperature.
    MediumHigh,
}

/// A closed-form limit of a regime expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeLimit {
    /// The condition under which the limit applies, e.g. "RT << 1".
    pub condition: &'static str,
    pub energy: f64,
    pub force: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeResult {
    pub energy: f64,
    pub force: f64,
    /// The two limiting forms on either side of the regime.
    pub limits: Vec<RegimeLimit>,
    /// Set when the inputs violate the regime's inequalities.
    pub warnings: Vec<String>,
}

/// Regime inequalities "a ≪ b" are flagged when a/b exceeds this.
const MUCH_LESS: f64 = 0.1;

/// Leading small-ε expansions of the PFA energy and force.
pub fn pfa_regime(geom: &Geometry, t: f64, regime: Regime, mode_count: u8) -> Result<RegimeResult> {
    check_mode_count(mode_count)?;
    check_temperature(t)?;
    geom.require_separated()?;
    let factor = mode_factor(mode_count);
    let (r, d, eps) = (geom.r(), geom.d(), geom.epsilon());
    let (rt, dt) = (r * t, d * t);
    let e0 = -factor * PI.powi(3) * r / (720.0 * d * d);
    let f0 = -factor * PI.powi(3) * r / (360.0 * d * d * d);
    let c3 = 360.0 * ZETA3 / PI.powi(3);
    let mut warnings = Vec::new();
    if eps > MUCH_LESS {
        warnings.push(format!("separation ratio d/R = {eps} is not small"));
    }
    let result = match regime {
        Regime::LowMedium => {
            if dt > MUCH_LESS {
                warnings.push(format!("dT = {dt} is not small for the fixed-RT expansion"));
            }
            let (energy_integral, force_integral) = if rt == 0.0 {
                (0.0, 0.0)
            } else {
                let ge = integrate(
                    |s: f64| Ok(if s == 0.0 { 0.0 } else { (1.0 - s) * g_function(2.0 * s * rt) / s.powi(3) }),
                    0.0,
                    1.0,
                    0.0,
                    QUAD_REL,
                    QUAD_SUBDIVISIONS,
                )?;
                let gf = integrate(
                    |s: f64| Ok(if s == 0.0 { 0.0 } else { g_function(2.0 * s * rt) / s.powi(3) }),
                    0.0,
                    1.0,
                    0.0,
                    QUAD_REL,
                    QUAD_SUBDIVISIONS,
                )?;
                (ge.value, gf.value)
            };
            RegimeResult {
                energy: e0 * (1.0 + 2.0 * eps * eps * energy_integral),
                force: f0 * (1.0 + eps.powi(3) * (c3 * rt.powi(3) - force_integral)),
                limits: vec![
                    RegimeLimit {
                        condition: "RT << 1",
                        energy: e0 * (1.0 + eps * eps * c3 * rt.powi(3)),
                        force: f0 * (1.0 + 8.0 * eps.powi(3) * rt.powi(4)),
                    },
                    RegimeLimit {
                        condition: "RT >> 1",
                        energy: e0 * (1.0 + 20.0 * eps * eps * rt * rt),
                        force: f0 * (1.0 + eps.powi(3) * c3 * rt.powi(3)),
                    },
                ],
                warnings,
            }
        }
        Regime::MediumHigh => {
            if rt < 1.0 / MUCH_LESS {
                warnings.push(format!("RT = {rt} is not large for the fixed-dT expansion"));
            }
            RegimeResult {
                energy: e0 * (1.0 + h_function(2.0 * dt)),
                force: f0 * (1.0 + g_function(2.0 * dt)),
                limits: vec![
                    RegimeLimit {
                        condition: "dT << 1",
                        energy: e0 * (1.0 + 20.0 * eps * eps * rt * rt),
                        force: f0 * (1.0 + eps.powi(3) * c3 * rt.powi(3)),
                    },
                    RegimeLimit {
                        condition: "dT >> 1",
                        energy: -factor * ZETA3 * r * t / (4.0 * d),
                        force: -factor * ZETA3 * r * t / (4.0 * d * d),
                    },
                ],
                warnings,
            }
        }
    };
    Ok(result)
}
