//! Half-integer-order Bessel functions in log-scaled form.
//!
//! Order index `l` always stands for ν = l + 1/2. Whole sequences over `l`
//! are produced at once because every consumer needs all orders up to some
//! maximum: modified functions via Miller-style continued fractions (I,
//! downward) and forward recurrence (K, upward); ordinary functions via
//! forward recurrence in the oscillatory region plus continued-fraction
//! ratios past the turning point (J) and rescaled forward recurrence (Y).

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::ops::{Div, Mul, Neg};

use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Largest order index accepted by the sequence generators.
///
/// The translation sums need plane-wave orders up to `2 l_max`, so the cap is
/// well above the largest multipole index used in practice.
pub const L_CAP: usize = 1024;

pub const ZETA2: f64 = 1.644_934_066_848_226_4;
pub const ZETA3: f64 = 1.202_056_903_159_594_2;
pub const ZETA4: f64 = 1.082_323_233_711_138_2;

/// A real number stored as sign and natural-log magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    sign: i8,
    log_magnitude: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, log_magnitude: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: 1, log_magnitude: 0.0 };

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign: sign.signum(), log_magnitude }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: if x > 0.0 { 1 } else { -1 }, log_magnitude: x.abs().ln() }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn value(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_magnitude.exp()
        }
    }

    /// `value() * exp(-shift)`, for combining numbers relative to a common scale.
    pub fn scaled(self, shift: f64) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * (self.log_magnitude - shift).exp()
        }
    }

    pub fn recip(self) -> Self {
        LogValue { sign: self.sign, log_magnitude: -self.log_magnitude }
    }

    pub fn abs(self) -> Self {
        LogValue { sign: self.sign.abs(), log_magnitude: self.log_magnitude }
    }

    /// Multiply by a positive factor given as its logarithm.
    pub fn mul_exp(self, ln_factor: f64) -> Self {
        LogValue::new(self.sign, self.log_magnitude + ln_factor)
    }

    /// Sum of two log-scaled numbers without leaving log space.
    pub fn add(self, other: LogValue) -> LogValue {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_magnitude >= other.log_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let r = (small.log_magnitude - big.log_magnitude).exp();
        let s = if big.sign == small.sign { 1.0 + r } else { 1.0 - r };
        if s == 0.0 {
            return LogValue::ZERO;
        }
        LogValue::new(big.sign, big.log_magnitude + s.ln())
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::new(self.sign * rhs.sign, self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        self * rhs.recip()
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue { sign: -self.sign, log_magnitude: self.log_magnitude }
    }
}

/// Wrap an angle into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phi % two_pi;
    if p <= -PI {
        p += two_pi;
    } else if p > PI {
        p -= two_pi;
    }
    p
}

/// A complex number stored as log-modulus and phase in (−π, π].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexLogValue {
    log_magnitude: f64,
    phase: f64,
}

impl ComplexLogValue {
    pub fn new(log_magnitude: f64, phase: f64) -> Self {
        ComplexLogValue { log_magnitude, phase: wrap_phase(phase) }
    }

    pub fn from_complex(z: Complex64) -> Self {
        ComplexLogValue::new(z.norm().ln(), z.arg())
    }

    pub fn log_magnitude(self) -> f64 {
        self.log_magnitude
    }

    pub fn phase(self) -> f64 {
        self.phase
    }

    pub fn value(self) -> Complex64 {
        Complex64::from_polar(self.log_magnitude.exp(), self.phase)
    }

    pub fn scaled(self, shift: f64) -> Complex64 {
        Complex64::from_polar((self.log_magnitude - shift).exp(), self.phase)
    }

    pub fn conj(self) -> Self {
        ComplexLogValue::new(self.log_magnitude, -self.phase)
    }

    pub fn recip(self) -> Self {
        ComplexLogValue::new(-self.log_magnitude, -self.phase)
    }

    /// `re + i·im` from two log-scaled real parts.
    pub fn from_parts(re: LogValue, im: LogValue) -> Self {
        let top = re.log_magnitude.max(im.log_magnitude);
        if top == f64::NEG_INFINITY {
            return ComplexLogValue { log_magnitude: f64::NEG_INFINITY, phase: 0.0 };
        }
        let a = re.scaled(top);
        let b = im.scaled(top);
        ComplexLogValue::new(top + a.hypot(b).ln(), b.atan2(a))
    }
}

impl Mul for ComplexLogValue {
    type Output = ComplexLogValue;
    fn mul(self, rhs: ComplexLogValue) -> ComplexLogValue {
        ComplexLogValue::new(self.log_magnitude + rhs.log_magnitude, self.phase + rhs.phase)
    }
}

impl Div for ComplexLogValue {
    type Output = ComplexLogValue;
    fn div(self, rhs: ComplexLogValue) -> ComplexLogValue {
        self * rhs.recip()
    }
}

impl From<LogValue> for ComplexLogValue {
    fn from(v: LogValue) -> Self {
        match v.sign {
            0 => ComplexLogValue { log_magnitude: f64::NEG_INFINITY, phase: 0.0 },
            s if s > 0 => ComplexLogValue { log_magnitude: v.log_magnitude, phase: 0.0 },
            _ => ComplexLogValue { log_magnitude: v.log_magnitude, phase: PI },
        }
    }
}

const LN_FACTORIAL_TABLE: usize = 8192;

static LN_FACTORIALS: Lazy<Vec<f64>> = Lazy::new(|| {
    let mut t = Vec::with_capacity(LN_FACTORIAL_TABLE);
    t.push(0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..LN_FACTORIAL_TABLE {
        let y = (k as f64).ln() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        t.push(sum);
    }
    t
});

/// ln(n!).
pub fn ln_factorial(n: usize) -> f64 {
    if n < LN_FACTORIAL_TABLE {
        LN_FACTORIALS[n]
    } else {
        // Stirling series, far beyond the table its error is < 1e-20.
        let x = n as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
    }
}

/// ln Γ(l + 1/2) for integer l ≥ 0.
pub fn ln_gamma_half(l: usize) -> f64 {
    ln_factorial(2 * l) - ln_factorial(l) - 2.0 * l as f64 * LN_2 + 0.5 * PI.ln()
}

fn check_arg(l: usize, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be positive and finite, got {x}")));
    }
    if l > L_CAP {
        return Err(Error::Domain(format!("order index {l} exceeds cap {L_CAP}")));
    }
    Ok(())
}

const CF_MAX_ITER: usize = 1_000_000;
const TINY: f64 = 1e-300;

/// Modified Lentz evaluation of `b0 + a/(b1 + a/(b2 + ...))` with constant `a`.
fn lentz(a: f64, b: impl Fn(usize) -> f64) -> f64 {
    let mut f = b(0);
    if f == 0.0 {
        f = TINY;
    }
    let mut c = f;
    let mut d = 0.0;
    for k in 1..CF_MAX_ITER {
        let bk = b(k);
        d = bk + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = bk + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// I and K for orders 0..=n at one argument, plus the neighbour ratios needed
/// for derivative combinations.
#[derive(Clone, Debug)]
pub struct ModifiedBesselSeq {
    x: f64,
    log_i: Vec<f64>,
    log_k: Vec<f64>,
    i_up: Vec<f64>,
    k_down: Vec<f64>,
}

impl ModifiedBesselSeq {
    pub fn new(n: usize, x: f64) -> Result<Self> {
        check_arg(n, x)?;
        let b = |l: usize| (2 * l + 1) as f64 / x;
        // q[l] = I_l / I_{l-1}, l = 1..=n+1
        let mut q = vec![0.0; n + 2];
        q[n + 1] = 1.0 / lentz(1.0, |k| b(n + 1 + k));
        for l in (1..=n).rev() {
            q[l] = 1.0 / (b(l) + q[l + 1]);
        }
        let mut log_i = Vec::with_capacity(n + 1);
        log_i.push(ln_sinh(x) + 0.5 * (2.0 / (PI * x)).ln());
        for l in 1..=n {
            log_i.push(log_i[l - 1] + q[l].ln());
        }
        let i_up = q[1..].to_vec();

        let mut log_k = Vec::with_capacity(n + 1);
        let mut k_down = Vec::with_capacity(n + 1);
        log_k.push(0.5 * (FRAC_PI_2 / x).ln() - x);
        k_down.push(1.0);
        let mut r = 1.0 + 1.0 / x; // K_1/K_0
        for l in 1..=n {
            log_k.push(log_k[l - 1] + r.ln());
            k_down.push(1.0 / r);
            r = b(l) + 1.0 / r;
        }
        Ok(ModifiedBesselSeq { x, log_i, log_k, i_up, k_down })
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn len(&self) -> usize {
        self.log_i.len()
    }
    pub fn is_empty(&self) -> bool {
        self.log_i.is_empty()
    }
    pub fn log_i(&self, l: usize) -> f64 {
        self.log_i[l]
    }
    pub fn log_k(&self, l: usize) -> f64 {
        self.log_k[l]
    }
    /// I_{l+1}/I_l.
    pub fn i_up(&self, l: usize) -> f64 {
        self.i_up[l]
    }
    /// K_{l−1}/K_l, with K_{−1/2} = K_{1/2} for l = 0.
    pub fn k_down(&self, l: usize) -> f64 {
        self.k_down[l]
    }
}

/// ln K_{l+1/2}(x) for l = 0..=n.
pub fn log_k_seq(n: usize, x: f64) -> Result<Vec<f64>> {
    check_arg(0, x)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.5 * (FRAC_PI_2 / x).ln() - x);
    let mut r = 1.0 + 1.0 / x;
    for l in 1..=n {
        out.push(out[l - 1] + r.ln());
        r = (2 * l + 1) as f64 / x + 1.0 / r;
    }
    Ok(out)
}

/// J and Y for orders 0..=n at one argument.
#[derive(Clone, Debug)]
pub struct OrdinaryBesselSeq {
    x: f64,
    j: Vec<LogValue>,
    y: Vec<LogValue>,
}

impl OrdinaryBesselSeq {
    pub fn new(n: usize, x: f64) -> Result<Self> {
        check_arg(n, x)?;
        let pref = 0.5 * (2.0 / (PI * x)).ln();
        let b = |l: usize| (2 * l + 1) as f64 / x;
        let (s, c) = x.sin_cos();

        // u_l = sqrt(pi x / 2) J_{l+1/2}(x) satisfies the same recurrence as J.
        let l_turn = if x < 0.5 { 0 } else { (x - 0.5).ceil() as usize };
        let mut j = Vec::with_capacity(n + 1);
        let (mut u_prev, mut u) = (s, s / x - c);
        j.push(LogValue::from_f64(s).mul_exp(pref));
        let up_to = l_turn.min(n);
        for l in 1..=up_to {
            if l > 1 {
                let next = b(l - 1) * u - u_prev;
                u_prev = u;
                u = next;
            }
            j.push(LogValue::from_f64(u).mul_exp(pref));
        }
        if n > l_turn {
            // Ratios p_l = u_l/u_{l−1} for l_turn < l ≤ n, from the minimal solution.
            let mut p = vec![0.0; n + 2];
            p[n] = 1.0 / lentz(-1.0, |k| b(n + k));
            for l in ((l_turn + 1)..n).rev() {
                p[l] = 1.0 / (b(l) - p[l + 1]);
            }
            let mut base = j[l_turn];
            for pl in p.iter().take(n + 1).skip(l_turn + 1) {
                base = base * LogValue::from_f64(*pl);
                j.push(base);
            }
        }

        // v_l = sqrt(pi x / 2) Y_{l+1/2}(x), forward recurrence with rescaling.
        let mut y = Vec::with_capacity(n + 1);
        let (mut v_prev, mut v) = (-c, -c / x - s);
        let mut offset = 0.0;
        y.push(LogValue::from_f64(-c).mul_exp(pref));
        if n >= 1 {
            y.push(LogValue::from_f64(v).mul_exp(pref));
        }
        for l in 2..=n {
            let next = b(l - 1) * v - v_prev;
            v_prev = v;
            v = next;
            if v.abs() > 1e150 {
                v *= 1e-150;
                v_prev *= 1e-150;
                offset += 150.0 * std::f64::consts::LN_10;
            }
            y.push(LogValue::from_f64(v).mul_exp(pref + offset));
        }
        Ok(OrdinaryBesselSeq { x, j, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn j(&self, l: usize) -> LogValue {
        self.j[l]
    }
    pub fn y(&self, l: usize) -> LogValue {
        self.y[l]
    }
    /// H^(2) = J − iY.
    pub fn h2(&self, l: usize) -> ComplexLogValue {
        ComplexLogValue::from_parts(self.j[l], -self.y[l])
    }
    /// H^(1) = J + iY.
    pub fn h1(&self, l: usize) -> ComplexLogValue {
        ComplexLogValue::from_parts(self.j[l], self.y[l])
    }
}

pub fn log_bessel_i_half(l: usize, x: f64) -> Result<LogValue> {
    let s = ModifiedBesselSeq::new(l, x)?;
    Ok(LogValue::new(1, s.log_i(l)))
}

pub fn log_bessel_k_half(l: usize, x: f64) -> Result<LogValue> {
    check_arg(l, x)?;
    let s = log_k_seq(l, x)?;
    Ok(LogValue::new(1, s[l]))
}

pub fn bessel_j_half(l: usize, x: f64) -> Result<LogValue> {
    Ok(OrdinaryBesselSeq::new(l, x)?.j(l))
}

pub fn bessel_y_half(l: usize, x: f64) -> Result<LogValue> {
    Ok(OrdinaryBesselSeq::new(l, x)?.y(l))
}

pub fn hankel2_half(l: usize, x: f64) -> Result<ComplexLogValue> {
    Ok(OrdinaryBesselSeq::new(l, x)?.h2(l))
}

/// J_ν(x)/Y_ν(x) from log-scaled parts.
///
/// Fails with a pole error when x lies within 1e−12 of a zero of Y_ν,
/// estimated by the Newton step |Y/Y'|.
pub fn ratio_jy(l: usize, x: f64) -> Result<f64> {
    check_arg(l, x)?;
    let s = OrdinaryBesselSeq::new(l + 1, x)?;
    let (jv, yv, yn) = (s.j(l), s.y(l), s.y(l + 1));
    let top = yv.log_magnitude().max(yn.log_magnitude());
    let nu = l as f64 + 0.5;
    let y = yv.scaled(top);
    let dy = nu / x * y - yn.scaled(top);
    if yv.is_zero() || (dy != 0.0 && (y / dy).abs() < 1e-12) {
        return Err(Error::Pole(format!("Y_{{{l}+1/2}} vanishes near x = {x}")));
    }
    Ok((jv / yv).value())
}
