//! Round-trip matrix elements M_{ll'} between sphere multipoles l and l'
//! (fixed azimuthal index m) through the plane's image.
//!
//! On the imaginary frequency axis,
//!
//!   M_{ll'}(ξ) = N_{l'}(ξR)/D_l(ξR) · √(π/(4ξL)) · Σ_{l''} K_{l''+1/2}(2ξL) H_{ll'}^{l''}(m),
//!
//! where N/D are the sphere scattering factors (I/K for Dirichlet, their
//! radial-derivative combinations for Neumann/TM). The numerator carries the
//! column index: this is a diagonal similarity transform of the symmetric
//! form (same determinant, same traces of powers) and is the arrangement
//! whose ξ → 0 limit is the static kernel, with the (l'+1)/l and −l'/(l+1)
//! factors attached the right way round.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{
    ln_gamma_half, log_k_seq, ComplexLogValue, LogValue, ModifiedBesselSeq,
    OrdinaryBesselSeq,
};
use crate::wigner::{h_slice, three_j_stretched, three_j_zero};

/// Sphere of radius `r` whose surface is a distance `d` from the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    r: f64,
    d: f64,
}

impl Geometry {
    pub fn new(r: f64, d: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) || !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("need R > 0 and d > 0, got R = {r}, d = {d}")));
        }
        Ok(Geometry { r, d })
    }

    pub fn from_epsilon(r: f64, epsilon: f64) -> Result<Self> {
        Geometry::new(r, epsilon * r)
    }

    /// Sphere touching the plane. Only the real-frequency thermal
    /// representation converges here; everything else rejects it.
    pub fn contact(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("need R > 0, got {r}")));
        }
        Ok(Geometry { r, d: 0.0 })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    /// Distance from the sphere centre to the plane.
    pub fn l(&self) -> f64 {
        self.r + self.d
    }
    pub fn epsilon(&self) -> f64 {
        self.d / self.r
    }
    pub fn is_contact(&self) -> bool {
        self.d == 0.0
    }
    pub fn with_d(&self, d: f64) -> Result<Self> {
        Geometry::new(self.r, d)
    }

    pub(crate) fn require_separated(&self) -> Result<()> {
        if self.is_contact() {
            Err(Error::Domain("this representation needs d > 0".into()))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Scalar,
    Electromagnetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub kind: FieldKind,
    /// Ignored for the electromagnetic field (perfect conductor).
    pub sphere_bc: Boundary,
    /// Ignored for the electromagnetic field (perfect conductor).
    pub plane_bc: Boundary,
}

impl FieldSpec {
    pub const fn scalar(sphere_bc: Boundary, plane_bc: Boundary) -> Self {
        FieldSpec { kind: FieldKind::Scalar, sphere_bc, plane_bc }
    }

    pub const fn dirichlet() -> Self {
        Self::scalar(Boundary::Dirichlet, Boundary::Dirichlet)
    }

    pub const fn electromagnetic() -> Self {
        FieldSpec {
            kind: FieldKind::Electromagnetic,
            sphere_bc: Boundary::Dirichlet,
            plane_bc: Boundary::Dirichlet,
        }
    }

    pub fn is_em(&self) -> bool {
        self.kind == FieldKind::Electromagnetic
    }

    pub fn l_min(&self) -> u32 {
        if self.is_em() {
            1
        } else {
            0
        }
    }

    /// +1, or −1 for a Neumann plane (the image changes sign).
    pub fn plane_sign(&self) -> f64 {
        if !self.is_em() && self.plane_bc == Boundary::Neumann {
            -1.0
        } else {
            1.0
        }
    }

    /// Number of matrix rows per multipole index.
    pub fn polarizations(&self) -> usize {
        if self.is_em() {
            2
        } else {
            1
        }
    }
}

/// Scattering channel of the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Dirichlet,
    Neumann,
    Te,
    Tm,
}

impl Channel {
    pub fn scalar(bc: Boundary) -> Self {
        match bc {
            Boundary::Dirichlet => Channel::Dirichlet,
            Boundary::Neumann => Channel::Neumann,
        }
    }
}

fn check_indices(l: u32, lp: u32, m: i32, l_min: u32) -> Result<()> {
    let mu = m.unsigned_abs();
    if l < l_min.max(mu) || lp < l_min.max(mu) {
        return Err(Error::Domain(format!("need l, l' ≥ max({l_min}, |m|); got l={l}, l'={lp}, m={m}")));
    }
    Ok(())
}

fn h_bound(l: u32, lp: u32) -> f64 {
    (f64::from(2 * l + 1) * f64::from(2 * lp + 1)).sqrt()
}

/// Numerator and denominator sphere factors on the imaginary axis, x = ξR.
fn sphere_factors(seq: &ModifiedBesselSeq, l: usize, ch: Channel) -> (LogValue, LogValue) {
    let x = seq.x();
    let li = LogValue::new(1, seq.log_i(l));
    let lk = LogValue::new(1, seq.log_k(l));
    let lf = l as f64;
    match ch {
        Channel::Dirichlet | Channel::Te => (li, lk),
        Channel::Neumann => (
            -li.mul_exp((seq.i_up(l) + lf / x).ln()),
            lk.mul_exp((seq.k_down(l) + (lf + 1.0) / x).ln()),
        ),
        // Sign of the TM reflection absorbed: this is −d^TM > 0. Both factors
        // carry an extra x relative to the TE ones, a polarization-diagonal
        // similarity that makes the mixing entries vanish like ξ.
        Channel::Tm => (
            li.mul_exp((x * seq.i_up(l) + lf + 1.0).ln()),
            lk.mul_exp((x * seq.k_down(l) + lf).ln()),
        ),
    }
}

/// Everything about one imaginary frequency that does not depend on m.
pub struct ImaginaryAxis {
    log_pref: f64,
    plane: Vec<f64>,
    /// K_{j−2}/K_j at 2ξL.
    plane_step: Vec<f64>,
    channels: Vec<Channel>,
    num: Vec<Vec<LogValue>>,
    den: Vec<Vec<LogValue>>,
    xi_l: f64,
}

impl ImaginaryAxis {
    pub fn new(xi: f64, geom: &Geometry, spec: &FieldSpec, l_max: u32) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::Domain(format!("frequency must be positive, got {xi}")));
        }
        geom.require_separated()?;
        let n = l_max as usize;
        let seq = ModifiedBesselSeq::new(n, xi * geom.r())?;
        let plane = log_k_seq(2 * n, 2.0 * xi * geom.l())?;
        let channels = if spec.is_em() {
            vec![Channel::Te, Channel::Tm]
        } else {
            vec![Channel::scalar(spec.sphere_bc)]
        };
        let mut num = Vec::new();
        let mut den = Vec::new();
        for &ch in &channels {
            let (a, b): (Vec<_>, Vec<_>) = (0..=n).map(|l| sphere_factors(&seq, l, ch)).unzip();
            num.push(a);
            den.push(b);
        }
        let plane_step = (0..plane.len())
            .map(|j| if j >= 2 { (plane[j - 2] - plane[j]).exp() } else { 0.0 })
            .collect();
        Ok(ImaginaryAxis {
            log_pref: 0.5 * (std::f64::consts::PI / (4.0 * xi * geom.l())).ln(),
            plane,
            plane_step,
            channels,
            num,
            den,
            xi_l: xi * geom.l(),
        })
    }

    /// Σ_{l''} K(2ξL)·H·w(l'') relative to exp(top), with top = ln K_{l+l'}.
    fn k_sum(&self, l: u32, lp: u32, h: &[f64], weight_bound: f64, weight: impl Fn(u32) -> f64) -> (f64, f64) {
        let lo = l.abs_diff(lp);
        let top = self.plane[(l + lp) as usize];
        // |H| ≤ √((2l+1)(2l'+1)) by the 3j sum rule; bound the weight too.
        let bound = h_bound(l, lp) * weight_bound;
        let (mut s, mut f) = (0.0, 1.0);
        for (k, &hv) in h.iter().enumerate().rev() {
            let lpp = lo + 2 * k as u32;
            s += hv * weight(lpp) * f;
            f *= self.plane_step[lpp as usize];
            if f * bound < 1e-18 * s.abs() {
                break;
            }
        }
        (top, s)
    }

    fn combine(&self, p: usize, q: usize, l: u32, lp: u32, top: f64, s: f64) -> f64 {
        let f = self.num[q][lp as usize] / self.den[p][l as usize];
        (LogValue::from_f64(s).mul_exp(top + self.log_pref) * f).value()
    }

    /// Scalar element from a precomputed even-parity H slice.
    pub fn scalar_element(&self, l: u32, lp: u32, h: &[f64]) -> f64 {
        let (top, s) = self.k_sum(l, lp, h, 1.0, |_| 1.0);
        self.combine(0, 0, l, lp, top, s)
    }

    /// Both orderings (l, l') and (l', l) of a scalar element share one K-sum.
    pub fn scalar_pair(&self, l: u32, lp: u32, h: &[f64]) -> (f64, f64) {
        let (top, s) = self.k_sum(l, lp, h, 1.0, |_| 1.0);
        (self.combine(0, 0, l, lp, top, s), self.combine(0, 0, lp, l, top, s))
    }

    /// The 2×2 polarization block [[TE←TE, TE←TM], [TM←TE, TM←TM]].
    pub fn em_element(&self, l: u32, lp: u32, m: i32, h: &[f64]) -> [[f64; 2]; 2] {
        let (a, b) = (f64::from(l), f64::from(lp));
        let norm = (a * (a + 1.0) * b * (b + 1.0)).sqrt();
        let lam = |lpp: u32| {
            let c = f64::from(lpp);
            0.5 * (c * (c + 1.0) - a * (a + 1.0) - b * (b + 1.0)) / norm
        };
        let (top, s_diag) = self.k_sum(l, lp, h, f64::from((l + lp + 1) * (l + lp + 1)) / norm, lam);
        let s_off = if m == 0 {
            0.0
        } else {
            let (_, s) = self.k_sum(l, lp, h, 1.0, |_| 1.0);
            s * 2.0 * f64::from(m) * self.xi_l / norm
        };
        let mut out = [[0.0; 2]; 2];
        for (p, row) in out.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                let s = if p == q { s_diag } else { s_off };
                *v = self.combine(p, q, l, lp, top, s);
            }
        }
        out
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// √(N_l/D_l) as (sign of N, log magnitude); a negative ratio gives a
    /// factor i on each side, i.e. an overall sign on the product.
    fn half_ratio(&self, p: usize, l: u32) -> (i8, f64) {
        let r = self.num[p][l as usize] / self.den[p][l as usize];
        (r.sign(), 0.5 * r.log_magnitude())
    }

    fn combine_sym(&self, p: usize, q: usize, l: u32, lp: u32, top: f64, s: f64) -> f64 {
        let (sa, a) = self.half_ratio(p, l);
        let (sb, b) = self.half_ratio(q, lp);
        // square roots of two negative ratios are both imaginary
        let sign = if sa < 0 && sb < 0 { -1.0 } else { 1.0 };
        sign * LogValue::from_f64(s).mul_exp(top + self.log_pref + a + b).value()
    }

    /// Element of the diagonally symmetrized kernel diag(√(N/D))·S·diag(√(N/D)),
    /// which is similar to M and avoids overflow for |l−l'| large.
    pub fn scalar_sym(&self, l: u32, lp: u32, h: &[f64]) -> f64 {
        let (top, s) = self.k_sum(l, lp, h, 1.0, |_| 1.0);
        self.combine_sym(0, 0, l, lp, top, s)
    }

    /// Symmetrized polarization block, same ordering as [`Self::em_element`].
    pub fn em_sym(&self, l: u32, lp: u32, m: i32, h: &[f64]) -> [[f64; 2]; 2] {
        let (a, b) = (f64::from(l), f64::from(lp));
        let norm = (a * (a + 1.0) * b * (b + 1.0)).sqrt();
        let lam = |lpp: u32| {
            let c = f64::from(lpp);
            0.5 * (c * (c + 1.0) - a * (a + 1.0) - b * (b + 1.0)) / norm
        };
        let (top, s_diag) = self.k_sum(l, lp, h, f64::from((l + lp + 1) * (l + lp + 1)) / norm, lam);
        let s_off = if m == 0 {
            0.0
        } else {
            let (_, s) = self.k_sum(l, lp, h, 1.0, |_| 1.0);
            s * 2.0 * f64::from(m) * self.xi_l / norm
        };
        let mut out = [[0.0; 2]; 2];
        for (p, row) in out.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                *v = self.combine_sym(p, q, l, lp, top, if p == q { s_diag } else { s_off });
            }
        }
        out
    }
}

/// Scalar element on the imaginary axis. The plane boundary condition enters
/// only as a sign inside the logarithm and is not applied here.
pub fn m_scalar(l: u32, lp: u32, m: i32, xi: f64, geom: &Geometry, spec: &FieldSpec) -> Result<f64> {
    if spec.is_em() {
        return Err(Error::Domain("m_scalar needs a scalar field".into()));
    }
    check_indices(l, lp, m, 0)?;
    let ctx = ImaginaryAxis::new(xi, geom, spec, l.max(lp))?;
    Ok(ctx.scalar_element(l, lp, &h_slice(l, lp, m)))
}

/// Electromagnetic 2×2 block, rows/columns ordered (TE, TM).
pub fn m_em_block(l: u32, lp: u32, m: i32, xi: f64, geom: &Geometry) -> Result<[[f64; 2]; 2]> {
    check_indices(l, lp, m, 1)?;
    let ctx = ImaginaryAxis::new(xi, geom, &FieldSpec::electromagnetic(), l.max(lp))?;
    Ok(ctx.em_element(l, lp, m, &h_slice(l, lp, m)))
}

/// Which side of the real-frequency cut: M(+iξ) uses H^(2), M(−iξ) uses H^(1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

/// Scalar kernel continued to real frequency ω = ξ (argument iξ of the
/// Euclidean kernel). Denominators are Hankel functions, which never
/// vanish on the real axis, so the continued kernel has no poles there.
pub struct RealAxis {
    log_pref: f64,
    plane: Vec<ComplexLogValue>,
    /// Unit phasors of the plane Hankel functions and |H_{j−2}|/|H_j|.
    plane_phase: Vec<Complex64>,
    plane_step: Vec<f64>,
    num: Vec<LogValue>,
    den: Vec<ComplexLogValue>,
}

impl RealAxis {
    pub fn new(xi: f64, geom: &Geometry, spec: &FieldSpec, l_max: u32, branch: Branch) -> Result<Self> {
        if spec.is_em() {
            return Err(Error::Unsupported(
                "real-frequency continuation is implemented for scalar fields only".into(),
            ));
        }
        if !(xi > 0.0) {
            return Err(Error::Domain(format!("frequency must be positive, got {xi}")));
        }
        let n = l_max as usize;
        let x = xi * geom.r();
        let sph = OrdinaryBesselSeq::new(n + 1, x)?;
        let pl = OrdinaryBesselSeq::new(2 * n, 2.0 * xi * geom.l())?;
        let hank = |s: &OrdinaryBesselSeq, l: usize| match branch {
            Branch::Upper => s.h2(l),
            Branch::Lower => s.h1(l),
        };
        let plane = (0..=2 * n).map(|l| hank(&pl, l)).collect();
        let (num, den) = match spec.sphere_bc {
            Boundary::Dirichlet => {
                ((0..=n).map(|l| sph.j(l)).collect(), (0..=n).map(|l| hank(&sph, l)).collect())
            }
            Boundary::Neumann => {
                // (l/x)f_l − f_{l+1}: proportional to the radial derivative of f/√x.
                let num = (0..=n)
                    .map(|l| sph.j(l).mul_exp((l as f64 / x).ln()).add(-sph.j(l + 1)))
                    .collect::<Vec<_>>();
                let den = (0..=n)
                    .map(|l| {
                        let (a, b) = (hank(&sph, l), hank(&sph, l + 1));
                        let top = a.log_magnitude().max(b.log_magnitude());
                        let z = a.scaled(top) * (l as f64 / x) - b.scaled(top);
                        ComplexLogValue::new(top + z.norm().ln(), z.arg())
                    })
                    .collect();
                (num, den)
            }
        };
        let plane: Vec<ComplexLogValue> = plane;
        let plane_phase = plane.iter().map(|p| Complex64::from_polar(1.0, p.phase())).collect();
        let plane_step = (0..plane.len())
            .map(|j| {
                if j >= 2 {
                    (plane[j - 2].log_magnitude() - plane[j].log_magnitude()).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Ok(RealAxis {
            log_pref: 0.5 * (std::f64::consts::PI / (4.0 * xi * geom.l())).ln(),
            plane,
            plane_phase,
            plane_step,
            num,
            den,
        })
    }

    pub fn element(&self, l: u32, lp: u32, h: &[f64]) -> Complex64 {
        self.pair(l, lp, h).0
    }

    fn l_sum(&self, l: u32, lp: u32, h: &[f64]) -> (f64, ComplexLogValue) {
        let lo = l.abs_diff(lp);
        let top = self.plane[(l + lp) as usize].log_magnitude();
        let mut s = Complex64::new(0.0, 0.0);
        let half = (l + lp - lo) / 2;
        let bound = h_bound(l, lp);
        let mut f = 1.0;
        for (k, &hv) in h.iter().enumerate().rev() {
            let lpp = lo + 2 * k as u32;
            let sign = if (half - k as u32) % 2 == 0 { f } else { -f };
            s += (sign * hv) * self.plane_phase[lpp as usize];
            f *= self.plane_step[lpp as usize];
            if f * bound < 1e-18 * s.norm() {
                break;
            }
        }
        (top, ComplexLogValue::from_complex(s))
    }

    fn half_ratio(&self, l: u32) -> ComplexLogValue {
        let r = ComplexLogValue::from(self.num[l as usize]) / self.den[l as usize];
        ComplexLogValue::new(0.5 * r.log_magnitude(), 0.5 * r.phase())
    }

    /// Element of the diagonally symmetrized kernel (similar to M).
    pub fn sym_element(&self, l: u32, lp: u32, h: &[f64]) -> Complex64 {
        let (top, sl) = self.l_sum(l, lp, h);
        (self.half_ratio(l) * self.half_ratio(lp) * sl).scaled(-(top + self.log_pref))
    }

    /// Elements (l, l') and (l', l), which share the l'' sum.
    pub fn pair(&self, l: u32, lp: u32, h: &[f64]) -> (Complex64, Complex64) {
        let (top, sl) = self.l_sum(l, lp, h);
        let one = |a: u32, b: u32| {
            let ratio = ComplexLogValue::from(self.num[b as usize]) / self.den[a as usize];
            (ratio * sl).scaled(-(top + self.log_pref))
        };
        (one(l, lp), one(lp, l))
    }
}

/// M_{ll'} on the real-frequency axis (Euclidean argument +iξ).
pub fn m_rotated(l: u32, lp: u32, m: i32, xi: f64, geom: &Geometry, spec: &FieldSpec) -> Result<Complex64> {
    rotated_on(l, lp, m, xi, geom, spec, Branch::Upper)
}

/// M_{ll'} at Euclidean argument −iξ, assembled independently from H^(1).
pub fn m_rotated_lower(l: u32, lp: u32, m: i32, xi: f64, geom: &Geometry, spec: &FieldSpec) -> Result<Complex64> {
    rotated_on(l, lp, m, xi, geom, spec, Branch::Lower)
}

fn rotated_on(
    l: u32,
    lp: u32,
    m: i32,
    xi: f64,
    geom: &Geometry,
    spec: &FieldSpec,
    branch: Branch,
) -> Result<Complex64> {
    check_indices(l, lp, m, 0)?;
    let ctx = RealAxis::new(xi, geom, spec, l.max(lp), branch)?;
    let v = ctx.element(l, lp, &h_slice(l, lp, m));
    #[cfg(debug_assertions)]
    if branch == Branch::Upper {
        let other = RealAxis::new(xi, geom, spec, l.max(lp), Branch::Lower)?
            .element(l, lp, &h_slice(l, lp, m));
        debug_assert!(
            (v - other.conj()).norm() <= 1e-9 * v.norm().max(1e-300),
            "conjugation symmetry violated: {v} vs {other}"
        );
    }
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Overflow(format!("rotated kernel element ({l},{lp}) at ξ={xi}")));
    }
    Ok(v)
}

/// ξ → 0 limit of the kernel: only l'' = l + l' survives.
pub fn m_static(l: u32, lp: u32, m: i32, geom: &Geometry, channel: Channel) -> Result<f64> {
    let l_min = if matches!(channel, Channel::Te | Channel::Tm) { 1 } else { 0 };
    if channel == Channel::Tm && l == 0 {
        return Err(Error::Domain("TM static element needs l ≥ 1".into()));
    }
    check_indices(l, lp, m, l_min)?;
    geom.require_separated()?;
    Ok(static_element(l, lp, m, geom, channel))
}

pub(crate) fn static_element(l: u32, lp: u32, m: i32, geom: &Geometry, channel: Channel) -> f64 {
    let (a, b) = (l as usize, lp as usize);
    let big = l + lp;
    let ln_mag = f64::from(big + 1) * (geom.r() / (2.0 * geom.l())).ln()
        + 0.5 * std::f64::consts::PI.ln()
        + ln_gamma_half(a + b)
        - std::f64::consts::LN_2
        - ln_gamma_half(a)
        - ln_gamma_half(b + 1);
    let h = ((2 * a + 1) as f64 * (2 * b + 1) as f64).sqrt()
        * f64::from(2 * big + 1)
        * three_j_zero(l, lp, big)
        * three_j_stretched(l, lp, m);
    let md = h * ln_mag.exp();
    let (fl, flp) = (f64::from(l), f64::from(lp));
    let lambda = || (fl * flp / ((fl + 1.0) * (flp + 1.0))).sqrt();
    match channel {
        Channel::Dirichlet => md,
        Channel::Neumann => -flp / (fl + 1.0) * md,
        Channel::Te => md * lambda(),
        Channel::Tm => (flp + 1.0) / fl * md * lambda(),
    }
}
