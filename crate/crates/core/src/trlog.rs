//! Per-m matrices and Tr ln(1 − M).
//!
//! Blocks are built in the symmetrized form (similar to M), so that on the
//! imaginary axis 1 − M is similar to a symmetric positive-definite matrix.
//! That makes elimination without pivoting stable, and an unpivoted LU yields
//! ln det of every leading principal block in one pass — i.e. the result for
//! every truncation level at once, which is what the convergence control uses.

use num_complex::{Complex64, ComplexFloat};

use crate::error::{Error, Result};
use crate::kernel::{static_element, Branch, Channel, FieldSpec, Geometry, ImaginaryAxis, RealAxis};
use crate::wigner::HTable;

/// Quadrature controls for frequency integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSettings {
    /// Upper bound on a panel width in the dimensionless integration variable.
    pub max_panel_width: f64,
    /// How often the thermal panel grid may be halved.
    pub max_refinements: u32,
    /// Subdivision limit of the adaptive integrator.
    pub max_subdivisions: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { max_panel_width: 2.0, max_refinements: 3, max_subdivisions: 400 }
    }
}

/// Truncation and tolerance controls shared by all exact evaluators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    /// Fixed multipole cutoff; `None` selects it adaptively.
    pub l_max: Option<u32>,
    /// Order of the expanded-logarithm series.
    pub s_max: usize,
    pub rel_tol: f64,
    /// Fixed Matsubara cutoff; `None` selects it adaptively.
    pub n_max: Option<usize>,
    pub quad: QuadSettings,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { l_max: None, s_max: 400, rel_tol: 1e-3, n_max: None, quad: QuadSettings::default() }
    }
}

impl Truncation {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Truncation { rel_tol, ..Default::default() }
    }

    pub fn with_l_max(l_max: u32) -> Self {
        Truncation { l_max: Some(l_max), ..Default::default() }
    }

    pub fn validate(&self, spec: &FieldSpec) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if let Some(l) = self.l_max {
            if l < spec.l_min() {
                return Err(Error::Domain(format!("l_max {l} below l_min {}", spec.l_min())));
            }
        }
        Ok(())
    }
}

/// Where the kernel is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluation {
    /// Euclidean frequency ξ > 0.
    Imaginary(f64),
    /// Real frequency: Euclidean argument +iξ (upper) or −iξ (lower).
    Rotated(f64, Branch),
    /// ξ = 0.
    Static,
}

/// Dense block of the kernel for one azimuthal index m. For the
/// electromagnetic field the two polarizations of each l are adjacent.
#[derive(Clone, Debug, PartialEq)]
pub struct MBlockMatrix {
    pub m: i32,
    pub l_start: u32,
    pub l_max: u32,
    pub polarization_blocks: bool,
    dim: usize,
    entries: Vec<Complex64>,
}

impl MBlockMatrix {
    pub fn from_entries(m: i32, l_start: u32, l_max: u32, polarization_blocks: bool, entries: Vec<Complex64>) -> Result<Self> {
        let levels = if l_start > l_max { 0 } else { (l_max - l_start + 1) as usize };
        let dim = levels * if polarization_blocks { 2 } else { 1 };
        if entries.len() != dim * dim {
            return Err(Error::Domain(format!("expected {} entries, got {}", dim * dim, entries.len())));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Domain("non-finite block entry".into()));
        }
        Ok(MBlockMatrix { m, l_start, l_max, polarization_blocks, dim, entries })
    }

    /// Square matrix with no multipole bookkeeping (tests, diagnostics).
    pub fn from_square(entries: Vec<Complex64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 {
            return Ok(MBlockMatrix { m: 0, l_start: 1, l_max: 0, polarization_blocks: false, dim: 0, entries });
        }
        Self::from_entries(0, 0, dim as u32 - 1, false, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

fn l_start_for(m: i32, spec: &FieldSpec) -> u32 {
    spec.l_min().max(m.unsigned_abs())
}

/// Symmetrized imaginary-axis block into `out` (row-major, dimension returned).
pub(crate) fn fill_imaginary(ctx: &ImaginaryAxis, m: i32, spec: &FieldSpec, table: &HTable, l_max: u32, out: &mut Vec<f64>) -> usize {
    let l_start = l_start_for(m, spec);
    out.clear();
    if l_start > l_max {
        return 0;
    }
    let levels = (l_max - l_start + 1) as usize;
    if spec.is_em() {
        let n = 2 * levels;
        out.resize(n * n, 0.0);
        for l in l_start..=l_max {
            for lp in l..=l_max {
                let b = ctx.em_sym(l, lp, m, table.slice(l, lp));
                let (i, j) = (2 * (l - l_start) as usize, 2 * (lp - l_start) as usize);
                for p in 0..2 {
                    for q in 0..2 {
                        out[(i + p) * n + j + q] = b[p][q];
                        out[(j + q) * n + i + p] = b[p][q];
                    }
                }
            }
        }
        n
    } else {
        let n = levels;
        out.resize(n * n, 0.0);
        for l in l_start..=l_max {
            for lp in l..=l_max {
                let v = ctx.scalar_sym(l, lp, table.slice(l, lp));
                let (i, j) = ((l - l_start) as usize, (lp - l_start) as usize);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        n
    }
}

/// Static block (ξ = 0); entries are real and mildly non-symmetric.
pub(crate) fn fill_static(geom: &Geometry, m: i32, spec: &FieldSpec, l_max: u32, out: &mut Vec<f64>) -> usize {
    let l_start = l_start_for(m, spec);
    out.clear();
    if l_start > l_max {
        return 0;
    }
    let levels = (l_max - l_start + 1) as usize;
    let pol = spec.polarizations();
    let n = pol * levels;
    out.resize(n * n, 0.0);
    let channels: &[Channel] = if spec.is_em() {
        &[Channel::Te, Channel::Tm]
    } else if spec.sphere_bc == crate::kernel::Boundary::Neumann {
        &[Channel::Neumann]
    } else {
        &[Channel::Dirichlet]
    };
    for l in l_start..=l_max {
        for lp in l_start..=l_max {
            for (p, &ch) in channels.iter().enumerate() {
                let i = pol * (l - l_start) as usize + p;
                let j = pol * (lp - l_start) as usize + p;
                out[i * n + j] = static_element(l, lp, m, geom, ch);
            }
        }
    }
    n
}

/// Symmetrized real-frequency block.
pub(crate) fn fill_rotated(ctx: &RealAxis, m: i32, spec: &FieldSpec, table: &HTable, l_max: u32, out: &mut Vec<Complex64>) -> usize {
    let l_start = l_start_for(m, spec);
    out.clear();
    if l_start > l_max {
        return 0;
    }
    let n = (l_max - l_start + 1) as usize;
    out.resize(n * n, Complex64::new(0.0, 0.0));
    for l in l_start..=l_max {
        for lp in l..=l_max {
            let v = ctx.sym_element(l, lp, table.slice(l, lp));
            let (i, j) = ((l - l_start) as usize, (lp - l_start) as usize);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    n
}

/// Fill a block from the matching kernel evaluation. The plane boundary
/// condition is not applied here.
pub fn assemble_block(m: i32, evaluation: Evaluation, geom: &Geometry, spec: &FieldSpec, l_max: u32) -> Result<MBlockMatrix> {
    let l_start = l_start_for(m, spec);
    let pol = spec.is_em();
    if l_start > l_max {
        return MBlockMatrix::from_entries(m, l_start, l_max, pol, Vec::new());
    }
    let entries: Vec<Complex64> = match evaluation {
        Evaluation::Static => {
            geom.require_separated()?;
            let mut buf = Vec::new();
            fill_static(geom, m, spec, l_max, &mut buf);
            buf.into_iter().map(Complex64::from).collect()
        }
        Evaluation::Imaginary(xi) => {
            let ctx = ImaginaryAxis::new(xi, geom, spec, l_max)?;
            let table = HTable::new(m, l_start, l_max);
            let mut buf = Vec::new();
            fill_imaginary(&ctx, m, spec, &table, l_max, &mut buf);
            buf.into_iter().map(Complex64::from).collect()
        }
        Evaluation::Rotated(xi, branch) => {
            let ctx = RealAxis::new(xi, geom, spec, l_max, branch)?;
            let table = HTable::new(m, l_start, l_max);
            let mut buf = Vec::new();
            fill_rotated(&ctx, m, spec, &table, l_max, &mut buf);
            buf
        }
    };
    MBlockMatrix::from_entries(m, l_start, l_max, pol, entries)
}

/// Overwrite `a` (holding M) with 1 − sign·M.
fn one_minus<T: ComplexFloat<Real = f64>>(a: &mut [T], n: usize, sign: f64) {
    let s = T::from(-sign).unwrap();
    for v in a.iter_mut() {
        *v = *v * s;
    }
    for i in 0..n {
        a[i * n + i] = a[i * n + i] + T::one();
    }
}

const PIVOT_FLOOR: f64 = 1e-300;

/// ln det via partial-pivoting LU, principal branch per pivot plus iπ per swap.
pub(crate) fn lu_log_det<T>(a: &mut [T], n: usize) -> Result<Complex64>
where
    T: ComplexFloat<Real = f64> + Into<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    let mut swaps = 0usize;
    for k in 0..n {
        let (mut p, mut best) = (k, a[k * n + k].abs());
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best >= PIVOT_FLOOR) {
            return Err(Error::Singular { index: k, pivot: best });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            swaps += 1;
        }
        let piv = a[k * n + k];
        acc += piv.into().ln();
        let inv = T::one() / piv;
        for i in (k + 1)..n {
            let f = a[i * n + k] * inv;
            if f == T::zero() {
                continue;
            }
            for j in (k + 1)..n {
                let u = a[k * n + j];
                a[i * n + j] = a[i * n + j] - f * u;
            }
        }
    }
    if swaps % 2 == 1 {
        acc += Complex64::new(0.0, std::f64::consts::PI);
    }
    Ok(Complex64::new(acc.re, crate::specfun::wrap_phase(acc.im)))
}

/// Cumulative ln det of the leading principal blocks by elimination without
/// pivoting; entry k is the log-determinant of the (k+1)×(k+1) block.
pub(crate) fn lu_profile<T>(a: &mut [T], n: usize) -> Result<Vec<Complex64>>
where
    T: ComplexFloat<Real = f64> + Into<Complex64>,
{
    let mut out = Vec::with_capacity(n);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let piv = a[k * n + k];
        if !(piv.abs() >= 1e-12) {
            return Err(Error::Singular { index: k, pivot: piv.abs() });
        }
        acc += piv.into().ln();
        out.push(acc);
        let inv = T::one() / piv;
        for i in (k + 1)..n {
            let f = a[i * n + k] * inv;
            if f == T::zero() {
                continue;
            }
            for j in (k + 1)..n {
                let u = a[k * n + j];
                a[i * n + j] = a[i * n + j] - f * u;
            }
        }
    }
    Ok(out)
}

/// ln det(1 − sign·M) by pivoted LU.
///
/// Blocks from imaginary-axis or static evaluation must give a real result.
pub fn log_det_one_minus(block: &MBlockMatrix, plane_sign: f64) -> Result<Complex64> {
    let n = block.dim();
    let mut a = block.entries().to_vec();
    one_minus(&mut a, n, plane_sign);
    lu_log_det(&mut a, n)
}

/// Like [`log_det_one_minus`] but asserts a real result.
pub fn log_det_one_minus_real(block: &MBlockMatrix, plane_sign: f64) -> Result<f64> {
    let v = log_det_one_minus(block, plane_sign)?;
    if v.im.abs() > 1e-10 {
        return Err(Error::NonReal(v.im));
    }
    Ok(v.re)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesResult {
    pub value: Complex64,
    /// Magnitude of the last term kept.
    pub last_term: f64,
}

/// −Σ_{s=0}^{s_max} sign^{s+1} Tr(M^{s+1})/(s+1).
///
/// Divergence is judged from the growth of |Tr M^s| itself (not of the
/// terms, whose 1/(s+1) factor hides a spectral radius of exactly one),
/// averaged over the last few orders to ride over accidental cancellations.
pub fn trace_log_series(block: &MBlockMatrix, plane_sign: f64, s_max: usize) -> Result<SeriesResult> {
    const SPAN: usize = 4;
    let n = block.dim();
    if n == 0 {
        return Ok(SeriesResult { value: Complex64::new(0.0, 0.0), last_term: 0.0 });
    }
    let m: Vec<Complex64> = block.entries().iter().map(|z| z * plane_sign).collect();
    let mut power = m.clone();
    let mut next = vec![Complex64::new(0.0, 0.0); n * n];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut traces: Vec<f64> = Vec::new();
    let mut last = 0.0;
    for s in 0..=s_max {
        let tr: Complex64 = (0..n).map(|i| power[i * n + i]).sum();
        traces.push(tr.norm());
        let term = -tr / (s as f64 + 1.0);
        sum += term;
        last = term.norm();
        if last <= 1e-17 * sum.norm() && s > 2 {
            return Ok(SeriesResult { value: sum, last_term: last });
        }
        if s < s_max {
            for i in 0..n {
                for j in 0..n {
                    next[i * n + j] = Complex64::new(0.0, 0.0);
                }
                for k in 0..n {
                    let a = power[i * n + k];
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..n {
                        next[i * n + j] += a * m[k * n + j];
                    }
                }
            }
            std::mem::swap(&mut power, &mut next);
        }
    }
    let k = traces.len();
    if k > SPAN && last > 1e-14 * sum.norm().max(1e-300) {
        let ratio = (traces[k - 1] / traces[k - 1 - SPAN]).powf(1.0 / SPAN as f64);
        if ratio >= 1.0 - 1e-12 {
            return Err(Error::SeriesDivergence { ratio });
        }
    }
    Ok(SeriesResult { value: sum, last_term: last })
}

/// block(0) + 2·Σ_{m≥1} block(m), stopping once a block contributes less
/// than rel_tol·1e−2 of the running total. Returns the sum and the last m used.
pub fn trace_over_m<F>(l_max: u32, rel_tol: f64, mut per_block: F) -> Result<(Complex64, u32)>
where
    F: FnMut(i32) -> Result<Complex64>,
{
    let mut total = per_block(0)?;
    let mut m_used = 0;
    for m in 1..=l_max {
        let c = 2.0 * per_block(m as i32)?;
        total += c;
        m_used = m;
        if c.norm() < rel_tol * 1e-2 * total.norm() {
            break;
        }
    }
    Ok((total, m_used))
}

/// Trace for every truncation level l_min..=l_max at one frequency:
/// `levels[k]` is Σ_m ln det(1 − sign·M) with multipoles up to l_min + k.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelTrace {
    pub l_min: u32,
    pub levels: Vec<f64>,
    pub m_max_used: u32,
}

impl LevelTrace {
    pub fn value(&self) -> f64 {
        *self.levels.last().unwrap_or(&0.0)
    }

    pub fn l_max(&self) -> u32 {
        self.l_min + self.levels.len() as u32 - 1
    }

    /// |value − value at l_max − back|, or the value if the profile is shorter.
    pub fn tail_change(&self, back: usize) -> f64 {
        let n = self.levels.len();
        if n > back {
            (self.levels[n - 1] - self.levels[n - 1 - back]).abs()
        } else {
            self.value().abs()
        }
    }
}

fn accumulate_profile(levels: &mut [f64], block_profile: &[Complex64], offset: usize, pol: usize, weight: f64) {
    let nb = block_profile.len() / pol;
    for k in 0..nb {
        levels[offset + k] += weight * block_profile[pol * k + pol - 1].re;
    }
    let last = if nb > 0 { block_profile[pol * nb - 1].re } else { 0.0 };
    for v in levels.iter_mut().skip(offset + nb) {
        *v += weight * last;
    }
}

fn real_block_profile(a: &mut [f64], n: usize, sign: f64) -> Result<Vec<Complex64>> {
    one_minus(a, n, sign);
    let backup = a.to_vec();
    match lu_profile(a, n) {
        Ok(p) => {
            if p.iter().any(|z| z.im.abs() > 1e-10) {
                return Err(Error::NonReal(p.last().map_or(0.0, |z| z.im)));
            }
            Ok(p)
        }
        Err(_) => {
            // Degenerate leading block: fall back to the full determinant only.
            let mut b = backup;
            let v = lu_log_det(&mut b, n)?;
            if v.im.abs() > 1e-10 {
                return Err(Error::NonReal(v.im));
            }
            Ok(fallback_profile(v, n))
        }
    }
}

/// Only the full determinant is known: lower levels are marked NaN so that
/// truncation checks cannot mistake them for converged values.
fn fallback_profile(v: Complex64, n: usize) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(f64::NAN, f64::NAN); n];
    if n > 0 {
        p[n - 1] = v;
    }
    p
}

/// Imaginary-axis trace at all truncation levels up to `l_max`. Tables, if
/// given, are indexed by m and must cover l_max.
pub fn imaginary_axis_trace(
    xi: f64,
    geom: &Geometry,
    spec: &FieldSpec,
    l_max: u32,
    rel_tol: f64,
    tables: Option<&[HTable]>,
) -> Result<LevelTrace> {
    let l_min = spec.l_min();
    let ctx = ImaginaryAxis::new(xi, geom, spec, l_max)?;
    let nlev = (l_max - l_min + 1) as usize;
    let mut levels = vec![0.0; nlev];
    let mut buf = Vec::new();
    let mut m_used = 0;
    for m in 0..=l_max {
        let owned;
        let table = match tables {
            Some(t) if (m as usize) < t.len() && t[m as usize].l_max() >= l_max => &t[m as usize],
            _ => {
                owned = HTable::new(m as i32, l_start_for(m as i32, spec), l_max);
                &owned
            }
        };
        let n = fill_imaginary(&ctx, m as i32, spec, table, l_max, &mut buf);
        let w = if m == 0 { 1.0 } else { 2.0 };
        let prof = real_block_profile(&mut buf, n, spec.plane_sign())?;
        let offset = (l_start_for(m as i32, spec) - l_min) as usize;
        accumulate_profile(&mut levels, &prof, offset, spec.polarizations(), w);
        m_used = m;
        let c = w * prof.last().map_or(0.0, |z| z.re);
        if m > 0 && c.abs() < rel_tol * 1e-2 * levels[nlev - 1].abs() {
            break;
        }
    }
    Ok(LevelTrace { l_min, levels, m_max_used: m_used })
}

/// Static (ξ = 0) trace at all truncation levels up to `l_max`.
pub fn static_trace(geom: &Geometry, spec: &FieldSpec, l_max: u32, rel_tol: f64) -> Result<LevelTrace> {
    geom.require_separated()?;
    let l_min = spec.l_min();
    let nlev = (l_max - l_min + 1) as usize;
    let mut levels = vec![0.0; nlev];
    let mut buf = Vec::new();
    let mut m_used = 0;
    for m in 0..=l_max {
        let n = fill_static(geom, m as i32, spec, l_max, &mut buf);
        let w = if m == 0 { 1.0 } else { 2.0 };
        let prof = real_block_profile(&mut buf, n, spec.plane_sign())?;
        let offset = (l_start_for(m as i32, spec) - l_min) as usize;
        accumulate_profile(&mut levels, &prof, offset, spec.polarizations(), w);
        m_used = m;
        let c = w * prof.last().map_or(0.0, |z| z.re);
        if m > 0 && c.abs() < rel_tol * 1e-2 * levels[nlev - 1].abs() {
            break;
        }
    }
    Ok(LevelTrace { l_min, levels, m_max_used: m_used })
}

/// Real-frequency profile of one m block: cumulative principal-branch
/// log-pivots of 1 − sign·M(±iξ) for every truncation level.
pub(crate) fn rotated_block_profile(
    ctx: &RealAxis,
    m: i32,
    spec: &FieldSpec,
    table: &HTable,
    l_max: u32,
    buf: &mut Vec<Complex64>,
) -> Result<Vec<Complex64>> {
    let n = fill_rotated(ctx, m, spec, table, l_max, buf);
    one_minus(buf, n, spec.plane_sign());
    let backup = buf.clone();
    match lu_profile(buf, n) {
        Ok(p) => Ok(p),
        Err(_) => {
            let mut b = backup;
            let v = lu_log_det(&mut b, n)?;
            Ok(fallback_profile(v, n))
        }
    }
}
