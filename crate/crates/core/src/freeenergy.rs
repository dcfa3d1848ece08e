//! Exact observables: Matsubara free energy, vacuum energy, thermal part and
//! force, all in natural units (ħ = c = k_B = 1).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{Branch, FieldSpec, Geometry, RealAxis};
use crate::quad::{gk15_nodes, integrate};
use crate::trlog::{imaginary_axis_trace, rotated_block_profile, static_trace, LevelTrace, Truncation};
use crate::specfun::wrap_phase;
use crate::wigner::HTable;

/// Hard cap on the automatically grown multipole cutoff.
pub const L_AUTO_CAP: u32 = 800;
/// Hard cap on the number of Matsubara terms.
pub const N_MAX_CAP: usize = 100_000;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub l_max_used: u32,
    pub n_max_used: Option<usize>,
    pub xi_max_used: Option<f64>,
    pub m_max_used: u32,
    pub converged: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyResult {
    pub value: f64,
    pub error_estimate: f64,
    pub diagnostics: Diagnostics,
}

impl EnergyResult {
    pub(crate) fn finish(mut self, rel_tol: f64) -> Self {
        let d = &mut self.diagnostics;
        d.converged = d.converged && self.error_estimate <= rel_tol * self.value.abs();
        self
    }
}

/// Remaining truncation error of a level profile, extrapolating geometric
/// decay of the change over the last four levels.
fn tail_estimate(t: &LevelTrace) -> f64 {
    let v = &t.levels;
    let n = v.len();
    if n <= 4 {
        return t.value().abs();
    }
    let d1 = (v[n - 1] - v[n - 5]).abs();
    if d1 == 0.0 {
        return 0.0;
    }
    if !d1.is_finite() {
        return f64::INFINITY;
    }
    if n > 8 {
        let d0 = (v[n - 5] - v[n - 9]).abs();
        if d0 > 0.0 {
            let rho = d1 / d0;
            if rho < 0.9 {
                return d1 * rho / (1.0 - rho);
            }
        }
    }
    10.0 * d1
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct FreqTrace {
    pub(crate) value: f64,
    pub(crate) error: f64,
    pub(crate) l: u32,
    pub(crate) m: u32,
    pub(crate) converged: bool,
}

/// Trace at one frequency (`None` = static), growing l until the tail
/// estimate is below max(tol·|value|, abs_floor).
pub(crate) fn frequency_trace(
    xi: Option<f64>,
    geom: &Geometry,
    spec: &FieldSpec,
    trunc: &Truncation,
    l_start: u32,
    abs_floor: f64,
) -> Result<FreqTrace> {
    let tol = 0.1 * trunc.rel_tol;
    let eval = |l: u32| match xi {
        None => static_trace(geom, spec, l, tol),
        Some(x) => imaginary_axis_trace(x, geom, spec, l, tol, None),
    };
    if let Some(l) = trunc.l_max {
        let t = eval(l)?;
        let error = tail_estimate(&t);
        return Ok(FreqTrace {
            value: t.value(),
            error,
            l,
            m: t.m_max_used,
            converged: error <= (tol * t.value().abs()).max(abs_floor),
        });
    }
    let mut l = l_start.clamp(spec.l_min() + 8, L_AUTO_CAP);
    loop {
        let t = eval(l)?;
        let error = tail_estimate(&t);
        let ok = error <= (tol * t.value().abs()).max(abs_floor);
        if ok || l >= L_AUTO_CAP {
            return Ok(FreqTrace { value: t.value(), error, l, m: t.m_max_used, converged: ok });
        }
        l = ((f64::from(l) * 1.4).ceil() as u32 + 4).min(L_AUTO_CAP);
    }
}

pub(crate) fn static_guess(geom: &Geometry, spec: &FieldSpec) -> u32 {
    let g = spec.l_min() as f64 + 8.0 + 3.0 / geom.epsilon();
    g.min(f64::from(L_AUTO_CAP)) as u32
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

/// F = (T/2)·Tr ln(1 − M(0)) + T·Σ_{n≥1} Tr ln(1 − M(2πTn)).
pub fn matsubara_free_energy(geom: &Geometry, spec: &FieldSpec, t: f64, trunc: &Truncation) -> Result<EnergyResult> {
    check_t(t)?;
    trunc.validate(spec)?;
    geom.require_separated()?;
    let zero = frequency_trace(None, geom, spec, trunc, static_guess(geom, spec), 0.0)?;
    let mut sum = 0.5 * t * zero.value;
    let mut err = 0.5 * t * zero.error;
    let mut converged = zero.converged;
    let (mut l_used, mut m_used) = (zero.l, zero.m);
    let mut hint = zero.l;
    let q = (-4.0 * PI * t * geom.d()).exp();
    let mut n = 0usize;
    let n_cap = trunc.n_max.unwrap_or(N_MAX_CAP);
    loop {
        n += 1;
        if n > n_cap {
            if trunc.n_max.is_some() {
                n -= 1;
                break;
            }
            return Err(Error::Convergence(format!(
                "Matsubara sum not converged after {N_MAX_CAP} terms (dT = {} too small)",
                geom.d() * t
            )));
        }
        let xi = 2.0 * PI * t * n as f64;
        let floor = 1e-3 * trunc.rel_tol * sum.abs() / t;
        let ft = frequency_trace(Some(xi), geom, spec, trunc, (f64::from(hint) * 0.8) as u32, floor)?;
        hint = ft.l;
        l_used = l_used.max(ft.l);
        m_used = m_used.max(ft.m);
        converged &= ft.converged;
        let term = t * ft.value;
        sum += term;
        err += t * ft.error;
        if trunc.n_max.is_none() && term.abs() < trunc.rel_tol * 1e-2 * sum.abs() {
            // Geometric tail of the remaining terms.
            err += term.abs() * q / (1.0 - q).max(1e-300);
            break;
        }
    }
    Ok(EnergyResult {
        value: sum,
        error_estimate: err,
        diagnostics: Diagnostics {
            l_max_used: l_used,
            n_max_used: Some(n),
            xi_max_used: Some(2.0 * PI * t * n as f64),
            m_max_used: m_used,
            converged,
            notes: Vec::new(),
        },
    }
    .finish(trunc.rel_tol))
}

/// E₀ = (1/2π)∫₀^∞ dξ Tr ln(1 − M(ξ)), integrated in t = 2ξd so that the
/// result scales exactly as 1/length.
pub fn vacuum_energy(geom: &Geometry, spec: &FieldSpec, trunc: &Truncation) -> Result<EnergyResult> {
    trunc.validate(spec)?;
    geom.require_separated()?;
    let d = geom.d();
    let zero = frequency_trace(None, geom, spec, trunc, static_guess(geom, spec), 0.0)?;
    let peak = zero.value.abs();
    let floor = 1e-3 * trunc.rel_tol * peak;
    let mut hint = zero.l;
    let mut l_used = zero.l;
    let mut m_used = zero.m;
    let mut converged = zero.converged;
    let mut l_rel = 0.0f64;
    let mut f = |tt: f64| -> Result<f64> {
        let ft = frequency_trace(Some(tt / (2.0 * d)), geom, spec, trunc, (f64::from(hint) * 0.8) as u32, floor)?;
        hint = ft.l;
        l_used = l_used.max(ft.l);
        m_used = m_used.max(ft.m);
        converged &= ft.converged;
        // Each node's truncation error is bounded by l_rel·|value| + floor.
        if ft.value.abs() > 0.0 {
            l_rel = l_rel.max((ft.error - floor).max(0.0) / ft.value.abs());
        }
        Ok(ft.value)
    };
    let mut t_cut = 4.0;
    while f(t_cut)?.abs() > 1e-16 * peak && t_cut < 400.0 {
        t_cut *= 1.5;
    }
    let q = integrate(&mut f, 0.0, t_cut, floor * t_cut, 0.1 * trunc.rel_tol, trunc.quad.max_subdivisions)?;
    let scale = 1.0 / (2.0 * PI * 2.0 * d);
    let value = scale * q.value;
    let error_estimate = scale * (q.error + l_rel * q.value.abs() + floor * t_cut);
    Ok(EnergyResult {
        value,
        error_estimate,
        diagnostics: Diagnostics {
            l_max_used: l_used,
            n_max_used: None,
            xi_max_used: Some(t_cut / (2.0 * d)),
            m_max_used: m_used,
            converged,
            notes: Vec::new(),
        },
    }
    .finish(trunc.rel_tol))
}

/// 1/(e^ξ − 1).
fn bose(xi: f64) -> f64 {
    1.0 / xi.exp_m1()
}

const THERMAL_BASE_L: u32 = 8;

/// Multipole cutoff at physical frequency ω: the imaginary part converges
/// once l exceeds ωR by a margin, independent of the separation.
fn thermal_l_cut(omega: f64, r: f64, base: u32) -> u32 {
    let x = omega * r;
    base + (x + 2.0 * x.cbrt()).ceil() as u32
}

struct ThermalPass {
    value: Vec<f64>,
    quad_err: Vec<f64>,
    l_err: Vec<f64>,
    xi_max: f64,
    l_max: u32,
    m_max: u32,
}

#[derive(Clone, Copy)]
struct Node {
    xi: f64,
    wk: f64,
    wg: f64,
    l_cut: u32,
}

fn unwrap_near(phase: f64, prev: f64) -> f64 {
    phase + 2.0 * PI * ((prev - phase) / (2.0 * PI)).round()
}

/// One evaluation of F_T for several separations at a common radius, sharing
/// quadrature nodes and truncation so that finite differences are smooth.
#[derive(Clone, Copy, Debug)]
enum CutRule {
    Adaptive(u32),
    Fixed(u32),
}

impl CutRule {
    fn at(self, omega: f64, r: f64) -> u32 {
        match self {
            CutRule::Adaptive(base) => thermal_l_cut(omega, r, base),
            CutRule::Fixed(l) => l,
        }
    }
}

fn thermal_pass(geoms: &[Geometry], spec: &FieldSpec, t: f64, trunc: &Truncation, width: f64, rule: CutRule) -> Result<ThermalPass> {
    let r = geoms[0].r();
    let xi_cap = (1.0 / trunc.rel_tol).ln() + 20.0;
    let panels_per_chunk = ((2.5 / width).ceil() as usize).max(1);
    let ng = geoms.len();
    let mut value = vec![0.0; ng];
    let mut quad_err = vec![0.0; ng];
    let mut l_err = vec![0.0; ng];
    let mut prev_phase: Vec<Vec<f64>> = vec![Vec::new(); ng];
    let (mut l_max, mut m_max) = (0u32, 0u32);
    let mut a = 0.0;
    let mut xi_max = 0.0;
    let mut buf = Vec::new();
    while a < xi_cap - 1e-12 {
        let mut nodes = Vec::new();
        let mut panel_of = Vec::new();
        let mut n_panels = 0;
        for _ in 0..panels_per_chunk {
            if a >= xi_cap - 1e-12 {
                break;
            }
            let b = (a + width).min(xi_cap);
            for nd in gk15_nodes(a, b) {
                nodes.push(Node { xi: nd.x, wk: nd.kronrod, wg: nd.gauss, l_cut: rule.at(nd.x * t, r) });
                panel_of.push(n_panels);
            }
            n_panels += 1;
            a = b;
        }
        xi_max = a;
        let chunk_l = nodes.iter().map(|n| n.l_cut).max().unwrap_or(0);
        l_max = l_max.max(chunk_l);
        let contexts: Vec<Vec<RealAxis>> = geoms
            .iter()
            .map(|g| nodes.iter().map(|n| RealAxis::new(n.xi * t, g, spec, n.l_cut, Branch::Upper)).collect())
            .collect::<Result<_>>()?;
        for p in prev_phase.iter_mut() {
            p.resize(chunk_l as usize + 1, 0.0);
        }
        // im[g][i]: Σ_m w_m Im ln det, dim[g][i]: its change over the last four levels.
        let mut im = vec![vec![0.0; nodes.len()]; ng];
        let mut dim = vec![vec![0.0; nodes.len()]; ng];
        let mut done = vec![vec![false; nodes.len()]; ng];
        for m in 0..=chunk_l {
            if done.iter().all(|d| d.iter().enumerate().all(|(i, &x)| x || nodes[i].l_cut < m)) {
                break;
            }
            let table = HTable::new(m as i32, m, chunk_l);
            let w = if m == 0 { 1.0 } else { 2.0 };
            for (i, node) in nodes.iter().enumerate() {
                if node.l_cut < m {
                    continue;
                }
                for g in 0..ng {
                    if done[g][i] {
                        continue;
                    }
                    let prof = rotated_block_profile(&contexts[g][i], m as i32, spec, &table, node.l_cut, &mut buf)?;
                    let top = prof.last().map_or(0.0, |z| z.im);
                    let ph = unwrap_near(top, prev_phase[g][m as usize]);
                    prev_phase[g][m as usize] = ph;
                    let lower = if prof.len() > 4 { prof[prof.len() - 5].im } else { 0.0 };
                    im[g][i] += w * ph;
                    dim[g][i] += w * wrap_phase(top - lower);
                    m_max = m_max.max(m);
                    if m > 0 && (w * ph).abs() < trunc.rel_tol * 1e-3 * im[g][i].abs() {
                        done[g][i] = true;
                    }
                }
            }
        }
        let mut chunk_small = true;
        for g in 0..ng {
            let mut pk = vec![0.0; n_panels];
            let mut pg = vec![0.0; n_panels];
            let mut le = 0.0;
            for (i, node) in nodes.iter().enumerate() {
                let nb = bose(node.xi);
                let f = nb * (-2.0) * im[g][i];
                pk[panel_of[i]] += node.wk * f;
                pg[panel_of[i]] += node.wg * f;
                le += node.wk * nb * 2.0 * dim[g][i].abs();
            }
            let ck: f64 = pk.iter().sum();
            value[g] += ck;
            quad_err[g] += pk.iter().zip(&pg).map(|(k, gg)| (k - gg).abs()).sum::<f64>();
            l_err[g] += le;
            if ck.abs() >= trunc.rel_tol * 1e-3 * value[g].abs() {
                chunk_small = false;
            }
        }
        if chunk_small {
            break;
        }
    }
    let pre = t / (2.0 * PI);
    Ok(ThermalPass {
        value: value.iter().map(|v| pre * v).collect(),
        quad_err: quad_err.iter().map(|v| pre * v).collect(),
        l_err: l_err.iter().map(|v| pre * v).collect(),
        xi_max,
        l_max,
        m_max,
    })
}

fn thermal_multi(geoms: &[Geometry], spec: &FieldSpec, t: f64, trunc: &Truncation) -> Result<Vec<EnergyResult>> {
    check_t(t)?;
    trunc.validate(spec)?;
    if spec.is_em() {
        return Err(Error::Unsupported(
            "the real-frequency thermal representation is implemented for scalar fields only".into(),
        ));
    }
    let l_big = geoms.iter().map(|g| g.l()).fold(0.0, f64::max);
    let mut width = (PI / (2.0 * l_big * t)).min(trunc.quad.max_panel_width);
    let mut base = THERMAL_BASE_L;
    let max_passes = trunc.quad.max_refinements + 2;
    let mut notes = Vec::new();
    for pass_no in 0..max_passes {
        let rule = match trunc.l_max {
            Some(l) => CutRule::Fixed(l),
            None => CutRule::Adaptive(base),
        };
        let p = thermal_pass(geoms, spec, t, trunc, width, rule)?;
        let mut need_width = false;
        let mut need_l = false;
        for g in 0..geoms.len() {
            let scale = trunc.rel_tol * p.value[g].abs();
            need_width |= p.quad_err[g] > 0.2 * scale;
            need_l |= p.l_err[g] > 0.2 * scale && trunc.l_max.is_none();
        }
        let last = pass_no + 1 == max_passes || !(need_width || need_l);
        if last {
            if need_width || need_l {
                notes.push(format!(
                    "thermal integral not converged after {max_passes} passes (panel width {width:.4}, base {base}; up to ξ = {:.2})",
                    p.xi_max
                ));
            }
            return Ok((0..geoms.len())
                .map(|g| {
                    EnergyResult {
                        value: p.value[g],
                        error_estimate: p.quad_err[g] + p.l_err[g],
                        diagnostics: Diagnostics {
                            l_max_used: p.l_max,
                            n_max_used: None,
                            xi_max_used: Some(p.xi_max * t),
                            m_max_used: p.m_max,
                            converged: !(need_width || need_l),
                            notes: notes.clone(),
                        },
                    }
                    .finish(trunc.rel_tol)
                })
                .collect());
        }
        if need_width {
            width *= 0.5;
        }
        if need_l {
            base += 6;
        }
    }
    unreachable!("the final pass always returns")
}

/// F_T = F − E₀ from the real-frequency representation.
pub fn thermal_part(geom: &Geometry, spec: &FieldSpec, t: f64, trunc: &Truncation) -> Result<EnergyResult> {
    Ok(thermal_multi(&[*geom], spec, t, trunc)?.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForceTarget {
    Total,
    ThermalPart,
}

/// −∂F/∂d by a Richardson-extrapolated central difference.
pub fn force(geom: &Geometry, spec: &FieldSpec, t: f64, trunc: &Truncation, target: ForceTarget) -> Result<EnergyResult> {
    let d = geom.d();
    if d < 10.0 * f64::EPSILON * geom.r().max(1.0) {
        return Err(Error::Domain(format!("separation {d:e} too small for a difference stencil")));
    }
    let h = (1e-3 * d).max(1e-4 * geom.r()).min(0.25 * d);
    let stencil: Vec<Geometry> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| geom.with_d(d + k * h))
        .collect::<Result<_>>()?;
    let (vals, diag) = match target {
        ForceTarget::ThermalPart => {
            let res = thermal_multi(&stencil, spec, t, trunc)?;
            let diag = res[0].diagnostics.clone();
            let conv = res.iter().all(|r| r.diagnostics.converged);
            (res.iter().map(|r| r.value).collect::<Vec<_>>(), Diagnostics { converged: conv, ..diag })
        }
        ForceTarget::Total => {
            let centre = matsubara_free_energy(geom, spec, t, trunc)?;
            let fixed = Truncation {
                l_max: Some(centre.diagnostics.l_max_used + 4),
                n_max: centre.diagnostics.n_max_used,
                ..*trunc
            };
            let res = stencil
                .iter()
                .map(|g| matsubara_free_energy(g, spec, t, &fixed))
                .collect::<Result<Vec<_>>>()?;
            let conv = centre.diagnostics.converged;
            (res.iter().map(|r| r.value).collect(), Diagnostics { converged: conv, ..centre.diagnostics })
        }
    };
    let d1 = (vals[2] - vals[1]) / (2.0 * h);
    let d2 = (vals[3] - vals[0]) / (4.0 * h);
    let deriv = (4.0 * d1 - d2) / 3.0;
    let value = -deriv;
    let error_estimate = (d1 - d2).abs() / 3.0;
    Ok(EnergyResult { value, error_estimate, diagnostics: diag }.finish(trunc.rel_tol))
}
