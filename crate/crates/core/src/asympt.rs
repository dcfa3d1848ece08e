//! Closed-form asymptotics: the leading low-temperature thermal correction,
//! the zero-frequency (high-temperature) coefficient F₀, and the
//! small-separation free energy at medium and high temperature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::freeenergy::{frequency_trace, static_guess, Diagnostics, EnergyResult};
use crate::kernel::{Boundary, FieldSpec, Geometry};
use crate::pfa::h_function;
use crate::specfun::{ZETA2, ZETA4};
use crate::trlog::Truncation;

/// A leading-order closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult {
    pub value: f64,
    /// Power of the expansion variable (T for low temperature, ε for small
    /// separation) multiplying the coefficient.
    pub leading_power: i32,
    /// The regime inequalities, with a warning appended if they are violated.
    pub validity_note: String,
}

/// Inequalities "a ≪ b" are flagged when a/b exceeds this.
const MUCH_LESS: f64 = 0.1;

/// Leading term of the thermal part F − E₀ as T → 0 with R and d fixed.
///
/// Dirichlet sphere: ∝ RT² (sign and L-dependence set by the plane);
/// Neumann sphere and the electromagnetic field: ∝ R³T⁴.
pub fn low_t_thermal(geom: &Geometry, spec: &FieldSpec, t: f64) -> Result<ExpansionResult> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("temperature must be non-negative, got {t}")));
    }
    let (r, l) = (geom.r(), geom.l());
    let (value, leading_power) = if spec.is_em() {
        let (l3, r3) = (l * l * l, r * r * r);
        let shape = 1.0 + 2.0 / 3.0 * (16.0 * l3 + r3) / (16.0 * l3 - r3) - 2.0 / 3.0 * (4.0 * l3 + r3) / (4.0 * l3 - r3);
        (6.0 * ZETA4 / PI * shape * r3 * t.powi(4), 4)
    } else {
        match (spec.sphere_bc, spec.plane_bc) {
            (Boundary::Dirichlet, Boundary::Dirichlet) => (-ZETA2 / PI * r * t * t, 2),
            (Boundary::Dirichlet, Boundary::Neumann) => (ZETA2 / PI * (2.0 * l - r) / (2.0 * l + r) * r * t * t, 2),
            (Boundary::Neumann, plane) => {
                let sign = if plane == Boundary::Dirichlet { -1.0 } else { 1.0 };
                (sign * 2.0 * ZETA4 / PI * r.powi(3) * t.powi(4), 4)
            }
        }
    };
    let mut validity_note = String::from("valid for TR << 1 and Td << 1");
    if t * r > MUCH_LESS || t * geom.d() > MUCH_LESS {
        validity_note.push_str(&format!("; warning: TR = {}, Td = {} are not small", t * r, t * geom.d()));
    }
    Ok(ExpansionResult { value, leading_power, validity_note })
}

/// F₀ = ½ Σ_m Tr ln(1 − M(0)), the coefficient of T in the free energy at
/// high temperature (F = T·F₀ up to exponentially small terms).
pub fn high_t_f0(geom: &Geometry, spec: &FieldSpec, trunc: &Truncation) -> Result<EnergyResult> {
    trunc.validate(spec)?;
    geom.require_separated()?;
    let zero = frequency_trace(None, geom, spec, trunc, static_guess(geom, spec), 0.0)?;
    let mut notes = Vec::new();
    if geom.epsilon() < 0.01 {
        notes.push(format!("d/R = {} is below the supported floor 0.01", geom.epsilon()));
    }
    Ok(EnergyResult {
        value: 0.5 * zero.value,
        error_estimate: 0.5 * zero.error,
        diagnostics: Diagnostics {
            l_max_used: zero.l,
            n_max_used: Some(0),
            xi_max_used: Some(0.0),
            m_max_used: zero.m,
            converged: zero.converged,
            notes,
        },
    }
    .finish(trunc.rel_tol))
}

/// Electromagnetic free energy for d ≪ R at fixed dT:
/// −π³R/(720 d²)·(1 + h(2dT)).
pub fn small_sep_medium_t(geom: &Geometry, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("temperature must be non-negative, got {t}")));
    }
    geom.require_separated()?;
    let (r, d) = (geom.r(), geom.d());
    Ok(-PI.powi(3) * r / (720.0 * d * d) * (1.0 + h_function(2.0 * d * t)))
}
