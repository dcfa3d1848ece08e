//! Gauss–Kronrod (7/15) quadrature: single panels and a globally adaptive
//! integrator.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A node of a 15-point panel with its Kronrod and embedded Gauss weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanelNode {
    pub x: f64,
    pub kronrod: f64,
    pub gauss: f64,
}

/// The 15 nodes of [a, b] in ascending order.
pub fn gk15_nodes(a: f64, b: f64) -> [PanelNode; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [PanelNode { x: 0.0, kronrod: 0.0, gauss: 0.0 }; 15];
    for i in 0..7 {
        let g = if i % 2 == 1 { WG[i / 2] * h } else { 0.0 };
        out[i] = PanelNode { x: c - h * XGK[i], kronrod: WGK[i] * h, gauss: g };
        out[14 - i] = PanelNode { x: c + h * XGK[i], kronrod: WGK[i] * h, gauss: g };
    }
    out[7] = PanelNode { x: c, kronrod: WGK[7] * h, gauss: WG[3] * h };
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let (mut k, mut g) = (0.0, 0.0);
    for n in gk15_nodes(a, b) {
        let v = f(n.x)?;
        k += n.kronrod * v;
        g += n.gauss * v;
    }
    Ok((k, (k - g).abs()))
}

/// Globally adaptive GK15 on [a, b]: bisect the worst panel until the summed
/// error estimate is below max(abs_tol, rel_tol·|I|).
pub fn integrate<F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (v, e) = panel(&mut f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadResult { value, error, evaluations });
        }
        if panels.len() >= max_subdivisions {
            return Err(Error::Convergence(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {error:e} (value {value:e})"
            )));
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("panel list is never empty");
        let (pa, pb, _, _) = panels.swap_remove(i);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = panel(&mut f, pa, mid)?;
        let (v2, e2) = panel(&mut f, mid, pb)?;
        evaluations += 30;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// ∫_a^∞ f by mapping x = a + t/(1−t) onto [0, 1).
pub fn integrate_to_infinity<F>(mut f: F, a: f64, abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate(
        |t| {
            let s = 1.0 - t;
            let x = a + t / s;
            let v = f(x)?;
            Ok(if v == 0.0 { 0.0 } else { v / (s * s) })
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        max_subdivisions,
    )
}
