//! Wigner 3j symbols and the coupling coefficients of the scalar translation
//! formula,
//!
//! H_{ll'}^{l''}(m) = √((2l+1)(2l'+1))·(2l''+1)·(l l' l''; 0 0 0)·(l l' l''; m −m 0).
//!
//! Small indices use the Racah sum; whole l''-slices with m ≠ 0 use the
//! three-term recursion in l'' run inwards from both ends and matched in the
//! classically allowed region.

use std::collections::HashMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::specfun::ln_factorial;

/// Largest l for which [`three_j`] uses the Racah sum for the (m, −m, 0) pattern.
pub const RACAH_MAX_L: u32 = 12;

fn triangle(l1: u32, l2: u32, l3: u32) -> bool {
    l3 >= l1.abs_diff(l2) && l3 <= l1 + l2
}

fn lf(n: i64) -> f64 {
    ln_factorial(n as usize)
}

/// Racah single-sum formula in log-factorials with compensated summation.
pub fn three_j_racah(l1: u32, l2: u32, l3: u32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle(l1, l2, l3) {
        return 0.0;
    }
    let (j1, j2, j3) = (i64::from(l1), i64::from(l2), i64::from(l3));
    let (m1, m2, m3) = (i64::from(m1), i64::from(m2), i64::from(m3));
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let pre = 0.5
        * (lf(j1 + j2 - j3) + lf(j1 - j2 + j3) + lf(-j1 + j2 + j3) - lf(j1 + j2 + j3 + 1)
            + lf(j1 + m1)
            + lf(j1 - m1)
            + lf(j2 + m2)
            + lf(j2 - m2)
            + lf(j3 + m3)
            + lf(j3 - m3));
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    if k_min > k_max {
        return 0.0;
    }
    let terms: Vec<(f64, f64)> = (k_min..=k_max)
        .map(|k| {
            let ln = -(lf(k)
                + lf(j3 - j2 + k + m1)
                + lf(j3 - j1 + k - m2)
                + lf(j1 + j2 - j3 - k)
                + lf(j1 - k - m1)
                + lf(j2 - k + m2));
            (if k % 2 == 0 { 1.0 } else { -1.0 }, ln)
        })
        .collect();
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (s, ln) in terms {
        let t = s * (ln - top).exp();
        let u = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - u) + t;
        } else {
            comp += (t - u) + sum;
        }
        sum = u;
    }
    let sum = sum + comp;
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * sum.signum() * (pre + top + sum.abs().ln()).exp()
}

/// (l1 l2 l3; 0 0 0) in closed form.
pub fn three_j_zero(l1: u32, l2: u32, l3: u32) -> f64 {
    let j = l1 + l2 + l3;
    if j % 2 == 1 || !triangle(l1, l2, l3) {
        return 0.0;
    }
    let (j, g) = (i64::from(j), i64::from(j / 2));
    let (a, b, c) = (i64::from(l1), i64::from(l2), i64::from(l3));
    let ln = 0.5 * (lf(j - 2 * a) + lf(j - 2 * b) + lf(j - 2 * c) - lf(j + 1)) + lf(g)
        - lf(g - a)
        - lf(g - b)
        - lf(g - c);
    let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
    sign * ln.exp()
}

/// (l l' l+l'; m −m 0) in closed form (stretched case).
pub fn three_j_stretched(l: u32, lp: u32, m: i32) -> f64 {
    let (a, b, mm) = (i64::from(l), i64::from(lp), i64::from(m));
    if mm.abs() > a || mm.abs() > b {
        return 0.0;
    }
    let big = a + b;
    let ln = 0.5
        * (lf(2 * a) + lf(2 * b) + 2.0 * lf(big)
            - lf(2 * big + 1)
            - lf(a + mm)
            - lf(a - mm)
            - lf(b - mm)
            - lf(b + mm));
    let sign = if (a - b).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * ln.exp()
}

/// (l l' l''; m −m 0) for every l'' from |l−l'| to l+l'.
pub fn three_j_slice(l: u32, lp: u32, m: i32) -> Vec<f64> {
    let lo = l.abs_diff(lp);
    let hi = l + lp;
    let len = (hi - lo + 1) as usize;
    let mu = m.unsigned_abs();
    if mu > l || mu > lp {
        return vec![0.0; len];
    }
    if m == 0 {
        return (lo..=hi).map(|j| three_j_zero(l, lp, j)).collect();
    }
    if l.max(lp) <= RACAH_MAX_L {
        return (lo..=hi).map(|j| three_j_racah(l, lp, j, m, -m, 0)).collect();
    }
    recursion_slice(l, lp, m)
}

fn recursion_slice(l: u32, lp: u32, m: i32) -> Vec<f64> {
    let lo = l.abs_diff(lp) as usize;
    let hi = (l + lp) as usize;
    let len = hi - lo + 1;
    let delta2 = (lo * lo) as f64;
    let s2 = ((hi + 1) * (hi + 1)) as f64;
    let alpha = |j: usize| {
        let jj = (j * j) as f64;
        ((jj - delta2) * (s2 - jj)).max(0.0).sqrt()
    };
    let two_m = 2.0 * f64::from(m);
    let beta = |j: usize| two_m * (2 * j + 1) as f64;

    if len == 1 {
        return vec![three_j_stretched(l, lp, m)];
    }
    // Classically allowed region: complex characteristic roots.
    let classical: Vec<usize> = ((lo + 1)..hi)
        .filter(|&j| beta(j).powi(2) < 4.0 * alpha(j) * alpha(j + 1))
        .collect();
    if classical.is_empty() {
        return (lo..=hi).map(|j| three_j_racah(l, lp, j as u32, m, -m, 0)).collect();
    }
    let mid = classical[classical.len() / 2];

    let mut f = vec![0.0f64; len];
    // Downward from hi to mid: α(j+1)f(j+1) − β(j)f(j) + α(j)f(j−1) = 0.
    f[hi - lo] = 1.0;
    let mut j = hi;
    while j > mid {
        let next = if j + 1 <= hi { alpha(j + 1) * f[j + 1 - lo] } else { 0.0 };
        f[j - 1 - lo] = (beta(j) * f[j - lo] - next) / alpha(j);
        if f[j - 1 - lo].abs() > 1e200 {
            for v in f[(j - 1 - lo)..].iter_mut() {
                *v *= 1e-200;
            }
        }
        j -= 1;
    }
    let (d_mid, d_mid1) = (f[mid - lo], f[mid + 1 - lo]);

    // Upward from lo to mid + 1.
    let mut g = vec![0.0f64; mid + 2 - lo];
    g[0] = 1.0;
    g[1] = if lo == 0 {
        f64::from(m) / (f64::from(l) * f64::from(l + 1)).sqrt()
    } else {
        beta(lo) / alpha(lo + 1)
    };
    for j in (lo + 1)..=mid {
        let v = (beta(j) * g[j - lo] - alpha(j) * g[j - 1 - lo]) / alpha(j + 1);
        g[j + 1 - lo] = v;
        if v.abs() > 1e200 {
            for w in g.iter_mut().take(j + 2 - lo) {
                *w *= 1e-200;
            }
        }
    }
    let (u_mid, u_mid1) = (g[mid - lo], g[mid + 1 - lo]);
    let scale = (u_mid * d_mid + u_mid1 * d_mid1) / (u_mid * u_mid + u_mid1 * u_mid1);
    for j in lo..mid {
        f[j - lo] = g[j - lo] * scale;
    }

    let norm: f64 = (lo..=hi).map(|j| (2 * j + 1) as f64 * f[j - lo].powi(2)).sum::<f64>().sqrt();
    let sign_top = if (i64::from(l) - i64::from(lp)).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let s = sign_top * f[hi - lo].signum() / norm;
    f.iter_mut().for_each(|v| *v *= s);
    f
}

/// Wigner 3j symbol for the patterns (0,0,0) and (m,−m,0); other patterns
/// fall back to the Racah sum. Out-of-domain inputs give 0.
pub fn three_j(l1: u32, l2: u32, l3: u32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle(l1, l2, l3) {
        return 0.0;
    }
    if m1 == 0 && m2 == 0 && m3 == 0 {
        return three_j_zero(l1, l2, l3);
    }
    if m3 == 0 && m2 == -m1 {
        if l3 == l1 + l2 {
            return three_j_stretched(l1, l2, m1);
        }
        if l1.max(l2) > RACAH_MAX_L {
            let slice = three_j_slice(l1, l2, m1);
            return slice[(l3 - l1.abs_diff(l2)) as usize];
        }
    }
    three_j_racah(l1, l2, l3, m1, m2, m3)
}

/// H_{ll'}^{l''} for l'' = |l−l'|, |l−l'|+2, …, l+l' (the odd-parity entries
/// vanish identically and are not stored).
pub fn h_slice_even(l: u32, lp: u32, m: i32) -> Vec<f64> {
    let lo = l.abs_diff(lp);
    let tm = three_j_slice(l, lp, m);
    let pre = (f64::from(2 * l + 1) * f64::from(2 * lp + 1)).sqrt();
    (lo..=l + lp)
        .step_by(2)
        .map(|j| pre * f64::from(2 * j + 1) * three_j_zero(l, lp, j) * tm[(j - lo) as usize])
        .collect()
}

const CACHE_MAX_L: u32 = 96;

static H_CACHE: Lazy<RwLock<HashMap<(u32, u32, u32), Arc<[f64]>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// Cached even-parity H slice; the cache covers l, l' ≤ 96 and is keyed on
/// |m| because H is invariant under m → −m on its support.
pub fn h_slice(l: u32, lp: u32, m: i32) -> Arc<[f64]> {
    let (a, b) = if l <= lp { (l, lp) } else { (lp, l) };
    let mu = m.unsigned_abs();
    if b > CACHE_MAX_L {
        return h_slice_even(a, b, mu as i32).into();
    }
    let key = (a, b, mu);
    if let Some(s) = H_CACHE.read().get(&key) {
        return s.clone();
    }
    let s: Arc<[f64]> = h_slice_even(a, b, mu as i32).into();
    H_CACHE.write().entry(key).or_insert_with(|| s.clone()).clone()
}

pub fn h_factor(l: u32, lp: u32, lpp: u32, m: i32) -> f64 {
    if !triangle(l, lp, lpp) || (l + lp + lpp) % 2 == 1 || m.unsigned_abs() > l.min(lp) {
        return 0.0;
    }
    let lo = l.abs_diff(lp);
    h_slice(l, lp, m)[((lpp - lo) / 2) as usize]
}

/// All H slices for one azimuthal block, l, l' ∈ [l_start, l_max], stored
/// for l ≤ l' in row-major triangular order.
#[derive(Clone, Debug)]
pub struct HTable {
    l_start: u32,
    l_max: u32,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl HTable {
    pub fn new(m: i32, l_start: u32, l_max: u32) -> Self {
        let mut offsets = Vec::new();
        let mut data = Vec::new();
        if l_start <= l_max {
            for l in l_start..=l_max {
                for lp in l..=l_max {
                    offsets.push(data.len());
                    data.extend_from_slice(&h_slice(l, lp, m));
                }
            }
        }
        offsets.push(data.len());
        HTable { l_start, l_max, offsets, data }
    }

    /// Even-parity slice for (l, l'), starting at l'' = |l−l'|.
    pub fn slice(&self, l: u32, lp: u32) -> &[f64] {
        let k = self.pair_index(l, lp);
        &self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    fn pair_index(&self, l: u32, lp: u32) -> usize {
        let n = (self.l_max - self.l_start + 1) as usize;
        let (a, b) = if l <= lp { (l, lp) } else { (lp, l) };
        let i = (a - self.l_start) as usize;
        let j = (b - self.l_start) as usize;
        // rows 0..i hold n, n−1, …, n−i+1 pairs
        i * n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    pub fn l_start(&self) -> u32 {
        self.l_start
    }
    pub fn l_max(&self) -> u32 {
        self.l_max
    }
}
