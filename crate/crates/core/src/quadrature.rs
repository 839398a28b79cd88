//! Graded product quadrature for the weakly singular Duhamel integrals
//! `int_0^t (t-s)^{-a} s^{-b} phi(s) ds` with `a, b < 1`.
//!
//! The grid only carries `phi` at trajectory nodes, so the singular density
//! is integrated exactly per cell (substitutions absorb each endpoint
//! singularity, composite Gauss-Legendre does the rest) and `phi` is taken
//! piecewise constant at an anchor node: the right endpoint on `(0, t/2]`
//! where the grading resolves `s^{-b}`, the left endpoint on `(t/2, t)`
//! where `(t-s)^{-a}` lives. Summing the bare weights therefore reproduces
//! the beta-function value `t^{1-a-b} B(1-a, 1-b)`, which is what the
//! calibration check pins down before any solve runs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(compute_gauss_legendre(n)))
        .clone()
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n and P'_n.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl_panel(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, order: usize) -> f64 {
    let gl = gauss_legendre(order);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    gl.0.iter()
        .zip(&gl.1)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// `int_0^W f(w) dw` where `f` is bounded but loses smoothness at `w = 0`:
/// geometric panels shrink toward the rough endpoint.
fn gl_toward_zero(f: &impl Fn(f64) -> f64, width: f64, order: usize) -> f64 {
    const RATIO: f64 = 0.25;
    const PANELS: u32 = 14;
    let mut sum = 0.0;
    let mut hi = width;
    for _ in 0..PANELS {
        let lo = hi * RATIO;
        sum += gl_panel(f, lo, hi, order);
        hi = lo;
    }
    sum + gl_panel(f, 0.0, hi, order)
}

/// Exact-to-roundoff `int_{s0}^{s1} (t-s)^{-a} s^{-b} ds` for a cell of
/// `[0, t]`. Endpoint singularities are absorbed by the substitutions
/// `u = s^{1-b}` and `v = (t-s)^{1-a}`.
pub fn singular_density_integral(t: f64, a: f64, b: f64, s0: f64, s1: f64) -> Result<f64> {
    check_exponents(a, b)?;
    if !(0.0 <= s0 && s0 < s1 && s1 <= t) {
        return Err(Error::Config(format!(
            "bad quadrature cell [{s0}, {s1}] inside [0, {t}]"
        )));
    }
    if s0 == 0.0 && s1 == t {
        let half = 0.5 * t;
        return Ok(singular_density_integral(t, a, b, 0.0, half)?
            + singular_density_integral(t, a, b, half, t)?);
    }
    if s0 == 0.0 {
        // u = s^{1-b}: integral becomes 1/(1-b) int_0^{s1^{1-b}} (t - u^{1/(1-b)})^{-a} du.
        let pow = 1.0 - b;
        let gamma = 1.0 / pow;
        let width = s1.powf(pow);
        let f = |u: f64| (t - u.powf(gamma)).powf(-a);
        return Ok(gl_toward_zero(&f, width, 16) / pow);
    }
    if s1 == t {
        // tau = t - s, then v = tau^{1-a}.
        let pow = 1.0 - a;
        let gamma = 1.0 / pow;
        let width = (t - s0).powf(pow);
        let f = |v: f64| (t - v.powf(gamma)).powf(-b);
        return Ok(gl_toward_zero(&f, width, 16) / pow);
    }
    // Interior cell: smooth integrand, a short composite rule suffices.
    let f = |s: f64| (t - s).powf(-a) * s.powf(-b);
    let mut sum = 0.0;
    let panels = 4;
    for k in 0..panels {
        let lo = s0 + (s1 - s0) * k as f64 / panels as f64;
        let hi = s0 + (s1 - s0) * (k + 1) as f64 / panels as f64;
        sum += gl_panel(&f, lo, hi, 16);
    }
    Ok(sum)
}

fn check_exponents(a: f64, b: f64) -> Result<()> {
    if !(a < 1.0 && b < 1.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "non-integrable endpoint exponent: need a < 1 and b < 1, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// Product-quadrature weights over a node prefix ending exactly at `t`:
/// `int_0^t (t-s)^{-a} s^{-b} phi(s) ds ~= sum_j w_j phi(s_j)`.
///
/// `phi` is the regularized integrand `(t-s)^a s^b G(s)`; callers evaluate
/// it at the nodes. The weights sum to the full density integral.
pub fn product_weights(t: f64, nodes: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
    check_exponents(a, b)?;
    if nodes.is_empty() {
        return Err(Error::Config("product quadrature needs at least one node".into()));
    }
    if nodes[0] <= 0.0 {
        return Err(Error::Config("quadrature nodes must be positive".into()));
    }
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("quadrature nodes must be strictly increasing".into()));
    }
    if *nodes.last().unwrap() != t {
        return Err(Error::Config(format!(
            "node grid must end at the target time {t}, ends at {}",
            nodes.last().unwrap()
        )));
    }
    let mut weights = vec![0.0; nodes.len()];
    for j in 0..nodes.len() {
        let s0 = if j == 0 { 0.0 } else { nodes[j - 1] };
        let s1 = nodes[j];
        let cell = singular_density_integral(t, a, b, s0, s1)?;
        let anchor = if j == 0 {
            0
        } else if s1 <= 0.5 * t {
            j
        } else {
            j - 1
        };
        weights[anchor] += cell;
    }
    Ok(weights)
}

/// `int_0^t exp(-(t-s) kappa) h(s) ds` for all prefix targets of a time
/// grid, by exact exponential stepping:
/// `I(t_m) = exp(-dt kappa) I(t_{m-1}) + int_{t_{m-1}}^{t_m} ...`.
///
/// `h` may blow up like `s^{-sing_b}` at the origin (`sing_b < 1`); the
/// first cell absorbs that with the same grading substitution, later cells
/// use panels shrinking toward the target to resolve the `exp` boundary
/// layer of high frequencies.
pub fn heat_force_profile(
    times: &[f64],
    kappa: f64,
    sing_b: f64,
    h: &impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("time grid must be positive and strictly increasing".into()));
    }
    if sing_b >= 1.0 {
        return Err(Error::Domain(format!(
            "force time profile must be integrable at 0, got exponent {sing_b}"
        )));
    }
    let mut out = Vec::with_capacity(times.len());
    // First cell [0, t_1]: u = s^{1-b} grading.
    let t1 = times[0];
    let pow = 1.0 - sing_b.max(0.0);
    let gamma = 1.0 / pow;
    let f = |u: f64| {
        let s = u.powf(gamma);
        ((s - t1) * kappa).exp() * h(s) * s.powf(sing_b.max(0.0))
    };
    // exp(-(t1-s)kappa) written as exp((s-t1)kappa); bounded by 1.
    let mut acc = gl_toward_zero(&f, t1.powf(pow), 16) / pow;
    out.push(acc);
    for m in 1..times.len() {
        let (lo, hi) = (times[m - 1], times[m]);
        let dt = hi - lo;
        // Panels halve toward s = hi until the heat layer is resolved.
        let f = |s: f64| ((s - hi) * kappa).exp() * h(s);
        let layers = (1.0 + kappa * dt).log2().ceil().max(0.0) as usize + 4;
        let mut cell = 0.0;
        let mut off = dt;
        for _ in 0..layers {
            let next = off * 0.5;
            cell += gl_panel(&f, hi - off, hi - next, 12);
            off = next;
        }
        cell += gl_panel(&f, hi - off, hi, 12);
        acc = (-dt * kappa).exp() * acc + cell;
        out.push(acc);
    }
    Ok(out)
}
