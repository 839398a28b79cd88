//! Angular kernels on the unit sphere `S^{n-1}`.
//!
//! The drift operators only see the kernel through its values at grid
//! directions and through the spherical means `int Omega` and
//! `||Omega||_{L^rho}`. Three families are shipped: smooth spherical
//! harmonics, the odd sign kernel `sgn(sigma . e)` (rough but bounded),
//! and the power singularity `|sigma . e|^{-1/beta}` which is in
//! `L^rho(S^{n-1})` exactly for `rho < beta`.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Target tolerance for the mean-zero projection quadrature; anything
/// worse than `MEAN_ACCEPT_TOL` at the refinement cap is a failure.
const MEAN_TOL: f64 = 1e-10;
const MEAN_ACCEPT_TOL: f64 = 1e-6;
/// Convergence tolerance for `L^rho` norms (relative change per level).
const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum KernelFamily {
    /// `constant + sum_m (cos_m cos(m theta) + sin_m sin(m theta))` on the
    /// circle; on `S^2` a combination over the mean-zero polynomial basis
    /// `[s1, s2, s3, s1 s2, s2 s3, s3 s1, s1^2 - s2^2, 3 s3^2 - 1]`.
    Harmonic { constant: f64, coeffs: Vec<f64> },
    /// `|sigma . e|^{-1/beta}`; integrable on the sphere for `beta > 1`,
    /// in `L^rho` exactly when `rho < beta`.
    PowerSingular { beta: f64, axis: Vec<f64> },
    /// `sgn(sigma_axis)`, mean zero by symmetry.
    OddSign { axis: usize },
}

/// Exponent at which a finite sphere norm has been certified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoCertificate {
    pub rho: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct SphereKernel {
    n: usize,
    family: KernelFamily,
    /// Additive constant carried by mean-zero projection.
    offset: f64,
    certificate: Option<RhoCertificate>,
}

impl SphereKernel {
    pub fn new(n: usize, family: KernelFamily) -> Result<SphereKernel> {
        if !(2..=3).contains(&n) {
            return Err(Error::Config(format!("kernel dimension must be 2 or 3, got {n}")));
        }
        match &family {
            KernelFamily::Harmonic { coeffs, .. } => {
                if n == 3 && coeffs.len() > 8 {
                    return Err(Error::Config(
                        "harmonic kernel on S^2 supports at most 8 basis coefficients".into(),
                    ));
                }
            }
            KernelFamily::PowerSingular { beta, axis } => {
                if *beta <= 1.0 {
                    return Err(Error::Config(format!(
                        "power-singular kernel needs beta > 1 for integrability, got {beta}"
                    )));
                }
                if axis.len() != n || axis.iter().map(|x| x * x).sum::<f64>() == 0.0 {
                    return Err(Error::Config(
                        "power-singular axis must be a nonzero n-vector".into(),
                    ));
                }
            }
            KernelFamily::OddSign { axis } => {
                if *axis >= n {
                    return Err(Error::Config(format!("sign kernel axis {axis} out of range")));
                }
            }
        }
        Ok(SphereKernel { n, family, offset: 0.0, certificate: None })
    }

    /// Default incommensurable axis for the power family; it avoids exact
    /// lattice hits of the singular circle when tabulated on a grid.
    pub fn power_singular(n: usize, beta: f64) -> Result<SphereKernel> {
        let axis = match n {
            2 => vec![1.0, 0.618_033_988_749_894_9],
            _ => vec![1.0, 0.618_033_988_749_894_9, 0.381_966_011_250_105_1],
        };
        SphereKernel::new(n, KernelFamily::PowerSingular { beta, axis })
    }

    pub fn odd_sign(n: usize, axis: usize) -> Result<SphereKernel> {
        SphereKernel::new(n, KernelFamily::OddSign { axis })
    }

    pub fn harmonic(n: usize, constant: f64, coeffs: Vec<f64>) -> Result<SphereKernel> {
        SphereKernel::new(n, KernelFamily::Harmonic { constant, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn certificate(&self) -> Option<RhoCertificate> {
        self.certificate
    }

    pub fn sphere_area(&self) -> f64 {
        match self.n {
            2 => TAU,
            _ => 2.0 * TAU,
        }
    }

    /// Evaluate at a unit vector. Power-singular kernels return `inf` on
    /// their singular circle; tabulation treats those samples as empty.
    pub fn eval(&self, sigma: &[f64]) -> f64 {
        let base = match &self.family {
            KernelFamily::Harmonic { constant, coeffs } => {
                if self.n == 2 {
                    let theta = sigma[1].atan2(sigma[0]);
                    let mut v = *constant;
                    for (i, pair) in coeffs.chunks(2).enumerate() {
                        let m = (i + 1) as f64;
                        v += pair[0] * (m * theta).cos();
                        if pair.len() > 1 {
                            v += pair[1] * (m * theta).sin();
                        }
                    }
                    v
                } else {
                    let (s1, s2, s3) = (sigma[0], sigma[1], sigma[2]);
                    let basis = [
                        s1,
                        s2,
                        s3,
                        s1 * s2,
                        s2 * s3,
                        s3 * s1,
                        s1 * s1 - s2 * s2,
                        3.0 * s3 * s3 - 1.0,
                    ];
                    *constant
                        + coeffs.iter().zip(basis.iter()).map(|(c, b)| c * b).sum::<f64>()
                }
            }
            KernelFamily::PowerSingular { beta, axis } => {
                let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dot = sigma.iter().zip(axis).map(|(s, a)| s * a).sum::<f64>().abs() / norm;
                dot.powf(-1.0 / beta)
            }
            KernelFamily::OddSign { axis } => {
                let v = sigma[*axis];
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        };
        base + self.offset
    }

    /// Spherical mean `(1/|S^{n-1}|) int Omega`.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.integral(|v| v, MEAN_TOL, MEAN_ACCEPT_TOL)? / self.sphere_area())
    }

    /// Subtract the spherical mean. Odd kernels come back unchanged (their
    /// mean vanishes by symmetry up to quadrature dust).
    pub fn project_mean_zero(&self) -> Result<SphereKernel> {
        let mean = self.mean()?;
        let mut out = self.clone();
        out.offset -= mean;
        out.certificate = None;
        Ok(out)
    }

    /// `(int |Omega|^rho)^{1/rho}` by refining angular quadrature until the
    /// relative change per level is below 1e-8. A power-singular kernel at
    /// `rho >= beta` is reported as "norm infinite at this rho".
    pub fn sphere_norm(&self, rho: f64) -> Result<f64> {
        if !(rho >= 1.0 && rho.is_finite()) {
            return Err(Error::Domain(format!(
                "sphere norm exponent must be in [1, inf), got {rho}"
            )));
        }
        let value = self.integral(|v| v.abs().powf(rho), NORM_TOL, NORM_TOL)?;
        Ok(value.powf(1.0 / rho))
    }

    /// Attach a certificate at the target exponent; requires `1 < rho < n`.
    pub fn with_certificate(mut self, rho: f64) -> Result<SphereKernel> {
        if !(rho > 1.0 && rho < self.n as f64) {
            return Err(Error::Domain(format!(
                "certified exponent must satisfy 1 < rho < n = {}, got {rho}",
                self.n
            )));
        }
        let norm = self.sphere_norm(rho)?;
        self.certificate = Some(RhoCertificate { rho, norm });
        Ok(self)
    }

    /// `int map(Omega(sigma)) dsigma` with family-aware quadrature. The
    /// stopping rule compares the change per level against the magnitude
    /// of `int |map(Omega)|` so that near-cancelling integrals (projected
    /// means) still converge.
    fn integral(&self, map: impl Fn(f64) -> f64 + Copy, tol: f64, accept: f64) -> Result<f64> {
        match &self.family {
            KernelFamily::PowerSingular { beta, .. } => {
                // Reduce to 1D by rotation invariance: the integrand only
                // depends on |sigma . e|.
                let off = self.offset;
                let beta = *beta;
                let f = move |dot: f64| map(dot.powf(-1.0 / beta) + off);
                let c = singular_exponent(&f);
                if self.n == 2 {
                    // int_{S^1} F(|sigma.e|) = 4 int_0^{pi/2} F(sin t) dt.
                    let half_pi = std::f64::consts::FRAC_PI_2;
                    let g = move |w: f64| f((half_pi * w).sin());
                    if c < 1.0 {
                        let floor = 4.0 * half_pi
                            * graded_unit_integral(c, |w| g(w).abs(), 1).abs();
                        refine(|lvl| 4.0 * half_pi * graded_unit_integral(c, g, lvl), tol, accept, floor)
                    } else {
                        refine(|lvl| 4.0 * half_pi * plain_unit_integral(g, lvl), tol, accept, 0.0)
                    }
                } else {
                    // int_{S^2} F(|sigma.e|) = 4 pi int_0^1 F(u) du.
                    if c < 1.0 {
                        let floor =
                            2.0 * TAU * graded_unit_integral(c, |u| f(u).abs(), 1).abs();
                        refine(|lvl| 2.0 * TAU * graded_unit_integral(c, f, lvl), tol, accept, floor)
                    } else {
                        refine(|lvl| 2.0 * TAU * plain_unit_integral(f, lvl), tol, accept, 0.0)
                    }
                }
            }
            _ => {
                if self.n == 2 {
                    let floor = self.circle_integral(|v| map(v).abs(), 1);
                    refine(|lvl| self.circle_integral(&map, lvl), tol, accept, floor)
                } else {
                    let floor = self.sphere3_integral(|v| map(v).abs(), 1);
                    refine(|lvl| self.sphere3_integral(&map, lvl), tol, accept, floor)
                }
            }
        }
    }

    fn circle_integral(&self, map: impl Fn(f64) -> f64, level: u32) -> f64 {
        let m = 64usize << level;
        let dt = TAU / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            let theta = (i as f64 + 0.5) * dt;
            sum += map(self.eval(&[theta.cos(), theta.sin()]));
        }
        sum * dt
    }

    /// Latitude-longitude product rule: Gauss-Legendre in cos(theta),
    /// midpoint in phi.
    fn sphere3_integral(&self, map: impl Fn(f64) -> f64, level: u32) -> f64 {
        let nu = 24usize << level;
        let nphi = 64usize << level;
        let gl = gauss_legendre(nu);
        let (nodes, weights) = (&gl.0, &gl.1);
        let dphi = TAU / nphi as f64;
        let mut sum = 0.0;
        for (u, wu) in nodes.iter().zip(weights) {
            let s = (1.0 - u * u).sqrt();
            let mut ring = 0.0;
            for j in 0..nphi {
                let phi = (j as f64 + 0.5) * dphi;
                ring += map(self.eval(&[s * phi.cos(), s * phi.sin(), *u]));
            }
            sum += wu * ring * dphi;
        }
        sum
    }
}

/// Measure how fast `f(v)` blows up as `v -> 0+`: fitted slope of
/// `log f(v)` against `-log v`. Used to pick the grading exponent.
fn singular_exponent(f: &impl Fn(f64) -> f64) -> f64 {
    let (v1, v2) = (1e-6, 1e-8);
    let (f1, f2) = (f(v1).abs().max(1e-300), f(v2).abs().max(1e-300));
    let slope = (f2.ln() - f1.ln()) / (v1.ln() - v2.ln());
    slope.max(0.0)
}

/// `int_0^1 g(u) du` where `g(u) ~ u^{-c}` near zero, `c < 1`: substitute
/// `u = w^{1/(1-c)}` and use the midpoint rule in `w`.
fn graded_unit_integral(c: f64, g: impl Fn(f64) -> f64, level: u32) -> f64 {
    let gamma = 1.0 / (1.0 - c);
    let m = 64usize << level;
    let dw = 1.0 / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        let w: f64 = (i as f64 + 0.5) * dw;
        let u = w.powf(gamma);
        sum += gamma * w.powf(gamma - 1.0) * g(u);
    }
    sum * dw
}

fn plain_unit_integral(g: impl Fn(f64) -> f64, level: u32) -> f64 {
    let m = 64usize << level;
    let dw = 1.0 / m as f64;
    (0..m).map(|i| g((i as f64 + 0.5) * dw)).sum::<f64>() * dw
}

/// Refinement ladder with divergence detection: levels double the node
/// count; converged when the change per level drops below `tol` times the
/// integral scale; flagged infinite when the value keeps growing with
/// non-shrinking increments.
fn refine(eval: impl Fn(u32) -> f64, tol: f64, accept: f64, scale_floor: f64) -> Result<f64> {
    const MAX_LEVEL: u32 = 14;
    let mut prev = eval(0);
    let mut prev_change = f64::INFINITY;
    let mut growth_streak = 0u32;
    for level in 1..=MAX_LEVEL {
        let cur = eval(level);
        let change = (cur - prev).abs();
        let scale = cur.abs().max(scale_floor).max(f64::MIN_POSITIVE);
        if change <= tol * scale {
            return Ok(cur);
        }
        if cur > prev && change >= 0.9 * prev_change {
            growth_streak += 1;
            if growth_streak >= 3 {
                return Err(Error::Numerics("norm infinite at this rho".into()));
            }
        } else {
            growth_streak = 0;
        }
        if level == MAX_LEVEL && change <= accept * scale {
            return Ok(cur);
        }
        prev = cur;
        prev_change = change;
    }
    Err(Error::Numerics(format!(
        "sphere quadrature did not converge to relative change {accept} within {MAX_LEVEL} levels"
    )))
}
