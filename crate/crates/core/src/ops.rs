//! Discrete realizations of the rough convolution operators
//! `T^alpha(phi)(x) = p.v. int Omega(y/|y|) / |y|^{n-alpha} phi(x-y) dy`,
//! their truncations and maximal variants, the Hardy-Littlewood maximal
//! function, Riesz transforms, the heat semigroup, and the three drift
//! nonlinearities built from them.
//!
//! The kernel is tabulated at cell-center displacements with the origin
//! cell zeroed (the p.v. regularization; the omitted symmetric core
//! contributes O(spacing) for Lipschitz fields) and truncated strictly
//! inside radius `L/2`, which keeps the tabulation exactly odd for odd
//! kernels. The direct summation path and the FFT path evaluate the same
//! discrete sum, so they agree to roundoff; direct is the oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, Repr};
use crate::grid::Grid;
use crate::multiplier::{apply_multiplier, Multiplier};
use crate::sphere::SphereKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyMethod {
    Direct,
    Fft,
}

/// Largest grid for which the quadratic-cost direct path is allowed.
pub const DIRECT_COST_GUARD: usize = 32;

/// A tabulated rough operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct RoughOperator {
    kernel: SphereKernel,
    alpha: f64,
    grid: Grid,
    tabulated: Vec<f64>,
}

impl RoughOperator {
    pub fn new(kernel: SphereKernel, alpha: f64, grid: Grid) -> Result<RoughOperator> {
        let n = grid.n();
        if kernel.n() != n {
            return Err(Error::Config(format!(
                "kernel dimension {} does not match grid dimension {n}",
                kernel.n()
            )));
        }
        if !(0.0..(n as f64 - 1.0)).contains(&alpha) {
            return Err(Error::Domain(format!(
                "smoothing degree alpha must lie in [0, n-1) = [0, {}), got {alpha}",
                n as f64 - 1.0
            )));
        }
        let tabulated = tabulate(&kernel, alpha, &grid);
        Ok(RoughOperator { kernel, alpha, grid, tabulated })
    }

    pub fn kernel(&self) -> &SphereKernel {
        &self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Kernel samples by displacement index; zero at the origin cell and
    /// outside radius `L/2`.
    pub fn tabulated(&self) -> &[f64] {
        &self.tabulated
    }

    /// Tabulated kernel as a physical field (for snapshot dumps).
    pub fn tabulated_field(&self) -> Field {
        Field::from_values(self.grid, self.tabulated.clone()).expect("tabulation matches grid")
    }

    /// Apply the operator. Both methods compute the identical circular
    /// sum `h^n sum_y K(y) phi(x - y)`.
    pub fn apply(&self, field: &Field, method: ApplyMethod) -> Result<Field> {
        self.convolve(field, &self.tabulated, method)
    }

    /// Convolution restricted to `|y| >= t` (one spacing `t` reproduces
    /// the full operator: the origin cell is already excluded).
    pub fn apply_truncated(&self, field: &Field, t: f64) -> Result<Field> {
        let h = self.grid.spacing();
        let half = self.grid.box_length() / 2.0;
        if !(h <= t && t <= half) {
            return Err(Error::Domain(format!(
                "truncation radius {t} outside [spacing, box/2] = [{h}, {half}]"
            )));
        }
        let masked = self.masked_kernel(t);
        self.convolve(field, &masked, ApplyMethod::Fft)
    }

    fn masked_kernel(&self, t: f64) -> Vec<f64> {
        let mut masked = self.tabulated.clone();
        for (idx, v) in masked.iter_mut().enumerate() {
            if *v != 0.0 {
                let y = self.grid.displacement(idx);
                let r2: f64 = y[..self.grid.n()].iter().map(|c| c * c).sum();
                if r2.sqrt() < t {
                    *v = 0.0;
                }
            }
        }
        masked
    }

    /// Pointwise sup of `|T^{t,alpha}|` over the given truncation radii;
    /// dominates `|T^alpha|` whenever the smallest radius is one spacing.
    pub fn maximal_truncation(&self, field: &Field, radii: &[f64]) -> Result<Field> {
        if radii.is_empty() {
            return Err(Error::Domain("maximal truncation needs at least one radius".into()));
        }
        let mut out = vec![0.0f64; self.grid.len()];
        // Fixed radius order keeps the reduction bit-stable.
        for &t in radii {
            let truncated = self.apply_truncated(field, t)?;
            for (slot, &v) in out.iter_mut().zip(truncated.values()?) {
                *slot = slot.max(v.abs());
            }
        }
        Field::from_values(self.grid, out)
    }

    fn convolve(&self, field: &Field, kernel: &[f64], method: ApplyMethod) -> Result<Field> {
        if field.repr() != Repr::Physical {
            return Err(Error::Config("rough operators act on physical fields".into()));
        }
        if field.grid() != &self.grid {
            return Err(Error::Config("field grid does not match operator grid".into()));
        }
        match method {
            ApplyMethod::Direct => {
                if self.grid.points_per_axis() > DIRECT_COST_GUARD {
                    return Err(Error::CostGuard(format!(
                        "direct summation refused beyond {DIRECT_COST_GUARD} points per axis (got {}); use the fft method",
                        self.grid.points_per_axis()
                    )));
                }
                Ok(direct_convolution(&self.grid, kernel, field.values()?))
            }
            ApplyMethod::Fft => fft_convolution(&self.grid, kernel, field.values()?),
        }
    }
}

fn tabulate(kernel: &SphereKernel, alpha: f64, grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    let half = grid.box_length() / 2.0;
    let mut tab = vec![0.0; grid.len()];
    for (idx, slot) in tab.iter_mut().enumerate() {
        let y = grid.displacement(idx);
        let r2: f64 = y[..n].iter().map(|c| c * c).sum();
        if r2 == 0.0 {
            continue;
        }
        let r = r2.sqrt();
        if r >= half {
            continue;
        }
        let mut sigma = [0.0; 3];
        for a in 0..n {
            sigma[a] = y[a] / r;
        }
        let v = kernel.eval(&sigma[..n]) / r.powf(n as f64 - alpha);
        // Singular angular samples land exactly on a lattice direction for
        // measure zero of kernels; treat them like the origin cell.
        if v.is_finite() {
            *slot = v;
        }
    }
    tab
}

fn direct_convolution(grid: &Grid, kernel: &[f64], values: &[f64]) -> Field {
    let points = grid.points_per_axis();
    let vol = grid.cell_volume();
    let mut out = vec![0.0f64; grid.len()];
    let wrap = |i: usize, j: usize| -> usize {
        let d = i + points - j;
        if d >= points {
            d - points
        } else {
            d
        }
    };
    if grid.n() == 2 {
        for i0 in 0..points {
            for i1 in 0..points {
                let mut acc = 0.0;
                for j0 in 0..points {
                    let s0 = wrap(i0, j0) * points;
                    let k0 = j0 * points;
                    for j1 in 0..points {
                        let k = kernel[k0 + j1];
                        if k != 0.0 {
                            acc += k * values[s0 + wrap(i1, j1)];
                        }
                    }
                }
                out[i0 * points + i1] = acc * vol;
            }
        }
    } else {
        for i0 in 0..points {
            for i1 in 0..points {
                for i2 in 0..points {
                    let mut acc = 0.0;
                    for j0 in 0..points {
                        let s0 = wrap(i0, j0) * points;
                        let k0 = j0 * points;
                        for j1 in 0..points {
                            let s1 = (s0 + wrap(i1, j1)) * points;
                            let k1 = (k0 + j1) * points;
                            for j2 in 0..points {
                                let k = kernel[k1 + j2];
                                if k != 0.0 {
                                    acc += k * values[s1 + wrap(i2, j2)];
                                }
                            }
                        }
                    }
                    out[(i0 * points + i1) * points + i2] = acc * vol;
                }
            }
        }
    }
    Field::from_values(*grid, out).expect("size preserved")
}

fn fft_convolution(grid: &Grid, kernel: &[f64], values: &[f64]) -> Result<Field> {
    let mut k: Vec<Complex64> = kernel.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft::dft_nd(grid, &mut k, true);
    fft::dft_nd(grid, &mut v, true);
    for (a, b) in v.iter_mut().zip(&k) {
        *a *= b;
    }
    fft::dft_nd(grid, &mut v, false);
    let scale = grid.cell_volume() / grid.len() as f64;
    let out = v.iter().map(|c| c.re * scale).collect();
    Field::from_values(*grid, out)
}

/// Dyadic radii `h, 2h, 4h, ...` up to the half box.
pub fn dyadic_radii(grid: &Grid) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = grid.spacing();
    while r <= grid.box_length() / 2.0 {
        radii.push(r);
        r *= 2.0;
    }
    radii
}

/// Hardy-Littlewood maximal function: the pointwise max of `|phi|` and its
/// cell-averages over balls of the given radii (the `|phi|` floor is the
/// ball shrunk to the cell itself).
pub fn hardy_littlewood(field: &Field, radii: &[f64]) -> Result<Field> {
    let grid = *field.grid();
    let n = grid.n();
    let abs: Vec<f64> = field.values()?.iter().map(|v| v.abs()).collect();
    let mut out = abs.clone();
    for &r in radii {
        let mut indicator = vec![0.0f64; grid.len()];
        let mut count = 0usize;
        for (idx, slot) in indicator.iter_mut().enumerate() {
            let y = grid.displacement(idx);
            let d2: f64 = y[..n].iter().map(|c| c * c).sum();
            if d2.sqrt() <= r {
                *slot = 1.0;
                count += 1;
            }
        }
        let abs_field = Field::from_values(grid, abs.clone())?;
        let summed = fft_convolution(&grid, &indicator, abs_field.values()?)?;
        let scale = 1.0 / (count as f64 * grid.cell_volume());
        for (slot, &s) in out.iter_mut().zip(summed.values()?) {
            *slot = slot.max(s * scale);
        }
    }
    Field::from_values(grid, out)
}

/// Riesz transform `R_j`; non-mean-zero input is projected with a logged
/// warning.
pub fn riesz(field: &Field, axis: usize) -> Result<Field> {
    if axis >= field.grid().n() {
        return Err(Error::Config(format!("riesz component {axis} out of range")));
    }
    let input = if field.is_mean_zero() {
        field.clone()
    } else {
        log::warn!("riesz transform input is not mean-zero; projecting");
        field.project_mean_zero()
    };
    apply_multiplier(&input, &Multiplier::riesz(axis))
}

/// Heat semigroup at time `t > 0`.
pub fn heat_convolve(field: &Field, t: f64) -> Result<Field> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("heat time must be positive, got {t}")));
    }
    apply_multiplier(field, &Multiplier::heat(t))
}

/// Pointwise gradient magnitude `|grad phi|` via spectral derivatives.
pub fn gradient_magnitude(field: &Field) -> Result<Field> {
    let grid = *field.grid();
    let mut sq = vec![0.0f64; grid.len()];
    for axis in 0..grid.n() {
        let d = apply_multiplier(field, &Multiplier::derivative(axis))?.to_physical();
        for (slot, &v) in sq.iter_mut().zip(d.values()?) {
            *slot += v * v;
        }
    }
    Field::from_values(grid, sq.iter().map(|v| v.sqrt()).collect())
}

/// Row of the heat-kernel gradient decay table.
#[derive(Debug, Clone, Copy)]
pub struct HeatDecayRow {
    pub t: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct HeatDecayTable {
    pub r: f64,
    pub rows: Vec<HeatDecayRow>,
    /// Least-squares slope of `log norm` against `log t`.
    pub slope: f64,
}

/// `||grad g_t||_{L^r}` on the grid for each requested time, plus the
/// fitted log-log slope. Times must resolve the kernel: its standard
/// deviation `sqrt(2t)` may not drop below two spacings.
pub fn heat_gradient_norm_table(grid: &Grid, r: f64, times: &[f64]) -> Result<HeatDecayTable> {
    let h = grid.spacing();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        if (2.0 * t).sqrt() < 2.0 * h {
            return Err(Error::Resolution(format!(
                "heat kernel under-resolved at t = {t}: std dev {} below two spacings {}",
                (2.0 * t).sqrt(),
                2.0 * h
            )));
        }
        // Spectral delta: unit coefficients across all modes.
        let delta = Field::from_spectrum(*grid, vec![Complex64::new(1.0, 0.0); grid.len()])?;
        let heated = heat_convolve(&delta, t)?;
        let gmag = gradient_magnitude(&heated)?;
        rows.push(HeatDecayRow { t, norm: gmag.lebesgue_norm(r)? });
    }
    let slope = fit_loglog_slope(&rows);
    Ok(HeatDecayTable { r, rows, slope })
}

fn fit_loglog_slope(rows: &[HeatDecayRow]) -> f64 {
    let m = rows.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for row in rows {
        let x = row.t.ln();
        let y = row.norm.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// The three drift nonlinearities. Products are pointwise on the physical
/// grid, derivatives spectral.
pub fn drift_term(
    variant: crate::budget::Variant,
    theta: &Field,
    ops: &[RoughOperator],
) -> Result<Field> {
    use crate::budget::Variant;
    let grid = *theta.grid();
    let n = grid.n();
    if ops.len() != n {
        return Err(Error::Config(format!(
            "drift needs one operator per component: expected {n}, got {}",
            ops.len()
        )));
    }
    for op in ops {
        if op.grid() != &grid {
            return Err(Error::Config("operator grid does not match field grid".into()));
        }
        let needs_alpha = variant == Variant::Alpha;
        if needs_alpha != (op.alpha() > 0.0) {
            return Err(Error::Config(format!(
                "operator smoothing degree {} inconsistent with {variant} drift",
                op.alpha()
            )));
        }
    }

    match variant {
        Variant::Advective | Variant::Alpha => {
            // sum_k T_k(theta) d_k theta
            let mut out = Field::zeros(grid);
            for (axis, op) in ops.iter().enumerate() {
                let t_theta = op.apply(theta, ApplyMethod::Fft)?;
                let d_theta =
                    apply_multiplier(theta, &Multiplier::derivative(axis))?.to_physical();
                out = out.add(&t_theta.mul(&d_theta)?)?;
            }
            Ok(out)
        }
        Variant::Divergence => {
            // sum_k d_k ( T_k(Lambda^{-1} theta) theta )
            let theta = if theta.is_mean_zero() {
                theta.clone()
            } else {
                log::warn!("divergence drift input is not mean-zero; projecting");
                theta.project_mean_zero()
            };
            let smoothed =
                apply_multiplier(&theta, &Multiplier::laplacian_power(-0.5))?.to_physical();
            let mut out = Field::zeros(grid).to_spectral();
            for (axis, op) in ops.iter().enumerate() {
                let flux = op.apply(&smoothed, ApplyMethod::Fft)?.mul(&theta)?;
                let d_flux = apply_multiplier(&flux.to_spectral(), &Multiplier::derivative(axis))?;
                out = out.add(&d_flux)?;
            }
            Ok(out.to_physical())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Variant;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::from_values(grid, values).unwrap()
    }

    fn sign_kernel_op(grid: Grid, alpha: f64) -> RoughOperator {
        let k = SphereKernel::odd_sign(grid.n(), 0).unwrap();
        RoughOperator::new(k, alpha, grid).unwrap()
    }

    #[test]
    fn direct_and_fft_agree() {
        let g2 = Grid::new(2, 16, 4.0).unwrap();
        let g3 = Grid::new(3, 8, 4.0).unwrap();
        for (grid, seed) in [(g2, 1u64), (g3, 2)] {
            let op = sign_kernel_op(grid, 0.0);
            let f = random_field(grid, seed);
            let a = op.apply(&f, ApplyMethod::Direct).unwrap();
            let b = op.apply(&f, ApplyMethod::Fft).unwrap();
            let scale = a.max_abs().max(1e-300);
            let diff = a.sub(&b).unwrap().max_abs();
            assert!(diff <= 1e-12 * scale, "direct/fft mismatch {diff}");
        }
    }

    #[test]
    fn cost_guard_refuses_large_direct_grids() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let op = sign_kernel_op(g, 0.0);
        let f = Field::zeros(g);
        assert!(matches!(
            op.apply(&f, ApplyMethod::Direct),
            Err(Error::CostGuard(_))
        ));
        assert!(op.apply(&f, ApplyMethod::Fft).is_ok());
    }

    #[test]
    fn alpha_range_is_enforced() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let k = SphereKernel::odd_sign(2, 0).unwrap();
        assert!(RoughOperator::new(k.clone(), 1.0, g).is_err());
        assert!(RoughOperator::new(k.clone(), -0.1, g).is_err());
        assert!(RoughOperator::new(k, 0.5, g).is_ok());
    }

    #[test]
    fn odd_kernel_annihilates_constants_exactly() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let op = sign_kernel_op(g, 0.0);
        let f = Field::from_fn(g, |_| 3.0);
        let out = op.apply(&f, ApplyMethod::Fft).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn mean_zero_kernel_annihilates_constants_to_quadrature_tolerance() {
        // Low even harmonics cancel exactly under the lattice symmetry
        // group, so constants are annihilated far below the 1e-6 budget.
        let g = Grid::new(2, 64, 4.0).unwrap();
        let k = SphereKernel::harmonic(2, 0.5, vec![0.0, 0.0, 0.5])
            .unwrap()
            .project_mean_zero()
            .unwrap();
        let op = RoughOperator::new(k, 0.0, g).unwrap();
        let c = 2.0;
        let f = Field::from_fn(g, |_| c);
        let out = op.apply(&f, ApplyMethod::Fft).unwrap();
        let mass: f64 =
            op.tabulated().iter().map(|v| v.abs()).sum::<f64>() * g.cell_volume();
        assert!(
            out.max_abs() <= 1e-6 * c * mass,
            "constant leakage {} vs mass {mass}",
            out.max_abs()
        );
    }

    #[test]
    fn annulus_cancellation_improves_under_refinement() {
        // For a fixed physical annulus the kernel sum is a direction
        // quadrature of the mean-zero angular part, so it shrinks as grid
        // refinement adds directions. cos(4 theta) is the lowest harmonic
        // the lattice symmetry group does not cancel exactly.
        let kernel = SphereKernel::harmonic(2, 0.0, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap()
            .project_mean_zero()
            .unwrap();
        let l = 4.0;
        let (r_lo, r_hi) = (l / 8.0, l / 4.0);
        let mut sums = Vec::new();
        for points in [32usize, 64, 128] {
            let g = Grid::new(2, points, l).unwrap();
            let op = RoughOperator::new(kernel.clone(), 0.0, g).unwrap();
            let mut annulus = 0.0;
            for (idx, &v) in op.tabulated().iter().enumerate() {
                let y = g.displacement(idx);
                let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
                if r >= r_lo && r < r_hi {
                    annulus += v * g.cell_volume();
                }
            }
            sums.push(annulus.abs());
        }
        assert!(sums[2] < sums[1] && sums[1] < sums[0], "{sums:?}");
    }

    #[test]
    fn odd_kernel_output_is_odd_on_even_data() {
        let g = Grid::new(2, 32, 16.0).unwrap();
        let op = sign_kernel_op(g, 0.0);
        let f = Field::gaussian(g, 1.0, &[0.0, 0.0], &[1.0]);
        let out = op.apply(&f, ApplyMethod::Fft).unwrap();
        let v = out.values().unwrap();
        let points = g.points_per_axis();
        let scale = out.max_abs();
        for i0 in 0..points {
            for i1 in 0..points {
                let j0 = (points - i0) % points;
                let j1 = (points - i1) % points;
                let residual = v[i0 * points + i1] + v[j0 * points + j1];
                assert!(residual.abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn truncation_beyond_half_box_is_empty() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let op = sign_kernel_op(g, 0.0);
        let f = random_field(g, 3);
        let out = op.apply_truncated(&f, g.box_length() / 2.0).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn truncation_at_one_spacing_is_full_operator() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let op = sign_kernel_op(g, 0.5);
        let f = random_field(g, 4);
        let full = op.apply(&f, ApplyMethod::Fft).unwrap();
        let trunc = op.apply_truncated(&f, g.spacing()).unwrap();
        let diff = full.sub(&trunc).unwrap().max_abs();
        assert!(diff <= 1e-12 * full.max_abs());
    }

    #[test]
    fn truncation_difference_is_annulus_sum() {
        let g = Grid::new(2, 12, 6.0).unwrap();
        let op = sign_kernel_op(g, 0.0);
        let f = random_field(g, 5);
        let (t1, t2) = (g.spacing(), 2.5 * g.spacing());
        let a = op.apply_truncated(&f, t1).unwrap();
        let b = op.apply_truncated(&f, t2).unwrap();
        // Oracle: direct sum over the annulus t1 <= |y| < t2.
        let values = f.values().unwrap();
        let points = g.points_per_axis();
        let vol = g.cell_volume();
        for idx in 0..g.len() {
            let (i0, i1) = (idx / points, idx % points);
            let mut annulus = 0.0;
            for jdx in 0..g.len() {
                let y = g.displacement(jdx);
                let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
                if r >= t1 && r < t2 {
                    let (j0, j1) = (jdx / points, jdx % points);
                    let s0 = (i0 + points - j0) % points;
                    let s1 = (i1 + points - j1) % points;
                    annulus += op.tabulated()[jdx] * values[s0 * points + s1] * vol;
                }
            }
            let diff = a.values().unwrap()[idx] - b.values().unwrap()[idx];
            assert!((diff - annulus).abs() <= 1e-12 * a.max_abs().max(1.0));
        }
    }

    #[test]
    fn maximal_truncation_dominates_and_grows_with_radii() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let op = sign_kernel_op(g, 0.5);
        let f = Field::gaussian(g, 1.0, &[0.2, -0.3], &[0.8]);
        let radii = dyadic_radii(&g);
        assert!(radii[0] == g.spacing());

        let single = op.maximal_truncation(&f, &radii[..1]).unwrap();
        let full = op.apply(&f, ApplyMethod::Fft).unwrap();
        for (s, v) in single.values().unwrap().iter().zip(full.values().unwrap()) {
            assert!((s - v.abs()).abs() <= 1e-12 * full.max_abs());
        }

        let some = op.maximal_truncation(&f, &radii[..2]).unwrap();
        let all = op.maximal_truncation(&f, &radii).unwrap();
        for (idx, (a, b)) in some.values().unwrap().iter().zip(all.values().unwrap()).enumerate()
        {
            assert!(b + 1e-15 >= *a, "sup shrank at {idx}");
        }
        for (m, v) in all.values().unwrap().iter().zip(full.values().unwrap()) {
            assert!(*m + 1e-12 * full.max_abs() >= v.abs());
        }

        assert!(op.maximal_truncation(&f, &[]).is_err());
    }

    #[test]
    fn hardy_littlewood_on_constants_and_domination() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let c = Field::from_fn(g, |_| -2.5);
        let radii = dyadic_radii(&g);
        let m = hardy_littlewood(&c, &radii).unwrap();
        for v in m.values().unwrap() {
            assert_relative_eq!(*v, 2.5, max_relative = 1e-12);
        }
        let f = random_field(g, 6);
        let mf = hardy_littlewood(&f, &radii).unwrap();
        for (m, v) in mf.values().unwrap().iter().zip(f.values().unwrap()) {
            assert!(*m >= v.abs() - 1e-13);
        }
    }

    #[test]
    fn hardy_littlewood_point_mass_matches_brute_force() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let mut values = vec![0.0; g.len()];
        values[0] = 1.0;
        let f = Field::from_values(g, values.clone()).unwrap();
        let radii = dyadic_radii(&g);
        let m = hardy_littlewood(&f, &radii).unwrap();
        // Brute force: for each x, max over balls of the windowed average.
        let points = g.points_per_axis();
        for idx in 0..g.len() {
            let (i0, i1) = (idx / points, idx % points);
            let mut expect = values[idx];
            for &r in &radii {
                let mut sum = 0.0;
                let mut count = 0usize;
                for jdx in 0..g.len() {
                    let y = g.displacement(jdx);
                    if (y[0] * y[0] + y[1] * y[1]).sqrt() <= r {
                        let (j0, j1) = (jdx / points, jdx % points);
                        let s0 = (i0 + points - j0) % points;
                        let s1 = (i1 + points - j1) % points;
                        sum += values[s0 * points + s1];
                        count += 1;
                    }
                }
                expect = expect.max(sum / count as f64);
            }
            assert_relative_eq!(m.values().unwrap()[idx], expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn riesz_of_plane_wave() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let l = g.box_length();
        let f = Field::from_fn(g, |x| (TAU * x[0] / l).cos());
        let r = riesz(&f, 0).unwrap();
        for idx in 0..g.len() {
            let x = g.coord(idx);
            let expect = (TAU * x[0] / l).sin();
            assert!((r.values().unwrap()[idx] - expect).abs() < 1e-12);
        }
    }

    /// Random field with the unpaired Nyquist lines removed; odd spectral
    /// multipliers zero those, so exact identities live below them.
    fn random_resolved_field(grid: Grid, seed: u64) -> Field {
        let spec = random_field(grid, seed).to_spectral();
        let mut coeffs = spec.spectrum().unwrap().to_vec();
        let half = grid.points_per_axis() as i64 / 2;
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = grid.wavevector(idx);
            if k[..grid.n()].iter().any(|&ka| ka == -half) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Field::from_spectrum(grid, coeffs).unwrap().to_physical()
    }

    #[test]
    fn riesz_algebra_and_isometry() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let f = random_resolved_field(g, 7).project_mean_zero();
        // sum_j R_j^2 = -identity on mean-zero fields.
        let mut acc = Field::zeros(g);
        for j in 0..2 {
            let rr = riesz(&riesz(&f, j).unwrap(), j).unwrap();
            acc = acc.add(&rr).unwrap();
        }
        let resid = acc.add(&f).unwrap().max_abs();
        assert!(resid <= 1e-10 * f.max_abs());
        let iso = riesz(&f, 0).unwrap().lebesgue_norm(2.0).unwrap();
        // A single R_j is a contraction; the vector (R_1, R_2) is the
        // isometry. Check the vector form.
        let r1 = riesz(&f, 1).unwrap();
        let vec_norm = (iso * iso
            + r1.lebesgue_norm(2.0).unwrap() * r1.lebesgue_norm(2.0).unwrap())
        .sqrt();
        assert_relative_eq!(
            vec_norm,
            f.lebesgue_norm(2.0).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn heat_gradient_decay_slope_2d() {
        let g = Grid::new(2, 160, 16.0).unwrap();
        let lo = (g.box_length() / 10.0).powi(2) / 100.0;
        let times: Vec<f64> = (0..12)
            .map(|i| lo * (100.0f64).powf(i as f64 / 11.0))
            .collect();
        let table = heat_gradient_norm_table(&g, 2.0, &times).unwrap();
        // Expected slope -(1 + n(1 - 1/r))/2 = -1 for n = 2, r = 2.
        assert!((table.slope + 1.0).abs() <= 0.02, "slope {}", table.slope);
    }

    #[test]
    fn heat_table_rejects_unresolved_times() {
        let g = Grid::new(2, 16, 16.0).unwrap();
        let err = heat_gradient_norm_table(&g, 2.0, &[1e-6]).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn drift_vanishes_on_zero_field() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let ops: Vec<_> = (0..2).map(|a| {
            RoughOperator::new(SphereKernel::odd_sign(2, a).unwrap(), 0.0, g).unwrap()
        }).collect();
        let zero = Field::zeros(g);
        for variant in [Variant::Advective, Variant::Divergence] {
            let out = drift_term(variant, &zero, &ops).unwrap();
            assert_eq!(out.max_abs(), 0.0);
        }
    }

    #[test]
    fn drift_is_quadratically_homogeneous() {
        let g = Grid::new(2, 32, 16.0).unwrap();
        let f = Field::gaussian(g, 0.8, &[0.3, 0.0], &[1.1]).project_mean_zero();
        let lambda = 1.7;
        for (variant, alpha) in [(Variant::Advective, 0.0), (Variant::Alpha, 0.5)] {
            let ops: Vec<_> = (0..2).map(|a| {
                RoughOperator::new(SphereKernel::odd_sign(2, a).unwrap(), alpha, g).unwrap()
            }).collect();
            let one = drift_term(variant, &f, &ops).unwrap();
            let two = drift_term(variant, &f.scaled(lambda), &ops).unwrap();
            let expect = one.scaled(lambda * lambda);
            let diff = two.sub(&expect).unwrap().max_abs();
            assert!(diff <= 1e-10 * expect.max_abs(), "{variant}: {diff}");
        }
    }

    #[test]
    fn divergence_drift_integrates_to_zero() {
        let g = Grid::new(2, 32, 16.0).unwrap();
        let f = Field::gaussian(g, 1.0, &[0.5, -0.5], &[1.0]).project_mean_zero();
        let ops: Vec<_> = (0..2).map(|a| {
            RoughOperator::new(SphereKernel::odd_sign(2, a).unwrap(), 0.0, g).unwrap()
        }).collect();
        let out = drift_term(Variant::Divergence, &f, &ops).unwrap();
        let integral = out.mean() * g.volume();
        assert!(integral.abs() <= 1e-10 * out.max_abs().max(1e-300) * g.volume());
    }

    #[test]
    fn drift_component_count_is_checked() {
        let g = Grid::new(3, 8, 8.0).unwrap();
        let ops: Vec<_> = (0..2).map(|a| {
            RoughOperator::new(SphereKernel::odd_sign(3, a).unwrap(), 0.0, g).unwrap()
        }).collect();
        let f = Field::zeros(g);
        assert!(matches!(
            drift_term(Variant::Advective, &f, &ops),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn alpha_degree_homogeneity_on_companion_grids() {
        // T^alpha(phi(2.))(x) = 2^{-alpha} T^alpha(phi)(2x) realized on the
        // companion grid.
        let g = Grid::new(2, 32, 24.0).unwrap();
        let alpha = 0.5;
        let kernel = SphereKernel::odd_sign(2, 0).unwrap();
        let op = RoughOperator::new(kernel.clone(), alpha, g).unwrap();
        let phi = Field::gaussian(g, 1.0, &[0.0, 0.0], &[1.0]);
        let t_phi = op.apply(&phi, ApplyMethod::Fft).unwrap();

        let dilated = phi.resample_dilate(2.0, 0.0).unwrap();
        let cg = *dilated.grid();
        let op_c = RoughOperator::new(kernel, alpha, cg).unwrap();
        let t_dilated = op_c.apply(&dilated, ApplyMethod::Fft).unwrap();

        let scale = t_phi.max_abs();
        for idx in 0..cg.len() {
            let expect = 2.0f64.powf(-alpha) * t_phi.values().unwrap()[idx];
            let got = t_dilated.values().unwrap()[idx];
            assert!(
                (got - expect).abs() <= 0.01 * scale,
                "degree homogeneity violated: {got} vs {expect}"
            );
        }
    }
}
