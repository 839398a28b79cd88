//! Scalar fields on the periodic box, in physical or spectral form.
//!
//! The spectral coefficients approximate the continuum Fourier integral:
//! `F(xi_k) = sum_j f(x_j) exp(-i xi_k . x_j) h^n` with `x_j` the centered
//! cell coordinates. With this normalization a constant `c` has zero mode
//! `c L^n`, the plane wave `cos(2 pi x_1 / L)` has exactly two modes of
//! value `L^n / 2`, and Parseval reads
//! `sum |f|^2 h^n = L^{-n} sum |F|^2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

/// Tolerance against the field's max amplitude below which a zero mode is
/// treated as exactly zero (mean-free).
pub const MEAN_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone)]
enum Data {
    Phys(Vec<f64>),
    Spec(Vec<Complex64>),
}

/// A scalar field sampled on a [`Grid`].
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    data: Data,
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field { grid, data: Data::Phys(vec![0.0; grid.len()]) }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, data: Data::Phys(values) })
    }

    pub fn from_spectrum(grid: Grid, coeffs: Vec<Complex64>) -> Result<Field> {
        if coeffs.len() != grid.len() {
            return Err(Error::Config(format!(
                "coefficient count {} does not match grid size {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, data: Data::Spec(coeffs) })
    }

    /// Sample a function of the physical coordinate.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Field {
        let values = (0..grid.len())
            .map(|idx| {
                let x = grid.coord(idx);
                f(&x[..grid.n()])
            })
            .collect();
        Field { grid, data: Data::Phys(values) }
    }

    /// Isotropic or anisotropic Gaussian `amp * exp(-sum (x-c)_j^2 / w_j^2)`.
    pub fn gaussian(grid: Grid, amp: f64, center: &[f64], widths: &[f64]) -> Field {
        let n = grid.n();
        let c: Vec<f64> = (0..n).map(|a| center.get(a).copied().unwrap_or(0.0)).collect();
        let w: Vec<f64> = (0..n)
            .map(|a| widths.get(a).copied().unwrap_or(widths[0]))
            .collect();
        Field::from_fn(grid, move |x| {
            let mut e = 0.0;
            for a in 0..n {
                let d = (x[a] - c[a]) / w[a];
                e += d * d;
            }
            amp * (-e).exp()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        match self.data {
            Data::Phys(_) => Repr::Physical,
            Data::Spec(_) => Repr::Spectral,
        }
    }

    pub fn values(&self) -> Result<&[f64]> {
        match &self.data {
            Data::Phys(v) => Ok(v),
            Data::Spec(_) => Err(Error::Config("field is in spectral form".into())),
        }
    }

    pub fn spectrum(&self) -> Result<&[Complex64]> {
        match &self.data {
            Data::Spec(v) => Ok(v),
            Data::Phys(_) => Err(Error::Config("field is in physical form".into())),
        }
    }

    pub fn to_spectral(&self) -> Field {
        match &self.data {
            Data::Spec(_) => self.clone(),
            Data::Phys(v) => {
                let grid = self.grid;
                let mut buf: Vec<Complex64> =
                    v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                fft::dft_nd(&grid, &mut buf, true);
                let h_n = grid.cell_volume();
                for (idx, c) in buf.iter_mut().enumerate() {
                    *c *= h_n * center_phase(&grid, idx);
                }
                Field { grid, data: Data::Spec(buf) }
            }
        }
    }

    pub fn to_physical(&self) -> Field {
        match &self.data {
            Data::Phys(_) => self.clone(),
            Data::Spec(v) => {
                let grid = self.grid;
                let mut buf = v.clone();
                for (idx, c) in buf.iter_mut().enumerate() {
                    *c *= center_phase(&grid, idx);
                }
                fft::dft_nd(&grid, &mut buf, false);
                let inv_vol = 1.0 / grid.volume();
                let values = buf.iter().map(|c| c.re * inv_vol).collect();
                Field { grid, data: Data::Phys(values) }
            }
        }
    }

    /// Field mean `(1/L^n) int f`.
    pub fn mean(&self) -> f64 {
        match &self.data {
            Data::Phys(v) => v.iter().sum::<f64>() / v.len() as f64,
            Data::Spec(v) => v[0].re / self.grid.volume(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.data {
            Data::Phys(v) => v.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
            Data::Spec(v) => v.iter().fold(0.0f64, |m, c| m.max(c.norm())),
        }
    }

    /// Whether the zero mode is negligible against the field amplitude.
    pub fn is_mean_zero(&self) -> bool {
        let scale = self.max_abs();
        if scale == 0.0 {
            return true;
        }
        match &self.data {
            Data::Phys(v) => {
                (v.iter().sum::<f64>() / v.len() as f64).abs() * self.grid.volume()
                    <= MEAN_ZERO_TOL * scale * self.grid.volume()
            }
            Data::Spec(v) => v[0].norm() <= MEAN_ZERO_TOL * scale,
        }
    }

    /// Subtract the mean (annihilate the zero mode).
    pub fn project_mean_zero(&self) -> Field {
        match &self.data {
            Data::Phys(v) => {
                let m = self.mean();
                let values = v.iter().map(|&x| x - m).collect();
                Field { grid: self.grid, data: Data::Phys(values) }
            }
            Data::Spec(v) => {
                let mut coeffs = v.clone();
                coeffs[0] = Complex64::new(0.0, 0.0);
                Field { grid: self.grid, data: Data::Spec(coeffs) }
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        match &self.data {
            Data::Phys(v) => Field {
                grid: self.grid,
                data: Data::Phys(v.iter().map(|&x| c * x).collect()),
            },
            Data::Spec(v) => Field {
                grid: self.grid,
                data: Data::Spec(v.iter().map(|&x| c * x).collect()),
            },
        }
    }

    /// Pointwise sum; both fields must share grid and representation.
    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::Config("grid mismatch in field arithmetic".into()));
        }
        match (&self.data, &other.data) {
            (Data::Phys(a), Data::Phys(b)) => Ok(Field {
                grid: self.grid,
                data: Data::Phys(a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect()),
            }),
            (Data::Spec(a), Data::Spec(b)) => Ok(Field {
                grid: self.grid,
                data: Data::Spec(
                    a.iter()
                        .zip(b)
                        .map(|(&x, &y)| Complex64::new(op(x.re, y.re), op(x.im, y.im)))
                        .collect(),
                ),
            }),
            _ => Err(Error::Config("representation mismatch in field arithmetic".into())),
        }
    }

    /// Pointwise product of two physical fields.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::Config("grid mismatch in field product".into()));
        }
        let a = self.values()?;
        let b = other.values()?;
        Ok(Field {
            grid: self.grid,
            data: Data::Phys(a.iter().zip(b).map(|(&x, &y)| x * y).collect()),
        })
    }

    /// Riemann-sum Lebesgue norm `(sum |f|^p h^n)^{1/p}`; `f64::INFINITY`
    /// gives the max norm.
    pub fn lebesgue_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("Lebesgue exponent must be >= 1, got {p}")));
        }
        let v = self.values()?;
        if p.is_infinite() {
            return Ok(v.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
        }
        let h_n = self.grid.cell_volume();
        if p == 1.0 {
            return Ok(v.iter().map(|&x| x.abs()).sum::<f64>() * h_n);
        }
        if p == 2.0 {
            return Ok((v.iter().map(|&x| x * x).sum::<f64>() * h_n).sqrt());
        }
        let sum: f64 = v.iter().map(|&x| x.abs().powf(p)).sum();
        Ok((sum * h_n).powf(1.0 / p))
    }

    /// Spectral l2 norm with volume normalization, `(L^{-n} sum |F|^2)^{1/2}`.
    /// Equals the physical L2 norm by Parseval.
    pub fn spectral_l2(&self) -> Result<f64> {
        let s = self.spectrum()?;
        Ok((s.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.volume()).sqrt())
    }

    /// Largest l-infinity distance from the box center over cells carrying
    /// a non-negligible value.
    pub fn support_radius(&self) -> Result<f64> {
        let v = self.values()?;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let tol = 1e-12 * scale;
        let mut radius = 0.0f64;
        for (idx, &x) in v.iter().enumerate() {
            if x.abs() > tol {
                let c = self.grid.coord(idx);
                for a in 0..self.grid.n() {
                    radius = radius.max(c[a].abs());
                }
            }
        }
        Ok(radius)
    }

    /// Dilation `x -> lambda^{amplitude_power} f(lambda x)` realized on the
    /// companion grid with box `L / lambda`. Companion grid points are the
    /// original points divided by `lambda`, so no interpolation happens.
    /// Fails when the (scaled) support leaves the safe region of the
    /// companion box.
    pub fn resample_dilate(&self, lambda: f64, amplitude_power: f64) -> Result<Field> {
        let companion = self.grid.companion(lambda)?;
        let v = self.values()?;
        // Support rule is dilation-invariant under companion-box semantics:
        // it fails exactly when the input support already leaves L/4.
        let radius = self.support_radius()?;
        if radius / lambda > companion.box_length() / 4.0 {
            return Err(Error::Domain("dilation escapes the box".into()));
        }
        let amp = lambda.powf(amplitude_power);
        Ok(Field {
            grid: companion,
            data: Data::Phys(v.iter().map(|&x| amp * x).collect()),
        })
    }
}

/// Discrete Fourier pair with the stated source representation.
pub fn transform(field: &Field, direction: Direction) -> Result<Field> {
    match (direction, field.repr()) {
        (Direction::Forward, Repr::Physical) => Ok(field.to_spectral()),
        (Direction::Inverse, Repr::Spectral) => Ok(field.to_physical()),
        (Direction::Forward, Repr::Spectral) => {
            Err(Error::Config("forward transform expects a physical field".into()))
        }
        (Direction::Inverse, Repr::Physical) => {
            Err(Error::Config("inverse transform expects a spectral field".into()))
        }
    }
}

/// Phase `(-1)^{sum k_axis}` accounting for coordinates centered at -L/2.
#[inline]
fn center_phase(grid: &Grid, idx: usize) -> f64 {
    let m = grid.index_to_multi(idx);
    let mut s = 0usize;
    for axis in 0..grid.n() {
        s += m[axis];
    }
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid2(points: usize, l: f64) -> Grid {
        Grid::new(2, points, l).unwrap()
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let g = grid2(16, 4.0);
        let c = 2.5;
        let f = Field::from_fn(g, |_| c).to_spectral();
        let s = f.spectrum().unwrap();
        assert_relative_eq!(s[0].re, c * g.volume(), max_relative = 1e-12);
        assert!(s[0].im.abs() < 1e-12);
        for coeff in &s[1..] {
            assert!(coeff.norm() < 1e-10 * g.volume());
        }
    }

    #[test]
    fn plane_wave_has_two_modes() {
        let g = grid2(16, 4.0);
        let l = g.box_length();
        let f = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x[0] / l).cos());
        let s = f.to_spectral();
        let coeffs = s.spectrum().unwrap();
        let mut nonzero = 0;
        for (idx, c) in coeffs.iter().enumerate() {
            let k = g.wavevector(idx);
            if c.norm() > 1e-9 * g.volume() {
                nonzero += 1;
                assert_eq!(k[1], 0);
                assert!(k[0] == 1 || k[0] == -1);
                assert_relative_eq!(c.re, g.volume() / 2.0, max_relative = 1e-12);
                assert!(c.im.abs() < 1e-9);
            }
        }
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn forward_then_inverse_round_trips() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let f = Field::from_fn(g, |x| (x[0] * 1.3).sin() + 0.2 * (x[1] - x[2]).cos());
        let back = transform(&transform(&f, Direction::Forward).unwrap(), Direction::Inverse)
            .unwrap();
        let a = f.values().unwrap();
        let b = back.values().unwrap();
        let scale = f.max_abs();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn transform_direction_must_match_repr() {
        let g = grid2(8, 1.0);
        let f = Field::zeros(g);
        assert!(transform(&f, Direction::Inverse).is_err());
        let s = f.to_spectral();
        assert!(transform(&s, Direction::Forward).is_err());
    }

    #[test]
    fn parseval_holds() {
        let g = grid2(16, 3.0);
        let f = Field::from_fn(g, |x| (x[0] + 0.3).cos() * (2.0 * x[1]).sin() + 0.1);
        let phys = f.lebesgue_norm(2.0).unwrap();
        let spec = f.to_spectral().spectral_l2().unwrap();
        assert_relative_eq!(phys, spec, max_relative = 1e-12);
    }

    #[test]
    fn plateau_l1_norm_is_half_volume() {
        let g = grid2(16, 4.0);
        let f = Field::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 0.0 });
        let norm = f.lebesgue_norm(1.0).unwrap();
        assert!((norm - g.volume() / 2.0).abs() <= g.cell_volume());
    }

    #[test]
    fn lebesgue_norm_is_homogeneous() {
        let g = grid2(16, 4.0);
        let f = Field::from_fn(g, |x| x[0].sin() + x[1]);
        let c = -3.25;
        let a = f.scaled(c).lebesgue_norm(3.0).unwrap();
        let b = f.lebesgue_norm(3.0).unwrap() * c.abs();
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn gaussian_l2_norm_matches_closed_form() {
        // int exp(-2|x|^2) dx over R^2 = pi/2.
        let g = grid2(128, 20.0);
        let f = Field::gaussian(g, 1.0, &[0.0, 0.0], &[1.0]);
        let norm = f.lebesgue_norm(2.0).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert_relative_eq!(norm, exact, max_relative = 1e-6);
    }

    #[test]
    fn rejects_exponent_below_one() {
        let g = grid2(8, 1.0);
        let f = Field::zeros(g);
        assert!(f.lebesgue_norm(0.5).is_err());
        assert!(f.lebesgue_norm(f64::NAN).is_err());
    }

    #[test]
    fn max_norm() {
        let g = grid2(8, 1.0);
        let f = Field::from_fn(g, |x| x[0]);
        let m = f.lebesgue_norm(f64::INFINITY).unwrap();
        assert_relative_eq!(m, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn dilation_identity() {
        let g = grid2(32, 24.0);
        let f = Field::gaussian(g, 1.0, &[0.0, 0.0], &[1.0]);
        let d = f.resample_dilate(1.0, 1.0).unwrap();
        assert_eq!(d.grid(), f.grid());
        for (a, b) in f.values().unwrap().iter().zip(d.values().unwrap()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dilation_matches_closed_form_at_shared_points() {
        // lambda = 2, amplitude power 1 on exp(-|x|^2) gives 2 exp(-4|x|^2)
        // on the companion grid.
        let g = grid2(32, 24.0);
        let f = Field::gaussian(g, 1.0, &[0.0, 0.0], &[1.0]);
        let d = f.resample_dilate(2.0, 1.0).unwrap();
        let cg = d.grid();
        for idx in 0..cg.len() {
            let x = cg.coord(idx);
            let expect = 2.0 * (-4.0 * (x[0] * x[0] + x[1] * x[1])).exp();
            let got = d.values().unwrap()[idx];
            assert!((got - expect).abs() <= 1e-12 * 2.0);
        }
    }

    #[test]
    fn dilation_preserves_critical_lebesgue_norm() {
        // L^n is invariant under x -> lambda f(lambda x).
        let g = grid2(64, 48.0);
        let f = Field::gaussian(g, 0.7, &[0.5, -0.25], &[1.0, 1.4]);
        let d = f.resample_dilate(2.0, 1.0).unwrap();
        let n = g.n() as f64;
        let a = f.lebesgue_norm(n).unwrap();
        let b = d.lebesgue_norm(n).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn dilation_rejects_wide_support() {
        let g = grid2(32, 8.0);
        // Plateau over most of the box: support radius well beyond L/4.
        let f = Field::from_fn(g, |x| if x[0].abs() < 3.5 { 1.0 } else { 0.0 });
        assert!(matches!(
            f.resample_dilate(2.0, 1.0),
            Err(Error::Domain(msg)) if msg.contains("escapes")
        ));
    }

    #[test]
    fn mean_zero_projection() {
        let g = grid2(16, 2.0);
        let f = Field::from_fn(g, |x| x[0].cos() + 1.7);
        assert!(!f.is_mean_zero());
        let p = f.project_mean_zero();
        assert!(p.is_mean_zero());
        let s = p.to_spectral();
        assert!(s.spectrum().unwrap()[0].norm() <= 1e-12 * s.max_abs());
    }
}
