//! Periodic box discretization of `R^n`.
//!
//! The torus is `[-L/2, L/2)^n` sampled at `N` points per axis. Data that
//! is compactly supported well inside the box (support radius at most
//! `L/4`) behaves like data on the whole space at the tolerances used
//! throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Uniform periodic grid on `[-L/2, L/2)^n`, `n` in {2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    points: usize,
    box_length: f64,
}

impl Grid {
    /// `points` must be even and at least 8 so the Nyquist mode exists and
    /// symmetric annulus sums are balanced.
    pub fn new(n: usize, points: usize, box_length: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {n}")));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::Config(format!(
                "points per axis must be even and >= 8, got {points}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Config(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        Ok(Grid { n, points, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.n as i32)
    }

    /// Total number of cells, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major decomposition of a flat index.
    #[inline]
    pub fn index_to_multi(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0usize; MAX_DIM];
        for axis in (0..self.n).rev() {
            m[axis] = idx % self.points;
            idx /= self.points;
        }
        m
    }

    #[inline]
    pub fn multi_to_index(&self, m: &[usize; MAX_DIM]) -> usize {
        let mut idx = 0usize;
        for axis in 0..self.n {
            idx = idx * self.points + m[axis];
        }
        idx
    }

    /// Physical coordinate of a cell center, `x_i = -L/2 + i h`.
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; MAX_DIM] {
        let h = self.spacing();
        let m = self.index_to_multi(idx);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.n {
            x[axis] = -0.5 * self.box_length + m[axis] as f64 * h;
        }
        x
    }

    /// Signed displacement associated with a flat index under periodic
    /// wrapping: axis index `i` maps to `i h` for `i < N/2` and `(i - N) h`
    /// otherwise. This is the natural indexing of convolution kernels.
    #[inline]
    pub fn displacement(&self, idx: usize) -> [f64; MAX_DIM] {
        let h = self.spacing();
        let m = self.index_to_multi(idx);
        let half = self.points / 2;
        let mut y = [0.0; MAX_DIM];
        for axis in 0..self.n {
            let s = if m[axis] < half {
                m[axis] as i64
            } else {
                m[axis] as i64 - self.points as i64
            };
            y[axis] = s as f64 * h;
        }
        y
    }

    /// Integer wavevector `k` with components in `[-N/2, N/2)`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; MAX_DIM] {
        let m = self.index_to_multi(idx);
        let half = self.points / 2;
        let mut k = [0i64; MAX_DIM];
        for axis in 0..self.n {
            k[axis] = if m[axis] < half {
                m[axis] as i64
            } else {
                m[axis] as i64 - self.points as i64
            };
        }
        k
    }

    /// Angular frequency `xi = 2 pi k / L`.
    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; MAX_DIM] {
        let k = self.wavevector(idx);
        let base = 2.0 * std::f64::consts::PI / self.box_length;
        let mut xi = [0.0; MAX_DIM];
        for axis in 0..self.n {
            xi[axis] = base * k[axis] as f64;
        }
        xi
    }

    /// Companion grid for a dilation by `lambda` (a power of two): same
    /// point count on the box `L / lambda`, so grid points map onto grid
    /// points exactly.
    pub fn companion(&self, lambda: f64) -> Result<Grid> {
        if !is_power_of_two_f64(lambda) {
            return Err(Error::Domain(format!(
                "dilation factor must be a power of 2, got {lambda}"
            )));
        }
        Grid::new(self.n, self.points, self.box_length / lambda)
    }
}

/// Exact check that a float is `2^k` for integer `k` (positive or negative).
pub fn is_power_of_two_f64(x: f64) -> bool {
    if !(x.is_finite() && x > 0.0) {
        return false;
    }
    let log = x.log2();
    log.fract() == 0.0 && x == (2.0f64).powi(log as i32)
}
