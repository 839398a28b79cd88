//! Reproducible corpora of test functions for the inequality harness:
//! Gaussians of varied width and center, smooth compact bumps, windowed
//! band-limited noise, and anisotropic stretches. Every member is
//! compactly supported within `L/4` of the box center and regenerates
//! bit-identically from the seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::Field;
use crate::grid::Grid;

#[derive(Debug, Clone)]
pub struct FunctionCorpus {
    pub grid: Grid,
    pub seed: u64,
    members: Vec<Field>,
    labels: Vec<String>,
}

impl FunctionCorpus {
    /// `per_family` members of each of the four families.
    pub fn generate(grid: Grid, per_family: usize, seed: u64) -> Result<FunctionCorpus> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut members = Vec::with_capacity(4 * per_family);
        let mut labels = Vec::with_capacity(4 * per_family);
        let l = grid.box_length();
        let n = grid.n();

        for i in 0..per_family {
            let amp = rng.random_range(0.5..2.0);
            let width = rng.random_range(l / 64.0..l / 25.0);
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-l / 40.0..l / 40.0)).collect();
            members.push(Field::gaussian(grid, amp, &center, &[width]));
            labels.push(format!("gaussian-{i}"));
        }

        for i in 0..per_family {
            let amp = rng.random_range(0.5..2.0);
            let radius = rng.random_range(l / 16.0..l / 5.0);
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-l / 40.0..l / 40.0)).collect();
            members.push(bump(grid, amp, &center, radius));
            labels.push(format!("bump-{i}"));
        }

        for i in 0..per_family {
            let kmax = (grid.points_per_axis() / 6).max(2) as i64;
            let field = band_limited(grid, &mut rng, kmax)?;
            let window = bump(grid, 1.0, &vec![0.0; n], l / 5.0);
            members.push(field.mul(&window)?);
            labels.push(format!("band-limited-{i}"));
        }

        for i in 0..per_family {
            let amp = rng.random_range(0.5..2.0);
            let widths: Vec<f64> =
                (0..n).map(|_| rng.random_range(l / 64.0..l / 25.0)).collect();
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-l / 40.0..l / 40.0)).collect();
            members.push(Field::gaussian(grid, amp, &center, &widths));
            labels.push(format!("anisotropic-{i}"));
        }

        Ok(FunctionCorpus { grid, seed, members, labels })
    }

    pub fn members(&self) -> &[Field] {
        &self.members
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Deterministic fit/holdout split: even indices fit the constant,
    /// odd indices hold it out.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let fit = (0..self.len()).step_by(2).collect();
        let holdout = (1..self.len()).step_by(2).collect();
        (fit, holdout)
    }
}

/// Smooth compactly supported bump `amp * e * exp(-1/(1 - (d/R)^2))` for
/// `d < R`, zero outside.
pub fn bump(grid: Grid, amp: f64, center: &[f64], radius: f64) -> Field {
    let n = grid.n();
    let c: Vec<f64> = (0..n).map(|a| center.get(a).copied().unwrap_or(0.0)).collect();
    Field::from_fn(grid, move |x| {
        let d2: f64 = (0..n).map(|a| (x[a] - c[a]) * (x[a] - c[a])).sum();
        let u = d2 / (radius * radius);
        if u >= 1.0 {
            0.0
        } else {
            amp * (1.0 - 1.0 / (1.0 - u)).exp()
        }
    })
}

/// Real field with random spectrum supported on `|k|_inf <= kmax`.
fn band_limited(grid: Grid, rng: &mut ChaCha8Rng, kmax: i64) -> Result<Field> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    // Random physical field keeps conjugate symmetry for free.
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut spec = Field::from_values(grid, noise)?.to_spectral();
    {
        let s = spec.spectrum()?;
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = grid.wavevector(idx);
            if k[..grid.n()].iter().all(|ka| ka.abs() <= kmax) {
                *c = s[idx];
            }
        }
    }
    spec = Field::from_spectrum(grid, coeffs)?;
    let phys = spec.to_physical();
    // Normalize to unit amplitude so families are comparable.
    let scale = phys.max_abs();
    Ok(if scale > 0.0 { phys.scaled(1.0 / scale) } else { phys })
}
