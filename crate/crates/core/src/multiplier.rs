//! Fourier multipliers: the spectral realization of gradients, fractional
//! Laplacians, Riesz transforms and the heat semigroup.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Repr};
use crate::grid::MAX_DIM;

/// What happens to the zero frequency. Homogeneous negative-order symbols
/// are undefined on constants; they annihilate the zero mode and require
/// mean-zero input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroModePolicy {
    Annihilate,
    Identity,
}

/// Frequency data handed to a symbol: integer wavevector, angular frequency
/// and the points-per-axis count (to recognize Nyquist components).
#[derive(Debug, Clone, Copy)]
pub struct FreqPoint<'a> {
    pub k: &'a [i64],
    pub xi: &'a [f64],
    pub points: usize,
}

impl FreqPoint<'_> {
    pub fn xi_norm_sqr(&self) -> f64 {
        self.xi.iter().map(|x| x * x).sum()
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi_norm_sqr().sqrt()
    }

    /// True when component `axis` sits on the unpaired Nyquist line.
    pub fn is_nyquist(&self, axis: usize) -> bool {
        2 * (-self.k[axis]) == self.points as i64
    }
}

type Symbol = Arc<dyn Fn(FreqPoint<'_>) -> Complex64 + Send + Sync>;

/// A Fourier multiplier `F -> m(xi) F`.
#[derive(Clone)]
pub struct Multiplier {
    symbol: Symbol,
    policy: ZeroModePolicy,
}

impl Multiplier {
    pub fn new(
        policy: ZeroModePolicy,
        symbol: impl Fn(FreqPoint<'_>) -> Complex64 + Send + Sync + 'static,
    ) -> Multiplier {
        Multiplier { symbol: Arc::new(symbol), policy }
    }

    pub fn policy(&self) -> ZeroModePolicy {
        self.policy
    }

    pub fn symbol_at(&self, f: FreqPoint<'_>) -> Complex64 {
        (self.symbol)(f)
    }

    /// Partial derivative `i xi_axis`. The unpaired Nyquist component is
    /// zeroed so real fields stay real.
    pub fn derivative(axis: usize) -> Multiplier {
        Multiplier::new(ZeroModePolicy::Annihilate, move |f| {
            if f.is_nyquist(axis) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, f.xi[axis])
            }
        })
    }

    /// Heat semigroup `exp(-t |xi|^2)`; mass preserving since the symbol is
    /// 1 at the origin.
    pub fn heat(t: f64) -> Multiplier {
        Multiplier::new(ZeroModePolicy::Identity, move |f| {
            Complex64::new((-t * f.xi_norm_sqr()).exp(), 0.0)
        })
    }

    /// `|xi|^{2s}`, the symbol of `(-Delta)^s`. Negative `s` annihilates the
    /// zero mode and is only defined on mean-zero fields.
    pub fn laplacian_power(s: f64) -> Multiplier {
        let policy = if s < 0.0 { ZeroModePolicy::Annihilate } else { ZeroModePolicy::Identity };
        Multiplier::new(policy, move |f| Complex64::new(f.xi_norm_sqr().powf(s), 0.0))
    }

    /// Riesz transform symbol `-i xi_axis / |xi|`.
    pub fn riesz(axis: usize) -> Multiplier {
        Multiplier::new(ZeroModePolicy::Annihilate, move |f| {
            if f.is_nyquist(axis) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -f.xi[axis] / f.xi_norm())
            }
        })
    }

    /// Pointwise product of symbols; annihilate wins on the zero mode.
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        let a = self.symbol.clone();
        let b = other.symbol.clone();
        let policy = if self.policy == ZeroModePolicy::Annihilate
            || other.policy == ZeroModePolicy::Annihilate
        {
            ZeroModePolicy::Annihilate
        } else {
            ZeroModePolicy::Identity
        };
        Multiplier::new(policy, move |f| a(f) * b(f))
    }
}

/// Apply a multiplier; the result keeps the input representation.
pub fn apply_multiplier(field: &Field, m: &Multiplier) -> Result<Field> {
    let grid = *field.grid();
    let spectral = field.to_spectral();
    let coeffs = spectral.spectrum()?;
    let scale = field.max_abs();

    let mut out = Vec::with_capacity(coeffs.len());
    for (idx, &c) in coeffs.iter().enumerate() {
        if idx == 0 {
            let v = match m.policy {
                ZeroModePolicy::Annihilate => Complex64::new(0.0, 0.0),
                ZeroModePolicy::Identity => {
                    let k = [0i64; MAX_DIM];
                    let xi = [0.0f64; MAX_DIM];
                    let s = m.symbol_at(FreqPoint {
                        k: &k[..grid.n()],
                        xi: &xi[..grid.n()],
                        points: grid.points_per_axis(),
                    });
                    if s.is_finite() {
                        s * c
                    } else if c.norm() <= crate::field::MEAN_ZERO_TOL * scale {
                        Complex64::new(0.0, 0.0)
                    } else {
                        return Err(Error::Domain(
                            "inverse multiplier undefined on constants".into(),
                        ));
                    }
                }
            };
            out.push(v);
            continue;
        }
        let k = grid.wavevector(idx);
        let xi = grid.frequency(idx);
        let s = m.symbol_at(FreqPoint {
            k: &k[..grid.n()],
            xi: &xi[..grid.n()],
            points: grid.points_per_axis(),
        });
        out.push(s * c);
    }

    let result = Field::from_spectrum(grid, out)?;
    Ok(match field.repr() {
        Repr::Physical => result.to_physical(),
        Repr::Spectral => result,
    })
}
