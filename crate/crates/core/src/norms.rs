//! Function-space norms: homogeneous Sobolev norms, the caloric (heat
//! characterized) Besov norms of the data, and the weighted sup-in-time
//! resolution norms the fixed point closes in.
//!
//! The `sup` over `t > 0` is approximated by a max over a logarithmic
//! time grid; the honest default window is `[(2h)^2, (L/8)^2]` (below it
//! the heat kernel is unresolved, above it the periodic wrap pollutes the
//! whole-space picture). A sup attained at the window edge is reported
//! through the boundary flag instead of being silently trusted.

use serde::Serialize;

use crate::budget::{ExponentBudget, Variant};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::multiplier::{apply_multiplier, Multiplier};
use crate::ops::{gradient_magnitude, heat_convolve};

/// Logarithmic grid of `m >= 2` times spanning `[t_min, t_max]`.
pub fn log_time_grid(t_min: f64, t_max: f64, m: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && m >= 2) {
        return Err(Error::Config(format!(
            "bad time grid: t_min = {t_min}, t_max = {t_max}, points = {m}"
        )));
    }
    Ok((0..m)
        .map(|i| t_min * (t_max / t_min).powf(i as f64 / (m - 1) as f64))
        .collect())
}

/// Default resolved window for a grid: heat kernel at least two spacings
/// wide, Gaussian tails at least a box-eighth away from the wrap.
pub fn default_time_bounds(grid: &Grid) -> (f64, f64) {
    let h = grid.spacing();
    let l = grid.box_length();
    ((2.0 * h).powi(2), (l / 8.0).powi(2))
}

/// Smallest resolvable heat time, `std dev >= 2 spacings`.
pub fn heat_resolution_floor(grid: &Grid) -> f64 {
    2.0 * grid.spacing().powi(2)
}

/// A field trajectory sampled on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct TimeSampledTrajectory {
    times: Vec<f64>,
    snapshots: Vec<Field>,
    label: String,
}

impl TimeSampledTrajectory {
    pub fn new(times: Vec<f64>, snapshots: Vec<Field>, label: impl Into<String>) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::Config("trajectory needs one snapshot per time".into()));
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("trajectory times must be positive and strictly increasing".into()));
        }
        let grid = *snapshots[0].grid();
        if snapshots.iter().any(|s| s.grid() != &grid) {
            return Err(Error::Config("trajectory snapshots must share one grid".into()));
        }
        Ok(TimeSampledTrajectory { times, snapshots, label: label.into() })
    }

    /// Heat flow `t -> g_t * data` over the given grid of times.
    pub fn heat_flow(data: &Field, times: &[f64]) -> Result<Self> {
        let snapshots = times
            .iter()
            .map(|&t| heat_convolve(data, t))
            .collect::<Result<Vec<_>>>()?;
        TimeSampledTrajectory::new(times.to_vec(), snapshots, "heat-flow")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        TimeSampledTrajectory {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(|s| s.scaled(c)).collect(),
            label: self.label.clone(),
        }
    }

    /// Pointwise difference of two trajectories on the same time grid.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::Config("trajectory time grids differ".into()));
        }
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        TimeSampledTrajectory::new(self.times.clone(), snapshots, self.label.clone())
    }
}

/// Homogeneous Sobolev norm of order +1 or -1: `|| |grad f| ||_{L^p}` or
/// `|| |xi|^{-1} f ||_{L^p}`. Order -1 requires a mean-zero field.
pub fn sobolev_norm(field: &Field, order: i32, exponent: f64) -> Result<f64> {
    match order {
        1 => gradient_magnitude(field)?.lebesgue_norm(exponent),
        -1 => {
            if !field.is_mean_zero() {
                return Err(Error::Domain(
                    "negative-order Sobolev norm requires a mean-zero field".into(),
                ));
            }
            apply_multiplier(field, &Multiplier::laplacian_power(-0.5))?
                .to_physical()
                .lebesgue_norm(exponent)
        }
        _ => Err(Error::Config(format!("Sobolev order must be +1 or -1, got {order}"))),
    }
}

/// Result of a weighted sup-in-time norm: the max of `t^gamma ||.||` over
/// the sampled grid, where it was attained, and whether it sat on the
/// window boundary (in which case the window should be widened).
#[derive(Debug, Clone, Serialize)]
pub struct WeightedSupNorm {
    pub space: String,
    pub exponent: f64,
    pub weight: f64,
    pub value: f64,
    pub argmax_time: f64,
    pub boundary: bool,
}

fn weighted_sup(
    traj: &TimeSampledTrajectory,
    space: &str,
    exponent: f64,
    weight: f64,
    norm: impl Fn(&Field) -> Result<f64>,
) -> Result<WeightedSupNorm> {
    let mut best = (0.0f64, traj.times[0], 0usize);
    for (i, (t, snap)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let v = t.powf(weight) * norm(snap)?;
        if v > best.0 {
            best = (v, *t, i);
        }
    }
    let boundary = best.0 > 0.0 && (best.2 == 0 || best.2 == traj.len() - 1);
    if boundary {
        log::warn!(
            "weighted sup of {} attained at the window edge t = {}; widen [t_min, t_max]",
            space,
            best.1
        );
    }
    Ok(WeightedSupNorm {
        space: space.to_string(),
        exponent,
        weight,
        value: best.0,
        argmax_time: best.1,
        boundary,
    })
}

/// Resolution norm of a trajectory in the space matching the requested
/// variant: weighted `W^{1,q}` for the advective and smoothed drifts,
/// weighted `L^q` for the divergence drift.
pub fn resolution_norm(
    traj: &TimeSampledTrajectory,
    variant: Variant,
    budget: &ExponentBudget,
) -> Result<WeightedSupNorm> {
    if variant != budget.variant {
        return Err(Error::Config(format!(
            "resolution space {variant} does not match budget variant {}",
            budget.variant
        )));
    }
    let weight = budget.data_weight();
    let q = budget.q;
    match variant {
        Variant::Advective => {
            weighted_sup(traj, "grad-lq-weighted", q, weight, |f| sobolev_norm(f, 1, q))
        }
        Variant::Divergence => {
            weighted_sup(traj, "lq-weighted", q, weight, |f| f.lebesgue_norm(q))
        }
        Variant::Alpha => {
            weighted_sup(traj, "grad-lq-alpha-weighted", q, weight, |f| sobolev_norm(f, 1, q))
        }
    }
}

/// Force norm: weighted `L^varrho`, except the divergence variant which
/// measures the force in `W^{-1,varrho}`.
pub fn force_norm(
    traj: &TimeSampledTrajectory,
    variant: Variant,
    budget: &ExponentBudget,
) -> Result<WeightedSupNorm> {
    if variant != budget.variant {
        return Err(Error::Config(format!(
            "force space {variant} does not match budget variant {}",
            budget.variant
        )));
    }
    let weight = budget.force_weight();
    let varrho = budget.varrho;
    match variant {
        Variant::Advective => {
            weighted_sup(traj, "force-lq-weighted", varrho, weight, |f| f.lebesgue_norm(varrho))
        }
        Variant::Divergence => weighted_sup(traj, "force-sobolev-neg-weighted", varrho, weight, |f| {
            sobolev_norm(f, -1, varrho)
        }),
        Variant::Alpha => weighted_sup(traj, "force-lq-alpha-weighted", varrho, weight, |f| {
            f.lebesgue_norm(varrho)
        }),
    }
}

/// Caloric Besov norm of initial data: the resolution norm of its heat
/// flow over the time grid (the same code path, so the data-term identity
/// of the Duhamel formula is bitwise).
pub fn caloric_besov_norm(
    data: &Field,
    budget: &ExponentBudget,
    times: &[f64],
) -> Result<WeightedSupNorm> {
    let floor = heat_resolution_floor(data.grid());
    if times.first().copied().unwrap_or(0.0) < floor {
        return Err(Error::Resolution(format!(
            "time grid starts below the heat resolution floor {floor}"
        )));
    }
    let traj = TimeSampledTrajectory::heat_flow(data, times)?;
    resolution_norm(&traj, budget.variant, budget)
}
