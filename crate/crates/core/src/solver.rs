//! Picard iteration on the Duhamel formulation
//! `theta(t) = g_t * theta_0 + int_0^t g_{t-s} * N(theta)(s) ds
//!  + int_0^t g_{t-s} * f(s) ds`
//! for the three drift nonlinearities.
//!
//! Iterate zero is the affine (data + force) part, so increments measure
//! the bilinear map directly and their ratios are the contraction
//! diagnostics. The nonlinear time integral uses the graded product
//! quadrature with the singularity exponents dictated by the budget; the
//! force integral of an analytic-in-time family is evaluated per mode by
//! exact exponential stepping. Divergence is a reportable outcome, not an
//! error: nothing is guaranteed outside the smallness ball.

use num_complex::Complex64;

use crate::budget::{ExponentBudget, Variant};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::norms::{
    caloric_besov_norm, force_norm, heat_resolution_floor, resolution_norm,
    TimeSampledTrajectory, WeightedSupNorm,
};
use crate::ops::{drift_term, RoughOperator};
use crate::quadrature::{heat_force_profile, product_weights};

/// External force: zero, a separable analytic-in-time family
/// `t^{-time_power} shape(x)`, or a pre-sampled trajectory on the solver
/// time grid.
#[derive(Debug, Clone)]
pub enum ForceSpec {
    Zero,
    Separable { shape: Field, time_power: f64 },
    Sampled(TimeSampledTrajectory),
}

impl ForceSpec {
    /// Physical force snapshot at a time (for norm measurement).
    pub fn sample(&self, t: f64, scale: f64) -> Result<Option<Field>> {
        match self {
            ForceSpec::Zero => Ok(None),
            ForceSpec::Separable { shape, time_power } => {
                Ok(Some(shape.scaled(scale * t.powf(-time_power))))
            }
            ForceSpec::Sampled(traj) => {
                let idx = traj
                    .times()
                    .iter()
                    .position(|&s| s == t)
                    .ok_or_else(|| Error::Config("force trajectory lacks requested time".into()))?;
                Ok(Some(traj.snapshots()[idx].scaled(scale)))
            }
        }
    }
}

/// A fully specified mild-solution problem.
#[derive(Debug, Clone)]
pub struct MildProblem {
    budget: ExponentBudget,
    ops: Vec<RoughOperator>,
    data: Field,
    force: ForceSpec,
    data_scale: f64,
    force_scale: f64,
}

impl MildProblem {
    pub fn new(
        budget: ExponentBudget,
        ops: Vec<RoughOperator>,
        data: Field,
        force: ForceSpec,
    ) -> Result<MildProblem> {
        let grid = *data.grid();
        if ops.len() != grid.n() {
            return Err(Error::Config(format!(
                "need one rough operator per component: expected {}, got {}",
                grid.n(),
                ops.len()
            )));
        }
        for op in &ops {
            if op.grid() != &grid {
                return Err(Error::Config("operator grid does not match data grid".into()));
            }
            let expected_alpha = if budget.variant == Variant::Alpha { budget.alpha } else { 0.0 };
            if op.alpha() != expected_alpha {
                return Err(Error::Config(format!(
                    "operator smoothing degree {} does not match budget alpha {expected_alpha}",
                    op.alpha()
                )));
            }
        }
        if let ForceSpec::Separable { time_power, .. } = &force {
            if !(*time_power < 1.0) {
                return Err(Error::Config(format!(
                    "force time power must be < 1 for integrability, got {time_power}"
                )));
            }
        }
        // The divergence drift runs through the inverse square-root
        // Laplacian: data and force must stay mean-free.
        let (data, force) = if budget.variant == Variant::Divergence {
            let data = data.project_mean_zero();
            let force = match force {
                ForceSpec::Separable { shape, time_power } => ForceSpec::Separable {
                    shape: shape.project_mean_zero(),
                    time_power,
                },
                other => other,
            };
            (data, force)
        } else {
            (data, force)
        };
        Ok(MildProblem { budget, ops, data, force, data_scale: 1.0, force_scale: 1.0 })
    }

    pub fn with_scales(mut self, data_scale: f64, force_scale: f64) -> MildProblem {
        self.data_scale = data_scale;
        self.force_scale = force_scale;
        self
    }

    pub fn budget(&self) -> &ExponentBudget {
        &self.budget
    }

    pub fn variant(&self) -> Variant {
        self.budget.variant
    }

    pub fn grid(&self) -> &Grid {
        self.data.grid()
    }

    pub fn data(&self) -> &Field {
        &self.data
    }

    /// Weighted size of the input: caloric data norm plus force norm on
    /// the given time grid.
    pub fn input_norm(&self, times: &[f64]) -> Result<f64> {
        let data_part =
            caloric_besov_norm(&self.data.scaled(self.data_scale), &self.budget, times)?.value;
        let force_part = match &self.force {
            ForceSpec::Zero => 0.0,
            _ => {
                let snaps = times
                    .iter()
                    .map(|&t| {
                        self.force
                            .sample(t, self.force_scale)
                            .map(|o| o.expect("non-zero force"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let traj = TimeSampledTrajectory::new(times.to_vec(), snaps, "force")?;
                force_norm(&traj, self.budget.variant, &self.budget)?.value
            }
        };
        Ok(data_part + force_part)
    }
}

/// Spectral snapshots on the solver time grid; the engine works in mode
/// space and materializes physical fields only where the drift needs them.
struct Engine<'a> {
    problem: &'a MildProblem,
    times: Vec<f64>,
    freq_sq: Vec<f64>,
    /// Product-quadrature weights per target index.
    nl_weights: Vec<Vec<f64>>,
    a_nl: f64,
    b_nl: f64,
    affine: Vec<Vec<Complex64>>,
}

impl<'a> Engine<'a> {
    fn new(problem: &'a MildProblem, times: &[f64]) -> Result<Engine<'a>> {
        let grid = *problem.grid();
        if times.len() < 2 {
            return Err(Error::Config("solver time grid needs at least two points".into()));
        }
        let floor = heat_resolution_floor(&grid);
        if times[0] < floor {
            return Err(Error::Resolution(format!(
                "solver time grid starts below the heat resolution floor {floor}"
            )));
        }
        let freq_sq: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let xi = grid.frequency(idx);
                xi[..grid.n()].iter().map(|x| x * x).sum()
            })
            .collect();

        let (a_nl, b_nl) = problem.budget.nonlinear_exponents();
        let nl_weights = (0..times.len())
            .map(|m| product_weights(times[m], &times[..=m], a_nl, b_nl))
            .collect::<Result<Vec<_>>>()?;

        let mut engine = Engine {
            problem,
            times: times.to_vec(),
            freq_sq,
            nl_weights,
            a_nl,
            b_nl,
            affine: Vec::new(),
        };
        engine.affine = engine.build_affine()?;
        Ok(engine)
    }

    fn grid(&self) -> Grid {
        *self.problem.grid()
    }

    fn build_affine(&self) -> Result<Vec<Vec<Complex64>>> {
        let grid = self.grid();
        let data_spec = self
            .problem
            .data
            .scaled(self.problem.data_scale)
            .to_spectral()
            .spectrum()?
            .to_vec();
        let mut affine: Vec<Vec<Complex64>> = self
            .times
            .iter()
            .map(|&t| {
                data_spec
                    .iter()
                    .zip(&self.freq_sq)
                    .map(|(&c, &k2)| c * (-t * k2).exp())
                    .collect()
            })
            .collect();

        match &self.problem.force {
            ForceSpec::Zero => {}
            ForceSpec::Separable { shape, time_power } => {
                let shape_spec = shape
                    .scaled(self.problem.force_scale)
                    .to_spectral()
                    .spectrum()?
                    .to_vec();
                let w = *time_power;
                let h = move |s: f64| s.powf(-w);
                for (mode, (&coeff, &k2)) in shape_spec.iter().zip(&self.freq_sq).enumerate() {
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    let profile = heat_force_profile(&self.times, k2, w.max(0.0), &h)?;
                    for (m, slot) in affine.iter_mut().enumerate() {
                        slot[mode] += coeff * profile[m];
                    }
                }
            }
            ForceSpec::Sampled(traj) => {
                if traj.times() != self.times {
                    return Err(Error::Config(
                        "sampled force must live on the solver time grid".into(),
                    ));
                }
                let (a_f, b_f) = self.problem.budget.force_exponents();
                let force_spec: Vec<Vec<Complex64>> = traj
                    .snapshots()
                    .iter()
                    .map(|f| {
                        Ok(f.scaled(self.problem.force_scale).to_spectral().spectrum()?.to_vec())
                    })
                    .collect::<Result<Vec<_>>>()?;
                for m in 0..self.times.len() {
                    let weights = product_weights(self.times[m], &self.times[..=m], a_f, b_f)?;
                    let t = self.times[m];
                    for (j, &w) in weights.iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let s = self.times[j];
                        let dt = t - s;
                        let reg = if dt <= 0.0 { 0.0 } else { dt.powf(a_f) * s.powf(b_f) };
                        if reg == 0.0 {
                            continue;
                        }
                        let scale = w * reg;
                        for (mode, slot) in affine[m].iter_mut().enumerate() {
                            *slot +=
                                scale * force_spec[j][mode] * (-dt * self.freq_sq[mode]).exp();
                        }
                    }
                }
            }
        }

        if self.problem.budget.variant == Variant::Divergence {
            for snap in affine.iter_mut() {
                snap[0] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(affine)
    }

    fn affine_trajectory(&self) -> Result<TimeSampledTrajectory> {
        self.to_trajectory(&self.affine, "picard-0")
    }

    fn to_trajectory(&self, spectral: &[Vec<Complex64>], label: &str) -> Result<TimeSampledTrajectory> {
        let grid = self.grid();
        let snapshots = spectral
            .iter()
            .map(|s| Ok(Field::from_spectrum(grid, s.clone())?.to_physical()))
            .collect::<Result<Vec<_>>>()?;
        TimeSampledTrajectory::new(self.times.clone(), snapshots, label)
    }

    /// One Duhamel application: affine part plus the time-graded heat
    /// integral of the drift of `current`.
    fn step(&self, current: &TimeSampledTrajectory, label: &str) -> Result<TimeSampledTrajectory> {
        let grid = self.grid();
        let variant = self.problem.budget.variant;
        let drift_spec: Vec<Vec<Complex64>> = current
            .snapshots()
            .iter()
            .map(|snap| {
                let d = drift_term(variant, snap, &self.problem.ops)?;
                Ok(d.to_spectral().spectrum()?.to_vec())
            })
            .collect::<Result<Vec<_>>>()?;

        let mut out = self.affine.clone();
        for m in 0..self.times.len() {
            let t = self.times[m];
            for (j, &w) in self.nl_weights[m].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let s = self.times[j];
                let dt = t - s;
                let reg = if dt <= 0.0 { 0.0 } else { dt.powf(self.a_nl) * s.powf(self.b_nl) };
                if reg == 0.0 {
                    continue;
                }
                let scale = w * reg;
                for (mode, slot) in out[m].iter_mut().enumerate() {
                    *slot += scale * drift_spec[j][mode] * (-dt * self.freq_sq[mode]).exp();
                }
            }
            if variant == Variant::Divergence {
                out[m][0] = Complex64::new(0.0, 0.0);
            }
        }
        let _ = grid;
        self.to_trajectory(&out, label)
    }
}

/// One Duhamel application of `current` under the problem's data, force
/// and drift (the map whose fixed point is the mild solution).
pub fn duhamel_step(
    problem: &MildProblem,
    current: &TimeSampledTrajectory,
    times: &[f64],
) -> Result<TimeSampledTrajectory> {
    Engine::new(problem, times)?.step(current, "duhamel")
}

/// The affine (data + force) Duhamel part, which is also Picard iterate 0.
pub fn affine_part(problem: &MildProblem, times: &[f64]) -> Result<TimeSampledTrajectory> {
    Engine::new(problem, times)?.affine_trajectory()
}

#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub iterates: Vec<TimeSampledTrajectory>,
    /// Resolution norm per iterate.
    pub weighted_norms: Vec<WeightedSupNorm>,
    /// `||theta_k - theta_{k-1}||` for `k >= 1`.
    pub increment_norms: Vec<f64>,
    /// Ratios of consecutive increments, defined from iterate 2 onward.
    pub contraction_factors: Vec<f64>,
    pub converged: bool,
    pub diverged: bool,
}

impl SolutionTrace {
    pub fn final_trajectory(&self) -> &TimeSampledTrajectory {
        self.iterates.last().expect("trace holds at least iterate 0")
    }

    pub fn final_norm(&self) -> f64 {
        self.weighted_norms.last().map(|w| w.value).unwrap_or(0.0)
    }
}

/// Iterate the Duhamel map from the affine part until increments fall
/// below `tolerance` with the trailing contraction factors under 1, or
/// until divergence is detected (two successive factors above 1.5).
pub fn picard_solve(
    problem: &MildProblem,
    times: &[f64],
    max_iterations: usize,
    tolerance: f64,
) -> Result<SolutionTrace> {
    if max_iterations < 3 {
        return Err(Error::Config(format!(
            "picard needs max_iterations >= 3, got {max_iterations}"
        )));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let engine = Engine::new(problem, times)?;
    let variant = problem.budget.variant;

    let mut iterates = vec![engine.affine_trajectory()?];
    let mut weighted_norms =
        vec![resolution_norm(&iterates[0], variant, &problem.budget)?];
    let mut increment_norms: Vec<f64> = Vec::new();
    let mut contraction_factors: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut diverged = false;

    for k in 1..=max_iterations {
        let next = engine.step(&iterates[k - 1], &format!("picard-{k}"))?;
        let increment =
            resolution_norm(&next.sub(&iterates[k - 1])?, variant, &problem.budget)?.value;
        weighted_norms.push(resolution_norm(&next, variant, &problem.budget)?);
        iterates.push(next);

        if !increment.is_finite() {
            diverged = true;
            increment_norms.push(increment);
            break;
        }
        if let Some(&prev) = increment_norms.last() {
            if prev > 0.0 {
                contraction_factors.push(increment / prev);
            }
        }
        increment_norms.push(increment);

        let tail = contraction_factors.len().min(3);
        let tail_ok = contraction_factors[contraction_factors.len() - tail..]
            .iter()
            .all(|&f| f < 1.0);
        if increment <= tolerance && tail_ok {
            converged = true;
            break;
        }
        let len = contraction_factors.len();
        if len >= 2 && contraction_factors[len - 1] > 1.5 && contraction_factors[len - 2] > 1.5 {
            diverged = true;
            break;
        }
    }

    Ok(SolutionTrace {
        iterates,
        weighted_norms,
        increment_norms,
        contraction_factors,
        converged,
        diverged,
    })
}

/// Resolution norm of the change produced by one extra Duhamel step on
/// the final iterate; at a fixed point this is bounded by the tolerance.
pub fn fixed_point_residual(
    problem: &MildProblem,
    times: &[f64],
    trace: &SolutionTrace,
) -> Result<f64> {
    let engine = Engine::new(problem, times)?;
    let extra = engine.step(trace.final_trajectory(), "residual-probe")?;
    Ok(resolution_norm(
        &extra.sub(trace.final_trajectory())?,
        problem.budget.variant,
        &problem.budget,
    )?
    .value)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanRow {
    pub scale: f64,
    pub input_norm: f64,
    pub converged: bool,
    pub diverged: bool,
    pub final_contraction: Option<f64>,
    pub final_norm: f64,
    /// `||nonlinear Duhamel term|| / ||theta||^2` for converged runs.
    pub bilinear_ratio: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Empirical bilinear constant: max ratio over converged runs.
    pub bilinear_constant: Option<f64>,
    /// No converged run sits above a diverged one.
    pub downward_closed: bool,
}

/// Sweep data/force scales and record convergence, the final contraction
/// factor and the empirical bilinear constant.
pub fn smallness_scan(
    problem: &MildProblem,
    times: &[f64],
    scales: &[f64],
    max_iterations: usize,
    tolerance: f64,
) -> Result<ScanTable> {
    if scales.windows(2).any(|w| w[0] >= w[1]) || scales.iter().any(|&s| s < 0.0) {
        return Err(Error::Config("scan scales must be nonnegative and increasing".into()));
    }
    let mut rows = Vec::with_capacity(scales.len());
    for &scale in scales {
        let scaled = problem.clone().with_scales(scale, scale);
        if scale == 0.0 {
            rows.push(ScanRow {
                scale,
                input_norm: 0.0,
                converged: true,
                diverged: false,
                final_contraction: None,
                final_norm: 0.0,
                bilinear_ratio: None,
            });
            continue;
        }
        let input_norm = scaled.input_norm(times)?;
        let trace = picard_solve(&scaled, times, max_iterations, tolerance)?;
        let bilinear_ratio = if trace.converged && trace.final_norm() > 0.0 {
            let engine = Engine::new(&scaled, times)?;
            let stepped = engine.step(trace.final_trajectory(), "bilinear-probe")?;
            let nl_term = stepped.sub(&engine.affine_trajectory()?)?;
            let nl_norm =
                resolution_norm(&nl_term, scaled.budget.variant, &scaled.budget)?.value;
            Some(nl_norm / (trace.final_norm() * trace.final_norm()))
        } else {
            None
        };
        rows.push(ScanRow {
            scale,
            input_norm,
            converged: trace.converged,
            diverged: trace.diverged,
            final_contraction: trace.contraction_factors.last().copied(),
            final_norm: trace.final_norm(),
            bilinear_ratio,
        });
    }
    let first_bad = rows.iter().position(|r: &ScanRow| !r.converged);
    let downward_closed = match first_bad {
        None => true,
        Some(i) => rows[i..].iter().all(|r| !r.converged),
    };
    if !downward_closed {
        log::warn!("smallness scan is not downward closed; inspect the rows");
    }
    let bilinear_constant = rows
        .iter()
        .filter_map(|r| r.bilinear_ratio)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(ScanTable { rows, bilinear_constant, downward_closed })
}
