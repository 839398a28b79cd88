//! Admissible-exponent calculator.
//!
//! Each drift variant comes with a web of strict inequalities tying the
//! kernel integrability `rho`, the smoothing degree `alpha` and the
//! Lebesgue exponents `q` (data/resolution) and `varrho` (force). The
//! calculator either returns a fully derived budget or the complete list
//! of violated constraints; downstream code refuses to run on anything
//! but an accepted budget.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Drift against the gradient, `T[theta] . grad theta`.
    Advective,
    /// Divergence form with inverse square-root Laplacian regularization.
    Divergence,
    /// Degree `-alpha` smoothed kernels, `T^alpha[theta] . grad theta`.
    Alpha,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Advective => "advective",
            Variant::Divergence => "divergence",
            Variant::Alpha => "alpha",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Accepted exponent set with all derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBudget {
    pub variant: Variant,
    pub n: usize,
    pub rho: f64,
    pub alpha: f64,
    pub q: f64,
    /// Target exponent of the drift bound, `s = nq/(n - q(1+alpha))`.
    pub s: f64,
    /// Hoelder exponent, `1/p = 1/q + 1/s`.
    pub p: f64,
    /// Young exponent, `1 + 1/q = 1/r + 1/p`.
    pub r: f64,
    pub varrho: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetRejection {
    pub violations: Vec<String>,
}

impl std::fmt::Display for BudgetRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exponents rejected: {}", self.violations.join("; "))
    }
}

impl std::error::Error for BudgetRejection {}

/// Rough-kernel threshold `rho n / (rho n + rho - n)`; decreasing in
/// `rho`, so rougher kernels (small `rho`) shrink the admissible
/// `q`-window.
pub fn rough_lower_bound(n: usize, rho: f64) -> f64 {
    let nf = n as f64;
    rho * nf / (rho * nf + rho - nf)
}

/// Drift-bound target exponent; at `alpha = 0` this is the Sobolev
/// conjugate `nq/(n-q)`.
pub fn drift_target_exponent(n: usize, q: f64, alpha: f64) -> f64 {
    let nf = n as f64;
    q * nf / (nf - q * (1.0 + alpha))
}

/// Validate `(n, rho, alpha, q, varrho)` and derive the remaining
/// exponents. `alpha = 0` budgets belong to the advective (or, after
/// `retag`, divergence) variant; `alpha > 0` to the smoothed variant.
/// Every violated constraint is reported, not just the first.
pub fn exponent_budget(
    n: usize,
    rho: f64,
    alpha: f64,
    q: f64,
    varrho: f64,
) -> std::result::Result<ExponentBudget, BudgetRejection> {
    let mut violations = Vec::new();
    let nf = n as f64;

    if !(n == 2 || n == 3) {
        violations.push(format!("dimension must be 2 or 3, got {n}"));
        return Err(BudgetRejection { violations });
    }
    for (name, v) in [("rho", rho), ("q", q), ("varrho", varrho)] {
        if !(v.is_finite() && v > 0.0) {
            violations.push(format!("{name} must be positive and finite, got {v}"));
        }
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        violations.push(format!("alpha must be finite and >= 0, got {alpha}"));
    }
    if !violations.is_empty() {
        return Err(BudgetRejection { violations });
    }

    if !(rho > 1.0 && rho < nf) {
        violations.push(format!("kernel exponent rho = {rho} outside (1, n) = (1, {nf})"));
    }

    let variant = if alpha == 0.0 { Variant::Advective } else { Variant::Alpha };
    let lower = rough_lower_bound(n, rho);

    match variant {
        Variant::Advective | Variant::Divergence => {
            if !(q > lower) {
                violations.push(format!(
                    "q below rough-kernel threshold: need q > rho n/(rho n + rho - n) = {lower}, got q = {q}"
                ));
            }
            if !(q < nf) {
                violations.push(format!("need q < n = {nf}, got q = {q}"));
            }
            if !(nf < 2.0 * q) {
                violations.push(format!("need n < 2q, got n = {nf}, 2q = {}", 2.0 * q));
            }
        }
        Variant::Alpha => {
            if !(alpha < nf - 1.0) {
                violations.push(format!(
                    "smoothing degree alpha = {alpha} outside [0, n-1) = [0, {})",
                    nf - 1.0
                ));
            }
            if !(q > lower) {
                violations.push(format!(
                    "q below rough-kernel threshold: need q > rho n/(rho n + rho - n) = {lower}, got q = {q}"
                ));
            }
            let data_lower = nf / (2.0 + alpha);
            if !(q > data_lower) {
                violations.push(format!(
                    "need q > n/(2+alpha) = {data_lower}, got q = {q}"
                ));
            }
            let upper = nf / (1.0 + alpha);
            if !(q < upper) {
                violations.push(format!("need q < n/(1+alpha) = {upper}, got q = {q}"));
            }
        }
    }

    // Force exponent window.
    match variant {
        Variant::Advective | Variant::Divergence => {
            if !(varrho > 1.0 && varrho < nf && nf < 3.0 * varrho) {
                violations.push(format!(
                    "force exponent varrho = {varrho} outside 1 < varrho < n < 3 varrho"
                ));
            }
        }
        Variant::Alpha => {
            let lo = (nf / (3.0 + alpha)).max(1.0);
            let hi = nf / (1.0 + alpha);
            if !(varrho > lo && varrho < hi) {
                violations.push(format!(
                    "force exponent varrho = {varrho} outside (max(1, n/(3+alpha)), n/(1+alpha)) = ({lo}, {hi})"
                ));
            }
        }
    }
    // Right endpoint closed: at varrho = q every derived force exponent
    // stays integrable (a = 1/2, b < 1), and the reference parameter set
    // n = 3, q = varrho = 2 sits exactly there.
    if !(1.0 / q - 1.0 / nf < 1.0 / varrho && 1.0 / varrho <= 1.0 / q) {
        violations.push(format!(
            "need 1/q - 1/n < 1/varrho <= 1/q, got 1/q = {}, 1/varrho = {}, 1/n = {}",
            1.0 / q,
            1.0 / varrho,
            1.0 / nf
        ));
    }

    // Derived exponents. p > 1 is what the convolution inequality needs;
    // the hypotheses above do not imply it for every n = 2 corner, so it
    // is enforced as its own constraint.
    let s = drift_target_exponent(n, q, alpha);
    let p = 1.0 / (1.0 / q + 1.0 / s);
    let r = 1.0 / (1.0 + 1.0 / q - 1.0 / p);
    if s.is_finite() && s > 0.0 {
        if !(p > 1.0) {
            violations.push(format!(
                "derived Hoelder exponent p = {p} not > 1 (convolution inequality range)"
            ));
        }
        if !(r > 1.0) {
            violations.push(format!("derived Young exponent r = {r} not > 1"));
        }
    }

    if violations.is_empty() {
        Ok(ExponentBudget { variant, n, rho, alpha, q, s, p, r, varrho })
    } else {
        Err(BudgetRejection { violations })
    }
}

impl ExponentBudget {
    /// An `alpha = 0` budget serves both the advective and the divergence
    /// system; pick which one it is driving.
    pub fn retag(mut self, variant: Variant) -> crate::Result<ExponentBudget> {
        if variant == Variant::Alpha && self.alpha == 0.0 {
            return Err(crate::Error::Config(
                "alpha variant requires alpha > 0".into(),
            ));
        }
        if variant != Variant::Alpha && self.alpha != 0.0 {
            return Err(crate::Error::Config(format!(
                "{variant} variant requires alpha = 0, got {}",
                self.alpha
            )));
        }
        self.variant = variant;
        Ok(self)
    }

    /// Weight exponent of the resolution (and caloric data) norm:
    /// `((2+alpha) q - n) / (2q)`.
    pub fn data_weight(&self) -> f64 {
        ((2.0 + self.alpha) * self.q - self.n as f64) / (2.0 * self.q)
    }

    /// Weight exponent of the force norm: `(3+alpha)/2 - n/(2 varrho)`.
    pub fn force_weight(&self) -> f64 {
        (3.0 + self.alpha) / 2.0 - self.n as f64 / (2.0 * self.varrho)
    }

    /// `(a, b)` of the singular density `(t-s)^{-a} s^{-b}` of the
    /// nonlinear Duhamel integral: `a = (n - alpha q)/(2q)`, `b` twice the
    /// data weight.
    pub fn nonlinear_exponents(&self) -> (f64, f64) {
        let nf = self.n as f64;
        let a = (nf - self.alpha * self.q) / (2.0 * self.q);
        let b = 2.0 * self.data_weight();
        (a, b)
    }

    /// `(a, b)` of the force Duhamel integral:
    /// `a = (1 + n(1/varrho - 1/q))/2`, `b` the force weight.
    pub fn force_exponents(&self) -> (f64, f64) {
        let nf = self.n as f64;
        let a = (1.0 + nf * (1.0 / self.varrho - 1.0 / self.q)) / 2.0;
        (a, self.force_weight())
    }

    /// Residual of the gradient-loss identity
    /// `1 + n(1/p - 1/q) = (n - alpha q)/q`; zero up to roundoff on every
    /// accepted budget.
    pub fn gradient_identity_residual(&self) -> f64 {
        let nf = self.n as f64;
        (1.0 + nf * (1.0 / self.p - 1.0 / self.q) - (nf - self.alpha * self.q) / self.q).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_point_is_accepted() {
        // n = 3, q = 2 pairs with kernels in L^rho for 6/5 < rho < 3.
        let b = exponent_budget(3, 2.0, 0.0, 2.0, 2.0).unwrap();
        assert_eq!(b.variant, Variant::Advective);
        assert_relative_eq!(b.s, 6.0);
        assert_relative_eq!(rough_lower_bound(3, 2.0), 6.0 / 5.0);
        assert_relative_eq!(b.p, 1.5);
        assert!(b.r > 1.0);
        assert_relative_eq!(b.data_weight(), 0.25);
        assert_relative_eq!(b.force_weight(), 0.75);
    }

    #[test]
    fn threshold_evaluations() {
        // rho = 6/5 pushes the threshold exactly to 2; strict comparison
        // rejects q = 2. rho = 21/20 pushes it to 21/8.
        assert_relative_eq!(rough_lower_bound(3, 1.2), 2.0, max_relative = 1e-12);
        assert!(exponent_budget(3, 1.2, 0.0, 2.0, 2.0).is_err());
        assert_relative_eq!(rough_lower_bound(3, 1.05), 2.625, max_relative = 1e-12);
        let rej = exponent_budget(3, 1.05, 0.0, 2.0, 2.0).unwrap_err();
        assert!(rej.violations.iter().any(|v| v.contains("rough-kernel threshold")));
    }

    #[test]
    fn alpha_variant_upper_bound() {
        // n = 3, alpha = 1 requires q < 3/2.
        let rej = exponent_budget(3, 2.0, 1.0, 2.0, 1.4).unwrap_err();
        assert!(rej.violations.iter().any(|v| v.contains("q < n/(1+alpha)")));
        let ok = exponent_budget(3, 2.0, 1.0, 1.3, 1.4).unwrap();
        assert_eq!(ok.variant, Variant::Alpha);
        assert!(ok.s > 1.0);
    }

    #[test]
    fn smoothing_limit_recovers_plain_target_exponent() {
        for (n, q) in [(3usize, 2.0f64), (2, 1.5)] {
            let nf = n as f64;
            assert_eq!(drift_target_exponent(n, q, 0.0), nf * q / (nf - q));
        }
        // n = 2, alpha = 0.5, q = 1.2: s = 2.4/(2 - 1.8) = 12.
        assert_relative_eq!(drift_target_exponent(2, 1.2, 0.5), 12.0, max_relative = 1e-12);
    }

    #[test]
    fn rejections_enumerate_all_violations() {
        // n = 3, alpha = 1, q = 2, varrho = 9: q-upper-bound, varrho window
        // and the 1/varrho sandwich all fail.
        let rej = exponent_budget(3, 2.0, 1.0, 2.0, 9.0).unwrap_err();
        assert!(rej.violations.len() >= 3, "violations: {:?}", rej.violations);
    }

    #[test]
    fn threshold_is_monotone_in_rho() {
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let rho = 1.0 + (i as f64) * 0.05;
            if rho >= 3.0 {
                break;
            }
            let lower = rough_lower_bound(3, rho);
            assert!(lower <= prev);
            prev = lower;
        }
    }

    #[test]
    fn retag_checks_alpha_compatibility() {
        let b = exponent_budget(3, 2.0, 0.0, 2.0, 2.0).unwrap();
        let d = b.retag(Variant::Divergence).unwrap();
        assert_eq!(d.variant, Variant::Divergence);
        assert!(d.retag(Variant::Alpha).is_err());
        let a = exponent_budget(3, 2.0, 1.0, 1.3, 1.4).unwrap();
        assert!(a.retag(Variant::Divergence).is_err());
    }

    #[test]
    fn gradient_identity_holds_on_accepted_budgets() {
        let budgets = [
            exponent_budget(3, 2.0, 0.0, 2.0, 2.0).unwrap(),
            exponent_budget(2, 1.5, 0.0, 1.5, 1.75).unwrap(),
            exponent_budget(3, 2.0, 1.0, 1.3, 1.4).unwrap(),
            exponent_budget(2, 1.5, 0.5, 1.25, 1.3).unwrap(),
        ];
        for b in budgets {
            assert!(b.gradient_identity_residual() < 1e-12);
            assert!(b.p > 1.0 && b.p < b.q);
            assert!(b.r > 1.0);
            let (a_n, b_n) = b.nonlinear_exponents();
            let (a_f, b_f) = b.force_exponents();
            for e in [a_n, b_n, a_f, b_f] {
                assert!(e > 0.0 && e < 1.0, "integrability exponent {e} out of (0,1)");
            }
        }
    }

    #[test]
    fn small_q_corner_in_2d_is_rejected_by_derived_p() {
        // All stated window constraints pass at n = 2, rho = 1.8, q = 1.25,
        // but the derived p dips below 1.
        let rej = exponent_budget(2, 1.8, 0.0, 1.25, 1.6).unwrap_err();
        assert!(rej.violations.iter().any(|v| v.contains("p")), "{:?}", rej.violations);
    }
}
