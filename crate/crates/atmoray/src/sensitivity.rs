//! Forward-mode sensitivities: dual numbers, and the band-perturbation
//! studies built on them.
//!
//! A [`DualScalar`] carries `(value, derivative)` through every arithmetic
//! operation. Because all comparisons look at the value only, a dual-number
//! solve follows *exactly* the control flow of the plain solve: the same
//! bisection path, the same Newton step count, the same kernel cells. The
//! derivative of the converged temperature is then exact differentiation of
//! the finitely-iterated algorithm — and because the Newton stage's final
//! update uses the true Jacobian of the balance, the derivative it transfers
//! agrees with the implicit-function-theorem derivative of the exact root to
//! solver precision.
//!
//! The canonical study perturbs an absorption band: `κ_ν = κ⁰_ν + ε·1_{(ν₁,ν₂)}`
//! and asks for `∂T(τ)/∂ε` at ε = 0, seeded as derivative 1 on the band rows.

use crate::atmosphere::solar_total;
use crate::driver::{fixed_point_solve, DriverError, SolveControl, SolveReport};
use crate::kernel::{reconstruct_intensity, Problem};
use crate::scalar::Scalar;
use crate::special::planck;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// A number together with one forward-mode derivative.
#[derive(Debug, Clone, Copy, Default)]
pub struct DualScalar {
    pub val: f64,
    pub der: f64,
}

impl DualScalar {
    /// A constant: derivative zero.
    pub const fn constant(val: f64) -> Self {
        DualScalar { val, der: 0.0 }
    }

    /// The differentiation seed: value with derivative 1.
    pub const fn seeded(val: f64) -> Self {
        DualScalar { val, der: 1.0 }
    }

    pub const fn new(val: f64, der: f64) -> Self {
        DualScalar { val, der }
    }
}

// Comparisons look at the value only: duals order like the numbers they
// shadow, so branches never depend on derivatives.
impl PartialEq for DualScalar {
    fn eq(&self, other: &Self) -> bool {
        self.val == other.val
    }
}

impl PartialOrd for DualScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.val.partial_cmp(&other.val)
    }
}

impl Add for DualScalar {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        DualScalar::new(self.val + o.val, self.der + o.der)
    }
}

impl Sub for DualScalar {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        DualScalar::new(self.val - o.val, self.der - o.der)
    }
}

impl Mul for DualScalar {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        DualScalar::new(self.val * o.val, self.der * o.val + self.val * o.der)
    }
}

impl Div for DualScalar {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.val / o.val;
        DualScalar::new(q, (self.der - q * o.der) / o.val)
    }
}

impl Neg for DualScalar {
    type Output = Self;
    fn neg(self) -> Self {
        DualScalar::new(-self.val, -self.der)
    }
}

impl Add<f64> for DualScalar {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        DualScalar::new(self.val + o, self.der)
    }
}

impl Sub<f64> for DualScalar {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        DualScalar::new(self.val - o, self.der)
    }
}

impl Mul<f64> for DualScalar {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        DualScalar::new(self.val * o, self.der * o)
    }
}

impl Div<f64> for DualScalar {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        DualScalar::new(self.val / o, self.der / o)
    }
}

impl AddAssign for DualScalar {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for DualScalar {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Scalar for DualScalar {
    const ZERO: Self = DualScalar::constant(0.0);
    const ONE: Self = DualScalar::constant(1.0);

    #[inline]
    fn from_f64(x: f64) -> Self {
        DualScalar::constant(x)
    }

    #[inline]
    fn value(self) -> f64 {
        self.val
    }

    #[inline]
    fn exp(self) -> Self {
        let e = libm::exp(self.val);
        DualScalar::new(e, self.der * e)
    }

    #[inline]
    fn ln(self) -> Self {
        DualScalar::new(libm::log(self.val), self.der / self.val)
    }

    #[inline]
    fn sqrt(self) -> Self {
        let r = libm::sqrt(self.val);
        DualScalar::new(r, self.der / (2.0 * r))
    }

    #[inline]
    fn abs(self) -> Self {
        // Kink at 0 resolved toward the identity branch, matching the
        // value-side fabs the branches see.
        if self.val < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn exactly_eq(self, other: Self) -> bool {
        self.val.to_bits() == other.val.to_bits() && self.der.to_bits() == other.der.to_bits()
    }
}

/// Converged dual-number solve of a band-perturbation problem.
#[derive(Debug, Clone)]
pub struct SensitivityRun {
    /// Temperature values `T⁰(τ_i)` of the underlying (unperturbed) run.
    pub temperature: Vec<f64>,
    /// Exact forward derivatives `∂T(τ_i)/∂ε` at ε = 0.
    pub dtemperature: Vec<f64>,
    /// Iteration diagnostics of the dual solve.
    pub report: SolveReport,
}

/// Lift a plain problem to dual numbers, seeding derivative 1 on every
/// frequency row with `ν₁ < ν_j < ν₂` (strict inequalities — exactly the
/// rows an ε-perturbation `κ + ε·1_{(ν₁,ν₂)}` would touch).
pub fn seed_band(base: &Problem<f64>, nu_lo: f64, nu_hi: f64) -> Problem<DualScalar> {
    base.map_kappa(|nu, k| {
        if nu > nu_lo && nu < nu_hi {
            DualScalar::seeded(k)
        } else {
            DualScalar::constant(k)
        }
    })
}

/// Run the full coupled solve on dual numbers for a band perturbation of
/// `base` and return `T` and `∂T/∂ε` per depth node.
pub fn sensitivity_run(
    base: &Problem<f64>,
    nu_lo: f64,
    nu_hi: f64,
    control: &SolveControl,
) -> Result<SensitivityRun, DriverError> {
    let dual = seed_band(base, nu_lo, nu_hi);
    let (sol, report) = fixed_point_solve(&dual, control)?;
    Ok(SensitivityRun {
        temperature: sol.temperature.iter().map(|t| t.val).collect(),
        dtemperature: sol.temperature.iter().map(|t| t.der).collect(),
        report,
    })
}

/// Central-difference check of a band sensitivity: two plain solves at
/// `κ ± h·1_{(ν₁,ν₂)}` and the quotient `(T₊ − T₋)/(2h)` per node.
///
/// This is the independent cross-check for [`sensitivity_run`] — it shares
/// the solver but not the differentiation mechanism.
pub fn finite_difference_check(
    base: &Problem<f64>,
    nu_lo: f64,
    nu_hi: f64,
    h: f64,
    control: &SolveControl,
) -> Result<Vec<f64>, DriverError> {
    let bump = |sign: f64| {
        base.map_kappa(|nu, k| {
            if nu > nu_lo && nu < nu_hi {
                k + sign * h
            } else {
                k
            }
        })
    };
    let (plus, _) = fixed_point_solve(&bump(1.0), control)?;
    let (minus, _) = fixed_point_solve(&bump(-1.0), control)?;
    Ok(plus
        .temperature
        .iter()
        .zip(&minus.temperature)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect())
}

/// The local heating/cooling criterion `J_ν(τ) − b_ν(T(τ))` on every
/// (frequency, depth) node of a converged plain solve.
///
/// Where this is negative, the radiation field at ν is colder than the local
/// Planck emission: adding absorption at ν there drains energy and cools;
/// where positive it heats. Returned indexed `[j][i]` like the field itself.
pub fn sign_criterion(problem: &Problem<f64>, solution: &crate::driver::Solution<f64>) -> Vec<Vec<f64>> {
    let nu = problem.spectral.nu();
    (0..nu.len())
        .map(|j| {
            (0..problem.optical.len())
                .map(|i| solution.g[j][i] - planck(nu[j], solution.temperature[i]))
                .collect()
        })
        .collect()
}

/// First-order analytic predictor for the temperature-sensitivity *shape*
/// under a narrow band bump at `ν*` (frozen band strength δκ = 1):
///
/// ```text
/// Φ'(τ) ≈ −δκ·|∫₀^τ ½∫₀¹ I⁰_{ν*}(t,μ)/μ dμ dt| + (δκ/κ_{ν*})·(J⁰_{ν*}(τ) − b_{ν*}(T⁰(τ)))
/// ```
///
/// The μ-division makes the half-mean log-divergent in the continuum; the
/// 64-node Gauss-Legendre rule on (0, 1] (no node at 0) acts as the
/// regularization, which is consistent with how the estimate is used:
/// qualitatively, for sign and shape, never as an asserted quantity.
pub fn perturbation_predictor(
    problem: &Problem<f64>,
    solution: &crate::driver::Solution<f64>,
    j_star: usize,
) -> Vec<f64> {
    let (mu, w) = crate::albedo::gauss_legendre_01(64);
    let n = problem.optical.len();
    let nu_star = problem.spectral.nu()[j_star];
    let kappa_star = problem.kappa[j_star];

    // half-mean of I/μ over μ ∈ (0,1] at every node
    let half_mean: Vec<f64> = (0..n)
        .map(|i| {
            0.5 * mu
                .iter()
                .zip(&w)
                .map(|(&m, &wt)| {
                    wt * reconstruct_intensity(problem, &solution.temperature, &solution.g, i, m, j_star)
                        / m
                })
                .sum::<f64>()
        })
        .collect();

    // cumulative trapezoid of that mean from the ground up
    let tau = problem.optical.tau();
    let mut cum = 0.0;
    (0..n)
        .map(|i| {
            if i > 0 {
                cum += 0.5 * (half_mean[i] + half_mean[i - 1]) * (tau[i] - tau[i - 1]);
            }
            let balance = solution.g[j_star][i] - planck(nu_star, solution.temperature[i]);
            -cum.abs() + balance / kappa_star
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn arithmetic_derivatives_match_finite_differences() {
        // d/dx of a messy composite at a few points, via duals vs central FD.
        let expr = |x: DualScalar| {
            let a = x * x + 3.0;
            let b = (x.exp() + x * 2.0) / a;
            (b.sqrt() + x.ln() * 0.5 - 1.0).abs()
        };
        for &x in &[0.4, 1.0, 2.3, 7.0] {
            let d = expr(DualScalar::seeded(x)).der;
            let f = fd(|x| expr(DualScalar::constant(x)).val, x);
            assert!(
                (d - f).abs() <= 1e-7 * d.abs().max(1.0),
                "x={x}: dual {d} vs fd {f}"
            );
        }
    }

    #[test]
    fn division_and_mixed_ops_propagate() {
        let x = DualScalar::seeded(2.0);
        let y = (x / (x + 1.0)) * 3.0; // 3x/(x+1), d = 3/(x+1)^2 = 1/3
        assert!((y.val - 2.0).abs() < 1e-15);
        assert!((y.der - 1.0 / 3.0).abs() < 1e-15);
        let z = -x + 5.0;
        assert_eq!(z.val, 3.0);
        assert_eq!(z.der, -1.0);
    }

    #[test]
    fn branches_see_values_only() {
        let hot = DualScalar::new(2.0, -100.0);
        let cold = DualScalar::new(1.0, 100.0);
        assert!(hot > cold);
        assert_eq!(Scalar::max(hot, cold).der, -100.0, "max keeps the winner's derivative");
        assert_eq!(Scalar::min(hot, cold).der, 100.0);
        // equality ignores derivatives; exactly_eq does not
        assert_eq!(DualScalar::new(1.0, 0.0), DualScalar::new(1.0, 9.0));
        assert!(!DualScalar::new(1.0, 0.0).exactly_eq(DualScalar::new(1.0, 9.0)));
    }

    #[test]
    fn abs_mirrors_negative_branch() {
        let x = DualScalar::new(-3.0, 2.0);
        let y = x.abs();
        assert_eq!((y.val, y.der), (3.0, -2.0));
        let z = DualScalar::new(3.0, 2.0).abs();
        assert_eq!((z.val, z.der), (3.0, 2.0));
    }

    #[test]
    fn expint_of_dual_differentiates_the_series() {
        // E₁'(t) = −e^{−t}/t; the series must reproduce it through plain
        // operator overloading.
        for &t in &[0.3, 1.0, 2.5] {
            let d = crate::special::expint(1, DualScalar::seeded(t)).unwrap().der;
            let want = -libm::exp(-t) / t;
            assert!(
                (d - want).abs() < 1e-9,
                "E1'({t}): dual {d} vs analytic {want}"
            );
            // E₃' = −E₂ exactly.
            let d3 = crate::special::expint(3, DualScalar::seeded(t)).unwrap().der;
            let e2 = crate::special::expint(2, t).unwrap();
            assert!((d3 + e2).abs() < 1e-9, "E3'({t}) = {d3} vs −E2 = {}", -e2);
        }
    }

    #[test]
    fn planck_of_dual_matches_planck_dt() {
        for &(nu, t) in &[(0.5, 0.3), (1.0, 1.0), (6.0, 0.9)] {
            let d = planck(nu, DualScalar::seeded(t)).der;
            let want = crate::special::planck_dt(nu, t);
            assert!(
                (d - want).abs() <= 1e-12 * want.abs(),
                "planck derivative at ({nu},{t}): {d} vs {want}"
            );
        }
    }

    #[test]
    fn band_seeding_marks_exactly_the_open_interval() {
        let grid = crate::spectral::SpectralGrid::from_nodes(alloc::vec![0.1, 0.2, 0.25, 0.3, 0.4])
            .unwrap();
        let base = crate::kernel::Problem::builder(grid)
            .kappa_grey(0.5)
            .build()
            .unwrap();
        let dual = seed_band(&base, 0.2, 0.3);
        let ders: Vec<f64> = dual.kappa.iter().map(|k| k.der).collect();
        assert_eq!(ders, alloc::vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(dual.kappa.iter().all(|k| k.val == 0.5));
    }
}

/// Total solar power helper re-exported where the experiment code expects it.
pub fn solar_total_for(problem: &Problem<f64>) -> f64 {
    solar_total(
        &problem.spectral,
        &problem.solar,
        problem.boundary.source_scale,
    )
}
