//! Ground-reflection operators on the half-space of directions, and the
//! machinery to test them for non-accretivity.
//!
//! A boundary operator `𝒜` maps the downward intensity at the ground,
//! sampled as `f(μ)` on a quadrature of `μ ∈ (0, 1]`, to the re-emitted
//! upward intensity. For the coupled transfer problem to stay a contraction
//! the operator must not amplify the flux of differences:
//!
//! ```text
//! Σ_q w_q μ_q (𝒜f₂ − 𝒜f₁)₊(μ_q)  ≤  Σ_q w_q μ_q (f₂ − f₁)₊(μ_q)
//! ```
//!
//! for every pair of boundary states — checked here by randomized search
//! over pairs ([`check_non_accretive`]), which returns the worst observed
//! defect so that genuinely amplifying operators (gain > 1) surface as
//! negative values.

use crate::rng::SplitMix64;
use crate::special::planck;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Gauss–Legendre nodes and weights mapped to `(0, 1)`, ascending in μ.
///
/// Weights sum to 1, so half-range angular means are `½Σw(f₊ + f₋)` and the
/// flux is `Σ w μ f`. Nodes are strictly inside the interval — the `1/μ`
/// factors that appear in ray means stay finite on every node.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one quadrature node");
    let mut mu = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    for i in 0..n {
        // Chebyshev-angle initial guess for the i-th largest root, then
        // Newton on the recurrence-evaluated Legendre polynomial.
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0f64;
            let mut p1 = x;
            for j in 1..n {
                let p2 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p0) / (j + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n−1}(x)
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if libm::fabs(dx) < 1e-15 {
                break;
            }
        }
        // x descends with i, so (1−x)/2 ascends.
        mu[i] = 0.5 * (1.0 - x);
        w[i] = 1.0 / ((1.0 - x * x) * pp * pp); // = (2/((1−x²)P'ₙ²)) / 2
    }
    (mu, w)
}

/// A ground-reflection law acting on sampled downward intensities.
pub trait AlbedoOperator {
    /// Upward intensity produced from the downward samples `f` on `(mu, w)`.
    fn apply(&self, mu: &[f64], w: &[f64], f: &[f64]) -> Vec<f64>;
}

/// Mirror a fraction `alpha` of each ray and re-emit the captured remainder
/// diffusely with emission pattern `∝ 1`, fed by the `μ^p`-weighted inflow:
///
/// ```text
/// (𝒜f)(μ) = α f(μ) + (1−α) · 2 Σ_r w_r μ_r^p f(μ_r) .
/// ```
///
/// At `p = 1` the diffuse branch re-emits exactly the captured flux, making
/// the operator flux-conserving for every `α`; `p > 1` under-emits (cold
/// ground sink). Exponents below 1 overweight grazing inflow and can
/// amplify — [`check_non_accretive`] flags them.
#[derive(Debug, Clone, Copy)]
pub struct SpecularDiffuse {
    pub alpha: f64,
    pub p: f64,
}

impl AlbedoOperator for SpecularDiffuse {
    fn apply(&self, mu: &[f64], w: &[f64], f: &[f64]) -> Vec<f64> {
        let inflow: f64 = mu
            .iter()
            .zip(w)
            .zip(f)
            .map(|((&m, &wt), &v)| wt * libm::pow(m, self.p) * v)
            .sum();
        let diffuse = (1.0 - self.alpha) * 2.0 * inflow;
        f.iter().map(|&v| self.alpha * v + diffuse).collect()
    }
}

/// Mirror a fraction `alpha` and replace the captured remainder by thermal
/// emission of the ground at temperature `t_e`, at the operator's frequency:
///
/// ```text
/// (𝒜f)(μ) = α f(μ) + (1−α) b_ν(t_e) .
/// ```
///
/// Affine in `f`: differences see only the `α`-mirror, so the operator is
/// strictly non-accretive for `α ≤ 1` regardless of how hot the ground is.
#[derive(Debug, Clone, Copy)]
pub struct ThermalAccommodation {
    pub alpha: f64,
    pub t_e: f64,
    pub nu: f64,
}

impl AlbedoOperator for ThermalAccommodation {
    fn apply(&self, _mu: &[f64], _w: &[f64], f: &[f64]) -> Vec<f64> {
        let emit = (1.0 - self.alpha) * planck(self.nu, self.t_e);
        f.iter().map(|&v| self.alpha * v + emit).collect()
    }
}

/// Plain gain — physical for `gain ≤ 1`, an amplifying (accretive)
/// counterexample for `gain > 1`. Exists so the checker itself can be
/// validated against an operator known to violate the inequality.
#[derive(Debug, Clone, Copy)]
pub struct Amplifier {
    pub gain: f64,
}

impl AlbedoOperator for Amplifier {
    fn apply(&self, _mu: &[f64], _w: &[f64], f: &[f64]) -> Vec<f64> {
        f.iter().map(|&v| self.gain * v).collect()
    }
}

/// Randomized non-accretivity probe: draw `n_pairs` pairs of nonnegative
/// boundary states on the `(mu, w)` nodes and return the minimum over pairs
/// of the flux-difference defect
///
/// ```text
/// D = Σ w μ (f₂−f₁)₊ − Σ w μ (𝒜f₂−𝒜f₁)₊ .
/// ```
///
/// Non-accretive operators keep `D ≥ 0` up to rounding; a negative return
/// well below roundoff exhibits a concrete amplifying pair. Deterministic
/// for a fixed `seed`.
pub fn check_non_accretive(
    op: &dyn AlbedoOperator,
    mu: &[f64],
    w: &[f64],
    n_pairs: usize,
    seed: u64,
) -> f64 {
    let n = mu.len();
    let mut rng = SplitMix64::new(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..n_pairs {
        let f1: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 2.0)).collect();
        let f2: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 2.0)).collect();
        let a1 = op.apply(mu, w, &f1);
        let a2 = op.apply(mu, w, &f2);
        let mut d = 0.0;
        for q in 0..n {
            let g = f2[q] - f1[q];
            let ag = a2[q] - a1[q];
            d += w[q] * mu[q] * (g.max(0.0) - ag.max(0.0));
        }
        if d < worst {
            worst = d;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::expint;

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        // n-point GL is exact through degree 2n−1 on the mapped interval.
        let (mu, w) = gauss_legendre_01(5);
        for k in 0..=9usize {
            let got: f64 = mu.iter().zip(&w).map(|(&m, &wt)| wt * m.powi(k as i32)).sum();
            let want = 1.0 / (k as f64 + 1.0);
            assert!(
                (got - want).abs() < 1e-14,
                "∫μ^{k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn quadrature_shape_and_normalization() {
        let (mu, w) = gauss_legendre_01(64);
        assert_eq!(mu.len(), 64);
        assert!(mu.windows(2).all(|p| p[0] < p[1]), "nodes ascend");
        assert!(mu[0] > 0.0 && mu[63] < 1.0, "nodes interior");
        let sw: f64 = w.iter().sum();
        let swm: f64 = mu.iter().zip(&w).map(|(&m, &wt)| wt * m).sum();
        assert!((sw - 1.0).abs() < 1e-13);
        assert!((swm - 0.5).abs() < 1e-13);
    }

    #[test]
    fn beam_moment_reproduces_exponential_integral() {
        // ½∫₀¹ μ e^{−x/μ} dμ = ½E₃(x): the decaying-beam identity that links
        // ray reconstruction to the kernel's E-function legs.
        let (mu, w) = gauss_legendre_01(64);
        for &x in &[0.1, 0.3, 1.0, 3.0] {
            let got: f64 = mu
                .iter()
                .zip(&w)
                .map(|(&m, &wt)| 0.5 * wt * m * (-x / m).exp())
                .sum();
            let want = 0.5 * expint(3, x).unwrap();
            assert!(
                (got - want).abs() < 1e-8 * want.max(1e-8),
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn specular_diffuse_conserves_flux_at_unit_exponent() {
        let (mu, w) = gauss_legendre_01(32);
        let f: Vec<f64> = mu.iter().map(|&m| 0.3 + m * m).collect();
        for &alpha in &[0.0, 0.4, 1.0] {
            let out = SpecularDiffuse { alpha, p: 1.0 }.apply(&mu, &w, &f);
            let flux_in: f64 = mu.iter().zip(&w).zip(&f).map(|((&m, &wt), &v)| wt * m * v).sum();
            let flux_out: f64 = mu.iter().zip(&w).zip(&out).map(|((&m, &wt), &v)| wt * m * v).sum();
            assert!(
                (flux_in - flux_out).abs() < 1e-14,
                "alpha={alpha}: {flux_in} vs {flux_out}"
            );
        }
    }

    #[test]
    fn physical_operators_pass_the_probe() {
        let (mu, w) = gauss_legendre_01(64);
        let sd = SpecularDiffuse { alpha: 0.3, p: 1.0 };
        let ta = ThermalAccommodation { alpha: 0.3, t_e: 288.0 / 4780.0, nu: 1.0 };
        assert!(check_non_accretive(&sd, &mu, &w, 300, 41) >= -1e-12);
        assert!(check_non_accretive(&ta, &mu, &w, 300, 42) >= -1e-12);
        // cold-sink exponent still fine
        let sink = SpecularDiffuse { alpha: 0.2, p: 2.0 };
        assert!(check_non_accretive(&sink, &mu, &w, 300, 43) >= -1e-12);
    }

    #[test]
    fn amplifier_is_caught() {
        let (mu, w) = gauss_legendre_01(64);
        let bad = Amplifier { gain: 1.5 };
        let worst = check_non_accretive(&bad, &mu, &w, 300, 44);
        assert!(worst < -1e-6, "amplifier slipped through: {worst}");
    }

    #[test]
    fn thermal_accommodation_differences_ignore_ground_heat() {
        let (mu, w) = gauss_legendre_01(16);
        let f1: Vec<f64> = mu.iter().map(|&m| m).collect();
        let f2: Vec<f64> = mu.iter().map(|&m| 2.0 * m * m).collect();
        let cold = ThermalAccommodation { alpha: 0.5, t_e: 0.06, nu: 1.0 };
        let hot = ThermalAccommodation { alpha: 0.5, t_e: 1.2, nu: 1.0 };
        for q in 0..16 {
            let dc = cold.apply(&mu, &w, &f2)[q] - cold.apply(&mu, &w, &f1)[q];
            let dh = hot.apply(&mu, &w, &f2)[q] - hot.apply(&mu, &w, &f1)[q];
            assert!((dc - dh).abs() < 1e-15);
        }
    }
}
