//! Independent numerical oracles for the atmoray test suites.
//!
//! Nothing in here shares code (or algorithmic choices) with the crate under
//! test: the exponential integrals are evaluated by adaptive quadrature of
//! their defining integrals rather than by the production series/recurrence,
//! so agreement between the two is meaningful evidence. Everything here is
//! allowed to be slow.

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol` (standard halving with the /15 Richardson error estimate).
///
/// Panics if `b < a`. Depth is capped at 60 halvings, far beyond anything the
/// smooth integrands in this crate need; hitting the cap means the caller's
/// integrand is broken, so the partial result is returned rather than looping
/// forever.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    assert!(b >= a, "adaptive_simpson: inverted interval [{a}, {b}]");
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_refine(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Exponential integral `E_p(t)` by quadrature of its defining integral,
/// for `p ≥ 1` and `t ≥ 0`.
///
/// * `p ≥ 2` uses `E_p(t) = ∫₀¹ e^{−t/μ} μ^{p−2} dμ` directly (the integrand
///   vanishes to all orders at μ→0 when t > 0, and is a plain polynomial when
///   t = 0).
/// * `p = 1` has an integrable singularity in that form, so it uses the
///   equivalent `E₁(t) = ∫_t^∞ e^{−s}/s ds`, truncated at `t + 60` where the
///   tail is below 1e−26 of everything we compare against.
///
/// Accuracy is ~1e−12 absolute, an order of magnitude beyond the tightest
/// tolerance any test asserts with it.
pub fn expint_oracle(p: u32, t: f64) -> f64 {
    assert!(t >= 0.0, "expint_oracle: negative argument {t}");
    assert!(p >= 1, "expint_oracle: order must be >= 1");
    if p == 1 {
        assert!(t > 0.0, "E_1 diverges at t = 0");
        return adaptive_simpson(&|s: f64| (-s).exp() / s, t, t + 60.0, 1e-13);
    }
    if t == 0.0 {
        return 1.0 / (p as f64 - 1.0);
    }
    let pm2 = p as i32 - 2;
    adaptive_simpson(
        &|mu: f64| {
            if mu <= 0.0 {
                0.0
            } else {
                (-t / mu).exp() * mu.powi(pm2)
            }
        },
        0.0,
        1.0,
        1e-13,
    )
}

/// `∫_{c0}^{c1} E_p(κ|τ − t|) dt`, exactly (up to the oracle's own 1e−12),
/// via the antiderivative `E_{p+1}' = −E_p` with the cell split at `t = τ`
/// when it straddles the kink.
///
/// This is the building block for brute-forcing the transport kernel on
/// piecewise-constant source data.
pub fn kernel_cell_integral(p: u32, kappa: f64, tau: f64, c0: f64, c1: f64) -> f64 {
    assert!(c1 >= c0);
    assert!(kappa > 0.0);
    if c1 > tau && c0 < tau {
        return kernel_cell_integral(p, kappa, tau, c0, tau)
            + kernel_cell_integral(p, kappa, tau, tau, c1);
    }
    let ep1 = |u: f64| expint_oracle(p + 1, kappa * u.abs());
    if c1 <= tau {
        // t below τ: d/dt E_{p+1}(κ(τ−t)) = +κ E_p(κ(τ−t))
        (ep1(tau - c1) - ep1(tau - c0)) / kappa
    } else {
        // t above τ: d/dt E_{p+1}(κ(t−τ)) = −κ E_p(κ(t−τ))
        (ep1(c0 - tau) - ep1(c1 - tau)) / kappa
    }
}

/// `∫_{c0}^{c1} E_p(κ(τ + t)) dt` (the reflected/albedo kernel leg), exact up
/// to the oracle tolerance. Requires `τ, c0 ≥ 0` so the argument stays
/// nonnegative.
pub fn albedo_cell_integral(p: u32, kappa: f64, tau: f64, c0: f64, c1: f64) -> f64 {
    assert!(c1 >= c0);
    assert!(tau >= 0.0 && c0 >= 0.0);
    assert!(kappa > 0.0);
    let ep1 = |u: f64| expint_oracle(p + 1, kappa * u);
    (ep1(tau + c0) - ep1(tau + c1)) / kappa
}

/// Central finite difference `(f(x+h) − f(x−h)) / 2h`.
pub fn central_diff(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// 200 logarithmically spaced points in `[lo, hi]` (inclusive endpoints),
/// the standard sweep the special-function comparisons run over.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        // Simpson is exact through cubics; the adaptive wrapper must not
        // break that.
        let got = adaptive_simpson(&|x| 3.0 * x * x * x - x + 2.0, -1.0, 2.0, 1e-14);
        let want = 3.0 / 4.0 * (16.0 - 1.0) - 0.5 * (4.0 - 1.0) + 2.0 * 3.0;
        assert!(
            (got - want).abs() < 1e-12,
            "cubic: got {got}, want {want}"
        );
    }

    #[test]
    fn simpson_handles_sharp_exponential() {
        let got = adaptive_simpson(&|x: f64| (-50.0 * x).exp(), 0.0, 2.0, 1e-13);
        let want = (1.0 - (-100.0f64).exp()) / 50.0;
        assert!(
            (got - want).abs() < 1e-12,
            "exp decay: got {got}, want {want}"
        );
    }

    #[test]
    fn oracle_matches_reference_values() {
        // E1(1) from standard tables; E2(0), E3(0) analytic.
        let e1_1 = expint_oracle(1, 1.0);
        assert!(
            (e1_1 - 0.219_383_934_395_520_3).abs() < 1e-12,
            "E1(1) = {e1_1}"
        );
        assert!((expint_oracle(2, 0.0) - 1.0).abs() < 1e-15);
        assert!((expint_oracle(3, 0.0) - 0.5).abs() < 1e-15);
        // E2(t) = e^{−t} − t·E1(t), checked with both sides from the oracle.
        for &t in &[1e-6, 0.02, 0.7, 3.0, 15.0] {
            let lhs = expint_oracle(2, t);
            let rhs = (-t).exp() - t * expint_oracle(1, t);
            assert!(
                (lhs - rhs).abs() < 5e-12,
                "recurrence at t={t}: lhs {lhs} rhs {rhs}"
            );
        }
    }

    #[test]
    fn cell_integrals_match_midpoint_quadrature_on_smooth_cells() {
        // Away from the kink a dense midpoint rule converges to the same
        // number; the antiderivative route must agree.
        let (kappa, tau, c0, c1) = (0.6, 0.3, 0.5, 0.62);
        for p in [1u32, 3, 5] {
            let exact = kernel_cell_integral(p, kappa, tau, c0, c1);
            let n = 20_000;
            let dt = (c1 - c0) / n as f64;
            let mut s = 0.0;
            for k in 0..n {
                let t = c0 + (k as f64 + 0.5) * dt;
                s += expint_oracle(p, kappa * (t - tau).abs()) * dt;
            }
            assert!(
                (exact - s).abs() < 1e-9,
                "p={p}: antiderivative {exact} vs midpoint {s}"
            );
        }
    }

    #[test]
    fn cell_integral_splits_across_the_kink() {
        let (kappa, tau) = (0.5, 0.4);
        let whole = kernel_cell_integral(1, kappa, tau, 0.1, 0.9);
        let split = kernel_cell_integral(1, kappa, tau, 0.1, 0.4)
            + kernel_cell_integral(1, kappa, tau, 0.4, 0.9);
        assert!((whole - split).abs() < 1e-12);
    }
}
