//! Radiative-equilibrium temperature recovery: at every depth node the
//! temperature balances absorbed against emitted power,
//!
//! ```text
//! ∫ κ_ν b_ν(T) dν  =  ∫ κ_ν J_ν dν .
//! ```
//!
//! The right side (`heating_rate`) integrates the mean intensity with the
//! node rule; the left side (`emission_integral`) evaluates the Planck
//! function at panel midpoints `ν_{j−½}` while keeping κ at the nodes —
//! precisely the discretization the nonlinear solver drives to machine
//! residual, so "balance" below always means this pair of rules.
//!
//! The scalar solve per node is a bisection bracket (factor-2 walk, then
//! halving to width 0.01) followed by Newton polishing to |residual| <
//! 1e−12, with an analytic Planck derivative. All arithmetic is generic in
//! the scalar, so a dual-number solve transports sensitivities through the
//! implicit temperature definition for free — the iteration path, being
//! driven by values only, is identical for plain and dual runs.

use crate::kernel::{Field, Problem};
use crate::scalar::Scalar;
use crate::special::{planck, planck_dt};
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Bisection bracket width at which Newton takes over.
pub const BISECT_WIDTH: f64 = 0.01;
/// Newton stops when the balance residual is below this.
pub const NEWTON_TOL: f64 = 1e-12;
/// Newton iteration cap; a node still unconverged here is flagged.
pub const NEWTON_MAX: usize = 50;
/// Derivative magnitudes below this are treated as stuck (no Newton step).
pub const DERIV_FLOOR: f64 = 1e-10;

/// Absorbed power at depth node `i`: `Σ_{j≥1} κ_j J_j(τ_i) Δν_j`.
pub fn heating_rate<S: Scalar>(p: &Problem<S>, g: &Field<S>, i: usize) -> S {
    let nu = p.spectral.nu();
    let mut acc = S::ZERO;
    for j in 1..nu.len() {
        acc += p.kappa[j] * g[j][i] * (nu[j] - nu[j - 1]);
    }
    acc
}

/// Emitted power at temperature `t`: `Σ_{j≥1} κ_j b(ν_{j−½}, t) Δν_j` with
/// the Planck function at panel midpoints.
pub fn emission_integral<S: Scalar>(p: &Problem<S>, t: S) -> S {
    let nu = p.spectral.nu();
    let mut acc = S::ZERO;
    for j in 1..nu.len() {
        let nu_mid = 0.5 * (nu[j] + nu[j - 1]);
        acc += p.kappa[j] * planck(nu_mid, t) * (nu[j] - nu[j - 1]);
    }
    acc
}

/// Temperature derivative of [`emission_integral`].
pub fn emission_derivative<S: Scalar>(p: &Problem<S>, t: S) -> S {
    let nu = p.spectral.nu();
    let mut acc = S::ZERO;
    for j in 1..nu.len() {
        let nu_mid = 0.5 * (nu[j] + nu[j - 1]);
        acc += p.kappa[j] * planck_dt(nu_mid, t) * (nu[j] - nu[j - 1]);
    }
    acc
}

/// The balance residual `rhs − emission_integral(T)` whose root defines the
/// equilibrium temperature. This is the quantity the solver drives below
/// [`NEWTON_TOL`]; tests of thermal closure should measure exactly this.
pub fn balance_residual<S: Scalar>(p: &Problem<S>, t: S, rhs: S) -> S {
    rhs - emission_integral(p, t)
}

/// Solve one node's balance for `T`: returns the temperature and a flag that
/// is true when Newton exhausted its iterations without reaching tolerance.
///
/// Nonpositive absorbed power has the vacuum solution `T = 0` (the Planck
/// emission is nonnegative, so no positive temperature can balance it).
pub fn solve_node<S: Scalar>(p: &Problem<S>, rhs: S, t_start: S) -> (S, bool) {
    if rhs.value() <= 0.0 {
        return (S::ZERO, false);
    }

    // Bracket the root. The residual rhs − emission(T) decreases in T: it is
    // +rhs at T → 0 (emission vanishes below the cold cutoff) and eventually
    // negative. Halve down while the residual is negative (T above the
    // root), then double up while it is positive (T below), leaving
    // t0 ≤ root ≤ t1. Comparisons see values only, so the dual path is the
    // value path.
    let mut t0 = t_start.max(S::from_f64(0.1));
    let mut guard = 0;
    while balance_residual(p, t0, rhs).value() < 0.0 {
        t0 = t0 * 0.5;
        guard += 1;
        if guard > 1200 {
            break; // emission is exactly 0 below the cold cutoff; unreachable
        }
    }
    let mut t1 = t0 * 2.0;
    guard = 0;
    while balance_residual(p, t1, rhs).value() > 0.0 {
        t1 = t1 * 2.0;
        guard += 1;
        if guard > 1200 {
            break; // would need rhs beyond f64 range
        }
    }

    while (t1 - t0).value() > BISECT_WIDTH {
        let mid = (t0 + t1) * 0.5;
        if balance_residual(p, mid, rhs).value() > 0.0 {
            t0 = mid; // emission still below rhs: root is above
        } else {
            t1 = mid;
        }
    }

    // Newton polishing with the analytic derivative.
    let mut t = (t0 + t1) * 0.5;
    let mut flagged = true;
    for _ in 0..NEWTON_MAX {
        let presfunc = balance_residual(p, t, rhs);
        if libm::fabs(presfunc.value()) < NEWTON_TOL {
            flagged = false;
            break;
        }
        let deriv = emission_derivative(p, t);
        if libm::fabs(deriv.value()) > DERIV_FLOOR {
            t += presfunc / deriv;
        } else {
            break; // cannot move: leave flagged
        }
    }
    (t, flagged)
}

/// Solve the balance at every depth node, warm-starting each from the
/// previous iterate's temperature. Returns the profile and the number of
/// flagged (unconverged) nodes.
pub fn solve_profile<S: Scalar>(p: &Problem<S>, g: &Field<S>, t_prev: &[S]) -> (Vec<S>, usize) {
    let n = p.optical.len();
    let mut temp = Vec::with_capacity(n);
    let mut flagged = 0;
    for i in 0..n {
        let rhs = heating_rate(p, g, i);
        let (t, flag) = solve_node(p, rhs, t_prev[i]);
        if flag {
            flagged += 1;
        }
        temp.push(t);
    }
    (temp, flagged)
}

/// Closed-form temperature for a frequency-independent κ: the balance
/// reduces to `π⁴T⁴/15 = ∫J dν`, so
///
/// ```text
/// T_i = (15 Σ_{j≥1} J_j(τ_i) Δν_j)^{1/4} / π .
/// ```
///
/// Exact only in the grey limit and under the node integration rule; used
/// as an independent check on the bracketed Newton solve.
pub fn grey_closed_form<S: Scalar>(p: &Problem<S>, g: &Field<S>) -> Vec<S> {
    let nu = p.spectral.nu();
    let n = p.optical.len();
    (0..n)
        .map(|i| {
            let mut acc = S::ZERO;
            for j in 1..nu.len() {
                acc += g[j][i] * (nu[j] - nu[j - 1]);
            }
            if acc.value() <= 0.0 {
                S::ZERO
            } else {
                (acc * 15.0).sqrt().sqrt() * (1.0 / PI)
            }
        })
        .collect()
}
