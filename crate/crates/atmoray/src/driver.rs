//! The outer fixed-point iteration coupling radiation and temperature, and a
//! frequency-integrated single-group solver used for cross-checks and for
//! perturbed-grid studies.
//!
//! Each outer sweep recomputes the full radiation field from the current
//! temperature (one kernel application per frequency row), then re-solves
//! radiative equilibrium at every depth node from the fresh field. Starting
//! from `T ≡ 0`, `J = S2 ≡ 0`, the first sweep deposits the pure boundary
//! source and the iteration relaxes toward the self-consistent state; the
//! default 16 sweeps track the coupled map well past visual convergence on
//! the standard configuration (the probe trace in the report shows the
//! remaining drift).

use crate::albedo::gauss_legendre_01;
use crate::kernel::{update_field, Field, KernelWorkspace, Problem, QuadratureConfig};
use crate::scalar::Scalar;
use crate::special::expint;
use crate::thermal::solve_profile;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

/// Outer-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveControl {
    /// Number of coupled sweeps (default 16).
    pub k_max: usize,
    /// Stop earlier once the sup-norm temperature change of a sweep falls
    /// below this (None: always run `k_max` sweeps, the reference behavior).
    pub early_stop: Option<f64>,
    /// Depth node whose temperature is recorded per sweep (default 2).
    pub probe_node: usize,
}

impl Default for SolveControl {
    fn default() -> Self {
        SolveControl {
            k_max: 16,
            early_stop: None,
            probe_node: 2,
        }
    }
}

/// Solve-time failures (assembly problems are caught at problem build).
#[derive(Debug, Clone, PartialEq)]
pub enum DriverError {
    /// Control parameters out of range for this problem.
    BadControl { what: &'static str },
    /// A non-finite temperature appeared (diverging configuration).
    NonFinite { iteration: usize, node: usize },
}

impl fmt::Display for DriverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverError::BadControl { what } => write!(f, "bad solve control: {what}"),
            DriverError::NonFinite { iteration, node } => write!(
                f,
                "temperature became non-finite at sweep {iteration}, node {node}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DriverError {}

/// A converged (or `k_max`-swept) coupled state.
#[derive(Debug, Clone)]
pub struct Solution<S: Scalar> {
    /// Mean intensity `J_j(τ_i)`, indexed `[j][i]`.
    pub g: Field<S>,
    /// Second angular moment source `S2_j(τ_i)`, indexed `[j][i]`.
    pub s2: Field<S>,
    /// Equilibrium temperature per depth node.
    pub temperature: Vec<S>,
}

/// Per-sweep diagnostics of a coupled solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Sweeps actually run.
    pub iterations: usize,
    /// `ΣΣ|J|` after each sweep.
    pub g_norms: Vec<f64>,
    /// `ΣΣ|S2|` after each sweep.
    pub s2_norms: Vec<f64>,
    /// Temperature at the probe node after each sweep.
    pub probe_trace: Vec<f64>,
    /// Sup-norm temperature change of the last sweep.
    pub sup_diff_final: f64,
    /// Thermal nodes still unconverged after the final sweep.
    pub flagged_nodes: usize,
    /// Wall-clock time of the whole solve (0 when no clock is available).
    pub wall_seconds: f64,
}

fn field_norm<S: Scalar>(f: &Field<S>) -> f64 {
    let mut acc = 0.0;
    for row in f {
        for v in row {
            acc += libm::fabs(v.value());
        }
    }
    acc
}

/// Run the coupled radiation–temperature fixed point on `p`.
///
/// Generic over the scalar: an `f64` problem gives the plain solve, a dual
/// problem transports parameter sensitivities through every sweep. The
/// iteration path (branches, sweep count) depends only on scalar values, so
/// both walks are step-for-step identical.
pub fn fixed_point_solve<S: Scalar + Send + Sync>(
    p: &Problem<S>,
    control: &SolveControl,
) -> Result<(Solution<S>, SolveReport), DriverError> {
    if control.k_max == 0 {
        return Err(DriverError::BadControl {
            what: "k_max must be at least 1",
        });
    }
    if control.probe_node >= p.optical.len() {
        return Err(DriverError::BadControl {
            what: "probe_node outside the depth grid",
        });
    }

    #[cfg(feature = "std")]
    let clock = std::time::Instant::now();

    let ws = KernelWorkspace::new(p);
    let n_tau = p.optical.len();
    let n_nu = p.spectral.len();

    let mut g: Field<S> = vec![vec![S::ZERO; n_tau]; n_nu];
    let mut s2: Field<S> = vec![vec![S::ZERO; n_tau]; n_nu];
    let mut temp: Vec<S> = vec![S::ZERO; n_tau];

    let mut report = SolveReport {
        iterations: 0,
        g_norms: Vec::with_capacity(control.k_max),
        s2_norms: Vec::with_capacity(control.k_max),
        probe_trace: Vec::with_capacity(control.k_max),
        sup_diff_final: f64::INFINITY,
        flagged_nodes: 0,
        wall_seconds: 0.0,
    };

    for k in 0..control.k_max {
        let (g_new, s2_new) = update_field(p, &ws, &temp, &g, &s2);
        g = g_new;
        s2 = s2_new;

        let (temp_new, flagged) = solve_profile(p, &g, &temp);
        let mut sup = 0.0f64;
        for (i, t) in temp_new.iter().enumerate() {
            let tv = t.value();
            if !tv.is_finite() {
                return Err(DriverError::NonFinite { iteration: k, node: i });
            }
            sup = sup.max(libm::fabs(tv - temp[i].value()));
        }
        temp = temp_new;

        report.iterations = k + 1;
        report.g_norms.push(field_norm(&g));
        report.s2_norms.push(field_norm(&s2));
        report.probe_trace.push(temp[control.probe_node].value());
        report.sup_diff_final = sup;
        report.flagged_nodes = flagged;

        if let Some(eps) = control.early_stop {
            if sup < eps {
                break;
            }
        }
    }

    #[cfg(feature = "std")]
    {
        report.wall_seconds = clock.elapsed().as_secs_f64();
    }

    Ok((
        Solution {
            g,
            s2,
            temperature: temp,
        },
        report,
    ))
}

/// A converged frequency-integrated (single-group) state on an arbitrary
/// strictly increasing depth-node set.
///
/// For a frequency-independent κ in radiative equilibrium, the integrated
/// Planck source equals the integrated mean intensity node by node, so the
/// transfer closes on `J̄` alone:
///
/// ```text
/// J̄(τ) = ½ Q̄⁰ E₃(κτ) + (κ/2) ∫₀^Z E₁(κ|τ−t|) J̄(t) dt ,
/// ```
///
/// a linear fixed point (ground-emitted beam `I(0,+μ) = μQ̄⁰`, dark top).
/// Temperatures follow from `π⁴T⁴/15 = J̄`.
#[derive(Debug, Clone)]
pub struct GreySolution {
    pub nodes: Vec<f64>,
    pub kappa: f64,
    /// Frequency-integrated ground beam strength `Q̄⁰`.
    pub q0_total: f64,
    pub quad: QuadratureConfig,
    pub j_bar: Vec<f64>,
    pub temp: Vec<f64>,
}

/// Left-node cell index for `t` on an arbitrary increasing node set.
fn cell_of_nodes(nodes: &[f64], t: f64) -> usize {
    let k = nodes.partition_point(|&x| x <= t);
    k.saturating_sub(1).min(nodes.len() - 1)
}

/// Solve the single-group fixed point on `nodes` (first node must be 0; the
/// last node is the domain top). Iterates at most `k_max` sweeps, stopping
/// early once the sweep changes nothing at f64 resolution.
pub fn grey_fixed_point(
    nodes: &[f64],
    kappa: f64,
    q0_total: f64,
    quad: &QuadratureConfig,
    k_max: usize,
) -> GreySolution {
    assert!(nodes.len() >= 2 && nodes[0] == 0.0, "need nodes starting at 0");
    assert!(
        nodes.windows(2).all(|w| w[1] > w[0]),
        "nodes must increase strictly"
    );
    let z = *nodes.last().unwrap();
    assert!(
        kappa > 0.0 && kappa * 2.0 * z <= crate::special::EXPINT_MAX_ARG,
        "kappa outside the series-safe range"
    );
    let n = nodes.len();
    let tg = crate::kernel::t_grid(quad, 0.0, z);
    let cells: Vec<usize> = tg.t.iter().map(|&t| cell_of_nodes(nodes, t)).collect();

    // Source and kernel matrix are fixed; precompute both.
    let src: Vec<f64> = nodes
        .iter()
        .map(|&tau| 0.5 * q0_total * expint(3, kappa * tau).expect("kappa range checked"))
        .collect();
    let mut w1 = vec![0.0f64; n * tg.t.len()];
    for i in 0..n {
        for (k, &t) in tg.t.iter().enumerate() {
            w1[i * tg.t.len() + k] =
                expint(1, kappa * libm::fabs(nodes[i] - t)).expect("kappa range checked");
        }
    }

    let mut j_bar = vec![0.0f64; n];
    for _ in 0..k_max {
        let j_at: Vec<f64> = cells.iter().map(|&c| j_bar[c]).collect();
        let mut sup = 0.0f64;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let row = &w1[i * tg.t.len()..(i + 1) * tg.t.len()];
            let mut acc = 0.0;
            for (k, &jv) in j_at.iter().enumerate() {
                acc += row[k] * jv;
            }
            let v = src[i] + 0.5 * kappa * tg.dt * acc;
            sup = sup.max(libm::fabs(v - j_bar[i]));
            next.push(v);
        }
        j_bar = next;
        if sup == 0.0 {
            break;
        }
    }

    let temp = j_bar
        .iter()
        .map(|&j| {
            if j <= 0.0 {
                0.0
            } else {
                libm::sqrt(libm::sqrt(15.0 * j)) / PI
            }
        })
        .collect();
    GreySolution {
        nodes: nodes.to_vec(),
        kappa,
        q0_total,
        quad: *quad,
        j_bar,
        temp,
    }
}

/// Directional intensity of a single-group solution at node `i`, direction
/// `μ` (positive up), reconstructed on the solver's own cells and step so
/// its angular moments are consistent with `j_bar` to quadrature accuracy.
pub fn grey_reconstruct(sol: &GreySolution, i: usize, mu: f64) -> f64 {
    assert!(mu != 0.0, "grey_reconstruct: grazing ray");
    let tau = sol.nodes[i];
    let z = *sol.nodes.last().unwrap();
    let kappa = sol.kappa;
    let mu_abs = libm::fabs(mu);
    let (lo, hi, boundary) = if mu > 0.0 {
        (0.0, tau, mu * sol.q0_total * libm::exp(-kappa * tau / mu))
    } else {
        (tau, z, 0.0) // dark top
    };
    let mut val = boundary;
    if hi > lo {
        let tg = crate::kernel::t_grid(&sol.quad, lo, hi);
        let mut acc = 0.0;
        for &t in &tg.t {
            let c = cell_of_nodes(&sol.nodes, t);
            acc += libm::exp(-kappa * libm::fabs(tau - t) / mu_abs) * sol.j_bar[c];
        }
        val += acc * kappa * tg.dt / mu_abs;
    }
    val
}

/// Quadratic energy balance of a single-group solution: scattering-free
/// transfer obeys the exact identity
///
/// ```text
/// κ·V + ½Σ_q w_q μ_q I(Z,+μ_q)² + ½Σ_q w_q μ_q I(0,−μ_q)²
///     = ½Σ_q w_q μ_q (μ_q Q̄⁰)² ,
/// V = ∫₀^Z Σ_q w_q [(I(τ,+μ_q)−Ĵ(τ))² + (I(τ,−μ_q)−Ĵ(τ))²] dτ ,
/// ```
///
/// with `Ĵ = ½Σ w (I₊+I₋)` the reconstructed mean: all the squared input
/// flux either leaks out through the boundaries or is dissipated by the
/// relaxation of `I` toward isotropy. Returns the relative residual
/// `|lhs − rhs|/rhs` as measured with `gl_n`-point Gauss–Legendre angles and
/// trapezoidal depth weights on the solution's own nodes; it vanishes only
/// in the continuum limit, so its size gauges the discretization error.
pub fn energy_identity_check(sol: &GreySolution, gl_n: usize) -> f64 {
    let (mu, w) = gauss_legendre_01(gl_n);
    let n = sol.nodes.len();
    let z = *sol.nodes.last().unwrap();

    let mut rhs = 0.0;
    let mut top_out = 0.0;
    let mut ground_down = 0.0;
    for q in 0..gl_n {
        let input = mu[q] * sol.q0_total;
        rhs += 0.5 * w[q] * mu[q] * input * input;
        let it = grey_reconstruct(sol, n - 1, mu[q]);
        top_out += 0.5 * w[q] * mu[q] * it * it;
        let ib = grey_reconstruct(sol, 0, -mu[q]);
        ground_down += 0.5 * w[q] * mu[q] * ib * ib;
    }

    let mut v = 0.0;
    for i in 0..n {
        // trapezoid weight of node i on the (possibly nonuniform) node set
        let left = if i == 0 { sol.nodes[0] } else { sol.nodes[i - 1] };
        let right = if i == n - 1 { z } else { sol.nodes[i + 1] };
        let w_tau = 0.5 * (right - left);

        let up: Vec<f64> = mu.iter().map(|&m| grey_reconstruct(sol, i, m)).collect();
        let down: Vec<f64> = mu.iter().map(|&m| grey_reconstruct(sol, i, -m)).collect();
        let j_rec: f64 = (0..gl_n).map(|q| 0.5 * w[q] * (up[q] + down[q])).sum();
        let var: f64 = (0..gl_n)
            .map(|q| {
                let du = up[q] - j_rec;
                let dd = down[q] - j_rec;
                w[q] * (du * du + dd * dd)
            })
            .sum();
        v += w_tau * var;
    }

    let lhs = sol.kappa * v + top_out + ground_down;
    libm::fabs(lhs - rhs) / rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::{GroundMode, OpticalGrid};
    use crate::spectral::SpectralGrid;

    fn tiny_problem() -> Problem<f64> {
        let mut b = crate::atmosphere::BoundaryConfig::default();
        b.earth_albedo = 0.0;
        b.ground_mode = GroundMode::Plain;
        Problem::builder(SpectralGrid::wavelength_uniform(24, 0.05, 15.0).unwrap())
            .kappa_grey(0.5)
            .optical(OpticalGrid::new(12, 12.0).unwrap())
            .boundary(b)
            .build()
            .unwrap()
    }

    #[test]
    fn control_validation() {
        let p = tiny_problem();
        let bad = SolveControl {
            k_max: 0,
            ..SolveControl::default()
        };
        assert!(matches!(
            fixed_point_solve(&p, &bad),
            Err(DriverError::BadControl { .. })
        ));
        let bad = SolveControl {
            probe_node: 99,
            ..SolveControl::default()
        };
        assert!(matches!(
            fixed_point_solve(&p, &bad),
            Err(DriverError::BadControl { .. })
        ));
    }

    #[test]
    fn iteration_settles_and_reports() {
        let p = tiny_problem();
        let (sol, report) = fixed_point_solve(&p, &SolveControl::default()).unwrap();
        assert_eq!(report.iterations, 16);
        assert_eq!(report.g_norms.len(), 16);
        assert_eq!(report.flagged_nodes, 0);
        // Sunlit ground: every temperature positive, profile decreasing
        // upward once away from the ground.
        assert!(sol.temperature.iter().all(|&t| t > 0.0));
        assert!(sol.temperature[0] > sol.temperature[11]);
        // The last sweeps change almost nothing (contraction ≈ 0.5/sweep).
        assert!(report.sup_diff_final < 1e-4, "sup {}", report.sup_diff_final);
        // norms are recorded and positive
        assert!(report.g_norms[15] > 0.0 && report.s2_norms[15] > 0.0);
        assert!(report.wall_seconds >= 0.0);
    }

    #[test]
    fn early_stop_cuts_the_sweep_count() {
        let p = tiny_problem();
        let control = SolveControl {
            k_max: 60,
            early_stop: Some(1e-10),
            probe_node: 2,
        };
        let (_, report) = fixed_point_solve(&p, &control).unwrap();
        assert!(report.iterations < 60, "ran {}", report.iterations);
        assert!(report.sup_diff_final < 1e-10);
    }

    #[test]
    fn dual_constant_problem_matches_plain_solve_bitwise() {
        use crate::sensitivity::DualScalar;
        let p = tiny_problem();
        let (sol, _) = fixed_point_solve(&p, &SolveControl::default()).unwrap();
        let dual_p = p.map_kappa(|_, k| DualScalar::constant(k));
        let (dual_sol, _) = fixed_point_solve(&dual_p, &SolveControl::default()).unwrap();
        for i in 0..p.optical.len() {
            assert_eq!(sol.temperature[i].to_bits(), dual_sol.temperature[i].val.to_bits());
            assert_eq!(dual_sol.temperature[i].der, 0.0);
        }
    }

    #[test]
    fn grey_solver_runs_on_nonuniform_nodes() {
        // Same physical setup on the uniform grid and on a deliberately
        // jittered copy of it: profiles must agree where the nodes coincide.
        let g = OpticalGrid::new(40, 12.0).unwrap();
        let uniform = grey_fixed_point(g.tau(), 0.5, 1.0, &QuadratureConfig::default(), 40);
        let mut jittered: Vec<f64> = g.tau().to_vec();
        for i in 1..jittered.len() - 1 {
            if i % 2 == 0 {
                jittered[i] += 0.1 * (jittered[i + 1] - jittered[i]);
            }
        }
        let jit = grey_fixed_point(&jittered, 0.5, 1.0, &QuadratureConfig::default(), 40);
        for i in (1..39).step_by(2) {
            let rel = (uniform.temp[i] - jit.temp[i]).abs() / uniform.temp[i];
            assert!(rel < 2e-2, "node {i}: {} vs {}", uniform.temp[i], jit.temp[i]);
        }
        // Temperature decreases away from the lit ground.
        assert!(uniform.temp[0] > uniform.temp[39]);
    }

    #[test]
    fn grey_reconstruct_moments_match_j_bar() {
        let g = OpticalGrid::new(30, 12.0).unwrap();
        let sol = grey_fixed_point(g.tau(), 0.5, 1.0, &QuadratureConfig::default(), 40);
        let (mu, w) = gauss_legendre_01(64);
        for i in [1, 10, 20, 28] {
            let j_rec: f64 = mu
                .iter()
                .zip(&w)
                .map(|(&m, &wt)| {
                    0.5 * wt * (grey_reconstruct(&sol, i, m) + grey_reconstruct(&sol, i, -m))
                })
                .sum();
            let rel = (j_rec - sol.j_bar[i]).abs() / sol.j_bar[i];
            assert!(rel < 2e-3, "node {i}: recon {} vs {}", j_rec, sol.j_bar[i]);
        }
    }

    #[test]
    fn energy_identity_residual_is_small() {
        let g = OpticalGrid::new(30, 12.0).unwrap();
        let sol = grey_fixed_point(g.tau(), 0.5, 1.0, &QuadratureConfig::default(), 40);
        let res = energy_identity_check(&sol, 32);
        assert!(res < 0.05, "energy residual {res}");
    }
}
