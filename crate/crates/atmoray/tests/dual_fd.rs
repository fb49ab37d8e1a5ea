//! Forward-mode sensitivities carried through the whole fixed-point solve
//! against central finite differences of the same solve. Small grids keep
//! the runtime down; the full-resolution check lives in the experiment
//! harness acceptance suite.

use atmoray::driver::SolveControl;
use atmoray::sensitivity::{finite_difference_check, sensitivity_run};
use atmoray::{BoundaryConfig, Problem, SpectralGrid};

fn base_problem() -> Problem<f64> {
    let grid = SpectralGrid::wavelength_uniform(80, 0.05, 15.0).unwrap();
    Problem::builder(grid)
        .kappa_banded(0.05, 0.5, 0.0, 6.0)
        .optical(atmoray::OpticalGrid::new(20, 12.0).unwrap())
        .boundary(BoundaryConfig::default())
        .build()
        .unwrap()
}

#[test]
fn dual_band_derivative_matches_central_differences() {
    let p = base_problem();
    let control = SolveControl {
        k_max: 8,
        ..SolveControl::default()
    };
    let run = sensitivity_run(&p, 0.3, 0.4, &control).unwrap();
    assert_eq!(run.report.flagged_nodes, 0);

    let fd = finite_difference_check(&p, 0.3, 0.4, 1e-3, &control).unwrap();
    assert_eq!(fd.len(), run.dtemperature.len());

    let mut checked = 0usize;
    for i in 0..fd.len() {
        let dual = run.dtemperature[i];
        if dual.abs() <= 1e-6 {
            continue;
        }
        let rel = (dual - fd[i]).abs() / dual.abs();
        assert!(
            rel < 1e-3,
            "node {i}: dual {dual:.6e} vs fd {:.6e} (rel {rel:.2e})",
            fd[i]
        );
        checked += 1;
    }
    // The band heats the lower atmosphere; the derivative must not be
    // uniformly negligible or the comparison checked nothing.
    assert!(checked > 5, "only {checked} nodes carried signal");
}

#[test]
fn zero_width_band_keeps_value_path_and_kills_derivative() {
    let p = base_problem();
    let control = SolveControl {
        k_max: 4,
        ..SolveControl::default()
    };
    // A band outside the grid range seeds nothing: derivative identically 0,
    // values identical to the plain f64 solve.
    let run = sensitivity_run(&p, 40.0, 41.0, &control).unwrap();
    let (plain, _) = atmoray::driver::fixed_point_solve(&p, &control).unwrap();
    for i in 0..run.temperature.len() {
        assert_eq!(run.temperature[i], plain.temperature[i]);
        assert_eq!(run.dtemperature[i], 0.0);
    }
}
