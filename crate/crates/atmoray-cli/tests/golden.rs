//! Byte-level pins for every experiment at reduced resolution.
//!
//! Each case renders its files in memory and compares them byte-for-byte
//! against the committed copies under `tests/golden/`. Any numeric drift —
//! a reordered reduction, a changed constant, a different rounding — shows
//! up as a diff even when it is far below every physical tolerance. After
//! an *intended* change, regenerate with
//!
//! ```text
//! UPDATE_GOLDEN=1 cargo test -p atmoray-cli --test golden
//! ```
//!
//! and review the diff like any other code change.

use atmoray_cli::config::RunConfig;
use atmoray_cli::experiments::{
    run_albedo, run_grey, run_prop2, run_sensitivity, run_signmap, run_solve, OutputFile,
};
use atmoray_cli::tsv;
use std::path::PathBuf;

/// Cheap configuration: coarse in depth and frequency, few sweeps. The pins
/// only care that the numbers are *reproduced*, not that they are converged.
fn reduced() -> RunConfig {
    RunConfig {
        n_tau: 24,
        jmax: 80,
        k_max: 8,
        ..RunConfig::default()
    }
}

fn golden_dir(case: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(case)
}

fn check_case(case: &str, files: &[OutputFile]) {
    let dir = golden_dir(case);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(&dir).unwrap();
        for f in files {
            std::fs::write(dir.join(&f.name), &f.content).unwrap();
        }
        println!("[golden] {case}: wrote {} file(s)", files.len());
        return;
    }
    for f in files {
        let path = dir.join(&f.name);
        let want = std::fs::read_to_string(&path).unwrap_or_else(|e| {
            panic!(
                "missing golden file {} ({e}); run with UPDATE_GOLDEN=1 to seed",
                path.display()
            )
        });
        assert!(
            f.content == want,
            "{case}/{}: output differs from committed golden file",
            f.name
        );
        // The format promises lossless round-trips: re-reading and
        // re-rendering must reproduce the bytes exactly.
        let rows = tsv::parse_table(&f.content).unwrap();
        assert_eq!(
            tsv::format_table(&rows),
            f.content,
            "{case}/{}: TSV round-trip not byte-stable",
            f.name
        );
        println!("[golden] {case}/{}: {} bytes match", f.name, f.content.len());
    }
}

#[test]
fn grey_profile() {
    check_case("grey", &run_grey(&reduced()).unwrap());
}

#[test]
fn boundary_transfer_profiles() {
    check_case("prop2", &run_prop2(&reduced(), false).unwrap());
}

#[test]
fn boundary_transfer_profiles_program_band() {
    check_case("prop2_listing", &run_prop2(&reduced(), true).unwrap());
}

#[test]
fn albedo_profiles() {
    check_case("albedo", &run_albedo(&reduced()).unwrap());
}

#[test]
fn band_sensitivity_columns() {
    check_case("sensitivity", &run_sensitivity(&reduced()).unwrap());
}

#[test]
fn heating_sign_map() {
    check_case("signmap", &run_signmap(&reduced()).unwrap());
}

#[test]
fn default_solve_profile() {
    check_case("solve", &run_solve(&reduced(), None, 1).unwrap());
}
