use anyhow::Result;
use atmoray_cli::config::{Overrides, RunConfig};
use atmoray_cli::experiments::{
    run_albedo, run_grey, run_prop1_check, run_prop2, run_sensitivity, run_signmap, run_solve,
    write_outputs, OutputFile,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Deterministic radiative-transfer experiments for a stratified atmosphere.
#[derive(Parser)]
#[command(name = "atmoray", version, about)]
struct Cli {
    /// TOML configuration file (flags override its values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Grey reference run: flat κ, plain ground source → grey.tsv.
    Grey,
    /// Boundary-condition transfer study → T0.tsv … T5.tsv.
    Prop2 {
        /// Use the reference listing's absorption band (base 0.1, edge ν=6)
        /// instead of the plotted one (base 0.05, edge ν=3).
        #[arg(long)]
        listing_kappa: bool,
    },
    /// Ground-albedo study on the banded atmosphere → four albedo_*.tsv.
    Albedo,
    /// Sign map of the heating/cooling criterion J_ν − b_ν(T) → signmap_nu.tsv, signmap_z.tsv.
    Signmap,
    /// Band-sensitivity study (dual-number derivatives) → sensitivity.tsv.
    Sensitivity,
    /// Local absorption-bump check; prints a report, fails if inconsistent.
    Prop1,
    /// General solve with the configuration as given → solve.tsv.
    Solve {
        /// Five-column absorption table: ν κ₀ κ₁ κ₂ extra.
        #[arg(long)]
        kappa_file: Option<PathBuf>,
        /// Which κ column of the table to use (0..=2).
        #[arg(long, default_value_t = 0)]
        column: usize,
    },
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<Vec<OutputFile>> {
    match &cli.cmd {
        Cmd::Grey => run_grey(cfg),
        Cmd::Prop2 { listing_kappa } => run_prop2(cfg, *listing_kappa),
        Cmd::Albedo => run_albedo(cfg),
        Cmd::Signmap => run_signmap(cfg),
        Cmd::Sensitivity => run_sensitivity(cfg),
        Cmd::Prop1 => unreachable!("handled before dispatch"),
        Cmd::Solve { kappa_file, column } => {
            let table = match kappa_file {
                None => None,
                Some(p) => Some(std::fs::read_to_string(p)?),
            };
            run_solve(cfg, table.as_deref(), *column)
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&cli.overrides);

    if matches!(cli.cmd, Cmd::Prop1) {
        let report = run_prop1_check(&cfg)?;
        println!("{report}");
        if !report.passed() {
            anyhow::bail!("absorption-bump check failed");
        }
        return Ok(());
    }

    let files = dispatch(&cli, &cfg)?;
    let paths = write_outputs(std::path::Path::new(&cfg.out_dir), &files)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
