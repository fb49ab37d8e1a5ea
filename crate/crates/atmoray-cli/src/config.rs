//! Run configuration: every tunable the solver family exposes, with the
//! reference defaults, a TOML file layer and a flag layer on top
//! (flags > file > defaults).
//!
//! Two groups of constants are *not* here because they are compile-time
//! properties of the core library: the series/kernel domain guards
//! (`EXPINT_MAX_ARG`, `EXPINT_ZERO_EPS`, the Planck cutoffs, Euler's
//! constant) and the absorption-table row cap. They are published as `pub
//! const` items by `atmoray` itself.

use anyhow::{Context, Result};
use atmoray::atmosphere::{ScatteringAlignment, ScatteringProfile};
use atmoray::kernel::Problem;
use atmoray::special::SolarSource;
use atmoray::{BoundaryConfig, GroundMode, OpticalGrid, QuadratureConfig, SpectralGrid};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Banded absorption `κ_ν = base + step·1_{lo < ν < hi}` (strict bounds,
/// matching the band seeding of the sensitivity engine).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaBand {
    pub base: f64,
    pub step: f64,
    pub nu_lo: f64,
    pub nu_hi: f64,
}

/// Serializable mirror of [`GroundMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GroundModeOpt {
    Attenuated,
    Plain,
}

impl From<GroundModeOpt> for GroundMode {
    fn from(g: GroundModeOpt) -> GroundMode {
        match g {
            GroundModeOpt::Attenuated => GroundMode::Attenuated,
            GroundModeOpt::Plain => GroundMode::Plain,
        }
    }
}

/// The full knob set. Field defaults are the reference constants; a TOML
/// file may override any subset, command-line flags any subset of that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory experiment files are written into.
    pub out_dir: String,
    /// Depth nodes (reference: 60).
    pub n_tau: usize,
    /// Column height in altitude units; total optical depth Z = 1 − e^{−h_max}.
    pub h_max: f64,
    /// Frequency nodes (reference: 400, wavelength-uniform).
    pub jmax: usize,
    pub numin: f64,
    pub numax: f64,
    /// Coupled-solve sweep count (reference: 16).
    pub k_max: usize,
    /// Scaled solar temperature.
    pub t_sun: f64,
    /// Solar dilution constant.
    pub c_sun: f64,
    /// Scaled ground temperature for the thermal-accommodation operator.
    pub t_earth: f64,
    pub earth_albedo: f64,
    /// Weight of the ground-side solar source (1 − this enters at the top).
    pub alpha_bottom: f64,
    /// Ground source shape.
    pub ground_mode: GroundModeOpt,
    /// Source scale λ (cloud-cover studies run λ < 1).
    pub source_scale: f64,
    /// Grey absorption level, used when no band and no table is given.
    pub kappa_grey: f64,
    /// Optional absorption band; overrides `kappa_grey`.
    pub kappa_band: Option<KappaBand>,
    /// Floor applied to every κ value the harness assembles.
    pub kappa_min: f64,
    /// Kernel quadrature step ceiling.
    pub dt_max: f64,
    /// Kernel quadrature minimum step count.
    pub nt_min: usize,
    /// Reproduce the reference implementation's quadrature quirks verbatim.
    pub strict_compat: bool,
    /// Isotropic scattering amplitude (0 disables).
    pub ais: f64,
    /// Rayleigh layer amplitude (0 disables).
    pub ars: f64,
    /// Scattering band bounds as fractions of Z.
    pub tm1_frac: f64,
    pub tm2_frac: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: ".".into(),
            n_tau: 60,
            h_max: 12.0,
            jmax: 400,
            numin: 0.05,
            numax: 15.0,
            k_max: 16,
            t_sun: 1.209,
            c_sun: SolarSource::default().c_sun,
            t_earth: 288.0 / 4780.0,
            earth_albedo: 0.3,
            alpha_bottom: 1.0,
            ground_mode: GroundModeOpt::Attenuated,
            source_scale: 1.0,
            kappa_grey: 0.5,
            kappa_band: None,
            kappa_min: 0.001,
            dt_max: 0.005,
            nt_min: 5,
            strict_compat: false,
            ais: 0.0,
            ars: 0.0,
            tm1_frac: 0.6,
            tm2_frac: 0.9,
        }
    }
}

/// Flag layer: every field optional; `None` keeps the underlying value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub out_dir: Option<String>,
    #[arg(long, global = true)]
    pub n_tau: Option<usize>,
    #[arg(long, global = true)]
    pub h_max: Option<f64>,
    #[arg(long, global = true)]
    pub jmax: Option<usize>,
    #[arg(long, global = true)]
    pub numin: Option<f64>,
    #[arg(long, global = true)]
    pub numax: Option<f64>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    #[arg(long, global = true)]
    pub t_sun: Option<f64>,
    #[arg(long, global = true)]
    pub c_sun: Option<f64>,
    #[arg(long, global = true)]
    pub t_earth: Option<f64>,
    #[arg(long, global = true)]
    pub earth_albedo: Option<f64>,
    #[arg(long, global = true)]
    pub alpha_bottom: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub ground_mode: Option<GroundModeOpt>,
    #[arg(long, global = true)]
    pub source_scale: Option<f64>,
    #[arg(long, global = true)]
    pub kappa_grey: Option<f64>,
    /// Band as `base,step,nu_lo,nu_hi`.
    #[arg(long, global = true, value_parser = parse_band)]
    pub kappa_band: Option<KappaBand>,
    #[arg(long, global = true)]
    pub kappa_min: Option<f64>,
    #[arg(long, global = true)]
    pub dt_max: Option<f64>,
    #[arg(long, global = true)]
    pub nt_min: Option<usize>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub strict_compat: Option<bool>,
    #[arg(long, global = true)]
    pub ais: Option<f64>,
    #[arg(long, global = true)]
    pub ars: Option<f64>,
    #[arg(long, global = true)]
    pub tm1_frac: Option<f64>,
    #[arg(long, global = true)]
    pub tm2_frac: Option<f64>,
}

fn parse_band(s: &str) -> Result<KappaBand, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected base,step,nu_lo,nu_hi — got {s:?}"));
    }
    let num = |i: usize| -> Result<f64, String> {
        parts[i]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("field {} of {s:?}: {e}", i + 1))
    };
    Ok(KappaBand {
        base: num(0)?,
        step: num(1)?,
        nu_lo: num(2)?,
        nu_hi: num(3)?,
    })
}

impl RunConfig {
    /// File layer: parse TOML over the defaults.
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).context("config file")
    }

    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                RunConfig::from_toml(&text)
            }
        }
    }

    /// Flag layer.
    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),+ $(,)?) => { $( if let Some(v) = o.$f.clone() { self.$f = v; } )+ };
        }
        take!(
            out_dir, n_tau, h_max, jmax, numin, numax, k_max, t_sun, c_sun, t_earth,
            earth_albedo, alpha_bottom, ground_mode, source_scale, kappa_grey, kappa_min,
            dt_max, nt_min, strict_compat, ais, ars, tm1_frac, tm2_frac,
        );
        if let Some(b) = o.kappa_band {
            self.kappa_band = Some(b);
        }
    }

    pub fn spectral(&self) -> Result<SpectralGrid> {
        Ok(SpectralGrid::wavelength_uniform(
            self.jmax, self.numin, self.numax,
        )?)
    }

    /// κ on `grid` from the band/grey settings, floored at `kappa_min`.
    pub fn kappa_on(&self, grid: &SpectralGrid) -> Vec<f64> {
        match self.kappa_band {
            Some(b) => grid
                .nu()
                .iter()
                .map(|&nu| {
                    let k = if nu > b.nu_lo && nu < b.nu_hi {
                        b.base + b.step
                    } else {
                        b.base
                    };
                    k.max(self.kappa_min)
                })
                .collect(),
            None => vec![self.kappa_grey.max(self.kappa_min); grid.len()],
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            dt_max: self.dt_max,
            nt_min: self.nt_min,
            strict_compat: self.strict_compat,
        }
    }

    pub fn boundary(&self) -> BoundaryConfig {
        BoundaryConfig {
            earth_albedo: self.earth_albedo,
            alpha_bottom: self.alpha_bottom,
            ground_mode: self.ground_mode.into(),
            source_scale: self.source_scale,
            t_e: self.t_earth,
        }
    }

    pub fn solar(&self) -> SolarSource {
        SolarSource {
            t_sun: self.t_sun,
            c_sun: self.c_sun,
        }
    }

    /// Assemble the full problem this configuration describes, with κ from
    /// the config itself (band/grey). For table-driven κ see
    /// [`Self::problem_with`].
    pub fn problem(&self) -> Result<Problem<f64>> {
        let grid = self.spectral()?;
        let kappa = self.kappa_on(&grid);
        self.problem_with(grid, kappa)
    }

    /// Assemble with an explicit spectral grid and κ vector (absorption
    /// tables carry their own frequency column).
    pub fn problem_with(&self, grid: SpectralGrid, kappa: Vec<f64>) -> Result<Problem<f64>> {
        let optical = OpticalGrid::new(self.n_tau, self.h_max)?;
        let scattering = if self.ais == 0.0 && self.ars == 0.0 {
            ScatteringProfile::none(&optical)
        } else {
            ScatteringProfile::build(
                &optical,
                self.ais,
                self.ars,
                self.tm1_frac,
                self.tm2_frac,
                ScatteringAlignment::Listing,
            )?
        };
        let kappa = kappa
            .into_iter()
            .map(|k| k.max(self.kappa_min))
            .collect::<Vec<_>>();
        Ok(Problem::builder(grid)
            .kappa(kappa)
            .optical(optical)
            .scattering(scattering)
            .boundary(self.boundary())
            .solar(self.solar())
            .quadrature(self.quadrature())
            .build()?)
    }
}
