//! Vertical structure: optical-depth grid, scattering profiles, boundary
//! configuration.
//!
//! Altitude `z` enters only through the optical depth `τ(z) = 1 − e^{−z}`
//! (unit-density exponential atmosphere after the change of variables that
//! absorbs density into the vertical coordinate). The solver works on τ and
//! maps back to altitude `z = −ln(1 − τ)` only when reporting.

use alloc::vec::Vec;
use core::fmt;

/// Errors from atmosphere construction/validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtmosphereError {
    /// Fewer than two depth nodes, or non-positive height.
    BadGrid { n_tau: usize, h_max: f64 },
    /// Scattering band fractions not ordered inside (0, 1).
    BadScatteringBand { tm1_frac: f64, tm2_frac: f64 },
    /// A boundary parameter left its physical range.
    BadBoundary { what: &'static str, value: f64 },
}

impl fmt::Display for AtmosphereError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtmosphereError::BadGrid { n_tau, h_max } => {
                write!(f, "invalid optical grid: n_tau={n_tau}, h_max={h_max}")
            }
            AtmosphereError::BadScatteringBand { tm1_frac, tm2_frac } => write!(
                f,
                "scattering band fractions must satisfy 0 <= tm1 < tm2 < 1, got ({tm1_frac}, {tm2_frac})"
            ),
            AtmosphereError::BadBoundary { what, value } => {
                write!(f, "boundary parameter {what} = {value} is out of range")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AtmosphereError {}

/// Uniform grid in optical depth over `[0, Z]`, `Z = 1 − e^{−h_max}`.
///
/// Node 0 is the ground, the last node is the top of the modeled column.
/// The exponential density means `Z < 1` always: the whole atmosphere is
/// optically thin-ish in these units even though it extends to altitude
/// `h_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalGrid {
    tau: Vec<f64>,
    z_max: f64,
    h_max: f64,
}

impl OpticalGrid {
    /// `n_tau` evenly spaced depth nodes for a column of height `h_max`
    /// (defaults elsewhere: 60 nodes, height 12).
    pub fn new(n_tau: usize, h_max: f64) -> Result<OpticalGrid, AtmosphereError> {
        if n_tau < 2 || !(h_max > 0.0) {
            return Err(AtmosphereError::BadGrid { n_tau, h_max });
        }
        let z_max = 1.0 - libm::exp(-h_max);
        let tau = (0..n_tau)
            .map(|i| i as f64 * z_max / (n_tau - 1) as f64)
            .collect();
        Ok(OpticalGrid { tau, z_max, h_max })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Total optical depth `Z` of the column.
    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Column height in altitude units.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Node spacing `Z/(n−1)`.
    pub fn delta(&self) -> f64 {
        self.z_max / (self.tau.len() - 1) as f64
    }

    /// Altitude of node `i`: `z = −ln(1 − τ_i)`.
    pub fn altitude(&self, i: usize) -> f64 {
        -libm::log(1.0 - self.tau[i])
    }

    /// Piecewise-constant cell lookup for a depth `t ∈ [0, Z]`: the index
    /// `⌊(n−1)·t/Z⌋`, clamped to the last node. Fields sampled during the
    /// kernel's t-integration are frozen on these cells.
    pub fn cell_of(&self, t: f64) -> usize {
        let n = self.tau.len();
        let raw = ((n - 1) as f64 * t / self.z_max) as usize;
        raw.min(n - 1)
    }
}

/// Where the scattering profiles are sampled relative to the depth nodes.
///
/// The reference construction evaluates them at `i·Z/n` — systematically a
/// hair below node `i = i·Z/(n−1)` — which shifts both scattering layers
/// slightly downward. That shifted form is the default because all shipped
/// results were produced with it; `GridAligned` samples exactly at the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatteringAlignment {
    #[default]
    Listing,
    GridAligned,
}

/// Per-node scattering strengths: isotropic albedo `a_iso` and the Rayleigh
/// layer amplitude `a_ray` (the frequency shaping `(ν−0.8)²(ν−1.2)²·40` is
/// applied in the kernel, not here).
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringProfile {
    pub a_iso: Vec<f64>,
    pub a_ray: Vec<f64>,
}

impl ScatteringProfile {
    /// Build the two standard layers on `grid`:
    ///
    /// * isotropic: a parabolic bump `ais·(t−tm1)₊(tm2−t)₊·4/(tm2−tm1)²`
    ///   supported on `(tm1, tm2)` with peak value `ais`;
    /// * Rayleigh: a linear ramp `ars·(t−tm2)₊/(Z−tm2)` from `tm2` up.
    ///
    /// `tm1 = tm1_frac·Z`, `tm2 = tm2_frac·Z` (defaults 0.6, 0.9).
    pub fn build(
        grid: &OpticalGrid,
        ais: f64,
        ars: f64,
        tm1_frac: f64,
        tm2_frac: f64,
        alignment: ScatteringAlignment,
    ) -> Result<ScatteringProfile, AtmosphereError> {
        if !(0.0 <= tm1_frac && tm1_frac < tm2_frac && tm2_frac < 1.0) {
            return Err(AtmosphereError::BadScatteringBand { tm1_frac, tm2_frac });
        }
        let n = grid.len();
        let z = grid.z_max();
        let (tm1, tm2) = (tm1_frac * z, tm2_frac * z);
        let mut a_iso = Vec::with_capacity(n);
        let mut a_ray = Vec::with_capacity(n);
        for i in 0..n {
            let tm = match alignment {
                ScatteringAlignment::Listing => i as f64 * z / n as f64,
                ScatteringAlignment::GridAligned => grid.tau()[i],
            };
            let up = (tm - tm1).max(0.0);
            let down = (tm2 - tm).max(0.0);
            a_iso.push(ais * up * down * 4.0 / ((tm2 - tm1) * (tm2 - tm1)));
            a_ray.push(ars * (tm - tm2).max(0.0) / (z - tm2));
        }
        Ok(ScatteringProfile { a_iso, a_ray })
    }

    /// No scattering anywhere (the default configuration).
    pub fn none(grid: &OpticalGrid) -> ScatteringProfile {
        ScatteringProfile {
            a_iso: alloc::vec![0.0; grid.len()],
            a_ray: alloc::vec![0.0; grid.len()],
        }
    }

    /// True when every coefficient is exactly zero (lets the kernel skip the
    /// Rayleigh moment machinery entirely).
    pub fn is_zero(&self) -> bool {
        self.a_iso.iter().all(|&a| a == 0.0) && self.a_ray.iter().all(|&a| a == 0.0)
    }
}

/// How the solar source enters at the ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundMode {
    /// The beam notionally enters at the top and is attenuated through the
    /// full column before acting as a ground source: depth `τ` sees
    /// `E₃(κ(τ+Z))`. This is the reference configuration.
    #[default]
    Attenuated,
    /// The beam is applied directly at the ground: depth `τ` sees `E₃(κτ)`.
    Plain,
}

/// Ground/top boundary data for the transport kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConfig {
    /// Ground albedo multiplying the reflected kernel leg `E_p(κ(τ+t))`.
    pub earth_albedo: f64,
    /// Weight of the ground-side source; `1−alpha_bottom` enters from the
    /// top as `E₃(κ(Z−τ))` instead.
    pub alpha_bottom: f64,
    /// Ground source shape (attenuated through the column, or plain).
    pub ground_mode: GroundMode,
    /// Overall source scale λ (cloud cover studies run λ < 1).
    pub source_scale: f64,
    /// Scaled ground temperature for the thermal-accommodation albedo
    /// operator (288 K in units of 4780 K).
    pub t_e: f64,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            earth_albedo: 0.3,
            alpha_bottom: 1.0,
            ground_mode: GroundMode::Attenuated,
            source_scale: 1.0,
            t_e: 288.0 / 4780.0,
        }
    }
}

impl BoundaryConfig {
    pub(crate) fn validate(&self) -> Result<(), AtmosphereError> {
        let checks = [
            ("earth_albedo", self.earth_albedo, 0.0, 1.0),
            ("alpha_bottom", self.alpha_bottom, 0.0, 1.0),
            ("source_scale", self.source_scale, 0.0, f64::INFINITY),
            ("t_e", self.t_e, 0.0, f64::INFINITY),
        ];
        for (what, v, lo, hi) in checks {
            if !(v >= lo && v <= hi) {
                return Err(AtmosphereError::BadBoundary { what, value: v });
            }
        }
        Ok(())
    }
}

/// Total incoming solar power `Q̄⁰ = λ·Σ_{j≥1} Q⁰(ν_j) Δν_j` on a grid —
/// the grey reduction's source strength, computed with the same node rule as
/// every other frequency integral.
pub fn solar_total(
    grid: &crate::spectral::SpectralGrid,
    sun: &crate::special::SolarSource,
    source_scale: f64,
) -> f64 {
    let vals: Vec<f64> = grid.nu().iter().map(|&nu| sun.intensity(nu)).collect();
    grid.integrate_nu(&vals) * source_scale
}
