//! Frequency discretization and absorption-coefficient construction.
//!
//! The working grid is *wavelength*-uniform: nodes are equally spaced in
//! `1/ν`, which concentrates resolution at low frequency where the thermal
//! Planck spectra of the cool atmosphere live, while still reaching far into
//! the solar range. Frequency integrals use the pinned node rule
//! `Σ_{j≥1} v[j]·(ν_j − ν_{j−1})` everywhere — quadrature *rule* changes are
//! physics changes in this solver, so the rule lives here and nowhere else.

use crate::scalar::Scalar;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Hard cap on grid size for the file-driven and wavelength-uniform
/// constructors.
pub const MAX_NODES: usize = 600;

/// Absorption coefficients below this are clamped up to it; a transparent
/// band would otherwise push kernel arguments into `E₁`'s singularity.
pub const KAPPA_MIN: f64 = 0.001;

/// Construction/parsing failures for spectral grids.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    /// `numin`/`numax` not ordered and positive, or too few nodes requested.
    BadRange { numin: f64, numax: f64, jmax: usize },
    /// More nodes than [`MAX_NODES`] requested or present in a table file.
    TooManyNodes { jmax: usize },
    /// Frequency column not strictly increasing at this node index.
    NotIncreasing { index: usize },
    /// Non-positive frequency at this node index.
    NonPositive { index: usize },
    /// A table line failed to parse (1-based line number and explanation).
    BadTableLine { line: usize, what: String },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::BadRange { numin, numax, jmax } => write!(
                f,
                "invalid grid request: jmax={jmax}, nu range [{numin}, {numax}] \
                 (need 0 < numin < numax and jmax >= 2)"
            ),
            SpectralError::TooManyNodes { jmax } => {
                write!(f, "{jmax} frequency nodes exceeds the cap of {MAX_NODES}")
            }
            SpectralError::NotIncreasing { index } => {
                write!(f, "frequency nodes must be strictly increasing (node {index})")
            }
            SpectralError::NonPositive { index } => {
                write!(f, "frequency nodes must be positive (node {index})")
            }
            SpectralError::BadTableLine { line, what } => {
                write!(f, "kappa table line {line}: {what}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpectralError {}

/// A strictly increasing set of frequency nodes `ν_0 < ν_1 < … `.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    nu: Vec<f64>,
}

impl SpectralGrid {
    /// Wavelength-uniform grid: `ν_j = numax / (1 + (jmax−j)·c)` with
    /// `c = (numax−numin)/(numin·jmax)`, for `j = 0..jmax`.
    ///
    /// `ν_0 = numin` exactly; the top node lands well *below* `numax`
    /// (at the defaults, 8.58 of 15) because the uniform-in-`1/ν` spacing
    /// approaches `numax` only as j → ∞. That is intentional: the thermal
    /// spectra the grid must resolve are negligible out there, and the solar
    /// source is integrated on the same nodes for consistency.
    pub fn wavelength_uniform(
        jmax: usize,
        numin: f64,
        numax: f64,
    ) -> Result<SpectralGrid, SpectralError> {
        if !(numin > 0.0 && numax > numin) || jmax < 2 {
            return Err(SpectralError::BadRange { numin, numax, jmax });
        }
        if jmax > MAX_NODES {
            return Err(SpectralError::TooManyNodes { jmax });
        }
        let c = (numax - numin) / (numin * jmax as f64);
        let nu = (0..jmax)
            .map(|j| numax / (1.0 + (jmax - j) as f64 * c))
            .collect();
        Ok(SpectralGrid { nu })
    }

    /// Grid from explicit nodes (used by tests and file-driven runs that
    /// carry their own frequency column). Not subject to [`MAX_NODES`].
    pub fn from_nodes(nu: Vec<f64>) -> Result<SpectralGrid, SpectralError> {
        if nu.len() < 2 {
            return Err(SpectralError::BadRange {
                numin: f64::NAN,
                numax: f64::NAN,
                jmax: nu.len(),
            });
        }
        for (j, &x) in nu.iter().enumerate() {
            if !(x > 0.0) {
                return Err(SpectralError::NonPositive { index: j });
            }
            if j > 0 && x <= nu[j - 1] {
                return Err(SpectralError::NotIncreasing { index: j });
            }
        }
        Ok(SpectralGrid { nu })
    }

    /// Uniform-in-`ν` grid over `[lo, hi]`; a convenience for resolution
    /// studies (inclusive endpoints).
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<SpectralGrid, SpectralError> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(SpectralError::BadRange {
                numin: lo,
                numax: hi,
                jmax: n,
            });
        }
        let h = (hi - lo) / (n - 1) as f64;
        Self::from_nodes((0..n).map(|j| lo + h * j as f64).collect())
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// The pinned frequency quadrature: `Σ_{j≥1} values[j]·(ν_j − ν_{j−1})`.
    ///
    /// A node rule anchored on the *upper* node of each interval — `values[0]`
    /// never contributes. Every frequency integral in the solver (energy
    /// balance, its Newton derivative, norms, totals) goes through this one
    /// function so that the discrete model is self-consistent.
    pub fn integrate_nu<S: Scalar>(&self, values: &[S]) -> S {
        assert_eq!(
            values.len(),
            self.nu.len(),
            "integrate_nu: {} values on a {}-node grid",
            values.len(),
            self.nu.len()
        );
        let mut sum = S::ZERO;
        for j in 1..self.nu.len() {
            sum += values[j] * (self.nu[j] - self.nu[j - 1]);
        }
        sum
    }
}

/// Frequency-independent absorption: `κ_ν ≡ max(k, KAPPA_MIN)`.
pub fn kappa_grey<S: Scalar>(grid: &SpectralGrid, k: f64) -> Vec<S> {
    let k = k.max(KAPPA_MIN);
    (0..grid.len()).map(|_| S::from_f64(k)).collect()
}

/// Two-level absorption: `κ_ν = base + step·1_{lo < ν < hi}` (strict
/// inequalities), clamped below at [`KAPPA_MIN`].
pub fn kappa_banded<S: Scalar>(
    grid: &SpectralGrid,
    base: f64,
    step: f64,
    lo: f64,
    hi: f64,
) -> Vec<S> {
    grid.nu()
        .iter()
        .map(|&nu| {
            let k = if nu > lo && nu < hi { base + step } else { base };
            S::from_f64(k.max(KAPPA_MIN))
        })
        .collect()
}

/// Parse a five-column absorption table: each data line is
/// `ν κ₀ κ₁ κ₂ extra`, whitespace-separated. `which ∈ 0..=2` selects the κ
/// column; values are clamped below at [`KAPPA_MIN`]. Blank lines and lines
/// starting with `#` are skipped. The frequency column must be strictly
/// increasing and positive, and at most [`MAX_NODES`] rows are accepted.
pub fn parse_kappa_table(
    text: &str,
    which: usize,
) -> Result<(SpectralGrid, Vec<f64>), SpectralError> {
    assert!(which <= 2, "kappa column selector {which} not in 0..=2");
    let mut nu = Vec::new();
    let mut kappa = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = [0.0f64; 5];
        let mut count = 0;
        for tok in line.split_whitespace() {
            if count == 5 {
                return Err(SpectralError::BadTableLine {
                    line: lineno + 1,
                    what: alloc::format!("expected exactly 5 numbers, found more ({tok:?})"),
                });
            }
            fields[count] = tok.parse::<f64>().map_err(|_| SpectralError::BadTableLine {
                line: lineno + 1,
                what: alloc::format!("field {} ({tok:?}) is not a number", count + 1),
            })?;
            count += 1;
        }
        if count != 5 {
            return Err(SpectralError::BadTableLine {
                line: lineno + 1,
                what: alloc::format!("expected 5 whitespace-separated numbers, found {count}"),
            });
        }
        if nu.len() == MAX_NODES {
            return Err(SpectralError::TooManyNodes {
                jmax: MAX_NODES + 1,
            });
        }
        nu.push(fields[0]);
        kappa.push(fields[1 + which].max(KAPPA_MIN));
    }
    let grid = SpectralGrid::from_nodes(nu)?;
    Ok((grid, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn default_grid() -> SpectralGrid {
        SpectralGrid::wavelength_uniform(400, 0.05, 15.0).unwrap()
    }

    #[test]
    fn default_grid_endpoints_are_frozen() {
        let g = default_grid();
        assert_eq!(g.len(), 400);
        assert!((g.nu()[0] - 0.05).abs() < 1e-15, "bottom node {}", g.nu()[0]);
        // Top node frozen at first construction; well below numax by design.
        assert!(
            (g.nu()[399] - 8.583_690_987_124_463).abs() < 1e-12,
            "top node {}",
            g.nu()[399]
        );
    }

    #[test]
    fn spacing_is_uniform_in_wavelength() {
        let g = default_grid();
        let lam: Vec<f64> = g.nu().iter().map(|&v| 1.0 / v).collect();
        let step = lam[0] - lam[1];
        // (νmax−νmin)/(νmin·jmax·νmax), reached through the 1/ν roundtrip
        assert!((step - 0.049_833_333_333_333_33).abs() < 1e-13);
        for j in 1..lam.len() {
            let s = lam[j - 1] - lam[j];
            assert!(
                (s - step).abs() < 1e-12 * step,
                "wavelength step wobbles at j={j}: {s} vs {step}"
            );
        }
    }

    #[test]
    fn node_rule_is_exact_on_constants() {
        let g = default_grid();
        let vals = vec![3.25f64; g.len()];
        let got = g.integrate_nu(&vals);
        let want = 3.25 * (g.nu()[399] - g.nu()[0]);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(
            SpectralGrid::wavelength_uniform(601, 0.05, 15.0),
            Err(SpectralError::TooManyNodes { .. })
        ));
        assert!(SpectralGrid::wavelength_uniform(10, -0.1, 15.0).is_err());
        assert!(SpectralGrid::wavelength_uniform(10, 2.0, 1.0).is_err());
        assert!(SpectralGrid::from_nodes(vec![0.1, 0.1]).is_err());
        assert!(SpectralGrid::from_nodes(vec![0.1, -0.2]).is_err());
        assert!(SpectralGrid::from_nodes(vec![0.3]).is_err());
    }

    #[test]
    fn banded_kappa_uses_strict_inequalities_and_clamp() {
        let g = SpectralGrid::from_nodes(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let k: Vec<f64> = kappa_banded(&g, 0.0, 0.5, 2.0, 4.0);
        // ν=2 and ν=4 sit on the band edges: excluded. Base 0 clamps to 1e−3.
        assert_eq!(k, vec![0.001, 0.001, 0.5, 0.001]);
        let grey: Vec<f64> = kappa_grey(&g, 1e-9);
        assert!(grey.iter().all(|&x| x == KAPPA_MIN));
    }

    #[test]
    fn kappa_table_roundtrip_and_errors() {
        let text = "# nu k0 k1 k2 weight\n0.5 0.10 0.20 0.30 1\n\n1.5 0.4 1e-9 0.6 1\n";
        let (grid, k0) = parse_kappa_table(text, 0).unwrap();
        assert_eq!(grid.nu(), &[0.5, 1.5]);
        assert_eq!(k0, vec![0.10, 0.4]);
        let (_, k1) = parse_kappa_table(text, 1).unwrap();
        assert_eq!(k1, vec![0.20, KAPPA_MIN], "tiny κ clamps up");

        let bad = parse_kappa_table("0.5 0.1 0.2\n", 0).unwrap_err();
        assert!(matches!(bad, SpectralError::BadTableLine { line: 1, .. }));
        let bad = parse_kappa_table("0.5 x 0.2 0.3 1\n", 0).unwrap_err();
        assert!(matches!(bad, SpectralError::BadTableLine { line: 1, .. }));
        let bad = parse_kappa_table("2.0 0.1 0.2 0.3 1\n1.0 0.1 0.2 0.3 1\n", 0).unwrap_err();
        assert!(matches!(bad, SpectralError::NotIncreasing { index: 1 }));
    }
}
