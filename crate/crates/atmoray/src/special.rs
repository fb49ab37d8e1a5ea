//! Exponential integrals and the scaled Planck family.
//!
//! These are the only transcendental kernels the solver needs:
//!
//! * `E_p(t) = ∫₀¹ e^{−t/μ} μ^{p−2} dμ` — the angular mean of beam
//!   attenuation; `E₁` is the flat-geometry transport kernel, `E₃`/`E₅` carry
//!   the `μ²`-weighted moments used by Rayleigh scattering.
//! * `b(ν,T) = ν³/(e^{ν/T} − 1)` — the Planck emission law in the scaled
//!   units used throughout (frequency and temperature both dimensionless),
//!   with `∫₀^∞ b dν = (π⁴/15) T⁴`.
//!
//! `E₁` is evaluated by the alternating series
//! `−γ − ln t + Σ_{k≥1} (−1)^{k+1} t^k/(k·k!)` for small arguments and by a
//! modified-Lentz continued fraction for large ones; the higher orders follow
//! from the upward recurrence `(p−1)E_p(t) = e^{−t} − t·E_{p−1}(t)`. The
//! split matters: the recurrence multiplies any absolute error in `E₁` by
//! `t^{p−1}/(p−1)!`, and the series' cancellation noise (~ulp of the largest
//! term, `e^t/(t√(2πt))`) amplified that way would reach ~1e−7 in `E₅` near
//! the domain edge. The continued fraction keeps `E₁` at relative machine
//! precision there, so every order stays accurate to ~1e−12 absolute or
//! better. Arguments past `t = 18` are a hard error rather than a silent
//! extrapolation — problem validation keeps kernel arguments inside that.

use crate::scalar::Scalar;
use core::fmt;

/// Euler-Mascheroni constant, truncated exactly as the series expects it.
pub const EULER_GAMMA: f64 = 0.577215664901533;

/// Arguments below this return `E₁ = 0`: the remaining `∫₀^t ln` mass is
/// below everything else in the problem.
pub const EXPINT_ZERO_EPS: f64 = 1e-10;

/// Hard ceiling on the argument; the declared domain of the transport
/// kernel (problem validation bounds κ·2Z by it).
pub const EXPINT_MAX_ARG: f64 = 18.0;

/// Crossover between the alternating series and the continued fraction.
/// At t = 10 the series still has ~1e−13 absolute accuracy (safe under the
/// recurrence's t⁴/24 amplification) and the fraction already converges in
/// a few dozen terms.
const EXPINT_SERIES_MAX: f64 = 10.0;

/// Temperatures below this emit nothing (`b = 0`); avoids `exp(ν/T)`
/// overflow during the first fixed-point iteration where `T ≡ 0`.
pub const PLANCK_COLD_EPS: f64 = 1e-7;

/// Frequencies below this use the Rayleigh-Jeans limit `b → T·ν²`.
pub const PLANCK_LOW_NU_EPS: f64 = 1e-10;

/// Error from [`expint`]: the argument left the series' valid domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgTooLarge {
    /// Order `p` of the requested `E_p`.
    pub p: u8,
    /// Offending `|t|`.
    pub t: f64,
}

impl fmt::Display for ArgTooLarge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E_{}({}) is outside the series domain |t| <= {}",
            self.p, self.t, EXPINT_MAX_ARG
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ArgTooLarge {}

/// Exponential integral `E_p(t)` for `p ∈ 1..=5`.
///
/// Negative arguments are folded to `|t|` (the kernel only ever needs the
/// even extension). `|t| < 1e−10` returns 0 for `p = 1` and the exact limit
/// through the recurrence for higher orders; `|t| > 18` is an error.
///
/// Generic over [`Scalar`], so a dual argument propagates
/// `E_p'(t) = −E_{p−1}(t)` (with `E₀ = e^{−t}/t`) exactly through the series
/// arithmetic itself — no hand-written derivative is involved.
pub fn expint<S: Scalar>(p: u8, t: S) -> Result<S, ArgTooLarge> {
    assert!((1..=5).contains(&p), "expint: order {p} not in 1..=5");
    let abst = t.abs();
    let tv = abst.value();
    if tv > EXPINT_MAX_ARG {
        return Err(ArgTooLarge { p, t: tv });
    }
    let e1 = if tv < EXPINT_ZERO_EPS {
        S::ZERO
    } else if tv <= EXPINT_SERIES_MAX {
        // Alternating series summed to f64 convergence. Terms grow to
        // ~e^t/(t√(2πt)) before the factorial wins, so the partial sums
        // carry cancellation noise of that scale times ulp — ~1e−13
        // absolute at the crossover. The cap is generous: t = 10
        // converges near k = 48.
        let mut ak = abst;
        let mut sum = ak - abst.ln() - EULER_GAMMA;
        let mut k = 2.0f64;
        for _ in 2..160 {
            ak = ak * abst * (-(k - 1.0) / (k * k));
            sum += ak;
            if libm::fabs(ak.value()) <= 1e-17 * (1.0 + libm::fabs(sum.value())) {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        // Modified Lentz evaluation of the continued fraction
        // E₁(t) = e^{−t}/(t+1 − 1²/(t+3 − 2²/(t+5 − …))), which holds E₁ at
        // relative machine precision where the series would cancel.
        let mut b = abst + 1.0;
        let mut c = S::from_f64(1e300);
        let mut d = S::ONE / b;
        let mut h = d;
        for i in 1..200u32 {
            let a = -((i * i) as f64);
            b = b + 2.0;
            let den = d * a + b;
            d = S::ONE
                / if den.value() == 0.0 {
                    S::from_f64(1e-300)
                } else {
                    den
                };
            c = b + S::from_f64(a) / c;
            if c.value() == 0.0 {
                c = S::from_f64(1e-300);
            }
            let del = c * d;
            h = h * del;
            if libm::fabs(del.value() - 1.0) < 1e-16 {
                break;
            }
        }
        h * (-abst).exp()
    };
    if p == 1 {
        return Ok(e1);
    }
    let emt = (-abst).exp();
    let mut e = e1;
    for q in 2..=p {
        // (q−1) E_q = e^{−t} − t E_{q−1}
        e = (emt - abst * e) / (q as f64 - 1.0);
    }
    Ok(e)
}

/// Scaled Planck emission `b(ν,T) = ν³/(e^{ν/T} − 1)`.
///
/// `T < 1e−7` emits nothing; `ν < 1e−10` uses the Rayleigh-Jeans limit
/// `T·ν²`. Frequency stays a plain `f64` even in dual runs — only the
/// temperature carries sensitivities.
pub fn planck<S: Scalar>(nu: f64, temp: S) -> S {
    if temp.value() < PLANCK_COLD_EPS {
        return S::ZERO;
    }
    if nu < PLANCK_LOW_NU_EPS {
        return temp * (nu * nu);
    }
    let e = (S::from_f64(nu) / temp).exp();
    S::from_f64(nu * nu * nu) / (e - 1.0)
}

/// Temperature derivative `∂b/∂T = e^{ν/T} (ν²/((e^{ν/T}−1)T))²`, the
/// Jacobian of the energy balance used by the Newton stage.
///
/// Guards match [`planck`]: cold temperatures return 0, the low-frequency
/// limit is `ν²`.
pub fn planck_dt<S: Scalar>(nu: f64, temp: S) -> S {
    if temp.value() < PLANCK_COLD_EPS {
        return S::ZERO;
    }
    if nu < PLANCK_LOW_NU_EPS {
        return S::from_f64(nu * nu);
    }
    let a = (S::from_f64(nu) / temp).exp();
    let w = S::from_f64(nu * nu) / (a - 1.0) / temp;
    a * w * w
}

/// Incoming solar radiation in scaled units: a Planck spectrum at the sun's
/// (scaled) temperature times a geometric dilution constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarSource {
    /// Scaled solar temperature (defaults to 1.209 ≈ 5800 K / 4798 K).
    pub t_sun: f64,
    /// Dilution constant multiplying the spectrum. The default folds solid
    /// angle, the 0.7 transmitted fraction and the afternoon-average
    /// incidence factor 2√2 into one number.
    pub c_sun: f64,
}

impl Default for SolarSource {
    fn default() -> Self {
        SolarSource {
            t_sun: 1.209,
            c_sun: 2.03e-5 * (2.0 * core::f64::consts::SQRT_2) / 0.7,
        }
    }
}

impl SolarSource {
    /// Spectral intensity `Q⁰_ν = c_sun · ν³/(e^{ν/t_sun} − 1)`.
    ///
    /// Requires `ν > 0` (the spectral grid guarantees it).
    pub fn intensity(&self, nu: f64) -> f64 {
        self.c_sun * nu * nu * nu / (libm::exp(nu / self.t_sun) - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_matches_frozen_reference_at_one() {
        // Frozen from the series itself at first implementation; the oracle
        // suite pins it against independent quadrature.
        let e1 = expint(1, 1.0).unwrap();
        assert!(
            (e1 - 0.219_383_934_395_520_62).abs() < 1e-15,
            "E1(1) drifted: {e1}"
        );
    }

    #[test]
    fn small_and_large_argument_policy() {
        assert_eq!(expint(1, 1e-12).unwrap(), 0.0);
        assert_eq!(expint(1, 0.0).unwrap(), 0.0);
        // Below the zero cutoff the recurrence still yields the exact limits.
        assert!((expint(2, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((expint(3, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((expint(5, 0.0).unwrap() - 0.25).abs() < 1e-15);
        let err = expint(1, 18.5).unwrap_err();
        assert_eq!(err.p, 1);
        assert!(expint(3, -20.0).is_err(), "negative args fold to |t| first");
    }

    #[test]
    fn continued_fraction_branch_is_machine_accurate() {
        // 30-digit reference value; the series would sit ~1e−14 off here and
        // the recurrence would blow that up by t⁴/24 in E₅.
        let e1 = expint(1, 15.0).unwrap();
        assert!(
            (e1 - 1.918_627_892_147_867e-8).abs() < 1e-22,
            "E1(15) drifted: {e1:.17e}"
        );
        // Both evaluation branches must meet at the crossover.
        let below = expint(1, 10.0 - 1e-9).unwrap();
        let above = expint(1, 10.0 + 1e-9).unwrap();
        assert!((below - above).abs() < 1e-12);
        // Order monotonicity in the regime where the orders nearly touch
        // (gaps ~e^{−t}/t²): only an accurate E₁ keeps them separated.
        for p in 1u8..5 {
            let lo = expint(p + 1, 14.583_858_523_004_205).unwrap();
            let hi = expint(p, 14.583_858_523_004_205).unwrap();
            assert!(lo < hi, "E{} >= E{}", p + 1, p);
        }
    }

    #[test]
    fn dual_argument_differentiates_the_continued_fraction() {
        use crate::sensitivity::DualScalar;
        // dE₁/dt = −e^{−t}/t, exact.
        let d = expint(1, DualScalar::seeded(14.0)).unwrap();
        let want = -libm::exp(-14.0) / 14.0;
        assert!(
            ((d.der - want) / want).abs() < 1e-13,
            "dE1(14): {} vs {want}",
            d.der
        );
    }

    #[test]
    fn negative_arguments_fold_to_even_extension() {
        for &t in &[0.3, 1.7, 9.0] {
            assert_eq!(expint(1, -t).unwrap(), expint(1, t).unwrap());
            assert_eq!(expint(4, -t).unwrap(), expint(4, t).unwrap());
        }
    }

    #[test]
    fn recurrence_residual_is_tiny() {
        // (p−1)E_p − e^{−t} + t·E_{p−1} should vanish to roundoff; this is
        // internal consistency (the oracle suite checks external truth).
        for &t in &[1e-6, 0.01, 0.37, 1.0, 5.0, 16.9] {
            for p in 2u8..=5 {
                let ep = expint(p, t).unwrap();
                let em = expint(p - 1, t).unwrap();
                let res = (p as f64 - 1.0) * ep - libm::exp(-t) + t * em;
                assert!(
                    res.abs() < 1e-13,
                    "recurrence residual {res:e} at p={p}, t={t}"
                );
            }
        }
    }

    #[test]
    fn planck_known_point_and_guards() {
        // b(1,1) = 1/(e−1)
        let b = planck(1.0, 1.0);
        assert!((b - 1.0 / (core::f64::consts::E - 1.0)).abs() < 1e-15);
        assert_eq!(planck(3.0, 1e-8), 0.0);
        assert!((planck(1e-12, 0.7) - 0.7e-24).abs() < 1e-30);
        // ∂b/∂T at (1,1) — frozen from the closed form e·(1/(e−1))².
        let db = planck_dt(1.0, 1.0);
        assert!(
            (db - 0.920_673_594_207_792_4).abs() < 1e-12,
            "dB/dT(1,1) = {db}"
        );
        assert_eq!(planck_dt(2.0, 1e-9), 0.0);
    }

    #[test]
    fn planck_derivative_matches_finite_differences() {
        for &(nu, t) in &[(0.3, 0.2), (1.0, 1.0), (4.0, 0.8), (8.0, 2.0)] {
            let h = 1e-6 * t;
            let fd = (planck(nu, t + h) - planck(nu, t - h)) / (2.0 * h);
            let an = planck_dt(nu, t);
            assert!(
                (fd - an).abs() <= 1e-7 * an.abs().max(1e-12),
                "dB/dT mismatch at nu={nu}, T={t}: fd {fd} vs {an}"
            );
        }
    }

    #[test]
    fn solar_spectrum_peaks_where_a_planck_spectrum_should() {
        let sun = SolarSource::default();
        assert!((sun.c_sun - 8.202_438_661_763_951e-5).abs() < 1e-18);
        // ν³/(e^{ν/T}−1) peaks at ν ≈ 2.821·T.
        let peak = 2.821 * sun.t_sun;
        assert!(sun.intensity(peak) > sun.intensity(peak * 0.5));
        assert!(sun.intensity(peak) > sun.intensity(peak * 2.0));
    }
}
