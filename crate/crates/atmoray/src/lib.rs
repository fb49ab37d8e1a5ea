//! Deterministic solver for frequency-dependent radiative transfer in a
//! stratified atmosphere.
//!
//! The model couples the mean radiative intensity `J_ν(τ)` to the temperature
//! profile `T(τ)` through an integral formulation of the transport equation:
//! each frequency group satisfies
//!
//! ```text
//! J_ν(τ) = source_ν(τ) + (κ_ν/2) ∫₀^Z E₁(κ_ν|τ−t|) [emission + scattering](t) dt
//! ```
//!
//! and the temperature closes the system through the energy balance
//! `∫ κ_ν b_ν(T) dν = ∫ κ_ν J_ν dν` at every depth. The solver iterates this
//! fixed point, with Rayleigh and isotropic scattering corrections, a ground
//! albedo term, and a hybrid bisection/Newton scalar solve for the balance.
//!
//! Everything is generic over [`scalar::Scalar`], so the entire solve can run
//! on [`sensitivity::DualScalar`] to propagate one exact forward-mode
//! derivative (e.g. of the whole temperature profile with respect to an
//! absorption-band perturbation) through source iteration and Newton alike.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all transcendental
//! math goes through `libm` so results are bit-identical across `std` and
//! `no_std` builds. The `parallel` feature distributes frequency rows with
//! rayon; rows are independent within an iteration, so parallel results are
//! bitwise equal to serial ones.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod albedo;
pub mod atmosphere;
pub mod driver;
pub mod kernel;
pub mod rng;
pub mod scalar;
pub mod sensitivity;
pub mod special;
pub mod spectral;
pub mod thermal;

pub use atmosphere::{BoundaryConfig, GroundMode, OpticalGrid, ScatteringProfile};
pub use driver::{fixed_point_solve, SolveReport, Solution};
pub use kernel::{Problem, QuadratureConfig};
pub use scalar::Scalar;
pub use sensitivity::DualScalar;
pub use spectral::SpectralGrid;
