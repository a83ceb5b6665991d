//! Phase-space engine for quantum hypercube states.
//!
//! A hypercube state is what comes out of applying `n` rounds of
//! "rotate, then superpose identity with a displacement" to a thermal
//! oscillator state and heralding on the right photon-counting outcome.
//! Expanded out, the density operator is a finite sum of cross terms
//! `c · D(γ_L) ρ_th D(γ_R)†`, each of which has a closed-form Wigner
//! function (a complex Gaussian). This crate keeps states in that exact
//! analytic form, so Wigner functions, norms, and displacement metrics
//! can be evaluated at any thermal occupation — including n̄ ~ 10¹⁵ —
//! without ever touching a number basis.
//!
//! The number basis is still here, as the [`fock`] module: a deliberately
//! plain truncated-basis implementation used only to validate the
//! analytic engine.
//!
//! Phase-space convention (fixed throughout): ħ = 1, x = (b + b†)/√2,
//! ζ = (x + ip)/√2, Wigner functions normalized against dx dp with
//! vacuum peak W(0,0) = 1/π, and R(θ) rotating a coherent center
//! γ → γ·e^{iθ} (counter-clockwise; the Fock side uses e^{iθ b†b}).
//!
//! Core math is generic over the scalar type via [`Real`] (`f32` or
//! `f64`); the `*64` aliases below are what most callers want.

pub mod amplitude;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod expmodel;
pub mod fock;
pub mod gaussian_ref;
pub mod grid;
pub mod hypercube;
pub mod io;
pub mod limit;
pub mod lsq;
pub mod metrics;
pub mod real;
pub mod state;
pub mod term;
pub mod validate;

pub use amplitude::{compose_displacements, rotate_displacement, Coefficient};
pub use error::EngineError;
pub use gaussian_ref::GaussianReferenceState;
pub use grid::{GridSpec, WignerGrid};
pub use hypercube::{BranchTerm, KrausSpec};
pub use limit::LimitState;
pub use real::Real;
pub use state::{HypercubeState, PhaseSpaceState};
pub use term::GaussianTerm;

use num_complex::Complex;

/// Complex amplitude in ground-state-width units (houses α, β, γ).
pub type Amplitude<T> = Complex<T>;

/// `f64` instantiations — the working precision of the CLI and the test suites.
pub type Amplitude64 = Amplitude<f64>;
pub type GaussianTerm64 = term::GaussianTerm<f64>;
pub type PhaseSpaceState64 = state::PhaseSpaceState<f64>;
pub type HypercubeState64 = state::HypercubeState<f64>;
pub type LimitState64 = limit::LimitState<f64>;
pub type KrausSpec64 = hypercube::KrausSpec<f64>;
pub type GridSpec64 = grid::GridSpec<f64>;
pub type WignerGrid64 = grid::WignerGrid<f64>;
pub type GaussianReferenceState64 = gaussian_ref::GaussianReferenceState<f64>;
