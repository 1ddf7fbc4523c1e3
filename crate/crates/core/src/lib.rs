//! Simulation and analysis primitives for superradiant photon statistics.
//!
//! The crate covers the full model-to-measurement loop for collective
//! emission from a small Dicke ladder:
//!
//! - [`ladder`] / [`state`]: the symmetric spin ladder `|S, m>` and density
//!   matrices on it.
//! - [`lindblad`]: integration of the dissipative master equation
//!   `dρ/dt = (Γ/2)(2 S⁻ρS⁺ − S⁺S⁻ρ − ρS⁺S⁻)` together with the emission
//!   rate, the equal-time intensity correlation `g²(t,t)`, and the two-time
//!   correlation `g²(t₁,t₂)` via the quantum regression theorem.
//! - [`obe`]: single-atom optical Bloch equations under a shaped resonant
//!   pulse, the uncorrelated-emitter reference.
//! - [`jump`]: quantum-jump Monte Carlo unraveling of the ladder decay plus
//!   a beamsplitter/detector model producing time-tagged click records.
//! - [`hbt`]: binned Hanbury-Brown–Twiss coincidence accumulation and the
//!   `g² = R·n_c/(n₁n₂)` estimator with Poisson error propagation.
//!
//! All master-equation dynamics are expressed in units of `1/Γ`; conversion
//! to nanoseconds happens only at the detection/analysis boundary. The crate
//! is `no_std` (with `alloc`); file formats and orchestration live in the
//! companion CLI crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod config;
pub mod hbt;
pub mod jump;
pub mod ladder;
pub mod lindblad;
pub mod matrix;
pub mod obe;
pub mod state;

pub use config::SimConfig;
pub use ladder::{build_operators, CollectiveOperators, LadderBasis};
pub use lindblad::{
    emission_rate, evolve, g2_equal_time, g2_two_time, lindblad_rhs, IntegratorConfig,
};
pub use matrix::CMatrix;
pub use state::DickeState;
