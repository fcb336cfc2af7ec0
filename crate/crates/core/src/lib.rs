//! Survival-probability dynamics of an excited basis state in the two-body
//! random interaction (TBRI) model of `n` fermions on `m` orbitals.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock_basis`]: Slater-determinant basis as occupation bitmasks, and the
//!   pair operator `a⁺_p a⁺_q a_s a_r` with fermionic signs.
//! * [`tbri_model`]: random two-body amplitudes, the dense Hamiltonian and the
//!   direct-coupling statistics of a basis state.
//! * [`spectral`]: exact eigendecomposition, strength function, density of
//!   states and participation numbers.
//! * [`dynamics`]: return probability `W_i(t)` by exact spectral sums, the
//!   saturation plateau and the oscillations of `N_pc(t)`.
//! * [`analytic`]: Breit-Wigner, Gaussian and hybrid strength functions, their
//!   Fourier transforms, closed-form decay laws and decay-law fitting.
//!
//! Supporting numerics live in [`quadrature`], [`special`] and [`fit`].

pub mod analytic;
pub mod dynamics;
pub mod fit;
pub mod fock_basis;
pub mod quadrature;
pub mod seed;
pub mod series;
pub mod special;
pub mod spectral;
pub mod tbri_model;

pub use analytic::{AnalyticError, DecayFit, DecayLaw, StrengthFunctionModel};
pub use dynamics::{DynamicsError, ShellStats};
pub use fock_basis::{FockBasis, FockError, OrbitalSet};
pub use series::{Provenance, SeriesMeta, SurvivalSeries, TimeGrid};
pub use spectral::{EigenDecomposition, SpectralError};
pub use tbri_model::{HamiltonianMatrix, ModelConfig, ModelError, SpectrumKind};
