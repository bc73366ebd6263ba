//! Simulation toolkit for dissipative preparation of Bell-singlet and
//! antiferromagnetic states by Rydberg pumping.
//!
//! The crate is organised bottom-up:
//!
//! - [`qops`]: complex operators, states, tensor embedding, matrix
//!   exponentials and Hermitian eigensystems.
//! - [`model`]: pumping parameters, lattice geometries and the N-atom
//!   Hamiltonian, Rydberg interaction and decay channels.
//! - [`lindblad`]: exact density-matrix propagation for one or two atoms.
//! - [`mcwf`]: Monte-Carlo wavefunction (quantum-jump) ensembles for
//!   plaquettes of up to four atoms.
//! - [`rates`]: the analytic rate-equation model, its closed-form
//!   equilibrium and the Ising-parameter mapping.
//! - [`ising`]: exact diagonalization of the transverse-field Ising model.
//!
//! Frequencies are angular (rad/µs), rates are in 1/µs and times in µs
//! throughout; ħ = 1.

pub mod error;
pub mod ising;
pub mod lindblad;
pub mod mcwf;
pub mod model;
pub mod qops;
pub mod rates;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64 as C64;
