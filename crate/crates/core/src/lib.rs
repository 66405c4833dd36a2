//! Driven-dissipative dynamics of qubit arrays coupled to a one-dimensional
//! waveguide: Lindblad superoperator assembly, Liouvillian spectra, strong
//! drive perturbation theory and time evolution of spin correlators.

pub mod dynamics;
pub mod error;
pub mod model;
pub mod operators;
pub mod perturbation;
pub mod sparse;
pub mod spectra;

pub use error::{Error, Result};
pub use model::{build_hamiltonian, build_liouvillian, Hamiltonian, Liouvillian};
pub use operators::ArrayParams;
pub use sparse::SparseComplexMatrix;

pub use num_complex::Complex64;
