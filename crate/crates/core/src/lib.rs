//! Desk-scale simulation pipeline for the Z_n lattice Schwinger model on a
//! periodic chain.
//!
//! The crate builds the gauge-invariant Hilbert space, projects onto the
//! charge-conjugation/translation sector containing the Dirac vacuum,
//! optimizes the qubit embedding to minimize full-weight Pauli terms,
//! compiles Trotterized evolution and ancilla correlation circuits, simulates
//! them under parametric depolarizing and readout noise, and corrects
//! expectation values with twirled readout extinction and zero-noise
//! extrapolation.
//!
//! Modules follow the pipeline order:
//! - [`lattice`]: gauge-invariant basis and Hamiltonian matrix
//! - [`symmetry`]: charge-conjugation sectors and the vacuum block
//! - [`pauli`]: Pauli-string decomposition of Hermitian matrices
//! - [`embed`]: permutation search for the qubit embedding
//! - [`circuit`]: gate IR, folding, interferometer reference
//! - [`trotter`]: step and correlation-circuit compilers
//! - [`sim`]: statevector and density-matrix backends with noise
//! - [`mitigation`]: T-REx calibration and zero-noise extrapolation
//! - [`green`]: particle-density series and the lesser Green function
//! - [`model`]: the assembled end-to-end pipeline

pub use nalgebra;
pub use num_complex;

pub mod circuit;
pub mod embed;
pub mod error;
pub mod green;
pub mod lattice;
pub mod mitigation;
pub mod model;
pub mod pauli;
pub mod rng;
pub mod sim;
pub mod symmetry;
pub mod trotter;

pub use circuit::{Circuit, FoldedCircuit, Gate};
pub use embed::{Embedding, FOUR_SITE_OPTIMAL_PERMUTATION};
pub use error::{Error, Result};
pub use green::{
    CircuitRun, DensityMethod, DensityOperator, GreenMethod, GreenPoint, MitigationChoice,
    SeriesPoint, TrexOptions, ZneOptions,
};
pub use lattice::{Couplings, GaugeConfig, LatticeSpec};
pub use mitigation::{FitModel, TrexCalibration, ZneConfig};
pub use model::EmbeddedModel;
pub use pauli::{PauliDecomposition, PauliString};
pub use sim::{DensityMatrix, NoiseModel, ReadoutNoise, StateVector};
pub use symmetry::{SectorBlock, SectorLabel};
