//! Exact finite-dimensional simulation of a two-level atom coupled by
//! two-photon processes to a degenerate bimodal cavity.
//!
//! The crate builds the tripartite Hamiltonians on a photon-number-truncated
//! Fock space, constructs the passive unitary that separates the field into a
//! coupled and a free collective mode, checks the decoupled form and its
//! constant of motion, and evolves states exactly by per-block
//! diagonalization.
//!
//! Units: ħ = 1, every coefficient is an angular frequency.

pub mod cli;
pub mod coefficients;
pub mod decoupling;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod par;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used for every amplitude and matrix element.
pub type C64 = num_complex::Complex64;

pub mod prelude {
    pub use crate::coefficients::{extract_coefficients, CoefficientTable, Label};
    pub use crate::decoupling::{
        beam_splitter, build_v, conjugate_frame, decoupling_constraints, k_generator, mode_map, solve_diagonal_angle,
        tilde_coefficients, ModeMap, TransformParams,
    };
    pub use crate::dynamics::{evolve, fock_state, parity_experiment, QuantumState};
    pub use crate::hilbert::{
        annihilator, excitation_blocks, make_space, spin_operator, ConservedQuantity, HilbertSpec, Ket, Spin, SpinOp,
    };
    pub use crate::models::{
        build_linear_hamiltonian, build_quadratic_hamiltonian, build_reduced_jcm, build_transformed_target, ModelParams,
    };
    pub use crate::operator::OperatorMatrix;
    pub use crate::C64;
}
