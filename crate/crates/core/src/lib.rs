//! Poisson–Lie reduction of the Heisenberg double of `GL(n, ℂ)` onto the
//! trigonometric Ruijsenaars–Schneider system.
//!
//! Layers, bottom up:
//!
//! * [`matcore`]: Borel/unitary wrappers, Iwasawa factorizations, Hermitian
//!   and unitary spectral decompositions.
//! * [`double`]: the Heisenberg double, its Iwasawa maps, free Hamiltonians,
//!   quasi-adjoint action and moment map.
//! * [`reduction`]: the moment-map constraint, the global slice and the
//!   reduced Lax matrix in Darboux coordinates.
//! * [`dynamics`]: three independent trajectory engines and Poisson brackets.
//! * [`verify`]: randomized property suite spanning all layers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod double;
pub mod dynamics;
pub mod error;
pub mod matcore;
pub mod reduction;
pub mod sampling;
pub mod verify;

pub use double::{
    free_flow, hamiltonian_free, iwasawa_maps, lax_free, moment_map, quasi_adjoint, DoublePoint, FreeFlow, IwasawaMaps,
    MuWeights,
};
pub use dynamics::{
    flow_via_double, flow_via_ode, flow_via_projection, poisson_bracket, spectrum_drift, Engine, OdeSettings,
    Trajectory,
};
pub use error::{Error, Result};
pub use matcore::{BorelElement, CMatrix, Tolerances, UnitaryMatrix, C64};
pub use reduction::{
    decompose_to_slice, kks_vector, lax_components, lax_reduced, n_matrix, n_matrix_inverse, nu, reduced_hamiltonian,
    rs_hamiltonian, rs_lax, rs_lax_spectrum, slice_point, zeta, AlcovePoint, Coupling, PhasePoint,
};
