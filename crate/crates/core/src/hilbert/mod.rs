//! Finite-dimensional complex Hilbert-space primitives.
//!
//! Everything here is immutable after construction. Projectors are stored as
//! orthonormal range bases attached to contiguous runs of tensor factors, so a
//! lifted spin projector on a large spatial space costs memory proportional to
//! its local rank, not the ambient dimension.

mod linalg;
mod projector;
mod spin;
mod state;
mod unitary;

pub use linalg::{
    axpy, diff_norm, inner, max_abs_diff, norm, norm_sqr, orthogonalize, orthonormality_deviation,
    phase, random_complex,
};
pub use projector::{born, lift, Projector, Resolution};
pub use spin::{spin_projector, Direction, Outcome};
pub use state::{tensor, FactorRole, StateVector};
pub use unitary::{apply_unitary, Unitary};
