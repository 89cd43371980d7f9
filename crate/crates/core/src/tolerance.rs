//! Numerical tolerances shared across the crate.
//!
//! All checks are relative to the norms of the operands involved.

/// Orthonormality of projector bases, idempotence, unitarity.
pub const ORTH: f64 = 1e-10;

/// Unit-length check on measurement directions.
pub const GEO: f64 = 1e-12;

/// Orthogonality, equal norms and sum-to-parent for expansions,
/// relative to the parent norm.
pub const EXPANSION: f64 = 1e-9;

/// Relative residual below which a microstate counts as an eigenstate.
pub const CLASSIFY: f64 = 1e-8;

/// Conditioning guard: outcomes at or below this probability are skipped.
pub const CONDITIONING: f64 = 1e-12;

/// Default tolerance for Born-backend condition checks.
pub const BORN_CHECK: f64 = 1e-10;

/// Normalized overlap margin below 1 used to call two rays distinct.
pub const RAY: f64 = 1e-6;
