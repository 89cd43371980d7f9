//! Equiamplitude microstate counting on finite Hilbert-space truncations,
//! and the locality conditions of the EPRB experiment evaluated for
//! Born-rule quantum mechanics, the many-worlds counting rule, a one-world
//! deterministic variant, and deterministic local strategies.
//!
//! Module map:
//!
//! - [`hilbert`]: states, projectors, resolutions, unitaries, the Born rule.
//! - [`expansion`]: generic and adapted equiamplitude expansions, microstate
//!   classification, counting and imprecise probabilities.
//! - [`invariance`]: swap unitaries and invariance witnesses for expansions.
//! - [`eprb`]: singlet and product states, joint distributions, CHSH.
//! - [`conditions`]: parameter/outcome independence, completeness,
//!   factorizability and the propositional audit.
//! - [`lambda_one`]: the one-world hidden-variable model and its Monte Carlo.
//! - [`format`]: nine-significant-digit number formatting.
//! - [`acceptance`]: end-to-end acceptance checks shared by tests and the CLI.

pub mod acceptance;
pub mod conditions;
pub mod eprb;
pub mod error;
pub mod expansion;
pub mod format;
pub mod hilbert;
pub mod invariance;
pub mod lambda_one;
pub mod tolerance;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
