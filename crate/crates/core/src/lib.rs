//! Exact and numerical toolkit around the unit action of a real quadratic
//! field on a planar lattice: the hyperbolic torus bundle it generates, the
//! integer-matrix topology and K-theoretic trace range of that bundle,
//! twisted group-algebra arithmetic over ℂ and over the field itself, Harper
//! operator spectra with gap labelling, and the Dirichlet-type series (unit
//! zeta factor, signed norm series, eta functions) attached to the Dirac
//! modes of the construction.
//!
//! Everything that feeds an exact comparison (total positivity, fundamental
//! domain membership, Smith forms, Krein pairings) is done in arbitrary
//! precision integer/rational arithmetic; series are evaluated in
//! configurable-precision floating point (50 decimal digits by default).

pub mod checks;
pub mod error;
pub mod harper;
pub mod hp;
pub mod lattice;
pub mod ncalgebra;
pub mod quadfield;
pub mod spectra;
pub mod topology;

pub use error::Error;
pub use quadfield::{FieldElement, UnitSystem};
