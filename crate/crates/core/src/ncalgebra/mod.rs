//! Cocycles and twisted group rings over ℂ and over the quadratic field
//! itself, finite-truncation checks of the Fourier-mode representation
//! identities, and the Krein-space structure attached to the Galois
//! involution.

pub mod cocycle;
pub mod krein;
pub mod repcheck;
pub mod twisted;

pub use cocycle::{
    sigma_xi, sl2_invariance_test, ArithmeticCocycle, FluxValue, SolvCocycle, TorusCocycle,
};
pub use krein::KreinVector;
pub use twisted::{ArithRing, SolvElem, SolvRing, TorusRing, TwistedElement, TwistedRing};
