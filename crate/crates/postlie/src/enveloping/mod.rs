//! Exact-rational engine for the enveloping algebra of a structure-constant
//! Lie algebra: PBW normal forms, the Hopf operations, the lifted post-Lie
//! product, the transferred associative `*` product and the morphism between
//! the enveloping algebras of the original and the double Lie structures.
//!
//! Everything here is arbitrary-precision rational arithmetic; comparisons
//! are made degree by degree through a filtration cap, which is sound
//! because all the identities this engine checks are filtration-compatible.

mod pbw;
mod postlie;
mod structure;

pub use pbw::{PbwElement, PbwTensor};
pub use postlie::PostLieEnveloping;
pub use structure::{catalog, expand_in_basis, BasisSplitting, StructureConstants};
