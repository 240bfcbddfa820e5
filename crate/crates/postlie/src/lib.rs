//! Isospectral Lax flows on matrix Lie algebras, solved through classical
//! R-matrix splittings and the associated post-Lie algebra machinery.
//!
//! The crate has two halves that check each other:
//!
//! * a numeric half ([`matrix`], [`expmap`], [`splitting`], [`magnus`],
//!   [`flow`]) working with dense `f64` matrices: projector splittings
//!   `π₊`/`π₋`, the post-Lie product `a ▷ b = -[π₊(a), b]`, the BCH-type
//!   fixed-point recursion driving the group factorization
//!   `exp(t a₀) = exp(π₊χ) exp(π₋χ)`, and the factorized flow solver for
//!   `ȧ = [a, π₊(a)]` with spectral diagnostics;
//! * an exact half ([`enveloping`]) over arbitrary-precision rationals:
//!   a PBW normal-form engine for the enveloping algebra, its Hopf
//!   structure, the lifted post-Lie product, the transferred associative
//!   `*` product and the algebra morphism relating the enveloping algebras
//!   of the two Lie structures.
//!
//! [`verify`] bundles both halves into seeded, reproducible identity
//! suites that the `postlie` CLI exposes.
#![allow(clippy::needless_range_loop)] // index loops read better in matrix code

pub mod enveloping;
pub mod error;
pub mod expmap;
pub mod flow;
pub mod jsonio;
pub mod magnus;
pub mod matrix;
pub mod scalar;
pub mod splitting;
pub mod verify;

pub use error::Error;
pub use matrix::{GroupElement, Matrix};
pub use scalar::Scalar;
pub use splitting::{Side, SplittingKind, SplittingSpec, ValidationReport};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Caps the global thread pool used for parallel diagnostics. Returns false
/// when the pool was already initialized.
pub fn set_thread_cap(threads: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .is_ok()
}
