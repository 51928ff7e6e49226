//! Thin orbits of finitely generated subgroups of SL2(Z), their congruence
//! images, and the combinatorial sieve applied to the values `c^2 + d^2` on
//! the orbit of bottom rows `(0, 1)Γ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: exact 2x2 integer matrices, presentations, Γ∞-coset reps.
//! * [`orbit`]: breadth-first enumeration of the orbit up to a height,
//!   smoothed weights and almost-prime counts.
//! * [`congruence`]: images of Γ in SL2(Z/qZ), ramified primes and local
//!   densities ω(q).
//! * [`sieve`]: progression sums, remainders, the Legendre identity and the
//!   β-sieve envelopes.
//! * [`spectral`]: the scalar kernels K_T, L_T, the base point rule and the
//!   power-law growth fit.
//! * [`arith`] and [`ratio`]: shared integer and rational helpers.

pub mod arith;
pub mod congruence;
pub mod group;
pub mod orbit;
pub mod ratio;
pub mod sieve;
pub mod spectral;

pub use congruence::{DensityRecord, DensityTable, ProjectionGroup};
pub use group::{GroupElement, GroupError, GroupPresentation};
pub use orbit::{OrbitPoint, OrbitSlice, WeightMode, WeightTable};
pub use sieve::{SieveConfig, SieveReport, SieveSequence};
pub use spectral::GrowthFit;
