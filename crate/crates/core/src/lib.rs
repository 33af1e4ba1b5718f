//! Desk-scale numerical harmonic analysis on uniform grids.
//!
//! The crate discretizes functions on a bounded box in `R^n` (n = 1 or 2) and
//! provides, exactly on the discrete measure wherever the underlying argument
//! is a per-cube or per-point inequality:
//!
//! - the Morrey, weak Morrey, Lebesgue, weak Lebesgue, BMO and Lipschitz
//!   norms/seminorms ([`norms`]), with the weak norms taken as exact suprema
//!   over order statistics rather than level-grid scans;
//! - Calderon-Zygmund convolutions, fractional integrals and commutators
//!   `[b,T]f = b·Tf − T(bf)` ([`operators`]), with the principal value
//!   realized by diagonal-cell exclusion on the symmetric lattice;
//! - verifiers for the weak-to-strong Morrey embedding with its explicit
//!   constant `2(q1/(q2−q1))^{1/q2}`, the per-cube Chebyshev links, the
//!   pointwise domination of commutators by fractional integrals, and
//!   bounded-ratio checks for the oscillation characterizations of the
//!   Lipschitz seminorm and for operator norms ([`embeddings`]);
//! - the reciprocal-kernel Fourier machinery ([`paluszynski`]): a periodized
//!   expansion of `1/K` on a cube away from the singularity, unimodular test
//!   pairs on offset cubes, and the identity tying mean oscillation to
//!   commutator pairings, which yields computable lower bounds on
//!   `‖[b,T]‖_{L^p → L^{p,∞}}`.
//!
//! Everything is deterministic: corpora and sampled cube families are seeded,
//! sums use fixed-order compensated accumulation, and parallel loops only use
//! order-independent max reductions.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod paluszynski;
pub mod sum;

pub use error::{Error, Result};
pub use grid::{Cube, CubeFamily, FamilyPolicy, Generator, Grid, GridFunction, SummedTable};
pub use norms::{DistributionFunction, NormParams, OscForm};
pub use operators::KernelSpec;
