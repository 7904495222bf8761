//! Replicator dynamics on the probability simplex.
//!
//! The library treats a population state as a point of the simplex and a
//! fitness map as a function assigning a growth rate to every type. Around
//! that pair it provides:
//!
//! - simplex geometry: tangent vectors, the Fisher-Rao-Shahshahani metric,
//!   local (drop-last) coordinates, and interior sampling ([`simplex`]);
//! - fitness maps and their bracket algebra: constant, linear, Markov
//!   generator, and custom maps, the hat map onto replicator vector fields,
//!   and the replicator bracket with axiom reports ([`fitness`]);
//! - trajectory integration, the finite-difference Jacobi-Lie bracket used as
//!   an independent oracle, and the field-to-fitness inverse ([`dynamics`]);
//! - the Svirezhev Lagrangian, the Legendre transform to a Hamiltonian flow
//!   integrated by the implicit midpoint rule, and reversibility-based
//!   periodic-orbit detection for two types ([`variational`]);
//! - span tests, bracket closures, and the Vandermonde/Schur machinery behind
//!   a sampled controllability verdict for constant-plus-linear controls
//!   ([`controllability`]).
//!
//! Everything is deterministic: sampling takes explicit seeds, integrators use
//! fixed steps, and reports serialize to stable JSON.

pub mod controllability;
pub mod dynamics;
pub mod error;
pub mod fitness;
pub mod simplex;
pub mod variational;

pub use error::{Error, Result};
