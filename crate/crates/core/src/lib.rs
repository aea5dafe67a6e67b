//! First Robin eigenvalue of the p-Laplacian on 1D/2D domains and its
//! optimization over nonnegative boundary weights of prescribed total mass.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured simplicial meshes with explicit boundary facets.
//! - [`energy`]: P1 p-Dirichlet energy, boundary terms, Rayleigh quotient,
//!   its gradient and consistent boundary-flux recovery.
//! - [`eigensolver`]: inverse-power minimization of the Rayleigh quotient
//!   under Robin, Dirichlet, point-pinned and Dirac constraints.
//! - [`maximizer`]: the optimal weight obtained from the auxiliary torsion-like
//!   problem, the function `F` and its inverse.
//! - [`minimizer`]: infimum over weights through boundary Dirac masses,
//!   point-pinned eigenvalues and the concentration demonstration for `p <= n`.
//! - [`bounds`]: closed-form lower and upper estimates and their checks.
//! - [`oracle`]: independent reference values (transcendental roots, Bessel
//!   series, finite-difference brute force).
//! - [`io`] and [`domain`]: plain-text mesh, weight and field files, and the
//!   textual domain and value-list specifications used by the front ends.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod domain;
pub mod eigensolver;
pub mod energy;
pub mod error;
pub mod field;
pub mod io;
pub mod maximizer;
pub mod mesh;
pub mod minimizer;
pub mod oracle;
pub mod params;
pub mod weight;

mod convex;
mod linalg;
mod par;
mod quadrature;

pub use eigensolver::{EigenMode, EigenResult};
pub use error::{Error, Result};
pub use field::NodalField;
pub use mesh::Mesh;
pub use params::SolverParams;
pub use weight::BoundaryWeight;
