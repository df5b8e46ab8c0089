//! Numerical calculus on metric graphs.
//!
//! A metric graph is a combinatorial graph whose edges carry real intervals
//! `[0, l_e]` glued at their endpoints. This crate builds such graphs,
//! computes geodesic distance fields from a base vertex, regularizes them
//! into C² "modified distances" through flat mollifiers, and provides the
//! measures, hybrid Laplacians, test-function families, volume-growth
//! diagnostics, and semilinear solvers used to probe Liouville-type
//! nonexistence behavior numerically on finite truncations of graph
//! families.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: the [`graph::MetricGraph`] container, text format, and
//!   hypothesis checks; [`generators`] for the standard families.
//! - [`geodesics`]: distance field from the base vertex, per-edge case
//!   classification, and interior peak points.
//! - [`balls`]: metric balls and annuli as vertex sets plus edge
//!   sub-intervals.
//! - [`mollify`]: flat mollifiers and the C²/C¹ modified distance fields.
//! - [`func`] and [`quad`]: functions on graphs and edge quadrature.
//! - [`calculus`]: integrals, the vertex and edge Laplacians, normal
//!   derivatives, Kirchhoff sums, and integration-by-parts verification.
//! - [`testfn`]: compactly supported and exponential test functions with
//!   derivative-bound verification.
//! - [`growth`]: annulus volume sums and weighted tail norms.
//! - [`solver`]: meshes, supersolution certificates, truncated nonlinear
//!   solves, decay probes, and inequality-chain evaluation.
//!
//! All value types are immutable after construction and safe to share
//! across threads; long sweeps parallelize internally with deterministic
//! reductions.

pub mod balls;
pub mod calculus;
pub mod error;
pub mod func;
pub mod generators;
pub mod geodesics;
pub mod graph;
pub mod growth;
pub mod mollify;
pub mod quad;
pub mod solver;
pub mod testfn;

pub use error::{QgError, Result};
pub use func::{EdgeEval, GraphFunction};
pub use geodesics::{DistanceField, EdgeCase};
pub use graph::{GraphPoint, HypothesisReport, MetricGraph};
pub use quad::QuadratureRule;
