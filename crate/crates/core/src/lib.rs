//! Verification workbench for the differential geometry of harmonic and
//! biharmonic maps.
//!
//! Manifolds, maps and immersions are declared with symbolic component
//! expressions; every tensor is derived by exact symbolic differentiation and
//! then evaluated pointwise through compiled tapes.

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::redundant_guards,
    clippy::needless_late_init
)]

pub mod error;
pub mod expr;
pub mod linalg;
pub mod manifold;
pub mod map;
pub mod stress;
pub mod submanifold;
pub mod corpus;
pub mod quadrature;
pub mod sampling;
pub mod scenario;

pub use error::GeometryError;
pub use expr::{parse, Expr, ParseError};
