//! Construction of elliptic differential operators that annihilate a given
//! finite-dimensional space of real-analytic functions on a flat torus (or a
//! disjoint union of tori).
//!
//! Functions are exact trigonometric polynomials ([`trig::TrigPoly`]) with
//! coefficients either in binary floats or in the exact field `ℚ(2π)`
//! ([`exact::Exact`]). The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod bump;
pub mod diffop;
pub mod error;
pub mod exact;
pub mod funcspace;
pub mod global;
pub mod grid;
pub mod jet;
pub mod lift;
pub mod linalg;
pub mod multi_index;
pub mod pipeline;
pub mod pointwise;
pub mod scalar;
pub mod sobolev;
pub mod strata;
pub mod trig;
pub mod witness;

pub use diffop::{Coefficient, DiffOp};
pub use error::Error;
pub use exact::Exact;
pub use funcspace::{Domain, DomainFn, FunctionSpace};
pub use grid::{Grid, GridField};
pub use jet::{Expr, JetSeries};
pub use linalg::Mat;
pub use multi_index::MultiIndex;
pub use scalar::Scalar;
pub use trig::{Phase, TrigPoly};
