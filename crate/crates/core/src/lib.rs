//! Square-root polynomials over prime fields.
//!
//! A polynomial `f` over `F_p` is a square-root polynomial when `f(a)^2 = a` for every
//! quadratic residue `a`. This crate builds the Tonelli-Shanks family, converts between
//! sign vectors and coefficient vectors, counts exact degree distributions by Gray-code
//! enumeration, evaluates the heuristic degree model, and finds all minimal-degree members
//! with a meet-in-the-middle search.

pub mod census;
pub mod cli;
pub mod error;
pub mod exec;
pub mod field;
pub mod fourier;
pub(crate) mod gray;
pub mod heuristic;
pub mod poly;
pub mod search;
pub mod signs;
pub mod tables;
pub mod ts;

pub use census::DegreeHistogram;
pub use error::{Error, Result};
pub use exec::Parallelism;
pub use field::{make_field_ctx, FieldCtx};
pub use poly::{Degree, Poly};
pub use search::SearchReport;
pub use signs::SignVector;
