//! Exact Birch–Swinnerton-Dyer bookkeeping for elliptic curves over `F_q(t)`.
//!
//! The pipeline computes local reduction data at every place of `P^1`, the
//! L-function as an integer polynomial in `T = q^(-s)` (by fiber counting and,
//! independently, by the Euler product), canonical heights of user-supplied
//! Mordell–Weil generators, and then solves the special-value formula for the
//! order of the Tate–Shafarevich group. All arithmetic is exact.

pub mod error;
pub mod bsd;
pub mod cli;
pub mod curve;
pub mod ff;
pub mod funcfield;
pub mod localred;
pub mod lseries;
pub mod par;
pub mod pipeline;

pub use error::{Error, Result};
