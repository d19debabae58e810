//! Exact arithmetic in the finite levels of a cyclotomic tower of group
//! rings over the p-adic integers, at a fixed working precision p^N.
//!
//! The crate is organized bottom-up:
//!
//! * [`padic`] - residues mod p^N and "floating" p-adic numbers with a
//!   precision ledger; the coefficient substrate for everything else.
//! * [`algebra`] - the level-n group ring Z_p\[G_n\] with G_n cyclic of
//!   order p^n: multiplication, the projection and norm maps between
//!   consecutive levels, cyclotomic factors, and the mu/lambda calculus.
//! * [`cyclo`] - character evaluation into Z_p\[zeta_{p^m}\] and exact
//!   ramified valuations in units of 1/(p^{m-1}(p-1)).
//! * [`snf`] - Smith normal form over Z/p^N, quotient-module orders and
//!   elementary divisors, ideal membership certificates.
//! * [`engine`] - closed-form growth sequences, a seeded simulator for
//!   admissible trace-compatible sequences, and the verification checks
//!   run by the CLI.
//! * [`formal`] - truncated power series over p-adic numbers and the
//!   formal group attached to the quadratic recursion t^2 - a_p t + p.

pub mod algebra;
pub mod cyclo;
pub mod engine;
mod error;
pub mod formal;
pub mod padic;
pub mod snf;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
