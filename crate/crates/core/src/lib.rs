//! Joint access-point switching and downlink power allocation for cell-free
//! massive MIMO with MRT precoding.
//!
//! The crate minimises the total power (amplifier-scaled transmit power plus
//! a fixed cost per active AP) subject to per-user spectral-efficiency
//! targets, using
//!
//! * an exact branch-and-bound over AP activity flags ([`misocp`]),
//! * a group-sparse reweighted heuristic followed by an active-set search
//!   ([`sparsity`]),
//! * an exhaustive enumeration oracle for small networks,
//!
//! all on top of an embedded second-order cone solver ([`conic`]).

pub mod bench;
pub mod conic;
pub mod designer;
pub mod error;
pub mod misocp;
pub mod scenario;
pub mod semodel;
pub mod sparsity;

pub use error::{Error, Result};
