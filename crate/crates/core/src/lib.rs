//! Numerical Finsler geometry on the pulled-back bundle `π*TM`.
//!
//! Every quantity is computed from exact truncated Taylor jets of `F²` around
//! a sampled point of the slit tangent bundle, then checked against the
//! identities it is supposed to satisfy.

pub mod check;
pub mod contact;
pub mod curvature;
pub mod chern;
pub mod config;
pub mod ehresmann;
pub mod error;
pub mod expr;
pub mod fd;
pub mod fields;
pub mod geometry;
pub mod jet;
pub mod metric;
pub mod oracle;
pub mod point;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
