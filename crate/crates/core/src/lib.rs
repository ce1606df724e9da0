//! Constructive factorization of 2x2 singular row matrices over real
//! quadratic integer rings into bounded products of idempotent matrices,
//! with certificates recording every conjugation and factor so the result
//! can be re-checked independently of the construction.

pub mod certify;
pub mod cli;
pub mod elemdecomp;
pub mod error;
pub mod intlib;
pub mod mat2;
pub mod omodule;
pub mod pipeline;
pub mod quadring;

pub use certify::{Certificate, Counts, Flag};
pub use error::{Error, Result};
pub use pipeline::{factor_singular_row, Budgets, PipelineStats};
pub use quadring::{QuadInt, RingSpec};
