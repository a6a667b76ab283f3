//! Least favorable distributions and minimax robust likelihood-ratio tests.
//!
//! Solvers for the four robust tests live in [`lfd`]. Their ratios feed the
//! exact laws in [`llr`], the fixed-sample tests in [`fixed_sample`] and the
//! sequential tests in [`sequential`]. [`limits`] tells how large the
//! uncertainty sets may be.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod divergence;
pub mod error;
pub mod fixed_sample;
pub mod lfd;
pub mod limits;
pub mod llr;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod sequential;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/nominal-models.md")]
    mod nominal_models {}
    #[doc = include_str!("../../../book/src/kl-balls.md")]
    mod kl_balls {}
    #[doc = include_str!("../../../book/src/contamination.md")]
    mod contamination {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/log-ratio-laws.md")]
    mod log_ratio_laws {}
    #[doc = include_str!("../../../book/src/fixed-sample.md")]
    mod fixed_sample {}
    #[doc = include_str!("../../../book/src/sequential.md")]
    mod sequential {}
}
