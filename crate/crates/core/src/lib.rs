pub mod decompose;
pub mod dist_core;
pub mod error;
pub mod fourier;
pub mod gen;
pub mod hitting;
pub mod invariance;
pub mod linalg;
pub mod number;
mod par;
pub mod radix;

pub use error::{Error, Result};
pub use number::{Number, Rational, Scalar, Weights};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/fourier.md")]
    mod fourier {}
    #[doc = include_str!("../../../book/src/hitting.md")]
    mod hitting {}
    #[doc = include_str!("../../../book/src/reductions.md")]
    mod reductions {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/invariance.md")]
    mod invariance {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
