// negated comparisons below are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fan;
pub mod lifted;
pub mod rigidity;
pub mod scenario;
pub mod symbol;
pub mod torus;
pub mod weak;
pub mod young;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/lifted.md")]
    struct Lifted;
    #[doc = include_str!("../../../book/src/fans.md")]
    struct Fans;
    #[doc = include_str!("../../../book/src/weak.md")]
    struct Weak;
    #[doc = include_str!("../../../book/src/young.md")]
    struct Young;
    #[doc = include_str!("../../../book/src/torus.md")]
    struct Torus;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
}
