//! Training-data generation and evaluation for face forgery detection.
//!
//! Generators (`aim`, `blend`, `srm`) are built from the primitives in
//! [`imagekit`] and draw all randomness from a [`SeedContext`]. The
//! [`corpus`], [`metrics`] and [`fusion`] modules cover manifests, scoring
//! and ensembles. The guide in `book/` walks through each module; its
//! listings run as doctests of this crate.

pub mod aim;
pub mod blend;
pub mod corpus;
pub mod error;
pub mod fusion;
pub mod imagekit;
pub mod metrics;
pub mod scores;
pub mod seed;
pub mod srm;

pub use error::{Error, Result};
pub use seed::SeedContext;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pixels.md")]
    mod pixels {}
    #[doc = include_str!("../../../book/src/residuals.md")]
    mod residuals {}
    #[doc = include_str!("../../../book/src/aim.md")]
    mod aim {}
    #[doc = include_str!("../../../book/src/blending.md")]
    mod blending {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/fusion.md")]
    mod fusion {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
