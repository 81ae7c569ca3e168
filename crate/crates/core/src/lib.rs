// SPDX-License-Identifier: MIT OR Apache-2.0

//! Changepoint estimation with the fused lasso and Haar-filter post-processing.

mod admm;
pub mod ball;
pub mod cv;
pub mod error;
pub mod filter;
pub mod fused;
pub mod graph;
pub mod interpolant;
pub mod metrics;
pub mod signal;
pub mod sim;
pub mod tau;
pub mod trend;

pub use error::{Error, Result};
pub use signal::{parse_signal, ChangepointSet, ExtendedDistance, Signal};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fused-lasso.md")]
    mod fused_lasso {}
    #[doc = include_str!("../../../book/src/filtering.md")]
    mod filtering {}
    #[doc = include_str!("../../../book/src/threshold.md")]
    mod threshold {}
    #[doc = include_str!("../../../book/src/interpolant.md")]
    mod interpolant {}
    #[doc = include_str!("../../../book/src/trend-and-graph.md")]
    mod trend_and_graph {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
