//! Smooth imitation learning for online sequence prediction.
//!
//! A policy maps a state (recent contexts plus its own recent actions) to the
//! next action. Training alternates roll-outs, virtual expert feedback and
//! smooth regression-forest fits, blending each new forest into the current
//! policy.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod autoregressor;
pub mod error;
pub mod experiments;
pub mod forest;
pub mod metrics;
pub mod policy;
pub mod simile;
pub mod theory;
pub mod trajectory;

pub use error::{Result, SimileError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/autoregressor.md")]
    mod autoregressor {}
    #[doc = include_str!("../../../book/src/forest.md")]
    mod forest {}
    #[doc = include_str!("../../../book/src/policy.md")]
    mod policy {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
