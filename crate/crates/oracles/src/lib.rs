//! Direct, unoptimized reference computations. Each one follows the textbook
//! definition and shares no code with `simile`.

#![allow(clippy::needless_range_loop)]

pub mod cart;
pub mod leaf;
pub mod normal_eq;
pub mod split;
