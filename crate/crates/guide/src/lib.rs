//! The chapters of the guide in `book/src`, compiled so that every Rust
//! snippet in them runs as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/fields-and-matrices.md")]
pub mod fields_and_matrices {}
#[doc = include_str!("../../../book/src/rank-census.md")]
pub mod rank_census {}
#[doc = include_str!("../../../book/src/digraph.md")]
pub mod digraph {}
#[doc = include_str!("../../../book/src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("../../../book/src/counting.md")]
pub mod counting {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
