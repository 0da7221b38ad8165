//! Sum-product digraphs over the matrix ring M_n(F_q).
//!
//! The vertex set is `M_n(F_q)^(d+1)`, and `(A_1, ..., A_d, E) -> (B_1, ..., B_d, F)`
//! is an edge when `A_1 B_1 + ... + A_d B_d = E + F`. The crate provides
//! finite-field and matrix arithmetic, exact rank censuses, neighborhood
//! audits, a matrix-free second singular value, and solution and incidence
//! counts with their error bounds.

pub mod census;
pub mod config;
pub mod digraph;
pub mod error;
pub mod field;
pub mod incidence;
pub mod matrix;
pub mod ring;
pub mod spectrum;
pub mod verify;

pub use digraph::{audit_graph, AuditOptions, CaseLabel, NeighborhoodReport, PairClass, SumProductDigraph};
pub use error::{Error, Result};
pub use field::{Elem, FieldSpec};
pub use incidence::{FamilySizes, IncidenceReport, SetFamily};
pub use matrix::MatFq;
pub use ring::MatrixRing;
pub use spectrum::{SpectrumOptions, SpectrumReport};
