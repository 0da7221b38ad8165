//! The sum-product digraph on M_n(F_q)^(d+1).
//!
//! There is an edge `(A_1, ..., A_d, E) -> (B_1, ..., B_d, F)` exactly when
//! `A_1 B_1 + ... + A_d B_d = E + F`. Fixing the tail and any `B`-tuple
//! determines `F`, and fixing the head and any `A`-tuple determines `E`, so
//! both neighborhoods are generated on the fly from the defining equation.
//! Adjacency is never stored.
//!
//! Vertices are addressed by index: the matrix indices of
//! `(A_1, ..., A_d, E)` read as base-`q^(n^2)` digits, most significant
//! first. In that encoding the out-neighbor for `B`-tuple number `b` has
//! index `b * q^(n^2) + index(F)`, so streams come out sorted.

mod audit;
mod classify;

use std::sync::Arc;

use serde::Serialize;

pub use audit::{audit_graph, AuditOptions, NeighborhoodReport, PairWitness};
pub use classify::{common_in_bruteforce, common_out_bruteforce, CaseLabel, PairClass};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::MatFq;
use crate::ring::MatrixRing;

/// A decoded vertex `(A_1, ..., A_d, E)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub a: Vec<MatFq>,
    pub e: MatFq,
    pub index: u64,
}

/// Sizes of a sum-product digraph, for reports.
#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub q: u32,
    pub n: usize,
    pub d: usize,
    pub n_vertices: u64,
    pub degree: u64,
}

pub struct SumProductDigraph {
    ring: MatrixRing,
    d: usize,
    n_vertices: u64,
    degree: u64,
}

impl std::fmt::Debug for SumProductDigraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SumProductDigraph({:?}, d = {})", self.ring, self.d)
    }
}

impl SumProductDigraph {
    pub fn new(field: &Arc<FieldSpec>, n: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("number of products d must be at least 1".into()));
        }
        let ring = MatrixRing::new(field, n)?;
        let too_big = || Error::Config(format!("vertex set of (q, n, d) = ({}, {n}, {d}) overflows 64 bits", field.order()));
        let degree = ring.count().checked_pow(d as u32).ok_or_else(too_big)?;
        let n_vertices = degree.checked_mul(ring.count()).ok_or_else(too_big)?;
        Ok(SumProductDigraph {
            ring,
            d,
            n_vertices,
            degree,
        })
    }

    pub fn ring(&self) -> &MatrixRing {
        &self.ring
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        self.ring.field()
    }

    pub fn q(&self) -> u32 {
        self.field().order()
    }

    pub fn n(&self) -> usize {
        self.ring.n()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// q^((d+1) n^2).
    pub fn n_vertices(&self) -> u64 {
        self.n_vertices
    }

    /// Common in- and out-degree, q^(d n^2).
    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            q: self.q(),
            n: self.n(),
            d: self.d,
            n_vertices: self.n_vertices,
            degree: self.degree,
        }
    }

    /// Exponent `dn^2 - (d-1)n/2 - 1/2` of the second-eigenvalue bound.
    pub fn eigenvalue_bound_exponent(&self) -> f64 {
        let (n, d) = (self.n() as f64, self.d as f64);
        d * n * n - (d - 1.0) * n / 2.0 - 0.5
    }

    /// Splits a vertex index into its `d + 1` matrix indices `[A_1, ..., A_d, E]`.
    #[inline]
    pub fn components_into(&self, v: u64, out: &mut [u64]) {
        let c = self.ring.count();
        let mut v = v;
        for slot in out[..=self.d].iter_mut().rev() {
            *slot = v % c;
            v /= c;
        }
    }

    pub fn components(&self, v: u64) -> Vec<u64> {
        let mut out = vec![0; self.d + 1];
        self.components_into(v, &mut out);
        out
    }

    /// Inverse of [`SumProductDigraph::components`].
    pub fn compose(&self, components: &[u64]) -> Result<u64> {
        if components.len() != self.d + 1 {
            return Err(Error::DimensionMismatch(format!(
                "a vertex has {} components, got {}",
                self.d + 1,
                components.len()
            )));
        }
        let c = self.ring.count();
        components.iter().try_fold(0u64, |acc, &x| {
            if x >= c {
                Err(Error::IndexOutOfRange { index: x, size: c })
            } else {
                Ok(acc * c + x)
            }
        })
    }

    pub fn vertex(&self, v: u64) -> Result<Vertex> {
        if v >= self.n_vertices {
            return Err(Error::IndexOutOfRange {
                index: v,
                size: self.n_vertices,
            });
        }
        let parts = self.components(v);
        Ok(Vertex {
            a: parts[..self.d].iter().map(|&i| self.ring.matrix(i)).collect(),
            e: self.ring.matrix(parts[self.d]),
            index: v,
        })
    }

    /// Index of the vertex `(a[0], ..., a[d-1], e)`.
    pub fn vertex_index(&self, a: &[MatFq], e: &MatFq) -> Result<u64> {
        let n = self.n();
        let mut parts = Vec::with_capacity(self.d + 1);
        for m in a.iter().chain(std::iter::once(e)) {
            if m.field().as_ref() != self.field().as_ref() {
                return Err(Error::FieldMismatch);
            }
            if (m.rows(), m.cols()) != (n, n) {
                return Err(Error::DimensionMismatch(format!("vertex components must be {n}x{n}")));
            }
            parts.push(m.index());
        }
        self.compose(&parts)
    }

    /// `A_1 B_1 + ... + A_d B_d` on matrix indices.
    #[inline]
    fn sum_of_products(&self, a: &[u64], b: &[u64]) -> u64 {
        let r = &self.ring;
        let mut acc = r.mul(a[0], b[0]);
        for i in 1..self.d {
            acc = r.add(acc, r.mul(a[i], b[i]));
        }
        acc
    }

    /// Whether `u -> w` is an edge.
    pub fn has_edge(&self, u: u64, w: u64) -> bool {
        let mut a = [0u64; 65];
        let mut b = [0u64; 65];
        self.components_into(u, &mut a);
        self.components_into(w, &mut b);
        let lhs = self.sum_of_products(&a, &b);
        lhs == self.ring.add(a[self.d], b[self.d])
    }

    /// Out-neighbors of `v`, in increasing index order.
    pub fn out_neighbors(&self, v: u64) -> Neighbors<'_> {
        Neighbors::new(self, v, Side::Out)
    }

    /// In-neighbors of `w`, in increasing index order.
    pub fn in_neighbors(&self, w: u64) -> Neighbors<'_> {
        Neighbors::new(self, w, Side::In)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Out,
    In,
}

/// Stream of the `q^(dn^2)` neighbors on one side of a vertex.
///
/// For out-neighbors of `(A, E)` this walks every `B`-tuple and yields
/// `(B, sum A_i B_i - E)`; for in-neighbors of `(B, F)` it walks every
/// `A`-tuple and yields `(A, sum A_i B_i - F)`.
pub struct Neighbors<'g> {
    graph: &'g SumProductDigraph,
    side: Side,
    fixed: Vec<u64>,
    last: u64,
    digits: Vec<u64>,
    next: u64,
}

impl<'g> Neighbors<'g> {
    fn new(graph: &'g SumProductDigraph, v: u64, side: Side) -> Self {
        let parts = graph.components(v);
        let d = graph.d;
        Neighbors {
            graph,
            side,
            fixed: parts[..d].to_vec(),
            last: parts[d],
            digits: vec![0; d],
            next: 0,
        }
    }
}

impl Iterator for Neighbors<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        let g = self.graph;
        if self.next == g.degree {
            return None;
        }
        let s = match self.side {
            Side::Out => g.sum_of_products(&self.fixed, &self.digits),
            Side::In => g.sum_of_products(&self.digits, &self.fixed),
        };
        let item = self.next * g.ring.count() + g.ring.sub(s, self.last);
        self.next += 1;
        // Odometer over the free tuple, least significant digit last.
        for digit in self.digits.iter_mut().rev() {
            *digit += 1;
            if *digit < g.ring.count() {
                break;
            }
            *digit = 0;
        }
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.graph.degree - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Neighbors<'_> {}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(q: u64, n: usize, d: usize) -> SumProductDigraph {
        SumProductDigraph::new(&Arc::new(FieldSpec::with_order(q, None).unwrap()), n, d).unwrap()
    }

    #[test]
    fn sizes() {
        let g = graph(3, 2, 1);
        assert_eq!((g.n_vertices(), g.degree()), (6561, 81));
        let g = graph(3, 2, 2);
        assert_eq!((g.n_vertices(), g.degree()), (531_441, 6561));
        assert_eq!(g.out_neighbors(12_345).count(), 6561);
        assert!((graph(3, 2, 1).eigenvalue_bound_exponent() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn zero_vertex_neighbors() {
        let g = graph(3, 2, 1);
        let zero_out: Vec<u64> = g.out_neighbors(0).collect();
        // (B, 0 * B - 0) = (B, 0): index b * 81.
        assert_eq!(zero_out, (0..81).map(|b| b * 81).collect::<Vec<_>>());
        let zero_in: Vec<u64> = g.in_neighbors(0).collect();
        assert_eq!(zero_in, zero_out);
    }

    #[test]
    fn identity_examples() {
        let g = graph(3, 2, 1);
        let f = g.field().clone();
        let (id, zero) = (MatFq::identity(2, &f), MatFq::zeros(2, 2, &f));
        let u = g.vertex_index(std::slice::from_ref(&id), &zero).unwrap();
        let w = g.vertex_index(std::slice::from_ref(&id), &id).unwrap();
        assert!(g.has_edge(0, 0));
        assert!(g.has_edge(u, w));
        assert_eq!(g.vertex(u).unwrap().a[0], id);
    }

    #[test]
    fn streams_agree_with_edge_predicate_exhaustively() {
        let g = graph(3, 2, 1);
        let mut in_counts = vec![0u32; g.n_vertices() as usize];
        for u in 0..g.n_vertices() {
            let out: Vec<u64> = g.out_neighbors(u).collect();
            assert!(out.windows(2).all(|w| w[0] < w[1]));
            for &w in &out {
                in_counts[w as usize] += 1;
            }
            if u % 97 == 0 {
                let set: std::collections::HashSet<u64> = out.iter().copied().collect();
                for w in 0..g.n_vertices() {
                    assert_eq!(set.contains(&w), g.has_edge(u, w));
                }
            }
        }
        assert!(in_counts.iter().all(|&c| c == 81));
    }

    #[test]
    fn in_neighbors_point_back() {
        for g in [graph(3, 2, 1), graph(2, 2, 2), graph(5, 1, 3)] {
            for w in (0..g.n_vertices()).step_by(1 + g.n_vertices() as usize / 50) {
                let ins: Vec<u64> = g.in_neighbors(w).collect();
                assert_eq!(ins.len() as u64, g.degree());
                assert!(ins.iter().all(|&z| g.has_edge(z, w)));
                assert!(g.out_neighbors(w).all(|z| g.has_edge(w, z)));
            }
        }
    }

    #[test]
    fn components_round_trip() {
        let g = graph(2, 2, 3);
        for v in [0, 1, 12_345, g.n_vertices() - 1] {
            assert_eq!(g.compose(&g.components(v)).unwrap(), v);
        }
        assert!(g.vertex(g.n_vertices()).is_err());
        assert!(g.compose(&[0, 0]).is_err());
    }
}
