//! Second singular value of the adjacency operator, and the mixing inequality.
//!
//! Everything works through `A A^t`, applied as two streaming passes over
//! neighborhoods. Since the digraph is regular, the all-ones vector is an
//! eigenvector of `A A^t` with eigenvalue `degree^2`, and `A A^t` maps its
//! orthogonal complement to itself. The largest eigenvalue there is the
//! square of the second singular value `sigma_2 = ||A - (degree/N) J||`.
//! For a normal adjacency matrix `sigma_2` is the second largest eigenvalue
//! modulus; in every case it is the sharp constant in the mixing inequality
//!
//! ```text
//! | e(B, C) - degree |B| |C| / N | <= sigma_2 sqrt(|B| |C|).
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::digraph::SumProductDigraph;
use crate::error::{Error, Result};

pub const DEFAULT_SPECTRAL_CAP: u64 = 1_000_000;
/// Largest vertex count for which a dense eigensolve is attempted.
pub const DENSE_CAP: u64 = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub spectral_cap: u64,
    /// Solve densely instead of iterating (only up to [`DENSE_CAP`] vertices).
    pub dense_oracle: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            tol: 1e-9,
            max_iter: 10_000,
            seed: 0,
            spectral_cap: DEFAULT_SPECTRAL_CAP,
            dense_oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub method: &'static str,
    pub n_vertices: u64,
    pub degree: u64,
    /// Estimate of the second singular value of the adjacency matrix.
    pub lambda_est: f64,
    /// Largest eigenvalue of `A A^t` orthogonal to the all-ones vector.
    pub lambda_sq_est: f64,
    pub iterations: usize,
    /// `||A A^t v - lambda^2 v|| / lambda^2` for the returned direction.
    pub residual: f64,
    pub converged: bool,
    /// `degree^2` is a simple eigenvalue of `A A^t` (equivalently the graph
    /// is connected in the sense needed), read off `lambda_sq_est < degree^2`.
    pub degree_eigenvalue_simple: bool,
    pub paper_exponent: f64,
    pub paper_bound_value: f64,
    /// `lambda_est / paper_bound_value`.
    pub empirical_constant: f64,
    /// `log_q(lambda_est)`; absent when `lambda_est = 0`.
    pub measured_exponent: Option<f64>,
    /// `paper_exponent - measured_exponent`.
    pub exponent_margin: Option<f64>,
}

/// `out = A^t x`: each vertex collects `x` over its in-neighbors.
pub fn apply_adjacency_transpose(graph: &SumProductDigraph, x: &[f64], out: &mut [f64]) {
    out.par_iter_mut().enumerate().for_each(|(w, slot)| {
        *slot = graph.in_neighbors(w as u64).map(|z| x[z as usize]).sum();
    });
}

/// `out = A x`: each vertex collects `x` over its out-neighbors.
pub fn apply_adjacency(graph: &SumProductDigraph, x: &[f64], out: &mut [f64]) {
    out.par_iter_mut().enumerate().for_each(|(u, slot)| {
        *slot = graph.out_neighbors(u as u64).map(|w| x[w as usize]).sum();
    });
}

/// `(A A^t) x`, computed matrix-free.
///
/// Each output entry is summed sequentially in neighbor order, so the result
/// does not depend on how the vertex range is split across workers.
pub fn operator_aat_apply(graph: &SumProductDigraph, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len() as u64, graph.n_vertices(), "vector length must equal the vertex count");
    let mut tmp = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    apply_adjacency_transpose(graph, x, &mut tmp);
    apply_adjacency(graph, &tmp, &mut out);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn check_cap(graph: &SumProductDigraph, cap: u64) -> Result<()> {
    if graph.n_vertices() > cap {
        return Err(Error::SpectralCapExceeded {
            vertices: graph.n_vertices(),
            cap,
        });
    }
    Ok(())
}

fn finish_report(
    graph: &SumProductDigraph,
    method: &'static str,
    lambda_sq: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
) -> SpectrumReport {
    let lambda_sq = lambda_sq.max(0.0);
    let lambda = lambda_sq.sqrt();
    let q = graph.q() as f64;
    let degree = graph.degree() as f64;
    let paper_exponent = graph.eigenvalue_bound_exponent();
    let paper_bound_value = q.powf(paper_exponent);
    let measured_exponent = (lambda > 0.0).then(|| lambda.ln() / q.ln());
    SpectrumReport {
        method,
        n_vertices: graph.n_vertices(),
        degree: graph.degree(),
        lambda_est: lambda,
        lambda_sq_est: lambda_sq,
        iterations,
        residual,
        converged,
        degree_eigenvalue_simple: lambda_sq < degree * degree * (1.0 - 1e-9),
        paper_exponent,
        paper_bound_value,
        empirical_constant: lambda / paper_bound_value,
        measured_exponent,
        exponent_margin: measured_exponent.map(|m| paper_exponent - m),
    }
}

fn residual_of(graph: &SumProductDigraph, v: &[f64], lambda_sq: f64) -> f64 {
    let w = operator_aat_apply(graph, v);
    let scale = lambda_sq.max(f64::MIN_POSITIVE);
    w.iter().zip(v).map(|(a, b)| (a - lambda_sq * b).powi(2)).sum::<f64>().sqrt() / (scale * norm(v))
}

/// Power iteration for the top eigenvalue of `A A^t` on the complement of
/// the all-ones vector. The iterate is re-centered every step. Stops when
/// both the relative change of the Rayleigh quotient and the relative
/// residual drop to `tol`.
///
/// With `dense_oracle` set, solves densely instead (see [`dense_second_eigenvalue`]).
pub fn second_singular_direction(graph: &SumProductDigraph, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    check_cap(graph, opts.spectral_cap)?;
    if opts.dense_oracle {
        let (lambda_sq, vector) = dense_second_eigenpair(graph)?;
        let residual = residual_of(graph, &vector, lambda_sq);
        return Ok(finish_report(graph, "dense", lambda_sq, 0, residual, residual <= opts.tol));
    }
    let nv = graph.n_vertices() as usize;
    let degree_sq = (graph.degree() as f64).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
    remove_mean(&mut v);
    let len = norm(&v);
    if len == 0.0 {
        // One vertex: the complement is trivial.
        return Ok(finish_report(graph, "power_iteration", 0.0, 0, 0.0, true));
    }
    v.iter_mut().for_each(|x| *x /= len);

    let mut previous = f64::NAN;
    let mut best = (f64::INFINITY, 0.0);
    for iteration in 1..=opts.max_iter {
        let mut w = operator_aat_apply(graph, &v);
        remove_mean(&mut w);
        let lambda_sq = dot(&v, &w);
        let w_norm = norm(&w);
        if w_norm <= degree_sq * f64::EPSILON {
            // The complement is (numerically) annihilated.
            return Ok(finish_report(graph, "power_iteration", 0.0, iteration, w_norm / degree_sq, true));
        }
        let residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda_sq * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / lambda_sq.abs();
        let change = ((lambda_sq - previous) / lambda_sq).abs();
        if residual < best.0 {
            best = (residual, lambda_sq);
        }
        if residual <= opts.tol && change <= opts.tol {
            return Ok(finish_report(graph, "power_iteration", lambda_sq, iteration, residual, true));
        }
        previous = lambda_sq;
        v = w;
        v.iter_mut().for_each(|x| *x /= w_norm);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: best.0,
        lambda_est: best.1.max(0.0).sqrt(),
    })
}

/// Dense adjacency matrix built from the edge predicate alone (not from the
/// neighbor streams).
pub fn dense_adjacency(graph: &SumProductDigraph) -> Result<DMatrix<f64>> {
    check_cap(graph, DENSE_CAP)?;
    let nv = graph.n_vertices() as usize;
    Ok(DMatrix::from_fn(nv, nv, |u, w| {
        if graph.has_edge(u as u64, w as u64) {
            1.0
        } else {
            0.0
        }
    }))
}

/// Top eigenpair of `P A A^t P` with `P` the projection onto the
/// complement of the all-ones vector, by a dense symmetric eigensolve.
pub fn dense_second_eigenpair(graph: &SumProductDigraph) -> Result<(f64, Vec<f64>)> {
    let a = dense_adjacency(graph)?;
    let nv = a.nrows();
    let centering = DMatrix::from_fn(nv, nv, |i, j| {
        if i == j {
            1.0 - 1.0 / nv as f64
        } else {
            -1.0 / nv as f64
        }
    });
    let gram = &a * a.transpose();
    let projected = &centering * gram * &centering;
    let eig = SymmetricEigen::new(projected);
    let (best, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty spectrum");
    Ok((value, eig.eigenvectors.column(best).iter().copied().collect()))
}

/// Eigenvalues of `A A^t` by a dense eigensolve, largest first.
pub fn dense_aat_eigenvalues(graph: &SumProductDigraph) -> Result<Vec<f64>> {
    let a = dense_adjacency(graph)?;
    let mut values: Vec<f64> = SymmetricEigen::new(&a * a.transpose()).eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// `(A A^t) x` for several vectors, with every entry of `A A^t` taken from
/// the rank-based common-neighbor prediction of its vertex pair. The matrix
/// is generated one row at a time and never stored.
pub fn predicted_aat_apply(graph: &SumProductDigraph, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let nv = graph.n_vertices() as usize;
    let rows: Vec<Vec<f64>> = (0..nv)
        .into_par_iter()
        .map(|u| {
            let mut acc = vec![0.0; xs.len()];
            for v in 0..nv {
                let c = graph.classify_pair(u as u64, v as u64).predicted_common;
                if c != 0 {
                    for (slot, x) in acc.iter_mut().zip(xs) {
                        *slot += c as f64 * x[v];
                    }
                }
            }
            acc
        })
        .collect();
    (0..xs.len())
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport {
    pub size_b: u64,
    pub size_c: u64,
    /// Number of edges from `B` to `C`.
    pub e_bc: u64,
    /// `degree |B| |C| / N`.
    pub main_term: f64,
    pub deviation: f64,
    /// `lambda sqrt(|B| |C|)`.
    pub error_bound: f64,
    pub holds: bool,
}

/// Counts `e(B, C)` exactly by streaming the out-neighbors of `B` and
/// compares it with the mixing inequality for the given `lambda`. Duplicate
/// vertices are ignored.
pub fn mixing_check(
    graph: &SumProductDigraph,
    b: &[u64],
    c: &[u64],
    lambda: f64,
    budget: u128,
) -> Result<MixingReport> {
    let mut b = b.to_vec();
    let mut c = c.to_vec();
    b.sort_unstable();
    b.dedup();
    c.sort_unstable();
    c.dedup();
    if b.is_empty() || c.is_empty() {
        return Err(Error::Config("mixing check needs nonempty vertex sets".into()));
    }
    if let Some(&bad) = b.iter().chain(&c).find(|&&v| v >= graph.n_vertices()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            size: graph.n_vertices(),
        });
    }
    let work = b.len() as u128 * graph.degree() as u128;
    if work > budget {
        return Err(Error::BudgetExceeded { requested: work, budget });
    }
    let e_bc: u64 = b
        .par_iter()
        .map(|&u| {
            graph
                .out_neighbors(u)
                .filter(|w| c.binary_search(w).is_ok())
                .count() as u64
        })
        .sum();
    let (sb, sc) = (b.len() as f64, c.len() as f64);
    let main_term = graph.degree() as f64 * sb * sc / graph.n_vertices() as f64;
    let deviation = (e_bc as f64 - main_term).abs();
    let error_bound = lambda * (sb * sc).sqrt();
    Ok(MixingReport {
        size_b: b.len() as u64,
        size_c: c.len() as u64,
        e_bc,
        main_term,
        deviation,
        error_bound,
        holds: deviation <= error_bound,
    })
}
