//! Degree, normality and prediction audits.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{common_in_bruteforce, common_out_bruteforce, PairClass, SumProductDigraph};
use crate::error::{Error, Result};

/// Pairs are audited exhaustively when `n_vertices^2` is at most this.
pub const EXHAUSTIVE_PAIR_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct AuditOptions {
    pub vertex_sample: u64,
    pub pair_sample: u64,
    pub seed: u64,
    /// Audit every vertex regardless of `vertex_sample`.
    pub exhaustive: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            vertex_sample: 1000,
            pair_sample: 10_000,
            seed: 0,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWitness {
    pub u: u64,
    pub v: u64,
    pub class: PairClass,
    pub common_out: u64,
    pub common_in: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodReport {
    pub vertices_checked: u64,
    pub exhaustive_vertices: bool,
    pub out_degree_min: u64,
    pub out_degree_max: u64,
    pub in_degree_min: u64,
    pub in_degree_max: u64,
    /// Sum of audited out-degrees, and the same for in-degrees. On an
    /// exhaustive audit both equal `n_vertices * degree`.
    pub out_degree_total: u64,
    pub in_degree_total: u64,
    pub normality_pairs_checked: u64,
    pub diagonal_pairs_checked: u64,
    pub exhaustive_pairs: bool,
    pub normality_violations: u64,
    /// Whether `|N+| = |N-|` holds for every pair at these parameters (`n = 1`).
    pub normality_expected: bool,
    pub first_normality_violation: Option<PairWitness>,
    /// Audited pairs per case label.
    pub case_tallies: BTreeMap<String, u64>,
    /// Off-diagonal predicted `|N+|` values and how often each occurred.
    pub predicted_value_tallies: BTreeMap<u64, u64>,
}

struct VertexCheck {
    out_degree: u64,
    in_degree: u64,
}

fn check_vertex(graph: &SumProductDigraph, v: u64) -> Result<VertexCheck> {
    let mut out: Vec<u64> = graph.out_neighbors(v).collect();
    if let Some(&w) = out.iter().find(|&&w| !graph.has_edge(v, w)) {
        return Err(Error::AuditFailure(format!("out-neighbor {w} of {v} is not joined by an edge")));
    }
    out.sort_unstable();
    out.dedup();
    let mut ins: Vec<u64> = graph.in_neighbors(v).collect();
    if let Some(&z) = ins.iter().find(|&&z| !graph.has_edge(z, v)) {
        return Err(Error::AuditFailure(format!("in-neighbor {z} of {v} is not joined by an edge")));
    }
    ins.sort_unstable();
    ins.dedup();
    let check = VertexCheck {
        out_degree: out.len() as u64,
        in_degree: ins.len() as u64,
    };
    if check.out_degree != graph.degree() || check.in_degree != graph.degree() {
        return Err(Error::AuditFailure(format!(
            "vertex {v} has out-degree {} and in-degree {}, expected {}",
            check.out_degree,
            check.in_degree,
            graph.degree()
        )));
    }
    Ok(check)
}

fn check_pair(graph: &SumProductDigraph, u: u64, v: u64) -> Result<PairWitness> {
    let class = graph.classify_pair(u, v);
    let common_out = common_out_bruteforce(graph, u, v, u64::MAX)?;
    let common_in = common_in_bruteforce(graph, u, v, u64::MAX)?;
    let witness = PairWitness {
        u,
        v,
        class,
        common_out,
        common_in,
    };
    if common_out != class.predicted_common || common_in != class.predicted_common_in {
        return Err(Error::AuditFailure(format!(
            "prediction mismatch: {witness:?}"
        )));
    }
    Ok(witness)
}

/// Checks regularity on a vertex sample and normality plus the rank-based
/// predictions on a sample of distinct pairs and on the diagonal of the
/// vertex sample.
///
/// Every vertex is audited when `exhaustive` is set or the graph has no more
/// vertices than the sample size. Pairs are audited exhaustively when
/// `n_vertices^2 <= EXHAUSTIVE_PAIR_LIMIT`. When every vertex is audited
/// the in-degrees are additionally recounted from the out-neighbor streams.
///
/// Returns `AuditFailure` on any degree defect or prediction mismatch, and
/// on a normality violation where normality is a theorem.
pub fn audit_graph(graph: &SumProductDigraph, options: &AuditOptions) -> Result<NeighborhoodReport> {
    if options.vertex_sample == 0 || options.pair_sample == 0 {
        return Err(Error::Config("audit sample sizes must be at least 1".into()));
    }
    let nv = graph.n_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let exhaustive_vertices = options.exhaustive || nv <= options.vertex_sample;
    let vertices: Vec<u64> = if exhaustive_vertices {
        (0..nv).collect()
    } else {
        (0..options.vertex_sample).map(|_| rng.gen_range(0..nv)).collect()
    };
    let exhaustive_pairs = nv.checked_mul(nv).is_some_and(|p| p <= EXHAUSTIVE_PAIR_LIMIT);
    let mut pairs: Vec<(u64, u64)> = if exhaustive_pairs {
        (0..nv).flat_map(|u| (0..nv).map(move |v| (u, v))).collect()
    } else {
        // Off-diagonal pairs; the diagonal comes from the vertex sample.
        (0..options.pair_sample)
            .map(|_| loop {
                let (u, v) = (rng.gen_range(0..nv), rng.gen_range(0..nv));
                if u != v {
                    break (u, v);
                }
            })
            .collect()
    };
    if !exhaustive_pairs {
        pairs.extend(vertices.iter().map(|&v| (v, v)));
    }

    let checks = vertices
        .par_iter()
        .map(|&v| check_vertex(graph, v))
        .collect::<Result<Vec<_>>>()?;

    if exhaustive_vertices {
        let mut in_counts = vec![0u64; nv as usize];
        for v in 0..nv {
            for w in graph.out_neighbors(v) {
                in_counts[w as usize] += 1;
            }
        }
        if let Some((w, &c)) = in_counts.iter().enumerate().find(|(_, &c)| c != graph.degree()) {
            return Err(Error::AuditFailure(format!(
                "vertex {w} is the head of {c} edges, expected {}",
                graph.degree()
            )));
        }
    }

    let witnesses = pairs
        .par_iter()
        .map(|&(u, v)| check_pair(graph, u, v))
        .collect::<Result<Vec<_>>>()?;

    let normality_expected = graph.n() == 1;
    let mut report = NeighborhoodReport {
        vertices_checked: checks.len() as u64,
        exhaustive_vertices,
        out_degree_min: checks.iter().map(|c| c.out_degree).min().unwrap_or(0),
        out_degree_max: checks.iter().map(|c| c.out_degree).max().unwrap_or(0),
        in_degree_min: checks.iter().map(|c| c.in_degree).min().unwrap_or(0),
        in_degree_max: checks.iter().map(|c| c.in_degree).max().unwrap_or(0),
        out_degree_total: checks.iter().map(|c| c.out_degree).sum(),
        in_degree_total: checks.iter().map(|c| c.in_degree).sum(),
        normality_pairs_checked: witnesses.len() as u64,
        diagonal_pairs_checked: witnesses.iter().filter(|w| w.u == w.v).count() as u64,
        exhaustive_pairs,
        normality_violations: 0,
        normality_expected,
        first_normality_violation: None,
        case_tallies: BTreeMap::new(),
        predicted_value_tallies: BTreeMap::new(),
    };
    for w in witnesses {
        *report.case_tallies.entry(w.class.case.as_str().to_string()).or_default() += 1;
        if w.u != w.v {
            *report.predicted_value_tallies.entry(w.class.predicted_common).or_default() += 1;
        }
        if w.common_out != w.common_in {
            report.normality_violations += 1;
            if report.first_normality_violation.is_none() {
                report.first_normality_violation = Some(w);
            }
        }
    }
    if normality_expected {
        if let Some(w) = &report.first_normality_violation {
            return Err(Error::AuditFailure(format!("normality violated: {w:?}")));
        }
    }
    Ok(report)
}
