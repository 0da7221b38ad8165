//! Predicting common neighborhoods from ranks.
//!
//! For vertices `u = (A, E)` and `v = (A', E')` put
//! `M = (A_1 - A'_1 | ... | A_d - A'_d)` (n x dn) and `Y = E - E'`. A common
//! out-neighbor `(B, F)` is a solution `X = (B_1; ...; B_d)` of `M X = Y`,
//! with `F` then determined, so
//!
//! ```text
//! |N+(u, v)| = 0                  if rank(M | Y) > rank(M)
//!            = q^(n (dn - m))     otherwise, m = rank(M)
//! ```
//!
//! A common in-neighbor `(C, G)` solves `(C_1 | ... | C_d) S = Y` where `S`
//! stacks the differences vertically (dn x n); its count has the same shape
//! with `rank(S)` and `rank(S; Y)`. Out-side solvability asks for
//! `col(Y) <= col(M)`, in-side solvability for `row(Y) <= row(S)`, so the two
//! counts agree for `n = 1` but not in general, even for `d = 1`.

use serde::Serialize;

use super::SumProductDigraph;
use crate::error::{Error, Result};
use crate::field::Elem;
use crate::matrix::split_rank_in_place;
use crate::ring::MAX_ENTRIES;

/// Which branch of the solvability analysis of `M X = Y` a pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseLabel {
    /// `rank(M) = n`: the system is always solvable.
    FullRank,
    /// `rank(Y) > rank(M)`: no solution.
    #[serde(rename = "NoSolution_kGTm")]
    NoSolutionRankGap,
    /// `u = v`.
    SamePair,
    /// `rank(M | Y) > rank(M)` with `rank(Y) <= rank(M) < n`: no solution.
    #[serde(rename = "NoSolution_Augmented")]
    NoSolutionAugmented,
    /// `rank(M | Y) = rank(M) < n`, not both zero.
    Solvable,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::FullRank => "FullRank",
            CaseLabel::NoSolutionRankGap => "NoSolution_kGTm",
            CaseLabel::SamePair => "SamePair",
            CaseLabel::NoSolutionAugmented => "NoSolution_Augmented",
            CaseLabel::Solvable => "Solvable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairClass {
    /// `rank(M)`.
    pub m: usize,
    /// `rank(Y)`.
    pub k: usize,
    /// `rank(M | Y)`.
    pub m_bar: usize,
    pub case: CaseLabel,
    /// Predicted `|N+(u, v)|`; the full degree when `u = v`.
    pub predicted_common: u64,
    /// Rank of the stacked differences `S`.
    pub m_in: usize,
    /// `rank(S; Y)`.
    pub m_in_bar: usize,
    /// Predicted `|N-(u, v)|`.
    pub predicted_common_in: u64,
}

impl SumProductDigraph {
    fn solution_count(&self, rank: usize) -> u64 {
        let (n, d) = (self.n(), self.d());
        (self.q() as u64).pow((n * (d * n - rank)) as u32)
    }

    /// Ranks, case label and predicted common-neighbor counts of a pair.
    pub fn classify_pair(&self, u: u64, v: u64) -> PairClass {
        let (n, d) = (self.n(), self.d());
        let ring = self.ring();
        let field = self.field();
        let mut cu = [0u64; 65];
        let mut cv = [0u64; 65];
        self.components_into(u, &mut cu);
        self.components_into(v, &mut cv);

        let width = (d + 1) * n;
        // (M | Y) and its in-side counterpart (S^t | Y^t), both n x (d+1)n.
        let mut out_side = [0 as Elem; MAX_ENTRIES];
        let mut in_side = [0 as Elem; MAX_ENTRIES];
        let mut block = [0 as Elem; MAX_ENTRIES];
        for i in 0..=d {
            let diff = ring.sub(cu[i], cv[i]);
            ring.entries_into(diff, &mut block);
            for r in 0..n {
                for c in 0..n {
                    let x = block[r * n + c];
                    out_side[r * width + i * n + c] = x;
                    in_side[c * width + i * n + r] = x;
                }
            }
        }
        let k = ring.rank(ring.sub(cu[d], cv[d]));
        let (m, m_bar) = split_rank_in_place(field, &mut out_side[..n * width], n, width, d * n);
        let (m_in, m_in_bar) = split_rank_in_place(field, &mut in_side[..n * width], n, width, d * n);

        let case = if m == 0 && k == 0 {
            CaseLabel::SamePair
        } else if m == n {
            CaseLabel::FullRank
        } else if k > m {
            CaseLabel::NoSolutionRankGap
        } else if m_bar > m {
            CaseLabel::NoSolutionAugmented
        } else {
            CaseLabel::Solvable
        };
        let predict = |rank: usize, aug: usize| {
            if aug > rank {
                0
            } else {
                self.solution_count(rank)
            }
        };
        PairClass {
            m,
            k,
            m_bar,
            case,
            predicted_common: predict(m, m_bar),
            m_in,
            m_in_bar,
            predicted_common_in: predict(m_in, m_in_bar),
        }
    }
}

fn check_budget(graph: &SumProductDigraph, budget: u64) -> Result<()> {
    if graph.degree() > budget {
        return Err(Error::BudgetExceeded {
            requested: graph.degree() as u128,
            budget: budget as u128,
        });
    }
    Ok(())
}

/// `|N+(u, v)|` by streaming the out-neighbors of `u` and testing edges from `v`.
pub fn common_out_bruteforce(graph: &SumProductDigraph, u: u64, v: u64, budget: u64) -> Result<u64> {
    check_budget(graph, budget)?;
    Ok(graph.out_neighbors(u).filter(|&z| graph.has_edge(v, z)).count() as u64)
}

/// `|N-(u, v)|` by streaming the in-neighbors of `u` and testing edges into `v`.
pub fn common_in_bruteforce(graph: &SumProductDigraph, u: u64, v: u64, budget: u64) -> Result<u64> {
    check_budget(graph, budget)?;
    Ok(graph.in_neighbors(u).filter(|&z| graph.has_edge(z, v)).count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::matrix::MatFq;
    use std::sync::Arc;

    fn graph(q: u64, n: usize, d: usize) -> SumProductDigraph {
        SumProductDigraph::new(&Arc::new(FieldSpec::with_order(q, None).unwrap()), n, d).unwrap()
    }

    const B: u64 = u64::MAX;

    #[test]
    fn same_pair_predicts_full_degree() {
        let g = graph(3, 2, 1);
        let c = g.classify_pair(4321, 4321);
        assert_eq!(c.case, CaseLabel::SamePair);
        assert_eq!(c.predicted_common, 81);
        assert_eq!(common_out_bruteforce(&g, 4321, 4321, B).unwrap(), 81);
        assert_eq!(common_in_bruteforce(&g, 4321, 4321, B).unwrap(), 81);
    }

    #[test]
    fn case_examples_at_q3() {
        let g = graph(3, 2, 1);
        let f = g.field().clone();
        let zero = MatFq::zeros(2, 2, &f);
        let id = MatFq::identity(2, &f);
        let origin = 0;

        let full = g.vertex_index(std::slice::from_ref(&id), &zero).unwrap();
        let c = g.classify_pair(full, origin);
        assert_eq!((c.case, c.m, c.predicted_common), (CaseLabel::FullRank, 2, 1));
        assert_eq!(common_out_bruteforce(&g, full, origin, B).unwrap(), 1);
        assert_eq!(common_in_bruteforce(&g, full, origin, B).unwrap(), 1);

        let gap = g.vertex_index(std::slice::from_ref(&zero), &id).unwrap();
        let c = g.classify_pair(gap, origin);
        assert_eq!((c.case, c.m, c.k, c.predicted_common), (CaseLabel::NoSolutionRankGap, 0, 2, 0));
        assert_eq!(common_out_bruteforce(&g, gap, origin, B).unwrap(), 0);

        let rank_one = MatFq::from_rows(&[&[1, 0], &[0, 0]], &f).unwrap();
        let solvable = g.vertex_index(std::slice::from_ref(&rank_one), &zero).unwrap();
        let c = g.classify_pair(solvable, origin);
        assert_eq!((c.case, c.m, c.m_bar, c.predicted_common), (CaseLabel::Solvable, 1, 1, 9));
        assert_eq!(common_out_bruteforce(&g, solvable, origin, B).unwrap(), 9);

        // Y = E_22 lies outside the column space of E_11.
        let other = MatFq::from_rows(&[&[0, 0], &[0, 1]], &f).unwrap();
        let aug = g.vertex_index(&[rank_one], &other).unwrap();
        let c = g.classify_pair(aug, origin);
        assert_eq!((c.case, c.m, c.k, c.m_bar), (CaseLabel::NoSolutionAugmented, 1, 1, 2));
        assert_eq!(common_out_bruteforce(&g, aug, origin, B).unwrap(), 0);
    }

    #[test]
    fn predictions_match_brute_force_on_a_stride_of_pairs() {
        for g in [graph(3, 2, 1), graph(3, 1, 2), graph(2, 2, 1), graph(4, 1, 1)] {
            let nv = g.n_vertices();
            let step = (nv / 40).max(1);
            for u in (0..nv).step_by(step as usize) {
                for v in (3..nv).step_by(step as usize + 7) {
                    let c = g.classify_pair(u, v);
                    assert_eq!(common_out_bruteforce(&g, u, v, B).unwrap(), c.predicted_common);
                    assert_eq!(common_in_bruteforce(&g, u, v, B).unwrap(), c.predicted_common_in);
                    assert!(c.m <= c.m_bar && c.m_bar <= c.m + c.k);
                }
            }
        }
    }

    #[test]
    fn left_and_right_solvability_differ() {
        // M = E_11, Y = E_21: M X = Y has no solution, C M = Y has q^2.
        let g = graph(3, 2, 1);
        let f = g.field().clone();
        let e11 = MatFq::from_rows(&[&[1, 0], &[0, 0]], &f).unwrap();
        let e21 = MatFq::from_rows(&[&[0, 0], &[1, 0]], &f).unwrap();
        let u = g.vertex_index(&[e11], &e21).unwrap();
        let c = g.classify_pair(u, 0);
        assert_eq!((c.case, c.predicted_common, c.predicted_common_in), (CaseLabel::NoSolutionAugmented, 0, 9));
        assert_eq!(common_out_bruteforce(&g, u, 0, B).unwrap(), 0);
        assert_eq!(common_in_bruteforce(&g, u, 0, B).unwrap(), 9);
    }

    #[test]
    fn several_products_break_normality() {
        // d = 2, n = 2 over F_3: A_1 - A'_1 = E_11, A_2 - A'_2 = E_12, Y = 0.
        // Out side: E_11 B_1 + E_12 B_2 = 0 puts 2 linear conditions on 8
        // unknowns; in side: C_1 E_11 + C_2 E_12 = 0 puts 4.
        let g = graph(3, 2, 2);
        let f = g.field().clone();
        let e11 = MatFq::from_rows(&[&[1, 0], &[0, 0]], &f).unwrap();
        let e12 = MatFq::from_rows(&[&[0, 1], &[0, 0]], &f).unwrap();
        let zero = MatFq::zeros(2, 2, &f);
        let u = g.vertex_index(&[e11, e12], &zero).unwrap();
        let c = g.classify_pair(u, 0);
        assert_eq!((c.m, c.m_in), (1, 2));
        assert_eq!(common_out_bruteforce(&g, u, 0, B).unwrap(), 729);
        assert_eq!(common_in_bruteforce(&g, u, 0, B).unwrap(), 81);
        assert_eq!((c.predicted_common, c.predicted_common_in), (729, 81));
    }

    #[test]
    fn full_rank_count_grows_with_d() {
        // M = (I | 0) has rank n but a kernel of dimension (d-1)n.
        let g = graph(2, 2, 2);
        let f = g.field().clone();
        let u = g
            .vertex_index(&[MatFq::identity(2, &f), MatFq::zeros(2, 2, &f)], &MatFq::zeros(2, 2, &f))
            .unwrap();
        let c = g.classify_pair(u, 0);
        assert_eq!(c.case, CaseLabel::FullRank);
        assert_eq!(c.predicted_common, 16);
        assert_eq!(common_out_bruteforce(&g, u, 0, B).unwrap(), 16);
    }

    #[test]
    fn budget_guard() {
        let g = graph(3, 2, 1);
        assert!(matches!(
            common_out_bruteforce(&g, 1, 2, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
