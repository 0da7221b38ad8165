//! Counting matrices by rank, and pairs `(M, C)` for which `M Z = C` is solvable.
//!
//! Exact rank counts use the subspace-frame factorization
//! `[t choose k]_q * (q^n - 1)(q^n - q)...(q^n - q^(k-1))`; the coarser
//! overcount with an ordinary binomial and a `q^((t-k)k)` completion factor
//! is reported beside it. Brute-force censuses enumerate every matrix and
//! are the oracle for both.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec};
use crate::matrix::{decode_into, enumerate_matrices, rank_in_place, space_size, MatFq};

/// Default cap on `q^(nt) * q^(n^2)` for the solvable-pair censuses.
pub const DEFAULT_PAIR_BUDGET: u128 = 100_000_000;

/// One cell of a rank histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRecord {
    pub n: usize,
    pub t: usize,
    pub q: u32,
    pub k: usize,
    /// Number of `n x t` matrices of rank `k`.
    pub exact: u128,
    /// Overcount with an ordinary binomial coefficient.
    pub bound: u128,
    /// `exact / bound`.
    pub ratio: f64,
}

impl CensusRecord {
    pub const CSV_HEADER: &'static str = "n,t,q,k,exact,bound,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.t, self.q, self.k, self.exact, self.bound, self.ratio
        )
    }
}

/// The number `T_{m,k}` of solvable pairs with `rank(M) = m`, `rank(C) = k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolvablePairRecord {
    pub n: usize,
    pub t: usize,
    pub q: u32,
    pub m: usize,
    pub k: usize,
    pub exact: u128,
    /// `q^(nm + m(t-m) + mk + k(n-k))`.
    pub bound: u128,
    pub ratio: f64,
}

impl SolvablePairRecord {
    pub const CSV_HEADER: &'static str = "n,t,q,m,k,T_exact,T_bound,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n, self.t, self.q, self.m, self.k, self.exact, self.bound, self.ratio
        )
    }
}

fn overflow() -> Error {
    Error::Config("count exceeds 128-bit range".into())
}

fn pow(q: u32, e: usize) -> Result<u128> {
    (q as u128).checked_pow(e as u32).ok_or_else(overflow)
}

fn check_rank(n: usize, t: usize, k: usize) -> Result<()> {
    if k > n.min(t) {
        return Err(Error::InvalidRank { rows: n, cols: t, k });
    }
    Ok(())
}

/// Number of ordered frames of `k` independent vectors in F_q^n.
fn frames(n: usize, k: usize, q: u32) -> Result<u128> {
    let qn = pow(q, n)?;
    (0..k).try_fold(1u128, |acc, i| {
        acc.checked_mul(qn - pow(q, i)?).ok_or_else(overflow)
    })
}

/// Gaussian binomial `[t choose k]_q`, the number of k-dimensional subspaces of F_q^t.
pub fn gaussian_binomial(t: usize, k: usize, q: u32) -> Result<u128> {
    if k > t {
        return Ok(0);
    }
    // [t, i+1] = [t, i] (q^(t-i) - 1) / (q^(i+1) - 1), exact at every step.
    (0..k).try_fold(1u128, |acc, i| {
        let num = pow(q, t - i)? - 1;
        let den = pow(q, i + 1)? - 1;
        Ok(acc.checked_mul(num).ok_or_else(overflow)? / den)
    })
}

fn binomial(t: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (t - i) as u128 / (i + 1) as u128)
}

/// Exact number of `n x t` matrices of rank `k` over `field`.
pub fn count_rank_exact(n: usize, t: usize, k: usize, field: &FieldSpec) -> Result<u128> {
    check_rank(n, t, k)?;
    let q = field.order();
    gaussian_binomial(t, k, q)?
        .checked_mul(frames(n, k, q)?)
        .ok_or_else(overflow)
}

/// The overcount `binom(t, k) (q^n - 1)...(q^n - q^(k-1)) q^((t-k)k)`:
/// choose which k columns are independent, a frame for them, and each
/// remaining column as a combination of the frame.
pub fn count_rank_bound(n: usize, t: usize, k: usize, field: &FieldSpec) -> Result<u128> {
    check_rank(n, t, k)?;
    let q = field.order();
    binomial(t, k)
        .checked_mul(frames(n, k, q)?)
        .and_then(|x| x.checked_mul(pow(q, (t - k) * k).ok()?))
        .ok_or_else(overflow)
}

/// Rank histogram of all `n x t` matrices, by enumeration. Entry `k` of the
/// result counts the rank-`k` matrices.
pub fn rank_histogram(n: usize, t: usize, field: &Arc<FieldSpec>, cap: u64) -> Result<Vec<u128>> {
    let total = enumerate_matrices(n, t, field, cap)?.len_total();
    let q = field.order();
    let buckets = n.min(t) + 1;
    let chunk = 4096u64;
    let hist = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0u128; buckets];
            let mut buf = vec![0 as Elem; n * t];
            for i in c * chunk..((c + 1) * chunk).min(total) {
                decode_into(q, i, &mut buf);
                hist[rank_in_place(field, &mut buf, n, t)] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u128; buckets],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(hist)
}

/// Full rank census by enumeration, with the overcount beside each cell.
pub fn census_bruteforce(n: usize, t: usize, field: &Arc<FieldSpec>, cap: u64) -> Result<Vec<CensusRecord>> {
    let hist = rank_histogram(n, t, field, cap)?;
    hist.into_iter()
        .enumerate()
        .map(|(k, exact)| {
            let bound = count_rank_bound(n, t, k, field)?;
            Ok(CensusRecord {
                n,
                t,
                q: field.order(),
                k,
                exact,
                bound,
                ratio: exact as f64 / bound as f64,
            })
        })
        .collect()
}

/// Exponent `nm + m(t-m) + mk + k(n-k)` of the solvable-pair bound.
pub fn solvable_pair_exponent(n: usize, t: usize, m: usize, k: usize) -> usize {
    n * m + m * (t - m) + m * k + k * (n - k)
}

fn check_pair_budget(n: usize, t: usize, field: &FieldSpec, budget: u128) -> Result<()> {
    let requested = pow(field.order(), n * t + n * n).unwrap_or(u128::MAX);
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    Ok(())
}

fn pair_records(n: usize, t: usize, q: u32, table: Vec<Vec<u128>>) -> Result<Vec<SolvablePairRecord>> {
    let mut out = Vec::new();
    for (m, row) in table.into_iter().enumerate() {
        for (k, exact) in row.into_iter().enumerate() {
            let bound = pow(q, solvable_pair_exponent(n, t, m, k))?;
            out.push(SolvablePairRecord {
                n,
                t,
                q,
                m,
                k,
                exact,
                bound,
                ratio: exact as f64 / bound as f64,
            });
        }
    }
    Ok(out)
}

fn merge_tables(mut a: Vec<Vec<u128>>, b: Vec<Vec<u128>>) -> Vec<Vec<u128>> {
    for (ra, rb) in a.iter_mut().zip(b) {
        ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
    }
    a
}

/// `T_{m,k}` for every `0 <= m <= min(n,t)`, `0 <= k <= n`, where `M` is
/// `n x t` and `C` is `n x n`.
///
/// For each `M`, only the `q^(mn)` matrices whose columns lie in the column
/// space of `M` are visited: those are exactly the `C` for which
/// `rank(M) = rank(M | C)`.
pub fn solvable_pairs_bruteforce(
    n: usize,
    t: usize,
    field: &Arc<FieldSpec>,
    budget: u128,
) -> Result<Vec<SolvablePairRecord>> {
    check_pair_budget(n, t, field, budget)?;
    let q = field.order();
    let total = space_size(q, n * t).unwrap();
    let empty = || vec![vec![0u128; n + 1]; n.min(t) + 1];
    let table = (0..total)
        .into_par_iter()
        .fold(empty, |mut table, i| {
            let big_m = MatFq::unindex(i, n, t, field).unwrap();
            let basis = big_m.column_basis();
            let m = basis.cols();
            for coeffs in enumerate_matrices(m, n, field, u64::MAX).unwrap() {
                let c = if m == 0 {
                    MatFq::zeros(n, n, field)
                } else {
                    basis.mul(&coeffs).unwrap()
                };
                table[m][c.rank()] += 1;
            }
            table
        })
        .reduce(empty, merge_tables);
    pair_records(n, t, q, table)
}

/// Same census as [`solvable_pairs_bruteforce`], visiting every `C` and
/// testing solvability by comparing `rank(M)` with `rank(M | C)`.
pub fn solvable_pairs_naive(
    n: usize,
    t: usize,
    field: &Arc<FieldSpec>,
    budget: u128,
) -> Result<Vec<SolvablePairRecord>> {
    check_pair_budget(n, t, field, budget)?;
    let q = field.order();
    let total = space_size(q, n * t).unwrap();
    let c_total = space_size(q, n * n).unwrap();
    let empty = || vec![vec![0u128; n + 1]; n.min(t) + 1];
    let table = (0..total)
        .into_par_iter()
        .fold(empty, |mut table, i| {
            let big_m = MatFq::unindex(i, n, t, field).unwrap();
            let m = big_m.rank();
            for j in 0..c_total {
                let c = MatFq::unindex(j, n, n, field).unwrap();
                if big_m.hconcat(&c).unwrap().rank() == m {
                    table[m][c.rank()] += 1;
                }
            }
            table
        })
        .reduce(empty, merge_tables);
    pair_records(n, t, q, table)
}

/// Largest `exact / bound` over the cells: the measured constant of the
/// solvable-pair bound.
pub fn measured_constant(records: &[SolvablePairRecord]) -> f64 {
    records.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DEFAULT_ENUMERATION_CAP;

    fn f(q: u64) -> Arc<FieldSpec> {
        Arc::new(FieldSpec::with_order(q, None).unwrap())
    }

    #[test]
    fn exact_counts_2x2_f3() {
        let f3 = f(3);
        let got: Vec<u128> = (0..=2).map(|k| count_rank_exact(2, 2, k, &f3).unwrap()).collect();
        assert_eq!(got, vec![1, 32, 48]);
    }

    #[test]
    fn bound_examples() {
        let f3 = f(3);
        assert_eq!(count_rank_bound(2, 4, 0, &f3).unwrap(), 1);
        assert_eq!(count_rank_bound(2, 4, 1, &f3).unwrap(), 864);
        assert_eq!(count_rank_bound(2, 2, 1, &f3).unwrap(), 48);
    }

    #[test]
    fn invalid_rank_is_rejected() {
        let f3 = f(3);
        assert_eq!(
            count_rank_exact(2, 4, 3, &f3),
            Err(Error::InvalidRank { rows: 2, cols: 4, k: 3 })
        );
        assert!(count_rank_bound(3, 2, 3, &f3).is_err());
    }

    #[test]
    fn gaussian_binomials() {
        assert_eq!(gaussian_binomial(2, 1, 3).unwrap(), 4);
        assert_eq!(gaussian_binomial(4, 2, 2).unwrap(), 35);
        assert_eq!(gaussian_binomial(5, 0, 7).unwrap(), 1);
        assert_eq!(gaussian_binomial(3, 4, 7).unwrap(), 0);
    }

    #[test]
    fn bruteforce_histograms() {
        let census = census_bruteforce(1, 1, &f(3), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(census.iter().map(|r| r.exact).collect::<Vec<_>>(), vec![1, 2]);
        let hist = rank_histogram(2, 2, &f(3), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(hist, vec![1, 32, 48]);
        let hist5 = rank_histogram(2, 2, &f(5), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(hist5.iter().sum::<u128>(), 625);
        assert!(matches!(
            rank_histogram(3, 3, &f(7), 1000),
            Err(Error::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn solvable_pairs_2x2_f3() {
        let f3 = f(3);
        let recs = solvable_pairs_bruteforce(2, 2, &f3, DEFAULT_PAIR_BUDGET).unwrap();
        let cell = |m, k| recs.iter().find(|r| r.m == m && r.k == k).unwrap().exact;
        assert_eq!(cell(0, 0), 1);
        assert_eq!([cell(2, 0), cell(2, 1), cell(2, 2)], [48, 48 * 32, 48 * 48]);
        for r in &recs {
            if r.k > r.m {
                assert_eq!(r.exact, 0, "{r:?}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            solvable_pairs_bruteforce(2, 4, &f(5), 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn column_space_shortcut_matches_naive_iteration() {
        for (n, t, q) in [(2, 2, 3), (2, 3, 2), (1, 3, 3), (2, 1, 5)] {
            let field = f(q);
            assert_eq!(
                solvable_pairs_bruteforce(n, t, &field, DEFAULT_PAIR_BUDGET).unwrap(),
                solvable_pairs_naive(n, t, &field, DEFAULT_PAIR_BUDGET).unwrap(),
                "(n, t, q) = ({n}, {t}, {q})"
            );
        }
    }
}
