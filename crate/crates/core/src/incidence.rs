//! Solution counts of `A_1 B_1 + ... + A_d B_d = E + F` over set families,
//! and point-line incidences in M_n(F_q)^2.
//!
//! Both counts are edge counts of the sum-product digraph between product
//! sets: the family `(A_i), (B_i), E, F` gives
//! `e(A_1 x ... x A_d x E, B_1 x ... x B_d x F)`, and a point `(X, Y)` lies
//! on the line `Y = A X + B` exactly when `(A, -B) -> (X, Y)` is an edge.
//! The mixing inequality with a measured second singular value therefore
//! bounds the deviation from the main term exactly.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::digraph::SumProductDigraph;
use crate::error::{Error, Result};
use crate::ring::MatrixRing;

/// Default cap on equation evaluations / pair tests.
pub const DEFAULT_SOLVE_BUDGET: u128 = 1_000_000_000;

/// The sets `A_1..A_d`, `B_1..B_d`, `E`, `F` as sorted lists of matrix indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily {
    pub a_sets: Vec<Vec<u64>>,
    pub b_sets: Vec<Vec<u64>>,
    pub e_set: Vec<u64>,
    pub f_set: Vec<u64>,
}

/// Sizes `|A_1|, ..., |A_d|, |B_1|, ..., |B_d|, |E|, |F|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilySizes(pub Vec<u64>);

impl FamilySizes {
    pub fn uniform(d: usize, size: u64) -> Self {
        FamilySizes(vec![size; 2 * d + 2])
    }
}

fn sorted_set(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

impl SetFamily {
    /// Sorts every set and checks indices and duplicates against `graph`.
    pub fn new(
        graph: &SumProductDigraph,
        a_sets: Vec<Vec<u64>>,
        b_sets: Vec<Vec<u64>>,
        e_set: Vec<u64>,
        f_set: Vec<u64>,
    ) -> Result<Self> {
        let fam = SetFamily {
            a_sets: a_sets.into_iter().map(sorted_set).collect(),
            b_sets: b_sets.into_iter().map(sorted_set).collect(),
            e_set: sorted_set(e_set),
            f_set: sorted_set(f_set),
        };
        fam.validate(graph)?;
        Ok(fam)
    }

    /// Every set in each of the `2d + 2` slots equal to all of M_n(F_q).
    pub fn full(graph: &SumProductDigraph) -> Self {
        let all: Vec<u64> = (0..graph.ring().count()).collect();
        SetFamily {
            a_sets: vec![all.clone(); graph.d()],
            b_sets: vec![all.clone(); graph.d()],
            e_set: all.clone(),
            f_set: all,
        }
    }

    pub fn validate(&self, graph: &SumProductDigraph) -> Result<()> {
        let d = graph.d();
        if self.a_sets.len() != d || self.b_sets.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "a family for d = {d} needs {d} A-sets and {d} B-sets"
            )));
        }
        let count = graph.ring().count();
        for set in self.sets() {
            if let Some(&bad) = set.iter().find(|&&x| x >= count) {
                return Err(Error::IndexOutOfRange { index: bad, size: count });
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("family sets must be sorted without duplicates".into()));
            }
        }
        Ok(())
    }

    fn sets(&self) -> impl Iterator<Item = &Vec<u64>> {
        self.a_sets
            .iter()
            .chain(&self.b_sets)
            .chain([&self.e_set, &self.f_set])
    }

    pub fn sizes(&self) -> FamilySizes {
        FamilySizes(self.sets().map(|s| s.len() as u64).collect())
    }

    /// `prod |A_i| |B_i|`.
    fn tuple_product(&self) -> u128 {
        self.a_sets
            .iter()
            .chain(&self.b_sets)
            .map(|s| s.len() as u128)
            .product()
    }

    /// Text form: a `[A1]`..`[Ad]`, `[B1]`..`[Bd]`, `[E]`, `[F]` header per
    /// set followed by its indices, one per line. `#` starts a comment.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let d = self.a_sets.len();
        let names = (1..=d)
            .map(|i| format!("A{i}"))
            .chain((1..=d).map(|i| format!("B{i}")))
            .chain(["E".to_string(), "F".to_string()]);
        for (name, set) in names.zip(self.sets()) {
            writeln!(out, "[{name}]").unwrap();
            for x in set {
                writeln!(out, "{x}").unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str, graph: &SumProductDigraph) -> Result<Self> {
        let d = graph.d();
        let mut slots: Vec<Option<Vec<u64>>> = vec![None; 2 * d + 2];
        let mut current: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let slot = match name {
                    "E" => 2 * d,
                    "F" => 2 * d + 1,
                    _ => {
                        let (kind, num) = name.split_at(1);
                        let i: usize = num
                            .parse()
                            .ok()
                            .filter(|&i| (1..=d).contains(&i))
                            .ok_or_else(|| Error::Config(format!("line {}: unknown set [{name}]", lineno + 1)))?;
                        match kind {
                            "A" => i - 1,
                            "B" => d + i - 1,
                            _ => return Err(Error::Config(format!("line {}: unknown set [{name}]", lineno + 1))),
                        }
                    }
                };
                if slots[slot].is_some() {
                    return Err(Error::Config(format!("line {}: set [{name}] repeated", lineno + 1)));
                }
                slots[slot] = Some(Vec::new());
                current = Some(slot);
                continue;
            }
            let slot = current.ok_or_else(|| Error::Config(format!("line {}: index before any set header", lineno + 1)))?;
            for tok in line.split_whitespace() {
                let x = tok
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("line {}: bad index {tok:?}", lineno + 1)))?;
                slots[slot].as_mut().unwrap().push(x);
            }
        }
        let mut sets = slots
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::Config(format!("family file must define all {} sets", 2 * d + 2))))
            .collect::<Result<Vec<_>>>()?;
        let f_set = sets.pop().unwrap();
        let e_set = sets.pop().unwrap();
        let b_sets = sets.split_off(d);
        Self::new(graph, sets, b_sets, e_set, f_set)
    }
}

/// Decodes tuple number `t` of the cartesian product of `sets` (first set most significant).
fn tuple_at(sets: &[Vec<u64>], mut t: u64, out: &mut [u64]) {
    for (slot, set) in out.iter_mut().zip(sets).rev() {
        let len = set.len() as u64;
        *slot = set[(t % len) as usize];
        t /= len;
    }
}

/// Set membership over matrix indices.
enum Membership {
    Bits(Vec<bool>),
    Hash(HashSet<u64>),
}

impl Membership {
    fn new(set: &[u64], universe: u64) -> Self {
        if universe <= 1 << 26 {
            let mut bits = vec![false; universe as usize];
            for &x in set {
                bits[x as usize] = true;
            }
            Membership::Bits(bits)
        } else {
            Membership::Hash(set.iter().copied().collect())
        }
    }

    #[inline]
    fn contains(&self, x: u64) -> bool {
        match self {
            Membership::Bits(b) => b[x as usize],
            Membership::Hash(h) => h.contains(&x),
        }
    }
}

fn check_budget(requested: u128, budget: u128) -> Result<()> {
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    Ok(())
}

/// Shared loop: for every `A`- and `B`-tuple compute `S = sum A_i B_i`, then
/// count the `x` in `outer` with `S - x` in `inner`.
fn count_sum_products(graph: &SumProductDigraph, fam: &SetFamily, outer: &[u64], inner: &[u64]) -> u64 {
    let ring = graph.ring();
    let d = graph.d();
    let member = Membership::new(inner, ring.count());
    let a_total: u64 = fam.a_sets.iter().map(|s| s.len() as u64).product();
    let b_total: u64 = fam.b_sets.iter().map(|s| s.len() as u64).product();
    if a_total == 0 || b_total == 0 || outer.is_empty() || inner.is_empty() {
        return 0;
    }
    (0..a_total)
        .into_par_iter()
        .map(|ta| {
            let mut a = vec![0u64; d];
            let mut b = vec![0u64; d];
            tuple_at(&fam.a_sets, ta, &mut a);
            let mut hits = 0u64;
            for tb in 0..b_total {
                tuple_at(&fam.b_sets, tb, &mut b);
                let mut s = ring.mul(a[0], b[0]);
                for i in 1..d {
                    s = ring.add(s, ring.mul(a[i], b[i]));
                }
                hits += outer.iter().filter(|&&x| member.contains(ring.sub(s, x))).count() as u64;
            }
            hits
        })
        .sum()
}

/// Number of solutions, iterating `(A, B, E)` and looking `F = sum A_i B_i - E` up in `F`.
pub fn count_solutions(graph: &SumProductDigraph, fam: &SetFamily, budget: u128) -> Result<u64> {
    fam.validate(graph)?;
    check_budget(fam.tuple_product() * fam.e_set.len() as u128, budget)?;
    Ok(count_sum_products(graph, fam, &fam.e_set, &fam.f_set))
}

/// The same count, iterating `(A, B, F)` and looking `E = sum A_i B_i - F` up in `E`.
pub fn count_solutions_by_f(graph: &SumProductDigraph, fam: &SetFamily, budget: u128) -> Result<u64> {
    fam.validate(graph)?;
    check_budget(fam.tuple_product() * fam.f_set.len() as u128, budget)?;
    Ok(count_sum_products(graph, fam, &fam.f_set, &fam.e_set))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncidenceReport {
    /// `"sum_product"` or `"point_line"`.
    pub kind: &'static str,
    pub count: u64,
    /// Numerator of the main term (the product of the set sizes).
    pub size_product: u128,
    /// Denominator of the main term, `q^(n^2)`.
    pub main_term_denominator: u64,
    pub main_term: f64,
    pub error_observed: f64,
    /// Bound with the implicit constant taken as 1 (sqrt 2 for point-line).
    pub error_bound_paper: f64,
    /// `error_observed / error_bound_paper`: the smallest constant that would do.
    pub bound_constant_measured: f64,
    pub holds_paper: bool,
    pub lambda: Option<f64>,
    pub error_bound_measured_lambda: Option<f64>,
    pub holds_measured: Option<bool>,
    /// Parameters outside the setting of the stated theorem (even q, or n != 2 for point-line).
    pub extrapolation: bool,
}

fn exact_deviation(count: u64, num: u128, den: u64) -> f64 {
    let scaled = count as u128 * den as u128;
    scaled.abs_diff(num) as f64 / den as f64
}

/// Exact solution count against main term and error bounds. `lambda` is a
/// measured second singular value of `graph`; when given, the mixing bound
/// `lambda sqrt(|E| |F| prod |A_i| |B_i|)` is checked as well.
pub fn theorem_report(
    graph: &SumProductDigraph,
    fam: &SetFamily,
    lambda: Option<f64>,
    budget: u128,
) -> Result<IncidenceReport> {
    let count = count_solutions(graph, fam, budget)?;
    let cap = fam.tuple_product() * fam.e_set.len() as u128;
    if count as u128 > cap {
        return Err(Error::AuditFailure(format!("solution count {count} exceeds the trivial cap {cap}")));
    }
    let den = graph.ring().count();
    let size_product = fam.tuple_product() * fam.e_set.len() as u128 * fam.f_set.len() as u128;
    let error_observed = exact_deviation(count, size_product, den);
    let root = (size_product as f64).sqrt();
    let error_bound_paper = (graph.q() as f64).powf(graph.eigenvalue_bound_exponent()) * root;
    let error_bound_measured_lambda = lambda.map(|l| l * root);
    Ok(IncidenceReport {
        kind: "sum_product",
        count,
        size_product,
        main_term_denominator: den,
        main_term: size_product as f64 / den as f64,
        error_observed,
        error_bound_paper,
        bound_constant_measured: ratio(error_observed, error_bound_paper),
        holds_paper: error_observed <= error_bound_paper,
        lambda,
        error_bound_measured_lambda,
        holds_measured: error_bound_measured_lambda.map(|b| error_observed <= b),
        extrapolation: !graph.field().is_odd(),
    })
}

fn ratio(x: f64, y: f64) -> f64 {
    if y > 0.0 {
        x / y
    } else {
        0.0
    }
}

fn dedup_pairs(pairs: &[(u64, u64)], count: u64) -> Result<Vec<(u64, u64)>> {
    let mut v = pairs.to_vec();
    if let Some(&(x, y)) = v.iter().find(|&&(x, y)| x >= count || y >= count) {
        return Err(Error::IndexOutOfRange {
            index: x.max(y),
            size: count,
        });
    }
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// `I(P, L)`: pairs `((X, Y), (A, B))` with `Y = A X + B`, by testing every pair.
pub fn count_incidences(
    ring: &MatrixRing,
    points: &[(u64, u64)],
    lines: &[(u64, u64)],
    lambda: Option<f64>,
    budget: u128,
) -> Result<IncidenceReport> {
    let count = ring.count();
    let points = dedup_pairs(points, count)?;
    let lines = dedup_pairs(lines, count)?;
    check_budget(points.len() as u128 * lines.len() as u128, budget)?;
    let incidences: u64 = lines
        .par_iter()
        .map(|&(a, b)| {
            points
                .iter()
                .filter(|&&(x, y)| ring.add(ring.mul(a, x), b) == y)
                .count() as u64
        })
        .sum();
    let size_product = points.len() as u128 * lines.len() as u128;
    let q = ring.field().order() as f64;
    let n = ring.n() as f64;
    let root = (size_product as f64).sqrt();
    let main_term = size_product as f64 / count as f64;
    // sqrt(2) q^(7/2) at n = 2; the d = 1 sum-product exponent n^2 - 1/2 elsewhere.
    let error_bound_paper = 2f64.sqrt() * q.powf(n * n - 0.5) * root;
    let error_observed = exact_deviation(incidences, size_product, count);
    let error_bound_measured_lambda = lambda.map(|l| l * root);
    Ok(IncidenceReport {
        kind: "point_line",
        count: incidences,
        size_product,
        main_term_denominator: count,
        main_term,
        error_observed,
        error_bound_paper,
        bound_constant_measured: ratio(error_observed, error_bound_paper / 2f64.sqrt()),
        holds_paper: incidences as f64 <= main_term + error_bound_paper,
        lambda,
        error_bound_measured_lambda,
        holds_measured: error_bound_measured_lambda.map(|b| error_observed <= b),
        extrapolation: ring.n() != 2 || !ring.field().is_odd(),
    })
}

fn sample_indices(rng: &mut ChaCha8Rng, universe: u64, size: u64) -> Result<Vec<u64>> {
    if size > universe {
        return Err(Error::SizeTooLarge {
            requested: size,
            available: universe,
        });
    }
    let universe = usize::try_from(universe).map_err(|_| Error::SizeTooLarge {
        requested: size,
        available: universe,
    })?;
    let mut v: Vec<u64> = index::sample(rng, universe, size as usize)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    v.sort_unstable();
    Ok(v)
}

/// Uniform sets without replacement, one per slot, deterministic in `seed`.
pub fn random_family(graph: &SumProductDigraph, sizes: &FamilySizes, seed: u64) -> Result<SetFamily> {
    let d = graph.d();
    if sizes.0.len() != 2 * d + 2 {
        return Err(Error::DimensionMismatch(format!(
            "{} set sizes given, {} needed for d = {d}",
            sizes.0.len(),
            2 * d + 2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = sizes
        .0
        .iter()
        .map(|&s| sample_indices(&mut rng, graph.ring().count(), s))
        .collect::<Result<Vec<_>>>()?;
    let f_set = sets.pop().unwrap();
    let e_set = sets.pop().unwrap();
    let b_sets = sets.split_off(d);
    SetFamily::new(graph, sets, b_sets, e_set, f_set)
}

/// `size` distinct pairs of matrix indices, uniform, deterministic in `seed`.
pub fn random_pairs(ring: &MatrixRing, size: u64, seed: u64) -> Result<Vec<(u64, u64)>> {
    let count = ring.count();
    let universe = count.checked_mul(count).ok_or(Error::SizeTooLarge {
        requested: size,
        available: u64::MAX,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_indices(&mut rng, universe, size)?
        .into_iter()
        .map(|i| (i / count, i % count))
        .collect())
}

/// One `first second` pair of decimal indices per line; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("line {}: expected two indices", lineno + 1)))?;
        let [x, y] = nums[..] else {
            return Err(Error::Config(format!("line {}: expected two indices", lineno + 1)));
        };
        out.push((x, y));
    }
    Ok(out)
}

pub fn pairs_to_text(pairs: &[(u64, u64)]) -> String {
    pairs.iter().map(|(x, y)| format!("{x} {y}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use std::sync::Arc;

    fn graph(q: u64, n: usize, d: usize) -> SumProductDigraph {
        SumProductDigraph::new(&Arc::new(FieldSpec::with_order(q, None).unwrap()), n, d).unwrap()
    }

    const BUDGET: u128 = DEFAULT_SOLVE_BUDGET;

    #[test]
    fn full_family_reference_count() {
        let g = graph(3, 2, 1);
        let fam = SetFamily::full(&g);
        assert_eq!(count_solutions(&g, &fam, BUDGET).unwrap(), 531_441);
        let r = theorem_report(&g, &fam, Some(27.0), BUDGET).unwrap();
        assert_eq!(r.error_observed, 0.0);
        assert!(r.holds_paper && r.holds_measured == Some(true));
    }

    #[test]
    fn empty_sets_give_zero() {
        let g = graph(3, 2, 1);
        let mut fam = SetFamily::full(&g);
        fam.f_set.clear();
        assert_eq!(count_solutions(&g, &fam, BUDGET).unwrap(), 0);
        let mut fam = SetFamily::full(&g);
        fam.e_set.clear();
        let r = theorem_report(&g, &fam, Some(27.0), BUDGET).unwrap();
        assert_eq!((r.count, r.main_term), (0, 0.0));
        assert!(r.holds_paper);
    }

    #[test]
    fn two_counters_agree_on_random_families() {
        for (q, n, d) in [(3, 2, 1), (2, 2, 2), (5, 1, 3)] {
            let g = graph(q, n, d);
            let size = g.ring().count().min(7);
            for seed in 0..5 {
                let fam = random_family(&g, &FamilySizes::uniform(d, size), seed).unwrap();
                assert_eq!(
                    count_solutions(&g, &fam, BUDGET).unwrap(),
                    count_solutions_by_f(&g, &fam, BUDGET).unwrap()
                );
            }
        }
    }

    #[test]
    fn random_family_determinism_and_limits() {
        let g = graph(3, 2, 1);
        let sizes = FamilySizes::uniform(1, 20);
        assert_eq!(random_family(&g, &sizes, 9).unwrap(), random_family(&g, &sizes, 9).unwrap());
        assert_ne!(random_family(&g, &sizes, 9).unwrap(), random_family(&g, &sizes, 10).unwrap());
        assert_eq!(random_family(&g, &FamilySizes::uniform(1, 81), 3).unwrap(), SetFamily::full(&g));
        assert!(matches!(
            random_family(&g, &FamilySizes::uniform(1, 82), 3),
            Err(Error::SizeTooLarge { .. })
        ));
        assert!(random_family(&g, &FamilySizes(vec![1, 2, 3]), 3).is_err());
    }

    #[test]
    fn budget_guard() {
        let g = graph(3, 2, 1);
        assert!(matches!(
            count_solutions(&g, &SetFamily::full(&g), 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn family_text_round_trip() {
        let g = graph(2, 2, 2);
        let fam = random_family(&g, &FamilySizes(vec![3, 1, 4, 1, 5, 9]), 2).unwrap();
        assert_eq!(SetFamily::parse(&fam.to_text(), &g).unwrap(), fam);
        assert!(SetFamily::parse("[A1]\n1\n", &g).is_err());
        assert!(SetFamily::parse("[A1]\n1 1\n[A2]\n[B1]\n[B2]\n[E]\n[F]\n", &g).is_err());
        assert!(SetFamily::parse("[C1]\n", &g).is_err());
    }

    #[test]
    fn incidences_small_cases() {
        let g = graph(3, 2, 1);
        let ring = g.ring();
        // The point (I, 2I) lies on the line Y = I X + I.
        let id = crate::MatFq::identity(2, g.field());
        let (i, two_i) = (id.index(), id.scale(2).index());
        let r = count_incidences(ring, &[(i, two_i)], &[(i, i)], None, BUDGET).unwrap();
        assert_eq!(r.count, 1);
        let r = count_incidences(ring, &[(i, i)], &[(i, i)], None, BUDGET).unwrap();
        assert_eq!(r.count, 0);
    }

    #[test]
    fn incidence_is_an_edge_count() {
        // Line (A, B) maps to vertex (A, -B), point (X, Y) to (X, Y).
        let g = graph(3, 2, 1);
        let ring = g.ring();
        let points = random_pairs(ring, 300, 1).unwrap();
        let lines = random_pairs(ring, 200, 2).unwrap();
        let r = count_incidences(ring, &points, &lines, None, BUDGET).unwrap();
        let heads: Vec<u64> = points.iter().map(|&(x, y)| g.compose(&[x, y]).unwrap()).collect();
        let tails: Vec<u64> = lines
            .iter()
            .map(|&(a, b)| g.compose(&[a, ring.sub(0, b)]).unwrap())
            .collect();
        let m = crate::spectrum::mixing_check(&g, &tails, &heads, 0.0, u128::MAX).unwrap();
        assert_eq!(m.e_bc, r.count);
    }

    #[test]
    fn pair_text_round_trip() {
        let pairs = vec![(1, 2), (30, 4)];
        assert_eq!(parse_pairs(&pairs_to_text(&pairs)).unwrap(), pairs);
        assert!(parse_pairs("1 2 3\n").is_err());
    }
}
