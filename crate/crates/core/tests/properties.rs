//! Cross-module invariants as property tests over small parameters.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use sumproduct::census::{count_rank_exact, rank_histogram};
use sumproduct::incidence::{count_solutions, count_solutions_by_f, random_family, FamilySizes};
use sumproduct::spectrum::{mixing_check, operator_aat_apply, second_singular_direction};
use sumproduct::{FieldSpec, SpectrumOptions, SumProductDigraph};

fn field(q: u64) -> Arc<FieldSpec> {
    Arc::new(FieldSpec::with_order(q, None).unwrap())
}

/// Small graphs with their measured second singular value.
fn graphs() -> &'static [(SumProductDigraph, f64)] {
    static CELL: OnceLock<Vec<(SumProductDigraph, f64)>> = OnceLock::new();
    CELL.get_or_init(|| {
        [(3, 2, 1), (2, 2, 2), (5, 1, 2), (4, 1, 1), (2, 1, 3)]
            .into_iter()
            .map(|(q, n, d)| {
                let g = SumProductDigraph::new(&field(q), n, d).unwrap();
                let l = second_singular_direction(&g, &SpectrumOptions::default()).unwrap().lambda_est;
                (g, l)
            })
            .collect()
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rank_counts_sum_to_the_space_and_are_transpose_symmetric(
        q in prop::sample::select(vec![2u64, 3, 4, 5, 7, 8, 9]),
        n in 1usize..=4,
        t in 1usize..=4,
    ) {
        let f = field(q);
        let total: u128 = (0..=n.min(t)).map(|k| count_rank_exact(n, t, k, &f).unwrap()).sum();
        prop_assert_eq!(total, (q as u128).pow((n * t) as u32));
        for k in 0..=n.min(t) {
            prop_assert_eq!(count_rank_exact(n, t, k, &f).unwrap(), count_rank_exact(t, n, k, &f).unwrap());
        }
    }

    #[test]
    fn histogram_matches_formula(q in prop::sample::select(vec![2u64, 3, 4]), n in 1usize..=3, t in 1usize..=3) {
        prop_assume!((q as u128).pow((n * t) as u32) <= 1 << 14);
        let f = field(q);
        let h = rank_histogram(n, t, &f, 1 << 14).unwrap();
        for (k, &c) in h.iter().enumerate() {
            prop_assert_eq!(c, count_rank_exact(n, t, k, &f).unwrap());
        }
    }

    #[test]
    fn mixing_inequality_holds_with_measured_lambda(
        which in 0usize..5,
        seed in any::<u64>(),
        fb in 0.0f64..1.0,
        fc in 0.0f64..1.0,
    ) {
        let (g, lambda) = &graphs()[which];
        let nv = g.n_vertices();
        let mut b: Vec<u64> = (0..nv).filter(|v| (v.wrapping_mul(seed | 1) % 1000) as f64 / 1000.0 <= fb).collect();
        let mut c: Vec<u64> = (0..nv).filter(|v| (v.wrapping_mul(seed | 3).rotate_left(7) % 1000) as f64 / 1000.0 <= fc).collect();
        if b.is_empty() { b.push(seed % nv); }
        if c.is_empty() { c.push(seed / 7 % nv); }
        let m = mixing_check(g, &b, &c, lambda * (1.0 + 1e-6), u128::MAX).unwrap();
        prop_assert!(m.holds, "{:?}", m);
    }

    #[test]
    fn operator_is_symmetric_and_rayleigh_quotients_bounded(which in 0usize..5, seed in any::<u64>()) {
        let (g, _) = &graphs()[which];
        let nv = g.n_vertices() as usize;
        let wave = |k: u64| -> Vec<f64> {
            (0..nv).map(|i| (((i as u64).wrapping_mul(k | 1) ^ k) % 97) as f64 - 48.0).collect()
        };
        let (mut x, y) = (wave(seed), wave(seed.rotate_left(17)));
        let xy = dot(&x, &operator_aat_apply(g, &y));
        let yx = dot(&y, &operator_aat_apply(g, &x));
        prop_assert!((xy - yx).abs() <= 1e-9 * xy.abs().max(1.0));
        let mean = x.iter().sum::<f64>() / nv as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let xx = dot(&x, &x);
        prop_assume!(xx > 0.0);
        let degree_sq = (g.degree() as f64).powi(2);
        prop_assert!(dot(&x, &operator_aat_apply(g, &x)) / xx <= degree_sq * (1.0 + 1e-12));
    }

    #[test]
    fn solution_counters_agree_and_grow_with_sets(
        which in 0usize..3,
        seed in any::<u64>(),
        size in 1u64..=6,
        slot in 0usize..4,
    ) {
        let (g, _) = &graphs()[which];
        let sizes = FamilySizes::uniform(g.d(), size.min(g.ring().count()));
        let fam = random_family(g, &sizes, seed).unwrap();
        let n1 = count_solutions(g, &fam, u128::MAX).unwrap();
        prop_assert_eq!(n1, count_solutions_by_f(g, &fam, u128::MAX).unwrap());

        // Add one fresh element to one set.
        let mut bigger = fam.clone();
        let set = match slot {
            0 => &mut bigger.a_sets[0],
            1 => &mut bigger.b_sets[0],
            2 => &mut bigger.e_set,
            _ => &mut bigger.f_set,
        };
        if let Some(x) = (0..g.ring().count()).find(|x| !set.contains(x)) {
            set.push(x);
            set.sort_unstable();
            prop_assert!(count_solutions(g, &bigger, u128::MAX).unwrap() >= n1);
        }
    }
}

#[test]
fn full_sets_count_q_to_the_2d_plus_1_n_squared() {
    for (g, _) in &graphs()[..3] {
        let fam = sumproduct::SetFamily::full(g);
        let expect = (g.q() as u64).pow(((2 * g.d() + 1) * g.n() * g.n()) as u32);
        assert_eq!(count_solutions(g, &fam, u128::MAX).unwrap(), expect);
    }
}

#[test]
fn random_families_vary_with_seed() {
    let (g, _) = &graphs()[0];
    let sizes = FamilySizes::uniform(1, 20);
    let base = random_family(g, &sizes, 0).unwrap();
    let differing = (1..=100).filter(|&s| random_family(g, &sizes, s).unwrap() != base).count();
    assert_eq!(differing, 100);
}
