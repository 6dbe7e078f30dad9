mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use univform::linalg::{det, rank_exact};
use univform::regularity::*;
use univform::scalar::int;
use univform::{binomial, standard_beta, LinearMap, Rational};

fn invertible(rng: &mut ChaCha8Rng, n: usize) -> LinearMap<Rational> {
    loop {
        let m = matrix(rng, n, n);
        if det(m.to_rows()) != int(0) {
            return m;
        }
    }
}

/// δ from its defining count: the blocks added by the staircase, stage by
/// stage, starting from a single block at `l = k`.
fn delta_by_counting(l: usize, k: usize) -> usize {
    1 + (k..l).map(|i| i / (k - 1) + 1).sum::<usize>()
}

#[test]
fn delta_formulas_agree() {
    for k in 3..=6 {
        for l in k..=40 {
            let v = delta_values(l, k).unwrap();
            assert_eq!(v.recursion, v.sum_formula, "(l, k) = ({l}, {k})");
            assert_eq!(v.recursion, delta_by_counting(l, k), "(l, k) = ({l}, {k})");
        }
    }
    assert!(delta_values(2, 3).is_err());
}

#[test]
fn dimension_formulas() {
    assert_eq!(s_dim(3, 3).unwrap(), 19);
    assert_eq!(d_dim(3, 3).unwrap(), 78);
    for n in 2..8 {
        for k in 3..=n + 1 {
            assert_eq!(n1(n, k).unwrap(), binomial(n, k - 1));
            assert_eq!(n1_bar(n, k).unwrap(), binomial(n, k - 1) * k * (n + 1));
        }
    }
}

#[test]
fn staircase_certifies_degree_three() {
    for l in 3..=12 {
        let r = build_regular_subspace(l, 3).unwrap();
        assert_eq!(r.map.rows(), 3 * delta(l, 3).unwrap());
        assert_eq!(r.map.cols(), l);
        assert_eq!(rank_exact(&r.map.to_rows()), l);
        assert!(r.stages.iter().all(StageCertificate::passed));
        // independent recheck of the final certificate
        let c = is_regular(&standard_beta(delta(l, 3).unwrap(), 3), &Subspace::image(&r.map).unwrap()).unwrap();
        assert!(c.regular && c.achieved_rank == binomial(l, 2));
    }
}

#[test]
fn negative_control() {
    let t = Subspace::coordinate(6, &[0, 1, 3, 4]).unwrap();
    let c = is_regular(&standard_beta(2, 3), &t).unwrap();
    assert!(!c.regular);
    assert_eq!((c.achieved_rank, c.required_rank), (2, 6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regularity_does_not_depend_on_the_basis(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = rng.gen_range(1..4);
        let dim = 3 * blocks;
        let t_dim = rng.gen_range(1..=dim.min(5));
        let basis = matrix(&mut rng, dim, t_dim);
        prop_assume!(rank_exact(&basis.to_rows()) == t_dim);
        let beta = standard_beta(blocks, 3);
        let c1 = is_regular(&beta, &Subspace::image(&basis).unwrap()).unwrap();
        let c2 = is_regular(&beta, &Subspace::image(&basis.compose(&invertible(&mut rng, t_dim)).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(c1.regular, c2.regular);
        prop_assert_eq!(c1.achieved_rank, c2.achieved_rank);
        // naturality: T is β-regular iff A⁻¹T is A*β-regular
        let a = invertible(&mut rng, dim);
        let pulled = beta.pullback(&a).unwrap();
        let preimage = solve(&a, &basis);
        let c3 = is_regular(&pulled, &Subspace::image(&preimage).unwrap()).unwrap();
        prop_assert_eq!(c1.regular, c3.regular);
        prop_assert_eq!(c1.achieved_rank, c3.achieved_rank);
    }

    #[test]
    fn formal_monomorphism_pulls_back_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = alt_form(&mut rng, 4, 3);
        let s = formal_monomorphism(&g, None).unwrap();
        prop_assert!(s.injective && s.pullback_matches && s.certificate.regular);
        // independent recomputation of s*β
        prop_assert_eq!(s.target_beta().pullback(&s.s).unwrap(), g);
        prop_assert_eq!(rank_exact(&s.s.to_rows()), 4);
    }
}

/// `A⁻¹ B` by exact Gauss–Jordan elimination.
fn solve(a: &LinearMap<Rational>, b: &LinearMap<Rational>) -> LinearMap<Rational> {
    let n = a.rows();
    let mut aug: Vec<Vec<Rational>> = (0..n).map(|r| a.row(r).iter().chain(b.row(r)).cloned().collect()).collect();
    for c in 0..n {
        let p = (c..n).find(|&r| aug[r][c] != int(0)).expect("invertible");
        aug.swap(c, p);
        let inv = int(1) / aug[c][c].clone();
        for x in aug[c].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != c && aug[r][c] != int(0) {
                let f = aug[r][c].clone();
                let pivot = aug[c].clone();
                for (x, y) in aug[r].iter_mut().zip(&pivot) {
                    *x = &*x - &(&f * y);
                }
            }
        }
    }
    LinearMap::from_rows(aug.into_iter().map(|r| r[n..].to_vec()).collect()).unwrap()
}
