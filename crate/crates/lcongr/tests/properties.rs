use lcongr::arith;
use lcongr::density;
use lcongr::kn;
use lcongr::matgrp::{self, DensityProfile};
use lcongr::{Cyc, CurveData, Dataset, DirichletCharacter};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn small_q() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7])
}

fn cyc_pair() -> impl Strategy<Value = (u64, Vec<i64>, Vec<i64>, Vec<i64>)> {
    small_q().prop_flat_map(|q| {
        let n = (q - 1) as usize;
        let v = || prop::collection::vec(-20i64..20, n);
        (Just(q), v(), v(), v())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyclotomic_ring_laws((q, a, b, c) in cyc_pair()) {
        let (x, y, z) = (Cyc::from_ints(q, &a), Cyc::from_ints(q, &b), Cyc::from_ints(q, &c));
        prop_assert_eq!(x.clone() * y.clone(), y.clone() * x.clone());
        prop_assert_eq!((x.clone() * y.clone()) * z.clone(), x.clone() * (y.clone() * z.clone()));
        prop_assert_eq!(x.clone() * (y.clone() + z.clone()), x.clone() * y.clone() + x.clone() * z.clone());
        prop_assert_eq!(x.clone() - x.clone(), Cyc::zero(q));
        prop_assert_eq!(x.clone() * Cyc::one(q), x);
    }

    #[test]
    fn norm_is_multiplicative((q, a, b, _) in cyc_pair()) {
        let (x, y) = (Cyc::from_ints(q, &a), Cyc::from_ints(q, &b));
        prop_assert_eq!((x.clone() * y.clone()).norm(), x.norm() * y.norm());
        if !x.is_zero() {
            prop_assert!(!x.norm().is_zero());
            prop_assert_eq!(x.clone() * x.inverse().unwrap(), Cyc::one(q));
        }
    }

    #[test]
    fn conjugates_have_equal_norm((q, a, _, _) in cyc_pair(), k in 1i64..7) {
        prop_assume!(!(k as u64).is_multiple_of(q));
        let x = Cyc::from_ints(q, &a);
        prop_assert_eq!(x.conjugate(k).norm(), x.norm());
    }

    #[test]
    fn bsgs_matches_legendre(a4 in -50i64..50, a6 in -50i64..50, idx in 0usize..200) {
        let p = arith::primes_below(4000).into_iter().filter(|&p| p >= 1000).nth(idx).unwrap();
        let e = CurveData::new("t", [0, 0, 0, a4, a6], 1);
        prop_assume!(e.discriminant() != 0 && e.is_good(p));
        prop_assert_eq!(e.count_points(p).unwrap(), e.count_points_legendre(p).unwrap());
    }

    #[test]
    fn hasse_bound(a1 in -2i64..3, a3 in -2i64..3, a4 in -30i64..30, a6 in -30i64..30, idx in 0usize..150) {
        let p = arith::primes_below(900)[idx];
        let e = CurveData::new("t", [a1, 0, a3, a4, a6], 1);
        prop_assume!(e.discriminant() != 0 && e.is_good(p));
        let ap = e.ap(p);
        prop_assert!((ap * ap) as u64 <= 4 * p);
    }

    #[test]
    fn character_orthogonality(idx in 1usize..40, q in small_q(), k in 1u64..7) {
        let p = arith::primes_below(3000).into_iter().filter(|p| p % q == 1).nth(idx).unwrap();
        prop_assume!(k % q != 0);
        let chi = DirichletCharacter::new(p, q, k).unwrap();
        let sum = (1..p as i64).fold(Cyc::zero(q), |s, a| s + chi.evaluate(a));
        prop_assert_eq!(sum, Cyc::zero(q));
        prop_assert_eq!(chi.evaluate(p as i64), Cyc::zero(q));
        let a = 2 + idx as i64;
        let b = 3 + k as i64;
        prop_assert_eq!(chi.evaluate(a * b), chi.evaluate(a) * chi.evaluate(b));
    }

    #[test]
    fn sweep_counts_cover_the_eligible_primes(limit in 100u64..4000, which in 0usize..3) {
        let label = ["11a1", "20a1", "14a1"][which];
        let e = Dataset::bundled().curve(label).unwrap();
        let r = density::sweep(&e, 3, limit).unwrap();
        prop_assert_eq!(r.counts.values().sum::<u64>(), r.eligible_primes);
        prop_assert_eq!(r.eligible_primes as usize, density::eligible_primes(&e, 3, limit).len());
        prop_assert!(r.counts.keys().all(|&k| k < 3));
    }

    #[test]
    fn kn_cases_partition_primes(idx in 0usize..300) {
        let e = Dataset::bundled().curve("11a1").unwrap();
        let p = arith::primes_below(3000).into_iter().filter(|&p| p != 11).nth(idx).unwrap();
        let r = kn::predicted_residue(&e, p).unwrap();
        let expected = match r.count % 3 {
            0 => ("zero", 0),
            1 if r.split_in_k => ("split", 2),
            _ => ("other", 1),
        };
        prop_assert_eq!((r.case, r.residue), expected);
        // Frobenius acts as a scalar when p splits; scalars of determinant 1 mod 3 are +-1.
        if r.split_in_k {
            prop_assert_eq!(p % 3, 1);
            prop_assert_ne!(r.count % 3, 2);
        }
    }
}

#[test]
fn closed_form_matches_census() {
    for q in [3u32, 5, 7] {
        let sl = matgrp::special_linear(q);
        for u in 1..q as u64 {
            let census = matgrp::density_profile(&sl, u, 1).unwrap();
            assert_eq!(matgrp::closed_form_density(q as u64, u).unwrap(), census, "q = {q}, unit {u}");
        }
    }
}

#[test]
fn profiles_are_distributions() {
    for p in matgrp::twelve_triples() {
        assert!(p.total().is_one(), "{p}");
    }
    assert!(DensityProfile::point_mass().total().is_one());
    for q in [3u64, 5, 7, 11, 13] {
        for u in 1..q {
            assert!(matgrp::closed_form_density(q, u).unwrap().total().is_one());
        }
    }
}
