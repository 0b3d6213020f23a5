use std::collections::BTreeSet;

use kedlab::io::{read_terms_csv, write_terms_csv};
use kedlab::term::{
    classify, enumerate_terms, make_term, max_derivative_order, AdmissibilityClass, Boundary,
    ExponentVector, KedTerm, Rational,
};
use proptest::prelude::*;

/// Canonical exponent vectors with small entries and at most six orders.
fn exponents() -> impl Strategy<Value = ExponentVector> {
    prop::collection::vec(0u32..4, 0..7).prop_map(ExponentVector::canonicalize)
}

/// p(n) by the standard coin-change recurrence, independent of the enumerator.
fn partition_count(n: usize) -> u64 {
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for s in part..=n {
            p[s] += p[s - part];
        }
    }
    p[n]
}

/// Every exponent vector within the total-order budget, by exhaustive search.
fn brute_force(bound: u64) -> BTreeSet<Vec<u32>> {
    let m = bound as usize;
    let mut out = BTreeSet::new();
    let mut n = vec![0u32; m];
    loop {
        let total: u64 = n.iter().enumerate().map(|(k, &c)| (k as u64 + 1) * c as u64).sum();
        if total <= bound {
            let mut v = n.clone();
            while v.last() == Some(&0) {
                v.pop();
            }
            out.insert(v);
        }
        // odometer over n_k in 0..=bound/k
        let mut i = 0;
        loop {
            if i == m {
                return out;
            }
            n[i] += 1;
            if (i as u64 + 1) * n[i] as u64 <= bound {
                break;
            }
            n[i] = 0;
            i += 1;
        }
    }
}

proptest! {
    #[test]
    fn decay_index_formulas_agree(dim in 1u32..=6, n in exponents()) {
        let t = make_term(dim, n.clone()).unwrap();
        let d = dim as i64;
        let total: i64 = n.total_order() as i64;
        let degree: i64 = n.degree() as i64;
        let first = Rational::new(d + 2 - total, d);
        let second = Rational::new(t.ell(), d) + Rational::from_integer(degree);
        prop_assert_eq!(t.decay_index(), first);
        prop_assert_eq!(t.decay_index(), second);
    }

    #[test]
    fn ell_matches_definition(dim in 1u32..=6, n in exponents()) {
        let t = make_term(dim, n.clone()).unwrap();
        let d = dim as i64;
        let sum: i64 = n.nonzero().map(|(k, c)| (d + k as i64) * c as i64).sum();
        prop_assert_eq!(t.ell(), d + 2 - sum);
        prop_assert_eq!(t.density_power(), Rational::new(t.ell(), d));
    }

    #[test]
    fn dimensional_closure(dim in 1u32..=6, n in exponents()) {
        let t = make_term(dim, n.clone()).unwrap();
        let d = dim as i64;
        prop_assert_eq!(t.length_exponent(), Rational::from_integer(-(d + 2)));
        let closure = n
            .nonzero()
            .fold(t.density_power(), |acc, (k, c)| acc + Rational::new(c as i64 * (d + k as i64), d));
        prop_assert_eq!(closure, Rational::new(d + 2, d));
    }

    #[test]
    fn class_follows_total_order(dim in 1u32..=6, n in exponents()) {
        let t = make_term(dim, n.clone()).unwrap();
        let total = n.total_order();
        let bound = dim as u64 + 2;
        let expect = match total.cmp(&bound) {
            std::cmp::Ordering::Less => AdmissibilityClass::LocalizedAdmissible,
            std::cmp::Ordering::Equal => AdmissibilityClass::PeriodicMarginal,
            std::cmp::Ordering::Greater => AdmissibilityClass::Inadmissible,
        };
        prop_assert_eq!(t.class(), expect);
        prop_assert_eq!(classify(&t, Boundary::Localized).finite, total < bound);
        prop_assert_eq!(classify(&t, Boundary::Periodic).finite, total <= bound);
    }

    #[test]
    fn raising_an_exponent_never_restores_admissibility(
        dim in 1u32..=6,
        n in exponents(),
        k in 0usize..7,
    ) {
        let before = make_term(dim, n.clone()).unwrap();
        let mut raised = n.entries().to_vec();
        if raised.len() <= k {
            raised.resize(k + 1, 0);
        }
        raised[k] += 1;
        let after = make_term(dim, ExponentVector::new(raised).unwrap()).unwrap();
        for boundary in [Boundary::Localized, Boundary::Periodic] {
            let b = classify(&before, boundary).finite;
            let a = classify(&after, boundary).finite;
            prop_assert!(b || !a);
        }
        prop_assert!(after.class() >= before.class());
    }

    #[test]
    fn token_round_trips(dim in 1u32..=6, n in exponents()) {
        let t = make_term(dim, n).unwrap();
        let back: KedTerm = t.token().parse().unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn trailing_zeros_are_rejected(n in prop::collection::vec(0u32..4, 0..5), zeros in 1usize..3) {
        let mut v = n;
        v.extend(std::iter::repeat_n(0, zeros));
        prop_assert!(ExponentVector::new(v).is_err());
    }
}

#[test]
fn max_derivative_order_is_one_above_dimension() {
    for dim in 1..=10 {
        assert_eq!(max_derivative_order(dim, Boundary::Localized).unwrap(), dim as usize + 1);
        assert_eq!(max_derivative_order(dim, Boundary::Periodic).unwrap(), dim as usize + 2);
    }
}

#[test]
fn enumeration_counts_match_partition_sums() {
    for dim in 1..=6u32 {
        for boundary in [Boundary::Localized, Boundary::Periodic] {
            let top = max_derivative_order(dim, boundary).unwrap();
            let expect: u64 = (0..=top).map(partition_count).sum();
            let terms = enumerate_terms(dim, boundary, None).unwrap();
            assert_eq!(terms.len() as u64, expect, "D={dim} {boundary:?}");
        }
    }
    let small: Vec<usize> = (1..=3)
        .map(|d| enumerate_terms(d, Boundary::Localized, None).unwrap().len())
        .collect();
    assert_eq!(small, [4, 7, 12]);
}

#[test]
fn enumeration_matches_brute_force() {
    for dim in 1..=4u32 {
        for bound in 0..=8u32 {
            let got: BTreeSet<Vec<u32>> = enumerate_terms(dim, Boundary::Localized, Some(bound))
                .unwrap()
                .into_iter()
                .map(|t| t.exponents().entries().to_vec())
                .collect();
            assert_eq!(got, brute_force(bound as u64), "D={dim} bound={bound}");
        }
    }
}

#[test]
fn enumeration_is_sorted_and_unique() {
    let terms = enumerate_terms(3, Boundary::Periodic, Some(10)).unwrap();
    for w in terms.windows(2) {
        let a = (w[0].total_order(), w[0].exponents());
        let b = (w[1].total_order(), w[1].exponents());
        assert!(a < b, "{} !< {}", w[0], w[1]);
    }
}

#[test]
fn csv_round_trip_is_exact() {
    for dim in 1..=4 {
        let terms = enumerate_terms(dim, Boundary::Localized, Some(9)).unwrap();
        let mut buf = Vec::new();
        write_terms_csv(&mut buf, &terms).unwrap();
        let back = read_terms_csv(buf.as_slice()).unwrap();
        assert_eq!(back, terms);
        let mut again = Vec::new();
        write_terms_csv(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }
}
