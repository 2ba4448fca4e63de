use lorentzcg::half::{mrange, omega_set};
use lorentzcg::su2::su2_cg;
use lorentzcg::tridiag::{dense_eig_oracle, eigvec_by_recurrence, geometric_multiplicity, Tridiagonal};
use lorentzcg::{Complex64, HalfInt};
use proptest::prelude::*;

fn half(max_x2: i32) -> impl Strategy<Value = HalfInt> {
    (-max_x2..=max_x2).prop_map(HalfInt::from_twice)
}

fn entry() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn coupling_entry() -> impl Strategy<Value = Complex64> {
    entry().prop_filter("superdiagonal bounded away from zero", |z| z.norm() > 0.2)
}

fn tridiagonal() -> impl Strategy<Value = Tridiagonal<f64>> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(entry(), n - 1),
            prop::collection::vec(entry(), n),
            prop::collection::vec(coupling_entry(), n - 1),
        )
            .prop_map(|(sub, diag, sup)| Tridiagonal::new(sub, diag, sup).unwrap())
    })
}

proptest! {
    #[test]
    fn half_int_arithmetic_is_exact(a in half(4000), b in half(4000)) {
        prop_assert_eq!((a + b).to_f64(), a.to_f64() + b.to_f64());
        prop_assert_eq!((a - b) + b, a);
        prop_assert_eq!(-(-a), a);
        prop_assert_eq!((a + b).is_integer(), a.is_integer() == b.is_integer());
        prop_assert_eq!(a < b, a.to_f64() < b.to_f64());
    }

    #[test]
    fn half_int_text_round_trip(a in half(4000)) {
        prop_assert_eq!(HalfInt::parse(&a.to_string()), Some(a));
        prop_assert_eq!(HalfInt::parse(&a.to_f64().to_string()), Some(a));
        let json = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(json.clone(), a.twice().to_string());
        prop_assert_eq!(serde_json::from_str::<HalfInt>(&json).unwrap(), a);
    }

    #[test]
    fn mrange_counts(j in (0..40).prop_map(HalfInt::from_twice)) {
        let ms = mrange(j).unwrap();
        prop_assert_eq!(ms.len() as i32, j.twice() + 1);
        prop_assert_eq!(ms.first().copied(), Some(-j));
        prop_assert_eq!(ms.last().copied(), Some(j));
    }

    #[test]
    fn omega_parity(lambda in half(6), g in (1..6).prop_map(HalfInt::from_twice), extra in 0..6i32) {
        let big_j = lambda.abs() + g + HalfInt::from_int(extra);
        for j in omega_set(lambda, g, big_j).unwrap() {
            prop_assert!((big_j - j).abs() <= g);
            prop_assert!((j - lambda).is_integer());
            prop_assert!(j >= lambda.abs());
        }
    }

    #[test]
    fn cg_columns_are_normalised(j1 in (0..7).prop_map(HalfInt::from_twice), j2 in (0..7).prop_map(HalfInt::from_twice)) {
        let lo = (j1 - j2).abs();
        let mut big_j = lo;
        while big_j <= j1 + j2 {
            for big_m in mrange(big_j).unwrap() {
                let mut sum = 0.0;
                for m1 in mrange(j1).unwrap() {
                    let m2 = big_m - m1;
                    if m2.abs() <= j2 {
                        let c: f64 = su2_cg(j1, m1, j2, m2, big_j, big_m).unwrap();
                        sum += c * c;
                    }
                }
                prop_assert!((sum - 1.0).abs() < 1e-12, "J={} M={} sum={}", big_j, big_m, sum);
            }
            big_j += HalfInt::ONE;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn tridiagonal_eigenspaces_are_lines(t in tridiagonal()) {
        let eigs = dense_eig_oracle(&t).unwrap();
        prop_assert_eq!(eigs.len(), t.n());
        let trace: Complex64 = eigs.iter().sum();
        prop_assert!((trace - t.trace()).norm() < 1e-9);
        for k in eigs {
            prop_assert_eq!(geometric_multiplicity(&t, k), 1);
            let x = eigvec_by_recurrence(&t, k, 1e-7).unwrap();
            prop_assert_eq!(x[0], Complex64::new(1.0, 0.0));
        }
    }
}
