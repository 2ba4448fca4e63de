use lorentzcg::coupling::{decompose, CouplingProblem};
use lorentzcg::repr::{classify, Classification};
use lorentzcg::{FiniteLabel, HalfInt, IrrepLabel, C};

fn problem<T: lorentzcg::Real>(gamma_x2: i32, a: i8, lambda_x2: i32, rho: C<T>) -> CouplingProblem<T> {
    let finite = FiniteLabel::new(HalfInt::from_twice(gamma_x2), a).unwrap();
    CouplingProblem::new(finite, IrrepLabel::new(HalfInt::from_twice(lambda_x2), rho).unwrap()).unwrap()
}

#[test]
fn f32_table_tracks_f64() {
    for (gamma_x2, a, lambda_x2, rho) in [(1, 1, 0, (0.0, 2.0)), (2, -1, 1, (0.3, 1.1)), (3, 1, -2, (0.0, 0.7))] {
        let single = problem::<f32>(gamma_x2, a, lambda_x2, C::new(rho.0 as f32, rho.1 as f32));
        let double = problem::<f64>(gamma_x2, a, lambda_x2, C::new(rho.0, rho.1));
        let j_max = HalfInt::from_twice(lambda_x2.abs() + gamma_x2 + 4);
        let ts = decompose(&single, j_max).unwrap();
        let td = decompose(&double, j_max).unwrap();
        assert_eq!(ts.blocks.len(), td.blocks.len());
        for (bs, bd) in ts.blocks.iter().zip(&td.blocks) {
            assert_eq!(bs.j_total, bd.j_total);
            assert!(bs.residuals.iter().all(|r| *r < 1e-3), "{:?}", bs.residuals);
            for (ps, pd) in bs.pairs.iter().zip(&bd.pairs) {
                assert_eq!(ps.nu, pd.nu);
                for &j in &bd.omega {
                    let (s, d) = (bs.a_coeff(j, ps.nu), bd.a_coeff(j, pd.nu));
                    let diff = ((s.re as f64 - d.re).powi(2) + (s.im as f64 - d.im).powi(2)).sqrt();
                    assert!(diff < 1e-3, "J={} nu={} j={j}: {s} vs {d}", bd.j_total, pd.nu);
                }
            }
        }
    }
}

#[test]
fn f32_classification() {
    let label = IrrepLabel::<f32>::new(HalfInt::from_twice(1), C::new(-1.5, 0.0)).unwrap();
    assert!(matches!(classify(&label), Classification::FiniteDimensional { .. }));
    let label = IrrepLabel::<f32>::new(HalfInt::ZERO, C::new(0.5, 0.0)).unwrap();
    assert!(matches!(classify(&label), Classification::Complementary));
}
