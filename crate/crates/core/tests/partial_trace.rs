use gap_core::linalg::{gaussian_matrix, haar_unitary, partial_trace_b, partial_trace_pure};
use gap_core::rng::stream;
use gap_core::{CMatrix, Complex64, HilbertDim};
use proptest::prelude::*;

fn close(a: &CMatrix, b: &CMatrix) -> bool {
    (a - b).norm() <= 1e-10 * (1.0 + a.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_and_trace_preserving(d_a in 1usize..5, d_b in 1usize..5, seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let shape = HilbertDim::bipartite(d_a, d_b).unwrap();
        let d = shape.dim();
        let mut rng = stream(seed, 0, 0);
        let (x, y) = (gaussian_matrix(d, d, &mut rng), gaussian_matrix(d, d, &mut rng));
        let c = Complex64::new(re, im);
        let lhs = partial_trace_b(&(&x * c + &y), shape).unwrap();
        let rhs = partial_trace_b(&x, shape).unwrap() * c + partial_trace_b(&y, shape).unwrap();
        prop_assert!(close(&lhs, &rhs));
        prop_assert!((partial_trace_b(&x, shape).unwrap().trace() - x.trace()).norm() < 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn product_operators(d_a in 1usize..5, d_b in 1usize..5, seed in any::<u64>()) {
        let shape = HilbertDim::bipartite(d_a, d_b).unwrap();
        let mut rng = stream(seed, 0, 0);
        let (a, b) = (gaussian_matrix(d_a, d_a, &mut rng), gaussian_matrix(d_b, d_b, &mut rng));
        let got = partial_trace_b(&a.kronecker(&b), shape).unwrap();
        prop_assert!(close(&got, &(&a * b.trace())));
    }

    #[test]
    fn equivariant_under_local_unitaries(d_a in 1usize..5, d_b in 1usize..5, seed in any::<u64>()) {
        let shape = HilbertDim::bipartite(d_a, d_b).unwrap();
        let d = shape.dim();
        let mut rng = stream(seed, 0, 0);
        let x = gaussian_matrix(d, d, &mut rng);
        let (u_a, u_b) = (haar_unitary(d_a, &mut rng), haar_unitary(d_b, &mut rng));
        let u = u_a.kronecker(&u_b);
        let lhs = partial_trace_b(&(&u * &x * u.adjoint()), shape).unwrap();
        let rhs = &u_a * partial_trace_b(&x, shape).unwrap() * u_a.adjoint();
        prop_assert!(close(&lhs, &rhs));
        // A unitary on b alone leaves the marginal unchanged.
        let ub_only = CMatrix::identity(d_a, d_a).kronecker(&u_b);
        prop_assert!(close(&partial_trace_b(&(&ub_only * &x * ub_only.adjoint()), shape).unwrap(), &partial_trace_b(&x, shape).unwrap()));
    }

    #[test]
    fn pure_route_is_positive_with_unit_trace(d_a in 1usize..6, d_b in 1usize..6, seed in any::<u64>()) {
        let shape = HilbertDim::bipartite(d_a, d_b).unwrap();
        let d = shape.dim();
        let v = gaussian_matrix(d, 1, &mut stream(seed, 0, 0));
        let psi = &v / Complex64::new(v.norm(), 0.0);
        let r = partial_trace_pure(psi.as_slice(), shape).unwrap();
        prop_assert!(close(&r, &partial_trace_b(&(&psi * psi.adjoint()), shape).unwrap()));
        prop_assert!((r.trace().re - 1.0).abs() < 1e-12 && r.trace().im.abs() < 1e-12);
        let (eig, _) = gap_core::linalg::hermitian_eigen(&r);
        prop_assert!(eig.iter().all(|&e| e > -1e-12));
    }
}
