mod common;

use bcwave::connecting::{apply_connecting, assemble_matrix, build_connecting, connecting_form, reflect_kernel};
use bcwave::forward::{forward_solution, response_matrix, ResponseMatrix};
use bcwave::goursat::solve_kernels;
use bcwave::model::inner_inner;
use bcwave::{Control, Potential};
use common::kernel_grid;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn response(p: &Potential, n: usize) -> (bcwave::goursat::KernelField, ResponseMatrix) {
    let k = solve_kernels(p, &kernel_grid(1.0, n)).unwrap();
    let r = response_matrix(&k);
    (k, r)
}

#[test]
fn free_connecting_operator_is_half_identity() {
    let (_, r) = response(&Potential::zero(), 32);
    let ck = build_connecting(&r, 1.0).unwrap();
    let f = Control::random_smooth(*ck.grid(), 3, 1);
    let cf = apply_connecting(&ck, &f).unwrap();
    for i in 0..=32 {
        assert_eq!(cf.f1()[i], 0.5 * f.f1()[i]);
        assert_eq!(cf.f2()[i], 0.5 * f.f2()[i]);
    }
}

#[test]
fn weak_constant_potential_matches_first_order_kernel() {
    let c = 1e-4;
    let (_, r) = response(&Potential::constant(c).unwrap(), 32);
    let ck = build_connecting(&r, 1.0).unwrap();
    let g = *ck.grid();
    for i in [0usize, 10, 32] {
        for j in [0usize, 7, 20] {
            let (t, s) = (g.t(i), g.t(j));
            let c11 = -c / 4.0 * (1.0 - t.max(s));
            assert!((ck.at(i, j).a11 - c11).abs() < 1e-2 * c, "({t}, {s})");
        }
    }
}

#[test]
fn restriction_equals_direct_build_at_shorter_horizon() {
    let (_, r) = response(&Potential::gaussian(1.0, 0.3, 0.2).unwrap(), 32);
    let ck = build_connecting(&r, 1.0).unwrap();
    for k in [8usize, 19, 32] {
        let direct = build_connecting(&r, ck.grid().t(k)).unwrap();
        let sub = ck.restrict(k).unwrap();
        for i in 0..=k {
            for j in 0..=k {
                assert!((direct.at(i, j) - sub.at(i, j)).max_abs() < 1e-15);
            }
        }
    }
    assert!(ck.restrict(0).is_err());
    assert!(ck.restrict(33).is_err());
}

#[test]
fn reflection_is_an_involution() {
    let (_, r) = response(&Potential::gaussian(1.0, 0.3, 0.2).unwrap(), 16);
    let ck = build_connecting(&r, 1.0).unwrap();
    let rr = reflect_kernel(&reflect_kernel(&ck));
    assert_eq!(rr, ck);
    assert!(reflect_kernel(&ck).is_reflected());
}

#[test]
fn gram_identity_converges_at_second_order() {
    let p = Potential::gaussian(1.0, 0.3, -0.3).unwrap();
    let err = |n: usize| {
        let (k, r) = response(&p, n);
        let ck = build_connecting(&r, 1.0).unwrap();
        let f = Control::random_smooth(*ck.grid(), 4, 3);
        let g = Control::random_smooth(*ck.grid(), 4, 4);
        let lhs = connecting_form(&ck, &f, &g).unwrap();
        let rhs = inner_inner(&forward_solution(&f, &k, 1.0).unwrap(), &forward_solution(&g, &k, 1.0).unwrap()).unwrap();
        (lhs - rhs).abs()
    };
    let (a, b) = (err(32), err(64));
    assert!(b < a / 3.0 || b < 1e-10, "{a} -> {b}");
}

#[test]
fn assembled_matrix_is_symmetric_positive_definite() {
    let (_, r) = response(&Potential::sech2(2.0, 0.3, 0.2).unwrap(), 32);
    let ck = build_connecting(&r, 1.0).unwrap();
    let sys = assemble_matrix(&ck).unwrap();
    assert!((&sys.matrix - sys.matrix.transpose()).amax() == 0.0);
    let e = SymmetricEigen::new(sys.matrix.clone());
    assert!(e.eigenvalues.min() > 0.0);
}

#[test]
fn inconsistent_response_is_rejected() {
    let (_, r) = response(&Potential::gaussian(1.0, 0.3, 0.2).unwrap(), 32);
    let bad = ResponseMatrix::new(*r.grid(), r.r11.clone(), r.r12.iter().map(|v| v + 1.0).collect(), r.r21.clone(), r.r22.clone()).unwrap();
    let ck = build_connecting(&bad, 1.0).unwrap();
    assert!(matches!(assemble_matrix(&ck), Err(bcwave::Error::Consistency { .. })));
    assert!(build_connecting(&r, 1.01).is_err());
    assert!(build_connecting(&r, 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernel_has_block_transpose_symmetry(a in -2.0..2.0f64, w in 0.2..0.8f64, c in -0.5..0.5f64) {
        let (_, r) = response(&Potential::gaussian(a, w, c).unwrap(), 32);
        let ck = build_connecting(&r, 1.0).unwrap();
        let h = ck.grid().h();
        let report = ck.symmetry_report();
        prop_assert!(report.block_transpose <= 10.0 * h * h * ck.max_abs().max(1.0));
        for i in 0..=32 {
            for j in 0..=32 {
                let (x, y) = (ck.at(i, j), ck.at(j, i));
                prop_assert_eq!(x.a11, y.a11);
                prop_assert_eq!(x.a22, y.a22);
            }
        }
    }

    #[test]
    fn connecting_form_is_symmetric_and_nonnegative(s1 in 0u64..1000, s2 in 0u64..1000) {
        let (_, r) = response(&Potential::gaussian(1.5, 0.3, 0.1).unwrap(), 32);
        let ck = build_connecting(&r, 1.0).unwrap();
        let f = Control::random_smooth(*ck.grid(), 4, s1);
        let g = Control::random_smooth(*ck.grid(), 4, s2);
        let fg = connecting_form(&ck, &f, &g).unwrap();
        let gf = connecting_form(&ck, &g, &f).unwrap();
        prop_assert!((fg - gf).abs() < 1e-4 * f.norm() * g.norm());
        prop_assert!(connecting_form(&ck, &f, &f).unwrap() > 0.0);
    }
}
