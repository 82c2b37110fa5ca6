mod common;

use std::f64::consts::PI;

use bcwave::forward::forward_solution;
use bcwave::goursat::solve_kernels;
use bcwave::spectral::{
    eigensolve, mode_coefficients, spectral_connecting_form, spectral_forward, spectral_response, wave_kernel,
    BoundaryConditions,
};
use bcwave::{Control, Potential, UniformGrid};
use proptest::prelude::*;

#[test]
fn free_dirichlet_spectrum_is_exact() {
    let (half, mesh) = (2.0, 256);
    let s = eigensolve(&Potential::zero(), half, BoundaryConditions::DIRICHLET, 20, mesh).unwrap();
    let exact = common::discrete_dirichlet_free(half, mesh, 20);
    for (a, b) in s.lambda.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
    }
    let he = s.mesh_step();
    for k in [0usize, 3, 11] {
        let kk = (k + 1) as f64 * PI / (2.0 * half);
        for (i, v) in s.eigenvector(k).iter().enumerate() {
            let x = -half + i as f64 * he;
            assert!((v - (kk * (x + half)).sin() / half.sqrt()).abs() < 1e-9);
        }
        let beta = kk * (kk * half).cos() * (kk * he).sin() / (kk * he) / half.sqrt();
        assert!((s.beta[k] - beta).abs() < 1e-9);
        assert!((s.gamma[k] + (kk * half).sin() / half.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn free_neumann_spectrum_is_exact() {
    let (half, mesh) = (1.5, 128);
    let s = eigensolve(&Potential::zero(), half, BoundaryConditions::NEUMANN, 12, mesh).unwrap();
    let h = 2.0 * half / mesh as f64;
    for (k, l) in s.lambda.iter().enumerate() {
        let exact = 4.0 / (h * h) * (k as f64 * PI / (2.0 * mesh as f64)).sin().powi(2);
        assert!((l - exact).abs() < 1e-8 * exact.max(1.0), "{k}: {l} vs {exact}");
    }
}

#[test]
fn eigenfunctions_are_orthonormal() {
    let p = Potential::gaussian(-3.0, 0.4, 0.2).unwrap();
    for bc in [BoundaryConditions::DIRICHLET, BoundaryConditions::NEUMANN, BoundaryConditions([1.0, 2.0, 0.5, -1.0])] {
        let s = eigensolve(&p, 2.0, bc, 30, 400).unwrap();
        let w = bcwave::numerics::trapezoid_weights(400, s.mesh_step());
        for a in 0..30 {
            for b in a..30 {
                let ip: f64 = (0..=400).map(|i| w[i] * s.eigenvector(a)[i] * s.eigenvector(b)[i]).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-9, "{bc:?} ({a}, {b}): {ip}");
            }
        }
        assert!(s.lambda.windows(2).all(|l| l[1] > l[0]));
        assert!(s.lambda[0] < 0.0, "attractive well has a negative ground state");
    }
}

#[test]
fn eigenvalues_converge_at_second_order() {
    let p = Potential::sech2(-2.0, 1.0, 0.0).unwrap();
    let ground = |mesh: usize| eigensolve(&p, 6.0, BoundaryConditions::DIRICHLET, 1, mesh).unwrap().lambda[0];
    let (a, b, c) = (ground(200), ground(400), ground(800));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    // -2 sech^2 has the single bound state -1 on the line.
    assert!((c + 1.0).abs() < 1e-3, "{c}");
}

#[test]
fn invalid_requests_are_rejected() {
    let p = Potential::zero();
    assert!(eigensolve(&p, 1.0, BoundaryConditions([0.0, 0.0, 1.0, 0.0]), 5, 64).is_err());
    assert!(eigensolve(&p, 1.0, BoundaryConditions::DIRICHLET, 5, 63).is_err());
    assert!(eigensolve(&p, 1.0, BoundaryConditions::DIRICHLET, 0, 64).is_err());
    assert!(eigensolve(&p, 1.0, BoundaryConditions::DIRICHLET, 64, 64).is_err());
    assert!(eigensolve(&p, -1.0, BoundaryConditions::DIRICHLET, 5, 64).is_err());
    let s = eigensolve(&p, 1.0, BoundaryConditions::DIRICHLET, 20, 64).unwrap();
    assert!(!s.warnings.is_empty());
    let f = Control::zeros(UniformGrid::new(2.0, 16).unwrap());
    assert!(spectral_response(&s, &f).is_err());
    assert!(spectral_connecting_form(&s, &f, &f).is_err());
}

#[test]
fn mode_coefficients_are_exact_for_linear_forcing() {
    let (a, b) = (0.7, -1.3);
    let h = 0.01;
    let g: Vec<f64> = (0..=150).map(|k| a + b * k as f64 * h).collect();
    for lambda in [25.0, 900.0, 1e-7, -4.0] {
        let c = mode_coefficients(lambda, &g, h);
        for (k, ck) in c.iter().enumerate() {
            let t = k as f64 * h;
            let exact = common::simpson(&|s| wave_kernel(lambda, t - s) * (a + b * s), 0.0, t, 1e-13);
            // Exact panels for λ > 0; trapezoid error bound otherwise.
            let tol = if lambda > 1e-3 {
                1e-11
            } else {
                h * h * t * (a.abs() + b.abs()) * (1.0 + lambda.abs()) * (2.0 * lambda.abs().sqrt() * t).cosh() / 2.0
            };
            assert!((ck - exact).abs() <= tol.max(1e-12), "λ = {lambda}, t = {t}: {ck} vs {exact}");
        }
    }
}

#[test]
fn spectral_forward_matches_dynamic_forward() {
    let p = Potential::gaussian(1.0, 0.3, 0.0).unwrap();
    let grid = UniformGrid::new(1.0, 128).unwrap();
    let k = solve_kernels(&p, &common::kernel_grid(1.0, 128)).unwrap();
    let s = eigensolve(&p, 4.0, BoundaryConditions::DIRICHLET, 400, 2048).unwrap();
    let f = Control::random_smooth(grid, 3, 9);
    let dynamic = forward_solution(&f, &k, 1.0).unwrap();
    let spectral = spectral_forward(&s, &f, 1.0).unwrap();
    let err = dynamic.max_abs_diff(&spectral.value) / dynamic.to_full().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(err < 0.05, "{err}");
}

proptest! {
    #[test]
    fn wave_kernel_matches_closed_forms(lambda in -50.0..50.0f64, t in 0.0..3.0f64) {
        let v = wave_kernel(lambda, t);
        let exact = if lambda.abs() < 1e-12 {
            t
        } else if lambda > 0.0 {
            (lambda.sqrt() * t).sin() / lambda.sqrt()
        } else {
            ((-lambda).sqrt() * t).sinh() / (-lambda).sqrt()
        };
        prop_assert!((v - exact).abs() <= 1e-12 * exact.abs().max(1.0));
    }

    #[test]
    fn mode_coefficients_are_linear(s1 in 0u64..100, s2 in 0u64..100, lambda in 0.5..400.0f64, a in -2.0..2.0f64) {
        let grid = UniformGrid::new(1.0, 64).unwrap();
        let f = Control::random_smooth(grid, 4, s1);
        let g = Control::random_smooth(grid, 4, s2);
        let c = mode_coefficients(lambda, Control::combine(a, &f, 1.0, &g).f1(), grid.h());
        let cf = mode_coefficients(lambda, f.f1(), grid.h());
        let cg = mode_coefficients(lambda, g.f1(), grid.h());
        for k in 0..c.len() {
            prop_assert!((c[k] - a * cf[k] - cg[k]).abs() < 1e-12);
        }
    }
}
