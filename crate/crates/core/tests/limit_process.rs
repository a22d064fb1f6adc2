use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;

use ccef_core::asymptotics::{
    h_kernel, limit_covariance_hkernel, limit_covariance_hkernel_mc, limit_covariance_hkernel_tensor,
    limit_covariance_printed, limit_variance_hkernel, limit_variance_printed,
};
use ccef_core::copula::{Copula, Fgm, Independence, LinIteratedFgm};
use ccef_core::mc::rng_from_seed;
use ccef_core::QuadratureSpec;

fn models() -> Vec<Box<dyn Copula>> {
    vec![
        Box::new(Independence),
        Box::new(Fgm::new(1.0).unwrap()),
        Box::new(Fgm::new(-0.7).unwrap()),
        Box::new(LinIteratedFgm::new(0.5, 1.0).unwrap()),
    ]
}

#[test]
fn covariance_matrix_is_positive_semidefinite() {
    let spec = QuadratureSpec::default();
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    for c in models() {
        let k = DMatrix::from_fn(5, 5, |i, j| limit_covariance_hkernel(c.as_ref(), grid[i], grid[j], &spec).unwrap());
        let min = k.symmetric_eigen().eigenvalues.min();
        assert!(min >= -1e-6, "{}: {min}", c.family());
    }
}

#[test]
fn covariance_is_symmetric_and_continuous_on_the_diagonal() {
    let spec = QuadratureSpec::default();
    for c in models() {
        let a = limit_covariance_hkernel(c.as_ref(), 0.35, 0.8, &spec).unwrap();
        let b = limit_covariance_hkernel(c.as_ref(), 0.8, 0.35, &spec).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        let diag = limit_variance_hkernel(c.as_ref(), 0.4, &spec).unwrap();
        let near = limit_covariance_hkernel(c.as_ref(), 0.4, 0.4 + 1e-10, &spec).unwrap();
        assert_abs_diff_eq!(diag, near, epsilon = 1e-8);
        let p = limit_covariance_printed(c.as_ref(), 0.35, 0.8, &spec).unwrap();
        let p2 = limit_covariance_printed(c.as_ref(), 0.8, 0.35, &spec).unwrap();
        assert_abs_diff_eq!(p, p2, epsilon = 1e-9);
    }
}

#[test]
fn reduced_and_tensor_paths_agree() {
    let spec = QuadratureSpec::default();
    for c in models() {
        for (u, u2) in [(0.2, 0.2), (0.3, 0.75), (0.9, 0.5)] {
            let a = limit_covariance_hkernel(c.as_ref(), u, u2, &spec).unwrap();
            let b = limit_covariance_hkernel_tensor(c.as_ref(), u, u2, &spec).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }
}

#[test]
fn monte_carlo_oracle_matches_quadrature() {
    let spec = QuadratureSpec::default();
    for (c, u, u2) in [
        (Box::new(Independence) as Box<dyn Copula>, 0.5, 0.5),
        (Box::new(Fgm::new(1.0).unwrap()), 0.3, 0.7),
    ] {
        let mc = limit_covariance_hkernel_mc(c.as_ref(), u, u2, 1_000_000, 99).unwrap();
        let exact = limit_covariance_hkernel(c.as_ref(), u, u2, &spec).unwrap();
        assert!((mc.mean - exact).abs() <= 3.0 * mc.std_error, "{}: {mc:?} vs {exact}", c.family());
    }
    let v = limit_variance_hkernel(&Independence, 0.5, &spec).unwrap();
    assert_abs_diff_eq!(v, 0.5 / 6.0, epsilon = 1e-10);
}

#[test]
fn h_kernel_is_centered() {
    let c = Fgm::new(0.8).unwrap();
    let mut rng = rng_from_seed(4);
    let draws = 100_000;
    let obs: Vec<(f64, f64)> = (0..draws).map(|_| c.sample_pair(&mut rng).unwrap()).collect();
    for (u, v) in [(0.2, 0.7), (0.5, 0.5), (0.85, 0.3)] {
        let mean = obs.iter().map(|&o| h_kernel(&c, u, v, o).unwrap()).sum::<f64>() / draws as f64;
        assert!(mean.abs() <= 4.0 / (draws as f64).sqrt(), "({u},{v}): {mean}");
    }
}

#[test]
fn h_kernel_examples() {
    assert_abs_diff_eq!(h_kernel(&Independence, 0.5, 0.5, (0.2, 0.3)).unwrap(), 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(h_kernel(&Independence, 0.5, 0.5, (0.8, 0.9)).unwrap(), 0.25, epsilon = 1e-15);
}

#[test]
fn printed_variance_is_finite_near_one_and_reduces_for_fgm_zero() {
    let spec = QuadratureSpec::default();
    let near_one = limit_variance_printed(&Independence, 0.999, &spec).unwrap();
    assert!(near_one.is_finite());
    for u in [0.2, 0.6] {
        let a = limit_variance_printed(&Independence, u, &spec).unwrap();
        let b = limit_variance_printed(&Fgm::new(0.0).unwrap(), u, &spec).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}
