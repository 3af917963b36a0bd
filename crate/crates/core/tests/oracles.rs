//! Closed-form log-partitions against the independent quadrature oracle.

use gibbs_core::quadrature;
use gibbs_core::target::{
    exact_linear_sampler, linear_inverse_cdf, r_function, LinearSum, Rescaled, Shifted,
};
use gibbs_core::{FunctionId, Hyperrectangle, TargetFunction};

const BETAS: [f64; 7] = [-5.0, 0.0, 0.1, 1.0, 15.0, 40.0, 1e4];

/// Relative tolerance of the oracle, measured against `max(1, |L|)` so that
/// `L = 0` is meaningful.
fn tolerance(d: usize) -> f64 {
    if d <= 2 {
        1e-6
    } else {
        1e-3
    }
}

fn assert_close(f: &dyn TargetFunction, exact: f64) {
    let reference = quadrature::log_partition(f);
    let err = (exact - reference).abs() / exact.abs().max(1.0);
    assert!(
        err < tolerance(f.dim()),
        "{}: closed form {exact}, quadrature {reference}",
        f.label()
    );
}

#[test]
fn linear_sums_match_quadrature() {
    for d in 1..=3 {
        for beta in BETAS {
            let f = LinearSum::new(beta, d);
            assert_close(&f, f.exact_log_partition().unwrap());
        }
    }
}

#[test]
fn shifted_and_rescaled_match_quadrature() {
    let base = LinearSum::new(3.0, 2);
    let shifted = Shifted::new(LinearSum::new(3.0, 2), -7.25);
    assert_close(&shifted, shifted.exact_log_partition().unwrap());
    let rect = Hyperrectangle::new(vec![0.25, 0.5], vec![0.5, 0.125]).unwrap();
    let rescaled = Rescaled::new(&base, rect);
    assert_close(&rescaled, rescaled.exact_log_partition().unwrap());
}

#[test]
fn registry_functions_with_closed_forms_match() {
    for id in [
        "linear:beta=40,d=2",
        "linear:beta=-5,d=3",
        "linear:beta=10000,d=1",
    ] {
        let f = id.parse::<FunctionId>().unwrap().build();
        assert_close(f.as_ref(), f.exact_log_partition().unwrap());
    }
}

#[test]
fn documented_scalar_values() {
    assert!((LinearSum::new(1.0, 1).exact_log_partition().unwrap() - 0.541325).abs() < 1e-6);
    assert!((r_function(2.0) - 0.161440).abs() < 1e-6);
    assert_eq!(r_function(0.0), 0.0);
    let quad = "quad:beta=1,d=1".parse::<FunctionId>().unwrap().build();
    // ∫₀¹ e^{x²} = 1.462652, so L = log 1.462652 = 0.380251.
    let l_quad = quadrature::log_partition(quad.as_ref());
    assert!((l_quad.exp() - 1.462652).abs() < 1e-6);
    assert!((l_quad - 0.380251).abs() < 1e-6);
    let cos = "cos:beta=1,d=1".parse::<FunctionId>().unwrap().build();
    assert!((quadrature::log_partition(cos.as_ref()) - 0.235914).abs() < 1e-6);
}

#[test]
fn inverse_cdf_inverts_the_cdf() {
    for beta in [-5.0f64, -1e-9, 0.0, 1e-9, 3.0, 700.0] {
        for k in 0..=20 {
            let u = k as f64 / 20.0;
            let x = linear_inverse_cdf(beta, u);
            assert!((0.0..=1.0).contains(&x));
            let cdf = if beta.abs() < 1e-12 {
                x
            } else {
                (beta * x).exp_m1() / beta.exp_m1()
            };
            assert!((cdf - u).abs() < 1e-9, "beta={beta} u={u}");
        }
    }
    assert_eq!(exact_linear_sampler(2.0, &[0.0, 1.0]), vec![0.0, 1.0]);
}
