//! Forcing terms of the manufactured problems against `D^alpha u - u_xx - f(u)`
//! assembled from the exact solution with the power-function oracle.

use std::f64::consts::PI;

use fracfast_core::bench::problems::{bump_linear, bump_logistic, logistic, manufactured_exact};
use fracfast_core::caputo::caputo_power_oracle;
use fracfast_core::pde::FieldFn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn at(f: &FieldFn, x: f64, t: f64) -> f64 {
    let mut out = [0.0];
    f(t, &[x], &mut out);
    out[0]
}

/// `b(x) = (x (pi - x))^4` and its first two derivatives.
fn bump(x: f64) -> (f64, f64, f64) {
    let q = x * (PI - x);
    let dq = PI - 2.0 * x;
    (q.powi(4), 4.0 * q.powi(3) * dq, 12.0 * q * q * dq * dq - 8.0 * q.powi(3))
}

/// `u = b(x) (e^{-x} t^{3+alpha} + 1)`: the time derivative hits only `t^{3+alpha}`.
fn oracle_residual_free(alpha: f64, x: f64, t: f64) -> (f64, f64) {
    let (b, db, d2b) = bump(x);
    let e = (-x).exp();
    let tp = t.powf(3.0 + alpha);
    let du = b * e * caputo_power_oracle(3.0 + alpha, alpha, t).unwrap();
    // (b (e tp + 1))'' = b'' (e tp + 1) - 2 b' e tp + b e tp
    let uxx = d2b * (e * tp + 1.0) - 2.0 * db * e * tp + b * e * tp;
    (du - uxx, b * (e * tp + 1.0))
}

#[test]
fn linear_forcing_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for &alpha in &[0.1, 0.5, 0.9] {
        let p = bump_linear(alpha);
        let g = p.forcing.unwrap();
        for _ in 0..200 {
            let (x, t) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..1.0));
            let (expected, u) = oracle_residual_free(alpha, x, t);
            let residual = at(&g, x, t) - expected;
            assert!(residual.abs() < 1e-8, "alpha={alpha} x={x} t={t}: {residual:e}");
            assert!((manufactured_exact(alpha, x, t) - u).abs() < 1e-12 * u.abs().max(1.0));
        }
    }
}

#[test]
fn nonlinear_forcing_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &alpha in &[0.25, 0.5, 0.75] {
        let p = bump_logistic(alpha);
        let g = p.forcing.unwrap();
        let f = p.reaction.unwrap();
        for _ in 0..200 {
            let (x, t) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..1.0));
            let (lin, u) = oracle_residual_free(alpha, x, t);
            assert_eq!(f(u), logistic(u));
            let residual = at(&g, x, t) - (lin - logistic(u));
            assert!(residual.abs() < 1e-8, "alpha={alpha} x={x} t={t}: {residual:e}");
        }
    }
}

#[test]
fn initial_data_is_the_exact_trace() {
    let p = bump_logistic(0.5);
    let exact = p.exact.unwrap();
    for x in [0.0, 0.7, 1.6, 3.0] {
        assert_eq!((p.initial)(x), at(&exact, x, 0.0));
        assert!(((p.initial)(x) - bump(x).0).abs() < 1e-12);
    }
}
