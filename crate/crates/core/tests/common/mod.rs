#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stable system of order n with distinct modes, observed through one
/// generic output and excited by a generic initial state.
pub fn random_stable(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = DMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        let sigma = rng.random_range(0.05..0.5);
        if i + 1 < n {
            let omega = 0.4 + 0.7 * (i / 2) as f64 + rng.random_range(0.0..0.5);
            block[(i, i)] = -sigma;
            block[(i + 1, i + 1)] = -sigma;
            block[(i, i + 1)] = omega;
            block[(i + 1, i)] = -omega;
            i += 2;
        } else {
            block[(i, i)] = -sigma;
            i += 1;
        }
    }
    let t = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
    let ti = t.clone().try_inverse().expect("diagonally dominant");
    let a = &t * block * ti;
    let c = DMatrix::from_fn(1, n, |_, _| rng.random_range(0.5..1.5));
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5));
    (a, c, x0)
}

pub fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}
