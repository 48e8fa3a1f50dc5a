//! Polynomial helpers. Coefficients are stored highest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluates a real polynomial at a complex point (Horner).
pub fn eval_c(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn eval_cc(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Drops leading zeros; an all-zero polynomial becomes `[0.0]`.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    match coeffs.iter().position(|&c| c != 0.0) {
        Some(i) => coeffs[i..].to_vec(),
        None => vec![0.0],
    }
}

/// Degree after trimming leading zeros (zero polynomial has degree 0).
pub fn degree(coeffs: &[f64]) -> usize {
    trim(coeffs).len() - 1
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum of two polynomials aligned at the constant term.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    for (i, &x) in b.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    out
}

/// Monic polynomial with the given roots. Roots must be closed under
/// conjugation for the imaginary parts to cancel; they are dropped.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

/// All complex roots of a real polynomial.
///
/// The variable is rescaled so the coefficients are balanced, the roots of
/// the companion matrix are taken, and each root is polished by Newton steps
/// on the original polynomial.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let p = trim(coeffs);
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    // strip zero roots exactly
    let nz = p.iter().rev().take_while(|&&c| c == 0.0).count();
    let core = &p[..p.len() - nz];
    let m = core.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); nz];
    if m == 0 {
        return out;
    }
    // balance: x = rho * y
    let rho = (core[m].abs() / core[0].abs()).powf(1.0 / m as f64);
    let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
    let scaled: Vec<f64> = core
        .iter()
        .enumerate()
        .map(|(i, &c)| c * rho.powi((m - i) as i32) / (core[0] * rho.powi(m as i32)))
        .collect();
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        comp[(0, j)] = -scaled[j + 1];
    }
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    let deriv: Vec<f64> = core
        .iter()
        .enumerate()
        .take(m)
        .map(|(i, &c)| c * (m - i) as f64)
        .collect();
    let complex_core: Vec<Complex64> = core.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let complex_deriv: Vec<Complex64> = deriv.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    for y in comp.complex_eigenvalues().iter() {
        let mut z = *y * rho;
        for _ in 0..8 {
            let f = eval_cc(&complex_core, z);
            let d = eval_cc(&complex_deriv, z);
            if d.norm() == 0.0 {
                break;
            }
            let step = f / d;
            let next = z - step;
            // accept only if it improves the residual
            if eval_cc(&complex_core, next).norm() <= f.norm() {
                z = next;
            } else {
                break;
            }
            if step.norm() <= 1e-16 * z.norm() {
                break;
            }
        }
        out.push(z);
    }
    out
}
