//! Dense matrix helpers shared by the pipeline stages: matrix exponential,
//! principal matrix logarithm, and a few complex-matrix conveniences.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenbasis condition number above which the logarithm switches to inverse
/// scaling and squaring.
const EIGENBASIS_COND_LIMIT: f64 = 1e8;

/// Matrix exponential by scaling and squaring with Padé approximants.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

/// Thin SVD `a = u·diag(s)·v_t` with singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

/// One-sided Jacobi SVD. Slower than bidiagonal QR but accurate to working
/// precision in every singular triplet, which ERA relies on.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let transpose = a.ncols() > a.nrows();
    let mut w = if transpose { a.transpose() } else { a.clone() };
    let (m, n) = w.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = w[(i, p)];
                    w[(i, p)] = c * x - s * w[(i, q)];
                    w[(i, q)] = s * x + c * w[(i, q)];
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    v[(i, p)] = c * x - s * v[(i, q)];
                    v[(i, q)] = s * x + c * v[(i, q)];
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut left = DMatrix::zeros(m, n);
    let mut right = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            left.set_column(k, &(w.column(j) / norms[j]));
        }
        right.set_column(k, &v.column(j));
    }
    if transpose {
        Svd {
            u: right,
            s,
            v_t: left.transpose(),
        }
    } else {
        Svd {
            u: left,
            s,
            v_t: right.transpose(),
        }
    }
}

/// Real matrix to complex.
pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// tr(a·b) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_c(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.norm()))
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.complex_eigenvalues().iter().copied().collect()
}

/// Which route produced a matrix logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogMethod {
    Eigendecomposition,
    InverseScalingSquaring,
}

#[derive(Debug, Clone)]
pub struct MatrixLog {
    /// Real part of the principal logarithm.
    pub log: DMatrix<f64>,
    /// Largest imaginary entry discarded during realification.
    pub imag_residue: f64,
    pub method: LogMethod,
}

/// Principal logarithm of a real matrix.
///
/// Uses the eigendecomposition with conjugate pairing when the eigenbasis is
/// well conditioned and falls back to inverse scaling and squaring otherwise.
/// Eigenvalues on the closed negative real axis have no real principal
/// logarithm and are rejected.
pub fn logm(a: &DMatrix<f64>) -> Result<MatrixLog> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Shape(format!("logm of a {}x{} matrix", n, a.ncols())));
    }
    if n == 0 {
        return Ok(MatrixLog {
            log: a.clone(),
            imag_residue: 0.0,
            method: LogMethod::Eigendecomposition,
        });
    }
    let lambdas = eigenvalues(a);
    let scale = lambdas.iter().fold(0.0_f64, |m, l| m.max(l.norm())).max(f64::MIN_POSITIVE);
    for l in &lambdas {
        if l.norm() <= 1e-14 * scale.max(1.0) {
            return Err(Error::BranchAmbiguity(format!("{l} (singular matrix)")));
        }
        if l.re < 0.0 && l.im.abs() <= 1e-10 * l.norm() {
            return Err(Error::BranchAmbiguity(format!("{l}")));
        }
    }
    if let Some(out) = logm_eigen(a, &lambdas) {
        return Ok(out);
    }
    logm_iss(a).map(|log| MatrixLog {
        log,
        imag_residue: 0.0,
        method: LogMethod::InverseScalingSquaring,
    })
}

/// Eigendecomposition route; `None` when the eigenbasis is too ill conditioned.
fn logm_eigen(a: &DMatrix<f64>, lambdas: &[Complex64]) -> Option<MatrixLog> {
    let n = a.nrows();
    let pairs = pair_conjugates(lambdas);
    let ac = complexify(a);
    let mut v = CMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    let mut col = 0;
    for (lambda, has_partner) in pairs {
        let vec = inverse_iteration(&ac, lambda)?;
        v.set_column(col, &vec);
        vals.push(lambda);
        col += 1;
        if has_partner {
            v.set_column(col, &vec.map(|z| z.conj()));
            vals.push(lambda.conj());
            col += 1;
        }
    }
    let sv = v.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) || smax / smin > EIGENBASIS_COND_LIMIT {
        return None;
    }
    let vinv = v.clone().try_inverse()?;
    let d = CMatrix::from_diagonal(&CVector::from_iterator(n, vals.iter().map(|l| l.ln())));
    let l = &v * d * vinv;
    let imag_residue = l.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    Some(MatrixLog {
        log: l.map(|z| z.re),
        imag_residue,
        method: LogMethod::Eigendecomposition,
    })
}

/// Groups eigenvalues into real ones and conjugate pairs. Returns one entry per
/// group: the representative (Im >= 0) and whether it has a conjugate partner.
fn pair_conjugates(lambdas: &[Complex64]) -> Vec<(Complex64, bool)> {
    let scale = lambdas.iter().fold(1e-300_f64, |m, l| m.max(l.norm()));
    let tol = 1e-12 * scale;
    let mut used = vec![false; lambdas.len()];
    let mut out = Vec::new();
    for i in 0..lambdas.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let li = lambdas[i];
        if li.im.abs() <= tol {
            out.push((Complex64::new(li.re, 0.0), false));
            continue;
        }
        let target = li.conj();
        let partner = (0..lambdas.len())
            .filter(|&j| !used[j])
            .min_by(|&x, &y| {
                (lambdas[x] - target)
                    .norm()
                    .partial_cmp(&(lambdas[y] - target).norm())
                    .unwrap()
            });
        match partner {
            Some(j) if (lambdas[j] - target).norm() <= 1e-6 * scale => {
                used[j] = true;
                let avg = (li + lambdas[j].conj()) * 0.5;
                let rep = if avg.im >= 0.0 { avg } else { avg.conj() };
                out.push((rep, true));
            }
            // A complex eigenvalue without a partner cannot come from a real
            // matrix; treat it on its own and let realification report it.
            _ => out.push((li, false)),
        }
    }
    out
}

/// Eigenvector for `lambda` by shifted inverse iteration.
fn inverse_iteration(a: &CMatrix, lambda: Complex64) -> Option<CVector> {
    let n = a.nrows();
    let shift = lambda + Complex64::new(1e-10 * (1.0 + lambda.norm()), 0.0);
    let m = a - CMatrix::from_diagonal_element(n, n, shift);
    let lu = m.lu();
    let mut x = CVector::from_element(n, Complex64::new(1.0, 0.0));
    for (i, xi) in x.iter_mut().enumerate() {
        // fixed, non-symmetric start vector
        *xi = Complex64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64);
    }
    for _ in 0..3 {
        let y = lu.solve(&x)?;
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        x = y / Complex64::new(norm, 0.0);
    }
    // fix the phase so the largest component is real positive
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, z)| if z.norm() > bv { (i, z.norm()) } else { (bi, bv) });
    let phase = x[imax] / Complex64::new(x[imax].norm(), 0.0);
    Some(x.map(|z| z / phase))
}

/// Inverse scaling and squaring: repeated square roots until the matrix is
/// near the identity, then a Gauss–Legendre (diagonal Padé) evaluation of
/// log(I + E).
fn logm_iss(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut k = 0u32;
    while (&x - &id).norm() > 0.25 {
        x = sqrtm_denman_beavers(&x)?;
        k += 1;
        if k > 64 {
            return Err(Error::BranchAmbiguity(
                "square-root iteration did not approach the identity".into(),
            ));
        }
    }
    let e = &x - &id;
    let (nodes, weights) = gauss_legendre(8);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for (t, w) in nodes.iter().zip(weights.iter()) {
        let m = &id + &e * *t;
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::BranchAmbiguity("singular Padé denominator".into()))?;
        acc += (&e * inv) * *w;
    }
    Ok(acc * 2f64.powi(k as i32))
}

fn sqrtm_denman_beavers(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::BranchAmbiguity("singular iterate in square root".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::BranchAmbiguity("singular iterate in square root".into()))?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm() / y_next.norm().max(f64::MIN_POSITIVE);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Ok(y);
        }
    }
    Ok(y)
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        dp = if d != 0.0 { d } else { dp };
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Legendre polynomial P_m(x) and its derivative.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
