//! Eigensystem Realization Algorithm on initial-state-response data.
//!
//! Hankel blocks use consecutive spacing: block (i, j) of `H(k)` is
//! `y(k + i + j)`. `H(0)` is factored by SVD, truncated to the selected
//! order, and `H(1)` gives the shifted state matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, eigenvalues, logm, max_abs};
use crate::statespace::Trajectory;

pub const DEFAULT_GAP_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    /// H_rs(0), rL × s.
    pub h0: DMatrix<f64>,
    /// H_rs(1), rL × s.
    pub h1: DMatrix<f64>,
    pub r: usize,
    pub s: usize,
    pub channels: usize,
    pub dt: f64,
    /// The r + s samples the pair was built from, one row each.
    pub samples: DMatrix<f64>,
}

pub fn build_hankel(traj: &Trajectory, r: usize, s: usize) -> Result<HankelPair> {
    if r == 0 || s == 0 {
        return Err(Error::Shape(format!("Hankel block counts must be positive (r={r}, s={s})")));
    }
    let needed = r + s;
    if traj.len() < needed {
        return Err(Error::Length {
            needed,
            available: traj.len(),
            hint: format!("H_rs(1) with r={r}, s={s} reads sample r+s-1; lower r or s, or record more samples"),
        });
    }
    let l = traj.channels();
    let mut h0 = DMatrix::zeros(r * l, s);
    let mut h1 = DMatrix::zeros(r * l, s);
    for i in 0..r {
        for j in 0..s {
            for c in 0..l {
                h0[(i * l + c, j)] = traj.samples[(i + j, c)];
                h1[(i * l + c, j)] = traj.samples[(i + j + 1, c)];
            }
        }
    }
    Ok(HankelPair {
        h0,
        h1,
        r,
        s,
        channels: l,
        dt: traj.dt,
        samples: traj.samples.rows(0, needed).into_owned(),
    })
}

/// Singular values of H_rs(0), descending.
pub fn hankel_singular_values(pair: &HankelPair) -> Vec<f64> {
    linalg::svd(&pair.h0).s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderSelection {
    pub order: usize,
    /// False when no ratio fell below the gap threshold and the order was
    /// taken from the numerical rank instead.
    pub clear_gap: bool,
}

/// Smallest cut where σ_{i+1}/σ_i < `gap_ratio`.
pub fn select_order(singular_values: &[f64], gap_ratio: f64, shape: (usize, usize)) -> Result<OrderSelection> {
    let Some(&first) = singular_values.first() else {
        return Err(Error::DegenerateData("empty singular spectrum".into()));
    };
    if !(first > 0.0) {
        return Err(Error::DegenerateData("all singular values are zero".into()));
    }
    for i in 0..singular_values.len() - 1 {
        let (a, b) = (singular_values[i], singular_values[i + 1]);
        if a > 0.0 && b / a < gap_ratio {
            return Ok(OrderSelection {
                order: i + 1,
                clear_gap: true,
            });
        }
    }
    Ok(OrderSelection {
        order: numerical_rank(singular_values, shape),
        clear_gap: false,
    })
}

fn numerical_rank(singular_values: &[f64], shape: (usize, usize)) -> usize {
    let first = singular_values.first().copied().unwrap_or(0.0);
    let tol = f64::EPSILON * first * shape.0.max(shape.1) as f64;
    singular_values.iter().filter(|&&v| v > tol).count()
}

/// ERA realization, discrete and (after [`continuous_lift`]) continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct EraResult {
    pub singular_values: Vec<f64>,
    pub order: usize,
    pub ad_hat: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
    pub x0_hat: DVector<f64>,
    pub a_hat: Option<DMatrix<f64>>,
    pub dt: f64,
    /// max_k ‖Ĉ Âd^k x̂0 − y(k)‖ over the samples in the Hankel pair.
    pub residual: f64,
    /// Imaginary residue dropped by the matrix logarithm.
    pub imag_residue: f64,
}

impl EraResult {
    /// ŷ(k) = Ĉ Âd^k x̂0 for k < steps, one row per sample.
    pub fn reconstruct(&self, steps: usize) -> DMatrix<f64> {
        let l = self.c_hat.nrows();
        let mut out = DMatrix::zeros(steps, l);
        let mut x = self.x0_hat.clone();
        for k in 0..steps {
            out.row_mut(k).copy_from(&(&self.c_hat * &x).transpose());
            x = &self.ad_hat * x;
        }
        out
    }
}

pub fn era(pair: &HankelPair, order: usize) -> Result<EraResult> {
    let svd = linalg::svd(&pair.h0);
    let sv = svd.s.clone();
    let rank = numerical_rank(&sv, pair.h0.shape());
    if order > rank {
        return Err(Error::RankDeficiency { order, rank });
    }
    let l = pair.channels;
    let u = &svd.u;
    let v_t = &svd.v_t;
    let p1 = u.columns(0, order).into_owned();
    let q1 = v_t.rows(0, order).transpose();
    let d_sqrt = DVector::from_iterator(order, sv[..order].iter().map(|v| v.sqrt()));
    let d_isqrt = d_sqrt.map(|v| 1.0 / v);

    let core = p1.transpose() * &pair.h1 * &q1;
    let ad_hat = DMatrix::from_fn(order, order, |i, j| d_isqrt[i] * core[(i, j)] * d_isqrt[j]);
    let c_hat = DMatrix::from_fn(l, order, |i, j| p1[(i, j)] * d_sqrt[j]);
    let x0_hat = DVector::from_fn(order, |i, _| d_sqrt[i] * q1[(0, i)]);

    let mut out = EraResult {
        singular_values: sv,
        order,
        ad_hat,
        c_hat,
        x0_hat,
        a_hat: None,
        dt: pair.dt,
        residual: 0.0,
        imag_residue: 0.0,
    };
    let recon = out.reconstruct(pair.samples.nrows());
    out.residual = (0..recon.nrows())
        .map(|k| (recon.row(k) - pair.samples.row(k)).norm())
        .fold(0.0, f64::max);
    Ok(out)
}

/// Â = log(Âd)/dt.
///
/// `max_rate`, when given, is the largest angular frequency the caller
/// expects in the data; sampling too slowly for it is reported as aliasing.
/// From samples alone a rotation by θ and by θ − 2π per step cannot be told
/// apart, so this bound is the only way to catch aliased data.
pub fn continuous_lift(era: &EraResult, max_rate: Option<f64>) -> Result<EraResult> {
    let pi = std::f64::consts::PI;
    if let Some(rate) = max_rate {
        if rate * era.dt >= pi {
            return Err(Error::AliasingSuspected(format!(
                "dt·max_rate = {:.4} ≥ π: the sample interval cannot resolve the expected frequencies",
                rate * era.dt
            )));
        }
    }
    let log = logm(&era.ad_hat)?;
    let scale = max_abs(&log.log).max(1.0);
    if log.imag_residue > 1e-8 * scale {
        return Err(Error::AliasingSuspected(format!(
            "matrix logarithm left an imaginary residue of {:e}",
            log.imag_residue
        )));
    }
    let a_hat = log.log / era.dt;
    let fastest = eigenvalues(&a_hat).iter().fold(0.0_f64, |m, l| m.max(l.im.abs()));
    if fastest * era.dt >= pi - 1e-9 {
        return Err(Error::AliasingSuspected(format!(
            "lifted eigenvalue at the Nyquist boundary (dt·|Im λ| = {:.6})",
            fastest * era.dt
        )));
    }
    let mut out = era.clone();
    out.a_hat = Some(a_hat);
    out.imag_residue = log.imag_residue;
    Ok(out)
}
