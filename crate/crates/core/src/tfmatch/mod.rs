//! Transfer-function matching between a parameterized augmented model and a
//! data-derived realization.
//!
//! Both sides are reduced to `Q(s)/P(s)` with monic `P(s) = det(sI − A)` and
//! `Q(s) = C adj(sI − A) x0`. The coefficients come from the
//! Faddeev–LeVerrier recursion, whose matrix sequence is exactly the
//! adjugate's polynomial expansion.

mod solve;

pub use solve::{
    identify, identify_from_realization, realize, solve, solve_from, IdentificationResult, IdentifyOptions,
    start_points, Realization, Solution, SolveOptions, StartRun,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::statespace::AugmentedModel;

/// `P(s)` (monic, ň + 1 coefficients) and one `Q(s)` (ň coefficients) per
/// output channel, highest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCoeffs {
    pub den: Vec<f64>,
    pub num: Vec<Vec<f64>>,
}

impl TransferCoeffs {
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn channels(&self) -> usize {
        self.num.len()
    }

    /// All matched coefficients in residual order: P without its leading 1,
    /// then each channel's Q.
    pub fn flatten(&self) -> Vec<f64> {
        self.den[1..]
            .iter()
            .chain(self.num.iter().flatten())
            .copied()
            .collect()
    }
}

impl fmt::Display for TransferCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P:")?;
        for c in &self.den {
            write!(f, " {c:.16e}")?;
        }
        for (i, q) in self.num.iter().enumerate() {
            write!(f, "\nQ{}:", i + 1)?;
            for c in q {
                write!(f, " {c:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Characteristic polynomial and adjugate numerators of `C (sI − A)^{-1} x0`.
pub fn transfer_coeffs(a: &DMatrix<f64>, c: &DMatrix<f64>, x0: &DVector<f64>) -> Result<TransferCoeffs> {
    let n = a.nrows();
    if a.ncols() != n || c.ncols() != n || x0.len() != n {
        return Err(Error::Shape(format!(
            "A {}x{}, C {}x{}, x0 {}",
            a.nrows(),
            a.ncols(),
            c.nrows(),
            c.ncols(),
            x0.len()
        )));
    }
    let (den, adj) = faddeev_leverrier(a);
    let num = (0..c.nrows())
        .map(|ch| {
            let row = c.row(ch);
            adj.iter().map(|m| (row * m * x0)[0]).collect()
        })
        .collect();
    Ok(TransferCoeffs { den, num })
}

/// Characteristic polynomial coefficients (monic, highest first) and the
/// matrices `M_1..M_n` with `adj(sI − A) = Σ_k M_k s^{n−k}`.
///
/// The recursion runs on `A/ρ` and the results are rescaled, which keeps the
/// intermediate traces near unit size.
pub fn faddeev_leverrier(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let n = a.nrows();
    let rho = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let b = a / rho;
    let id = DMatrix::<f64>::identity(n, n);
    let mut coeffs = vec![1.0];
    let mut mats = Vec::with_capacity(n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut c_prev = 1.0;
    for k in 1..=n {
        m = &b * &m + &id * c_prev;
        let bm = &b * &m;
        let ck = -bm.trace() / k as f64;
        mats.push(m.clone());
        coeffs.push(ck);
        c_prev = ck;
    }
    let den = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * rho.powi(k as i32))
        .collect();
    let adj = mats
        .into_iter()
        .enumerate()
        .map(|(i, mk)| mk * rho.powi(i as i32))
        .collect();
    (den, adj)
}

/// Maps a parameter vector to an augmented model.
pub type ModelBuilder = dyn Fn(&[f64]) -> Result<AugmentedModel> + Send + Sync;

/// The unknowns of an identification problem and how they enter the model.
#[derive(Clone)]
pub struct ParameterSpec {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    /// Parameters whose sign flip is tested for a residual symmetry.
    pub flip_candidates: Vec<usize>,
    builder: Arc<ModelBuilder>,
}

impl fmt::Debug for ParameterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterSpec")
            .field("names", &self.names)
            .field("bounds", &self.bounds)
            .field("flip_candidates", &self.flip_candidates)
            .finish_non_exhaustive()
    }
}

impl ParameterSpec {
    pub fn new(
        names: Vec<String>,
        bounds: Vec<(f64, f64)>,
        builder: impl Fn(&[f64]) -> Result<AugmentedModel> + Send + Sync + 'static,
    ) -> Result<Self> {
        if names.len() != bounds.len() {
            return Err(Error::Spec(format!("{} names but {} bounds", names.len(), bounds.len())));
        }
        for (name, &(lo, hi)) in names.iter().zip(&bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Spec(format!("bounds for {name} must be finite with lo <= hi")));
            }
        }
        Ok(Self {
            names,
            bounds,
            flip_candidates: Vec::new(),
            builder: Arc::new(builder),
        })
    }

    pub fn with_flip_candidates(mut self, idx: Vec<usize>) -> Self {
        self.flip_candidates = idx;
        self
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn build(&self, params: &[f64]) -> Result<AugmentedModel> {
        if params.len() != self.names.len() {
            return Err(Error::Spec(format!(
                "{} parameter values for {} unknowns",
                params.len(),
                self.names.len()
            )));
        }
        (self.builder)(params)
    }

    pub fn in_bounds(&self, params: &[f64]) -> bool {
        params
            .iter()
            .zip(&self.bounds)
            .all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    pub fn clamp(&self, params: &mut [f64]) {
        for (v, &(lo, hi)) in params.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Weighted coefficient differences between the model built from `params`
/// and `target`: each entry is `(model − target) / max(1, |target|)`.
pub fn residual(params: &[f64], spec: &ParameterSpec, target: &TransferCoeffs) -> Result<DVector<f64>> {
    if !spec.in_bounds(params) {
        return Err(Error::Spec("parameters outside their bounds".into()));
    }
    residual_unchecked(params, spec, target)
}

pub(crate) fn residual_unchecked(params: &[f64], spec: &ParameterSpec, target: &TransferCoeffs) -> Result<DVector<f64>> {
    let model = spec.build(params)?.model;
    let got = transfer_coeffs(&model.a, &model.c, &model.x0)?;
    if got.order() != target.order() || got.channels() != target.channels() {
        return Err(Error::Spec(format!(
            "model has order {} with {} outputs, target has order {} with {}",
            got.order(),
            got.channels(),
            target.order(),
            target.channels()
        )));
    }
    let g = got.flatten();
    let t = target.flatten();
    Ok(DVector::from_iterator(
        g.len(),
        g.iter().zip(&t).map(|(m, t)| (m - t) / t.abs().max(1.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_transfer() {
        let w = 1.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let x0 = DVector::from_vec(vec![0.0, 1.0]);
        let t = transfer_coeffs(&a, &c, &x0).unwrap();
        assert_eq!(t.den.len(), 3);
        assert!((t.den[0] - 1.0).abs() < 1e-15);
        assert!(t.den[1].abs() < 1e-15);
        assert!((t.den[2] - w * w).abs() < 1e-14);
        assert!(t.num[0][0].abs() < 1e-15);
        assert!((t.num[0][1] + w).abs() < 1e-15);
    }

    #[test]
    fn empty_system() {
        let t = transfer_coeffs(&DMatrix::zeros(0, 0), &DMatrix::zeros(1, 0), &DVector::zeros(0)).unwrap();
        assert_eq!(t.den, vec![1.0]);
        assert_eq!(t.num, vec![Vec::<f64>::new()]);
    }

    #[test]
    fn shape_errors() {
        let a = DMatrix::zeros(2, 2);
        assert!(transfer_coeffs(&a, &DMatrix::zeros(1, 3), &DVector::zeros(2)).is_err());
    }
}
