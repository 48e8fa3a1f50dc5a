//! Reduced coherence-vector models, augmentation with a noise realization,
//! discretization, and simulation.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::liealg::{BasisSet, HamiltonianCoeffs};
use crate::linalg::expm;

/// Imaginary residue tolerated (and discarded) in generator entries.
const IMAG_DISCARD: f64 = 1e-12;
/// Imaginary residue treated as a basis/normalization bug.
const IMAG_ERROR: f64 = 1e-9;

/// What a state component represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// Expectation of basis element μ (0-based).
    Basis(usize),
    /// Internal noise mode (0-based).
    Noise(usize),
    /// Component of a data-derived realization with no physical meaning.
    Abstract(usize),
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Basis(i) => write!(f, "x[{i}]"),
            StateLabel::Noise(i) => write!(f, "xi[{}]", i + 1),
            StateLabel::Abstract(i) => write!(f, "z[{}]", i + 1),
        }
    }
}

/// Continuous-time initial-state-response model `x' = A x`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub labels: Vec<StateLabel>,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        c: DMatrix<f64>,
        x0: DVector<f64>,
        labels: Vec<StateLabel>,
    ) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k || c.ncols() != k || x0.len() != k || labels.len() != k {
            return Err(Error::Shape(format!(
                "A {}x{}, C {}x{}, x0 {}, {} labels",
                a.nrows(),
                a.ncols(),
                c.nrows(),
                c.ncols(),
                x0.len(),
                labels.len()
            )));
        }
        if a.iter().chain(c.iter()).chain(x0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite model entry".into()));
        }
        Ok(Self { a, c, x0, labels })
    }

    /// Model with anonymous state labels.
    pub fn unlabeled(a: DMatrix<f64>, c: DMatrix<f64>, x0: DVector<f64>) -> Result<Self> {
        let labels = (0..a.nrows()).map(StateLabel::Abstract).collect();
        Self::new(a, c, x0, labels)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// ‖A + Aᵀ‖ (max entry); zero for closed quantum models.
    pub fn antisymmetry_defect(&self) -> f64 {
        crate::linalg::max_abs(&(&self.a + self.a.transpose()))
    }
}

/// Block-diagonal join of a quantum model and a noise-expectation model.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel {
    pub model: StateSpaceModel,
    pub quantum_dim: usize,
    pub noise_dim: usize,
}

/// Sampled multi-channel output record.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// T × L, one row per sample.
    pub samples: DMatrix<f64>,
    pub channel_names: Vec<String>,
}

impl Trajectory {
    pub fn new(dt: f64, samples: DMatrix<f64>, channel_names: Vec<String>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Shape(format!("sample interval must be positive, got {dt}")));
        }
        if samples.nrows() < 2 {
            return Err(Error::Length {
                needed: 2,
                available: samples.nrows(),
                hint: "a trajectory needs at least two samples".into(),
            });
        }
        if channel_names.len() != samples.ncols() {
            return Err(Error::Shape(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                samples.ncols()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite sample".into()));
        }
        Ok(Self {
            dt,
            samples,
            channel_names,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn sample(&self, k: usize) -> DVector<f64> {
        self.samples.row(k).transpose()
    }

    pub fn channel(&self, l: usize) -> Vec<f64> {
        self.samples.column(l).iter().copied().collect()
    }

    /// First `steps` samples.
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        let steps = steps.min(self.len());
        Self::new(
            self.dt,
            self.samples.rows(0, steps).into_owned(),
            self.channel_names.clone(),
        )
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| k as f64 * self.dt)
    }
}

/// Which basis directions the filtration brackets against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FiltrationMode {
    /// Only directions present in the Hamiltonian (a_m ≠ 0).
    #[default]
    HamiltonianSupport,
    /// Every basis element.
    FullAlgebra,
}

/// A_jl = i Σ_m a_m C[m][μ_j][μ_l] restricted to `indices`.
pub fn build_generator(
    coeffs: &HamiltonianCoeffs,
    basis: &BasisSet,
    indices: &[usize],
) -> Result<DMatrix<f64>> {
    if coeffs.a.len() != basis.len() {
        return Err(Error::Shape("coefficients do not match basis".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= basis.len()) {
        return Err(Error::Shape(format!("basis index {bad} out of range")));
    }
    let s = basis.structure();
    let support = coeffs.support();
    let k = indices.len();
    let mut a = DMatrix::zeros(k, k);
    for (j, &mj) in indices.iter().enumerate() {
        for (l, &ml) in indices.iter().enumerate() {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for &m in &support {
                acc += s.get(m, mj, ml) * coeffs.a[m];
            }
            // i * acc
            let re = -acc.im;
            let im = acc.re;
            let scale = re.abs().max(1.0);
            if im.abs() >= IMAG_ERROR * scale {
                return Err(Error::InconsistentStructure(format!(
                    "generator entry ({j},{l}) has imaginary part {im:e}"
                )));
            }
            if im.abs() >= IMAG_DISCARD * scale {
                log::debug!("discarding imaginary residue {im:e} in generator entry ({j},{l})");
            }
            a[(j, l)] = re;
        }
    }
    Ok(a)
}

/// Saturated accessible set reached from the observables' basis directions.
pub fn filtration(
    observable_indices: &[usize],
    coeffs: &HamiltonianCoeffs,
    basis: &BasisSet,
    mode: FiltrationMode,
) -> Vec<usize> {
    let s = basis.structure();
    let tol = 1e-12 * s.max_abs().max(1.0);
    let directions: Vec<usize> = match mode {
        FiltrationMode::HamiltonianSupport => coeffs.support(),
        FiltrationMode::FullAlgebra => (0..basis.len()).collect(),
    };
    let mut set: BTreeSet<usize> = observable_indices.iter().copied().collect();
    let mut frontier: Vec<usize> = set.iter().copied().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &g in &frontier {
            for &h in &directions {
                for l in 0..basis.len() {
                    if !set.contains(&l) && s.get(g, h, l).norm() > tol {
                        set.insert(l);
                        next.push(l);
                    }
                }
            }
        }
        frontier = next;
    }
    set.into_iter().collect()
}

/// Reduced model on the accessible set of the observables.
///
/// `observables` are basis expansions (one per output channel) and `x0_full`
/// is the full coherence vector of the initial state.
pub fn build_reduced_model(
    coeffs: &HamiltonianCoeffs,
    basis: &BasisSet,
    observables: &[HamiltonianCoeffs],
    x0_full: &[f64],
    mode: FiltrationMode,
) -> Result<StateSpaceModel> {
    let seeds: BTreeSet<usize> = observables.iter().flat_map(|o| o.support()).collect();
    let seeds: Vec<usize> = seeds.into_iter().collect();
    let indices = filtration(&seeds, coeffs, basis, mode);
    reduced_model_on(coeffs, basis, observables, x0_full, &indices)
}

/// Reduced model on a caller-chosen closed index set.
pub fn reduced_model_on(
    coeffs: &HamiltonianCoeffs,
    basis: &BasisSet,
    observables: &[HamiltonianCoeffs],
    x0_full: &[f64],
    indices: &[usize],
) -> Result<StateSpaceModel> {
    if x0_full.len() != basis.len() {
        return Err(Error::Shape(format!(
            "initial coherence vector has {} entries, basis has {}",
            x0_full.len(),
            basis.len()
        )));
    }
    if observables.is_empty() {
        return Err(Error::Shape("at least one observable is required".into()));
    }
    let a = build_generator(coeffs, basis, indices)?;
    let k = indices.len();
    let mut c = DMatrix::zeros(observables.len(), k);
    for (i, o) in observables.iter().enumerate() {
        if o.a.len() != basis.len() {
            return Err(Error::Shape("observable does not match basis".into()));
        }
        for m in o.support() {
            match indices.iter().position(|&x| x == m) {
                Some(col) => c[(i, col)] = o.a[m],
                None => {
                    return Err(Error::InconsistentStructure(format!(
                        "observable {i} has support on {} outside the accessible set",
                        basis.label(m)
                    )))
                }
            }
        }
    }
    let x0 = DVector::from_iterator(k, indices.iter().map(|&m| x0_full[m]));
    let labels = indices.iter().map(|&m| StateLabel::Basis(m)).collect();
    StateSpaceModel::new(a, c, x0, labels)
}

/// Joins a quantum model with a SISO noise-expectation model.
pub fn augment(quantum: &StateSpaceModel, noise: &StateSpaceModel) -> Result<AugmentedModel> {
    let k = quantum.order();
    let n = noise.order();
    let l = quantum.outputs();
    if n > 0 && noise.c.nrows() != 1 {
        return Err(Error::Shape(format!(
            "noise output must be a single row, got {}",
            noise.c.nrows()
        )));
    }
    let dim = k + n;
    let mut a = DMatrix::zeros(dim, dim);
    a.view_mut((0, 0), (k, k)).copy_from(&quantum.a);
    a.view_mut((k, k), (n, n)).copy_from(&noise.a);
    let mut c = DMatrix::zeros(l, dim);
    c.view_mut((0, 0), (l, k)).copy_from(&quantum.c);
    for i in 0..l {
        for j in 0..n {
            c[(i, k + j)] = noise.c[(0, j)];
        }
    }
    let x0 = DVector::from_iterator(dim, quantum.x0.iter().chain(noise.x0.iter()).copied());
    let mut labels = quantum.labels.clone();
    labels.extend((0..n).map(StateLabel::Noise));
    Ok(AugmentedModel {
        model: StateSpaceModel::new(a, c, x0, labels)?,
        quantum_dim: k,
        noise_dim: n,
    })
}

/// Sampled model `x(k+1) = A_d x(k)`, `y(k) = C x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub ad: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub dt: f64,
}

pub fn discretize(model: &StateSpaceModel, dt: f64) -> Result<DiscreteModel> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Shape(format!("sample interval must be positive, got {dt}")));
    }
    Ok(DiscreteModel {
        ad: expm(&(&model.a * dt)),
        c: model.c.clone(),
        x0: model.x0.clone(),
        dt,
    })
}

/// Initial-state response by state propagation, optionally with i.i.d.
/// Gaussian shot noise of standard deviation `shot_sigma` on every sample.
pub fn simulate(model: &DiscreteModel, steps: usize, shot_sigma: f64, seed: u64) -> Result<Trajectory> {
    if steps < 2 {
        return Err(Error::Length {
            needed: 2,
            available: steps,
            hint: "simulate at least two samples".into(),
        });
    }
    if !(shot_sigma >= 0.0 && shot_sigma.is_finite()) {
        return Err(Error::Shape(format!("shot noise must be nonnegative, got {shot_sigma}")));
    }
    let l = model.c.nrows();
    let mut out = DMatrix::zeros(steps, l);
    let mut x = model.x0.clone();
    for k in 0..steps {
        let y = &model.c * &x;
        out.row_mut(k).copy_from(&y.transpose());
        x = &model.ad * x;
    }
    if shot_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, shot_sigma).expect("valid sigma");
        for v in out.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let names = (1..=l).map(|i| format!("y{i}")).collect();
    Trajectory::new(model.dt, out, names)
}

/// Propagated state sequence, used to check norm preservation.
pub fn states(model: &DiscreteModel, steps: usize) -> Vec<DVector<f64>> {
    let mut x = model.x0.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(x.clone());
        x = &model.ad * x;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{gell_mann_basis, pauli_basis};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_qubit(w1: f64, w2: f64, d: f64) -> (BasisSet, HamiltonianCoeffs) {
        let b = pauli_basis(2).unwrap();
        let mut a = vec![0.0; 15];
        a[b.index_of("ZI").unwrap()] = w1 / 2.0;
        a[b.index_of("IZ").unwrap()] = w2 / 2.0;
        a[b.index_of("XX").unwrap()] = d / 2.0;
        a[b.index_of("YY").unwrap()] = d / 2.0;
        let h = HamiltonianCoeffs::new(a, &b).unwrap();
        (b, h)
    }

    fn observable(b: &BasisSet, label: &str, scale: f64) -> HamiltonianCoeffs {
        let mut a = vec![0.0; b.len()];
        a[b.index_of(label).unwrap()] = scale;
        HamiltonianCoeffs::new(a, b).unwrap()
    }

    #[test]
    fn single_qubit_generator() {
        let b = gell_mann_basis(2).unwrap();
        let w = 1.3;
        let h = HamiltonianCoeffs::new(vec![0.0, 0.0, w / 2.0], &b).unwrap();
        let a = build_generator(&h, &b, &[0, 1]).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]));
        let zero = build_generator(&HamiltonianCoeffs::zeros(&b), &b, &[0, 1, 2]).unwrap();
        assert_eq!(zero, DMatrix::zeros(3, 3));
    }

    #[test]
    fn two_qubit_accessible_set_and_model() {
        let (b, h) = two_qubit(1.3, 2.4, 4.3);
        let obs = observable(&b, "XI", 1.0);
        let f = filtration(&obs.support(), &h, &b, FiltrationMode::HamiltonianSupport);
        let names: Vec<&str> = f.iter().map(|&i| b.label(i)).collect();
        assert_eq!(names, ["XI", "YI", "ZX", "ZY"]);

        let mut x0 = vec![0.0; 15];
        x0[b.index_of("YI").unwrap()] = 1.0;
        let m = build_reduced_model(&h, &b, &[obs], &x0, FiltrationMode::HamiltonianSupport).unwrap();
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
            0.0, -1.3, 0.0, 4.3,
            1.3, 0.0, -4.3, 0.0,
            0.0, 4.3, 0.0, -2.4,
            -4.3, 0.0, 2.4, 0.0,
        ]);
        assert_eq!(m.a, want);
        assert_eq!(m.c, DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(m.x0, DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn scaled_and_multiple_observables() {
        let (b, h) = two_qubit(1.3, 2.4, 4.3);
        let mut x0 = vec![0.0; 15];
        x0[b.index_of("YI").unwrap()] = 1.0;
        let m = build_reduced_model(&h, &b, &[observable(&b, "XI", 2.0)], &x0, Default::default()).unwrap();
        assert_eq!(m.c, DMatrix::from_row_slice(1, 4, &[2.0, 0.0, 0.0, 0.0]));
        let m = build_reduced_model(
            &h,
            &b,
            &[observable(&b, "XI", 1.0), observable(&b, "YI", 1.0)],
            &x0,
            Default::default(),
        )
        .unwrap();
        assert_eq!(
            m.c,
            DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        );
    }

    #[test]
    fn commuting_observable_is_singleton() {
        let b = gell_mann_basis(2).unwrap();
        let h = HamiltonianCoeffs::new(vec![0.0, 0.0, 0.65], &b).unwrap();
        assert_eq!(filtration(&[2], &h, &b, FiltrationMode::HamiltonianSupport), vec![2]);
    }

    #[test]
    fn generic_two_qubit_hamiltonian_saturates() {
        let b = pauli_basis(2).unwrap();
        let a: Vec<f64> = (0..15).map(|i| 0.3 + 0.17 * i as f64).collect();
        let h = HamiltonianCoeffs::new(a, &b).unwrap();
        let f = filtration(&[b.index_of("XI").unwrap()], &h, &b, FiltrationMode::HamiltonianSupport);
        assert_eq!(f.len(), 15);
    }

    #[test]
    fn literal_filtration_is_larger() {
        let (b, h) = two_qubit(1.3, 2.4, 4.3);
        let f = filtration(&[b.index_of("XI").unwrap()], &h, &b, FiltrationMode::FullAlgebra);
        assert_eq!(f.len(), 15);
    }

    #[test]
    fn outside_support_is_an_error() {
        let (b, h) = two_qubit(1.3, 2.4, 4.3);
        let err = reduced_model_on(&h, &b, &[observable(&b, "ZZ", 1.0)], &[0.0; 15], &[3, 7]);
        assert!(matches!(err, Err(Error::InconsistentStructure(_))));
    }

    fn noise_model() -> StateSpaceModel {
        StateSpaceModel::unlabeled(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -20.0, -0.1]),
            DMatrix::from_row_slice(1, 2, &[-20.0, 1.0]),
            DVector::from_vec(vec![0.01, 0.1]),
        )
        .unwrap()
    }

    fn quantum_model() -> StateSpaceModel {
        let (b, h) = two_qubit(1.3, 2.4, 4.3);
        let mut x0 = vec![0.0; 15];
        x0[b.index_of("YI").unwrap()] = 1.0;
        build_reduced_model(&h, &b, &[observable(&b, "XI", 1.0)], &x0, Default::default()).unwrap()
    }

    #[test]
    fn augmentation_blocks() {
        let aug = augment(&quantum_model(), &noise_model()).unwrap();
        assert_eq!(aug.model.order(), 6);
        assert_eq!(aug.model.c, DMatrix::from_row_slice(1, 6, &[1.0, 0.0, 0.0, 0.0, -20.0, 1.0]));
        assert!(aug.model.a.view((0, 4), (4, 2)).iter().all(|v| *v == 0.0));
        assert!(aug.model.a.view((4, 0), (2, 4)).iter().all(|v| *v == 0.0));
        assert_eq!(aug.model.x0.as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.01, 0.1]);
    }

    #[test]
    fn augmenting_with_nothing_is_identity() {
        let q = quantum_model();
        let empty = StateSpaceModel::unlabeled(DMatrix::zeros(0, 0), DMatrix::zeros(1, 0), DVector::zeros(0)).unwrap();
        let aug = augment(&q, &empty).unwrap();
        assert_eq!(aug.model, q);
    }

    #[test]
    fn augment_rejects_mimo_noise() {
        let mut n = noise_model();
        n.c = DMatrix::zeros(2, 2);
        assert!(matches!(augment(&quantum_model(), &n), Err(Error::Shape(_))));
    }

    #[test]
    fn rotation_discretization() {
        let w = 1.3;
        let dt = 0.1;
        let m = StateSpaceModel::unlabeled(
            DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        let d = discretize(&m, dt).unwrap();
        let (s, c) = (w * dt).sin_cos();
        let want = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((d.ad.clone() - want).norm() < 1e-15);
        let t = simulate(&d, 50, 0.0, 0).unwrap();
        for k in 0..50 {
            assert_abs_diff_eq!(t.samples[(k, 0)], -(w * k as f64 * dt).sin(), epsilon = 1e-13);
        }
        let zero = StateSpaceModel::unlabeled(DMatrix::zeros(2, 2), m.c.clone(), m.x0.clone()).unwrap();
        assert_eq!(discretize(&zero, dt).unwrap().ad, DMatrix::identity(2, 2));
    }

    #[test]
    fn two_qubit_exponential_is_orthogonal() {
        let d = discretize(&quantum_model(), 0.1).unwrap();
        let defect = &d.ad.transpose() * &d.ad - DMatrix::<f64>::identity(4, 4);
        assert!(crate::linalg::max_abs(&defect) < 1e-10);
    }

    #[test]
    fn first_sample_is_c_x0() {
        let aug = augment(&quantum_model(), &noise_model()).unwrap();
        let d = discretize(&aug.model, 0.1).unwrap();
        let t = simulate(&d, 2, 0.0, 0).unwrap();
        assert_eq!(t.samples[(0, 0)], (&aug.model.c * &aug.model.x0)[0]);
        assert!(simulate(&d, 1, 0.0, 0).is_err());
    }

    #[test]
    fn superposition_of_blocks() {
        let q = quantum_model();
        let n = noise_model();
        let aug = augment(&q, &n).unwrap();
        let dt = 0.1;
        let ya = simulate(&discretize(&aug.model, dt).unwrap(), 120, 0.0, 0).unwrap();
        let yq = simulate(&discretize(&q, dt).unwrap(), 120, 0.0, 0).unwrap();
        let yn = simulate(&discretize(&n, dt).unwrap(), 120, 0.0, 0).unwrap();
        let diff = &ya.samples - (&yq.samples + &yn.samples);
        assert!(crate::linalg::max_abs(&diff) < 1e-12);
    }

    #[test]
    fn shot_noise_is_seeded() {
        let d = discretize(&quantum_model(), 0.1).unwrap();
        let a = simulate(&d, 30, 0.01, 9).unwrap();
        let b = simulate(&d, 30, 0.01, 9).unwrap();
        let c = simulate(&d, 30, 0.01, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn coherence_norm_preserved() {
        let d = discretize(&quantum_model(), 0.1).unwrap();
        let xs = states(&d, 120);
        let n0 = xs[0].norm();
        for x in xs {
            assert!((x.norm() - n0).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn generator_is_antisymmetric(vals in proptest::collection::vec(-2.0f64..2.0, 8)) {
            let b = gell_mann_basis(3).unwrap();
            let h = HamiltonianCoeffs::new(vals, &b).unwrap();
            let idx: Vec<usize> = (0..8).collect();
            let a = build_generator(&h, &b, &idx).unwrap();
            prop_assert!(crate::linalg::max_abs(&(&a + a.transpose())) < 1e-12);
        }

        #[test]
        fn simulate_prefix_consistent(t in 3usize..60, cut in 2usize..60) {
            let cut = cut.min(t);
            let d = discretize(&quantum_model(), 0.1).unwrap();
            let long = simulate(&d, t, 0.0, 1).unwrap();
            let short = simulate(&d, cut, 0.0, 1).unwrap();
            prop_assert_eq!(long.prefix(cut).unwrap(), short);
        }
    }
}
