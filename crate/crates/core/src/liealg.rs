//! Orthogonal Hermitian bases of su(N), their structure constants, and
//! operator expansion.
//!
//! Elements are stored as Hermitian, traceless matrices `X_m`; commutators
//! expand as `[X_j, X_k] = sum_l C[j][k][l] X_l` with purely imaginary `C`.
//!
//! Two constructions are provided:
//!
//! * [`gell_mann_basis`]: generalized Gell-Mann matrices, `tr(X_j X_k) = 2 δ_jk`.
//! * [`pauli_basis`]: tensor products of Pauli matrices for `q` qubits,
//!   `tr(X_j X_k) = 2^q δ_jk`, so coherence-vector entries are plain
//!   Pauli-string expectations.
//!
//! Pauli strings are enumerated lexicographically over `I < X < Y < Z` with
//! the first character acting on qubit 1 and the all-identity string left
//! out. For two qubits the order is
//! `IX IY IZ XI XX XY XZ YI YX YY YZ ZI ZX ZY ZZ` (indices 0..15).

use std::fmt;

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, max_abs_c, trace, trace_product, CMatrix};

const HERMITIAN_TOL: f64 = 1e-12;

/// Dense rank-3 tensor of structure constants, `C[j][k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    m: usize,
    data: Vec<Complex64>,
}

impl StructureConstants {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![Complex64::new(0.0, 0.0); m * m * m],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.data[(j * self.m + k) * self.m + l]
    }

    #[inline]
    fn set(&mut self, j: usize, k: usize, l: usize, v: Complex64) {
        self.data[(j * self.m + k) * self.m + l] = v;
    }

    /// Largest |C| in the tensor.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
    }
}

/// An ordered orthogonal basis of su(N) together with its structure constants.
#[derive(Debug, Clone)]
pub struct BasisSet {
    dim: usize,
    elements: Vec<CMatrix>,
    labels: Vec<String>,
    norm: f64,
    structure: StructureConstants,
}

impl BasisSet {
    /// Builds a basis from explicit Hermitian traceless elements and computes
    /// the structure constants.
    pub fn from_elements(elements: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidDimension(0));
        };
        let dim = first.nrows();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if elements.len() != dim * dim - 1 {
            return Err(Error::IllConditionedBasis(format!(
                "su({dim}) needs {} elements, got {}",
                dim * dim - 1,
                elements.len()
            )));
        }
        if labels.len() != elements.len() {
            return Err(Error::Shape("one label per basis element".into()));
        }
        for (x, name) in elements.iter().zip(&labels) {
            if x.nrows() != dim || x.ncols() != dim {
                return Err(Error::Shape(format!("element {name} is not {dim}x{dim}")));
            }
            if max_abs_c(&(x - x.adjoint())) > HERMITIAN_TOL {
                return Err(Error::InvalidOperator(format!("element {name} is not Hermitian")));
            }
            if trace(x).norm() > HERMITIAN_TOL {
                return Err(Error::InvalidOperator(format!("element {name} is not traceless")));
            }
        }
        let norm = trace_product(first, first).re;
        let mut basis = Self {
            dim,
            elements,
            labels,
            norm,
            structure: StructureConstants::zeros(0),
        };
        basis.structure = structure_constants(&basis)?;
        Ok(basis)
    }

    /// Hilbert-space dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of elements, N² − 1.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, m: usize) -> &CMatrix {
        &self.elements[m]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, m: usize) -> &str {
        &self.labels[m]
    }

    /// Index of the element with the given label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Normalization constant c in tr(X_j X_k) = c δ_jk.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    /// Projection coefficients of an arbitrary matrix, tr(X_m A)/tr(X_m²).
    fn project(&self, a: &CMatrix) -> Vec<Complex64> {
        self.elements
            .iter()
            .map(|x| trace_product(x, a) / self.norm)
            .collect()
    }
}

/// Coefficients of an operator on a basis, `H = sum_m a_m X_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianCoeffs {
    pub a: Vec<f64>,
}

impl HamiltonianCoeffs {
    pub fn new(a: Vec<f64>, basis: &BasisSet) -> Result<Self> {
        if a.len() != basis.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a basis of {} elements",
                a.len(),
                basis.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidOperator("non-finite coefficient".into()));
        }
        Ok(Self { a })
    }

    pub fn zeros(basis: &BasisSet) -> Self {
        Self { a: vec![0.0; basis.len()] }
    }

    /// Indices with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.a
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `sum_m a_m X_m`.
    pub fn reconstruct(&self, basis: &BasisSet) -> CMatrix {
        let n = basis.dim();
        let mut out = CMatrix::zeros(n, n);
        for (a, x) in self.a.iter().zip(basis.elements()) {
            if *a != 0.0 {
                out += x * Complex64::new(*a, 0.0);
            }
        }
        out
    }
}

impl fmt::Display for HamiltonianCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.a.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

fn unit(n: usize, i: usize, j: usize, v: Complex64) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = v;
    m
}

/// Generalized Gell-Mann matrices: symmetric, antisymmetric, then diagonal
/// families, each normalized to tr(X²) = 2. For N = 2 this gives σx, σy, σz.
pub fn gell_mann_basis(n: usize) -> Result<BasisSet> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut elements = Vec::with_capacity(n * n - 1);
    let mut labels = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in (j + 1)..n {
            elements.push(unit(n, j, k, one) + unit(n, k, j, one));
            labels.push(format!("S{}{}", j + 1, k + 1));
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            elements.push(unit(n, j, k, -i) + unit(n, k, j, i));
            labels.push(format!("A{}{}", j + 1, k + 1));
        }
    }
    for l in 1..n {
        let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = CMatrix::zeros(n, n);
        for j in 0..l {
            d[(j, j)] = Complex64::new(scale, 0.0);
        }
        d[(l, l)] = Complex64::new(-scale * l as f64, 0.0);
        elements.push(d);
        labels.push(format!("D{l}"));
    }
    if n == 2 {
        labels = vec!["X".into(), "Y".into(), "Z".into()];
    }
    BasisSet::from_elements(elements, labels)
}

/// Single-qubit Pauli matrix by letter.
pub fn pauli(c: char) -> Option<CMatrix> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let m = match c {
        'I' => [o, z, z, o],
        'X' => [z, o, o, z],
        'Y' => [z, -i, i, z],
        'Z' => [o, z, z, -o],
        _ => return None,
    };
    Some(CMatrix::from_row_slice(2, 2, &m))
}

/// Kronecker product of Pauli letters, e.g. `"ZX"` = σz ⊗ σx.
pub fn pauli_string(s: &str) -> Result<CMatrix> {
    let mut out = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for c in s.chars() {
        let p = pauli(c.to_ascii_uppercase())
            .ok_or_else(|| Error::InvalidOperator(format!("unknown Pauli letter '{c}' in \"{s}\"")))?;
        out = out.kronecker(&p);
    }
    Ok(out)
}

/// Pauli-product basis for `qubits` qubits (N = 2^qubits).
pub fn pauli_basis(qubits: usize) -> Result<BasisSet> {
    if qubits == 0 {
        return Err(Error::InvalidDimension(1));
    }
    let letters = ['I', 'X', 'Y', 'Z'];
    let total = 4usize.pow(qubits as u32);
    let mut elements = Vec::with_capacity(total - 1);
    let mut labels = Vec::with_capacity(total - 1);
    for code in 1..total {
        let mut s = String::with_capacity(qubits);
        for q in (0..qubits).rev() {
            s.push(letters[(code / 4usize.pow(q as u32)) % 4]);
        }
        elements.push(pauli_string(&s)?);
        labels.push(s);
    }
    BasisSet::from_elements(elements, labels)
}

/// C[j][k][l] = tr(X_l [X_j, X_k]) / tr(X_l²).
pub fn structure_constants(basis: &BasisSet) -> Result<StructureConstants> {
    let m = basis.len();
    let xs = basis.elements();
    let norms: Vec<f64> = xs.iter().map(|x| trace_product(x, x).re).collect();
    let scale = norms.iter().fold(0.0_f64, |a, b| a.max(*b));
    for j in 0..m {
        if norms[j] <= 1e-12 * scale {
            return Err(Error::IllConditionedBasis(format!("element {j} has zero norm")));
        }
        for k in (j + 1)..m {
            let g = trace_product(&xs[j], &xs[k]);
            if g.norm() > 1e-10 * scale {
                return Err(Error::IllConditionedBasis(format!(
                    "tr(X_{j} X_{k}) = {g} is not zero"
                )));
            }
        }
    }
    let mut c = StructureConstants::zeros(m);
    for j in 0..m {
        for k in (j + 1)..m {
            let comm = commutator(&xs[j], &xs[k]);
            for l in 0..m {
                let v = trace_product(&xs[l], &comm) / norms[l];
                let v = if v.norm() < 1e-14 { Complex64::new(0.0, 0.0) } else { v };
                c.set(j, k, l, v);
                c.set(k, j, l, -v);
            }
        }
    }
    Ok(c)
}

/// Expands a Hermitian operator on the basis. Any identity component is
/// discarded since it does not affect the dynamics.
pub fn expand_hamiltonian(h: &CMatrix, basis: &BasisSet) -> Result<HamiltonianCoeffs> {
    let n = basis.dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::Shape(format!(
            "operator is {}x{}, basis acts on dimension {n}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = max_abs_c(h).max(1.0);
    if max_abs_c(&(h - h.adjoint())) > 1e-12 * scale {
        return Err(Error::InvalidOperator("operator is not Hermitian".into()));
    }
    let tr = trace(h);
    if tr.norm() > 1e-12 * scale {
        warn!("discarding identity component tr(H)/N = {}", tr.re / n as f64);
    }
    let a = basis.project(h).into_iter().map(|z| z.re).collect();
    HamiltonianCoeffs::new(a, basis)
}

/// Coherence vector x_j = tr(X_j ρ) of a density matrix.
pub fn coherence_vector(rho: &CMatrix, basis: &BasisSet) -> Result<Vec<f64>> {
    if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
        return Err(Error::Shape("density matrix does not match basis dimension".into()));
    }
    Ok(basis
        .elements()
        .iter()
        .map(|x| trace_product(x, rho).re)
        .collect())
}
