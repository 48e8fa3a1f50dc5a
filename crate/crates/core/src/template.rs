//! Parameterized augmented models: Hamiltonian terms with named coefficients,
//! a fixed accessible set, and a noise block in one of several layouts.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::liealg::{expand_hamiltonian, pauli_string, BasisSet, HamiltonianCoeffs};
use crate::statespace::{augment, filtration, reduced_model_on, AugmentedModel, FiltrationMode, StateLabel, StateSpaceModel};
use crate::tfmatch::ParameterSpec;

/// `scale · value(param) · op`, or `scale · op` when `param` is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub op: String,
    pub scale: f64,
    pub param: Option<String>,
}

/// Hamiltonian, observables and initial state over one basis.
#[derive(Debug, Clone)]
pub struct QuantumTemplate {
    basis: BasisSet,
    terms: Vec<(HamiltonianCoeffs, f64, Option<usize>)>,
    params: Vec<String>,
    observables: Vec<HamiltonianCoeffs>,
    x0_full: Vec<f64>,
}

/// Operator label to basis coefficients: a basis label, or a Pauli string
/// when the basis is a qubit basis.
pub fn operator_coeffs(op: &str, basis: &BasisSet) -> Result<HamiltonianCoeffs> {
    if let Some(i) = basis.index_of(op) {
        let mut a = vec![0.0; basis.len()];
        a[i] = 1.0;
        return HamiltonianCoeffs::new(a, basis);
    }
    let m = pauli_string(op)?;
    if m.nrows() != basis.dim() {
        return Err(Error::InvalidOperator(format!(
            "{op} acts on dimension {} but the basis has dimension {}",
            m.nrows(),
            basis.dim()
        )));
    }
    expand_hamiltonian(&m, basis)
}

impl QuantumTemplate {
    pub fn new(basis: BasisSet, terms: &[Term], observables: &[String], initial: &BTreeMap<String, f64>) -> Result<Self> {
        let mut params: Vec<String> = Vec::new();
        let mut expanded = Vec::with_capacity(terms.len());
        for t in terms {
            let coeffs = operator_coeffs(&t.op, &basis)?;
            let slot = t.param.as_ref().map(|p| match params.iter().position(|q| q == p) {
                Some(i) => i,
                None => {
                    params.push(p.clone());
                    params.len() - 1
                }
            });
            expanded.push((coeffs, t.scale, slot));
        }
        let observables = observables
            .iter()
            .map(|o| operator_coeffs(o, &basis))
            .collect::<Result<Vec<_>>>()?;
        if observables.is_empty() {
            return Err(Error::Config("at least one observable is required".into()));
        }
        let mut x0_full = vec![0.0; basis.len()];
        for (label, &v) in initial {
            let c = operator_coeffs(label, &basis)?;
            for (x, a) in x0_full.iter_mut().zip(&c.a) {
                *x += v * a;
            }
        }
        Ok(Self {
            basis,
            terms: expanded,
            params,
            observables,
            x0_full,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    /// Parameter names in order of first appearance.
    pub fn param_names(&self) -> &[String] {
        &self.params
    }

    pub fn observables(&self) -> &[HamiltonianCoeffs] {
        &self.observables
    }

    pub fn initial(&self) -> &[f64] {
        &self.x0_full
    }

    pub fn coeffs(&self, values: &[f64]) -> Result<HamiltonianCoeffs> {
        if values.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "{} values for {} Hamiltonian parameters",
                values.len(),
                self.params.len()
            )));
        }
        let mut a = vec![0.0; self.basis.len()];
        for (c, scale, slot) in &self.terms {
            let v = scale * slot.map_or(1.0, |i| values[i]);
            for (x, y) in a.iter_mut().zip(&c.a) {
                *x += v * y;
            }
        }
        HamiltonianCoeffs::new(a, &self.basis)
    }

    fn observable_seeds(&self) -> Vec<usize> {
        let mut seeds: Vec<usize> = self.observables.iter().flat_map(|o| o.support()).collect();
        seeds.sort_unstable();
        seeds.dedup();
        seeds
    }

    /// Accessible set for these parameter values.
    pub fn accessible(&self, values: &[f64], mode: FiltrationMode) -> Result<Vec<usize>> {
        Ok(filtration(&self.observable_seeds(), &self.coeffs(values)?, &self.basis, mode))
    }

    /// Accessible set with the `free` parameters at generic nonzero values,
    /// so that it does not depend on where a search happens to be.
    pub fn structural_accessible(&self, values: &[f64], free: &[bool], mode: FiltrationMode) -> Result<Vec<usize>> {
        let generic: Vec<f64> = values
            .iter()
            .zip(free)
            .enumerate()
            .map(|(k, (&v, &f))| if f { 1.0 + ((k as f64 + 1.0) * std::f64::consts::SQRT_2).fract() } else { v })
            .collect();
        self.accessible(&generic, mode)
    }

    pub fn model_on(&self, values: &[f64], indices: &[usize]) -> Result<StateSpaceModel> {
        reduced_model_on(&self.coeffs(values)?, &self.basis, &self.observables, &self.x0_full, indices)
    }

    pub fn model(&self, values: &[f64], mode: FiltrationMode) -> Result<StateSpaceModel> {
        self.model_on(values, &self.accessible(values, mode)?)
    }
}

/// How the noise block enters the unknowns. The output row is fixed to all
/// ones in every layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLayout {
    None,
    /// Companion E with unknown last row (α₁..α_n) and unknown ξ0.
    Companion(usize),
    /// Every entry of E unknown, plus ξ0.
    Full(usize),
}

impl NoiseLayout {
    pub fn order(&self) -> usize {
        match *self {
            NoiseLayout::None => 0,
            NoiseLayout::Companion(n) | NoiseLayout::Full(n) => n,
        }
    }

    pub fn names(&self) -> Vec<String> {
        let n = self.order();
        let mut out: Vec<String> = match *self {
            NoiseLayout::None => vec![],
            NoiseLayout::Companion(_) => (1..=n).map(|i| format!("alpha{i}")).collect(),
            NoiseLayout::Full(_) => (1..=n)
                .flat_map(|i| (1..=n).map(move |j| if n < 10 { format!("e{i}{j}") } else { format!("e{i}_{j}") }))
                .collect(),
        };
        out.extend((1..=n).map(|i| format!("xi0_{i}")));
        out
    }

    /// Bound group a parameter name falls back to.
    pub fn group(name: &str) -> Option<&'static str> {
        if name.starts_with("alpha") {
            Some("alpha")
        } else if name.starts_with("xi0") {
            Some("xi0")
        } else if name.starts_with('e') && name[1..].chars().all(|c| c.is_ascii_digit() || c == '_') {
            Some("e")
        } else {
            None
        }
    }

    /// Noise expectation model from this layout's parameter slice.
    pub fn model(&self, p: &[f64]) -> Result<StateSpaceModel> {
        let n = self.order();
        let expected = self.names().len();
        if p.len() != expected {
            return Err(Error::Shape(format!("{} noise values for {expected} noise parameters", p.len())));
        }
        let e = match *self {
            NoiseLayout::None => DMatrix::zeros(0, 0),
            NoiseLayout::Companion(_) => {
                let mut e = DMatrix::zeros(n, n);
                for i in 0..n - 1 {
                    e[(i, i + 1)] = 1.0;
                }
                for j in 0..n {
                    e[(n - 1, j)] = -p[n - 1 - j];
                }
                e
            }
            NoiseLayout::Full(_) => DMatrix::from_row_slice(n, n, &p[..n * n]),
        };
        let xi0 = DVector::from_column_slice(&p[p.len() - n..]);
        let g = DMatrix::from_element(1, n, 1.0);
        let labels = (0..n).map(StateLabel::Noise).collect();
        StateSpaceModel::new(e, g, xi0, labels)
    }
}

impl fmt::Display for NoiseLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLayout::None => write!(f, "none"),
            NoiseLayout::Companion(n) => write!(f, "companion({n})"),
            NoiseLayout::Full(n) => write!(f, "full({n})"),
        }
    }
}

/// Builds the identification unknowns: every Hamiltonian parameter absent
/// from `known`, then the noise layout's parameters. Bounds are looked up by
/// name, falling back to the layout group (`alpha`, `e`, `xi0`).
pub fn parameter_spec(
    template: Arc<QuantumTemplate>,
    known: &BTreeMap<String, f64>,
    layout: NoiseLayout,
    bounds: &BTreeMap<String, (f64, f64)>,
    mode: FiltrationMode,
) -> Result<ParameterSpec> {
    let hnames = template.param_names().to_vec();
    let free: Vec<bool> = hnames.iter().map(|n| !known.contains_key(n)).collect();
    let base: Vec<f64> = hnames.iter().map(|n| known.get(n).copied().unwrap_or(0.0)).collect();
    let slots: Vec<usize> = (0..hnames.len()).filter(|&i| free[i]).collect();
    let indices = template.structural_accessible(&base, &free, mode)?;

    let mut names: Vec<String> = slots.iter().map(|&i| hnames[i].clone()).collect();
    names.extend(layout.names());
    let mut b = Vec::with_capacity(names.len());
    for name in &names {
        let found = bounds
            .get(name)
            .or_else(|| NoiseLayout::group(name).and_then(|g| bounds.get(g)))
            .copied()
            .ok_or_else(|| Error::Spec(format!("no bounds for unknown parameter {name}")))?;
        b.push(found);
    }
    let flips: Vec<usize> = (0..slots.len()).collect();
    let nh = slots.len();
    let builder = move |p: &[f64]| -> Result<AugmentedModel> {
        let mut values = base.clone();
        for (k, &i) in slots.iter().enumerate() {
            values[i] = p[k];
        }
        let quantum = template.model_on(&values, &indices)?;
        let noise = layout.model(&p[nh..])?;
        augment(&quantum, &noise)
    };
    Ok(ParameterSpec::new(names, b, builder)?.with_flip_candidates(flips))
}
