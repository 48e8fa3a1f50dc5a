//! Multistart bounded Levenberg–Marquardt on the coefficient residual, with
//! sign-symmetry reduction and clustering of the converged points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{residual_unchecked, transfer_coeffs, ParameterSpec, TransferCoeffs};
use crate::error::{Error, Result};
use crate::statespace::Trajectory;
use crate::sysid::{build_hankel, continuous_lift, era, hankel_singular_values, select_order, EraResult, OrderSelection};

/// Residual norm below which a point is accepted without further iterations.
const EXACT: f64 = 1e-13;
/// Two residual vectors closer than this (∞-norm) count as equal.
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub starts: usize,
    pub seed: u64,
    /// A start converged when its final residual 2-norm is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Cluster radius in bound-width-scaled ∞-distance.
    pub cluster_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            starts: 200,
            seed: 0,
            tol: 1e-6,
            max_iter: 200,
            cluster_tol: 1e-6,
        }
    }
}

/// One local descent.
#[derive(Debug, Clone, PartialEq)]
pub struct StartRun {
    pub start: Vec<f64>,
    pub params: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Residual 2-norm after each accepted iteration, starting point first.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Representative of one cluster of converged starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub params: Vec<f64>,
    pub residual: f64,
    /// σ_max/σ_min of the residual Jacobian at `params`.
    pub condition: f64,
    /// Number of starts that landed in this cluster.
    pub multiplicity: usize,
    /// Parameters whose sign flip leaves the residual unchanged here.
    pub sign_symmetries: Vec<usize>,
    /// In-bounds images of `params` under those flips.
    pub images: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct IdentificationResult {
    pub names: Vec<String>,
    pub solutions: Vec<Solution>,
    pub best: usize,
    pub runs: Vec<StartRun>,
    pub target: TransferCoeffs,
    pub realization: Option<Realization>,
    pub equivalence_note: String,
}

impl IdentificationResult {
    pub fn best_solution(&self) -> &Solution {
        &self.solutions[self.best]
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.best_solution().params[i])
    }
}

/// Everything derived from the data before matching.
#[derive(Debug, Clone)]
pub struct Realization {
    pub singular_values: Vec<f64>,
    pub selection: OrderSelection,
    /// Lifted: `a_hat` is set.
    pub era: EraResult,
    pub target: TransferCoeffs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyOptions {
    pub r: usize,
    pub s: usize,
    pub gap_ratio: f64,
    /// Overrides the singular-value order choice.
    pub order: Option<usize>,
    pub max_rate: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            r: 20,
            s: 100,
            gap_ratio: crate::sysid::DEFAULT_GAP_RATIO,
            order: None,
            max_rate: None,
            solve: SolveOptions::default(),
        }
    }
}

/// Hankel pair, order choice, ERA, lift and target coefficients.
pub fn realize(traj: &Trajectory, opts: &IdentifyOptions) -> Result<Realization> {
    let pair = build_hankel(traj, opts.r, opts.s)?;
    let sv = hankel_singular_values(&pair);
    let mut selection = select_order(&sv, opts.gap_ratio, pair.h0.shape())?;
    if !selection.clear_gap {
        log::warn!(
            "no singular-value ratio below {:e}; using numerical rank {}",
            opts.gap_ratio,
            selection.order
        );
    }
    if let Some(order) = opts.order {
        selection.order = order;
    }
    let lifted = continuous_lift(&era(&pair, selection.order)?, opts.max_rate)?;
    let a_hat = lifted.a_hat.as_ref().expect("lift sets a_hat");
    let target = transfer_coeffs(a_hat, &lifted.c_hat, &lifted.x0_hat)?;
    Ok(Realization {
        singular_values: sv,
        selection,
        era: lifted,
        target,
    })
}

pub fn identify(traj: &Trajectory, spec: &ParameterSpec, opts: &IdentifyOptions) -> Result<IdentificationResult> {
    let real = realize(traj, opts)?;
    identify_from_realization(real, spec, &opts.solve)
}

pub fn identify_from_realization(
    real: Realization,
    spec: &ParameterSpec,
    opts: &SolveOptions,
) -> Result<IdentificationResult> {
    let order = spec.build(&spec.midpoint())?.model.order();
    if order != real.selection.order {
        return Err(Error::Spec(format!(
            "the parameterized model has order {order} but the data realization has order {}; \
             adjust the noise order or override the realization order",
            real.selection.order
        )));
    }
    let mut out = solve(spec, &real.target, opts)?;
    out.realization = Some(real);
    Ok(out)
}

/// Multistart from a shifted Halton sequence over the bounds box.
pub fn solve(spec: &ParameterSpec, target: &TransferCoeffs, opts: &SolveOptions) -> Result<IdentificationResult> {
    if opts.starts == 0 {
        return Err(Error::Spec("at least one start is required".into()));
    }
    let starts = start_points(spec, opts.starts, opts.seed);
    solve_from(spec, target, &starts, opts)
}

pub fn solve_from(
    spec: &ParameterSpec,
    target: &TransferCoeffs,
    starts: &[Vec<f64>],
    opts: &SolveOptions,
) -> Result<IdentificationResult> {
    if starts.is_empty() {
        return Err(Error::Spec("at least one start is required".into()));
    }
    // surface structural mismatches once instead of per start
    residual_unchecked(&spec.midpoint(), spec, target)?;

    let runs: Vec<StartRun> = starts
        .par_iter()
        .map(|x0| local_descent(spec, target, x0, opts))
        .collect();

    let mut converged: Vec<(Vec<f64>, f64)> = runs
        .iter()
        .filter(|r| r.converged)
        .map(|r| (canonicalize(spec, target, &r.params), r.residual))
        .collect();
    if converged.is_empty() {
        let best = runs
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("nonempty");
        return Err(Error::NoSolution {
            best_residual: best.residual,
            best_params: best.params.clone(),
        });
    }
    converged.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| lex_cmp(&a.0, &b.0))
    });

    let mut clusters: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for (x, res) in converged {
        match clusters
            .iter_mut()
            .find(|(rep, _, _)| scaled_distance(spec, rep, &x) < opts.cluster_tol)
        {
            Some(c) => c.2 += 1,
            None => clusters.push((x, res, 1)),
        }
    }

    let solutions: Vec<Solution> = clusters
        .into_iter()
        .map(|(params, res, count)| {
            let (sign_symmetries, images) = symmetries(spec, target, &params);
            let condition = jacobian(spec, target, &params)
                .map(|j| condition_number(&j))
                .unwrap_or(f64::INFINITY);
            Solution {
                params,
                residual: res,
                condition,
                multiplicity: count,
                sign_symmetries,
                images,
            }
        })
        .collect();
    let equivalence_note = equivalence_note(spec, &solutions);
    Ok(IdentificationResult {
        names: spec.names.clone(),
        solutions,
        best: 0,
        runs,
        target: target.clone(),
        realization: None,
        equivalence_note,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn scaled_distance(spec: &ParameterSpec, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(&spec.bounds)
        .map(|((x, y), (lo, hi))| (x - y).abs() / (hi - lo).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton points with a random Cranley–Patterson shift, mapped into the box.
pub fn start_points(spec: &ParameterSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..spec.len()).map(|_| rng.random::<f64>()).collect();
    (0..count)
        .map(|k| {
            spec.bounds
                .iter()
                .enumerate()
                .map(|(d, &(lo, hi))| {
                    let u = if d < PRIMES.len() {
                        (radical_inverse(k as u64 + 1, PRIMES[d]) + shift[d]).fract()
                    } else {
                        rng.random::<f64>()
                    };
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

fn eval(spec: &ParameterSpec, target: &TransferCoeffs, x: &[f64]) -> Option<DVector<f64>> {
    residual_unchecked(x, spec, target)
        .ok()
        .filter(|r| r.iter().all(|v| v.is_finite()))
}

fn jacobian(spec: &ParameterSpec, target: &TransferCoeffs, x: &[f64]) -> Option<DMatrix<f64>> {
    let r0 = eval(spec, target, x)?;
    let mut j = DMatrix::zeros(r0.len(), x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let (lo, hi) = spec.bounds[i];
        let h = 1e-6 * x[i].abs().max(1.0);
        let up = (x[i] + h).min(hi);
        let down = (x[i] - h).max(lo);
        if up <= down {
            continue;
        }
        xp[i] = up;
        let rp = if up > x[i] { eval(spec, target, &xp)? } else { r0.clone() };
        xp[i] = down;
        let rm = if down < x[i] { eval(spec, target, &xp)? } else { r0.clone() };
        xp[i] = x[i];
        j.set_column(i, &((rp - rm) / (up - down)));
    }
    Some(j)
}

fn condition_number(j: &DMatrix<f64>) -> f64 {
    if j.ncols() == 0 {
        return 1.0;
    }
    let sv = j.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = if j.nrows() >= j.ncols() { sv.min() } else { 0.0 };
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn local_descent(spec: &ParameterSpec, target: &TransferCoeffs, start: &[f64], opts: &SolveOptions) -> StartRun {
    let mut x = start.to_vec();
    spec.clamp(&mut x);
    let Some(mut r) = eval(spec, target, &x) else {
        return StartRun {
            start: start.to_vec(),
            params: x,
            residual: f64::INFINITY,
            iterations: 0,
            history: vec![],
            converged: false,
        };
    };
    let mut cost = r.norm_squared();
    let mut history = vec![cost.sqrt()];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let p = x.len();

    while iterations < opts.max_iter && cost.sqrt() > EXACT && p > 0 {
        let Some(j) = jacobian(spec, target, &x) else { break };
        let g = j.transpose() * &r;
        if g.amax() <= f64::EPSILON * f64::EPSILON {
            break;
        }
        let h = j.transpose() * &j;
        let diag_floor = 1e-12 * h.diagonal().max().max(f64::MIN_POSITIVE);
        let mut accepted = None;
        while lambda < 1e16 {
            let mut lhs = h.clone();
            for i in 0..p {
                lhs[(i, i)] += lambda * h[(i, i)].max(diag_floor);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            spec.clamp(&mut xn);
            let moved = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            if moved <= 1e-15 * scale {
                break;
            }
            match eval(spec, target, &xn) {
                Some(rn) if rn.norm_squared() < cost => {
                    accepted = Some((xn, rn));
                    lambda = (lambda / 3.0).max(1e-12);
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        let Some((xn, rn)) = accepted else { break };
        let new_cost = rn.norm_squared();
        let gain = cost - new_cost;
        x = xn;
        r = rn;
        cost = new_cost;
        iterations += 1;
        history.push(cost.sqrt());
        if gain <= 1e-15 * cost {
            break;
        }
    }
    let residual = cost.sqrt();
    StartRun {
        start: start.to_vec(),
        params: x,
        residual,
        iterations,
        history,
        converged: residual <= opts.tol,
    }
}

fn flip_is_symmetry(spec: &ParameterSpec, target: &TransferCoeffs, x: &[f64], i: usize) -> bool {
    if x[i] == 0.0 {
        return false;
    }
    let mut y = x.to_vec();
    y[i] = -y[i];
    match (eval(spec, target, x), eval(spec, target, &y)) {
        (Some(a), Some(b)) => (a - b).amax() <= SYMMETRY_TOL,
        _ => false,
    }
}

/// Flips negative symmetric coordinates to their nonnegative representative
/// when that stays inside the bounds.
fn canonicalize(spec: &ParameterSpec, target: &TransferCoeffs, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &i in &spec.flip_candidates {
        let (lo, hi) = spec.bounds[i];
        if y[i] < 0.0 && -y[i] >= lo && -y[i] <= hi && flip_is_symmetry(spec, target, &y, i) {
            y[i] = -y[i];
        }
    }
    y
}

fn symmetries(spec: &ParameterSpec, target: &TransferCoeffs, x: &[f64]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut found = Vec::new();
    let mut images = Vec::new();
    for &i in &spec.flip_candidates {
        if flip_is_symmetry(spec, target, x, i) {
            found.push(i);
            let mut y = x.to_vec();
            y[i] = -y[i];
            if spec.in_bounds(&y) {
                images.push(y);
            }
        }
    }
    (found, images)
}

fn equivalence_note(spec: &ParameterSpec, solutions: &[Solution]) -> String {
    let mut lines = Vec::new();
    for (k, s) in solutions.iter().enumerate() {
        if s.sign_symmetries.is_empty() {
            lines.push(format!("solution {}: no sign symmetry detected", k + 1));
        } else {
            let names: Vec<&str> = s.sign_symmetries.iter().map(|&i| spec.names[i].as_str()).collect();
            lines.push(format!(
                "solution {}: residual invariant under sign flip of {}; {} in-bounds image(s), canonical representative has nonnegative sign",
                k + 1,
                names.join(", "),
                s.images.len()
            ));
        }
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{AugmentedModel, StateSpaceModel};

    /// Oscillator −ω sin-type response plus a decaying scalar mode sharing
    /// the output: A = [[0,−w],[w,0]] ⊕ [−a].
    fn toy_spec() -> ParameterSpec {
        ParameterSpec::new(
            vec!["w".into(), "a".into()],
            vec![(-4.0, 4.0), (0.1, 3.0)],
            |p| {
                let (w, a) = (p[0], p[1]);
                let am = DMatrix::from_row_slice(3, 3, &[0.0, -w, 0.0, w, 0.0, 0.0, 0.0, 0.0, -a]);
                let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
                let x0 = DVector::from_vec(vec![0.0, 1.0, 0.5]);
                Ok(AugmentedModel {
                    model: StateSpaceModel::unlabeled(am, c, x0)?,
                    quantum_dim: 2,
                    noise_dim: 1,
                })
            },
        )
        .unwrap()
        .with_flip_candidates(vec![0])
    }

    fn toy_target(spec: &ParameterSpec, p: &[f64]) -> TransferCoeffs {
        let m = spec.build(p).unwrap().model;
        transfer_coeffs(&m.a, &m.c, &m.x0).unwrap()
    }

    #[test]
    fn halton_in_bounds_and_seeded() {
        let spec = toy_spec();
        let a = start_points(&spec, 50, 3);
        assert_eq!(a, start_points(&spec, 50, 3));
        assert_ne!(a, start_points(&spec, 50, 4));
        assert!(a.iter().all(|x| spec.in_bounds(x)));
    }

    #[test]
    fn converges_from_truth_without_iterating() {
        let spec = toy_spec();
        let truth = [1.5, 0.7];
        let target = toy_target(&spec, &truth);
        let res = solve_from(&spec, &target, &[truth.to_vec()], &SolveOptions::default()).unwrap();
        assert_eq!(res.runs[0].iterations, 0);
        assert_eq!(res.best_solution().params, truth.to_vec());
    }

    #[test]
    fn sign_flip_is_not_a_symmetry_of_odd_numerator() {
        // Q carries −w linearly, so w ↦ −w changes the residual
        let spec = toy_spec();
        let target = toy_target(&spec, &[1.5, 0.7]);
        let res = solve(&spec, &target, &SolveOptions { starts: 40, ..Default::default() }).unwrap();
        let best = res.best_solution();
        assert!((best.params[0] - 1.5).abs() < 1e-8);
        assert!((best.params[1] - 0.7).abs() < 1e-8);
        assert!(best.sign_symmetries.is_empty());
    }

    #[test]
    fn no_solution_reports_best() {
        let spec = toy_spec();
        let mut target = toy_target(&spec, &[1.5, 0.7]);
        target.num[0][0] += 10.0;
        let err = solve(&spec, &target, &SolveOptions { starts: 5, ..Default::default() }).unwrap_err();
        match err {
            Error::NoSolution { best_residual, best_params } => {
                assert!(best_residual > 1e-3);
                assert_eq!(best_params.len(), 2);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn order_mismatch_is_a_spec_error() {
        let spec = toy_spec();
        let target = TransferCoeffs {
            den: vec![1.0, 0.0, 1.0],
            num: vec![vec![0.0, 1.0]],
        };
        assert!(matches!(
            solve(&spec, &target, &SolveOptions::default()),
            Err(Error::Spec(_))
        ));
    }
}
