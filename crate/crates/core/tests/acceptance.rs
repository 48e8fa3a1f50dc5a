//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
//! what was measured and how long it took; the run exits nonzero if any line
//! fails. Built without the libtest harness so the lines are always shown.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qhid::config::ExperimentConfig;
use qhid::experiment::Experiment;
use qhid::linalg::{eigenvalues, CMatrix};
use qhid::liealg::{expand_hamiltonian, gell_mann_basis, pauli, pauli_basis, HamiltonianCoeffs};
use qhid::noisemodel::{canonical_realization, spectral_factorize, NoiseTransfer, RationalPsd, ZeroSelection};
use qhid::poly;
use qhid::statespace::{build_reduced_model, discretize, simulate, states, FiltrationMode, StateSpaceModel};
use qhid::sysid::{build_hankel, continuous_lift, era, hankel_singular_values, select_order};
use qhid::template::NoiseLayout;
use qhid::tfmatch::{faddeev_leverrier, identify_from_realization, realize, transfer_coeffs, SolveOptions};

use common::{random_stable, rel_close};

const TRUTH: [f64; 3] = [1.3, 2.4, 4.3];

type Check = fn() -> Result<String, String>;

struct Suite {
    checked: usize,
    failed: Vec<String>,
}

impl Suite {
    fn check(&mut self, id: &str, budget: Duration, f: impl FnOnce() -> Result<String, String>) -> Duration {
        self.checked += 1;
        let t = Instant::now();
        let out = f();
        let took = t.elapsed();
        let (ok, detail) = match out {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:.0?} budget", budget)),
            Err(d) => (false, d),
        };
        println!("[{}] {id}: {detail} ({:.3} s)", if ok { "PASS" } else { "FAIL" }, took.as_secs_f64());
        if !ok {
            self.failed.push(id.to_string());
        }
        took
    }
}

fn ensure(cond: bool, msg: String) -> Result<String, String> {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/two_qubit_colored.toml")
}

fn two_qubit_experiment() -> Experiment {
    Experiment::new(ExperimentConfig::load(&config_path()).unwrap()).unwrap()
}

fn resonant_psd() -> RationalPsd {
    RationalPsd::new(&[1e12, 0.0, 4e26], &[1.0, 0.0, -3.999e13, 0.0, 4e26]).unwrap()
}

fn factorization() -> Result<String, String> {
    let tf = spectral_factorize(&resonant_psd(), &ZeroSelection::MaximumPhase).map_err(|e| e.to_string())?;
    let den = tf.denominator();
    let num = tf.numerator();
    let worst = den
        .iter()
        .zip([1.0, 1e5, 2e13])
        .chain(num.iter().zip([1e6, -2e13]))
        .map(|(a, b)| rel_err(*a, b))
        .fold(0.0, f64::max);
    ensure(
        den.len() == 3 && num.len() == 2 && worst < 1e-6,
        format!("den {den:?}, num {num:?}, worst relative error {worst:.2e}"),
    )
}

fn canonical_form() -> Result<String, String> {
    let tf = NoiseTransfer::new(vec![1e6, -2e13], vec![1e5, 2e13]).map_err(|e| e.to_string())?;
    let r = canonical_realization(&tf, &[0.0, 0.0]).map_err(|e| e.to_string())?;
    let exact = r.e == DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2e13, -1e5])
        && r.f == DVector::from_vec(vec![0.0, 1.0])
        && r.g == DMatrix::from_row_slice(1, 2, &[-2e13, 1e6]);
    let fact = spectral_factorize(&resonant_psd(), &ZeroSelection::MaximumPhase).map_err(|e| e.to_string())?;
    let rf = canonical_realization(&fact, &[0.0, 0.0]).map_err(|e| e.to_string())?;
    let drift = r
        .e
        .iter()
        .zip(rf.e.iter())
        .chain(r.g.iter().zip(rf.g.iter()))
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, b)| rel_err(*b, *a))
        .fold(0.0, f64::max);
    ensure(
        exact && drift < 1e-6,
        format!("exact from the stated transfer function: {exact}; from the factorized one within {drift:.2e}"),
    )
}

fn two_qubit_model() -> Result<String, String> {
    let basis = pauli_basis(2).map_err(|e| e.to_string())?;
    let i2 = CMatrix::identity(2, 2);
    let z = pauli('Z').unwrap();
    let plus = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(|v| Complex64::new(v, 0.0)));
    let minus = plus.transpose();
    let (w1, w2, d) = (TRUTH[0], TRUTH[1], TRUTH[2]);
    let re = |v: f64| Complex64::new(v, 0.0);
    let h = z.kronecker(&i2) * re(w1 / 2.0)
        + i2.kronecker(&z) * re(w2 / 2.0)
        + (plus.kronecker(&minus) + minus.kronecker(&plus)) * re(d);
    let coeffs = expand_hamiltonian(&h, &basis).map_err(|e| e.to_string())?;
    let mut obs = vec![0.0; basis.len()];
    obs[basis.index_of("XI").unwrap()] = 1.0;
    let obs = HamiltonianCoeffs::new(obs, &basis).map_err(|e| e.to_string())?;
    let mut x0 = vec![0.0; basis.len()];
    x0[basis.index_of("YI").unwrap()] = 1.0;
    let projected = build_reduced_model(&coeffs, &basis, &[obs], &x0, FiltrationMode::HamiltonianSupport)
        .map_err(|e| e.to_string())?;
    let m = two_qubit_experiment().quantum_truth().map_err(|e| e.to_string())?;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, -w1, 0.0, d,
        w1, 0.0, -d, 0.0,
        0.0, d, 0.0, -w2,
        -d, 0.0, w2, 0.0,
    ]);
    let c = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]);
    let x0 = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
    let exact = m.a == a && m.c == c && m.x0 == x0;
    let drift = (&projected.a - &a).amax().max((&projected.c - &c).amax()).max((&projected.x0 - &x0).amax());
    let labels: Vec<String> = m.labels.iter().map(|l| l.to_string()).collect();
    ensure(
        m.order() == 4 && projected.order() == 4 && exact && drift < 1e-14,
        format!(
            "K = {}, states {}, A/C/x0 exact from the config terms: {exact}; \
             from projecting the ladder-operator matrix within {drift:.1e}",
            m.order(),
            labels.join(" ")
        ),
    )
}

fn order_detection() -> Result<String, String> {
    let exp = two_qubit_experiment();
    let sim = exp.simulate().map_err(|e| e.to_string())?;
    let id = &exp.config.identify;
    let pair = build_hankel(&sim.measured, id.r, id.s).map_err(|e| e.to_string())?;
    let sv = hankel_singular_values(&pair);
    let ratio = sv[6] / sv[5];
    let sel = select_order(&sv, id.gap_ratio, pair.h0.shape()).map_err(|e| e.to_string())?;
    ensure(
        sim.measured.len() == 120 && ratio < 1e-6 && sel.order == 6,
        format!(
            "{} samples, Hankel {}x{}, sigma7/sigma6 = {ratio:.2e}, order {}",
            sim.measured.len(),
            pair.h0.nrows(),
            pair.h0.ncols(),
            sel.order
        ),
    )
}

fn recovery() -> Result<String, String> {
    let exp = two_qubit_experiment();
    let sim = exp.simulate().map_err(|e| e.to_string())?;
    let res = exp.identify(&sim.measured).map_err(|e| e.to_string())?;
    let best = res.best_solution();
    let got: Vec<f64> = ["omega1", "omega2", "delta1"]
        .iter()
        .map(|n| res.param(n).unwrap())
        .collect();
    let worst = got.iter().zip(TRUTH).map(|(g, t)| rel_err(*g, t)).fold(0.0, f64::max);
    let flips: Vec<&str> = best.sign_symmetries.iter().map(|&k| res.names[k].as_str()).collect();
    ensure(
        res.runs.len() == 200 && worst < 1e-4,
        format!(
            "{} starts, best (omega1, omega2, delta1) = ({:.8}, {:.8}, {:.8}), worst relative error {worst:.2e}, \
             residual {:.1e}, sign symmetries [{}]",
            res.runs.len(),
            got[0],
            got[1],
            got[2],
            best.residual,
            flips.join(", ")
        ),
    )
}

fn baseline_bias() -> Result<String, String> {
    let exp = two_qubit_experiment();
    let sim = exp.simulate().map_err(|e| e.to_string())?;
    let mut opts = exp.identify_options();
    opts.order = Some(exp.quantum_dim().map_err(|e| e.to_string())?);
    let real = realize(&sim.measured, &opts).map_err(|e| e.to_string())?;
    let spec = exp.parameter_spec(NoiseLayout::None).map_err(|e| e.to_string())?;
    let solve = SolveOptions {
        tol: f64::INFINITY,
        ..opts.solve
    };
    let res = identify_from_realization(real, &spec, &solve).map_err(|e| e.to_string())?;
    let best = res.best_solution();
    let errs: Vec<f64> = best.params.iter().zip(TRUTH).map(|(g, t)| rel_err(*g, t)).collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    ensure(
        worst > 1e-2,
        format!(
            "noise-free fit gives ({:.4}, {:.4}, {:.4}), worst relative error {worst:.2e}, residual {:.2e}",
            best.params[0], best.params[1], best.params[2], best.residual
        ),
    )
}

fn era_round_trip() -> Result<String, String> {
    let mut cases = 0;
    let mut worst_res = 0.0_f64;
    for n in 2..=8 {
        for seed in 0..6 {
            let (a, c, x0) = random_stable(n, 1000 * n as u64 + seed);
            let model = StateSpaceModel::unlabeled(a.clone(), c, x0).unwrap();
            let traj = simulate(&discretize(&model, 0.1).unwrap(), 80, 0.0, 0).unwrap();
            let pair = build_hankel(&traj, 30, 40).unwrap();
            let sel = select_order(&hankel_singular_values(&pair), 1e-6, pair.h0.shape()).unwrap();
            if sel.order != n {
                return Err(format!("n = {n}, seed {seed}: order {}", sel.order));
            }
            let e = era(&pair, n).map_err(|e| e.to_string())?;
            let rel = e.residual / traj.samples.amax();
            worst_res = worst_res.max(rel);
            let lifted = continuous_lift(&e, None).map_err(|e| e.to_string())?;
            let mut want = eigenvalues(&a);
            let mut got = eigenvalues(lifted.a_hat.as_ref().unwrap());
            let key = |z: &Complex64| (z.re, z.im);
            want.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
            got.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
            let spec_err = want.iter().zip(&got).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            if rel >= 1e-8 || spec_err >= 1e-8 {
                return Err(format!("n = {n}, seed {seed}: residual {rel:.2e}, eigenvalue error {spec_err:.2e}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} systems of order 2 to 8, worst relative residual {worst_res:.2e}"))
}

fn similarity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (a, c, x0) = random_stable(6, 99);
    let base = transfer_coeffs(&a, &c, &x0).unwrap();
    let mut done = 0;
    while done < 100 {
        let t = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(6, 6) * 2.0;
        let Some(ti) = t.clone().try_inverse() else { continue };
        let moved = transfer_coeffs(&(&t * &a * &ti), &(&c * &ti), &(&t * &x0)).unwrap();
        if !rel_close(&moved.den, &base.den, 1e-8) || !rel_close(&moved.num[0], &base.num[0], 1e-8) {
            return Err(format!("transform {done} changed the coefficients"));
        }
        done += 1;
    }
    Ok(format!("{done} random transforms"))
}

fn coherence_norm() -> Result<String, String> {
    let mut models: Vec<StateSpaceModel> = Vec::new();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let exp = Experiment::new(ExperimentConfig::load(&path).unwrap()).unwrap();
            models.push(exp.quantum_truth().map_err(|e| e.to_string())?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2, 3, 4] {
        for _ in 0..5 {
            let basis = gell_mann_basis(n).unwrap();
            let m = basis.len();
            let h = HamiltonianCoeffs::new((0..m).map(|_| rng.random_range(-2.0..2.0)).collect(), &basis).unwrap();
            let obs = HamiltonianCoeffs::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect(), &basis).unwrap();
            let x0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            models.push(build_reduced_model(&h, &basis, &[obs], &x0, FiltrationMode::FullAlgebra).unwrap());
        }
    }
    let mut worst = 0.0_f64;
    for model in &models {
        let d = discretize(model, 0.1).unwrap();
        let xs = states(&d, 120);
        let n0 = xs[0].norm();
        for x in &xs {
            worst = worst.max((x.norm() - n0).abs() / n0.max(1.0));
        }
    }
    ensure(
        worst < 1e-10,
        format!("{} quantum models over 120 steps, worst norm drift {worst:.2e}", models.len()),
    )
}

fn random_transfer(rng: &mut ChaCha8Rng) -> NoiseTransfer {
    let n = rng.random_range(1..=4);
    let mut poles = Vec::new();
    while poles.len() < n {
        let re = -rng.random_range(0.1..3.0);
        if n - poles.len() >= 2 && rng.random_bool(0.5) {
            let im = rng.random_range(0.2..4.0);
            poles.push(Complex64::new(re, im));
            poles.push(Complex64::new(re, -im));
        } else {
            poles.push(Complex64::new(re, 0.0));
        }
    }
    let m = rng.random_range(0..n);
    let zeros: Vec<Complex64> = (0..m)
        .map(|_| {
            let v = rng.random_range(0.1..3.0);
            Complex64::new(if rng.random_bool(0.5) { v } else { -v }, 0.0)
        })
        .collect();
    let gain = rng.random_range(0.5..2.0);
    let mut beta: Vec<f64> = poly::from_roots(&zeros).iter().map(|c| c * gain).collect();
    while beta.len() < n {
        beta.insert(0, 0.0);
    }
    let den = poly::from_roots(&poles);
    NoiseTransfer::new(beta, den[1..].to_vec()).unwrap()
}

fn factorization_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0_f64;
    let cases = 40;
    for _ in 0..cases {
        let tf = random_transfer(&mut rng);
        let psd = RationalPsd::from_transfer(&tf).map_err(|e| e.to_string())?;
        for sel in [ZeroSelection::MinimumPhase, ZeroSelection::MaximumPhase] {
            let g = spectral_factorize(&psd, &sel).map_err(|e| e.to_string())?;
            if g.poles().iter().any(|p| p.re >= 0.0) {
                return Err("factor is not stable".into());
            }
            for k in 0..100 {
                let w = 10f64.powf(-2.0 + 4.0 * k as f64 / 99.0);
                worst = worst.max(rel_err(g.magnitude_sq(w), psd.eval(w)));
            }
        }
    }
    ensure(
        worst < 1e-8,
        format!("{cases} random PSDs, both zero selections, 100 frequencies each, worst {worst:.2e}"),
    )
}

fn charpoly() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut count = 0;
    for n in 1..=8 {
        for _ in 0..10 {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3.0..3.0));
            let (den, _) = faddeev_leverrier(&a);
            let want = poly::from_roots(&eigenvalues(&a));
            if !rel_close(&den, &want, 1e-8) {
                return Err(format!("dim {n}: {den:?} vs {want:?}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} random matrices of dimension 1 to 8"))
}

fn welch_tracks_theory() -> Result<String, String> {
    let exp = two_qubit_experiment();
    let chk = exp.noise_check().map_err(|e| e.to_string())?;
    let positive: Vec<usize> = (0..chk.omega.len()).filter(|&i| chk.omega[i] > 0.0).collect();
    let lo = chk.omega[positive[0]].log10();
    let hi = chk.omega[*positive.last().unwrap()].log10();
    let mid = 0.5 * (lo + hi);
    let band = |w: f64| (w.log10() - mid).abs() <= 1.0;
    let mut worst = 0.0_f64;
    let mut used = 0;
    for &i in positive.iter().filter(|&&i| band(chk.omega[i])) {
        for est in [chk.welch_realization[i], chk.welch_tf[i]] {
            worst = worst.max((10.0 * (est / chk.theory[i]).log10()).abs());
        }
        used += 1;
    }
    ensure(
        worst <= 6.0,
        format!(
            "{used} bins in omega [{:.3}, {:.3}], worst deviation {worst:.2} dB over both sampling routes",
            10f64.powf(mid - 1.0),
            10f64.powf(mid + 1.0)
        ),
    )
}

fn main() {
    println!();
    let mut suite = Suite {
        checked: 0,
        failed: Vec::new(),
    };
    let sec = Duration::from_secs;
    suite.check("1 spectral factorization", sec(1), factorization);
    suite.check("2 canonical realization", sec(1), canonical_form);
    suite.check("3 two-qubit model", sec(1), two_qubit_model);
    suite.check("4 order detection", sec(1), order_detection);
    suite.check("5 parameter recovery", sec(30), recovery);
    suite.check("6 baseline bias", sec(30), baseline_bias);
    let props: Vec<(&str, Check)> = vec![
        ("7a ERA round trip", era_round_trip),
        ("7b similarity invariance", similarity),
        ("7c coherence norm", coherence_norm),
        ("7d factorization identity", factorization_identity),
        ("7e characteristic polynomial", charpoly),
        ("7f Welch vs theory", welch_tracks_theory),
    ];
    let mut total = Duration::ZERO;
    for (id, f) in props {
        total += suite.check(id, sec(60), f);
    }
    suite.check("7 property suite runtime", sec(60), || Ok(format!("{:.3} s in total", total.as_secs_f64())));
    if total > sec(60) {
        suite.failed.push("7 property suite runtime".into());
    }
    if !suite.failed.is_empty() {
        eprintln!("failed: {:?}", suite.failed);
        std::process::exit(1);
    }
    println!("all {} checks passed", suite.checked);
}
