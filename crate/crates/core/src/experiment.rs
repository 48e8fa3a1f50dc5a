//! Config-driven pipelines behind the `qhid` subcommands.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::config::{ExperimentConfig, NoiseConfig, NoiseOrder};
use crate::error::{Error, Result};
use crate::liealg::{gell_mann_basis, pauli_basis, BasisSet};
use crate::noisemodel::{
    canonical_realization, observer_realization, sample_colored_noise, welch_psd, NoiseRealization, NoiseSpec,
    NoiseTransfer, RationalPsd,
};
use crate::statespace::{augment, discretize, simulate, AugmentedModel, FiltrationMode, StateSpaceModel, Trajectory};
use crate::template::{parameter_spec, NoiseLayout, QuantumTemplate, Term};
use crate::tfmatch::{
    identify_from_realization, realize, transfer_coeffs, IdentificationResult, IdentifyOptions, ParameterSpec,
    SolveOptions,
};

/// A validated config with its basis, template and noise source resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub template: Arc<QuantumTemplate>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Quantum output plus noise expectation plus shot noise.
    pub measured: Trajectory,
    /// Quantum output alone.
    pub quantum: Trajectory,
    pub truth: AugmentedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCheck {
    pub omega: Vec<f64>,
    pub theory: Vec<f64>,
    pub welch_tf: Vec<f64>,
    pub welch_realization: Vec<f64>,
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Io(_) => e,
        other => Error::Config(other.to_string()),
    }
}

pub fn build_basis(config: &ExperimentConfig) -> Result<BasisSet> {
    match (config.system.qubits, config.system.dim) {
        (Some(q), _) => pauli_basis(q),
        (None, Some(n)) => gell_mann_basis(n),
        (None, None) => Err(Error::Config("system.qubits or system.dim is required".into())),
    }
    .map_err(as_config)
}

fn build_noise(cfg: &NoiseConfig) -> Result<NoiseSpec> {
    if let (Some(num), Some(den)) = (&cfg.psd_num, &cfg.psd_den) {
        let psd = RationalPsd::new(num, den)?;
        return NoiseSpec::from_psd(psd, &cfg.zero_selection.resolve()?, cfg.psd_time_unit, &cfg.xi0);
    }
    if let (Some(beta), Some(alpha)) = (&cfg.beta, &cfg.alpha) {
        let tf = NoiseTransfer::new(beta.clone(), alpha.clone())?;
        let realization = canonical_realization(&tf, &cfg.xi0)?;
        return Ok(NoiseSpec {
            psd: None,
            transfer: tf,
            realization,
        });
    }
    if let (Some(e), Some(g)) = (&cfg.e, &cfg.g) {
        let n = e.len();
        if e.iter().any(|r| r.len() != n) || g.len() != n || cfg.xi0.len() != n {
            return Err(Error::Config(format!("noise.e must be {n}x{n} with g and xi0 of length {n}")));
        }
        let e = DMatrix::from_row_iterator(n, n, e.iter().flatten().copied());
        let g = DMatrix::from_row_slice(1, n, g);
        let mut f = DVector::zeros(n);
        if n > 0 {
            f[n - 1] = 1.0;
        }
        let tc = transfer_coeffs(&e, &g, &f)?;
        let tf = NoiseTransfer::new(tc.num[0].clone(), tc.den[1..].to_vec())?;
        return Ok(NoiseSpec {
            psd: None,
            transfer: tf,
            realization: NoiseRealization {
                e,
                f,
                g,
                xi0: DVector::from_column_slice(&cfg.xi0),
            },
        });
    }
    Err(Error::Config("noise source is not specified".into()))
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let basis = build_basis(&config)?;
        let terms: Vec<Term> = config
            .system
            .terms
            .iter()
            .map(|t| Term {
                op: t.op.clone(),
                scale: t.scale,
                param: t.param.clone(),
            })
            .collect();
        let template = QuantumTemplate::new(basis, &terms, &config.system.observables, &config.system.initial)
            .map_err(as_config)?;
        let noise = config
            .noise
            .as_ref()
            .map(build_noise)
            .transpose()
            .map_err(as_config)?;
        Ok(Self {
            config,
            template: Arc::new(template),
            noise,
        })
    }

    pub fn mode(&self) -> FiltrationMode {
        self.config.system.filtration.into()
    }

    /// Hamiltonian parameter values; every one must be known.
    pub fn truth_values(&self) -> Result<Vec<f64>> {
        let known = self.config.param_values();
        self.template
            .param_names()
            .iter()
            .map(|n| {
                known.get(n).copied().ok_or_else(|| {
                    Error::Config(format!("parameter {n} is unknown; simulation needs every parameter fixed"))
                })
            })
            .collect()
    }

    pub fn quantum_truth(&self) -> Result<StateSpaceModel> {
        self.template.model(&self.truth_values()?, self.mode())
    }

    pub fn ground_truth(&self) -> Result<AugmentedModel> {
        let q = self.quantum_truth()?;
        let noise = match &self.noise {
            Some(n) => n.realization.as_model(),
            None => NoiseLayout::None.model(&[])?,
        };
        augment(&q, &noise)
    }

    pub fn simulate(&self) -> Result<Simulation> {
        let s = &self.config.sampling;
        let steps = s.steps();
        let truth = self.ground_truth()?;
        let measured = simulate(&discretize(&truth.model, s.dt)?, steps, s.shot_sigma, s.seed)?;
        let mut quantum = simulate(&discretize(&self.quantum_truth()?, s.dt)?, steps, 0.0, 0)?;
        quantum.channel_names = quantum.channel_names.iter().map(|n| format!("quantum_{n}")).collect();
        Ok(Simulation {
            measured,
            quantum,
            truth,
        })
    }

    pub fn identify_options(&self) -> IdentifyOptions {
        let id = &self.config.identify;
        IdentifyOptions {
            r: id.r,
            s: id.s,
            gap_ratio: id.gap_ratio,
            order: id.order,
            max_rate: id.max_rate,
            solve: SolveOptions {
                starts: id.starts,
                seed: id.seed,
                tol: id.tol,
                max_iter: id.max_iter,
                ..SolveOptions::default()
            },
        }
    }

    /// Dimension of the accessible set used during identification.
    pub fn quantum_dim(&self) -> Result<usize> {
        let known = self.config.known_params();
        let names = self.template.param_names();
        let free: Vec<bool> = names.iter().map(|n| !known.contains_key(n)).collect();
        let base: Vec<f64> = names.iter().map(|n| known.get(n).copied().unwrap_or(0.0)).collect();
        Ok(self.template.structural_accessible(&base, &free, self.mode())?.len())
    }

    pub fn parameter_spec(&self, layout: NoiseLayout) -> Result<ParameterSpec> {
        parameter_spec(
            self.template.clone(),
            &self.config.known_params(),
            layout,
            &self.config.bounds(),
            self.mode(),
        )
    }

    pub fn identify(&self, traj: &Trajectory) -> Result<IdentificationResult> {
        let expected = self.config.system.observables.len();
        if traj.channels() != expected {
            return Err(Error::Config(format!(
                "trajectory has {} output channels, config lists {expected} observables",
                traj.channels()
            )));
        }
        let opts = self.identify_options();
        let real = realize(traj, &opts)?;
        let k = self.quantum_dim()?;
        let n = match &self.config.identify.noise_order {
            NoiseOrder::Fixed(n) => *n,
            NoiseOrder::Named(_) => real.selection.order.checked_sub(k).ok_or_else(|| {
                Error::Spec(format!(
                    "data realization has order {} but the accessible set alone has {k} states",
                    real.selection.order
                ))
            })?,
        };
        let layout = self.config.identify.noise_layout.with_order(n);
        let spec = self.parameter_spec(layout)?;
        identify_from_realization(real, &spec, &opts.solve)
    }

    pub fn noise_check(&self) -> Result<NoiseCheck> {
        let noise = self
            .noise
            .as_ref()
            .ok_or_else(|| Error::Config("noise-check needs a [noise] section".into()))?;
        let cfg = self.config.noise.as_ref().expect("noise spec implies config");
        let dt = self.config.sampling.dt;
        let seed = self.config.sampling.seed;
        let n = noise.realization.order();
        let real = noise.realization.clone().with_xi0(DVector::zeros(n))?;
        let via_real = sample_colored_noise(&real, dt, cfg.check_steps, seed)?;
        let via_tf = sample_colored_noise(&observer_realization(&noise.transfer), dt, cfg.check_steps, seed.wrapping_add(1))?;
        let w_real = welch_psd(&via_real.channel(0), dt, cfg.welch_segment, 0.5)?;
        let w_tf = welch_psd(&via_tf.channel(0), dt, cfg.welch_segment, 0.5)?;
        let theory = w_real.omega.iter().map(|&w| noise.theoretical(w)).collect();
        Ok(NoiseCheck {
            omega: w_real.omega,
            theory,
            welch_tf: w_tf.density,
            welch_realization: w_real.density,
        })
    }
}

/// Labels, normalization and nonzero structure constants.
pub fn describe_basis(basis: &BasisSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[dim] {}", basis.dim());
    let _ = writeln!(out, "[elements] {}", basis.len());
    let _ = writeln!(out, "[norm] {:.16e}", basis.norm());
    let _ = writeln!(out, "[labels]");
    for (i, l) in basis.labels().iter().enumerate() {
        let _ = writeln!(out, "{i} {l}");
    }
    let _ = writeln!(out, "[structure] j k l imag(C_jkl)");
    let s = basis.structure();
    let m = basis.len();
    for j in 0..m {
        for k in 0..m {
            for l in 0..m {
                let c = s.get(j, k, l);
                if c.norm() > 1e-12 {
                    let _ = writeln!(out, "{} {} {} {:.16e}", basis.label(j), basis.label(k), basis.label(l), c.im);
                }
            }
        }
    }
    out
}

/// Text sidecar for a simulation: parameters, noise transfer and the
/// augmented model.
pub fn describe_truth(exp: &Experiment, truth: &AugmentedModel) -> Result<String> {
    let mut out = String::new();
    let names = exp.template.param_names();
    for (n, v) in names.iter().zip(exp.truth_values()?) {
        let _ = writeln!(out, "[param] {n} {v:.16e}");
    }
    let _ = writeln!(out, "[quantum_dim] {}", truth.quantum_dim);
    let _ = writeln!(out, "[noise_dim] {}", truth.noise_dim);
    if let Some(n) = &exp.noise {
        let b: Vec<String> = n.transfer.beta.iter().map(|v| format!("{v:.16e}")).collect();
        let a: Vec<String> = n.transfer.alpha.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "[noise_beta] {}", b.join(" "));
        let _ = writeln!(out, "[noise_alpha] {}", a.join(" "));
    }
    out.push_str(&crate::io::format_model(&truth.model));
    Ok(out)
}
