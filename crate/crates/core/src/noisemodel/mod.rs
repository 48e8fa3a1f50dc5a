//! Colored measurement noise: rational PSDs, spectral factorization,
//! controllable canonical realizations, expectation dynamics, and sampled
//! paths for validation.

mod welch;

pub use welch::{welch_psd, PsdEstimate};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, expm};
use crate::poly;
use crate::statespace::{discretize, simulate, StateLabel, StateSpaceModel, Trajectory};

/// Power spectral density `S(ω) = num(ω) / den(ω)` with even polynomials in
/// ω, coefficients highest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPsd {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalPsd {
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        let num = poly::trim(num);
        let den = poly::trim(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidPsd("denominator is identically zero".into()));
        }
        if num.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidPsd("numerator is identically zero".into()));
        }
        for (name, p) in [("numerator", &num), ("denominator", &den)] {
            let d = p.len() - 1;
            for (i, &c) in p.iter().enumerate() {
                if (d - i) % 2 == 1 && c != 0.0 {
                    return Err(Error::InvalidPsd(format!(
                        "{name} has a nonzero odd power ω^{}",
                        d - i
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidPsd(format!("{name} has a non-finite coefficient")));
                }
            }
        }
        if num.len() >= den.len() {
            return Err(Error::InvalidPsd(format!(
                "not strictly proper: numerator degree {} >= denominator degree {}",
                num.len() - 1,
                den.len() - 1
            )));
        }
        let psd = Self { num, den };
        psd.check_nonnegative()?;
        Ok(psd)
    }

    /// PSD `|Γ(iω)|²` of a transfer function.
    pub fn from_transfer(tf: &NoiseTransfer) -> Result<Self> {
        let num_s = tf.numerator();
        let den_s = tf.denominator();
        Self::new(&even_square(&num_s), &even_square(&den_s))
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn eval(&self, omega: f64) -> f64 {
        poly::eval(&self.num, omega) / poly::eval(&self.den, omega)
    }

    /// Characteristic frequency of the denominator, used to place check grids.
    fn scale(&self) -> f64 {
        let d = self.den.len() - 1;
        let r = (self.den[d].abs() / self.den[0].abs()).powf(1.0 / d as f64);
        if r.is_finite() && r > 0.0 {
            r
        } else {
            1.0
        }
    }

    fn check_nonnegative(&self) -> Result<()> {
        if self.num[0] * self.den[0] < 0.0 {
            return Err(Error::InvalidPsd("S(ω) is negative at high frequency".into()));
        }
        let scale = self.scale();
        let grid = std::iter::once(0.0).chain((0..=240).map(|i| scale * 10f64.powf(-6.0 + 0.05 * i as f64)));
        for w in grid {
            let s = self.eval(w);
            if s < 0.0 {
                return Err(Error::InvalidPsd(format!("S({w:e}) = {s:e} < 0")));
            }
        }
        Ok(())
    }

    /// Coefficients of the polynomial in w = ω².
    fn in_omega_squared(p: &[f64]) -> Vec<f64> {
        p.iter().step_by(2).copied().collect()
    }
}

/// N(s)N(−s) written as an even polynomial in ω (s = iω).
fn even_square(p: &[f64]) -> Vec<f64> {
    let d = p.len() - 1;
    let reflected: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(i, &c)| if (d - i) % 2 == 1 { -c } else { c })
        .collect();
    let prod = poly::mul(p, &reflected);
    // prod is even in s; s^{2k} = (−1)^k ω^{2k}
    let deg = prod.len() - 1;
    prod.iter()
        .enumerate()
        .map(|(i, &c)| {
            let power = deg - i;
            if power % 2 == 1 {
                0.0
            } else if (power / 2) % 2 == 1 {
                -c
            } else {
                c
            }
        })
        .collect()
}

/// Strictly proper SISO transfer function
/// `Γ(s) = (β₁ s^{n−1} + … + β_n) / (s^n + α₁ s^{n−1} + … + α_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTransfer {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl NoiseTransfer {
    pub fn new(beta: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if beta.len() != alpha.len() {
            return Err(Error::Shape(format!(
                "{} numerator and {} denominator coefficients",
                beta.len(),
                alpha.len()
            )));
        }
        let tf = Self { beta, alpha };
        if let Some(bad) = tf.poles().into_iter().find(|p| p.re >= 0.0) {
            return Err(Error::InvalidPsd(format!("denominator is not Hurwitz: pole {bad}")));
        }
        Ok(tf)
    }

    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    /// Monic denominator, highest degree first.
    pub fn denominator(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.alpha.iter().copied()).collect()
    }

    pub fn numerator(&self) -> Vec<f64> {
        self.beta.clone()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly::roots(&self.denominator())
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly::eval_c(&self.beta, s) / poly::eval_c(&self.denominator(), s)
    }

    /// |Γ(iω)|².
    pub fn magnitude_sq(&self, omega: f64) -> f64 {
        self.eval(Complex64::new(0.0, omega)).norm_sqr()
    }

    /// Γ'(s') = Γ(s'/τ): the same dynamics with time measured in units of τ.
    pub fn rescale_time(&self, tau: f64) -> Self {
        let scale = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(k, c)| c * tau.powi(k as i32 + 1))
                .collect()
        };
        Self {
            beta: scale(&self.beta),
            alpha: scale(&self.alpha),
        }
    }
}

/// How the zeros of Γ are picked from the ± pairs of N(s)N(−s).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ZeroSelection {
    /// All zeros in the open left half-plane.
    #[default]
    MinimumPhase,
    /// All zeros in the open right half-plane.
    MaximumPhase,
    /// One sign per zero group (a real ω²-root or a conjugate pair of them),
    /// groups ordered by |ω²-root| ascending: negative picks Re < 0.
    Signs(Vec<i8>),
}

/// Factorizes `S(ω) = Γ(s)Γ(−s)|_{s=iω}` with a stable Γ.
pub fn spectral_factorize(psd: &RationalPsd, selection: &ZeroSelection) -> Result<NoiseTransfer> {
    let den_w = RationalPsd::in_omega_squared(&psd.den);
    let num_w = RationalPsd::in_omega_squared(&psd.num);

    let mut poles = Vec::new();
    for w in poly::roots(&den_w) {
        let s = half_plane_root(w, "pole")?;
        poles.push(-s);
    }

    let zero_w = poly::roots(&num_w);
    let groups = group_conjugates(&zero_w);
    let signs: Vec<i8> = match selection {
        ZeroSelection::MinimumPhase => vec![-1; groups.len()],
        ZeroSelection::MaximumPhase => vec![1; groups.len()],
        ZeroSelection::Signs(v) => {
            if v.len() != groups.len() {
                return Err(Error::Config(format!(
                    "zero selection lists {} signs but the PSD has {} zero groups",
                    v.len(),
                    groups.len()
                )));
            }
            v.clone()
        }
    };
    let mut zeros = Vec::new();
    for (group, sign) in groups.iter().zip(signs) {
        for &w in group {
            let s = half_plane_root(w, "zero")?;
            zeros.push(if sign < 0 { -s } else { s });
        }
    }

    let gain = (psd.num[0] / psd.den[0]).sqrt();
    let den = poly::from_roots(&poles);
    let num: Vec<f64> = poly::from_roots(&zeros).into_iter().map(|c| c * gain).collect();
    let n = den.len() - 1;
    let mut beta = vec![0.0; n - num.len()];
    beta.extend(num);
    NoiseTransfer::new(beta, den[1..].to_vec())
}

/// Root of s² = −w with Re s > 0; roots on the imaginary axis are rejected.
fn half_plane_root(w: Complex64, what: &str) -> Result<Complex64> {
    let s = (-w).sqrt();
    if s.re.abs() <= 1e-6 * s.norm() || s.norm() == 0.0 {
        return Err(Error::DegeneratePsd(format!(
            "{what} at s = ±{s} lies on the imaginary axis"
        )));
    }
    Ok(if s.re < 0.0 { -s } else { s })
}

fn group_conjugates(ws: &[Complex64]) -> Vec<Vec<Complex64>> {
    let scale = ws.iter().fold(1e-300_f64, |m, w| m.max(w.norm()));
    let mut used = vec![false; ws.len()];
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for i in 0..ws.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let w = ws[i];
        if w.im.abs() <= 1e-12 * scale {
            groups.push(vec![Complex64::new(w.re, 0.0)]);
            continue;
        }
        let partner = (0..ws.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (ws[a] - w.conj())
                    .norm()
                    .partial_cmp(&(ws[b] - w.conj()).norm())
                    .unwrap()
            });
        match partner {
            Some(j) => {
                used[j] = true;
                let rep = if w.im > 0.0 { w } else { w.conj() };
                groups.push(vec![rep, rep.conj()]);
            }
            None => groups.push(vec![w]),
        }
    }
    groups.sort_by(|a, b| {
        a[0].norm()
            .partial_cmp(&b[0].norm())
            .unwrap()
            .then(a[0].arg().partial_cmp(&b[0].arg()).unwrap())
    });
    groups
}

/// Controllable canonical realization `ξ' = Eξ + Fη`, `v = Gξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
    pub g: DMatrix<f64>,
    pub xi0: DVector<f64>,
}

impl NoiseRealization {
    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    /// Expectation model (E, G, ξ0).
    pub fn as_model(&self) -> StateSpaceModel {
        let labels = (0..self.order()).map(StateLabel::Noise).collect();
        StateSpaceModel::new(self.e.clone(), self.g.clone(), self.xi0.clone(), labels)
            .expect("realization dimensions are consistent")
    }

    pub fn with_xi0(mut self, xi0: DVector<f64>) -> Result<Self> {
        if xi0.len() != self.order() {
            return Err(Error::Shape(format!(
                "initial noise state has {} entries, realization order is {}",
                xi0.len(),
                self.order()
            )));
        }
        self.xi0 = xi0;
        Ok(self)
    }
}

pub fn canonical_realization(tf: &NoiseTransfer, xi0: &[f64]) -> Result<NoiseRealization> {
    let n = tf.order();
    if xi0.len() != n {
        return Err(Error::Shape(format!(
            "initial noise state has {} entries, transfer order is {n}",
            xi0.len()
        )));
    }
    let mut e = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        e[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        e[(n - 1, j)] = -tf.alpha[n - 1 - j];
    }
    let mut f = DVector::zeros(n);
    if n > 0 {
        f[n - 1] = 1.0;
    }
    let g = DMatrix::from_iterator(1, n, tf.beta.iter().rev().copied());
    Ok(NoiseRealization {
        e,
        f,
        g,
        xi0: DVector::from_column_slice(xi0),
    })
}

/// Observer canonical form of the same transfer function (the dual of the
/// controllable form). Used as an independent route when sampling Γ.
pub fn observer_realization(tf: &NoiseTransfer) -> NoiseRealization {
    let n = tf.order();
    let ctrl = canonical_realization(tf, &vec![0.0; n]).expect("sized by construction");
    NoiseRealization {
        e: ctrl.e.transpose(),
        f: ctrl.g.transpose().column(0).into_owned(),
        g: DMatrix::from_iterator(1, n, ctrl.f.iter().copied()),
        xi0: DVector::zeros(n),
    }
}

/// Expectation trajectory v̄(k) = G exp(E dt)^k ξ0.
pub fn noise_expectation(real: &NoiseRealization, dt: f64, steps: usize) -> Result<Trajectory> {
    let d = discretize(&real.as_model(), dt)?;
    let mut t = simulate(&d, steps, 0.0, 0)?;
    t.channel_names = vec!["v".into()];
    Ok(t)
}

/// Sample path driven by white noise of unit intensity: i.i.d. standard
/// normals scaled by 1/√dt, held over each sample interval.
pub fn sample_colored_noise(
    real: &NoiseRealization,
    dt: f64,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let n = real.order();
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Shape(format!("sample interval must be positive, got {dt}")));
    }
    let fastest = eigenvalues(&real.e)
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.im.abs()));
    if dt * fastest >= std::f64::consts::PI {
        return Err(Error::Aliasing(format!(
            "dt·max|Im eig(E)| = {:.4} ≥ π; reduce the sample interval",
            dt * fastest
        )));
    }
    // exact zero-order-hold discretization of (E, F)
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(&real.e * dt));
    m.view_mut((0, n), (n, 1)).copy_from(&(&real.f * dt));
    let md = expm(&m);
    let ed = md.view((0, 0), (n, n)).into_owned();
    let bd = md.view((0, n), (n, 1)).column(0).into_owned();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 1.0 / dt.sqrt();
    let mut xi = real.xi0.clone();
    let mut out = DMatrix::zeros(steps, 1);
    for k in 0..steps {
        out[(k, 0)] = (&real.g * &xi)[0];
        let eta: f64 = StandardNormal.sample(&mut rng);
        xi = &ed * xi + &bd * (eta * amp);
    }
    Trajectory::new(dt, out, vec!["v".into()])
}

/// Everything known about a configured noise source.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub psd: Option<RationalPsd>,
    pub transfer: NoiseTransfer,
    pub realization: NoiseRealization,
}

impl NoiseSpec {
    /// PSD → Γ → canonical realization, with Γ rescaled to a time unit of
    /// `time_unit` (in the PSD's own time unit).
    pub fn from_psd(
        psd: RationalPsd,
        selection: &ZeroSelection,
        time_unit: f64,
        xi0: &[f64],
    ) -> Result<Self> {
        let tf = spectral_factorize(&psd, selection)?;
        let tf = if time_unit != 1.0 { tf.rescale_time(time_unit) } else { tf };
        let realization = canonical_realization(&tf, xi0)?;
        Ok(Self {
            psd: Some(psd),
            transfer: tf,
            realization,
        })
    }

    /// Theoretical PSD in the simulation time unit.
    pub fn theoretical(&self, omega: f64) -> f64 {
        self.transfer.magnitude_sq(omega)
    }
}
