//! Dilation group action on `H^s(ℝ)`, edge spaces `W^s(ℝ, H^s(ℝ))`, twisted
//! symbol seminorms and the Fourier-multiplier reductions `b^μ(η) = Op_x(p)(η)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{bracket, bracket1, envelope_fit, fft_forward, fft_index, partial, power_fit, CMat, PowerFit, C64};
use crate::scales::{pi_exponent, BOUNDED_SLACK};

#[derive(Debug, Error, PartialEq)]
pub enum TwistedError {
    #[error("dilation factor must be positive (got {0})")]
    NonPositiveLambda(f64),
    #[error("grid function has {got} samples, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("multiplier vanishes on the grid")]
    SingularMultiplier,
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Uniform periodic grid `t_j = -L/2 + j L / n` on the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub length: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(length: f64, n: usize) -> Result<Self, TwistedError> {
        if !(length > 0.0) || n < 8 {
            return Err(TwistedError::InvalidRequest(format!("bad line grid ({length}, {n})")));
        }
        Ok(Self { length, n })
    }

    pub fn dt(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dt()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.t(j)).collect()
    }

    /// Angular frequency of FFT bin `k`.
    pub fn freq(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * fft_index(k, self.n) as f64 / self.length
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.freq(k)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> C64) -> Vec<C64> {
        (0..self.n).map(|j| f(self.t(j))).collect()
    }

    /// Continuous Fourier transform samples `û(τ_k) ≈ ∫ e^{-iτ_k t} u(t) dt`.
    pub fn spectrum(&self, u: &[C64]) -> Vec<C64> {
        let mut v = u.to_vec();
        fft_forward(&mut v);
        let t0 = self.t(0);
        let dt = self.dt();
        v.iter_mut()
            .enumerate()
            .for_each(|(k, x)| *x *= C64::from_polar(dt, -self.freq(k) * t0));
        v
    }

    fn check(&self, u: &[C64]) -> Result<(), TwistedError> {
        if u.len() != self.n {
            return Err(TwistedError::LengthMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupAction {
    /// `(κ_λ u)(t) = λ^{1/2} u(λ t)`.
    Dilation,
    Trivial,
}

impl GroupAction {
    /// Effective dilation acting on the inner variable.
    fn factor(&self, lambda: f64) -> f64 {
        match self {
            GroupAction::Dilation => lambda,
            GroupAction::Trivial => 1.0,
        }
    }
}

/// Applies `κ_λ` by evaluating the band-limited interpolant of `u` at `λ t_j`
/// (zero outside the fundamental interval).
pub fn kappa_apply(act: GroupAction, lambda: f64, grid: &LineGrid, u: &[C64]) -> Result<Vec<C64>, TwistedError> {
    if !(lambda > 0.0) {
        return Err(TwistedError::NonPositiveLambda(lambda));
    }
    grid.check(u)?;
    let lam = act.factor(lambda);
    if lam == 1.0 {
        return Ok(u.to_vec());
    }
    let n = grid.n;
    let mut coef = u.to_vec();
    fft_forward(&mut coef);
    let half = 0.5 * grid.length;
    let t0 = grid.t(0);
    let freqs = grid.freqs();
    let nyq = n / 2;
    let scale = lam.sqrt() / n as f64;
    Ok((0..n)
        .into_par_iter()
        .map(|j| {
            let x = lam * grid.t(j);
            if x.abs() >= half {
                return C64::new(0.0, 0.0);
            }
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let ph = freqs[k] * (x - t0);
                if k == nyq {
                    // split Nyquist bin symmetrically so real data stay real
                    acc += coef[k] * C64::new(ph.cos(), 0.0);
                } else {
                    acc += coef[k] * C64::from_polar(1.0, ph);
                }
            }
            acc * scale
        })
        .collect())
}

/// `H^s(ℝ)` norm `((1/2π)∫ ⟨τ⟩^{2s} |û(τ)|^2 dτ)^{1/2}`.
pub fn h_s_norm(grid: &LineGrid, s: f64, u: &[C64]) -> Result<f64, TwistedError> {
    grid.check(u)?;
    let spec = grid.spectrum(u);
    let dtau = 2.0 * std::f64::consts::PI / grid.length;
    Ok((spec
        .iter()
        .enumerate()
        .map(|(k, x)| bracket1(grid.freq(k)).powf(2.0 * s) * x.norm_sqr())
        .sum::<f64>()
        * dtau
        / (2.0 * std::f64::consts::PI))
        .sqrt())
}

pub fn l2_norm(grid: &LineGrid, u: &[C64]) -> f64 {
    (u.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.dt()).sqrt()
}

/// `‖κ_λ‖` on `H^s(ℝ)`, i.e. `sup_σ (⟨λσ⟩/⟨σ⟩)^s`, sampled far beyond any grid band
/// so that the supremum is not truncated.
pub fn kappa_norm(act: GroupAction, s: f64, lambda: f64) -> f64 {
    let lam = act.factor(lambda);
    std::iter::once(0.0)
        .chain(crate::numerics::logspace(1e-4, 1e10, 561))
        .map(|x| (bracket1(lam * x) / bracket1(x)).powf(s))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaGrowth {
    pub s: f64,
    pub c: f64,
    pub m: f64,
    pub fit: PowerFit,
}

/// Fits `‖κ_λ‖_{H^s} ≤ c max(λ, 1/λ)^{M(s)}`.
pub fn kappa_growth_fit(act: GroupAction, s: f64, lambdas: &[f64]) -> KappaGrowth {
    let (ts, ns): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .filter(|&&l| l > 0.0 && (l - 1.0).abs() > 1e-12)
        .map(|&l| (l.max(1.0 / l), kappa_norm(act, s, l)))
        .unzip();
    let fit = envelope_fit(&ts, &ns);
    KappaGrowth {
        s,
        c: fit.constant,
        m: fit.exponent.max(0.0),
        fit,
    }
}

/// Edge space `W^s(ℝ_x, H^s(ℝ_t))` on a product grid; values stored `n_x × n_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpaceSpec {
    pub x: LineGrid,
    pub t: LineGrid,
    pub action: GroupAction,
}

impl EdgeSpaceSpec {
    fn check(&self, u: &CMat) -> Result<(), TwistedError> {
        if u.nrows() != self.x.n || u.ncols() != self.t.n {
            return Err(TwistedError::LengthMismatch {
                expected: self.x.n * self.t.n,
                got: u.nrows() * u.ncols(),
            });
        }
        Ok(())
    }

    /// Two-dimensional continuous Fourier transform samples.
    fn spectrum(&self, u: &CMat) -> CMat {
        let mut out = u.clone();
        for i in 0..self.x.n {
            let row: Vec<C64> = (0..self.t.n).map(|j| out[(i, j)]).collect();
            let s = self.t.spectrum(&row);
            (0..self.t.n).for_each(|j| out[(i, j)] = s[j]);
        }
        for j in 0..self.t.n {
            let col: Vec<C64> = (0..self.x.n).map(|i| out[(i, j)]).collect();
            let s = self.x.spectrum(&col);
            (0..self.x.n).for_each(|i| out[(i, j)] = s[i]);
        }
        out
    }

    /// Weight `⟨ξ⟩^s ⟨τ/λ(ξ)⟩^s` of the edge norm at a frequency pair.
    pub fn weight(&self, s: f64, xi: f64, tau: f64) -> f64 {
        let lam = self.action.factor(bracket1(xi));
        (bracket1(xi) * bracket1(tau / lam)).powf(s)
    }
}

/// `‖u‖_{W^s} = ((2π)^{-2} ∫∫ ⟨ξ⟩^{2s} ⟨τ/⟨ξ⟩⟩^{2s} |û(ξ,τ)|^2 dξ dτ)^{1/2}`, which equals
/// `(∫ ⟨ξ⟩^{2s} ‖κ^{-1}_{⟨ξ⟩} û(ξ)‖^2_{H^s} đξ)^{1/2}` because `κ^{-1}_λ` rescales `τ ↦ τ/λ`.
pub fn edge_norm(spec: &EdgeSpaceSpec, s: f64, u: &CMat) -> Result<f64, TwistedError> {
    spec.check(u)?;
    let sp = spec.spectrum(u);
    let (xf, tf) = (spec.x.freqs(), spec.t.freqs());
    let two_pi = 2.0 * std::f64::consts::PI;
    let dxi = two_pi / spec.x.length;
    let dtau = two_pi / spec.t.length;
    let mut acc = 0.0;
    for (i, &xi) in xf.iter().enumerate() {
        for (j, &tau) in tf.iter().enumerate() {
            acc += spec.weight(2.0 * s, xi, tau) * sp[(i, j)].norm_sqr();
        }
    }
    Ok((acc * dxi * dtau / (two_pi * two_pi)).sqrt())
}

/// Scalar twisted symbol `σ(y, η, τ)` acting on `H^s(ℝ_t)` as a Fourier multiplier in `t`.
#[derive(Clone)]
pub struct TwistedSymbol {
    pub order: f64,
    eval: Arc<dyn Fn(f64, f64, f64) -> C64 + Send + Sync>,
}

impl TwistedSymbol {
    pub fn new(order: f64, eval: Arc<dyn Fn(f64, f64, f64) -> C64 + Send + Sync>) -> Self {
        Self { order, eval }
    }

    /// `⟨η, τ⟩^μ`, the model edge-degenerate symbol.
    pub fn bracket(mu: f64) -> Self {
        Self::new(mu, Arc::new(move |_, eta, tau| C64::new(bracket(&[eta, tau]).powf(mu), 0.0)))
    }

    pub fn eval(&self, y: f64, eta: f64, tau: f64) -> C64 {
        (self.eval)(y, eta, tau)
    }
}

#[derive(Clone, Debug)]
pub struct TwistedGrid {
    pub ys: Vec<f64>,
    pub etas: Vec<f64>,
    pub sigmas: Vec<f64>,
}

/// `sup ⟨η⟩^{-μ+β} ‖κ^{-1}_{⟨η⟩} {∂_y^α ∂_η^β a} κ_{⟨η⟩}‖_{H^s → H^{s-μ}}`; the conjugated
/// multiplier is `σ ↦ ∂a(y, η, ⟨η⟩σ)` and the norm is `sup_σ |·| ⟨σ⟩^{-μ}`.
pub fn twisted_seminorm(a: &TwistedSymbol, mu: f64, alpha: usize, beta: usize, grid: &TwistedGrid) -> Result<f64, TwistedError> {
    let sup = grid
        .etas
        .par_iter()
        .map(|&eta| {
            let lam = bracket1(eta);
            let mut sup: f64 = 0.0;
            for &y in &grid.ys {
                for &sig in &grid.sigmas {
                    let tau = lam * sig;
                    let g = |z: &[f64]| a.eval(z[0], z[1], tau);
                    let d = partial(&g, &[y, eta], &[alpha, beta], 1e-3);
                    let v = lam.powf(-mu + beta as f64) * d.norm() * bracket1(sig).powf(-mu);
                    sup = sup.max(if v.is_nan() { f64::INFINITY } else { v });
                }
            }
            sup
        })
        .reduce(|| 0.0, f64::max);
    if sup.is_finite() {
        Ok(sup)
    } else {
        Err(TwistedError::NonFinite)
    }
}

/// Edge symbols `p(ξ, η, τ)` whose quantisation in `x` gives an order-reducing family on `W^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdgeMultiplier {
    One,
    /// `⟨ξ, η⟩^μ` (scalar in the inner variable).
    Scalar { mu: f64 },
    /// `⟨ξ, η, τ⟩^μ`.
    Full { mu: f64 },
    /// `⟨ξ, η⟩^μ - shift`; may vanish.
    Shifted { mu: f64, shift: f64 },
}

impl EdgeMultiplier {
    pub fn eval(&self, xi: f64, eta: f64, tau: f64) -> f64 {
        match *self {
            EdgeMultiplier::One => 1.0,
            EdgeMultiplier::Scalar { mu } => bracket(&[xi, eta]).powf(mu),
            EdgeMultiplier::Full { mu } => bracket(&[xi, eta, tau]).powf(mu),
            EdgeMultiplier::Shifted { mu, shift } => bracket(&[xi, eta]).powf(mu) - shift,
        }
    }

    pub fn order(&self) -> f64 {
        match *self {
            EdgeMultiplier::One => 0.0,
            EdgeMultiplier::Scalar { mu } | EdgeMultiplier::Full { mu } | EdgeMultiplier::Shifted { mu, .. } => mu,
        }
    }

    /// Pointwise reciprocal, when it is again a member of the list.
    pub fn inverse(&self) -> Option<Self> {
        match *self {
            EdgeMultiplier::One => Some(EdgeMultiplier::One),
            EdgeMultiplier::Scalar { mu } => Some(EdgeMultiplier::Scalar { mu: -mu }),
            EdgeMultiplier::Full { mu } => Some(EdgeMultiplier::Full { mu: -mu }),
            EdgeMultiplier::Shifted { .. } => None,
        }
    }
}

/// Applies `Op_x(p)(η)` to `u(x, t)` as a two-dimensional Fourier multiplier.
pub fn fourier_mult_family(p: &EdgeMultiplier, eta: f64, spec: &EdgeSpaceSpec, u: &CMat) -> Result<CMat, TwistedError> {
    spec.check(u)?;
    let (xf, tf) = (spec.x.freqs(), spec.t.freqs());
    let mut m = CMat::zeros(spec.x.n, spec.t.n);
    for (i, &xi) in xf.iter().enumerate() {
        for (j, &tau) in tf.iter().enumerate() {
            let v = p.eval(xi, eta, tau);
            if v == 0.0 || !v.is_finite() {
                return Err(TwistedError::SingularMultiplier);
            }
            m[(i, j)] = C64::new(v, 0.0);
        }
    }
    let mut w = u.clone();
    fft2(&mut w, true);
    w.component_mul_assign(&m);
    fft2(&mut w, false);
    let n = (spec.x.n * spec.t.n) as f64;
    Ok(w / C64::new(n, 0.0))
}

fn fft2(u: &mut CMat, forward: bool) {
    let run = |v: &mut [C64]| {
        if forward {
            fft_forward(v)
        } else {
            crate::numerics::fft_inverse(v)
        }
    };
    for i in 0..u.nrows() {
        let mut row: Vec<C64> = (0..u.ncols()).map(|j| u[(i, j)]).collect();
        run(&mut row);
        (0..u.ncols()).for_each(|j| u[(i, j)] = row[j]);
    }
    for j in 0..u.ncols() {
        run(u.column_mut(j).as_mut_slice());
    }
}

/// `‖Op_x(p)(η)‖_{W^s → W^{s-ν}}`, computed exactly as a supremum over the frequency grid.
pub fn edge_multiplier_norm(p: &EdgeMultiplier, eta: f64, s: f64, nu: f64, spec: &EdgeSpaceSpec) -> f64 {
    let (xf, tf) = (spec.x.freqs(), spec.t.freqs());
    xf.par_iter()
        .map(|&xi| {
            tf.iter()
                .map(|&tau| p.eval(xi, eta, tau).abs() * spec.weight(s - nu, xi, tau) / spec.weight(s, xi, tau))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistedGrowthReport {
    pub exponent: f64,
    pub pi: f64,
    pub m_s: f64,
    pub m_s_minus_mu: f64,
    pub bound: f64,
    pub w0_exponent: Option<f64>,
    pub pass: bool,
}

/// Growth of `‖b^μ(η)‖_{W^s → W^{s-ν}}` against `π(μ,ν) + M(s) + M(s-μ)`.
pub fn verify_twisted_growth(
    p: &EdgeMultiplier,
    s: f64,
    nu: f64,
    spec: &EdgeSpaceSpec,
    etas: &[f64],
    lambdas: &[f64],
) -> Result<TwistedGrowthReport, TwistedError> {
    let mu = p.order();
    let pi = pi_exponent(mu, nu).map_err(|e| TwistedError::InvalidRequest(e.to_string()))?;
    let big: Vec<f64> = etas.iter().copied().filter(|e| bracket1(*e) >= 2.0).collect();
    let xs: Vec<f64> = big.iter().map(|e| bracket1(*e)).collect();
    let ns: Vec<f64> = big.iter().map(|&e| edge_multiplier_norm(p, e, s, nu, spec)).collect();
    let exponent = power_fit(&xs, &ns).exponent;
    let m_s = kappa_growth_fit(spec.action, s, lambdas).m;
    let m_s_minus_mu = kappa_growth_fit(spec.action, s - mu, lambdas).m;
    let bound = pi + m_s + m_s_minus_mu;
    let w0_exponent = (mu <= 0.0).then(|| {
        let n0: Vec<f64> = big.iter().map(|&e| edge_multiplier_norm(p, e, 0.0, 0.0, spec)).collect();
        power_fit(&xs, &n0).exponent
    });
    let pass = exponent <= bound + 0.1 && w0_exponent.map_or(true, |w| w <= mu + BOUNDED_SLACK);
    Ok(TwistedGrowthReport {
        exponent,
        pi,
        m_s,
        m_s_minus_mu,
        bound,
        w0_exponent,
        pass,
    })
}
