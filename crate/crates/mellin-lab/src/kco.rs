//! Kernel cut-off `V(φ)`: localising the θ-kernel of a line symbol to produce a symbol
//! holomorphic in `ζ = ρ + iδ`.
//!
//! Convention: `a(ρ) = ∫ e^{-iρθ} k(θ) dθ`, so `V(φ)a(ζ) = ∫ e^{-iθζ} φ(θ) k(θ) dθ` and
//! the strip value at `ρ + iδ` is the line value for `φ_δ(θ) = e^{θδ} φ(θ)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    bracket1, derivative, fft_forward, fft_index, fft_inverse, linspace, logspace, op_norm, partial, power_fit, smoothstep, CMat, PowerFit,
    C64, I,
};

#[derive(Debug, Error, PartialEq)]
pub enum KcoError {
    #[error("invalid θ grid: {0}")]
    BadGrid(String),
    #[error("invalid cutoff: {0}")]
    BadCutoff(String),
    #[error("θ-kernel not resolved: relative edge mass {0:.3e}")]
    Aliasing(f64),
    #[error("δ = {delta} outside the configured strip |δ| ≤ {max}")]
    StripRange { delta: f64, max: f64 },
    #[error("non-finite symbol value at ρ = {0}")]
    NonFinite(f64),
    #[error("expansion length K must be at least 1")]
    BadOrder,
}

/// Periodic grid `θ_j = -L + j·2L/n`; its dual frequencies are `ρ_k = π k / L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGrid {
    pub half_width: f64,
    pub n: usize,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self { half_width: 8.0, n: 8192 }
    }
}

impl ThetaGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self, KcoError> {
        if !(half_width.is_finite() && half_width > 0.0) || n < 16 || n % 2 != 0 {
            return Err(KcoError::BadGrid(format!("half width {half_width}, {n} points")));
        }
        Ok(Self { half_width, n })
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dtheta()
    }

    pub fn rho(&self, k: usize) -> f64 {
        std::f64::consts::PI * fft_index(k, self.n) as f64 / self.half_width
    }

    pub fn rho_max(&self) -> f64 {
        std::f64::consts::PI / self.dtheta()
    }

    /// Frequencies far enough from `±ρ_max` that periodisation does not reach them.
    pub fn rho_valid(&self) -> f64 {
        0.25 * self.rho_max()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KcoConfig {
    pub grid: ThetaGrid,
    pub delta_max: f64,
    pub edge_tol: f64,
}

impl Default for KcoConfig {
    fn default() -> Self {
        Self {
            grid: ThetaGrid::default(),
            delta_max: 3.0,
            edge_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CutoffShape {
    /// `exp(1 - 1/(1 - (θ/T)²))` on `|θ| < T`.
    Bump { support: f64 },
    /// Identically 1 on `|θ| ≤ flat`, C^∞ ramp down to 0 at `|θ| = support`.
    Flat { support: f64, flat: f64 },
}

/// `φ(θ) = e^{tilt·θ}·shape(θ)`, so `φ(0) = 1` and `φ'(0) = tilt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffFunction {
    pub shape: CutoffShape,
    #[serde(default)]
    pub tilt: f64,
}

impl Default for CutoffFunction {
    fn default() -> Self {
        Self::bump(1.0)
    }
}

impl CutoffFunction {
    pub fn bump(support: f64) -> Self {
        Self {
            shape: CutoffShape::Bump { support },
            tilt: 0.0,
        }
    }

    pub fn flat(support: f64, flat: f64) -> Self {
        Self {
            shape: CutoffShape::Flat { support, flat },
            tilt: 0.0,
        }
    }

    pub fn with_tilt(self, tilt: f64) -> Self {
        Self { tilt, ..self }
    }

    pub fn validate(&self) -> Result<(), KcoError> {
        let ok = match self.shape {
            CutoffShape::Bump { support } => support.is_finite() && support > 0.0,
            CutoffShape::Flat { support, flat } => support.is_finite() && flat >= 0.0 && flat < support,
        };
        if ok && self.tilt.is_finite() {
            Ok(())
        } else {
            Err(KcoError::BadCutoff(format!("{self:?}")))
        }
    }

    pub fn support(&self) -> f64 {
        match self.shape {
            CutoffShape::Bump { support } | CutoffShape::Flat { support, .. } => support,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let shape = match self.shape {
            CutoffShape::Bump { support } => {
                let x = theta / support;
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                }
            }
            CutoffShape::Flat { support, flat } => {
                if theta.abs() <= flat {
                    1.0
                } else {
                    smoothstep((support - theta.abs()) / (support - flat))
                }
            }
        };
        if shape == 0.0 {
            0.0
        } else {
            (self.tilt * theta).exp() * shape
        }
    }

    /// Taylor coefficients of `φ` at 0 up to (excluding) degree `k`.
    pub fn taylor(&self, k: usize) -> Vec<f64> {
        let shape: Vec<f64> = match self.shape {
            CutoffShape::Bump { support } => {
                // log φ = -Σ_{m≥1} x^{2m}; exponentiate with n f_n = Σ j g_j f_{n-j}
                let g = |j: usize| if j > 0 && j % 2 == 0 { -1.0 } else { 0.0 };
                let mut f = vec![1.0];
                for n in 1..k {
                    let s: f64 = (1..=n).map(|j| j as f64 * g(j) * f[n - j]).sum();
                    f.push(s / n as f64);
                }
                f.iter().enumerate().map(|(n, c)| c / support.powi(n as i32)).collect()
            }
            CutoffShape::Flat { .. } => (0..k).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect(),
        };
        let mut fact = 1.0;
        let tilt: Vec<f64> = (0..k)
            .map(|i| {
                if i > 0 {
                    fact *= i as f64;
                }
                self.tilt.powi(i as i32) / fact
            })
            .collect();
        (0..k).map(|n| (0..=n).map(|i| shape[i] * tilt[n - i]).sum()).collect()
    }

    /// `φ^{(k)}(0)` for `k < count`.
    pub fn derivatives_at_zero(&self, count: usize) -> Vec<f64> {
        let mut fact = 1.0;
        self.taylor(count)
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }
}

type LineFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// A (matrix-valued) symbol `a(ρ)` of order `μ` on the real line.
#[derive(Clone)]
pub struct LineSymbol {
    pub order: f64,
    pub dim: usize,
    f: LineFn,
}

impl fmt::Debug for LineSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LineSymbol(order {}, dim {})", self.order, self.dim)
    }
}

impl LineSymbol {
    pub fn new(order: f64, dim: usize, f: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        Self {
            order,
            dim,
            f: Arc::new(f),
        }
    }

    pub fn scalar(order: f64, f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self::new(order, 1, move |rho| CMat::from_element(1, 1, f(rho)))
    }

    /// `(c² + ρ²)^{ν/2}`, of order `Re ν`.
    pub fn bracket_power(c: f64, nu: C64) -> Self {
        Self::scalar(nu.re, move |rho| C64::new(c * c + rho * rho, 0.0).powc(nu / 2.0))
    }

    pub fn eval(&self, rho: f64) -> CMat {
        (self.f)(rho)
    }

    pub fn linear_combination(&self, ca: C64, other: &LineSymbol, cb: C64) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(self.order.max(other.order), self.dim, move |rho| a.eval(rho) * ca + b.eval(rho) * cb)
    }
}

/// `V(φ)a`, stored as the cut-off kernel `φ(θ_j) k(θ_j) dθ` on the nodes where `φ ≠ 0`.
#[derive(Clone, Debug)]
pub struct HoloSymbol {
    pub order: f64,
    pub dim: usize,
    pub grid: ThetaGrid,
    pub delta_max: f64,
    pub cutoff: Option<CutoffFunction>,
    nodes: Vec<f64>,
    weights: Vec<CMat>,
}

impl HoloSymbol {
    /// Value at any `ζ`; no strip check.
    pub fn eval(&self, zeta: C64) -> CMat {
        self.eval_derivative(zeta, 0)
    }

    /// `∂_ρ^k` of the extension at `ζ`, i.e. the kernel sum weighted by `(-iθ)^k`.
    pub fn eval_derivative(&self, zeta: C64, k: u32) -> CMat {
        let mut acc = CMat::zeros(self.dim, self.dim);
        for (&t, w) in self.nodes.iter().zip(&self.weights) {
            let c = (-I * t * zeta).exp() * (-I * t).powu(k);
            acc.iter_mut().zip(w.iter()).for_each(|(a, x)| *a += c * x);
        }
        acc
    }

    pub fn evaluate_strip(&self, zeta: C64) -> Result<CMat, KcoError> {
        if zeta.im.abs() > self.delta_max {
            return Err(KcoError::StripRange {
                delta: zeta.im,
                max: self.delta_max,
            });
        }
        Ok(self.eval(zeta))
    }

    /// Line values `(ρ_k, V(φ)a(ρ_k))` on the dual grid, computed by FFT.
    pub fn line_values(&self) -> Vec<(f64, CMat)> {
        let g = self.grid;
        let first = ((self.nodes.first().copied().unwrap_or(0.0) + g.half_width) / g.dtheta()).round() as usize;
        let mut out: Vec<CMat> = vec![CMat::zeros(self.dim, self.dim); g.n];
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut buf = vec![C64::new(0.0, 0.0); g.n];
                for (i, w) in self.weights.iter().enumerate() {
                    buf[first + i] = w[(r, c)];
                }
                fft_forward(&mut buf);
                for (k, x) in buf.into_iter().enumerate() {
                    out[k][(r, c)] = x * (I * g.rho(k) * g.half_width).exp();
                }
            }
        }
        out.into_iter().enumerate().map(|(k, v)| (g.rho(k), v)).collect()
    }

    pub fn kernel(&self) -> impl Iterator<Item = (f64, &CMat)> {
        self.nodes.iter().copied().zip(&self.weights)
    }
}

fn sample_symbol(a: &LineSymbol, grid: &ThetaGrid) -> Result<Vec<CMat>, KcoError> {
    let samples: Vec<CMat> = (0..grid.n).into_par_iter().map(|k| a.eval(grid.rho(k))).collect();
    for (k, m) in samples.iter().enumerate() {
        if m.nrows() != a.dim || m.ncols() != a.dim || m.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(KcoError::NonFinite(grid.rho(k)));
        }
    }
    Ok(samples)
}

/// `k(θ_j) = (1/2L) Σ_k a(ρ_k) e^{iρ_k θ_j}`.
fn theta_kernel(samples: &[CMat], grid: &ThetaGrid, dim: usize) -> Vec<CMat> {
    let mut out = vec![CMat::zeros(dim, dim); grid.n];
    let scale = 1.0 / (2.0 * grid.half_width);
    for r in 0..dim {
        for c in 0..dim {
            let mut buf: Vec<C64> = samples
                .iter()
                .enumerate()
                .map(|(k, m)| m[(r, c)] * (-I * grid.rho(k) * grid.half_width).exp())
                .collect();
            fft_inverse(&mut buf);
            for (j, x) in buf.into_iter().enumerate() {
                out[j][(r, c)] = x * scale;
            }
        }
    }
    out
}

fn max_entry(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Relative kernel mass in the outer 10% of the θ-window, for the smoothly band-limited symbol.
pub fn kernel_edge_mass(a: &LineSymbol, grid: &ThetaGrid) -> Result<f64, KcoError> {
    let samples = sample_symbol(a, grid)?;
    Ok(edge_mass(&samples, grid, a.dim))
}

fn edge_mass(samples: &[CMat], grid: &ThetaGrid, dim: usize) -> f64 {
    let rm = grid.rho_max();
    let tapered: Vec<CMat> = samples
        .iter()
        .enumerate()
        .map(|(k, m)| m * C64::new(1.0 - smoothstep((grid.rho(k).abs() / rm - 0.5) / 0.45), 0.0))
        .collect();
    let kernel = theta_kernel(&tapered, grid, dim);
    let edge = (0..grid.n)
        .filter(|&j| grid.theta(j).abs() >= 0.9 * grid.half_width)
        .map(|j| max_entry(&kernel[j]))
        .fold(0.0, f64::max);
    let central = (0..grid.n)
        .filter(|&k| grid.rho(k).abs() <= 1.0)
        .map(|k| max_entry(&samples[k]))
        .fold(0.0, f64::max);
    let scale = if central > 0.0 {
        central
    } else {
        samples.iter().map(max_entry).fold(0.0, f64::max)
    };
    if scale == 0.0 {
        0.0
    } else {
        edge / scale
    }
}

/// `V(φ)a` for an arbitrary cutoff `φ` supported in `[-support, support]`.
pub fn kernel_cutoff_fn(phi: &dyn Fn(f64) -> f64, support: f64, a: &LineSymbol, cfg: &KcoConfig) -> Result<HoloSymbol, KcoError> {
    let grid = cfg.grid;
    if support >= grid.half_width {
        return Err(KcoError::BadGrid(format!("cutoff support {support} does not fit in the θ-window")));
    }
    let samples = sample_symbol(a, &grid)?;
    let mass = edge_mass(&samples, &grid, a.dim);
    if mass > cfg.edge_tol {
        return Err(KcoError::Aliasing(mass));
    }
    let kernel = theta_kernel(&samples, &grid, a.dim);
    let dt = grid.dtheta();
    let (mut nodes, mut weights) = (Vec::new(), Vec::new());
    let inside: Vec<usize> = (0..grid.n).filter(|&j| grid.theta(j).abs() <= support).collect();
    for j in inside {
        let t = grid.theta(j);
        nodes.push(t);
        weights.push(&kernel[j] * C64::new(phi(t) * dt, 0.0));
    }
    Ok(HoloSymbol {
        order: a.order,
        dim: a.dim,
        grid,
        delta_max: cfg.delta_max,
        cutoff: None,
        nodes,
        weights,
    })
}

pub fn kernel_cutoff(phi: &CutoffFunction, a: &LineSymbol, cfg: &KcoConfig) -> Result<HoloSymbol, KcoError> {
    phi.validate()?;
    let mut h = kernel_cutoff_fn(&|t| phi.eval(t), phi.support(), a, cfg)?;
    h.cutoff = Some(*phi);
    Ok(h)
}

/// `V(φ_δ)a` with `φ_δ(θ) = e^{θδ}φ(θ)`, evaluated on the line: the δ-shift identity's right side.
pub fn shifted_line_value(phi: &CutoffFunction, a: &LineSymbol, delta: f64, rho: f64, cfg: &KcoConfig) -> Result<CMat, KcoError> {
    let shifted = phi.with_tilt(phi.tilt + delta);
    Ok(kernel_cutoff(&shifted, a, cfg)?.eval(C64::new(rho, 0.0)))
}

/// Relative Cauchy–Riemann defect `‖∂_δh - i∂_ρh‖ / max(‖∂_ρh‖, ‖h‖)` at `ζ`.
pub fn cauchy_riemann_residual(h: &HoloSymbol, zeta: C64, step: f64) -> f64 {
    let d_rho = derivative(&|x: f64| h.eval(C64::new(x, zeta.im)), zeta.re, step);
    let d_delta = derivative(&|y: f64| h.eval(C64::new(zeta.re, y)), zeta.im, step);
    let defect = op_norm(&(&d_delta - &d_rho * I));
    defect / op_norm(&d_rho).max(op_norm(&h.eval(zeta))).max(f64::MIN_POSITIVE)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderConfig {
    pub kco: KcoConfig,
    pub rho_min: f64,
    pub rho_max: f64,
    pub points: usize,
}

impl Default for RemainderConfig {
    fn default() -> Self {
        Self {
            kco: KcoConfig::default(),
            rho_min: 16.0,
            rho_max: 256.0,
            points: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub k: usize,
    pub order: f64,
    pub target: f64,
    pub rhos: Vec<f64>,
    pub remainders: Vec<f64>,
    pub fit: PowerFit,
    /// The remainder is at round-off level everywhere (expansion exact).
    pub negligible: bool,
    pub pass: bool,
}

/// `V(φ)a - Σ_{k<K} ((-1)^k/k!) D_θ^kφ(0) ∂_ρ^k a` along the line, with its fitted decay.
pub fn asymptotic_remainder(phi: &CutoffFunction, a: &LineSymbol, k: usize, cfg: &RemainderConfig) -> Result<RemainderReport, KcoError> {
    if k == 0 {
        return Err(KcoError::BadOrder);
    }
    if cfg.rho_max > cfg.kco.grid.rho_valid() || cfg.rho_min <= 0.0 || cfg.rho_min >= cfg.rho_max || cfg.points < 2 {
        return Err(KcoError::BadGrid(format!("remainder range [{}, {}]", cfg.rho_min, cfg.rho_max)));
    }
    let h = kernel_cutoff(phi, a, &cfg.kco)?;
    let derivs = phi.derivatives_at_zero(k);
    // ((-1)^j/j!) D^j φ(0) with D = -i∂ gives i^j φ^{(j)}(0)/j!
    let mut fact = 1.0;
    let coefs: Vec<C64> = derivs
        .iter()
        .enumerate()
        .map(|(j, d)| {
            if j > 0 {
                fact *= j as f64;
            }
            I.powu(j as u32) * (d / fact)
        })
        .collect();
    let rhos = logspace(cfg.rho_min, cfg.rho_max, cfg.points);
    let f = |x: &[f64]| a.eval(x[0]);
    let (remainders, scale): (Vec<f64>, Vec<f64>) = rhos
        .par_iter()
        .map(|&rho| {
            let step = 1e-3 * bracket1(rho);
            let mut r = h.eval(C64::new(rho, 0.0));
            for (j, c) in coefs.iter().enumerate() {
                if *c != C64::new(0.0, 0.0) {
                    r -= partial(&f, &[rho], &[j], step) * *c;
                }
            }
            (op_norm(&r), op_norm(&a.eval(rho)))
        })
        .unzip();
    let size = scale.iter().copied().fold(1.0, f64::max);
    let negligible = remainders.iter().all(|&r| r < 1e-11 * size);
    let (fit, pass) = if negligible {
        (
            PowerFit {
                constant: 0.0,
                exponent: f64::NEG_INFINITY,
                residual: 0.0,
            },
            true,
        )
    } else {
        let fit = power_fit(&rhos, &remainders);
        let pass = fit.exponent <= a.order - k as f64 + 0.3;
        (fit, pass)
    };
    Ok(RemainderReport {
        k,
        order: a.order,
        target: a.order - k as f64,
        rhos,
        remainders,
        fit,
        negligible,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub order: f64,
    pub deltas: Vec<f64>,
    /// Per δ: the largest of `sup_ρ ‖∂_ρ^k h(ρ+iδ)‖ ⟨ρ⟩^{k-μ}`, `k ≤ 2`.
    pub suprema: Vec<f64>,
    pub budget: f64,
    pub pass: bool,
}

/// Order-μ seminorms of `h` on sampled lines `Im ζ = δ`, δ in the interval.
pub fn verify_strip_membership(h: &HoloSymbol, interval: (f64, f64), budget: f64) -> Result<StripReport, KcoError> {
    for d in [interval.0, interval.1] {
        if d.abs() > h.delta_max {
            return Err(KcoError::StripRange { delta: d, max: h.delta_max });
        }
    }
    let deltas = linspace(interval.0, interval.1, 5);
    let pos = logspace(0.1, h.grid.rho_valid(), 40);
    let rhos: Vec<f64> = pos.iter().map(|r| -r).chain([0.0]).chain(pos.iter().copied()).collect();
    let suprema: Vec<f64> = deltas
        .par_iter()
        .map(|&d| {
            rhos.iter()
                .flat_map(|&r| {
                    (0..=2u32).map(move |k| op_norm(&h.eval_derivative(C64::new(r, d), k)) * bracket1(r).powf(k as f64 - h.order))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let pass = suprema.iter().all(|s| s.is_finite() && *s <= budget);
    Ok(StripReport {
        order: h.order,
        deltas,
        suprema,
        budget,
        pass,
    })
}
