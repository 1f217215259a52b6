//! Weighted Mellin transform on a logarithmic grid, the spaces `H^{s,γ}(ℝ_+, E)`,
//! Mellin operators `op_M^γ(f)` and the Mellin quantisation of edge-degenerate symbols.
//!
//! Conventions: `y = -log r`, `β = (d+1)/2 - γ`, `(S_γ u)(y) = e^{-βy} u(e^{-y})` and
//! `(M u)(β + iρ) = (F S_γ u)(ρ)` with `(F v)(ρ) = ∫ e^{-iρy} v(y) dy`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{bracket1, fft_forward, fft_index, fft_inverse, op_norm, power_fit, smoothstep, CMat, CVec, C64};
use crate::scales::OrderReducingFamily;

#[derive(Debug, Error, PartialEq)]
pub enum MellinError {
    #[error("grid needs a power-of-two size ≥ 16 and y_min < y_max")]
    BadGrid,
    #[error("grid too coarse: spectral tail {0:.3e} exceeds tolerance")]
    Underresolved(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("symbol evaluation produced a non-finite value at w = {0}")]
    SymbolEvaluation(C64),
    #[error("full-kernel evaluation limited to n ≤ {max} points (got {got})")]
    GridTooLarge { max: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Uniform grid in `y = -log r` on `[y_min, y_max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub y_min: f64,
    pub y_max: f64,
    pub n: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            y_min: -12.0,
            y_max: 12.0,
            n: 4096,
        }
    }
}

impl LogGrid {
    pub fn new(y_min: f64, y_max: f64, n: usize) -> Result<Self, MellinError> {
        if !(y_min < y_max) || !n.is_power_of_two() || n < 16 {
            return Err(MellinError::BadGrid);
        }
        Ok(Self { y_min, y_max, n })
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.n as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    pub fn r(&self, j: usize) -> f64 {
        (-self.y(j)).exp()
    }

    /// Nearest node to `y`, clamped to the grid.
    pub fn index_of(&self, y: f64) -> usize {
        (((y - self.y_min) / self.dy()).round().max(0.0) as usize).min(self.n - 1)
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.y(j)).collect()
    }

    /// Angular frequency of FFT bin `k`.
    pub fn rho(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * fft_index(k, self.n) as f64 / (self.y_max - self.y_min)
    }

    pub fn rho_max(&self) -> f64 {
        std::f64::consts::PI / self.dy()
    }

    /// Raised-cosine taper on the outer 10% at each end.
    pub fn window(&self, j: usize) -> f64 {
        let x = j as f64 / self.n as f64;
        let edge = 0.1;
        let taper = |x: f64| 0.5 * (1.0 - (std::f64::consts::PI * x / edge).cos());
        if x < edge {
            taper(x)
        } else if x > 1.0 - edge {
            taper(1.0 - x)
        } else {
            1.0
        }
    }
}

/// Vector-valued samples on a log grid; rows are grid points, columns components.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: LogGrid,
    /// Base dimension entering the weight offset `(d+1)/2`.
    pub d: usize,
    pub values: CMat,
}

impl GridFunction {
    pub fn zeros(grid: LogGrid, d: usize, dim: usize) -> Self {
        Self {
            grid,
            d,
            values: CMat::zeros(grid.n, dim),
        }
    }

    /// Samples `f(r)` at `r_j = e^{-y_j}`.
    pub fn from_r(grid: LogGrid, d: usize, dim: usize, f: impl Fn(f64) -> CVec) -> Self {
        let mut values = CMat::zeros(grid.n, dim);
        for j in 0..grid.n {
            values.row_mut(j).copy_from(&f(grid.r(j)).transpose());
        }
        Self { grid, d, values }
    }

    pub fn scalar(grid: LogGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = CMat::from_fn(grid.n, 1, |j, _| f(grid.r(j)));
        Self { grid, d: 0, values }
    }

    /// Samples a function of `y`.
    pub fn from_y(grid: LogGrid, d: usize, dim: usize, f: impl Fn(f64) -> CVec) -> Self {
        let mut values = CMat::zeros(grid.n, dim);
        for j in 0..grid.n {
            values.row_mut(j).copy_from(&f(grid.y(j)).transpose());
        }
        Self { grid, d, values }
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn at(&self, j: usize) -> CVec {
        self.values.row(j).transpose()
    }

    pub fn column(&self, m: usize) -> Vec<C64> {
        self.values.column(m).iter().copied().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `L^2(ℝ_+, dr)` norm by quadrature on the grid (`dr = r dy`).
    pub fn l2_dr(&self) -> f64 {
        (0..self.grid.n)
            .map(|j| self.values.row(j).iter().map(|x| x.norm_sqr()).sum::<f64>() * self.grid.r(j))
            .sum::<f64>()
            .sqrt()
            * self.grid.dy().sqrt()
    }

    /// Pointwise multiplication by a scalar function of `r`.
    pub fn multiply_r(&self, f: impl Fn(f64) -> C64) -> Self {
        let mut out = self.clone();
        for j in 0..self.grid.n {
            let c = f(self.grid.r(j));
            out.values.row_mut(j).iter_mut().for_each(|x| *x *= c);
        }
        out
    }

    fn check_same_grid(&self, other: &Self) -> Result<(), MellinError> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(MellinError::DimensionMismatch("grid functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, MellinError> {
        self.check_same_grid(other)?;
        Ok(Self {
            values: &self.values + &other.values,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MellinError> {
        self.check_same_grid(other)?;
        Ok(Self {
            values: &self.values - &other.values,
            ..self.clone()
        })
    }
}

/// Samples of a transform on the line `Re w = β` at the FFT frequencies `ρ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFunction {
    pub grid: LogGrid,
    pub d: usize,
    pub beta: f64,
    pub values: CMat,
}

impl LineFunction {
    pub fn w(&self, k: usize) -> C64 {
        C64::new(self.beta, self.grid.rho(k))
    }
}

pub fn offset(gamma: f64, d: usize) -> f64 {
    0.5 * (d as f64 + 1.0) - gamma
}

/// `(S_γ u)(y) = e^{-βy} u(e^{-y})`, returned on the same grid (as a function of `y`).
pub fn s_gamma_map(gamma: f64, u: &GridFunction) -> GridFunction {
    let beta = offset(gamma, u.d);
    let mut v = u.clone();
    for j in 0..u.grid.n {
        let c = (-beta * u.grid.y(j)).exp();
        v.values.row_mut(j).iter_mut().for_each(|x| *x *= c);
    }
    v
}

pub fn s_gamma_inverse(gamma: f64, v: &GridFunction) -> GridFunction {
    let beta = offset(gamma, v.d);
    let mut u = v.clone();
    for j in 0..v.grid.n {
        let c = (beta * v.grid.y(j)).exp();
        u.values.row_mut(j).iter_mut().for_each(|x| *x *= c);
    }
    u
}

/// Column-wise continuous Fourier transform `∫ e^{-iρ_k y} v(y) dy` of samples in `y`.
pub(crate) fn fourier_columns(grid: &LogGrid, values: &CMat) -> CMat {
    let mut out = values.clone();
    let (dy, y0) = (grid.dy(), grid.y_min);
    for m in 0..out.ncols() {
        let col = out.column_mut(m);
        let mut buf: Vec<C64> = col.iter().copied().collect();
        fft_forward(&mut buf);
        for (k, x) in buf.iter_mut().enumerate() {
            *x *= C64::from_polar(dy, -grid.rho(k) * y0);
        }
        out.column_mut(m).iter_mut().zip(buf).for_each(|(a, b)| *a = b);
    }
    out
}

pub(crate) fn inverse_fourier_columns(grid: &LogGrid, spec: &CMat) -> CMat {
    let mut out = spec.clone();
    let (dy, y0, n) = (grid.dy(), grid.y_min, grid.n as f64);
    for m in 0..out.ncols() {
        let mut buf: Vec<C64> = out.column(m).iter().copied().collect();
        for (k, x) in buf.iter_mut().enumerate() {
            *x *= C64::from_polar(1.0 / (dy * n), grid.rho(k) * y0);
        }
        fft_inverse(&mut buf);
        out.column_mut(m).iter_mut().zip(buf).for_each(|(a, b)| *a = b);
    }
    out
}

/// Relative spectral mass in the top quarter of the frequency band.
pub(crate) fn spectral_tail(spec: &CMat) -> f64 {
    let n = spec.nrows();
    let peak = spec.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let tail = (0..n)
        .filter(|&k| fft_index(k, n).unsigned_abs() as usize >= 3 * n / 8)
        .flat_map(|k| spec.row(k).iter().map(|x| x.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    tail / peak
}

pub const NYQUIST_TOL: f64 = 1e-8;

/// `(M_γ u)(β + iρ_k)` via FFT of the windowed `S_γ u`.
pub fn mellin_transform(gamma: f64, u: &GridFunction) -> Result<LineFunction, MellinError> {
    let mut v = s_gamma_map(gamma, u);
    for j in 0..u.grid.n {
        let w = u.grid.window(j);
        v.values.row_mut(j).iter_mut().for_each(|x| *x *= w);
    }
    let spec = fourier_columns(&u.grid, &v.values);
    let tail = spectral_tail(&spec);
    if tail > NYQUIST_TOL {
        return Err(MellinError::Underresolved(tail));
    }
    Ok(LineFunction {
        grid: u.grid,
        d: u.d,
        beta: offset(gamma, u.d),
        values: spec,
    })
}

pub fn mellin_inverse(line: &LineFunction) -> GridFunction {
    let gamma = 0.5 * (line.d as f64 + 1.0) - line.beta;
    let v = GridFunction {
        grid: line.grid,
        d: line.d,
        values: inverse_fourier_columns(&line.grid, &line.values),
    };
    s_gamma_inverse(gamma, &v)
}

/// `(M u)(w) = ∫_0^∞ r^{w-1} u(r) dr` by trapezoidal quadrature in `y` (no window).
pub fn mellin_at(u: &dyn Fn(f64) -> C64, w: C64, grid: &LogGrid) -> C64 {
    (0..grid.n)
        .map(|j| {
            let y = grid.y(j);
            (-w * y).exp() * u((-y).exp())
        })
        .sum::<C64>()
        * grid.dy()
}

fn weight_norm(s: f64, rho: f64, x: &CVec, fam: Option<&OrderReducingFamily>) -> f64 {
    match fam {
        None => bracket1(rho).powf(2.0 * s) * x.norm_squared(),
        Some(f) => f
            .diag(s, &[rho])
            .iter()
            .zip(x.iter())
            .map(|(b, v)| b * b * v.norm_sqr())
            .sum(),
    }
}

fn check_family(dim: usize, fam: Option<&OrderReducingFamily>) -> Result<(), MellinError> {
    if let Some(f) = fam {
        if f.scale.dim() != dim || f.q != 1 {
            return Err(MellinError::DimensionMismatch(format!(
                "family acts on {} modes with q = {}, function has {dim} components",
                f.scale.dim(),
                f.q
            )));
        }
    }
    Ok(())
}

fn line_norm(grid: &LogGrid, spec: &CMat, s: f64, fam: Option<&OrderReducingFamily>) -> f64 {
    let drho = 2.0 * std::f64::consts::PI / (grid.y_max - grid.y_min);
    ((0..grid.n)
        .map(|k| weight_norm(s, grid.rho(k), &spec.row(k).transpose(), fam))
        .sum::<f64>()
        * drho
        / (2.0 * std::f64::consts::PI))
        .sqrt()
}

/// `‖u‖_{H^{s,γ}} = ((2πi)^{-1} ∫_Γ ‖b^s(Im w) (Mu)(w)‖^2 dw)^{1/2}`; without a family the
/// weight is `⟨Im w⟩^s` on every component.
pub fn hs_gamma_norm(s: f64, gamma: f64, u: &GridFunction, fam: Option<&OrderReducingFamily>) -> Result<f64, MellinError> {
    check_family(u.dim(), fam)?;
    let line = mellin_transform(gamma, u)?;
    Ok(line_norm(&u.grid, &line.values, s, fam))
}

/// `‖v‖_{H^s(ℝ, E)} = (∫ ‖b^s(η) (Fv)(η)‖^2 đη)^{1/2}` for `v` given as a function of `y`.
pub fn cyl_norm(s: f64, v: &GridFunction, fam: Option<&OrderReducingFamily>) -> Result<f64, MellinError> {
    check_family(v.dim(), fam)?;
    let spec = fourier_columns(&v.grid, &v.values);
    Ok(line_norm(&v.grid, &spec, s, fam))
}

/// `r^β u`, the isomorphism `H^{s,γ} → H^{s,γ+β}`.
pub fn weight_shift(beta: f64, u: &GridFunction) -> GridFunction {
    u.multiply_r(|r| C64::new(r.powf(beta), 0.0))
}

pub type ConstantFn = Arc<dyn Fn(C64) -> CMat + Send + Sync>;
pub type ROnlyFn = Arc<dyn Fn(f64, C64) -> CMat + Send + Sync>;
pub type FullFn = Arc<dyn Fn(f64, f64, C64) -> CMat + Send + Sync>;

#[derive(Clone)]
pub enum SymbolKind {
    Constant(ConstantFn),
    ROnly(ROnlyFn),
    Full(FullFn),
}

/// Mellin symbol `f(r, r', w)` on the line `Γ_β`.
#[derive(Clone)]
pub struct MellinLineSymbol {
    pub order: f64,
    pub dim_in: usize,
    pub dim_out: usize,
    pub kind: SymbolKind,
}

impl fmt::Debug for MellinLineSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            SymbolKind::Constant(_) => "constant",
            SymbolKind::ROnly(_) => "r-only",
            SymbolKind::Full(_) => "full",
        };
        write!(f, "MellinLineSymbol(order {}, {}x{}, {kind})", self.order, self.dim_out, self.dim_in)
    }
}

impl MellinLineSymbol {
    pub fn constant(order: f64, dim: usize, f: impl Fn(C64) -> CMat + Send + Sync + 'static) -> Self {
        Self {
            order,
            dim_in: dim,
            dim_out: dim,
            kind: SymbolKind::Constant(Arc::new(f)),
        }
    }

    pub fn scalar(order: f64, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Self::constant(order, 1, move |w| CMat::from_element(1, 1, f(w)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(0.0, dim, move |_| CMat::identity(dim, dim))
    }

    /// Value at `(r, r', w)`.
    pub fn eval(&self, r: f64, rp: f64, w: C64) -> CMat {
        match &self.kind {
            SymbolKind::Constant(f) => f(w),
            SymbolKind::ROnly(f) => f(r, w),
            SymbolKind::Full(f) => f(r, rp, w),
        }
    }
}

fn finite(m: &CMat, w: C64) -> Result<(), MellinError> {
    if m.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Ok(())
    } else {
        Err(MellinError::SymbolEvaluation(w))
    }
}

pub const FULL_KERNEL_MAX: usize = 512;

/// `op_M^γ(f) u = S_γ^{-1} Op_y(g_γ) S_γ u` with `g_γ(y, y', ρ) = f(e^{-y}, e^{-y'}, β + iρ)`
/// (the factor `e^{β(y-y')}` cancels against the conjugation by `S_γ`).
pub fn op_mellin(gamma: f64, f: &MellinLineSymbol, u: &GridFunction) -> Result<GridFunction, MellinError> {
    if u.dim() != f.dim_in {
        return Err(MellinError::DimensionMismatch(format!(
            "symbol expects {} components, function has {}",
            f.dim_in,
            u.dim()
        )));
    }
    let grid = u.grid;
    let n = grid.n;
    let beta = offset(gamma, u.d);
    let v = s_gamma_map(gamma, u);
    let ws: Vec<C64> = (0..n).map(|k| C64::new(beta, grid.rho(k))).collect();
    let out = match &f.kind {
        SymbolKind::Constant(sym) => {
            let spec = fourier_columns(&grid, &v.values);
            let rows: Vec<Result<CVec, MellinError>> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let m = sym(ws[k]);
                    finite(&m, ws[k])?;
                    Ok(m * spec.row(k).transpose())
                })
                .collect();
            let mut prod = CMat::zeros(n, f.dim_out);
            for (k, r) in rows.into_iter().enumerate() {
                prod.row_mut(k).copy_from(&r?.transpose());
            }
            inverse_fourier_columns(&grid, &prod)
        }
        SymbolKind::ROnly(sym) => {
            let spec = fourier_columns(&grid, &v.values);
            let scale = 1.0 / ((grid.y_max - grid.y_min) as f64);
            let rows: Vec<Result<CVec, MellinError>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let (y, r) = (grid.y(j), grid.r(j));
                    let mut acc = CVec::zeros(f.dim_out);
                    for k in 0..n {
                        let m = sym(r, ws[k]);
                        finite(&m, ws[k])?;
                        acc += (m * spec.row(k).transpose()) * C64::from_polar(scale, grid.rho(k) * y);
                    }
                    Ok(acc)
                })
                .collect();
            let mut out = CMat::zeros(n, f.dim_out);
            for (j, r) in rows.into_iter().enumerate() {
                out.row_mut(j).copy_from(&r?.transpose());
            }
            out
        }
        SymbolKind::Full(sym) => {
            if n > FULL_KERNEL_MAX {
                return Err(MellinError::GridTooLarge {
                    max: FULL_KERNEL_MAX,
                    got: n,
                });
            }
            let scale = 1.0 / n as f64;
            let rows: Vec<Result<CVec, MellinError>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let (y, r) = (grid.y(j), grid.r(j));
                    let mut acc = CVec::zeros(f.dim_out);
                    for l in 0..n {
                        let (yl, rl) = (grid.y(l), grid.r(l));
                        let vl = v.at(l);
                        for k in 0..n {
                            let m = sym(r, rl, ws[k]);
                            finite(&m, ws[k])?;
                            acc += (m * &vl) * C64::from_polar(scale, grid.rho(k) * (y - yl));
                        }
                    }
                    Ok(acc)
                })
                .collect();
            let mut out = CMat::zeros(n, f.dim_out);
            for (j, r) in rows.into_iter().enumerate() {
                out.row_mut(j).copy_from(&r?.transpose());
            }
            out
        }
    };
    Ok(s_gamma_inverse(
        gamma,
        &GridFunction {
            grid,
            d: u.d,
            values: out,
        },
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// `sup_ρ ‖b̃^{s-μ}(ρ) f(β+iρ) b^{-s}(ρ)‖` over the sampled line.
    pub c: f64,
    /// Largest measured `‖op_M(f)u‖_{s-μ,γ} / ‖u‖_{s,γ}`.
    pub ratio: f64,
}

/// Continuity constant of `op_M^γ(f): H^{s,γ} → H^{s-μ,γ}` for `r`-independent `f`.
pub fn op_mellin_bound(
    f: &MellinLineSymbol,
    s: f64,
    gamma: f64,
    fam_in: Option<&OrderReducingFamily>,
    fam_out: Option<&OrderReducingFamily>,
    tests: &[GridFunction],
) -> Result<ContinuityReport, MellinError> {
    let sym = match &f.kind {
        SymbolKind::Constant(sym) => sym.clone(),
        _ => return Err(MellinError::Unsupported("continuity constant needs an r-independent symbol".into())),
    };
    check_family(f.dim_in, fam_in)?;
    check_family(f.dim_out, fam_out)?;
    let grid = tests
        .first()
        .map(|u| u.grid)
        .ok_or_else(|| MellinError::Unsupported("no test functions".into()))?;
    let d = tests[0].d;
    let beta = offset(gamma, d);
    let weights = |fam: Option<&OrderReducingFamily>, s: f64, rho: f64, dim: usize| -> Vec<f64> {
        match fam {
            Some(f) => f.diag(s, &[rho]),
            None => vec![bracket1(rho).powf(s); dim],
        }
    };
    let c = (0..grid.n)
        .into_par_iter()
        .map(|k| {
            let rho = grid.rho(k);
            let m = sym(C64::new(beta, rho));
            let left = weights(fam_out, s - f.order, rho, f.dim_out);
            let right = weights(fam_in, -s, rho, f.dim_in);
            op_norm(&CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (left[i] * right[j])))
        })
        .reduce(|| 0.0, f64::max);
    let mut ratio: f64 = 0.0;
    for u in tests {
        let out = op_mellin(gamma, f, u)?;
        let num = cyl_norm(s - f.order, &s_gamma_map(gamma, &out), fam_out)?;
        let den = cyl_norm(s, &s_gamma_map(gamma, u), fam_in)?;
        if den > 0.0 {
            ratio = ratio.max(num / den);
        }
    }
    Ok(ContinuityReport { c, ratio })
}

/// Scalar profile `c(r)` of an edge-degenerate symbol term, smooth up to `r = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RProfile {
    Const,
    /// `1 + slope r`.
    Linear { slope: f64 },
    /// `e^{-rate r}`.
    Exp { rate: f64 },
    /// `e^{-r^2}`.
    Gauss,
}

impl RProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RProfile::Const => 1.0,
            RProfile::Linear { slope } => 1.0 + slope * r,
            RProfile::Exp { rate } => (-rate * r).exp(),
            RProfile::Gauss => (-r * r).exp(),
        }
    }
}

/// Shape `ã(σ)` of a symbol term in the variable `σ = rρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SigmaShape {
    Constant,
    /// `e^{-σ^2/width^2}`.
    Gaussian { width: f64 },
    /// `(iσ)^power`.
    Monomial { power: u32 },
}

impl SigmaShape {
    pub fn eval(&self, sigma: f64) -> C64 {
        match *self {
            SigmaShape::Constant => C64::new(1.0, 0.0),
            SigmaShape::Gaussian { width } => C64::new((-(sigma / width).powi(2)).exp(), 0.0),
            SigmaShape::Monomial { power } => C64::new(0.0, sigma).powu(power),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTerm {
    pub coef: f64,
    pub profile: RProfile,
    pub shape: SigmaShape,
}

/// `a(r, ρ) = Σ coef · c(r) · ã(rρ)`, scalar valued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSymbol {
    pub terms: Vec<EdgeTerm>,
}

/// Log-symmetric cutoff `ψ(t)`: 1 for `|log t| ≤ inner`, 0 for `|log t| ≥ outer`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiCutoff {
    pub inner: f64,
    pub outer: f64,
}

impl PsiCutoff {
    pub fn eval(&self, t: f64) -> f64 {
        1.0 - smoothstep((t.ln().abs() - self.inner) / (self.outer - self.inner))
    }
}

#[derive(Clone, Debug)]
pub struct QuantizeConfig {
    pub grid: LogGrid,
    pub gamma: f64,
    pub psi: PsiCutoff,
    /// Quadrature nodes in `log t` on `[-outer, outer]`.
    pub t_nodes: usize,
    pub omegas: Vec<f64>,
    /// Test functions `e^{-(r-center)^2/(2 width^2)} e^{iωr}`.
    pub center: f64,
    pub width: f64,
}

impl Default for QuantizeConfig {
    fn default() -> Self {
        Self {
            grid: LogGrid::default(),
            gamma: 0.0,
            psi: PsiCutoff { inner: 0.1, outer: 1.1 },
            t_nodes: 2048,
            omegas: vec![16.0, 32.0, 64.0, 128.0, 256.0],
            center: 0.4,
            width: 0.04,
        }
    }
}

/// Mellin symbol `h(r, w) = Σ coef c(r) h_i(w)` produced by the quantisation.
#[derive(Clone, Debug)]
pub struct MellinQuantization {
    pub symbol: EdgeSymbol,
    pub gamma: f64,
    pub grid: LogGrid,
    /// `h_i(β + iρ_k)` for each term.
    pub line_values: Vec<Vec<C64>>,
    pub psi: PsiCutoff,
    t_nodes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub omegas: Vec<f64>,
    /// `‖(op_M(h) - Op_r(a)) u_ω‖ / ‖u_ω‖` in `L^2(dr)`.
    pub discrepancies: Vec<f64>,
    pub exponent: f64,
    pub pass: bool,
}

/// `k̃(z) = (2π)^{-1} ∫ e^{izσ} ã(σ) dσ` for integrable shapes, by quadrature.
fn shape_kernel(shape: &SigmaShape, z: f64) -> C64 {
    match *shape {
        SigmaShape::Gaussian { width } => {
            let nodes = 1601;
            let lim = 10.0 * width;
            let ds = 2.0 * lim / (nodes - 1) as f64;
            (0..nodes)
                .map(|i| {
                    let s = -lim + i as f64 * ds;
                    C64::from_polar(1.0, z * s) * shape.eval(s)
                })
                .sum::<C64>()
                * (ds / (2.0 * std::f64::consts::PI))
        }
        _ => C64::new(f64::NAN, 0.0),
    }
}

impl MellinQuantization {
    /// `h_i(w) = ∫ t^{-w} ψ(t) k̃_i(1-t) dt`, or its distributional limit for polynomial shapes.
    pub fn term_value(&self, shape: &SigmaShape, w: C64) -> C64 {
        term_value(shape, w, &self.psi, self.t_nodes, None)
    }

    /// Applies `op_M^γ(h)` to a scalar grid function.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction, MellinError> {
        if u.grid != self.grid || u.dim() != 1 {
            return Err(MellinError::DimensionMismatch("quantisation acts on scalar functions on its own grid".into()));
        }
        let spec = fourier_columns(&self.grid, &s_gamma_map(self.gamma, u).values);
        let mut total = GridFunction::zeros(self.grid, u.d, 1);
        for (term, vals) in self.symbol.terms.iter().zip(&self.line_values) {
            let prod = CMat::from_fn(self.grid.n, 1, |k, _| spec[(k, 0)] * vals[k]);
            let part = s_gamma_inverse(
                self.gamma,
                &GridFunction {
                    values: inverse_fourier_columns(&self.grid, &prod),
                    ..u.clone()
                },
            );
            let (c, prof) = (term.coef, term.profile);
            total = total.add(&part.multiply_r(|r| C64::new(c * prof.eval(r), 0.0)))?;
        }
        Ok(total)
    }
}

fn term_value(shape: &SigmaShape, w: C64, psi: &PsiCutoff, nodes: usize, kernel: Option<&[C64]>) -> C64 {
    match *shape {
        SigmaShape::Constant => C64::new(1.0, 0.0),
        SigmaShape::Monomial { power } => {
            // (-i)^p g^{(p)}(1) with g(t) = t^{-w} near t = 1, times i^p from (iσ)^p
            (0..power).map(|j| -w - j as f64).product()
        }
        SigmaShape::Gaussian { .. } => {
            let lim = psi.outer;
            let ds = 2.0 * lim / nodes as f64;
            (0..nodes)
                .map(|i| {
                    let s = -lim + (i as f64 + 0.5) * ds;
                    let t = s.exp();
                    let k = match kernel {
                        Some(k) => k[i],
                        None => shape_kernel(shape, 1.0 - t),
                    };
                    // dt = t ds, t^{-w} = e^{-ws}
                    ((1.0 - w) * s).exp() * (psi.eval(t) * ds) * k
                })
                .sum()
        }
    }
}

/// Reference `Op_r(a) u(r)` for Gaussian and constant shapes via the closed-form kernel
/// `(1/r) k̃((r - r')/r)`, integrated over `r'`.
fn reference_op(symbol: &EdgeSymbol, u: &(dyn Fn(f64) -> C64 + Sync), support: (f64, f64), grid: &LogGrid) -> Result<Vec<C64>, MellinError> {
    for t in &symbol.terms {
        if let SigmaShape::Monomial { .. } = t.shape {
            return Err(MellinError::Unsupported("reference quantisation of polynomial shapes".into()));
        }
    }
    let nodes = 6000;
    let dr = (support.1 - support.0) / nodes as f64;
    let rp: Vec<f64> = (0..=nodes).map(|i| support.0 + i as f64 * dr).collect();
    let up: Vec<C64> = rp.iter().map(|&x| u(x)).collect();
    Ok((0..grid.n)
        .into_par_iter()
        .map(|j| {
            let r = grid.r(j);
            symbol
                .terms
                .iter()
                .map(|term| {
                    let c = term.coef * term.profile.eval(r);
                    match term.shape {
                        SigmaShape::Constant => u(r) * c,
                        SigmaShape::Gaussian { width } => {
                            let a = width / (2.0 * std::f64::consts::PI.sqrt());
                            let acc: C64 = rp
                                .iter()
                                .zip(&up)
                                .enumerate()
                                .map(|(i, (&x, &v))| {
                                    let z = (r - x) / r;
                                    let wt = if i == 0 || i == nodes { 0.5 } else { 1.0 };
                                    v * (wt * (-(width * z).powi(2) / 4.0).exp())
                                })
                                .sum();
                            acc * (c * a * dr / r)
                        }
                        SigmaShape::Monomial { .. } => unreachable!(),
                    }
                })
                .sum()
        })
        .collect())
}

/// Builds `h` from the kernel of `Op_r(a)` and measures the discrepancy on oscillatory tests.
pub fn mellin_quantize(a: &EdgeSymbol, cfg: &QuantizeConfig) -> Result<(MellinQuantization, DiscrepancyReport), MellinError> {
    let q = mellin_quantize_symbol(a, cfg)?;
    let rep = discrepancy_report(&q, cfg)?;
    Ok((q, rep))
}

/// Measures `‖(op_M(h) - Op_r(a)) u_ω‖ / ‖u_ω‖` and fits its decay in `ω`.
pub fn discrepancy_report(q: &MellinQuantization, cfg: &QuantizeConfig) -> Result<DiscrepancyReport, MellinError> {
    let grid = q.grid;
    let a = &q.symbol;
    let (c0, wd) = (cfg.center, cfg.width);
    let support = ((c0 - 9.0 * wd).max(1e-6), c0 + 9.0 * wd);
    let mut discrepancies = Vec::new();
    for &om in &cfg.omegas {
        let u = move |r: f64| C64::from_polar((-(r - c0).powi(2) / (2.0 * wd * wd)).exp(), om * r);
        let ug = GridFunction::scalar(grid, u);
        let ours = q.apply(&ug)?;
        let reference = reference_op(a, &u, support, &grid)?;
        let diff = GridFunction {
            values: DMatrix::from_fn(grid.n, 1, |j, _| ours.values[(j, 0)] - reference[j]),
            ..ug.clone()
        };
        discrepancies.push(diff.l2_dr() / ug.l2_dr());
    }
    let floor = 1e-13;
    let (xs, ys): (Vec<f64>, Vec<f64>) = cfg
        .omegas
        .iter()
        .zip(&discrepancies)
        .filter(|(_, &d)| d > floor)
        .map(|(&o, &d)| (o, d))
        .unzip();
    let exponent = if xs.len() >= 2 { power_fit(&xs, &ys).exponent } else { f64::NEG_INFINITY };
    Ok(DiscrepancyReport {
        omegas: cfg.omegas.clone(),
        discrepancies,
        exponent,
        pass: exponent < -4.0,
    })
}

/// The Mellin symbol `h` alone.
pub fn mellin_quantize_symbol(a: &EdgeSymbol, cfg: &QuantizeConfig) -> Result<MellinQuantization, MellinError> {
    if cfg.t_nodes < 64 || !(cfg.psi.inner < cfg.psi.outer) {
        return Err(MellinError::Unsupported("insufficient quadrature or inverted cutoff".into()));
    }
    let grid = cfg.grid;
    let beta = offset(cfg.gamma, 0);
    let lim = cfg.psi.outer;
    let ds = 2.0 * lim / cfg.t_nodes as f64;
    let line_values: Vec<Vec<C64>> = a
        .terms
        .iter()
        .map(|term| {
            let kernel: Option<Vec<C64>> = matches!(term.shape, SigmaShape::Gaussian { .. }).then(|| {
                (0..cfg.t_nodes)
                    .into_par_iter()
                    .map(|i| shape_kernel(&term.shape, 1.0 - (-lim + (i as f64 + 0.5) * ds).exp()))
                    .collect()
            });
            (0..grid.n)
                .into_par_iter()
                .map(|k| term_value(&term.shape, C64::new(beta, grid.rho(k)), &cfg.psi, cfg.t_nodes, kernel.as_deref()))
                .collect()
        })
        .collect();
    if line_values.iter().flatten().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(MellinError::SymbolEvaluation(C64::new(beta, 0.0)));
    }
    Ok(MellinQuantization {
        symbol: a.clone(),
        gamma: cfg.gamma,
        grid,
        line_values,
        psi: cfg.psi,
        t_nodes: cfg.t_nodes,
    })
}
