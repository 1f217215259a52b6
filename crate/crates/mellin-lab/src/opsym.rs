//! Operator-valued symbols `a(y, η)` acting between Fourier scales, with the
//! seminorms `sup ‖b̃^{s-μ+|β|}(η) {D_y^α D_η^β a(y,η)} b^{-s}(η)‖` as executable checks.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{bracket, bracket1, multi_indices, op_norm, partial, power_fit, tail_growth, CMat, PowerFit, C64};
use crate::scales::{OrderReducingFamily, ScaleSpec, BOUNDED_SLACK};

pub type SymbolFn = Arc<dyn Fn(&[f64], &[f64]) -> CMat + Send + Sync>;

#[derive(Debug, Error, PartialEq)]
pub enum SymbolError {
    #[error("scale mismatch: {0}")]
    ScaleMismatch(String),
    #[error("non-finite value in symbol evaluation")]
    NonFinite,
    #[error("invalid seminorm request: {0}")]
    InvalidRequest(String),
    #[error("symbol description needs an order-reducing family")]
    MissingFamily,
    #[error("mode {0} outside the scale")]
    ModeOutOfRange(i64),
}

/// Domain of the `y` variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum YBox {
    Constant,
    Interval { lo: Vec<f64>, hi: Vec<f64> },
}

impl YBox {
    pub fn dim(&self) -> usize {
        match self {
            YBox::Constant => 0,
            YBox::Interval { lo, .. } => lo.len(),
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            YBox::Constant => y.is_empty(),
            YBox::Interval { lo, hi } => {
                y.len() == lo.len() && y.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| a <= x && x <= b)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// JSON description of a symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolDesc {
    /// `b^μ(η)` of the supplied family.
    Reduction { mu: f64 },
    /// `⟨η⟩^p · id`.
    BracketScalar { power: f64 },
    /// `Σ coef η^powers · id`.
    Polynomial { terms: Vec<PolyTerm> },
    /// `e^{-|η|^2} e_row ⊗ e_col^*`.
    GaussianSmoothing { row: i64, col: i64 },
    Composite { left: Box<SymbolDesc>, right: Box<SymbolDesc> },
    /// Partial derivative `∂_y^α ∂_η^β` of another symbol.
    Derivative { inner: Box<SymbolDesc>, alpha: Vec<usize>, beta: Vec<usize> },
    /// Closure-defined symbol; cannot be rebuilt from JSON.
    Custom { label: String },
}

#[derive(Clone)]
pub struct OperatorSymbol {
    pub order: f64,
    pub domain: ScaleSpec,
    pub codomain: ScaleSpec,
    pub q: usize,
    pub y_box: YBox,
    pub desc: SymbolDesc,
    eval: SymbolFn,
}

impl fmt::Debug for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSymbol")
            .field("order", &self.order)
            .field("q", &self.q)
            .field("desc", &self.desc)
            .finish()
    }
}

const FD_STEP: f64 = 1e-3;

impl OperatorSymbol {
    pub fn new(
        order: f64,
        domain: ScaleSpec,
        codomain: ScaleSpec,
        q: usize,
        y_box: YBox,
        desc: SymbolDesc,
        eval: SymbolFn,
    ) -> Self {
        Self {
            order,
            domain,
            codomain,
            q,
            y_box,
            desc,
            eval,
        }
    }

    pub fn eval(&self, y: &[f64], eta: &[f64]) -> CMat {
        (self.eval)(y, eta)
    }

    pub fn try_eval(&self, y: &[f64], eta: &[f64]) -> Result<CMat, SymbolError> {
        let m = self.eval(y, eta);
        if m.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            Ok(m)
        } else {
            Err(SymbolError::NonFinite)
        }
    }

    /// Builds the symbol for a description on the scale of `fam`.
    pub fn from_desc(desc: &SymbolDesc, fam: &OrderReducingFamily) -> Result<Self, SymbolError> {
        let sc = fam.scale.clone();
        let n = sc.dim();
        let q = fam.q;
        let mk = |order: f64, eval: SymbolFn| {
            OperatorSymbol::new(order, sc.clone(), sc.clone(), q, YBox::Constant, desc.clone(), eval)
        };
        Ok(match desc {
            SymbolDesc::Reduction { mu } => {
                let (f, mu) = (fam.clone(), *mu);
                mk(mu, Arc::new(move |_, eta| f.matrix(mu, eta)))
            }
            SymbolDesc::BracketScalar { power } => {
                let p = *power;
                mk(p, Arc::new(move |_, eta| CMat::identity(n, n) * C64::new(bracket(eta).powf(p), 0.0)))
            }
            SymbolDesc::Polynomial { terms } => {
                let deg = terms.iter().map(|t| t.powers.iter().sum::<u32>()).max().unwrap_or(0);
                let terms = terms.clone();
                mk(
                    deg as f64,
                    Arc::new(move |_, eta| {
                        let v: f64 = terms
                            .iter()
                            .map(|t| t.coef * t.powers.iter().zip(eta).map(|(&p, x)| x.powi(p as i32)).product::<f64>())
                            .sum();
                        CMat::identity(n, n) * C64::new(v, 0.0)
                    }),
                )
            }
            SymbolDesc::GaussianSmoothing { row, col } => {
                let i = sc.index(*row).ok_or(SymbolError::ModeOutOfRange(*row))?;
                let j = sc.index(*col).ok_or(SymbolError::ModeOutOfRange(*col))?;
                mk(
                    f64::NEG_INFINITY,
                    Arc::new(move |_, eta| {
                        let mut m = CMat::zeros(n, n);
                        m[(i, j)] = C64::new((-eta.iter().map(|x| x * x).sum::<f64>()).exp(), 0.0);
                        m
                    }),
                )
            }
            SymbolDesc::Composite { left, right } => {
                compose_symbols(&Self::from_desc(left, fam)?, &Self::from_desc(right, fam)?)?
            }
            SymbolDesc::Derivative { inner, alpha, beta } => {
                differentiate_symbol(&Self::from_desc(inner, fam)?, alpha, beta)?
            }
            SymbolDesc::Custom { label } => {
                return Err(SymbolError::InvalidRequest(format!("custom symbol '{label}' has no closed form")))
            }
        })
    }

    pub fn identity(fam: &OrderReducingFamily) -> Self {
        let n = fam.scale.dim();
        Self::new(
            0.0,
            fam.scale.clone(),
            fam.scale.clone(),
            fam.q,
            YBox::Constant,
            SymbolDesc::Reduction { mu: 0.0 },
            Arc::new(move |_, _| CMat::identity(n, n)),
        )
    }
}

/// Pointwise product `a(y,η) ã(y,η)`; orders add.
pub fn compose_symbols(a: &OperatorSymbol, b: &OperatorSymbol) -> Result<OperatorSymbol, SymbolError> {
    if a.domain != b.codomain {
        return Err(SymbolError::ScaleMismatch("codomain of the right factor differs from the domain of the left".into()));
    }
    if a.q != b.q || a.y_box.dim() != b.y_box.dim() {
        return Err(SymbolError::ScaleMismatch("parameter dimensions differ".into()));
    }
    let (fa, fb) = (a.eval.clone(), b.eval.clone());
    let y_box = if a.y_box == YBox::Constant { b.y_box.clone() } else { a.y_box.clone() };
    Ok(OperatorSymbol::new(
        a.order + b.order,
        b.domain.clone(),
        a.codomain.clone(),
        a.q,
        y_box,
        SymbolDesc::Composite {
            left: Box::new(a.desc.clone()),
            right: Box::new(b.desc.clone()),
        },
        Arc::new(move |y, eta| fa(y, eta) * fb(y, eta)),
    ))
}

/// `∂_y^α ∂_η^β a` by nested central differences; order drops by `|β|`.
pub fn differentiate_symbol(a: &OperatorSymbol, alpha: &[usize], beta: &[usize]) -> Result<OperatorSymbol, SymbolError> {
    let p = a.y_box.dim();
    if alpha.len() != p || beta.len() != a.q {
        return Err(SymbolError::InvalidRequest(format!(
            "multi-index lengths ({}, {}) do not match (y, η) dimensions ({p}, {})",
            alpha.len(),
            beta.len(),
            a.q
        )));
    }
    let order: Vec<usize> = alpha.iter().chain(beta).copied().collect();
    let f = a.eval.clone();
    let nb: usize = beta.iter().sum();
    Ok(OperatorSymbol::new(
        a.order - nb as f64,
        a.domain.clone(),
        a.codomain.clone(),
        a.q,
        a.y_box.clone(),
        SymbolDesc::Derivative {
            inner: Box::new(a.desc.clone()),
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
        },
        Arc::new(move |y, eta| {
            let z: Vec<f64> = y.iter().chain(eta).copied().collect();
            let g = |z: &[f64]| f(&z[..p], &z[p..]);
            partial(&g, &z, &order, FD_STEP)
        }),
    ))
}

/// Points at which seminorms are sampled.
#[derive(Clone, Debug)]
pub struct SeminormGrid {
    pub ys: Vec<Vec<f64>>,
    pub etas: Vec<Vec<f64>>,
    pub s_values: Vec<f64>,
}

impl SeminormGrid {
    /// `η` along the first axis with `|η|` log-spaced on `[0.1, eta_max]` (plus `η = 0`).
    pub fn axis(q: usize, ys: Vec<Vec<f64>>, s_values: Vec<f64>, eta_max: f64, points: usize) -> Self {
        let etas = std::iter::once(0.0)
            .chain(crate::numerics::logspace(0.1, eta_max, points))
            .map(|m| {
                let mut e = vec![0.0; q];
                if q > 0 {
                    e[0] = m;
                }
                e
            })
            .collect();
        Self { ys, etas, s_values }
    }

    pub fn constant(q: usize, s_values: Vec<f64>, eta_max: f64, points: usize) -> Self {
        Self::axis(q, vec![vec![]], s_values, eta_max, points)
    }
}

fn scale_rows_cols(m: &CMat, rows: &[f64], cols: &[f64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (rows[i] * cols[j]))
}

/// For each η in `etas`, the supremum over y, s and `|α|+|β| = j ≤ k` of the weighted norms.
fn seminorm_profile(
    a: &OperatorSymbol,
    fam: &OrderReducingFamily,
    fam_t: &OrderReducingFamily,
    mu: f64,
    k: usize,
    ys: &[&Vec<f64>],
    etas: &[&Vec<f64>],
    s_values: &[f64],
) -> Vec<f64> {
    let p = a.y_box.dim();
    let orders: Vec<(Vec<usize>, usize)> = (0..=k)
        .flat_map(|j| multi_indices(p + a.q, j))
        .map(|o| {
            let nb = o[p..].iter().sum();
            (o, nb)
        })
        .collect();
    etas.par_iter()
        .map(|eta| {
            let mut sup: f64 = 0.0;
            for y in ys {
                let z: Vec<f64> = y.iter().chain(eta.iter()).copied().collect();
                let g = |z: &[f64]| a.eval(&z[..p], &z[p..]);
                for (o, nb) in &orders {
                    let d = partial(&g, &z, o, FD_STEP);
                    for &s in s_values {
                        let rows = fam_t.diag(s - mu + *nb as f64, eta);
                        let cols = fam.diag(-s, eta);
                        let v = op_norm(&scale_rows_cols(&d, &rows, &cols));
                        sup = sup.max(if v.is_nan() { f64::INFINITY } else { v });
                    }
                }
            }
            sup
        })
        .collect()
}

fn check_families(a: &OperatorSymbol, fam: &OrderReducingFamily, fam_t: &OrderReducingFamily) -> Result<(), SymbolError> {
    if fam.scale != a.domain || fam_t.scale != a.codomain {
        return Err(SymbolError::ScaleMismatch("families do not act on the symbol's scales".into()));
    }
    if fam.q != a.q || fam_t.q != a.q {
        return Err(SymbolError::ScaleMismatch("parameter dimension differs from the families'".into()));
    }
    Ok(())
}

/// Seminorm of order `mu` (use `a.order` unless it is `-∞`).
#[allow(clippy::too_many_arguments)]
pub fn symbol_seminorm_at(
    a: &OperatorSymbol,
    mu: f64,
    fam: &OrderReducingFamily,
    fam_t: &OrderReducingFamily,
    k: usize,
    k_box: &YBox,
    h: f64,
    grid: &SeminormGrid,
) -> Result<f64, SymbolError> {
    check_families(a, fam, fam_t)?;
    if !(h > 0.0) {
        return Err(SymbolError::InvalidRequest(format!("h must be positive (got {h})")));
    }
    if !mu.is_finite() {
        return Err(SymbolError::InvalidRequest("seminorm order must be finite".into()));
    }
    let ys: Vec<&Vec<f64>> = grid.ys.iter().filter(|y| k_box.contains(y)).collect();
    let etas: Vec<&Vec<f64>> = grid.etas.iter().filter(|e| e.iter().map(|x| x * x).sum::<f64>().sqrt() >= h).collect();
    if ys.is_empty() || etas.is_empty() {
        return Err(SymbolError::InvalidRequest("no grid points inside K with |η| ≥ h".into()));
    }
    let prof = seminorm_profile(a, fam, fam_t, mu, k, &ys, &etas, &grid.s_values);
    let sup = prof.into_iter().fold(0.0, f64::max);
    if sup.is_finite() {
        Ok(sup)
    } else {
        Err(SymbolError::NonFinite)
    }
}

pub fn symbol_seminorm(
    a: &OperatorSymbol,
    fam: &OrderReducingFamily,
    fam_t: &OrderReducingFamily,
    k: usize,
    k_box: &YBox,
    h: f64,
    grid: &SeminormGrid,
) -> Result<f64, SymbolError> {
    symbol_seminorm_at(a, a.order, fam, fam_t, k, k_box, h, grid)
}

/// Whether the order-`mu` seminorm profile stays bounded as `|η| → ∞`.
pub fn seminorm_bounded(
    a: &OperatorSymbol,
    mu: f64,
    fam: &OrderReducingFamily,
    k: usize,
    grid: &SeminormGrid,
) -> Result<bool, SymbolError> {
    check_families(a, fam, fam)?;
    let ys: Vec<&Vec<f64>> = grid.ys.iter().collect();
    let etas: Vec<&Vec<f64>> = grid.etas.iter().collect();
    let prof = seminorm_profile(a, fam, fam, mu, k, &ys, &etas, &grid.s_values);
    let xs: Vec<f64> = grid.etas.iter().map(|e| bracket(e)).collect();
    Ok(prof.iter().all(|v| v.is_finite()) && tail_growth(&xs, &prof) <= BOUNDED_SLACK)
}

/// Norm of a mode matrix from `E^s` to `E^t`.
pub fn scale_op_norm(m: &CMat, dom: &ScaleSpec, cod: &ScaleSpec, s: f64, t: f64) -> f64 {
    let rows: Vec<f64> = cod.modes_iter().map(|k| bracket1(k as f64).powf(t)).collect();
    let cols: Vec<f64> = dom.modes_iter().map(|k| bracket1(k as f64).powf(-s)).collect();
    op_norm(&scale_rows_cols(m, &rows, &cols))
}

#[derive(Clone, Debug)]
pub struct CharacterizationConfig {
    pub mus: Vec<f64>,
    pub weights: Vec<f64>,
    pub st_pairs: Vec<(f64, f64)>,
    pub k: usize,
    pub grid: SeminormGrid,
}

impl CharacterizationConfig {
    pub fn standard(q: usize) -> Self {
        Self {
            mus: vec![-1.0, -2.0, -4.0, -8.0],
            weights: vec![0.0, 2.0, 4.0, 8.0],
            st_pairs: vec![(0.0, 0.0), (-2.0, 2.0), (2.0, 4.0)],
            k: 1,
            grid: SeminormGrid::constant(q, vec![-1.0, 0.0, 1.0], 1e3, 40),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothingReport {
    /// All tested seminorms of order μ bounded.
    pub seminorm_side: bool,
    /// All tested `⟨η⟩^M ‖D^β a(η)‖_{s,t}` bounded.
    pub decay_side: bool,
    pub consistent: bool,
    /// First failing `μ` (seminorm side) and `M` (decay side), if any.
    pub first_failing_mu: Option<f64>,
    pub first_failing_weight: Option<f64>,
}

impl SmoothingReport {
    pub fn smoothing(&self) -> bool {
        self.seminorm_side && self.decay_side
    }
}

/// Compares the two descriptions of order `-∞` on a grid.
pub fn verify_smoothing_characterization(
    a: &OperatorSymbol,
    fam: &OrderReducingFamily,
    cfg: &CharacterizationConfig,
) -> Result<SmoothingReport, SymbolError> {
    let mut first_failing_mu = None;
    for &mu in &cfg.mus {
        if !seminorm_bounded(a, mu, fam, cfg.k, &cfg.grid)? {
            first_failing_mu = Some(mu);
            break;
        }
    }
    let p = a.y_box.dim();
    let xs: Vec<f64> = cfg.grid.etas.iter().map(|e| bracket(e)).collect();
    let betas: Vec<Vec<usize>> = (0..=cfg.k).flat_map(|j| multi_indices(a.q, j)).collect();
    let mut first_failing_weight = None;
    'outer: for &m in &cfg.weights {
        for &(s, t) in &cfg.st_pairs {
            for beta in &betas {
                let prof: Vec<f64> = cfg
                    .grid
                    .etas
                    .par_iter()
                    .map(|eta| {
                        cfg.grid
                            .ys
                            .iter()
                            .map(|y| {
                                let z: Vec<f64> = y.iter().chain(eta).copied().collect();
                                let g = |z: &[f64]| a.eval(&z[..p], &z[p..]);
                                let mut order = vec![0; p];
                                order.extend(beta);
                                let d = partial(&g, &z, &order, FD_STEP);
                                bracket(eta).powf(m) * scale_op_norm(&d, &a.domain, &a.codomain, s, t)
                            })
                            .fold(0.0, f64::max)
                    })
                    .collect();
                if !(prof.iter().all(|v| v.is_finite()) && tail_growth(&xs, &prof) <= BOUNDED_SLACK) {
                    first_failing_weight = Some(m);
                    break 'outer;
                }
            }
        }
    }
    let seminorm_side = first_failing_mu.is_none();
    let decay_side = first_failing_weight.is_none();
    Ok(SmoothingReport {
        seminorm_side,
        decay_side,
        consistent: seminorm_side == decay_side,
        first_failing_mu,
        first_failing_weight,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub fit: PowerFit,
    pub target: f64,
    pub pass: bool,
}

fn norm_fit(a: &OperatorSymbol, s: f64, t: f64, grid: &SeminormGrid) -> PowerFit {
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .etas
        .iter()
        .filter(|e| bracket(e) >= 2.0)
        .map(|eta| {
            let v = grid
                .ys
                .iter()
                .map(|y| scale_op_norm(&a.eval(y, eta), &a.domain, &a.codomain, s, t))
                .fold(0.0, f64::max);
            (bracket(eta), v)
        })
        .unzip();
    power_fit(&xs, &ys)
}

/// Fits `‖a(y,η)‖_{0,0} ≤ c⟨η⟩^μ` for `μ ≤ 0`.
pub fn verify_zero_order_bound(a: &OperatorSymbol, mu: f64, grid: &SeminormGrid) -> Result<BoundReport, SymbolError> {
    if mu > 0.0 {
        return Err(SymbolError::InvalidRequest(format!("zero-order bound needs μ ≤ 0 (got {mu})")));
    }
    let fit = norm_fit(a, 0.0, 0.0, grid);
    let pass = fit.exponent <= mu + BOUNDED_SLACK;
    Ok(BoundReport { fit, target: mu, pass })
}

/// Fits `‖a(y,η)‖_{s,s-ν} ≤ c⟨η⟩^A` and records `A`.
pub fn verify_growth_bound(a: &OperatorSymbol, mu: f64, nu: f64, s: f64, grid: &SeminormGrid) -> Result<BoundReport, SymbolError> {
    if nu < mu {
        return Err(SymbolError::InvalidRequest(format!("growth bound needs ν ≥ μ (got μ = {mu}, ν = {nu})")));
    }
    let fit = norm_fit(a, s, s - nu, grid);
    let pass = fit.exponent.is_finite() && fit.residual <= 0.1;
    let target = crate::scales::pi_exponent(mu, nu).unwrap_or(mu);
    Ok(BoundReport { fit, target, pass })
}

/// Both sides of `|a ã|_k ≤ 2^k |a|_k |ã|_k` (the left factor measured with `s` shifted by `-ν`).
pub fn composition_bound(
    a: &OperatorSymbol,
    b: &OperatorSymbol,
    fam: &OrderReducingFamily,
    k: usize,
    grid: &SeminormGrid,
) -> Result<(f64, f64), SymbolError> {
    let ab = compose_symbols(a, b)?;
    let h = 1e-12;
    let lhs = symbol_seminorm(&ab, fam, fam, k, &ab.y_box, h, grid)?;
    let shifted = SeminormGrid {
        s_values: grid.s_values.iter().map(|s| s - b.order).collect(),
        ..grid.clone()
    };
    let na = symbol_seminorm(a, fam, fam, k, &a.y_box, h, &shifted)?;
    let nb = symbol_seminorm(b, fam, fam, k, &b.y_box, h, grid)?;
    Ok((lhs, 2f64.powi(k as i32) * na * nb))
}
