//! Meromorphic Mellin symbols with finite-rank pole data: composition, inversion of `1 + m`,
//! zeros of determinants, winding numbers and the Toeplitz index oracle.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conormal::SpectralPoint;
use crate::kco::{kernel_cutoff, CutoffFunction, HoloSymbol, KcoConfig, KcoError, LineSymbol, ThetaGrid};
use crate::numerics::{bracket1, circle_laurent, derivative, linspace, logspace, min_singular_value, op_norm, tail_growth, CMat, Cutoff, C64, I};

#[derive(Debug, Error, PartialEq)]
pub enum MeroError {
    #[error("scale mismatch: {0} vs {1} modes")]
    ScaleMismatch(usize, usize),
    #[error("1 + m is not invertible on any sampled line of the region")]
    NoInvertibleLine,
    #[error("singularities closer than the contour resolution (radius {0:.3e})")]
    ContourCollision(f64),
    #[error("determinant vanishes on the contour near {0}")]
    ZeroOnContour(C64),
    #[error("symbol is not invertible on the line Re w = {beta} (min |det| {min_abs:.3e})")]
    SymbolVanishes { beta: f64, min_abs: f64 },
    #[error("winding not resolved: rounding residue {0:.3e}")]
    Unresolved(f64),
    #[error("symbol is not elliptic: {0}")]
    NotElliptic(String),
    #[error("index not stable across sizes: {0:?}")]
    Inconclusive(Vec<(usize, i64)>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Kco(#[from] KcoError),
}

/// Laurent data at `p`: `laurent[k]` multiplies `(w - p)^{-(k+1)}`, `0 ≤ k ≤ m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pole {
    pub p: C64,
    pub m: usize,
    pub laurent: Vec<CMat>,
}

impl Pole {
    pub fn simple(p: C64, residue: CMat) -> Self {
        Self { p, m: 0, laurent: vec![residue] }
    }

    pub fn singular_part(&self, w: C64) -> CMat {
        let z = w - self.p;
        let mut acc = CMat::zeros(self.laurent[0].nrows(), self.laurent[0].ncols());
        for (k, l) in self.laurent.iter().enumerate() {
            acc += l * z.powi(-(k as i32 + 1));
        }
        acc
    }

    pub fn rank(&self) -> usize {
        self.laurent.iter().map(|l| numerical_rank(l, RANK_TOL)).max().unwrap_or(0)
    }
}

pub const RANK_TOL: f64 = 1e-10;
pub const LAURENT_NODES: usize = 256;
const ZERO_SNAP: f64 = 1e-5;
const POLE_MERGE: f64 = 1e-9;

fn numerical_rank(m: &CMat, tol: f64) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let top = s.iter().copied().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > tol * top.max(1.0)).count()
}

/// Drops singular values below `tol · max(1, σ_max)`.
pub fn truncate_rank(m: &CMat, tol: f64) -> CMat {
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol * top.max(1.0) {
            out += u.column(k) * vt.row(k) * C64::new(s, 0.0);
        }
    }
    out
}

type SymFn = Arc<dyn Fn(C64) -> CMat + Send + Sync>;

/// A meromorphic operator family `f(w)` together with its pole data.
#[derive(Clone)]
pub struct MeroSymbol {
    pub order: f64,
    pub dim: usize,
    pub poles: Vec<Pole>,
    /// `|Im w - ...|` beyond which line values are treated as negligible (band of the representation).
    pub line_extent: f64,
    f: SymFn,
}

impl fmt::Debug for MeroSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeroSymbol(order {}, dim {}, {} poles)", self.order, self.dim, self.poles.len())
    }
}

pub const DEFAULT_LINE_EXTENT: f64 = 1e4;

impl MeroSymbol {
    pub fn entire(order: f64, dim: usize, f: impl Fn(C64) -> CMat + Send + Sync + 'static) -> Self {
        Self {
            order,
            dim,
            poles: Vec::new(),
            line_extent: DEFAULT_LINE_EXTENT,
            f: Arc::new(f),
        }
    }

    pub fn scalar_entire(order: f64, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Self::entire(order, 1, move |w| CMat::from_element(1, 1, f(w)))
    }

    pub fn zero(dim: usize) -> Self {
        Self::entire(f64::NEG_INFINITY, dim, move |_| CMat::zeros(dim, dim))
    }

    /// `Σ_j Σ_k L_{jk} (w - p_j)^{-(k+1)}`.
    pub fn rational(dim: usize, poles: Vec<Pole>) -> Result<Self, MeroError> {
        for p in &poles {
            if p.laurent.len() != p.m + 1 || p.laurent.iter().any(|l| l.nrows() != dim || l.ncols() != dim) {
                return Err(MeroError::InvalidInput("Laurent data does not match pole multiplicity or dimension".into()));
            }
        }
        let ps = poles.clone();
        Ok(Self {
            order: if poles.is_empty() { f64::NEG_INFINITY } else { -1.0 },
            dim,
            poles,
            line_extent: DEFAULT_LINE_EXTENT,
            f: Arc::new(move |w| ps.iter().fold(CMat::zeros(dim, dim), |acc, p| acc + p.singular_part(w))),
        })
    }

    /// `w ↦ h(-i(w - β))`: the strip variable `ζ = ρ + iδ` becomes `w = β - δ + iρ`.
    pub fn from_holo(h: HoloSymbol, beta: f64) -> Self {
        let extent = h.grid.rho_valid();
        let (order, dim) = (h.order, h.dim);
        let mut s = Self::entire(order, dim, move |w| h.eval(-I * (w - beta)));
        s.line_extent = extent;
        s
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn eval(&self, w: C64) -> CMat {
        (self.f)(w)
    }

    /// `f + c·1`; pole data unchanged.
    pub fn shift(&self, c: C64) -> Self {
        let (g, dim) = (self.f.clone(), self.dim);
        Self {
            f: Arc::new(move |w| g(w) + CMat::identity(dim, dim) * c),
            order: if c == C64::new(0.0, 0.0) { self.order } else { self.order.max(0.0) },
            ..self.clone()
        }
    }

    /// The restriction `τ ↦ f(β + iτ)`.
    pub fn line(&self, beta: f64) -> LineSymbol {
        let f = self.f.clone();
        LineSymbol::new(self.order, self.dim, move |tau| f(C64::new(beta, tau)))
    }
}

/// JSON form `{"p": [re, im], "m": m, "laurent": [matrices of [re, im]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleRecord {
    pub p: [f64; 2],
    pub m: usize,
    pub laurent: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<&Pole> for PoleRecord {
    fn from(p: &Pole) -> Self {
        Self {
            p: [p.p.re, p.p.im],
            m: p.m,
            laurent: p
                .laurent
                .iter()
                .map(|l| (0..l.nrows()).map(|i| (0..l.ncols()).map(|j| [l[(i, j)].re, l[(i, j)].im]).collect()).collect())
                .collect(),
        }
    }
}

impl PoleRecord {
    pub fn to_pole(&self) -> Result<Pole, MeroError> {
        let laurent = self
            .laurent
            .iter()
            .map(|rows| {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(MeroError::InvalidInput("Laurent coefficients must be square".into()));
                }
                Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if laurent.len() != self.m + 1 {
            return Err(MeroError::InvalidInput(format!("pole of multiplicity {} needs {} coefficients", self.m, self.m + 1)));
        }
        Ok(Pole {
            p: C64::new(self.p[0], self.p[1]),
            m: self.m,
            laurent,
        })
    }
}

fn merge_points(points: impl IntoIterator<Item = (C64, usize)>) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for (p, m) in points {
        match out.iter_mut().find(|(q, _)| (*q - p).norm() < POLE_MERGE * (1.0 + p.norm())) {
            Some(e) => e.1 = e.1.max(m),
            None => out.push((p, m)),
        }
    }
    out
}

/// Laurent data of `f` at `p` by trapezoid quadrature; `None` if every coefficient is negligible.
fn recover_pole(f: &dyn Fn(C64) -> CMat, p: C64, radius: f64, max_order: usize) -> Result<Option<Pole>, MeroError> {
    if radius < 1e-6 {
        return Err(MeroError::ContourCollision(radius));
    }
    let coeffs = circle_laurent(f, p, radius, max_order, LAURENT_NODES);
    if coeffs.iter().flatten().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(MeroError::ContourCollision(radius));
    }
    // coefficient k is measured against the size of the k-th term on the contour
    let sizes: Vec<f64> = coeffs.iter().enumerate().map(|(k, c)| op_norm(c) * radius.powi(-(k as i32 + 1))).collect();
    let scale = sizes.iter().copied().fold(0.0, f64::max).max(1.0 / radius);
    let last = match sizes.iter().rposition(|&s| s > 1e-9 * scale) {
        Some(k) => k,
        None => return Ok(None),
    };
    let laurent: Vec<CMat> = coeffs.into_iter().take(last + 1).map(|c| truncate_rank(&c, RANK_TOL)).collect();
    Ok(Some(Pole { p, m: last, laurent }))
}

fn isolation_radius(p: C64, others: impl Iterator<Item = C64>) -> f64 {
    let gap = others.filter(|q| (*q - p).norm() > POLE_MERGE * (1.0 + p.norm())).map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
    (0.5 * gap).min(0.25)
}

/// Pointwise product `h(w) f(w)` with pole data recomputed at the union of the pole sets.
pub fn compose_mero(h: &MeroSymbol, f: &MeroSymbol) -> Result<MeroSymbol, MeroError> {
    if h.dim != f.dim {
        return Err(MeroError::ScaleMismatch(h.dim, f.dim));
    }
    let (hf, ff) = (h.f.clone(), f.f.clone());
    let value = move |w: C64| hf(w) * ff(w);
    let candidates = merge_points(h.poles.iter().map(|p| (p.p, p.m)).chain(f.poles.iter().map(|p| (p.p, p.m))));
    let mut poles = Vec::new();
    for &(p, _) in &candidates {
        let mh = h.poles.iter().find(|q| (q.p - p).norm() < POLE_MERGE * (1.0 + p.norm())).map(|q| q.m + 1).unwrap_or(0);
        let mf = f.poles.iter().find(|q| (q.p - p).norm() < POLE_MERGE * (1.0 + p.norm())).map(|q| q.m + 1).unwrap_or(0);
        let radius = isolation_radius(p, candidates.iter().map(|c| c.0));
        if let Some(pole) = recover_pole(&value, p, radius, mh + mf + 1)? {
            poles.push(pole);
        }
    }
    Ok(MeroSymbol {
        order: h.order + f.order,
        dim: h.dim,
        poles,
        line_extent: h.line_extent.min(f.line_extent),
        f: Arc::new(value),
    })
}

/// Rectangle `re.0 ≤ Re w ≤ re.1`, `im.0 ≤ Im w ≤ im.1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    pub fn contains(&self, w: C64) -> bool {
        w.re >= self.re.0 && w.re <= self.re.1 && w.im >= self.im.0 && w.im <= self.im.1
    }

    fn expanded(&self, by: f64) -> Self {
        Self {
            re: (self.re.0 - by, self.re.1 + by),
            im: (self.im.0 - by, self.im.1 + by),
        }
    }

    fn diameter(&self) -> f64 {
        (self.re.1 - self.re.0).hypot(self.im.1 - self.im.0)
    }

    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn validate(&self) -> Result<(), MeroError> {
        let ok = [self.re.0, self.re.1, self.im.0, self.im.1].iter().all(|x| x.is_finite()) && self.re.0 < self.re.1 && self.im.0 < self.im.1;
        if ok {
            Ok(())
        } else {
            Err(MeroError::InvalidInput(format!("degenerate region {self:?}")))
        }
    }
}

/// Determinant after scaling each row to unit max-norm; same phase as `det`, no underflow.
pub fn det_scaled(m: &CMat) -> C64 {
    let mut s = m.clone();
    for i in 0..s.nrows() {
        let r = s.row(i).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if r > 0.0 {
            s.row_mut(i).iter_mut().for_each(|x| *x /= r);
        }
    }
    s.determinant()
}

type Scalar<'a> = &'a (dyn Fn(C64) -> C64 + Sync);

fn segment_phase(g: Scalar, za: C64, zb: C64, ga: C64, gb: C64, depth: u32) -> Result<f64, MeroError> {
    for (z, v) in [(za, ga), (zb, gb)] {
        if !(v.norm() > 1e-300) || !v.re.is_finite() || !v.im.is_finite() {
            return Err(MeroError::ZeroOnContour(z));
        }
    }
    let d = (gb / ga).arg();
    if d.abs() < 0.25 || depth >= 48 {
        return Ok(d);
    }
    let zm = 0.5 * (za + zb);
    let gm = g(zm);
    Ok(segment_phase(g, za, zm, ga, gm, depth + 1)? + segment_phase(g, zm, zb, gm, gb, depth + 1)?)
}

/// Number of zeros minus poles of `g` inside `rect` by the argument principle.
pub fn argument_count(g: Scalar, rect: &Region) -> Result<i64, MeroError> {
    let c = [
        C64::new(rect.re.0, rect.im.0),
        C64::new(rect.re.1, rect.im.0),
        C64::new(rect.re.1, rect.im.1),
        C64::new(rect.re.0, rect.im.1),
    ];
    let mut total = 0.0;
    for s in 0..4 {
        let (z0, z1) = (c[s], c[(s + 1) % 4]);
        let n = ((z1 - z0).norm() * 16.0).ceil().max(16.0) as usize;
        let pts: Vec<C64> = (0..=n).map(|i| z0 + (z1 - z0) * (i as f64 / n as f64)).collect();
        let vals: Vec<C64> = pts.par_iter().map(|&z| g(z)).collect();
        for i in 0..n {
            total += segment_phase(g, pts[i], pts[i + 1], vals[i], vals[i + 1], 0)?;
        }
    }
    let count = total / (2.0 * std::f64::consts::PI);
    if (count - count.round()).abs() > 0.05 {
        return Err(MeroError::Unresolved((count - count.round()).abs()));
    }
    Ok(count.round() as i64)
}

fn newton(g: Scalar, z0: C64, mult: usize, inside: &Region) -> Option<C64> {
    let mut z = z0;
    for it in 0..80 {
        let h = 1e-6 * (1.0 + z.norm());
        let gz = g(z);
        // g is holomorphic, so a non-finite value is a removable point of its representation
        // (e.g. a pole of m landing exactly on a zero of the cleared determinant)
        if gz.norm() == 0.0 || (it > 0 && !(gz.re.is_finite() && gz.im.is_finite())) {
            return Some(z);
        }
        let dg = (g(z + h) - g(z - h)) / (2.0 * h);
        if !(dg.norm() > 0.0) {
            return None;
        }
        let step = gz / dg * mult as f64;
        z -= step;
        if !inside.contains(z) || !z.re.is_finite() {
            return None;
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    Some(z)
}

/// Zeros of the holomorphic function `g` in `rect`, with multiplicities, by subdivision plus Newton.
/// `phase` must have the same argument as `g` (e.g. a row-scaled determinant).
pub fn find_zeros(g: Scalar, phase: Scalar, rect: &Region) -> Result<Vec<(C64, usize)>, MeroError> {
    rect.validate()?;
    let n = argument_count(phase, rect)?;
    let mut out = Vec::new();
    locate(g, phase, *rect, n, 0, &mut out)?;
    Ok(merge_points(out))
}

fn locate(g: Scalar, phase: Scalar, rect: Region, n: i64, depth: u32, out: &mut Vec<(C64, usize)>) -> Result<(), MeroError> {
    if n <= 0 {
        return Ok(());
    }
    let small = rect.diameter() < 1e-3 || depth > 60;
    if n == 1 || small {
        if let Some(z) = newton(g, rect.center(), n as usize, &rect.expanded(0.25 * rect.diameter())) {
            if rect.expanded(1e-9).contains(z) || small {
                out.push((z, n as usize));
                return Ok(());
            }
        }
        if small {
            out.push((rect.center(), n as usize));
            return Ok(());
        }
    }
    let horizontal = rect.re.1 - rect.re.0 >= rect.im.1 - rect.im.0;
    for attempt in 0..6 {
        let frac = 0.5 + 0.0173 * (attempt as f64 + 1.0) * if attempt % 2 == 0 { 1.0 } else { -1.0 };
        let (a, b) = if horizontal {
            let x = rect.re.0 + frac * (rect.re.1 - rect.re.0);
            (Region { re: (rect.re.0, x), ..rect }, Region { re: (x, rect.re.1), ..rect })
        } else {
            let y = rect.im.0 + frac * (rect.im.1 - rect.im.0);
            (Region { im: (rect.im.0, y), ..rect }, Region { im: (y, rect.im.1), ..rect })
        };
        match (argument_count(phase, &a), argument_count(phase, &b)) {
            (Ok(na), Ok(nb)) => {
                locate(g, phase, a, na, depth + 1, out)?;
                return locate(g, phase, b, nb, depth + 1, out);
            }
            (Err(MeroError::ZeroOnContour(_)), _) | (_, Err(MeroError::ZeroOnContour(_))) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Err(MeroError::ZeroOnContour(rect.center()))
}

fn invertible_line(f: &dyn Fn(C64) -> CMat, region: &Region, avoid: &[C64]) -> Option<f64> {
    let taus = linspace(region.im.0, region.im.1, 101);
    linspace(region.re.0, region.re.1, 9).into_iter().find(|&beta| {
        avoid.iter().all(|p| (p.re - beta).abs() > 1e-3)
            && taus.iter().all(|&t| min_singular_value(&f(C64::new(beta, t))) > 1e-8)
    })
}

/// `m^{(-1)} = (1 + m)^{-1} - 1`, with its poles located in `region`.
pub fn invert_one_plus(m: &MeroSymbol, region: &Region) -> Result<MeroSymbol, MeroError> {
    region.validate()?;
    let dim = m.dim;
    let mf = m.f.clone();
    let one_plus = move |w: C64| mf(w) + CMat::identity(dim, dim);
    let pole_pts: Vec<C64> = m.poles.iter().map(|p| p.p).collect();
    if invertible_line(&one_plus, region, &pole_pts).is_none() {
        return Err(MeroError::NoInvertibleLine);
    }
    let clearing: Vec<(C64, i32)> = m.poles.iter().map(|p| (p.p, (dim * (p.m + 1)) as i32)).collect();
    let clear = |w: C64| clearing.iter().fold(C64::new(1.0, 0.0), |acc, (p, k)| acc * (w - p).powi(*k));
    let g = |w: C64| one_plus(w).determinant() * clear(w);
    let phase = |w: C64| det_scaled(&one_plus(w)) * clear(w);
    let zeros = find_zeros(&g, &phase, region)?;

    let mf2 = m.f.clone();
    let inverse = Arc::new(move |w: C64| {
        let a = mf2(w) + CMat::identity(dim, dim);
        match a.try_inverse() {
            Some(inv) => inv - CMat::identity(dim, dim),
            None => CMat::from_element(dim, dim, C64::new(f64::NAN, f64::NAN)),
        }
    });
    // a zero of the cleared determinant sitting on a pole of m is that pole; multiple zeros are
    // only located to about eps^{1/k}, so snap them with a looser tolerance
    let mut candidates: Vec<(C64, usize)> = m.poles.iter().filter(|p| region.contains(p.p)).map(|p| (p.p, dim * (p.m + 1))).collect();
    for (z, k) in merge_points(zeros) {
        match candidates.iter_mut().find(|(q, _)| (*q - z).norm() < ZERO_SNAP * (1.0 + z.norm())) {
            Some(e) => e.1 = e.1.max(k),
            None => candidates.push((z, k)),
        }
    }
    let singular: Vec<C64> = candidates.iter().map(|c| c.0).chain(pole_pts.iter().copied()).collect();
    let mut poles = Vec::new();
    for &(p, mult) in &candidates {
        let radius = isolation_radius(p, singular.iter().copied());
        let inv = inverse.clone();
        if let Some(pole) = recover_pole(&move |w| inv(w), p, radius, (mult + 1).min(12))? {
            poles.push(pole);
        }
    }
    Ok(MeroSymbol {
        order: m.order,
        dim,
        poles,
        line_extent: m.line_extent,
        f: inverse,
    })
}

/// `max ‖(1 + m)(1 + m^{(-1)}) - 1‖` over the given lines, `|Im w| ≤ 50`.
pub fn inverse_residual(m: &MeroSymbol, minv: &MeroSymbol, lines: &[f64]) -> f64 {
    let taus = linspace(-50.0, 50.0, 401);
    let id = CMat::identity(m.dim, m.dim);
    lines
        .iter()
        .flat_map(|&b| taus.iter().map(move |&t| C64::new(b, t)))
        .map(|w| op_norm(&((m.eval(w) + &id) * (minv.eval(w) + &id) - &id)))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub points: Vec<SpectralPoint>,
    /// Smallest `σ_min(h(w))` on sample points at distance ≥ 0.1 from every point of `D`.
    pub min_singular_off: f64,
    pub pass: bool,
}

/// Zeros of `det h` in the region, with an off-`D` invertibility check.
pub fn holo_spectrum(h: &MeroSymbol, region: &Region) -> Result<SpectrumReport, MeroError> {
    let g = |w: C64| h.eval(w).determinant();
    let phase = |w: C64| det_scaled(&h.eval(w));
    let zeros = find_zeros(&g, &phase, region)?;
    let xs = linspace(region.re.0, region.re.1, 13);
    let ys = linspace(region.im.0, region.im.1, 25);
    let min_singular_off = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| C64::new(x, y)))
        .filter(|w| zeros.iter().all(|(z, _)| (z - w).norm() >= 0.1))
        .map(|w| min_singular_value(&h.eval(w)))
        .fold(f64::INFINITY, f64::min);
    Ok(SpectrumReport {
        points: zeros
            .into_iter()
            .map(|(z, m)| SpectralPoint {
                re: z.re,
                im: z.im,
                multiplicity: m,
            })
            .collect(),
        min_singular_off,
        pass: min_singular_off > 1e-8,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub beta: f64,
    pub winding: i64,
    /// Total phase variation / 2π before rounding.
    pub raw: f64,
    pub residue: f64,
    pub min_abs: f64,
}

/// Phase variation of `det(1 + f(β + iτ))` over `τ ∈ ℝ`, divided by 2π.
pub fn winding_number(f: &MeroSymbol, beta: f64) -> Result<WindingReport, MeroError> {
    let dim = f.dim;
    let g = |s: f64| (f.eval(C64::new(beta, s.sinh())) + CMat::identity(dim, dim)).determinant();
    let smax = f.line_extent.asinh();
    let n = 4096;
    let ss = linspace(-smax, smax, n + 1);
    let vals: Vec<C64> = ss.par_iter().map(|&s| g(s)).collect();
    let mut min_abs = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    fn seg(g: &(dyn Fn(f64) -> C64 + Sync), a: f64, b: f64, ga: C64, gb: C64, depth: u32, min_abs: &mut f64) -> f64 {
        let d = (gb / ga).arg();
        if d.abs() < 0.1 || depth >= 40 {
            return d;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        *min_abs = min_abs.min(gm.norm());
        seg(g, a, m, ga, gm, depth + 1, min_abs) + seg(g, m, b, gm, gb, depth + 1, min_abs)
    }
    if !(min_abs > 1e-6) {
        return Err(MeroError::SymbolVanishes { beta, min_abs });
    }
    let mut total = 0.0;
    for i in 0..n {
        total += seg(&g, ss[i], ss[i + 1], vals[i], vals[i + 1], 0, &mut min_abs);
    }
    if !(min_abs > 1e-6) {
        return Err(MeroError::SymbolVanishes { beta, min_abs });
    }
    let raw = total / (2.0 * std::f64::consts::PI);
    let residue = (raw - raw.round()).abs();
    if residue >= 0.01 {
        return Err(MeroError::Unresolved(residue));
    }
    Ok(WindingReport {
        beta,
        winding: raw.round() as i64,
        raw,
        residue,
        min_abs,
    })
}

/// Kernel cut-off used for the index symbols: flat on `|θ| ≤ 20`, support 24.
pub fn index_symbol_kco() -> (CutoffFunction, KcoConfig) {
    (
        CutoffFunction::flat(24.0, 20.0),
        KcoConfig {
            grid: ThetaGrid { half_width: 64.0, n: 8192 },
            delta_max: 1.2,
            edge_tol: 1e-8,
        },
    )
}

/// Smoothing `f_k` with `1 + f_k(β + iτ) = exp(2πik (1 + tanh τ)/2)` on `β = 1/2 - γ`,
/// extended off the line by the kernel cut-off.
pub fn make_index_symbol(k: i64, gamma: f64) -> Result<MeroSymbol, MeroError> {
    let beta = 0.5 - gamma;
    let line = LineSymbol::scalar(f64::NEG_INFINITY, move |tau| {
        (I * std::f64::consts::PI * k as f64 * (1.0 + tau.tanh())).exp() - 1.0
    });
    let (phi, cfg) = index_symbol_kco();
    let h = kernel_cutoff(&phi, &line, &cfg)?;
    Ok(MeroSymbol::from_holo(h, beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToeplitzConfig {
    pub y_min: f64,
    pub y_max: f64,
    /// Columns within this distance of a truncated end are dropped (tall sections).
    pub tail: f64,
    pub tau_max: f64,
    pub dtau: f64,
    pub rel_tol: f64,
}

impl Default for ToeplitzConfig {
    fn default() -> Self {
        Self {
            y_min: -8.0,
            y_max: 56.0,
            tail: 22.0,
            tau_max: 24.0,
            dtau: 0.005,
            rel_tol: 1e-8,
        }
    }
}

pub const TOEPLITZ_SIZES: [usize; 3] = [128, 256, 512];

/// Samples of `f(β + iτ)` for the convolution kernel `K(y) = (1/2π) ∫ e^{iτy} f(β+iτ) dτ`.
pub struct LineSamples {
    dim: usize,
    taus: Vec<f64>,
    weights: Vec<CMat>,
}

impl LineSamples {
    pub fn new(f: &MeroSymbol, beta: f64, cfg: &ToeplitzConfig) -> Self {
        let n = (2.0 * cfg.tau_max / cfg.dtau).round() as usize;
        let taus = linspace(-cfg.tau_max, cfg.tau_max, n + 1);
        let weights = taus
            .par_iter()
            .enumerate()
            .map(|(i, &t)| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 } * cfg.dtau / (2.0 * std::f64::consts::PI);
                f.eval(C64::new(beta, t)) * C64::new(w, 0.0)
            })
            .collect();
        Self { dim: f.dim, taus, weights }
    }

    pub fn kernel(&self, y: f64) -> CMat {
        let mut acc = CMat::zeros(self.dim, self.dim);
        for (t, w) in self.taus.iter().zip(&self.weights) {
            acc += w * (I * t * y).exp();
        }
        acc
    }

    /// `K(k·dy)` for `k ∈ [-(n-1), n-1]`, indexed by `k + n - 1`.
    fn offsets(&self, n: usize, dy: f64) -> Vec<CMat> {
        (0..2 * n - 1).into_par_iter().map(|k| self.kernel((k as f64 - (n as f64 - 1.0)) * dy)).collect()
    }
}

fn small_singular_count(a: &CMat, tol: f64) -> usize {
    let s = a.clone().svd(false, false).singular_values;
    let top = s.iter().copied().fold(0.0, f64::max);
    s.iter().filter(|&&x| x < tol * top).count()
}

/// `#{σ(M|_cols) small} - #{σ(M^*|_cols) small}` for the tall column sections.
fn tall_index(m: &CMat, keep: &[usize], dim: usize, tol: f64) -> i64 {
    let cols: Vec<usize> = keep.iter().flat_map(|&j| (0..dim).map(move |c| j * dim + c)).collect();
    let a = m.select_columns(cols.iter());
    let b = m.adjoint().select_columns(cols.iter());
    small_singular_count(&a, tol) as i64 - small_singular_count(&b, tol) as i64
}

fn one_ended_matrix(samples: &LineSamples, n: usize, cfg: &ToeplitzConfig) -> (CMat, Vec<usize>) {
    let dim = samples.dim;
    let dy = (cfg.y_max - cfg.y_min) / n as f64;
    let y = |i: usize| cfg.y_min + i as f64 * dy;
    let k = samples.offsets(n, dy);
    let (om, omt) = (Cutoff::STANDARD, Cutoff::WIDE);
    let mut m = CMat::identity(n * dim, n * dim);
    for i in 0..n {
        let wi = om.eval((-y(i)).exp());
        if wi == 0.0 {
            continue;
        }
        for j in 0..n {
            let wj = omt.eval((-y(j)).exp());
            if wj == 0.0 {
                continue;
            }
            let block = &k[i + n - 1 - j] * C64::new(wi * wj * dy, 0.0);
            let mut view = m.view_mut((i * dim, j * dim), (dim, dim));
            view += block;
        }
    }
    let keep = (0..n).filter(|&j| y(j) <= cfg.y_max - cfg.tail).collect();
    (m, keep)
}

/// Index of the discretised `1 + ω op_M^γ(f) ω̃` on `n` log-grid points.
pub fn toeplitz_index_oracle(f: &MeroSymbol, gamma: f64, n: usize, cfg: &ToeplitzConfig) -> i64 {
    let samples = LineSamples::new(f, 0.5 - gamma, cfg);
    let (m, keep) = one_ended_matrix(&samples, n, cfg);
    tall_index(&m, &keep, f.dim, cfg.rel_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzScan {
    pub by_size: Vec<(usize, i64)>,
    pub index: Option<i64>,
}

fn stable(by_size: &[(usize, i64)]) -> Option<i64> {
    let first = by_size.first()?.1;
    by_size.iter().all(|&(_, i)| i == first).then_some(first)
}

/// The oracle at every size in [`TOEPLITZ_SIZES`]; `index` is set only when all agree.
pub fn toeplitz_index_scan(f: &MeroSymbol, gamma: f64, cfg: &ToeplitzConfig) -> ToeplitzScan {
    let samples = LineSamples::new(f, 0.5 - gamma, cfg);
    let by_size: Vec<(usize, i64)> = TOEPLITZ_SIZES
        .iter()
        .map(|&n| {
            let (m, keep) = one_ended_matrix(&samples, n, cfg);
            (n, tall_index(&m, &keep, f.dim, cfg.rel_tol))
        })
        .collect();
    ToeplitzScan {
        index: stable(&by_size),
        by_size,
    }
}

/// Interval `[-Y, Y]` in `y` with a tip at each end: the right end (`y → +∞`) carries `right`
/// in the usual coordinates, the left end carries `left` in the mirrored coordinate `-y`.
fn two_ended_matrix(left: &LineSamples, right: &LineSamples, n: usize, half: f64, tail: f64) -> (CMat, Vec<usize>) {
    let dim = right.dim;
    let dy = 2.0 * half / n as f64;
    let y = |i: usize| -half + i as f64 * dy;
    let (kl, kr) = (left.offsets(n, dy), right.offsets(n, dy));
    let (om, omt) = (Cutoff::STANDARD, Cutoff::WIDE);
    let mut m = CMat::identity(n * dim, n * dim);
    for i in 0..n {
        let (ri, li) = (om.eval((-y(i)).exp()), om.eval(y(i).exp()));
        for j in 0..n {
            let (rj, lj) = (omt.eval((-y(j)).exp()), omt.eval(y(j).exp()));
            let mut block = CMat::zeros(dim, dim);
            if ri * rj != 0.0 {
                block += &kr[i + n - 1 - j] * C64::new(ri * rj * dy, 0.0);
            }
            if li * lj != 0.0 {
                block += &kl[j + n - 1 - i] * C64::new(li * lj * dy, 0.0);
            }
            let mut view = m.view_mut((i * dim, j * dim), (dim, dim));
            view += block;
        }
    }
    let keep = (0..n).filter(|&j| y(j).abs() <= half - tail).collect();
    (m, keep)
}

pub const TWO_ENDED_HALF_WIDTH: f64 = 56.0;

/// Index of the glued operator with `left` and `right` tips, scanned over the sizes.
pub fn two_ended_index(left: &MeroSymbol, right: &MeroSymbol, gamma: f64, cfg: &ToeplitzConfig) -> Result<i64, MeroError> {
    if left.dim != right.dim {
        return Err(MeroError::ScaleMismatch(left.dim, right.dim));
    }
    let beta = 0.5 - gamma;
    let (ls, rs) = (LineSamples::new(left, beta, cfg), LineSamples::new(right, beta, cfg));
    let by_size: Vec<(usize, i64)> = TOEPLITZ_SIZES
        .iter()
        .map(|&n| {
            let (m, keep) = two_ended_matrix(&ls, &rs, n, TWO_ENDED_HALF_WIDTH, cfg.tail);
            (n, tall_index(&m, &keep, right.dim, cfg.rel_tol))
        })
        .collect();
    stable(&by_size).ok_or(MeroError::Inconclusive(by_size))
}

/// The other-side pieces for cutting and pasting: `A = (f_A | right)`, `B = (f_B | right)`,
/// `Ã = (f_A | right_tilde)`, `B̃ = (f_B | right_tilde)`.
#[derive(Clone, Debug)]
pub struct Glue {
    pub right: MeroSymbol,
    pub right_tilde: MeroSymbol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeIndexReport {
    pub ind_a: i64,
    pub ind_b: i64,
    pub ind_a_tilde: i64,
    pub ind_b_tilde: i64,
    pub holds: bool,
}

/// `ind A - ind B = ind Ã - ind B̃` for the four glued operators.
pub fn relative_index_check(fa: &MeroSymbol, fb: &MeroSymbol, glue: &Glue, gamma: f64, cfg: &ToeplitzConfig) -> Result<RelativeIndexReport, MeroError> {
    let ind_a = two_ended_index(fa, &glue.right, gamma, cfg)?;
    let ind_b = two_ended_index(fb, &glue.right, gamma, cfg)?;
    let ind_a_tilde = two_ended_index(fa, &glue.right_tilde, gamma, cfg)?;
    let ind_b_tilde = two_ended_index(fb, &glue.right_tilde, gamma, cfg)?;
    Ok(RelativeIndexReport {
        ind_a,
        ind_b,
        ind_a_tilde,
        ind_b_tilde,
        holds: ind_a - ind_b == ind_a_tilde - ind_b_tilde,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticConfig {
    pub beta: f64,
    pub region: Region,
    pub cutoff: CutoffFunction,
    pub kco: KcoConfig,
}

impl EllipticConfig {
    /// Flat cut-off (so that `g h^{(-1)} - 1` is smoothing on the line) on a wide θ-window.
    pub fn standard(beta: f64) -> Self {
        Self {
            beta,
            region: Region {
                re: (beta - 1.2, beta + 1.2),
                im: (-12.0, 12.0),
            },
            cutoff: CutoffFunction::flat(4.0, 2.0),
            kco: KcoConfig {
                grid: ThetaGrid { half_width: 24.0, n: 8192 },
                delta_max: 3.0,
                edge_tol: 1e-8,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct EllipticInverse {
    pub f: MeroSymbol,
    pub h_inv: MeroSymbol,
    pub m: MeroSymbol,
    pub m_inv: MeroSymbol,
}

/// `f` with `g f = 1`: `h^{(-1)} = V(φ)(g|_Γβ)^{-1}`, `1 + m = g h^{(-1)}`, `f = h^{(-1)} (1 + m)^{-1}`.
pub fn elliptic_inverse(g: &MeroSymbol, cfg: &EllipticConfig) -> Result<EllipticInverse, MeroError> {
    let beta = cfg.beta;
    let pos = logspace(1e-2, 1e3, 60);
    let taus: Vec<f64> = pos.iter().map(|t| -t).chain([0.0]).chain(pos.iter().copied()).collect();
    let worst = taus
        .iter()
        .map(|&t| min_singular_value(&g.eval(C64::new(beta, t))) * bracket1(t).powf(-g.order))
        .fold(f64::INFINITY, f64::min);
    if !(worst > 1e-8) {
        return Err(MeroError::NotElliptic(format!("(g|Γ_{beta})^(-1) is not of order {}: min {worst:.3e}", -g.order)));
    }
    let line = {
        let g = g.clone();
        LineSymbol::new(-g.order, g.dim, move |t| {
            g.eval(C64::new(beta, t))
                .try_inverse()
                .unwrap_or_else(|| CMat::from_element(g.dim, g.dim, C64::new(f64::NAN, 0.0)))
        })
    };
    let h = kernel_cutoff(&cfg.cutoff, &line, &cfg.kco)?;
    let h_inv = MeroSymbol::from_holo(h, beta);
    let m = compose_mero(g, &h_inv)?.shift(C64::new(-1.0, 0.0)).with_order(f64::NEG_INFINITY);
    let m_inv = invert_one_plus(&m, &cfg.region)?;
    let f = compose_mero(&h_inv, &m_inv.shift(C64::new(1.0, 0.0)))?.with_order(-g.order);
    Ok(EllipticInverse { f, h_inv, m, m_inv })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderDropReport {
    pub order: f64,
    pub lines: Vec<f64>,
    /// Per line: `sup_τ ‖∂_τ^k h(β+iτ)‖ ⟨τ⟩^{k-order}`, `k ≤ 2`.
    pub suprema: Vec<f64>,
    /// Per line: fitted growth of the weighted values at large `|τ|` (≈ 0 when bounded).
    pub growth: Vec<f64>,
    pub pass: bool,
}

/// Order `μ - ε` seminorms of `h` on `Γ_β` and on the given other lines.
pub fn verify_order_drop(h: &MeroSymbol, beta: f64, eps: f64, others: &[f64]) -> OrderDropReport {
    let order = h.order - eps;
    let lines: Vec<f64> = std::iter::once(beta).chain(others.iter().copied()).collect();
    let taus = logspace(0.1, 0.5 * h.line_extent.min(400.0), 40);
    let (suprema, growth): (Vec<f64>, Vec<f64>) = lines
        .iter()
        .map(|&b| {
            let weighted: Vec<f64> = taus
                .iter()
                .map(|&t| {
                    (0..=2)
                        .map(|k| {
                            let f = |x: f64| h.eval(C64::new(b, x));
                            let d = match k {
                                0 => f(t),
                                1 => derivative(&f, t, 1e-3 * bracket1(t)),
                                _ => derivative(&|x: f64| derivative(&f, x, 1e-3 * bracket1(t)), t, 1e-3 * bracket1(t)),
                            };
                            op_norm(&d) * bracket1(t).powf(k as f64 - order)
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            (weighted.iter().copied().fold(0.0, f64::max), tail_growth(&taus, &weighted))
        })
        .unzip();
    let pass = suprema.iter().all(|s| s.is_finite()) && growth.iter().all(|g| *g <= 0.05);
    OrderDropReport {
        order,
        lines,
        suprema,
        growth,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_pole(c: f64, p: C64) -> MeroSymbol {
        MeroSymbol::rational(1, vec![Pole::simple(p, CMat::from_element(1, 1, C64::new(c, 0.0)))]).unwrap()
    }

    #[test]
    fn product_of_simple_poles_has_partial_fractions() {
        let (p, q) = (C64::new(0.3, 1.0), C64::new(-0.4, -0.5));
        let h = scalar_pole(2.0, p);
        let f = scalar_pole(-1.5, q);
        let hf = compose_mero(&h, &f).unwrap();
        assert_eq!(hf.poles.len(), 2);
        // c1 c2 / ((w-p)(w-q)) = c1 c2/(p-q) [1/(w-p) - 1/(w-q)]
        let r = C64::new(-3.0, 0.0) / (p - q);
        for pole in &hf.poles {
            assert_eq!(pole.m, 0);
            let expect = if (pole.p - p).norm() < 1e-12 { r } else { -r };
            assert!((pole.laurent[0][(0, 0)] - expect).norm() < 1e-10);
        }
        let one = MeroSymbol::entire(0.0, 1, |_| CMat::identity(1, 1));
        let same = compose_mero(&one, &f).unwrap();
        assert!((same.poles[0].laurent[0][(0, 0)] + 1.5).norm() < 1e-10);
    }

    #[test]
    fn coincident_poles_raise_multiplicity() {
        let p = C64::new(0.1, 0.2);
        let sq = compose_mero(&scalar_pole(1.0, p), &scalar_pole(3.0, p)).unwrap();
        assert_eq!(sq.poles.len(), 1);
        assert_eq!(sq.poles[0].m, 1);
        assert!(sq.poles[0].laurent[0].norm() < 1e-10);
        assert!((sq.poles[0].laurent[1][(0, 0)] - 3.0).norm() < 1e-10);
    }

    #[test]
    fn scalar_inverse_has_shifted_pole() {
        let (c, p) = (0.7, C64::new(0.2, 0.3));
        let m = scalar_pole(c, p);
        let region = Region { re: (-2.0, 2.0), im: (-2.0, 2.0) };
        let minv = invert_one_plus(&m, &region).unwrap();
        assert_eq!(minv.poles.len(), 1);
        assert!((minv.poles[0].p - (p - c)).norm() < 1e-8);
        assert!((minv.poles[0].laurent[0][(0, 0)] + c).norm() < 1e-8);
        assert!(inverse_residual(&m, &minv, &[-1.5, 0.9, 1.7]) < 1e-8);
    }

    #[test]
    fn zero_inverse_is_zero() {
        let z = MeroSymbol::zero(2);
        let region = Region { re: (-1.0, 1.0), im: (-1.0, 1.0) };
        let zi = invert_one_plus(&z, &region).unwrap();
        assert!(zi.poles.is_empty());
        assert!(zi.eval(C64::new(0.3, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn rank_one_projection() {
        let proj = CMat::from_fn(2, 2, |i, j| C64::new(if i == j { 0.5 } else { 0.5 }, 0.0));
        let (c, p) = (0.6, C64::new(0.0, 0.5));
        let m = MeroSymbol::rational(2, vec![Pole::simple(p, proj * C64::new(c, 0.0))]).unwrap();
        let region = Region { re: (-2.0, 2.0), im: (-2.0, 2.0) };
        let minv = invert_one_plus(&m, &region).unwrap();
        assert_eq!(minv.poles.len(), 1);
        assert!((minv.poles[0].p - (p - c)).norm() < 1e-8);
        assert_eq!(minv.poles[0].rank(), 1);
        assert!(inverse_residual(&m, &minv, &[-1.0, 0.3, 1.5]) < 1e-8);
    }

    #[test]
    fn blaschke_square_winds_twice() {
        let (beta, a) = (0.5, 0.8);
        let f = MeroSymbol::scalar_entire(0.0, move |w| ((w - beta + a) / (w - beta - a)).powi(2) - 1.0);
        assert_eq!(winding_number(&f, beta).unwrap().winding, 2);
        assert_eq!(winding_number(&MeroSymbol::zero(1), beta).unwrap().winding, 0);
    }

    #[test]
    fn vanishing_symbol_is_reported() {
        let f = MeroSymbol::scalar_entire(0.0, |w| w - 1.0);
        assert!(matches!(winding_number(&f, 0.0), Err(MeroError::SymbolVanishes { .. })));
    }

    #[test]
    fn zeros_of_a_polynomial() {
        let g = |w: C64| (w - C64::new(0.3, 0.2)) * (w + C64::new(0.5, -1.0)).powi(2);
        let z = find_zeros(&g, &g, &Region { re: (-2.0, 2.0), im: (-2.0, 2.0) }).unwrap();
        assert_eq!(z.iter().map(|x| x.1).sum::<usize>(), 3);
        assert!(z.iter().any(|(w, m)| *m == 1 && (w - C64::new(0.3, 0.2)).norm() < 1e-10));
        assert!(z.iter().any(|(w, m)| *m == 2 && (w + C64::new(0.5, -1.0)).norm() < 1e-7));
    }

    #[test]
    fn index_symbol_winds_and_matches_toeplitz() {
        let f = make_index_symbol(-2, 0.25).unwrap();
        assert_eq!(winding_number(&f, 0.25).unwrap().winding, -2);
        let scan = toeplitz_index_scan(&f, 0.25, &ToeplitzConfig::default());
        assert_eq!(scan.index, Some(-2), "{scan:?}");
        let zero = toeplitz_index_scan(&MeroSymbol::zero(1), 0.0, &ToeplitzConfig::default());
        assert_eq!(zero.index, Some(0));
    }

    #[test]
    fn gluing_adds_both_ends() {
        let cfg = ToeplitzConfig::default();
        let f: Vec<MeroSymbol> = [0, 1, -1].iter().map(|&k| make_index_symbol(k, 0.0).unwrap()).collect();
        assert_eq!(two_ended_index(&f[1], &f[2], 0.0, &cfg).unwrap(), 0);
        assert_eq!(two_ended_index(&f[1], &f[0], 0.0, &cfg).unwrap(), 1);
    }

    #[test]
    fn inverse_of_a_perturbed_linear_symbol() {
        let (beta, lam) = (0.5, C64::new(-0.5, 0.3));
        let s = move |w: C64| 1.0 + 0.3 * (w - beta).powi(2).exp();
        let g = MeroSymbol::scalar_entire(1.0, move |w| (w - lam) * s(w));
        let inv = elliptic_inverse(&g, &EllipticConfig::standard(beta)).unwrap();
        assert_eq!(inv.f.poles.len(), 1);
        let pole = &inv.f.poles[0];
        assert!((pole.p - lam).norm() < 1e-8);
        assert!((pole.laurent[0][(0, 0)] - 1.0 / s(lam)).norm() < 1e-7);
        for b in [0.0, 0.5, 1.4] {
            for tau in linspace(-20.0, 20.0, 81) {
                let w = C64::new(b, tau);
                let exact = 1.0 / ((w - lam) * s(w));
                assert!((inv.f.eval(w)[(0, 0)] - exact).norm() < 1e-7 * exact.norm().max(1.0));
            }
        }
    }

    #[test]
    fn diagonal_inverse_and_non_elliptic_symbols() {
        let beta = 0.0;
        let g = MeroSymbol::entire(1.0, 3, move |w| CMat::from_fn(3, 3, |i, j| if i == j { w - beta - 2.0 - i as f64 } else { C64::new(0.0, 0.0) }));
        let inv = elliptic_inverse(&g, &EllipticConfig::standard(beta)).unwrap();
        assert!(inv.f.poles.is_empty());
        let w = C64::new(0.7, -3.0);
        assert!(op_norm(&(g.eval(w) * inv.f.eval(w) - CMat::identity(3, 3))) < 1e-10);
        let bad = MeroSymbol::scalar_entire(1.0, move |w| w - beta);
        assert!(matches!(elliptic_inverse(&bad, &EllipticConfig::standard(beta)), Err(MeroError::NotElliptic(_))));
    }

    #[test]
    fn order_drop_on_other_lines() {
        let cfg = KcoConfig::default();
        let phi = CutoffFunction::default();
        let low = kernel_cutoff(&phi, &LineSymbol::bracket_power(3.0, C64::new(0.5, 0.0)), &cfg).unwrap();
        let h = MeroSymbol::from_holo(low, 0.0).with_order(1.0);
        let rep = verify_order_drop(&h, 0.0, 0.5, &[-0.8, 0.6]);
        assert!(rep.pass, "{rep:?}");
        let full = kernel_cutoff(&phi, &LineSymbol::bracket_power(3.0, C64::new(1.0, 0.0)), &cfg).unwrap();
        let rep = verify_order_drop(&MeroSymbol::from_holo(full, 0.0), 0.0, 0.5, &[-0.8, 0.6]);
        assert!(!rep.pass);
    }

    #[test]
    fn spectrum_of_a_quadratic() {
        let h = MeroSymbol::scalar_entire(2.0, |w| (w - 0.3) * (w + C64::new(0.2, 1.0)));
        let rep = holo_spectrum(&h, &Region { re: (-1.0, 1.0), im: (-3.0, 3.0) }).unwrap();
        assert_eq!(rep.points.len(), 2);
        assert!(rep.pass);
    }
}
