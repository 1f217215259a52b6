//! Discrete asymptotic types, planting and extraction of singular coefficients
//! `c_{jk} r^{-p_j} log^k r`, flatness norms and the action of Mellin operators on types.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mellin::{hs_gamma_norm, offset, op_mellin, GridFunction, LogGrid, MellinError, MellinLineSymbol};
use crate::merosym::MeroSymbol;
use crate::numerics::{circle_laurent, smoothstep, CMat, CVec, Cutoff, C64};

#[derive(Debug, Error, PartialEq)]
pub enum AsymptError {
    #[error("coefficient shape does not match the asymptotic type: {0}")]
    ShapeMismatch(String),
    #[error("poles closer than the contour resolution (gap {0:.3e})")]
    PoleCollision(f64),
    #[error("exponent {p} outside the weight window ({lo}, {hi})")]
    OutsideWindow { p: C64, lo: f64, hi: f64 },
    #[error("least-squares fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Mellin(#[from] MellinError),
}

/// Exponent `p` with log-multiplicity `m` (terms `r^{-p} log^k r`, `k ≤ m`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypePoint {
    pub re: f64,
    pub im: f64,
    pub m: usize,
}

impl TypePoint {
    pub fn new(p: C64, m: usize) -> Self {
        Self { re: p.re, im: p.im, m }
    }

    pub fn p(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Depth used for `Θ = (-∞, 0]`.
pub const INFINITE_DEPTH: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticType {
    pub points: Vec<TypePoint>,
    pub gamma: f64,
    /// Lower end `ϑ` of `Θ = (ϑ, 0]`; `-∞` is truncated at depth [`INFINITE_DEPTH`].
    pub theta: f64,
    #[serde(default)]
    pub d: usize,
}

impl AsymptoticType {
    pub fn new(points: Vec<TypePoint>, gamma: f64, theta: f64, d: usize) -> Result<Self, AsymptError> {
        let t = Self { points, gamma, theta, d };
        let (lo, hi) = t.window();
        for pt in &t.points {
            if !(pt.re > lo && pt.re < hi) {
                return Err(AsymptError::OutsideWindow { p: pt.p(), lo, hi });
            }
        }
        Ok(t)
    }

    /// `((d+1)/2 - γ + ϑ, (d+1)/2 - γ)`.
    pub fn window(&self) -> (f64, f64) {
        let hi = offset(self.gamma, self.d);
        let depth = if self.theta.is_finite() { -self.theta } else { INFINITE_DEPTH };
        (hi - depth, hi)
    }

    pub fn term_count(&self) -> usize {
        self.points.iter().map(|p| p.m + 1).sum()
    }

    fn check_shape(&self, coeffs: &[Vec<C64>]) -> Result<(), AsymptError> {
        if coeffs.len() != self.points.len() || coeffs.iter().zip(&self.points).any(|(c, p)| c.len() != p.m + 1) {
            return Err(AsymptError::ShapeMismatch(format!(
                "expected lengths {:?}",
                self.points.iter().map(|p| p.m + 1).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                gap = gap.min((a.p() - b.p()).norm());
            }
        }
        gap
    }
}

fn merge_point(points: &mut Vec<TypePoint>, p: C64, m: usize) {
    match points.iter_mut().find(|q| (q.p() - p).norm() < 1e-12 * (1.0 + p.norm())) {
        Some(q) => q.m = q.m.max(m),
        None => points.push(TypePoint::new(p, m)),
    }
}

/// Adds the shifts `(p - j, m)`, `j ≥ 1`, that stay inside the window.
pub fn shadow_closure(t: &AsymptoticType) -> AsymptoticType {
    let (lo, _) = t.window();
    let mut points = Vec::new();
    for pt in &t.points {
        let mut j = 0.0;
        while pt.re - j > lo {
            merge_point(&mut points, pt.p() - j, pt.m);
            j += 1.0;
        }
    }
    AsymptoticType { points, ..t.clone() }
}

/// Cut-off used for planting: `≡ 1` for `r ≤ 0.05`, `≡ 0` for `r ≥ 1`.
pub const PLANT_CUTOFF: Cutoff = Cutoff {
    one_until: 0.05,
    zero_from: 1.0,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptConfig {
    pub grid: LogGrid,
    pub cutoff: Cutoff,
    /// Start (in `y = -log r`) of the region used for the fit; must lie where the cut-off is 1.
    pub fit_start: f64,
    pub nodes: usize,
    /// Largest `y` at which weighted values are trusted by [`flat_norm`].
    pub horizon: f64,
}

impl Default for AsymptConfig {
    fn default() -> Self {
        Self {
            grid: LogGrid {
                y_min: -4.0,
                y_max: 100.0,
                n: 32768,
            },
            cutoff: PLANT_CUTOFF,
            fit_start: 3.5,
            nodes: 256,
            horizon: 12.0,
        }
    }
}

/// `r^{-p} log^k r` in the variable `y = -log r`.
fn term(p: C64, k: usize, y: f64) -> C64 {
    (p * y).exp() * (-y).powi(k as i32)
}

/// `ω(r) Σ_j Σ_k c_{jk} r^{-p_j} log^k r` on the grid.
pub fn plant_asymptotics(t: &AsymptoticType, coeffs: &[Vec<C64>], cfg: &AsymptConfig) -> Result<GridFunction, AsymptError> {
    t.check_shape(coeffs)?;
    let om = cfg.cutoff;
    Ok(GridFunction::from_y(cfg.grid, t.d, 1, |y| {
        let w = om.eval((-y).exp());
        let mut s = C64::new(0.0, 0.0);
        if w != 0.0 {
            for (pt, cs) in t.points.iter().zip(coeffs) {
                for (k, c) in cs.iter().enumerate() {
                    s += c * term(pt.p(), k, y);
                }
            }
        }
        CVec::from_element(1, s * w)
    }))
}

/// `∫_Y^∞ e^{-zy} (-y)^k dy`, continued meromorphically in `z`.
fn tail_integral(z: C64, k: usize, y0: f64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    let mut fact_ratio = 1.0; // k!/i!
    for i in (0..=k).rev() {
        s += fact_ratio * y0.powi(i as i32) / z.powi((k - i + 1) as i32);
        fact_ratio *= i.max(1) as f64;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * (-z * y0).exp() * s
}

/// Mellin transform of `u`: trapezoid sum up to `y_0`, closed-form continuation of the expansion beyond.
fn continued_mellin<'a>(u: &'a GridFunction, j0: usize, t: &'a AsymptoticType, coeffs: &[Vec<C64>]) -> impl Fn(C64) -> C64 + 'a {
    let y0 = u.grid.y(j0);
    let coeffs = coeffs.to_vec();
    move |w: C64| {
        let dy = u.grid.dy();
        let mut s = C64::new(0.0, 0.0);
        for j in 0..=j0 {
            let h = if j == j0 { 0.5 } else { 1.0 };
            s += (-w * u.grid.y(j)).exp() * u.values[(j, 0)] * h;
        }
        s *= dy;
        for (pt, cs) in t.points.iter().zip(&coeffs) {
            for (k, c) in cs.iter().enumerate() {
                s += c * tail_integral(w - pt.p(), k, y0);
            }
        }
        s
    }
}

/// Least-squares fit of the expansion on `y ≥ fit_start`, rows weighted by `e^{-βy}` (`β` the top of the window),
/// i.e. the fit is done on `S_γ u`, where round-off is uniform.
fn fit_expansion(u: &GridFunction, t: &AsymptoticType, cfg: &AsymptConfig) -> Result<Vec<Vec<C64>>, AsymptError> {
    let (_, beta) = t.window();
    let grid = u.grid;
    let j0 = grid.index_of(cfg.fit_start);
    let stride = ((grid.n - j0) / 2048).max(1);
    let rows: Vec<usize> = (j0..grid.n).step_by(stride).collect();
    let cols: Vec<(C64, usize)> = t.points.iter().flat_map(|pt| (0..=pt.m).map(move |k| (pt.p(), k))).collect();
    let mut a = CMat::from_fn(rows.len(), cols.len(), |i, c| {
        let y = grid.y(rows[i]);
        term(cols[c].0, cols[c].1, y) * (-beta * y).exp()
    });
    let b = CVec::from_fn(rows.len(), |i, _| u.values[(rows[i], 0)] * (-beta * grid.y(rows[i])).exp());
    let scales: Vec<f64> = (0..cols.len()).map(|c| a.column(c).norm()).collect();
    for (c, s) in scales.iter().enumerate() {
        if !(*s > 0.0) || !s.is_finite() {
            return Err(AsymptError::Fit(format!("degenerate basis column {c}")));
        }
        a.column_mut(c).iter_mut().for_each(|x| *x /= *s);
    }
    let x = a.svd(true, true).solve(&b, 1e-14).map_err(|e| AsymptError::Fit(e.to_string()))?;
    let mut out = Vec::new();
    let mut c = 0;
    for pt in &t.points {
        out.push((0..=pt.m).map(|_| {
            let v = x[c] / scales[c];
            c += 1;
            v
        }).collect());
    }
    Ok(out)
}

fn contour_radius(gap: f64) -> Result<f64, AsymptError> {
    if gap < 1e-4 {
        return Err(AsymptError::PoleCollision(gap));
    }
    Ok((0.5 * gap).min(0.5))
}

/// Laurent data at `p` converted to expansion coefficients: `c_k = (-1)^k L_k / k!`.
fn coefficients_from_laurent(g: &dyn Fn(C64) -> C64, p: C64, m: usize, radius: f64, nodes: usize) -> Vec<C64> {
    let f = |w: C64| CMat::from_element(1, 1, g(w));
    let laurent = circle_laurent(&f, p, radius, m + 1, nodes);
    let mut fact = 1.0;
    laurent
        .iter()
        .enumerate()
        .map(|(k, l)| {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            l[(0, 0)] * (sign / fact)
        })
        .collect()
}

/// `c_{jk}` of `u` for the type `t`, from contour integrals of the continued `Mu` around each `p_j`.
pub fn extract_coefficients(u: &GridFunction, t: &AsymptoticType, cfg: &AsymptConfig) -> Result<Vec<Vec<C64>>, AsymptError> {
    if u.dim() != 1 {
        return Err(AsymptError::ShapeMismatch(format!("scalar functions only, got {} components", u.dim())));
    }
    let radius = contour_radius(t.min_gap())?;
    let fit = fit_expansion(u, t, cfg)?;
    let j0 = u.grid.index_of(cfg.fit_start);
    let mu = continued_mellin(u, j0, t, &fit);
    Ok(t.points.iter().map(|pt| coefficients_from_laurent(&mu, pt.p(), pt.m, radius, cfg.nodes)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatNorm {
    /// `‖ω u‖_{H^{s, γ-ϑ-1/(m+1)}}` for `m = 0, …, depth-1` (on `y ≤ horizon`).
    pub norms: Vec<f64>,
    /// Relative `L²` mass of the weighted function in the last 4 units before the horizon.
    pub tail_mass: Vec<f64>,
    pub outer: f64,
    /// `max(norms) + outer`, or `∞` when some weighted function is not decaying.
    pub value: f64,
}

pub const FLAT_TAIL_TOL: f64 = 1e-6;

/// Flatness norm of `u` for `Θ = (ϑ, 0]` tested at `depth` weights.
pub fn flat_norm(u: &GridFunction, gamma: f64, theta: f64, s: f64, depth: usize, cfg: &AsymptConfig) -> Result<FlatNorm, AsymptError> {
    let theta = if theta.is_finite() { theta } else { -INFINITE_DEPTH };
    let om = cfg.cutoff;
    let h = cfg.horizon;
    let inner = u.multiply_r(|r| C64::new(om.eval(r) * (1.0 - smoothstep((-r.ln() - (h - 4.0)) / 4.0)), 0.0));
    let outer_part = u.multiply_r(|r| C64::new(1.0 - om.eval(r), 0.0));
    let grid = u.grid;
    let mut norms = Vec::new();
    let mut tail_mass = Vec::new();
    for m in 0..depth.max(1) {
        let g = gamma - theta - 1.0 / (m as f64 + 1.0);
        let beta = offset(g, u.d);
        let (mut total, mut tail) = (0.0, 0.0);
        for j in 0..grid.n {
            let y = grid.y(j);
            if y > h {
                break;
            }
            let v = (u.values.row(j).norm() * om.eval(grid.r(j)) * (-beta * y).exp()).powi(2);
            total += v;
            if y > h - 4.0 {
                tail += v;
            }
        }
        tail_mass.push(if total > 0.0 { (tail / total).sqrt() } else { 0.0 });
        norms.push(hs_gamma_norm(s, g, &inner, None)?);
    }
    let outer = hs_gamma_norm(s, gamma, &outer_part, None)?;
    let flat = tail_mass.iter().all(|&t| t < FLAT_TAIL_TOL);
    let value = if flat { norms.iter().copied().fold(0.0, f64::max) + outer } else { f64::INFINITY };
    Ok(FlatNorm {
        norms,
        tail_mass,
        outer,
        value,
    })
}

pub const COLLISION_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct PushPrediction {
    pub q: AsymptoticType,
    pub coeffs: Vec<Vec<C64>>,
    /// Exponents of the type where a pole of `f` sits (multiplicity escalated).
    pub collisions: Vec<C64>,
}

/// Predicted type and coefficients of `op_M^γ(f) u` for `u = ω Σ c_{jk} r^{-p_j} log^k r`:
/// the poles of `f(w)·(Mu)(w)` inside the window with their Laurent data.
pub fn push_type(f: &MeroSymbol, t: &AsymptoticType, coeffs: &[Vec<C64>], cfg: &AsymptConfig) -> Result<PushPrediction, AsymptError> {
    if f.dim != 1 {
        return Err(AsymptError::ShapeMismatch(format!("scalar symbols only, got dimension {}", f.dim)));
    }
    let u = plant_asymptotics(t, coeffs, cfg)?;
    let (lo, hi) = t.window();
    let mut points = Vec::new();
    let mut collisions = Vec::new();
    for pt in &t.points {
        match f.poles.iter().find(|q| (q.p - pt.p()).norm() < COLLISION_TOL) {
            Some(q) => {
                collisions.push(pt.p());
                points.push(TypePoint::new(pt.p(), pt.m + q.m + 1));
            }
            None => points.push(*pt),
        }
    }
    for q in &f.poles {
        if q.p.re > lo && q.p.re < hi && !t.points.iter().any(|pt| (q.p - pt.p()).norm() < COLLISION_TOL) {
            points.push(TypePoint::new(q.p, q.m));
        }
    }
    let q = AsymptoticType { points, ..t.clone() };
    let others: Vec<C64> = q.points.iter().map(|p| p.p()).chain(f.poles.iter().map(|p| p.p)).collect();
    let j0 = u.grid.index_of(cfg.fit_start);
    let mu = continued_mellin(&u, j0, t, coeffs);
    let g = |w: C64| f.eval(w)[(0, 0)] * mu(w);
    let coeffs = q
        .points
        .iter()
        .map(|pt| {
            let gap = others
                .iter()
                .filter(|o| (**o - pt.p()).norm() >= COLLISION_TOL)
                .map(|o| (o - pt.p()).norm())
                .fold(f64::INFINITY, f64::min);
            Ok(coefficients_from_laurent(&g, pt.p(), pt.m, contour_radius(gap)?, cfg.nodes))
        })
        .collect::<Result<Vec<_>, AsymptError>>()?;
    Ok(PushPrediction { q, coeffs, collisions })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushRow {
    pub re: f64,
    pub im: f64,
    pub k: usize,
    pub predicted: [f64; 2],
    pub extracted: [f64; 2],
    pub abs_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushReport {
    pub rows: Vec<PushRow>,
    pub max_err: f64,
    pub residual: FlatNorm,
    pub pass: bool,
}

pub const PUSH_TOL: f64 = 1e-5;

/// Plants `u`, applies `op_M^γ(f)` and compares the extracted coefficients with [`push_type`].
pub fn verify_push(f: &MeroSymbol, t: &AsymptoticType, coeffs: &[Vec<C64>], s: f64, cfg: &AsymptConfig) -> Result<PushReport, AsymptError> {
    let pred = push_type(f, t, coeffs, cfg)?;
    let u = plant_asymptotics(t, coeffs, cfg)?;
    let fc = f.clone();
    let sym = MellinLineSymbol::constant(f.order, 1, move |w| fc.eval(w));
    let out = op_mellin(t.gamma, &sym, &u)?;
    let got = extract_coefficients(&out, &pred.q, cfg)?;
    let mut rows = Vec::new();
    for ((pt, pc), gc) in pred.q.points.iter().zip(&pred.coeffs).zip(&got) {
        for (k, (a, b)) in pc.iter().zip(gc).enumerate() {
            rows.push(PushRow {
                re: pt.re,
                im: pt.im,
                k,
                predicted: [a.re, a.im],
                extracted: [b.re, b.im],
                abs_err: (a - b).norm(),
            });
        }
    }
    let max_err = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
    let planted = plant_asymptotics(&pred.q, &got, cfg)?;
    let residual = flat_norm(&out.sub(&planted)?, t.gamma, t.theta, s, 1, cfg)?;
    Ok(PushReport {
        pass: max_err <= PUSH_TOL && residual.value.is_finite(),
        rows,
        max_err,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merosym::Pole;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn five_pole() -> (AsymptoticType, Vec<Vec<C64>>) {
        let t = AsymptoticType::new(
            vec![
                TypePoint::new(c(1.2, 0.0), 2),
                TypePoint::new(c(0.7, 0.5), 1),
                TypePoint::new(c(0.7, -0.5), 0),
                TypePoint::new(c(0.2, 0.0), 2),
                TypePoint::new(c(-0.3, 0.3), 1),
            ],
            -1.2,
            -2.5,
            0,
        )
        .unwrap();
        let coeffs = vec![
            vec![c(1.0, 0.0), c(-0.5, 0.2), c(0.25, 0.0)],
            vec![c(0.3, -0.7), c(0.1, 0.0)],
            vec![c(-1.1, 0.4)],
            vec![c(0.6, 0.0), c(0.0, 0.9), c(-0.2, 0.1)],
            vec![c(0.8, 0.8), c(-0.4, 0.0)],
        ];
        (t, coeffs)
    }

    fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn shadows_fill_the_window() {
        let t = AsymptoticType::new(vec![TypePoint::new(c(0.9, 0.0), 0)], -0.5, -3.5, 0).unwrap();
        assert_eq!(t.window(), (-2.5, 1.0));
        let s = shadow_closure(&t);
        let re: Vec<f64> = s.points.iter().map(|p| p.re).collect();
        assert_eq!(re.len(), 4);
        for (a, b) in re.iter().zip([0.9, -0.1, -1.1, -2.1]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(shadow_closure(&s), s);
        let narrow = AsymptoticType::new(vec![TypePoint::new(c(0.9, 0.0), 1)], -0.5, -0.5, 0).unwrap();
        assert_eq!(shadow_closure(&narrow), narrow);
    }

    #[test]
    fn tail_integral_matches_quadrature() {
        let (z, y0) = (c(0.7, 0.4), 2.0);
        for k in 0..3 {
            let n = 200000;
            let h = 60.0 / n as f64;
            let q: C64 = (0..=n)
                .map(|i| {
                    let y = y0 + i as f64 * h;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    (-z * y).exp() * (-y).powi(k) * w * h
                })
                .sum();
            assert!((q - tail_integral(z, k as usize, y0)).norm() < 1e-8, "k = {k}");
        }
    }

    #[test]
    fn single_term_is_recovered() {
        let cfg = AsymptConfig::default();
        let (t, _) = five_pole();
        let mut coeffs: Vec<Vec<C64>> = t.points.iter().map(|p| vec![c(0.0, 0.0); p.m + 1]).collect();
        coeffs[3][0] = c(1.0, 0.0);
        let u = plant_asymptotics(&t, &coeffs, &cfg).unwrap();
        let got = extract_coefficients(&u, &t, &cfg).unwrap();
        assert!((got[3][0] - 1.0).norm() < 1e-6);
        let others = got.iter().flatten().map(|x| x.norm()).filter(|&x| (x - 1.0).abs() > 1e-3).fold(0.0, f64::max);
        assert!(others < 1e-8, "{others:e}");
    }

    #[test]
    fn round_trip_with_logs() {
        let cfg = AsymptConfig::default();
        let (t, coeffs) = five_pole();
        let u = plant_asymptotics(&t, &coeffs, &cfg).unwrap();
        let got = extract_coefficients(&u, &t, &cfg).unwrap();
        assert!(max_diff(&got, &coeffs) < 1e-6, "{:e}", max_diff(&got, &coeffs));
    }

    #[test]
    fn flat_functions_have_no_coefficients() {
        let cfg = AsymptConfig::default();
        let (t, _) = five_pole();
        let u = GridFunction::from_y(cfg.grid, 0, 1, |y| CVec::from_element(1, c(PLANT_CUTOFF.eval((-y).exp()) * (-10.0 * y).exp(), 0.0)));
        let got = extract_coefficients(&u, &t, &cfg).unwrap();
        assert!(got.iter().flatten().all(|x| x.norm() < 1e-8));
        assert!(flat_norm(&u, -1.2, -2.5, 0.0, 3, &cfg).unwrap().value.is_finite());
        let (t1, mut c1) = five_pole();
        c1.iter_mut().flatten().for_each(|x| *x = c(0.0, 0.0));
        c1[0][0] = c(1.0, 0.0);
        let v = plant_asymptotics(&t1, &c1, &cfg).unwrap();
        assert!(flat_norm(&v, -1.2, -2.5, 0.0, 1, &cfg).unwrap().value.is_infinite());
    }

    #[test]
    fn shape_and_collision_errors() {
        let cfg = AsymptConfig::default();
        let (t, mut coeffs) = five_pole();
        coeffs[0].pop();
        assert!(matches!(plant_asymptotics(&t, &coeffs, &cfg), Err(AsymptError::ShapeMismatch(_))));
        let close = AsymptoticType::new(vec![TypePoint::new(c(0.5, 0.0), 0), TypePoint::new(c(0.5, 1e-6), 0)], -2.0, -3.0, 0).unwrap();
        let u = plant_asymptotics(&close, &[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]], &cfg).unwrap();
        assert!(matches!(extract_coefficients(&u, &close, &cfg), Err(AsymptError::PoleCollision(_))));
        assert!(AsymptoticType::new(vec![TypePoint::new(c(2.6, 0.0), 0)], -2.0, -3.0, 0).is_err());
    }

    #[test]
    fn entire_symbols_rescale_coefficients() {
        let cfg = AsymptConfig::default();
        let t = AsymptoticType::new(vec![TypePoint::new(c(0.6, 0.2), 0)], -1.2, -1.5, 0).unwrap();
        let coeffs = vec![vec![c(0.8, -0.3)]];
        let f = MeroSymbol::scalar_entire(2.0, |w| w * w - 0.5 * w + 2.0);
        let pred = push_type(&f, &t, &coeffs, &cfg).unwrap();
        let p = c(0.6, 0.2);
        assert_eq!(pred.q.points.len(), 1);
        assert!((pred.coeffs[0][0] - (p * p - 0.5 * p + 2.0) * coeffs[0][0]).norm() < 1e-10);
        let one = MeroSymbol::scalar_entire(0.0, |_| c(1.0, 0.0));
        let same = push_type(&one, &t, &coeffs, &cfg).unwrap();
        assert_eq!(same.q, t);
        assert!((same.coeffs[0][0] - coeffs[0][0]).norm() < 1e-10);
        let rep = verify_push(&f, &t, &coeffs, 0.0, &cfg).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn colliding_pole_creates_a_log_term() {
        let cfg = AsymptConfig::default();
        let p = c(0.4, 0.0);
        let t = AsymptoticType::new(vec![TypePoint::new(p, 0)], -1.2, -1.5, 0).unwrap();
        let coeffs = vec![vec![c(1.0, 0.0)]];
        let f = MeroSymbol::rational(1, vec![Pole::simple(p, CMat::from_element(1, 1, c(1.0, 0.0)))]).unwrap();
        let pred = push_type(&f, &t, &coeffs, &cfg).unwrap();
        assert_eq!(pred.q.points[0].m, 1);
        assert_eq!(pred.collisions.len(), 1);
        // Mu = 1/(w-p) + E(w), so f Mu = (w-p)^{-2} + E(p)/(w-p) + …: log coefficient -1
        assert!((pred.coeffs[0][1] + 1.0).norm() < 1e-8);
        let rep = verify_push(&f, &t, &coeffs, 0.0, &cfg).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn poles_of_the_symbol_enter_the_type() {
        let cfg = AsymptConfig::default();
        let (p, q) = (c(0.6, 0.2), c(1.0, -0.4));
        let t = AsymptoticType::new(vec![TypePoint::new(p, 1)], -1.2, -1.5, 0).unwrap();
        let coeffs = vec![vec![c(0.5, 0.5), c(-0.3, 0.0)]];
        let f = MeroSymbol::rational(1, vec![Pole::simple(q, CMat::from_element(1, 1, c(0.7, 0.0)))]).unwrap();
        let pred = push_type(&f, &t, &coeffs, &cfg).unwrap();
        assert_eq!(pred.q.points.len(), 2);
        assert!(pred.collisions.is_empty());
        // at p: f holomorphic, so c_1' = f(p) c_1 and c_0' = f(p) c_0 - f'(p) c_1
        let fp = 0.7 / (p - q);
        let dfp = -0.7 / ((p - q) * (p - q));
        assert!((pred.coeffs[0][1] - fp * coeffs[0][1]).norm() < 1e-10);
        assert!((pred.coeffs[0][0] - (fp * coeffs[0][0] - dfp * coeffs[0][1])).norm() < 1e-10);
        let rep = verify_push(&f, &t, &coeffs, 0.0, &cfg).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
