//! Fourier-truncated Sobolev scales on the circle and order-reducing families.
//!
//! An element of the scale is a vector of Fourier coefficients `u_k`,
//! `k = -N..=N`; the `E^s` norm is `(Σ ⟨k⟩^{2s} |u_k|^2)^{1/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    bracket, bracket1, diag_c, envelope_fit, multi_indices, partial, tail_growth, CMat, CVec,
    PowerFit, C64,
};

/// Slack allowed on a tail growth exponent before a supremum counts as unbounded.
pub const BOUNDED_SLACK: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ScaleError {
    #[error("scale needs at least one mode on each side (got N = {0})")]
    TooFewModes(i64),
    #[error("base dimension must be non-negative (got {0})")]
    NegativeDimension(i64),
    #[error("element has {got} coefficients, scale expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("families act on different scales or parameter dimensions")]
    FamilyMismatch,
    #[error("π(μ, ν) requires ν ≥ μ (got μ = {mu}, ν = {nu})")]
    PiOrder { mu: f64, nu: f64 },
    #[error("parameter η has dimension {got}, family expects {expected}")]
    ParamDimension { expected: usize, got: usize },
    #[error("non-finite norm encountered")]
    NonFinite,
    #[error("invalid family parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub modes: usize,
    /// Dimension of the base manifold (1 for the circle).
    pub d: usize,
}

pub fn make_fourier_scale(n: i64, d: i64) -> Result<ScaleSpec, ScaleError> {
    if n < 1 {
        return Err(ScaleError::TooFewModes(n));
    }
    if d < 0 {
        return Err(ScaleError::NegativeDimension(d));
    }
    Ok(ScaleSpec {
        modes: n as usize,
        d: d as usize,
    })
}

impl ScaleSpec {
    pub fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn mode(&self, i: usize) -> i64 {
        i as i64 - self.modes as i64
    }

    pub fn modes_iter(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.dim()).map(|i| self.mode(i))
    }

    pub fn index(&self, k: i64) -> Option<usize> {
        let i = k + self.modes as i64;
        (0..self.dim() as i64).contains(&i).then_some(i as usize)
    }

    pub fn unit(&self, k: i64) -> Option<CVec> {
        self.index(k).map(|i| {
            let mut v = CVec::zeros(self.dim());
            v[i] = C64::new(1.0, 0.0);
            v
        })
    }

    fn check(&self, u: &CVec) -> Result<(), ScaleError> {
        if u.len() != self.dim() {
            return Err(ScaleError::LengthMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `E^s` norm.
    pub fn norm(&self, s: f64, u: &CVec) -> Result<f64, ScaleError> {
        self.check(u)?;
        Ok(self
            .modes_iter()
            .zip(u.iter())
            .map(|(k, x)| bracket1(k as f64).powf(2.0 * s) * x.norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// The `E^0` pairing `Σ u_k conj(v_k)`, which realises `E^{-s}` as the dual of `E^s`.
    pub fn pairing(&self, u: &CVec, v: &CVec) -> Result<C64, ScaleError> {
        self.check(u)?;
        self.check(v)?;
        Ok(u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum())
    }

    /// Norm of the diagonal operator `diag(d_k)` from `E^s` to `E^t`.
    pub fn diag_norm(&self, d: &[f64], s: f64, t: f64) -> f64 {
        self.modes_iter()
            .zip(d)
            .map(|(k, x)| x.abs() * bracket1(k as f64).powf(t - s))
            .fold(0.0, f64::max)
    }
}

/// Rule producing the diagonal multiplier `b^s(η)` on mode `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Multiplier {
    /// `(1 + |η|^2 + k^2)^{s/2}`.
    JapaneseBracket,
    /// `(1 + |m η|^2 + k^2)^{s/2}`.
    Dilated { m: f64 },
    /// `(1 + |η|^2 + k^2)^{p s/2}`.
    Power { p: f64 },
}

/// A family `b^s(η)` of diagonal multipliers on a Fourier scale, `η ∈ ℝ^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReducingFamily {
    pub scale: ScaleSpec,
    pub q: usize,
    pub rule: Multiplier,
}

/// On-disk description of a family, e.g.
/// `{"modes": 8, "d": 1, "family": {"kind": "japanese-bracket", "q": 1}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub modes: i64,
    pub d: i64,
    pub family: FamilyDesc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyDesc {
    pub q: usize,
    #[serde(flatten)]
    pub rule: Multiplier,
}

impl FamilyFile {
    pub fn build(&self) -> Result<OrderReducingFamily, ScaleError> {
        OrderReducingFamily::new(make_fourier_scale(self.modes, self.d)?, self.family.q, self.family.rule.clone())
    }
}

impl OrderReducingFamily {
    pub fn new(scale: ScaleSpec, q: usize, rule: Multiplier) -> Result<Self, ScaleError> {
        match rule {
            Multiplier::Dilated { m } if !(m.is_finite() && m > 0.0) => {
                return Err(ScaleError::InvalidParameter(format!("dilation m = {m}")))
            }
            Multiplier::Power { p } if !(p.is_finite() && p > 0.0) => {
                return Err(ScaleError::InvalidParameter(format!("power p = {p}")))
            }
            _ => {}
        }
        Ok(Self { scale, q, rule })
    }

    pub fn standard(scale: ScaleSpec, q: usize) -> Self {
        Self {
            scale,
            q,
            rule: Multiplier::JapaneseBracket,
        }
    }

    pub fn multiplier(&self, s: f64, eta: &[f64], k: i64) -> f64 {
        let e2: f64 = eta.iter().map(|x| x * x).sum();
        let k2 = (k * k) as f64;
        match self.rule {
            Multiplier::JapaneseBracket => (1.0 + e2 + k2).powf(0.5 * s),
            Multiplier::Dilated { m } => (1.0 + m * m * e2 + k2).powf(0.5 * s),
            Multiplier::Power { p } => (1.0 + e2 + k2).powf(0.5 * p * s),
        }
    }

    pub fn diag(&self, s: f64, eta: &[f64]) -> Vec<f64> {
        self.scale.modes_iter().map(|k| self.multiplier(s, eta, k)).collect()
    }

    pub fn matrix(&self, s: f64, eta: &[f64]) -> CMat {
        diag_c(&self.diag(s, eta))
    }

    pub fn apply(&self, s: f64, eta: &[f64], u: &CVec) -> Result<CVec, ScaleError> {
        self.check_eta(eta)?;
        self.scale.check(u)?;
        let d = self.diag(s, eta);
        Ok(CVec::from_iterator(u.len(), u.iter().zip(&d).map(|(x, m)| x * *m)))
    }

    fn check_eta(&self, eta: &[f64]) -> Result<(), ScaleError> {
        if eta.len() != self.q {
            return Err(ScaleError::ParamDimension {
                expected: self.q,
                got: eta.len(),
            });
        }
        Ok(())
    }

    fn compatible(&self, other: &Self) -> bool {
        self.scale == other.scale && self.q == other.q
    }
}

/// Sample grid for the family checks.
#[derive(Clone, Debug)]
pub struct FamilyGrid {
    pub s_values: Vec<f64>,
    pub etas: Vec<Vec<f64>>,
    pub beta_max: usize,
}

impl FamilyGrid {
    /// Log-spaced `|η|` in `[0, eta_max]` along each coordinate axis and the diagonal.
    pub fn standard(q: usize, s_values: Vec<f64>, beta_max: usize, eta_max: f64, points: usize) -> Self {
        let mags: Vec<f64> = std::iter::once(0.0)
            .chain(crate::numerics::logspace(0.1, eta_max, points))
            .collect();
        let mut dirs: Vec<Vec<f64>> = (0..q)
            .map(|i| (0..q).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        if q > 1 {
            dirs.push(vec![1.0 / (q as f64).sqrt(); q]);
        }
        let mut etas = Vec::new();
        for d in &dirs {
            for &m in &mags {
                etas.push(d.iter().map(|x| x * m).collect());
            }
        }
        if q == 0 {
            etas.push(vec![]);
        }
        Self {
            s_values,
            etas,
            beta_max,
        }
    }
}

const FD_STEP: f64 = 1e-3;

/// Per-`η` supremum over `s`, modes and `|β| = b` of
/// `|left^{s-μ+b}(η) ∂^β right^μ(η) left^{-s}(η)|` (all diagonal).
fn mixed_profile(
    left: &OrderReducingFamily,
    right: &OrderReducingFamily,
    mu: f64,
    b: usize,
    grid: &FamilyGrid,
) -> Vec<f64> {
    let betas = multi_indices(left.q, b);
    grid.etas
        .par_iter()
        .map(|eta| {
            let mut sup: f64 = 0.0;
            for k in left.scale.modes_iter() {
                let f = |x: &[f64]| right.multiplier(mu, x, k);
                let derivs: Vec<f64> = betas.iter().map(|beta| partial(&f, eta, beta, FD_STEP).abs()).collect();
                for &s in &grid.s_values {
                    let w = left.multiplier(s - mu + b as f64, eta, k) * left.multiplier(-s, eta, k);
                    for d in &derivs {
                        sup = sup.max(w * d);
                    }
                }
            }
            sup
        })
        .collect()
}

fn eta_brackets(grid: &FamilyGrid) -> Vec<f64> {
    grid.etas.iter().map(|e| bracket(e)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedBound {
    pub mu: f64,
    pub beta: usize,
    pub sup: f64,
    pub growth: f64,
    pub bounded: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderEntry {
    pub mu: f64,
    pub mixed: Vec<MixedBound>,
    /// Fitted exponent of `‖b^μ(η)‖_{0,0}` against `⟨η⟩` (only for `μ ≤ 0`).
    pub decay_exponent: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderReducingReport {
    pub entries: Vec<OrderEntry>,
    pub pass: bool,
}

fn mixed_bounds(
    left: &OrderReducingFamily,
    right: &OrderReducingFamily,
    mu: f64,
    grid: &FamilyGrid,
) -> Vec<MixedBound> {
    let xs = eta_brackets(grid);
    (0..=grid.beta_max)
        .map(|b| {
            let prof = mixed_profile(left, right, mu, b, grid);
            let sup = prof.iter().copied().fold(0.0, f64::max);
            let growth = tail_growth(&xs, &prof);
            MixedBound {
                mu,
                beta: b,
                sup,
                growth,
                bounded: sup.is_finite() && growth <= BOUNDED_SLACK,
            }
        })
        .collect()
}

/// Checks the order-reducing axioms: bounded mixed expressions
/// `b^{s-μ+|β|}{D^β b^μ}b^{-s}` and decay `‖b^μ(η)‖_{0,0} ≲ ⟨η⟩^μ` for `μ ≤ 0`.
pub fn verify_order_reducing(
    fam: &OrderReducingFamily,
    mus: &[f64],
    grid: &FamilyGrid,
) -> Result<OrderReducingReport, ScaleError> {
    let xs = eta_brackets(grid);
    let entries: Vec<OrderEntry> = mus
        .iter()
        .map(|&mu| {
            let mixed = mixed_bounds(fam, fam, mu, grid);
            let decay_exponent = (mu <= 0.0).then(|| {
                let (x, y): (Vec<f64>, Vec<f64>) = grid
                    .etas
                    .iter()
                    .zip(&xs)
                    .filter(|(e, _)| bracket(e) >= 2.0)
                    .map(|(e, &x)| (x, fam.scale.diag_norm(&fam.diag(mu, e), 0.0, 0.0)))
                    .unzip();
                crate::numerics::power_fit(&x, &y).exponent
            });
            let pass = mixed.iter().all(|m| m.bounded) && decay_exponent.map_or(true, |e| e <= mu + BOUNDED_SLACK);
            OrderEntry {
                mu,
                mixed,
                decay_exponent,
                pass,
            }
        })
        .collect();
    if entries.iter().flat_map(|e| &e.mixed).any(|m| !m.sup.is_finite()) {
        return Err(ScaleError::NonFinite);
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(OrderReducingReport { entries, pass })
}

/// Fitted growth of `‖b^μ(η)‖_{s, s-ν}` in `⟨η⟩`.
pub fn measure_growth(fam: &OrderReducingFamily, mu: f64, nu: f64, s: f64, grid: &FamilyGrid) -> PowerFit {
    let (x, y): (Vec<f64>, Vec<f64>) = grid
        .etas
        .iter()
        .filter(|e| bracket(e) >= 2.0)
        .map(|e| (bracket(e), fam.scale.diag_norm(&fam.diag(mu, e), s, s - nu)))
        .unzip();
    crate::numerics::power_fit(&x, &y)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub forward: Vec<MixedBound>,
    pub backward: Vec<MixedBound>,
    pub equivalent: bool,
}

/// Two families are equivalent when the cross expressions
/// `b_1^{s-μ+|β|}{D^β b_2^μ}b_1^{-s}` and the swapped ones stay bounded.
pub fn verify_equivalence(
    f1: &OrderReducingFamily,
    f2: &OrderReducingFamily,
    mus: &[f64],
    grid: &FamilyGrid,
) -> Result<EquivalenceReport, ScaleError> {
    if !f1.compatible(f2) {
        return Err(ScaleError::FamilyMismatch);
    }
    let forward: Vec<MixedBound> = mus.iter().flat_map(|&mu| mixed_bounds(f1, f2, mu, grid)).collect();
    let backward: Vec<MixedBound> = mus.iter().flat_map(|&mu| mixed_bounds(f2, f1, mu, grid)).collect();
    let equivalent = forward.iter().chain(&backward).all(|m| m.bounded);
    Ok(EquivalenceReport {
        forward,
        backward,
        equivalent,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub s: f64,
    pub norms: Vec<(f64, f64)>,
    pub fit: PowerFit,
    pub pass: bool,
}

/// Measures `N(m) = sup_η ‖b^s(η) b^{-s}(mη)‖_{0,0}` and fits `N ≤ c max(m, 1/m)^M`.
pub fn verify_scaling_bound(fam: &OrderReducingFamily, s: f64, ms: &[f64], grid: &FamilyGrid) -> ScalingReport {
    let norms: Vec<(f64, f64)> = ms
        .iter()
        .map(|&m| {
            let n = grid
                .etas
                .iter()
                .map(|e| {
                    let me: Vec<f64> = e.iter().map(|x| m * x).collect();
                    fam.scale
                        .modes_iter()
                        .map(|k| fam.multiplier(s, e, k) * fam.multiplier(-s, &me, k))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            (m, n)
        })
        .collect();
    let (ts, ns): (Vec<f64>, Vec<f64>) = norms
        .iter()
        .filter(|(m, _)| (m - 1.0).abs() > 1e-12)
        .map(|&(m, n)| (m.max(1.0 / m), n))
        .unzip();
    let fit = envelope_fit(&ts, &ns);
    let pass = fit.residual < 0.1 && fit.exponent.is_finite();
    ScalingReport { s, norms, fit, pass }
}

/// `π(μ, ν) = max(μ, μ - ν)`, the exponent in `⟨ξ, η⟩^μ ⟨ξ⟩^{-ν} ≤ ⟨η⟩^{π(μ,ν)}`.
pub fn pi_exponent(mu: f64, nu: f64) -> Result<f64, ScaleError> {
    if nu < mu {
        return Err(ScaleError::PiOrder { mu, nu });
    }
    Ok(mu.max(mu - nu))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PiReport {
    pub mu: f64,
    pub nu: f64,
    pub pi: f64,
    pub points: usize,
    pub violations: usize,
    /// Largest value of lhs / rhs seen.
    pub max_ratio: f64,
}

/// Pointwise check of `⟨ξ,η⟩^μ ⟨ξ⟩^{-ν} ≤ ⟨η⟩^{π(μ,ν)}` on a product grid.
pub fn pi_grid_check(mu: f64, nu: f64, xis: &[f64], etas: &[f64]) -> Result<PiReport, ScaleError> {
    let pi = pi_exponent(mu, nu)?;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &xi in xis {
        let x2 = 1.0 + xi * xi;
        for &eta in etas {
            let lhs = (x2 + eta * eta).powf(0.5 * mu) / x2.powf(0.5 * nu);
            let rhs = (1.0 + eta * eta).powf(0.5 * pi);
            if lhs > rhs {
                violations += 1;
            }
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(PiReport {
        mu,
        nu,
        pi,
        points: xis.len() * etas.len(),
        violations,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam() -> OrderReducingFamily {
        OrderReducingFamily::standard(make_fourier_scale(4, 1).unwrap(), 1)
    }

    #[test]
    fn scale_construction_errors() {
        assert_eq!(make_fourier_scale(0, 1), Err(ScaleError::TooFewModes(0)));
        assert_eq!(make_fourier_scale(3, -1), Err(ScaleError::NegativeDimension(-1)));
        assert_eq!(make_fourier_scale(3, 1).unwrap().dim(), 7);
    }

    #[test]
    fn unit_vector_norm_is_bracket_power() {
        let sc = make_fourier_scale(5, 1).unwrap();
        let e = sc.unit(3).unwrap();
        let n = sc.norm(2.0, &e).unwrap();
        assert!((n - 10.0).abs() < 1e-12);
        assert!(sc.unit(6).is_none());
    }

    #[test]
    fn length_mismatch_is_reported() {
        let sc = make_fourier_scale(2, 1).unwrap();
        assert!(matches!(
            sc.norm(0.0, &CVec::zeros(3)),
            Err(ScaleError::LengthMismatch { expected: 5, got: 3 })
        ));
    }

    #[test]
    fn reduction_at_zero_is_identity() {
        let f = fam();
        let u = CVec::from_fn(9, |i, _| C64::new(i as f64, -1.0));
        let v = f.apply(0.0, &[3.0], &u).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn growth_of_second_order_reduction() {
        let f = fam();
        let grid = FamilyGrid::standard(1, vec![0.0], 0, 1e4, 40);
        let fit = measure_growth(&f, 2.0, 3.0, 0.0, &grid);
        assert!((fit.exponent - 2.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn pi_values() {
        assert_eq!(pi_exponent(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(pi_exponent(-1.0, 0.0).unwrap(), -1.0);
        assert_eq!(pi_exponent(2.0, 3.0).unwrap(), 2.0);
        assert!(pi_exponent(2.0, 1.0).is_err());
    }

    #[test]
    fn pi_exact_on_xi_zero_line() {
        let r = pi_grid_check(2.0, 3.0, &[0.0], &[0.0, 1.0, 10.0, 1e3]).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.max_ratio, 1.0);
    }

    #[test]
    fn family_file_round_trip() {
        let txt = r#"{"modes": 8, "d": 1, "family": {"kind": "japanese-bracket", "q": 1}}"#;
        let f: FamilyFile = serde_json::from_str(txt).unwrap();
        let fam = f.build().unwrap();
        assert_eq!(fam.scale.dim(), 17);
        assert_eq!(fam.rule, Multiplier::JapaneseBracket);
    }
}
