//! Fuchs-type operators `r^{-μ} Σ a_j(r) (-r∂_r)^j`, their conormal symbols and admissible weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mellin::{fourier_columns, inverse_fourier_columns, spectral_tail, GridFunction, RProfile, NYQUIST_TOL};
use crate::numerics::{is_diagonal, linspace, min_singular_value, CMat, C64, I};

pub use crate::mellin::weight_shift;

#[derive(Debug, Error, PartialEq)]
pub enum ConormalError {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("leading coefficient of the pencil is singular (smallest singular value {0:.3e})")]
    SingularLeading(f64),
    #[error("strip must be bounded and ordered, got [{0}, {1}]")]
    BadStrip(f64, f64),
    #[error("input is under-resolved for spectral differentiation (tail {0:.3e})")]
    Aliasing(f64),
    #[error("eigenvalue solver did not converge")]
    Eigen,
    #[error("grid function dimension {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One coefficient `a_j(r) = profile(r) · matrix`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuchsTerm {
    pub j: usize,
    pub matrix: CMat,
    pub profile: RProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuchsOperator {
    pub order: usize,
    pub dim: usize,
    /// Base dimension `n` in the weight-line offset `(n+1)/2`.
    pub base_dim: usize,
    pub terms: Vec<FuchsTerm>,
}

impl FuchsOperator {
    pub fn new(order: usize, base_dim: usize, terms: Vec<FuchsTerm>) -> Result<Self, ConormalError> {
        let dim = terms.first().map(|t| t.matrix.nrows()).unwrap_or(1);
        for t in &terms {
            if t.j > order {
                return Err(ConormalError::InvalidOperator(format!("term j = {} exceeds order {order}", t.j)));
            }
            if t.matrix.nrows() != dim || t.matrix.ncols() != dim {
                return Err(ConormalError::InvalidOperator("coefficient matrices differ in size".into()));
            }
            if t.matrix.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) || !t.profile.eval(0.0).is_finite() {
                return Err(ConormalError::InvalidOperator(format!("coefficient j = {} is not finite at r = 0", t.j)));
            }
        }
        Ok(Self {
            order,
            dim,
            base_dim,
            terms,
        })
    }

    /// `a_j(r)` summed over the terms carrying power `j`.
    pub fn coefficient(&self, j: usize, r: f64) -> CMat {
        self.terms
            .iter()
            .filter(|t| t.j == j)
            .fold(CMat::zeros(self.dim, self.dim), |acc, t| acc + &t.matrix * C64::new(t.profile.eval(r), 0.0))
    }
}

/// Matrix in a problem file: a real diagonal, dense real rows, or dense complex rows of `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diagonal { diag: Vec<f64> },
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<[f64; 2]>>),
}

impl MatrixSpec {
    pub fn build(&self) -> Result<CMat, ConormalError> {
        let rows: Vec<Vec<C64>> = match self {
            MatrixSpec::Diagonal { diag } => {
                return Ok(CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                    diag.len(),
                    diag.iter().map(|&x| C64::new(x, 0.0)),
                )))
            }
            MatrixSpec::Real(r) => r.iter().map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect()).collect(),
            MatrixSpec::Complex(r) => r.iter().map(|row| row.iter().map(|p| C64::new(p[0], p[1])).collect()).collect(),
        };
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(ConormalError::InvalidOperator("coefficient matrix must be square and non-empty".into()));
        }
        Ok(CMat::from_fn(n, n, |i, k| rows[i][k]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub j: usize,
    pub matrix: MatrixSpec,
    #[serde(default = "const_profile")]
    pub r_profile: RProfile,
}

fn const_profile() -> RProfile {
    RProfile::Const
}

/// On-disk form `{"mu": μ, "base_dim": n, "coeffs": [{"j", "matrix", "r_profile"}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuchsFile {
    pub mu: usize,
    #[serde(default)]
    pub base_dim: usize,
    pub coeffs: Vec<CoefficientSpec>,
}

impl FuchsFile {
    /// Builds the operator; an operator with no non-zero coefficient is rejected.
    pub fn build(&self) -> Result<FuchsOperator, ConormalError> {
        let terms = self
            .coeffs
            .iter()
            .map(|c| {
                Ok(FuchsTerm {
                    j: c.j,
                    matrix: c.matrix.build()?,
                    profile: c.r_profile,
                })
            })
            .collect::<Result<Vec<_>, ConormalError>>()?;
        if terms.iter().all(|t| t.matrix.iter().all(|x| *x == C64::new(0.0, 0.0))) {
            return Err(ConormalError::InvalidOperator("operator has no non-zero coefficient".into()));
        }
        FuchsOperator::new(self.mu, self.base_dim, terms)
    }
}

/// `A u = r^{-μ} Σ_j a_j(r) (-r∂_r)^j u`, with `-r∂_r = ∂_y` applied spectrally.
pub fn apply_fuchs(a: &FuchsOperator, u: &GridFunction) -> Result<GridFunction, ConormalError> {
    if u.dim() != a.dim {
        return Err(ConormalError::DimensionMismatch {
            expected: a.dim,
            got: u.dim(),
        });
    }
    let grid = u.grid;
    let spec = fourier_columns(&grid, &u.values);
    let tail = spectral_tail(&spec);
    if tail > NYQUIST_TOL {
        return Err(ConormalError::Aliasing(tail));
    }
    let mut out = CMat::zeros(grid.n, a.dim);
    for j in 0..=a.order {
        if !a.terms.iter().any(|t| t.j == j) {
            continue;
        }
        let dj = CMat::from_fn(grid.n, a.dim, |k, m| spec[(k, m)] * (I * grid.rho(k)).powu(j as u32));
        let v = inverse_fourier_columns(&grid, &dj);
        for row in 0..grid.n {
            let r = grid.r(row);
            let c = a.coefficient(j, r);
            let vr = v.row(row).transpose();
            let contrib = (c * vr) * C64::new(r.powi(-(a.order as i32)), 0.0);
            for m in 0..a.dim {
                out[(row, m)] += contrib[m];
            }
        }
    }
    Ok(GridFunction { values: out, ..u.clone() })
}

/// `σ_c(w) = Σ_j A_j w^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorPencil {
    pub coeffs: Vec<CMat>,
}

impl OperatorPencil {
    pub fn dim(&self) -> usize {
        self.coeffs.first().map(|c| c.nrows()).unwrap_or(0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, w: C64) -> CMat {
        // Horner
        let mut acc = CMat::zeros(self.dim(), self.dim());
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc
    }

    pub fn is_diagonal(&self) -> bool {
        self.coeffs.iter().all(is_diagonal)
    }

    /// `T^{-1} A_j T` for every coefficient.
    pub fn conjugate(&self, t: &CMat) -> Option<Self> {
        let ti = t.clone().try_inverse()?;
        Some(Self {
            coeffs: self.coeffs.iter().map(|c| &ti * c * t).collect(),
        })
    }
}

pub fn conormal_symbol(a: &FuchsOperator) -> OperatorPencil {
    OperatorPencil {
        coeffs: (0..=a.order).map(|j| a.coefficient(j, 0.0)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl SpectralPoint {
    pub fn w(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

pub const DEDUP_TOL: f64 = 1e-8;

fn eigenvalues(m: CMat) -> Result<Vec<C64>, ConormalError> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000).ok_or(ConormalError::Eigen)?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Block companion matrix of the monic pencil `A_μ^{-1} σ_c`.
fn companion(coeffs: &[CMat]) -> Result<CMat, ConormalError> {
    let mu = coeffs.len() - 1;
    let d = coeffs[0].nrows();
    let lead = &coeffs[mu];
    let smin = min_singular_value(lead);
    let scale = lead.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if !(smin > 1e-12 * scale.max(1.0)) {
        return Err(ConormalError::SingularLeading(smin));
    }
    let inv = lead.clone().try_inverse().ok_or(ConormalError::SingularLeading(smin))?;
    let mut c = CMat::zeros(mu * d, mu * d);
    for j in 0..mu {
        let b = -(&inv * &coeffs[mu - 1 - j]);
        c.view_mut((0, j * d), (d, d)).copy_from(&b);
    }
    for i in 1..mu {
        c.view_mut((i * d, (i - 1) * d), (d, d)).fill_with_identity();
    }
    Ok(c)
}

fn cluster(mut roots: Vec<C64>) -> Vec<SpectralPoint> {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<(C64, usize)> = Vec::new();
    for r in roots {
        match out.iter_mut().find(|(w, _)| (*w - r).norm() <= DEDUP_TOL * (1.0 + r.norm())) {
            Some((w, m)) => {
                *w = (*w * *m as f64 + r) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => out.push((r, 1)),
        }
    }
    out.into_iter()
        .map(|(w, m)| SpectralPoint {
            re: w.re,
            im: w.im,
            multiplicity: m,
        })
        .collect()
}

/// All roots of `det σ_c`, with multiplicity, before any strip restriction.
pub fn pencil_roots(p: &OperatorPencil) -> Result<Vec<C64>, ConormalError> {
    if p.coeffs.is_empty() {
        return Err(ConormalError::InvalidOperator("empty pencil".into()));
    }
    if p.degree() == 0 {
        companion(&p.coeffs)?;
        return Ok(Vec::new());
    }
    if p.is_diagonal() {
        let mut roots = Vec::new();
        for i in 0..p.dim() {
            let scalar: Vec<CMat> = p.coeffs.iter().map(|c| CMat::from_element(1, 1, c[(i, i)])).collect();
            roots.extend(eigenvalues(companion(&scalar)?)?);
        }
        Ok(roots)
    } else {
        eigenvalues(companion(&p.coeffs)?)
    }
}

/// The points of `D` with `c ≤ Re w ≤ c'`, merged at [`DEDUP_TOL`].
pub fn pencil_spectrum(p: &OperatorPencil, strip: (f64, f64)) -> Result<Vec<SpectralPoint>, ConormalError> {
    let (c, cp) = strip;
    if !(c.is_finite() && cp.is_finite()) || c > cp {
        return Err(ConormalError::BadStrip(c, cp));
    }
    let roots = pencil_roots(p)?;
    Ok(cluster(roots.into_iter().filter(|w| w.re >= c && w.re <= cp).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleInterval {
    pub lo: f64,
    pub hi: f64,
    /// Smallest `σ_min(σ_c(w))` over the sampled lines inside the interval.
    pub min_singular: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub gamma_range: (f64, f64),
    pub base_dim: usize,
    pub strip: (f64, f64),
    pub points: Vec<SpectralPoint>,
    pub forbidden: Vec<f64>,
    pub intervals: Vec<AdmissibleInterval>,
}

pub const WEIGHT_MARGIN: f64 = 1e-6;

/// `Re w = (n+1)/2 - γ` for the weight line of `γ`.
pub fn line_offset(gamma: f64, base_dim: usize) -> f64 {
    0.5 * (base_dim as f64 + 1.0) - gamma
}

/// Maximal subintervals of `γ_range` whose weight lines avoid `D` by more than [`WEIGHT_MARGIN`].
pub fn admissible_weights(p: &OperatorPencil, gamma_range: (f64, f64), base_dim: usize) -> Result<WeightReport, ConormalError> {
    let (lo, hi) = gamma_range;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(ConormalError::BadStrip(lo, hi));
    }
    let strip = (line_offset(hi, base_dim), line_offset(lo, base_dim));
    let points = pencil_spectrum(p, strip)?;
    let mut forbidden: Vec<f64> = points.iter().map(|q| line_offset(q.re, base_dim)).collect();
    forbidden.sort_by(f64::total_cmp);
    forbidden.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_TOL);
    let mut intervals = Vec::new();
    let mut start = lo;
    for &g in forbidden.iter().chain([hi + 2.0 * WEIGHT_MARGIN].iter()) {
        let end = (g - WEIGHT_MARGIN).min(hi);
        if end > start {
            intervals.push((start, end));
        }
        start = start.max(g + WEIGHT_MARGIN);
    }
    if lo == hi && forbidden.is_empty() {
        intervals.push((lo, hi));
    }
    let taus = linspace(-40.0, 40.0, 161);
    let intervals = intervals
        .into_iter()
        .map(|(a, b)| {
            let min_singular = [0.0, 0.5, 1.0]
                .iter()
                .map(|t| line_offset(a + t * (b - a), base_dim))
                .flat_map(|beta| taus.iter().map(move |&tau| C64::new(beta, tau)))
                .map(|w| min_singular_value(&p.eval(w)))
                .fold(f64::INFINITY, f64::min);
            AdmissibleInterval { lo: a, hi: b, min_singular }
        })
        .collect();
    Ok(WeightReport {
        gamma_range,
        base_dim,
        strip,
        points,
        forbidden,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mellin::LogGrid;

    fn euler(modes: i64) -> FuchsOperator {
        let ks: Vec<f64> = (-modes..=modes).map(|k| -((k * k) as f64)).collect();
        FuchsOperator::new(
            2,
            0,
            vec![
                FuchsTerm {
                    j: 2,
                    matrix: CMat::identity(ks.len(), ks.len()),
                    profile: RProfile::Const,
                },
                FuchsTerm {
                    j: 0,
                    matrix: crate::numerics::diag_c(&ks),
                    profile: RProfile::Linear { slope: 0.5 },
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn first_order_operator_on_powers() {
        let a = FuchsOperator::new(
            1,
            0,
            vec![FuchsTerm {
                j: 1,
                matrix: CMat::identity(1, 1),
                profile: RProfile::Const,
            }],
        )
        .unwrap();
        let g = LogGrid::new(-4.0, 40.0, 8192).unwrap();
        for c in [0.5, 1.0, 2.5] {
            let u = GridFunction::scalar(g, |r| C64::new(r.powf(c) * (-r * r).exp(), 0.0));
            let v = apply_fuchs(&a, &u).unwrap();
            // r^{-1}(-r∂_r)(r^c e^{-r²}) = (2r² - c) r^{c-1} e^{-r²}
            for j in (0..g.n).step_by(37) {
                let r = g.r(j);
                if (0.05..=2.0).contains(&r) {
                    let exact = (2.0 * r * r - c) * r.powf(c - 1.0) * (-r * r).exp();
                    assert!((v.values[(j, 0)].re - exact).abs() < 1e-8 * (1.0 + exact.abs()));
                }
            }
        }
        assert_eq!(conormal_symbol(&a).eval(C64::new(0.3, 2.0))[(0, 0)], C64::new(0.3, 2.0));
    }

    #[test]
    fn aliasing_is_detected() {
        let a = euler(1);
        let g = LogGrid::default();
        // r^{1/2} has not decayed at y = 12
        let u = GridFunction::from_r(g, 0, 3, |r| nalgebra::DVector::from_element(3, C64::new(r.sqrt() * (-r).exp(), 0.0)));
        assert!(matches!(apply_fuchs(&a, &u), Err(ConormalError::Aliasing(_))));
    }

    #[test]
    fn euler_pencil_roots() {
        let p = conormal_symbol(&euler(2));
        let d = pencil_spectrum(&p, (-10.0, 10.0)).unwrap();
        assert_eq!(d.iter().map(|q| q.multiplicity).sum::<usize>(), 2 * 5);
        for k in -2i64..=2 {
            for s in [-1.0, 1.0] {
                let target = s * k.abs() as f64;
                assert!(d.iter().any(|q| (q.w() - target).norm() < 1e-8));
            }
        }
        assert!(pencil_spectrum(&p, (0.2, 0.2)).unwrap().is_empty());
    }

    #[test]
    fn singular_leading_coefficient_is_rejected() {
        let p = OperatorPencil {
            coeffs: vec![CMat::identity(2, 2), CMat::zeros(2, 2)],
        };
        assert!(matches!(pencil_spectrum(&p, (-1.0, 1.0)), Err(ConormalError::SingularLeading(_))));
    }

    #[test]
    fn forbidden_weights_of_simple_pencils() {
        let lin = OperatorPencil {
            coeffs: vec![CMat::zeros(1, 1), CMat::identity(1, 1)],
        };
        let rep = admissible_weights(&lin, (-2.0, 2.0), 0).unwrap();
        assert_eq!(rep.forbidden.len(), 1);
        assert!((rep.forbidden[0] - 0.5).abs() < 1e-12);
        assert_eq!(rep.intervals.len(), 2);
        assert!(rep.intervals.iter().all(|i| i.min_singular > 0.0));

        let quad = OperatorPencil {
            coeffs: vec![-CMat::identity(1, 1), CMat::zeros(1, 1), CMat::identity(1, 1)],
        };
        let rep = admissible_weights(&quad, (-2.0, 2.0), 0).unwrap();
        assert!((rep.forbidden[0] + 0.5).abs() < 1e-12 && (rep.forbidden[1] - 1.5).abs() < 1e-12);
        assert_eq!(rep.intervals.len(), 3);
    }

    #[test]
    fn non_diagonal_pencil_uses_block_companion() {
        // T^{-1}(w² - diag(1, 4))T has roots ±1, ±2
        let t = CMat::from_fn(2, 2, |i, j| C64::new(1.0 + (i * 2 + j) as f64, 0.5 * j as f64));
        let p = OperatorPencil {
            coeffs: vec![crate::numerics::diag_c(&[-1.0, -4.0]), CMat::zeros(2, 2), CMat::identity(2, 2)],
        }
        .conjugate(&t)
        .unwrap();
        assert!(!p.is_diagonal());
        let d = pencil_spectrum(&p, (-5.0, 5.0)).unwrap();
        for target in [-2.0, -1.0, 1.0, 2.0] {
            assert!(d.iter().any(|q| (q.w() - target).norm() < 1e-8));
        }
    }

    #[test]
    fn zero_operator_file_is_rejected() {
        let f = FuchsFile {
            mu: 1,
            base_dim: 0,
            coeffs: vec![CoefficientSpec {
                j: 1,
                matrix: MatrixSpec::Diagonal { diag: vec![0.0] },
                r_profile: RProfile::Const,
            }],
        };
        assert!(f.build().is_err());
    }

    #[test]
    fn freezing_at_the_tip_gives_the_conormal_symbol() {
        let a = euler(1);
        let w0 = C64::new(-0.5, 0.7);
        let v = nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, -1.0), C64::new(-1.0, 0.5)]);
        let g = LogGrid::new(-4.0, 76.0, 16384).unwrap();
        let u = GridFunction::from_r(g, 0, 3, |r| &v * (C64::new(r, 0.0).powc(-w0) * (-r * r).exp()));
        let au = apply_fuchs(&a, &u).unwrap();
        let frozen = |j: usize| au.at(j) * C64::new(g.r(j), 0.0).powc(w0 + 2.0);
        let (j1, j2) = (g.index_of(8.0), g.index_of(9.0));
        let (r1, r2) = (g.r(j1), g.r(j2));
        // the coefficients are affine in r near the tip, so eliminate the O(r) term
        let extrapolated = (frozen(j2) * C64::new(r1, 0.0) - frozen(j1) * C64::new(r2, 0.0)) / C64::new(r1 - r2, 0.0);
        let exact = conormal_symbol(&a).eval(w0) * &v;
        assert!((extrapolated - &exact).norm() < 1e-6 * exact.norm());
    }

    #[test]
    fn weight_shift_is_isometric_between_weights() {
        let g = LogGrid::default();
        let u = GridFunction::from_y(g, 0, 1, |y| nalgebra::DVector::from_element(1, C64::from_polar((-(y - 0.5).powi(2)).exp(), 0.3 * y)));
        for (s, gamma, beta) in [(0.0, 0.0, 1.0), (1.0, 0.5, -0.7), (-1.0, -1.0, 2.0)] {
            let lhs = crate::mellin::hs_gamma_norm(s, gamma + beta, &weight_shift(beta, &u), None).unwrap();
            let rhs = crate::mellin::hs_gamma_norm(s, gamma, &u, None).unwrap();
            assert!((lhs - rhs).abs() < 1e-8 * rhs);
        }
    }
}
