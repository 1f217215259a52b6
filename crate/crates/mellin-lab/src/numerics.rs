//! Shared numerical helpers: finite differences, fits, norms, cutoffs, FFT plans.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Floor used when taking logarithms of (possibly vanishing) sup-norms.
pub const LOG_FLOOR: f64 = 1e-300;

/// `(1 + |x|^2)^{1/2}`.
pub fn bracket(xs: &[f64]) -> f64 {
    (1.0 + xs.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn bracket1(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Values that can be combined linearly, so finite differences work on them.
pub trait Linear: Clone {
    fn lin(a: &Self, ca: f64, b: &Self, cb: f64) -> Self;
}

impl Linear for f64 {
    fn lin(a: &Self, ca: f64, b: &Self, cb: f64) -> Self {
        a * ca + b * cb
    }
}

impl Linear for C64 {
    fn lin(a: &Self, ca: f64, b: &Self, cb: f64) -> Self {
        a * ca + b * cb
    }
}

impl Linear for CMat {
    fn lin(a: &Self, ca: f64, b: &Self, cb: f64) -> Self {
        let mut out = a.clone();
        out.iter_mut()
            .zip(b.iter())
            .for_each(|(x, y)| *x = *x * ca + y * cb);
        out
    }
}

/// First derivative by central differences with one Richardson step (error O(h^4)).
pub fn derivative<T: Linear>(f: &dyn Fn(f64) -> T, x: f64, h: f64) -> T {
    let d = |h: f64| {
        let fp = f(x + h);
        let fm = f(x - h);
        T::lin(&fp, 0.5 / h, &fm, -0.5 / h)
    };
    let coarse = d(h);
    let fine = d(0.5 * h);
    T::lin(&fine, 4.0 / 3.0, &coarse, -1.0 / 3.0)
}

/// Mixed partial derivative `∂^order f(x)`, `order[i]` derivatives in coordinate i.
pub fn partial<T: Linear>(f: &dyn Fn(&[f64]) -> T, x: &[f64], order: &[usize], h: f64) -> T {
    match order.iter().position(|&o| o > 0) {
        None => f(x),
        Some(i) => {
            let mut rest = order.to_vec();
            rest[i] -= 1;
            let g = |t: f64| {
                let mut z = x.to_vec();
                z[i] = t;
                partial(f, &z, &rest, h)
            };
            derivative(&g, x[i], h)
        }
    }
}

/// All multi-indices of length `n` with total degree exactly `k`.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in multi_indices(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Least squares line `y = a + b x`; returns `(a, b)`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Power law `y ≈ c x^e` fitted in log-log coordinates.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerFit {
    pub constant: f64,
    pub exponent: f64,
    /// Largest relative deviation `|fit/y - 1|` over the fitted points.
    pub residual: f64,
}

pub fn power_fit(xs: &[f64], ys: &[f64]) -> PowerFit {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(LOG_FLOOR).ln()).collect();
    let (a, b) = line_fit(&lx, &ly);
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| ((a + b * x - y).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    PowerFit {
        constant: a.exp(),
        exponent: b,
        residual,
    }
}

/// Growth exponent of `ys` against `xs` measured on the upper half of the x range.
pub fn tail_growth(xs: &[f64], ys: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = pts.first().map(|p| p.0.ln()).unwrap_or(0.0);
    let hi = pts.last().map(|p| p.0.ln()).unwrap_or(0.0);
    let mid = 0.5 * (lo + hi);
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|p| p.0.ln() >= mid)
        .map(|p| (p.0.ln(), p.1.max(LOG_FLOOR).ln()))
        .unzip();
    if lx.len() < 2 {
        return 0.0;
    }
    line_fit(&lx, &ly).1
}

/// Fits `N(t) ≤ c t^M` using the upper envelope of points sharing the same `t ≥ 1`.
pub fn envelope_fit(ts: &[f64], ns: &[f64]) -> PowerFit {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (&t, &n) in ts.iter().zip(ns) {
        match pts.iter_mut().find(|p| (p.0 - t).abs() <= 1e-9 * t) {
            Some(p) => p.1 = p.1.max(n),
            None => pts.push((t, n)),
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    power_fit(&xs, &ys)
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64)
        .collect()
}

/// Spectral norm by power iteration on `A^* A`; diagonal matrices short-circuit.
pub fn op_norm(a: &CMat) -> f64 {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    if is_diagonal(a) {
        return (0..r.min(c)).map(|i| a[(i, i)].norm()).fold(0.0, f64::max);
    }
    let ah = a.adjoint();
    let mut v = CVec::from_fn(c, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.03 * (i * i) as f64));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let w = &ah * (a * &v);
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / C64::new(next, 0.0);
        if (next - lambda).abs() <= 1e-13 * next {
            break;
        }
        lambda = next;
    }
    (a * &v).norm()
}

pub fn is_diagonal(a: &CMat) -> bool {
    a.iter()
        .enumerate()
        .all(|(k, x)| *x == C64::new(0.0, 0.0) || k % a.nrows() == k / a.nrows())
}

pub fn min_singular_value(a: &CMat) -> f64 {
    if is_diagonal(a) && a.is_square() {
        return (0..a.nrows()).map(|i| a[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    }
    a.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn diag_c(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Smooth cutoff equal to 1 on `[0, one_until]` and 0 on `[zero_from, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cutoff {
    pub one_until: f64,
    pub zero_from: f64,
}

impl Cutoff {
    pub const STANDARD: Cutoff = Cutoff {
        one_until: 0.5,
        zero_from: 2.0 / 3.0,
    };
    pub const WIDE: Cutoff = Cutoff {
        one_until: 2.0 / 3.0,
        zero_from: 5.0 / 6.0,
    };

    pub fn eval(&self, r: f64) -> f64 {
        1.0 - smoothstep((r - self.one_until) / (self.zero_from - self.one_until))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn fft_forward(data: &mut [C64]) {
    plan(data.len(), true).process(data);
}

/// Unnormalised inverse transform.
pub fn fft_inverse(data: &mut [C64]) {
    plan(data.len(), false).process(data);
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Signed FFT frequency index for position `k` in an `n`-point transform.
pub fn fft_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Simple contour helpers on circles.
pub fn circle_laurent(
    f: &dyn Fn(C64) -> CMat,
    center: C64,
    radius: f64,
    orders: usize,
    nodes: usize,
) -> Vec<CMat> {
    // L_k = (1/2πi)∮ f(w)(w-c)^k dw = mean over nodes of f(c + R e^{iθ}) (R e^{iθ})^{k+1}
    let samples: Vec<(C64, CMat)> = (0..nodes)
        .map(|n| {
            let z = C64::from_polar(radius, 2.0 * std::f64::consts::PI * n as f64 / nodes as f64);
            (z, f(center + z))
        })
        .collect();
    (0..orders)
        .map(|k| {
            let mut acc = samples[0].1.clone() * C64::new(0.0, 0.0);
            for (z, v) in &samples {
                acc += v * z.powu(k as u32 + 1);
            }
            acc / C64::new(nodes as f64, 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_derivative_is_accurate() {
        let f = |x: f64| x.sin();
        let d = derivative(&f, 0.7, 1e-2);
        assert!((d - 0.7f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn mixed_partial() {
        let f = |x: &[f64]| x[0] * x[0] * x[1].exp();
        let d = partial(&f, &[1.5, 0.3], &[1, 1], 1e-2);
        assert!((d - 3.0 * 0.3f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn op_norm_matches_svd() {
        let a = CMat::from_fn(4, 3, |i, j| C64::new((i + 2 * j) as f64 - 1.5, (i * j) as f64 * 0.3));
        let s = a.singular_values().max();
        assert!((op_norm(&a) - s).abs() < 1e-9 * s);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert_eq!(multi_indices(0, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn laurent_of_simple_pole() {
        let f = |w: C64| CMat::from_element(1, 1, (w + 2.0) / (w - 1.0));
        let l = circle_laurent(&f, C64::new(1.0, 0.0), 0.5, 2, 64);
        assert!((l[0][(0, 0)] - 3.0).norm() < 1e-12);
        assert!(l[1][(0, 0)].norm() < 1e-12);
    }
}
