//! End-to-end acceptance checks, one test per criterion.
//!
//! Each test prints a single `criterion N ... PASS|FAIL` line. The criteria are run one at a
//! time (behind a lock) so that the measured runtimes are not distorted by sibling tests.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use mellin_lab::asympt::{
    extract_coefficients, plant_asymptotics, push_type, verify_push, AsymptConfig, AsymptoticType, TypePoint, PUSH_TOL,
};
use mellin_lab::conormal::{
    admissible_weights, conormal_symbol, pencil_spectrum, weight_shift, FuchsOperator, FuchsTerm,
};
use mellin_lab::kco::{
    asymptotic_remainder, cauchy_riemann_residual, kernel_cutoff, shifted_line_value, CutoffFunction, KcoConfig,
    LineSymbol, RemainderConfig,
};
use mellin_lab::mellin::{
    cyl_norm, hs_gamma_norm, mellin_at, mellin_quantize, mellin_quantize_symbol, op_mellin, op_mellin_bound,
    s_gamma_map, EdgeSymbol, EdgeTerm, GridFunction, LogGrid, MellinLineSymbol, QuantizeConfig, RProfile,
    SigmaShape,
};
use mellin_lab::merosym::{
    elliptic_inverse, invert_one_plus, inverse_residual, make_index_symbol, relative_index_check,
    toeplitz_index_scan, winding_number, EllipticConfig, Glue, MeroSymbol, Pole, Region, ToeplitzConfig,
    TOEPLITZ_SIZES,
};
use mellin_lab::scales::{make_fourier_scale, pi_grid_check, verify_order_reducing, FamilyGrid, OrderReducingFamily};
use mellin_lab::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Runs one criterion, prints its verdict line and fails the test if any check failed.
fn criterion(n: usize, name: &str, budget: Duration, body: impl FnOnce(&mut Vec<String>)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut failures = Vec::new();
    body(&mut failures);
    let elapsed = start.elapsed();
    if elapsed > budget {
        failures.push(format!("runtime {:.1} s exceeds {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64()));
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    // written to the stdout handle directly so the verdict is shown even when the harness captures output
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2} {name:<28} {verdict} ({:.1} s)", elapsed.as_secs_f64());
    for f in &failures {
        let _ = writeln!(out, "    {f}");
    }
    let _ = out.flush();
    drop(out);
    assert!(failures.is_empty(), "criterion {n} failed: {failures:#?}");
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}

#[test]
fn c01_order_reduction() {
    criterion(1, "order reduction", Duration::from_secs(30), |fail| {
        let fam = OrderReducingFamily::standard(make_fourier_scale(8, 1).unwrap(), 2);
        let s_values: Vec<f64> = (0..=8).map(|i| -2.0 + 0.5 * i as f64).collect();
        let grid = FamilyGrid::standard(2, s_values, 2, 1e4, 30);
        let mus = [-2.0, -1.0, 0.0];
        let rep = verify_order_reducing(&fam, &mus, &grid).unwrap();
        check(fail, rep.pass, || format!("verify_order_reducing failed: {rep:?}"));
        for e in &rep.entries {
            let ex = e.decay_exponent.unwrap_or(f64::NAN);
            check(fail, ex <= e.mu + 0.05, || format!("μ = {}: decay exponent {ex}", e.mu));
            check(fail, e.mixed.len() == 3, || format!("μ = {}: expected |β| ≤ 2", e.mu));
            for m in &e.mixed {
                check(fail, m.sup.is_finite() && m.bounded, || format!("μ = {}, |β| = {}: {m:?}", e.mu, m.beta));
            }
        }
    });
}

#[test]
fn c02_pi_bound() {
    criterion(2, "pi bound", Duration::from_secs(5), |fail| {
        let mut axis = vec![0.0];
        axis.extend(logspace(1e-3, 1e6, 199));
        for ((mu, nu), pi) in [((1.0, 2.0), 1.0), ((2.0, 3.0), 2.0), ((0.0, 1.0), 0.0), ((-1.0, 0.0), -1.0)] {
            let rep = pi_grid_check(mu, nu, &axis, &axis).unwrap();
            check(fail, rep.points == 200 * 200, || format!("grid size {}", rep.points));
            check(fail, rep.violations == 0, || format!("(μ,ν) = ({mu},{nu}): {} violations", rep.violations));
            check(fail, (rep.pi - pi).abs() < 1e-15, || format!("(μ,ν) = ({mu},{nu}): π = {}", rep.pi));
            // the bound is attained at ξ = 0
            check(fail, (rep.max_ratio - 1.0).abs() < 1e-12, || format!("(μ,ν) = ({mu},{nu}): max ratio {}", rep.max_ratio));
        }
    });
}

/// `∫_0^∞ r^{w-1} e^{-r} dr` by exp-sinh quadrature, `r = exp(π/2 sinh t)`.
fn gamma_oracle(w: f64) -> f64 {
    let h = 1.0 / 128.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    (-(6 * 128)..=(6 * 128))
        .map(|i| {
            let t = i as f64 * h;
            let x = half_pi * t.sinh();
            if x > 700.0 || x < -700.0 {
                return 0.0;
            }
            let r = x.exp();
            r.powf(w) * (-r).exp() * half_pi * t.cosh()
        })
        .sum::<f64>()
        * h
}

const ORACLE_DRHO: f64 = 0.02;
const ORACLE_RHO_MAX: f64 = 40.0;

/// `(Mu)(β + iρ) = ∫ e^{-(β+iρ)y} u(y) dy` on `|ρ| ≤ 40` by a direct trapezoid sum over `|y| < 9`
/// (the support of the test functions), independent of the FFT path.
fn direct_line_transform(u: &dyn Fn(f64) -> C64, beta: f64) -> Vec<(f64, C64)> {
    let (n, half) = (3000, 9.0);
    let dy = 2.0 * half / n as f64;
    let samples: Vec<(f64, C64)> = (0..=n)
        .map(|j| {
            let y = -half + j as f64 * dy;
            (y, u(y) * (-beta * y).exp())
        })
        .collect();
    let m = (2.0 * ORACLE_RHO_MAX / ORACLE_DRHO).round() as usize;
    (0..=m)
        .map(|k| {
            let rho = -ORACLE_RHO_MAX + k as f64 * ORACLE_DRHO;
            let step = C64::from_polar(1.0, -rho * dy);
            let mut phase = C64::from_polar(1.0, rho * half);
            let mut acc = c(0.0, 0.0);
            for &(_, v) in &samples {
                acc += v * phase;
                phase *= step;
            }
            (rho, acc * dy)
        })
        .collect()
}

/// `((2π)^{-1} ∫ ⟨ρ⟩^{2s} |(Mu)(β+iρ)|² dρ)^{1/2}` by the trapezoid rule.
fn line_norm_oracle(line: &[(f64, C64)], s: f64) -> f64 {
    (line.iter().map(|(rho, m)| (1.0 + rho * rho).powf(s) * m.norm_sqr()).sum::<f64>() * ORACLE_DRHO / (2.0 * std::f64::consts::PI)).sqrt()
}

#[test]
fn c03_mellin_conjugation() {
    criterion(3, "mellin conjugation", Duration::from_secs(60), |fail| {
        for (w, exact) in [(1.0, 1.0), (0.5, std::f64::consts::PI.sqrt()), (2.0, 1.0)] {
            let o = gamma_oracle(w);
            check(fail, (o - exact).abs() < 1e-13, || format!("quadrature oracle Γ({w}) = {o}"));
        }
        let wide = LogGrid::new(-4.0, 44.0, 8192).unwrap();
        let e = |r: f64| c((-r).exp(), 0.0);
        for w in [1.0, 0.5, 2.0] {
            let got = mellin_at(&e, c(w, 0.0), &wide);
            let err = (got - gamma_oracle(w)).norm();
            check(fail, err < 1e-6, || format!("M_0(e^-r)({w}) off by {err:e}"));
        }

        let grid = LogGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let funcs: Vec<Box<dyn Fn(f64) -> C64>> = (0..20)
            .map(|_| {
                let bumps: Vec<(f64, f64, C64, f64)> = (0..3)
                    .map(|_| {
                        (
                            rng.gen_range(-5.0..5.0),
                            rng.gen_range(0.4..1.5),
                            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                            rng.gen_range(-4.0..4.0),
                        )
                    })
                    .collect();
                Box::new(move |y: f64| {
                    // smooth compact window on |y| < 9, inside the transform's untouched range
                    let t = y / 9.0;
                    let window = if t.abs() < 1.0 { (1.0 - 1.0 / (1.0 - t * t)).exp() } else { 0.0 };
                    window * bumps
                        .iter()
                        .map(|&(m, s, a, om)| a * C64::from_polar((-(y - m).powi(2) / (2.0 * s * s)).exp(), om * y))
                        .sum::<C64>()
                }) as Box<dyn Fn(f64) -> C64>
            })
            .collect();
        let (mut worst, mut worst_oracle): (f64, f64) = (0.0, 0.0);
        for u in &funcs {
            let ug = GridFunction::from_y(grid, 0, 1, |y| CVec::from_element(1, u(y)));
            for gamma in [-1.0, 0.0, 1.0] {
                let line = direct_line_transform(u, 0.5 - gamma);
                for s in [-1.0, 0.0, 1.0, 2.0] {
                    let a = hs_gamma_norm(s, gamma, &ug, None).unwrap();
                    let b = cyl_norm(s, &s_gamma_map(gamma, &ug), None).unwrap();
                    worst = worst.max((a - b).abs() / b);
                    let o = line_norm_oracle(&line, s);
                    worst_oracle = worst_oracle.max((a - o).abs() / o);
                }
            }
        }
        check(fail, worst_oracle < 1e-6, || format!("H^(s,γ) norm vs direct line quadrature: {worst_oracle:e}"));
        check(fail, worst < 1e-6, || format!("conjugation mismatch {worst:e}"));
    });
}

fn bump_tests(grid: LogGrid, dim: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..4)
        .map(|_| {
            let (m, s, om) = (rng.gen_range(-4.0..4.0), rng.gen_range(0.5..1.2), rng.gen_range(-6.0..6.0));
            let amps: Vec<C64> = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            GridFunction::from_y(grid, 0, dim, move |y| {
                let g = C64::from_polar((-(y - m).powi(2) / (2.0 * s * s)).exp(), om * y);
                CVec::from_iterator(dim, amps.iter().map(|a| a * g))
            })
        })
        .collect()
}

#[test]
fn c04_mellin_continuity() {
    criterion(4, "mellin continuity", Duration::from_secs(60), |fail| {
        let grid = LogGrid::default();
        let corpus: Vec<(&str, MellinLineSymbol)> = vec![
            ("1/(w+3)", MellinLineSymbol::scalar(-1.0, |w| 1.0 / (w + 3.0))),
            ("(w+2)/(w+3)", MellinLineSymbol::scalar(0.0, |w| (w + 2.0) / (w + 3.0))),
            ("w", MellinLineSymbol::scalar(1.0, |w| w)),
            ("w^2+1", MellinLineSymbol::scalar(2.0, |w| w * w + 1.0)),
            ("1/((w+1)(w+2))", MellinLineSymbol::scalar(-2.0, |w| 1.0 / ((w + 1.0) * (w + 2.0)))),
            ("(w+4)^(1/2)", MellinLineSymbol::scalar(0.5, |w| (w + 4.0).sqrt())),
            ("1/(w+1-2i)", MellinLineSymbol::scalar(-1.0, |w| 1.0 / (w + c(1.0, -2.0)))),
            ("exp((w-1/2)^2)", MellinLineSymbol::scalar(0.0, |w| (w - 0.5).powi(2).exp())),
            (
                "upper triangular 2x2",
                MellinLineSymbol::constant(0.0, 2, |w| {
                    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), 1.0 / (w + 3.0), c(0.0, 0.0), (w + 1.0) / (w + 2.0)])
                }),
            ),
            (
                "rotation 2x2",
                MellinLineSymbol::constant(1.0, 2, |w| {
                    CMat::from_row_slice(2, 2, &[w, c(1.0, 0.0), c(-1.0, 0.0), w + 1.0])
                }),
            ),
        ];
        for (i, (name, f)) in corpus.iter().enumerate() {
            let tests = bump_tests(grid, f.dim_in, 40 + i as u64);
            for s in [0.0, 1.0] {
                let rep = op_mellin_bound(f, s, 0.0, None, None, &tests).unwrap();
                check(fail, rep.ratio <= rep.c * 1.001, || {
                    format!("{name}, s = {s}: ratio {} > c = {}", rep.ratio, rep.c)
                });
            }
        }
        for dim in [1, 3] {
            for u in bump_tests(grid, dim, 7) {
                let v = op_mellin(0.5, &MellinLineSymbol::identity(dim), &u).unwrap();
                let err = v.max_abs_diff(&u);
                check(fail, err < 1e-10, || format!("identity symbol error {err:e}"));
            }
        }
    });
}

#[test]
fn c05_kernel_cutoff() {
    criterion(5, "kernel cut-off", Duration::from_secs(90), |fail| {
        let phi = CutoffFunction::bump(3.0).with_tilt(0.5);
        let cfg = RemainderConfig::default();
        for mu in [-1.0, 0.0, 1.0] {
            let a = LineSymbol::bracket_power(3.0, c(mu, 1.0));
            for k in 1..=3 {
                let r = asymptotic_remainder(&phi, &a, k, &cfg).unwrap();
                let target = mu - k as f64;
                check(fail, (r.fit.exponent - target).abs() < 0.3, || {
                    format!("μ = {mu}, K = {k}: exponent {} vs {target}", r.fit.exponent)
                });
            }
        }

        let kco = KcoConfig::default();
        let value = c(2.5, -1.0);
        let h = kernel_cutoff(&phi, &LineSymbol::scalar(0.0, move |_| value), &kco).unwrap();
        for z in [c(0.0, 0.0), c(37.0, 0.0), c(-5.0, 1.5), c(100.0, -2.5), c(-300.0, 2.9)] {
            let err = (h.evaluate_strip(z).unwrap()[(0, 0)] - value).norm();
            check(fail, err < 1e-10, || format!("V(φ)c at {z}: error {err:e}"));
        }

        let phi = CutoffFunction::default().with_tilt(0.2);
        for mu in [-1.0, 0.5] {
            let a = LineSymbol::bracket_power(3.0, c(mu, 1.0));
            let h = kernel_cutoff(&phi, &a, &kco).unwrap();
            for z in [c(0.0, 0.0), c(3.0, 1.0), c(-40.0, -2.0), c(150.0, 2.5)] {
                let cr = cauchy_riemann_residual(&h, z, 1e-2);
                check(fail, cr < 1e-6, || format!("μ = {mu}, ζ = {z}: CR residual {cr:e}"));
                // independent stencil: h(ζ+ε) - h(ζ-ε) = i^{-1}(h(ζ+iε) - h(ζ-iε)) for holomorphic h
                let e = 1e-3;
                let dx = h.eval(z + e)[(0, 0)] - h.eval(z - e)[(0, 0)];
                let dy = h.eval(z + c(0.0, e))[(0, 0)] - h.eval(z - c(0.0, e))[(0, 0)];
                let defect = (dy - c(0.0, 1.0) * dx).norm() / dx.norm().max(h.eval(z)[(0, 0)].norm() * e);
                check(fail, defect < 1e-6, || format!("μ = {mu}, ζ = {z}: stencil defect {defect:e}"));
                let shifted = shifted_line_value(&phi, &a, z.im, z.re, &kco).unwrap();
                let err = (h.evaluate_strip(z).unwrap() - &shifted).norm() / (1.0 + shifted.norm());
                check(fail, err < 1e-8, || format!("μ = {mu}, ζ = {z}: δ-shift error {err:e}"));
            }
        }
    });
}

#[test]
fn c06_index() {
    criterion(6, "index", Duration::from_secs(180), |fail| {
        let gamma = 0.25;
        let cfg = ToeplitzConfig::default();
        for k in -3..=3 {
            let f = make_index_symbol(k, gamma).unwrap();
            let w = winding_number(&f, 0.5 - gamma).unwrap();
            check(fail, w.winding == k, || format!("k = {k}: winding {}", w.winding));
            let scan = toeplitz_index_scan(&f, gamma, &cfg);
            let sizes: Vec<usize> = scan.by_size.iter().map(|x| x.0).collect();
            check(fail, sizes == TOEPLITZ_SIZES, || format!("k = {k}: sizes {sizes:?}"));
            check(fail, scan.by_size.iter().all(|&(_, i)| i == k), || format!("k = {k}: Toeplitz {:?}", scan.by_size));
        }
        let sym = |k: i64| make_index_symbol(k, 0.0).unwrap();
        // (f_A, f_B, right, right~)
        for (ka, kb, kr, kt) in [(1, 0, 0, -1), (2, -1, 0, 1), (-1, 1, 1, 0), (1, -2, -1, 0), (0, 2, 0, -2)] {
            let glue = Glue {
                right: sym(kr),
                right_tilde: sym(kt),
            };
            match relative_index_check(&sym(ka), &sym(kb), &glue, 0.0, &cfg) {
                Ok(rep) => {
                    check(fail, rep.holds, || format!("({ka},{kb}|{kr},{kt}): {rep:?}"));
                    // the glued index adds the two tip windings
                    let expect = [ka + kr, kb + kr, ka + kt, kb + kt];
                    let got = [rep.ind_a, rep.ind_b, rep.ind_a_tilde, rep.ind_b_tilde];
                    check(fail, got == expect, || format!("({ka},{kb}|{kr},{kt}): indices {got:?}, expected {expect:?}"));
                }
                Err(e) => fail.push(format!("({ka},{kb}|{kr},{kt}): {e}")),
            }
        }
    });
}

fn scalar_pole(cc: f64, p: C64) -> MeroSymbol {
    MeroSymbol::rational(1, vec![Pole::simple(p, CMat::from_element(1, 1, c(cc, 0.0)))]).unwrap()
}

#[test]
fn c07_meromorphic_inversion() {
    criterion(7, "meromorphic inversion", Duration::from_secs(120), |fail| {
        let region = Region {
            re: (-2.5, 2.5),
            im: (-2.5, 2.5),
        };
        let lines = [-1.7, 0.9, 1.9];
        for (cc, p) in [(0.7, c(0.2, 0.3)), (-0.4, c(-0.5, 1.0)), (1.3, c(0.0, -0.8))] {
            let m = scalar_pole(cc, p);
            match invert_one_plus(&m, &region) {
                Ok(minv) => {
                    let res = inverse_residual(&m, &minv, &lines);
                    check(fail, res < 1e-8, || format!("c = {cc}, p = {p}: residual {res:e}"));
                    check(fail, minv.poles.len() == 1, || format!("c = {cc}, p = {p}: {} poles", minv.poles.len()));
                    if let Some(q) = minv.poles.first() {
                        let err = (q.p - (p - cc)).norm();
                        check(fail, err < 1e-8, || format!("c = {cc}, p = {p}: inverse pole at {} ({err:e})", q.p));
                    }
                    // closed form (1 + c/(w-p))^{-1} - 1 = -c/(w-p+c)
                    for w in [c(-1.7, 0.4), c(0.9, -2.0), c(1.9, 3.0)] {
                        let err = (minv.eval(w)[(0, 0)] + cc / (w - p + cc)).norm();
                        check(fail, err < 1e-8, || format!("c = {cc}, p = {p}: value at {w} off by {err:e}"));
                    }
                }
                Err(e) => fail.push(format!("c = {cc}, p = {p}: {e}")),
            }
        }
        // rank-one corpus: c u v*/(v* u)/(w - p)
        let rank_one = |u: [C64; 3], v: [C64; 3], cc: f64, p: C64| {
            let (u, v) = (CVec::from_row_slice(&u), CVec::from_row_slice(&v));
            let proj = &u * v.adjoint() / v.dotc(&u);
            (MeroSymbol::rational(3, vec![Pole::simple(p, &proj * c(cc, 0.0))]).unwrap(), proj)
        };
        for (u, v, cc, p) in [
            ([c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 0.6, c(0.0, 0.5)),
            ([c(1.0, 0.5), c(-1.0, 0.0), c(2.0, 0.0)], [c(0.3, 0.0), c(1.0, -1.0), c(0.5, 0.0)], -0.9, c(0.4, -0.6)),
        ] {
            let (m, proj) = rank_one(u, v, cc, p);
            match invert_one_plus(&m, &region) {
                Ok(minv) => {
                    let res = inverse_residual(&m, &minv, &lines);
                    check(fail, res < 1e-8, || format!("rank one c = {cc}: residual {res:e}"));
                    for w in [c(-1.7, 0.4), c(1.9, -1.0)] {
                        let exact = &proj * (-cc / (w - p + cc));
                        let err = (minv.eval(w) - exact).norm();
                        check(fail, err < 1e-8, || format!("rank one c = {cc}: value at {w} off by {err:e}"));
                    }
                }
                Err(e) => fail.push(format!("rank one c = {cc}: {e}")),
            }
        }

        let (beta, lam) = (0.5, c(-0.5, 0.3));
        let g = MeroSymbol::scalar_entire(1.0, move |w| (w - lam) * (1.0 + 0.3 * (w - beta).powi(2).exp()));
        let g2 = MeroSymbol::entire(1.0, 2, move |w| {
            CMat::from_row_slice(2, 2, &[w + 2.0, c(0.5, 0.0), c(0.0, 0.0), w + c(1.5, -1.0)])
        });
        for (name, g, beta) in [("scalar", g, beta), ("triangular", g2, 0.0)] {
            match elliptic_inverse(&g, &EllipticConfig::standard(beta)) {
                Ok(inv) => {
                    let mut worst: f64 = 0.0;
                    for b in [beta - 0.5, beta, beta + 0.9] {
                        for i in 0..=80 {
                            let w = c(b, -20.0 + 0.5 * i as f64);
                            let r = g.eval(w) * inv.f.eval(w) - CMat::identity(g.dim, g.dim);
                            worst = worst.max(r.norm());
                        }
                    }
                    check(fail, worst < 1e-7, || format!("{name}: gf - 1 = {worst:e}"));
                }
                Err(e) => fail.push(format!("{name}: {e}")),
            }
        }
    });
}

#[test]
fn c08_conormal_weights() {
    criterion(8, "conormal and weights", Duration::from_secs(30), |fail| {
        let modes = 3i64;
        let ks: Vec<i64> = (-modes..=modes).collect();
        let diag: Vec<f64> = ks.iter().map(|k| -((k * k) as f64)).collect();
        let n = ks.len();
        let a = FuchsOperator::new(
            2,
            1,
            vec![
                FuchsTerm {
                    j: 2,
                    matrix: CMat::identity(n, n),
                    profile: RProfile::Const,
                },
                FuchsTerm {
                    j: 0,
                    matrix: CMat::from_diagonal(&CVec::from_iterator(n, diag.iter().map(|&x| c(x, 0.0)))),
                    profile: RProfile::Exp { rate: 1.0 },
                },
            ],
        )
        .unwrap();
        let p = conormal_symbol(&a);
        let spec = pencil_spectrum(&p, (-10.0, 10.0)).unwrap();
        // per-mode oracle: w² - k² = 0 ⇔ w = ±|k|
        let mut expected: Vec<(f64, usize)> = Vec::new();
        for &k in &ks {
            for r in [-(k.abs() as f64), k.abs() as f64] {
                match expected.iter_mut().find(|(x, _)| *x == r) {
                    Some(e) => e.1 += 1,
                    None => expected.push((r, 1)),
                }
            }
        }
        check(fail, spec.len() == expected.len(), || format!("{} distinct points, expected {}", spec.len(), expected.len()));
        for (r, m) in &expected {
            let hit = spec.iter().find(|q| (q.w() - r).norm() < 1e-8);
            check(fail, hit.map(|q| q.multiplicity) == Some(*m), || format!("root {r}: found {hit:?}, multiplicity {m}"));
        }

        let range = (-3.5, 4.5);
        let rep = admissible_weights(&p, range, 1).unwrap();
        // γ is forbidden iff (n+1)/2 - γ = ±k, here 1 ∓ k
        let mut forbidden: Vec<f64> = expected.iter().map(|(r, _)| 1.0 - r).filter(|g| *g >= range.0 && *g <= range.1).collect();
        forbidden.sort_by(f64::total_cmp);
        check(fail, rep.forbidden.len() == forbidden.len(), || format!("forbidden {:?}, expected {forbidden:?}", rep.forbidden));
        for (x, y) in rep.forbidden.iter().zip(&forbidden) {
            check(fail, (x - y).abs() < 1e-8, || format!("forbidden {x} vs {y}"));
        }
        let margin = 1e-6;
        for iv in &rep.intervals {
            for g in &forbidden {
                let clear = iv.hi <= g - margin + 1e-12 || iv.lo >= g + margin - 1e-12;
                check(fail, clear, || format!("interval [{}, {}] touches forbidden {g}", iv.lo, iv.hi));
            }
            check(fail, iv.min_singular > 0.0, || format!("interval [{}, {}] has singular lines", iv.lo, iv.hi));
        }
        let covered: f64 = rep.intervals.iter().map(|iv| iv.hi - iv.lo).sum();
        let expect = (range.1 - range.0) - 2.0 * margin * forbidden.len() as f64;
        check(fail, (covered - expect).abs() < 1e-9, || format!("admissible length {covered} vs {expect}"));

        let grid = LogGrid::default();
        let u = GridFunction::from_y(grid, 1, 1, |y| CVec::from_element(1, C64::from_polar((-(y - 0.5).powi(2)).exp(), 0.3 * y)));
        for (s, gamma, beta) in [(0.0, 0.0, 1.0), (1.0, 0.5, -0.7), (-1.0, -1.0, 2.0), (2.0, 0.3, 0.25)] {
            let lhs = hs_gamma_norm(s, gamma + beta, &weight_shift(beta, &u), None).unwrap();
            let rhs = hs_gamma_norm(s, gamma, &u, None).unwrap();
            check(fail, (lhs - rhs).abs() < 1e-8 * rhs, || format!("weight shift (s,γ,β) = ({s},{gamma},{beta}): {lhs} vs {rhs}"));
        }
    });
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

#[test]
fn c09_asymptotics() {
    criterion(9, "asymptotics", Duration::from_secs(60), |fail| {
        let cfg = AsymptConfig::default();
        let (t, coeffs) = five_pole();
        let u = plant_asymptotics(&t, &coeffs, &cfg).unwrap();
        let got = extract_coefficients(&u, &t, &cfg).unwrap();
        let err = got.iter().flatten().zip(coeffs.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        check(fail, err < 1e-6, || format!("round trip error {err:e}"));

        let p = c(0.6, 0.2);
        let single = AsymptoticType::new(vec![TypePoint::new(p, 1)], -1.2, -1.5, 0).unwrap();
        let sc = vec![vec![c(0.5, 0.5), c(-0.3, 0.0)]];
        let entire = MeroSymbol::scalar_entire(2.0, |w| w * w - 0.5 * w + 2.0);
        let q = c(1.0, -0.4);
        let with_pole = MeroSymbol::rational(1, vec![Pole::simple(q, CMat::from_element(1, 1, c(0.7, 0.0)))]).unwrap();
        let pc = c(0.4, 0.0);
        let lone = AsymptoticType::new(vec![TypePoint::new(pc, 0)], -1.2, -1.5, 0).unwrap();
        let colliding = MeroSymbol::rational(1, vec![Pole::simple(pc, CMat::from_element(1, 1, c(1.0, 0.0)))]).unwrap();
        let cases: [(&str, &MeroSymbol, &AsymptoticType, Vec<Vec<C64>>); 3] = [
            ("entire", &entire, &single, sc.clone()),
            ("pole in window", &with_pole, &single, sc.clone()),
            ("collision", &colliding, &lone, vec![vec![c(1.0, 0.0)]]),
        ];
        for (name, f, t, cs) in cases {
            match verify_push(f, t, &cs, 0.0, &cfg) {
                Ok(rep) => {
                    check(fail, rep.pass && rep.max_err < PUSH_TOL, || format!("{name}: {rep:?}"));
                }
                Err(e) => fail.push(format!("{name}: {e}")),
            }
        }
        // oracles for the predictions: f(p)c_1 and f(p)c_0 - f'(p)c_1 for holomorphic f,
        // and a new log term -c_0 res f when the poles collide
        let fp = p * p - 0.5 * p + 2.0;
        let dfp = 2.0 * p - 0.5;
        let pred = push_type(&entire, &single, &sc, &cfg).unwrap();
        let err = (pred.coeffs[0][1] - fp * sc[0][1]).norm() + (pred.coeffs[0][0] - (fp * sc[0][0] - dfp * sc[0][1])).norm();
        check(fail, err < 1e-10, || format!("entire prediction off by {err:e}"));
        let pred = push_type(&colliding, &lone, &[vec![c(1.0, 0.0)]], &cfg).unwrap();
        check(fail, pred.q.points[0].m == 1 && pred.collisions.len() == 1, || format!("collision type {:?}", pred.q));
        let err = (pred.coeffs[0][1] + 1.0).norm();
        check(fail, err < 1e-8, || format!("log coefficient off by {err:e}"));
    });
}

#[test]
fn c10_mellin_quantisation() {
    criterion(10, "mellin quantisation", Duration::from_secs(120), |fail| {
        let corpus = [
            EdgeSymbol {
                terms: vec![EdgeTerm {
                    coef: 1.0,
                    profile: RProfile::Exp { rate: 1.0 },
                    shape: SigmaShape::Gaussian { width: 4.0 },
                }],
            },
            EdgeSymbol {
                terms: vec![
                    EdgeTerm {
                        coef: 0.5,
                        profile: RProfile::Const,
                        shape: SigmaShape::Constant,
                    },
                    EdgeTerm {
                        coef: -1.5,
                        profile: RProfile::Linear { slope: 0.5 },
                        shape: SigmaShape::Gaussian { width: 6.0 },
                    },
                ],
            },
        ];
        for (i, a) in corpus.iter().enumerate() {
            match mellin_quantize(a, &QuantizeConfig::default()) {
                Ok((_, rep)) => check(fail, rep.exponent < -4.0, || format!("symbol {i}: {rep:?}")),
                Err(e) => fail.push(format!("symbol {i}: {e}")),
            }
        }
        let euler = EdgeSymbol {
            terms: vec![EdgeTerm {
                coef: 1.0,
                profile: RProfile::Const,
                shape: SigmaShape::Monomial { power: 1 },
            }],
        };
        let cfg = QuantizeConfig {
            grid: LogGrid::new(-4.0, 40.0, 8192).unwrap(),
            ..QuantizeConfig::default()
        };
        let q = mellin_quantize_symbol(&euler, &cfg).unwrap();
        for cexp in [0.5, 1.0, 2.0, 3.5] {
            let u = GridFunction::scalar(q.grid, |r| c(r.powf(cexp) * (-r * r).exp(), 0.0));
            let v = q.apply(&u).unwrap();
            let mut worst: f64 = 0.0;
            for j in 0..q.grid.n {
                let r = q.grid.r(j);
                if r <= 2.0 && q.grid.y(j) < 4.0 {
                    // r∂_r (r^c e^{-r²}) = (c - 2r²) r^c e^{-r²}
                    let exact = (cexp - 2.0 * r * r) * r.powf(cexp) * (-r * r).exp();
                    worst = worst.max((v.values[(j, 0)] - exact).norm() / r.powf(cexp));
                }
            }
            check(fail, worst < 1e-5, || format!("r∂_r on r^{cexp}: error {worst:e}"));
        }
    });
}
