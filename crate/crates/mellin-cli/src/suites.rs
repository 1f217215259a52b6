//! Named verification suites. Checks run in parallel; the report is ordered by check name.

use std::time::Instant;

use mellin_lab::asympt::{
    extract_coefficients, plant_asymptotics, verify_push, AsymptConfig, AsymptoticType, TypePoint,
    PUSH_TOL,
};
use mellin_lab::conormal::{
    admissible_weights, conormal_symbol, pencil_spectrum, FuchsOperator, FuchsTerm,
};
use mellin_lab::kco::{
    asymptotic_remainder, cauchy_riemann_residual, kernel_cutoff, shifted_line_value,
    CutoffFunction, KcoConfig, LineSymbol, RemainderConfig,
};
use mellin_lab::mellin::{
    cyl_norm, hs_gamma_norm, mellin_at, mellin_quantize, mellin_quantize_symbol, op_mellin,
    op_mellin_bound, s_gamma_map, EdgeSymbol, EdgeTerm, GridFunction, LogGrid, MellinLineSymbol,
    QuantizeConfig, RProfile, SigmaShape,
};
use mellin_lab::merosym::{
    inverse_residual, invert_one_plus, make_index_symbol, toeplitz_index_oracle, winding_number,
    MeroSymbol, Pole, Region, ToeplitzConfig, TOEPLITZ_SIZES,
};
use mellin_lab::numerics::logspace;
use mellin_lab::scales::{
    make_fourier_scale, pi_grid_check, verify_order_reducing, FamilyGrid, OrderReducingFamily,
};
use mellin_lab::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Context, Failure, Verdict};

type CheckFn = fn(&Context) -> Result<(bool, Value), String>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("asympt.push", asympt_push),
    ("asympt.round_trip", asympt_round_trip),
    ("conormal.euler_pencil", conormal_euler_pencil),
    ("conormal.weights", conormal_weights),
    ("index.k=-1", |ctx| index_k(ctx, -1)),
    ("index.k=0", |ctx| index_k(ctx, 0)),
    ("index.k=1", |ctx| index_k(ctx, 1)),
    ("index.k=2", |ctx| index_k(ctx, 2)),
    ("kco.cauchy_riemann", kco_cauchy_riemann),
    ("kco.constant_identity", kco_constant_identity),
    ("kco.remainder", kco_remainder),
    ("mellin.conjugation", mellin_conjugation),
    ("mellin.continuity", mellin_continuity),
    ("mellin.gamma", mellin_gamma),
    ("mellin.identity", mellin_identity),
    ("merosym.inverse", merosym_inverse),
    ("merosym.rank_one", merosym_rank_one),
    ("quant.discrepancy", quant_discrepancy),
    ("quant.euler", quant_euler),
    ("scales.order_reduction", scales_order_reduction),
    ("scales.pi_bound", scales_pi_bound),
];

const SMOKE: &[&str] = &[
    "conormal.euler_pencil",
    "conormal.weights",
    "kco.constant_identity",
    "mellin.gamma",
    "mellin.identity",
    "merosym.inverse",
    "scales.pi_bound",
];

pub const SUITES: &[&str] = &[
    "all", "asympt", "conormal", "index", "kco", "mellin", "merosym", "quant", "scales", "smoke",
];

fn members(suite: &str) -> Option<Vec<(&'static str, CheckFn)>> {
    let pick: Vec<(&str, CheckFn)> = match suite {
        "all" => CHECKS.to_vec(),
        "smoke" => CHECKS
            .iter()
            .filter(|c| SMOKE.contains(&c.0))
            .copied()
            .collect(),
        s if SUITES.contains(&s) => CHECKS
            .iter()
            .filter(|c| c.0.split('.').next() == Some(s))
            .copied()
            .collect(),
        _ => return None,
    };
    Some(pick)
}

#[derive(Debug, Serialize)]
struct CheckLine {
    check: &'static str,
    pass: bool,
    seconds: f64,
    seed: u64,
    grid_scale: f64,
    detail: Value,
}

pub fn verify(ctx: &Context, suite: &str) -> Result<Verdict, Failure> {
    let checks = members(suite).ok_or_else(|| {
        Failure::Input(anyhow::anyhow!(
            "unknown suite `{suite}`; known suites: {}",
            SUITES.join(", ")
        ))
    })?;
    let mut lines: Vec<CheckLine> = checks
        .par_iter()
        .map(|&(name, f)| {
            let start = Instant::now();
            let (pass, detail) = f(ctx).unwrap_or_else(|e| (false, json!({ "error": e })));
            CheckLine {
                check: name,
                pass,
                seconds: start.elapsed().as_secs_f64(),
                seed: ctx.seed,
                grid_scale: ctx.grid_scale,
                detail,
            }
        })
        .collect();
    lines.sort_by(|a, b| a.check.cmp(b.check));
    let mut text = String::new();
    for l in &lines {
        text += &serde_json::to_string(l).map_err(|e| Failure::Input(e.into()))?;
        text.push('\n');
    }
    crate::output::text(ctx, &format!("verify_{suite}.jsonl"), &text)?;
    let failed = lines.iter().filter(|l| !l.pass).count();
    eprintln!(
        "suite {suite}: {} of {} checks passed",
        lines.len() - failed,
        lines.len()
    );
    Ok(if failed == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Default log grid with its size scaled to a power of two.
fn log_grid(ctx: &Context) -> LogGrid {
    let d = LogGrid::default();
    LogGrid::new(d.y_min, d.y_max, ctx.scaled(d.n, 512).next_power_of_two()).unwrap_or(d)
}

// ---- scales ----

fn scales_pi_bound(ctx: &Context) -> Result<(bool, Value), String> {
    let mut axis = vec![0.0];
    axis.extend(logspace(1e-3, 1e6, ctx.scaled(199, 19)));
    let mut pass = true;
    let mut reps = Vec::new();
    for ((mu, nu), pi) in [
        ((1.0, 2.0), 1.0),
        ((2.0, 3.0), 2.0),
        ((0.0, 1.0), 0.0),
        ((-1.0, 0.0), -1.0),
    ] {
        let rep = pi_grid_check(mu, nu, &axis, &axis).map_err(err)?;
        pass &= rep.violations == 0 && rep.pi == pi;
        reps.push(rep);
    }
    Ok((pass, json!(reps)))
}

fn scales_order_reduction(ctx: &Context) -> Result<(bool, Value), String> {
    let fam = OrderReducingFamily::standard(make_fourier_scale(8, 1).map_err(err)?, 2);
    let grid = FamilyGrid::standard(
        2,
        vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        2,
        1e4,
        ctx.scaled(30, 8),
    );
    let rep = verify_order_reducing(&fam, &[-2.0, -1.0, 0.0], &grid).map_err(err)?;
    let exps: Vec<Value> = rep
        .entries
        .iter()
        .map(|e| json!({ "mu": e.mu, "decay_exponent": e.decay_exponent }))
        .collect();
    let ok = rep.pass
        && rep.entries.iter().all(|e| {
            e.decay_exponent.is_some_and(|x| x <= e.mu + 0.05) && e.mixed.iter().all(|m| m.bounded)
        });
    Ok((ok, json!({ "entries": exps })))
}

// ---- mellin ----

fn mellin_gamma(ctx: &Context) -> Result<(bool, Value), String> {
    let grid = LogGrid::new(-4.0, 44.0, ctx.scaled(8192, 1024)).map_err(err)?;
    let e = |r: f64| c((-r).exp(), 0.0);
    let mut worst: f64 = 0.0;
    for (w, exact) in [(1.0, 1.0), (0.5, std::f64::consts::PI.sqrt()), (2.0, 1.0)] {
        worst = worst.max((mellin_at(&e, c(w, 0.0), &grid) - exact).norm());
    }
    Ok((worst < 1e-6, json!({ "max_error": worst, "tol": 1e-6 })))
}

/// A Gaussian wave packet times a smooth window on `|y| < 9`, with one amplitude per component.
struct Packet {
    centre: f64,
    width: f64,
    omega: f64,
    amps: Vec<C64>,
}

impl Packet {
    fn scalar(&self, y: f64) -> C64 {
        let t = y / 9.0;
        let window = if t.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        };
        C64::from_polar(
            window * (-(y - self.centre).powi(2) / (2.0 * self.width * self.width)).exp(),
            self.omega * y,
        )
    }

    fn sample(&self, grid: LogGrid) -> GridFunction {
        GridFunction::from_y(grid, 0, self.amps.len(), |y| {
            let g = self.scalar(y);
            CVec::from_iterator(self.amps.len(), self.amps.iter().map(|a| a * g))
        })
    }
}

fn random_packets(ctx: &Context, dim: usize, count: usize, salt: u64) -> Vec<Packet> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ salt);
    (0..count)
        .map(|_| Packet {
            centre: rng.gen_range(-4.0..4.0),
            width: rng.gen_range(0.5..1.2),
            omega: rng.gen_range(-4.0..4.0),
            amps: (0..dim)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        })
        .collect()
}

/// `‖u‖_{H^{s,γ}}` for a scalar packet from a direct trapezoid Mellin transform on the weight line,
/// independent of the FFT path.
fn line_norm_oracle(p: &Packet, gamma: f64, s: f64) -> f64 {
    let (n, half, rho_max, drho) = (3000, 9.0, 40.0, 0.02);
    let beta = 0.5 - gamma;
    let dy = 2.0 * half / n as f64;
    let v: Vec<C64> = (0..=n)
        .map(|j| {
            let y = -half + j as f64 * dy;
            p.scalar(y) * p.amps[0] * (-beta * y).exp()
        })
        .collect();
    let m = (2.0 * rho_max / drho) as usize;
    let total: f64 = (0..=m)
        .map(|k| {
            let rho = -rho_max + k as f64 * drho;
            let step = C64::from_polar(1.0, -rho * dy);
            let mut phase = C64::from_polar(1.0, rho * half);
            let mut acc = c(0.0, 0.0);
            for x in &v {
                acc += x * phase;
                phase *= step;
            }
            (1.0 + rho * rho).powf(s) * (acc * dy).norm_sqr()
        })
        .sum();
    (total * drho / (2.0 * std::f64::consts::PI)).sqrt()
}

fn mellin_conjugation(ctx: &Context) -> Result<(bool, Value), String> {
    let (mut conj, mut oracle): (f64, f64) = (0.0, 0.0);
    for p in random_packets(ctx, 1, 3, 1) {
        let u = p.sample(log_grid(ctx));
        for s in [-1.0, 0.0, 1.0, 2.0] {
            for gamma in [-1.0, 0.0, 1.0] {
                let a = hs_gamma_norm(s, gamma, &u, None).map_err(err)?;
                let b = cyl_norm(s, &s_gamma_map(gamma, &u), None).map_err(err)?;
                conj = conj.max((a - b).abs() / b);
                let o = line_norm_oracle(&p, gamma, s);
                oracle = oracle.max((a - o).abs() / o);
            }
        }
    }
    Ok((
        conj < 1e-6 && oracle < 1e-6,
        json!({ "conjugation": conj, "line_oracle": oracle, "tol": 1e-6 }),
    ))
}

fn mellin_identity(ctx: &Context) -> Result<(bool, Value), String> {
    let mut worst: f64 = 0.0;
    for u in random_packets(ctx, 2, 3, 2)
        .iter()
        .map(|p| p.sample(log_grid(ctx)))
    {
        let v = op_mellin(0.5, &MellinLineSymbol::identity(2), &u).map_err(err)?;
        worst = worst.max(v.max_abs_diff(&u));
    }
    Ok((worst < 1e-10, json!({ "max_error": worst, "tol": 1e-10 })))
}

fn mellin_continuity(ctx: &Context) -> Result<(bool, Value), String> {
    let corpus = [
        (
            "1/(w+3)",
            MellinLineSymbol::scalar(-1.0, |w| 1.0 / (w + 3.0)),
        ),
        ("w", MellinLineSymbol::scalar(1.0, |w| w)),
        (
            "exp((w-1/2)^2)",
            MellinLineSymbol::scalar(0.0, |w| (w - 0.5).powi(2).exp()),
        ),
    ];
    let tests: Vec<GridFunction> = random_packets(ctx, 1, 4, 3)
        .iter()
        .map(|p| p.sample(log_grid(ctx)))
        .collect();
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, f) in &corpus {
        for s in [0.0, 1.0] {
            let rep = op_mellin_bound(f, s, 0.0, None, None, &tests).map_err(err)?;
            pass &= rep.ratio <= rep.c * 1.001;
            rows.push(json!({ "symbol": name, "s": s, "c": rep.c, "ratio": rep.ratio }));
        }
    }
    Ok((pass, json!(rows)))
}

// ---- kco ----

fn kco_constant_identity(_: &Context) -> Result<(bool, Value), String> {
    let value = c(2.5, -1.0);
    let h = kernel_cutoff(
        &CutoffFunction::bump(3.0).with_tilt(0.5),
        &LineSymbol::scalar(0.0, move |_| value),
        &KcoConfig::default(),
    )
    .map_err(err)?;
    let mut worst: f64 = 0.0;
    for z in [c(0.0, 0.0), c(37.0, 0.0), c(-5.0, 1.5), c(100.0, -2.5)] {
        worst = worst.max((h.evaluate_strip(z).map_err(err)?[(0, 0)] - value).norm());
    }
    Ok((worst < 1e-10, json!({ "max_error": worst, "tol": 1e-10 })))
}

fn kco_cauchy_riemann(_: &Context) -> Result<(bool, Value), String> {
    let kco = KcoConfig::default();
    let phi = CutoffFunction::default().with_tilt(0.2);
    let a = LineSymbol::bracket_power(3.0, c(-1.0, 1.0));
    let h = kernel_cutoff(&phi, &a, &kco).map_err(err)?;
    let (mut cr, mut shift): (f64, f64) = (0.0, 0.0);
    for z in [c(0.0, 0.0), c(3.0, 1.0), c(-40.0, -2.0), c(150.0, 2.5)] {
        cr = cr.max(cauchy_riemann_residual(&h, z, 1e-2));
        let s = shifted_line_value(&phi, &a, z.im, z.re, &kco).map_err(err)?;
        shift = shift.max((h.evaluate_strip(z).map_err(err)? - &s).norm() / (1.0 + s.norm()));
    }
    Ok((
        cr < 1e-6 && shift < 1e-8,
        json!({ "cauchy_riemann": cr, "delta_shift": shift }),
    ))
}

fn kco_remainder(_: &Context) -> Result<(bool, Value), String> {
    let phi = CutoffFunction::bump(3.0).with_tilt(0.5);
    let a = LineSymbol::bracket_power(3.0, c(0.0, 1.0));
    let mut pass = true;
    let mut rows = Vec::new();
    for k in 1..=3 {
        let r = asymptotic_remainder(&phi, &a, k, &RemainderConfig::default()).map_err(err)?;
        pass &= (r.fit.exponent + k as f64).abs() < 0.3;
        rows.push(json!({ "k": k, "exponent": r.fit.exponent, "target": -(k as f64) }));
    }
    Ok((pass, json!(rows)))
}

// ---- conormal ----

/// `(-r∂_r)² - diag(k²) e^{-r}` on the modes `|k| ≤ modes`, base dimension 1.
fn euler(modes: i64) -> Result<FuchsOperator, String> {
    let ks: Vec<C64> = (-modes..=modes)
        .map(|k| c(-((k * k) as f64), 0.0))
        .collect();
    let n = ks.len();
    FuchsOperator::new(
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
                matrix: CMat::from_diagonal(&CVec::from_vec(ks)),
                profile: RProfile::Exp { rate: 1.0 },
            },
        ],
    )
    .map_err(err)
}

/// Distinct roots `±|k|` of `w² - k²` over the modes, with multiplicities.
fn per_mode_roots(modes: i64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for k in -modes..=modes {
        for r in [-(k.abs() as f64), k.abs() as f64] {
            match out.iter_mut().find(|(x, _)| *x == r) {
                Some(e) => e.1 += 1,
                None => out.push((r, 1)),
            }
        }
    }
    out
}

fn conormal_euler_pencil(_: &Context) -> Result<(bool, Value), String> {
    let spec = pencil_spectrum(&conormal_symbol(&euler(2)?), (-10.0, 10.0)).map_err(err)?;
    let expected = per_mode_roots(2);
    let pass = spec.len() == expected.len()
        && expected.iter().all(|(r, m)| {
            spec.iter()
                .any(|q| (q.w() - r).norm() < 1e-8 && q.multiplicity == *m)
        });
    Ok((pass, json!({ "points": spec, "expected": expected })))
}

fn conormal_weights(_: &Context) -> Result<(bool, Value), String> {
    let range = (-2.5, 3.5);
    let rep = admissible_weights(&conormal_symbol(&euler(2)?), range, 1).map_err(err)?;
    // γ is forbidden iff 1 - γ = ±k
    let mut expected: Vec<f64> = per_mode_roots(2)
        .iter()
        .map(|(r, _)| 1.0 - r)
        .filter(|g| (range.0..=range.1).contains(g))
        .collect();
    expected.sort_by(f64::total_cmp);
    let pass = rep.forbidden.len() == expected.len()
        && rep
            .forbidden
            .iter()
            .zip(&expected)
            .all(|(a, b)| (a - b).abs() < 1e-8)
        && rep.intervals.iter().all(|iv| {
            expected
                .iter()
                .all(|g| iv.hi <= g - 1e-6 + 1e-12 || iv.lo >= g + 1e-6 - 1e-12)
        });
    Ok((
        pass,
        json!({ "forbidden": rep.forbidden, "expected": expected, "intervals": rep.intervals.len() }),
    ))
}

// ---- merosym ----

const REGION: Region = Region {
    re: (-2.5, 2.5),
    im: (-2.5, 2.5),
};
const LINES: [f64; 3] = [-1.7, 0.9, 1.9];

fn merosym_inverse(_: &Context) -> Result<(bool, Value), String> {
    let mut pass = true;
    let mut rows = Vec::new();
    for (cc, p) in [
        (0.7, c(0.2, 0.3)),
        (-0.4, c(-0.5, 1.0)),
        (1.3, c(0.0, -0.8)),
    ] {
        let m = MeroSymbol::rational(
            1,
            vec![Pole::simple(p, CMat::from_element(1, 1, c(cc, 0.0)))],
        )
        .map_err(err)?;
        let minv = invert_one_plus(&m, &REGION).map_err(err)?;
        let res = inverse_residual(&m, &minv, &LINES);
        let loc = minv
            .poles
            .first()
            .map_or(f64::INFINITY, |q| (q.p - (p - cc)).norm());
        pass &= res < 1e-8 && loc < 1e-8 && minv.poles.len() == 1;
        rows.push(json!({ "c": cc, "p": [p.re, p.im], "residual": res, "pole_error": loc }));
    }
    Ok((pass, json!(rows)))
}

fn merosym_rank_one(_: &Context) -> Result<(bool, Value), String> {
    let (u, v) = (
        CVec::from_row_slice(&[c(1.0, 0.5), c(-1.0, 0.0), c(2.0, 0.0)]),
        CVec::from_row_slice(&[c(0.3, 0.0), c(1.0, -1.0), c(0.5, 0.0)]),
    );
    let proj = &u * v.adjoint() / v.dotc(&u);
    let (cc, p) = (-0.9, c(0.4, -0.6));
    let m = MeroSymbol::rational(3, vec![Pole::simple(p, &proj * c(cc, 0.0))]).map_err(err)?;
    let minv = invert_one_plus(&m, &REGION).map_err(err)?;
    let res = inverse_residual(&m, &minv, &LINES);
    // (1 + cP/(w-p))^{-1} - 1 = -cP/(w-p+c)
    let w = c(1.9, -1.0);
    let value = (minv.eval(w) - &proj * (-cc / (w - p + cc))).norm();
    Ok((
        res < 1e-8 && value < 1e-8,
        json!({ "residual": res, "value_error": value }),
    ))
}

// ---- index ----

fn index_k(ctx: &Context, k: i64) -> Result<(bool, Value), String> {
    let gamma = 0.25;
    let f = make_index_symbol(k, gamma).map_err(err)?;
    let w = winding_number(&f, 0.5 - gamma).map_err(err)?;
    let cfg = ToeplitzConfig::default();
    let toeplitz: Vec<(usize, i64)> = TOEPLITZ_SIZES
        .iter()
        .map(|&n| {
            let n = ctx.scaled(n, 16);
            (n, toeplitz_index_oracle(&f, gamma, n, &cfg))
        })
        .collect();
    let pass = w.winding == k && toeplitz.iter().all(|t| t.1 == k);
    Ok((
        pass,
        json!({ "k": k, "winding": w.winding, "toeplitz": toeplitz }),
    ))
}

// ---- asympt ----

fn asympt_round_trip(_: &Context) -> Result<(bool, Value), String> {
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
    .map_err(err)?;
    let coeffs = vec![
        vec![c(1.0, 0.0), c(-0.5, 0.2), c(0.25, 0.0)],
        vec![c(0.3, -0.7), c(0.1, 0.0)],
        vec![c(-1.1, 0.4)],
        vec![c(0.6, 0.0), c(0.0, 0.9), c(-0.2, 0.1)],
        vec![c(0.8, 0.8), c(-0.4, 0.0)],
    ];
    let cfg = AsymptConfig::default();
    let u = plant_asymptotics(&t, &coeffs, &cfg).map_err(err)?;
    let got = extract_coefficients(&u, &t, &cfg).map_err(err)?;
    let e = got
        .iter()
        .flatten()
        .zip(coeffs.iter().flatten())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok((e < 1e-6, json!({ "max_error": e, "tol": 1e-6 })))
}

fn asympt_push(_: &Context) -> Result<(bool, Value), String> {
    let cfg = AsymptConfig::default();
    let p = c(0.6, 0.2);
    let single = AsymptoticType::new(vec![TypePoint::new(p, 1)], -1.2, -1.5, 0).map_err(err)?;
    let sc = vec![vec![c(0.5, 0.5), c(-0.3, 0.0)]];
    let pc = c(0.4, 0.0);
    let lone = AsymptoticType::new(vec![TypePoint::new(pc, 0)], -1.2, -1.5, 0).map_err(err)?;
    let cases = [
        (
            "entire",
            MeroSymbol::scalar_entire(2.0, |w| w * w - 0.5 * w + 2.0),
            &single,
            sc.clone(),
        ),
        (
            "collision",
            MeroSymbol::rational(
                1,
                vec![Pole::simple(pc, CMat::from_element(1, 1, c(1.0, 0.0)))],
            )
            .map_err(err)?,
            &lone,
            vec![vec![c(1.0, 0.0)]],
        ),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, f, t, cs) in cases {
        let rep = verify_push(&f, t, &cs, 0.0, &cfg).map_err(err)?;
        pass &= rep.pass && rep.max_err < PUSH_TOL;
        rows.push(json!({ "case": name, "max_error": rep.max_err, "pass": rep.pass }));
    }
    Ok((pass, json!(rows)))
}

// ---- quantisation ----

fn quant_discrepancy(_: &Context) -> Result<(bool, Value), String> {
    let a = EdgeSymbol {
        terms: vec![EdgeTerm {
            coef: 1.0,
            profile: RProfile::Exp { rate: 1.0 },
            shape: SigmaShape::Gaussian { width: 4.0 },
        }],
    };
    let (_, rep) = mellin_quantize(&a, &QuantizeConfig::default()).map_err(err)?;
    Ok((rep.exponent < -4.0, json!(rep)))
}

fn quant_euler(_: &Context) -> Result<(bool, Value), String> {
    let euler = EdgeSymbol {
        terms: vec![EdgeTerm {
            coef: 1.0,
            profile: RProfile::Const,
            shape: SigmaShape::Monomial { power: 1 },
        }],
    };
    let cfg = QuantizeConfig {
        grid: LogGrid::new(-4.0, 40.0, 8192).map_err(err)?,
        ..QuantizeConfig::default()
    };
    let q = mellin_quantize_symbol(&euler, &cfg).map_err(err)?;
    let mut worst: f64 = 0.0;
    for cexp in [0.5, 2.0] {
        let u = GridFunction::scalar(q.grid, |r| c(r.powf(cexp) * (-r * r).exp(), 0.0));
        let v = q.apply(&u).map_err(err)?;
        for j in 0..q.grid.n {
            let r = q.grid.r(j);
            if r <= 2.0 && q.grid.y(j) < 4.0 {
                // r∂_r (r^c e^{-r²}) = (c - 2r²) r^c e^{-r²}
                let exact = (cexp - 2.0 * r * r) * r.powf(cexp) * (-r * r).exp();
                worst = worst.max((v.values[(j, 0)] - exact).norm() / r.powf(cexp));
            }
        }
    }
    Ok((worst < 1e-5, json!({ "max_error": worst, "tol": 1e-5 })))
}
