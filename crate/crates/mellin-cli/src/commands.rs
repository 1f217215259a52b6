use mellin_lab::conormal::{
    admissible_weights, conormal_symbol, line_offset, ConormalError, OperatorPencil, WeightReport,
};
use mellin_lab::merosym::{
    toeplitz_index_oracle, winding_number, MeroError, MeroSymbol, WindingReport, TOEPLITZ_SIZES,
};
use mellin_lab::numerics::{linspace, min_singular_value};
use mellin_lab::C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{self, table};
use crate::problem::{ProblemFile, SymbolSpec};
use crate::{Context, Failure, Verdict};

fn conormal_failure(e: ConormalError) -> Failure {
    match e {
        ConormalError::Eigen | ConormalError::Aliasing(_) => Failure::Inconclusive(e.into()),
        _ => Failure::Input(e.into()),
    }
}

fn wrong_operation(expected: &str) -> Failure {
    Failure::Input(anyhow::anyhow!(
        "problem file does not describe a `{expected}` operation"
    ))
}

pub fn weights(ctx: &Context, problem: &ProblemFile) -> Result<Verdict, Failure> {
    let ProblemFile::Weights {
        operator,
        gamma_range,
    } = problem
    else {
        return Err(wrong_operation("weights"));
    };
    let op = operator.build().map_err(conormal_failure)?;
    let pencil = conormal_symbol(&op);
    let rep = admissible_weights(&pencil, *gamma_range, op.base_dim).map_err(conormal_failure)?;

    output::json(ctx, "weights.json", &rep)?;
    output::text(ctx, "weights.txt", &weights_text(&rep))?;
    let gammas = linspace(gamma_range.0, gamma_range.1, ctx.scaled(401, 11));
    let rows: Vec<(f64, f64, f64)> = gammas
        .par_iter()
        .map(|&g| {
            let beta = line_offset(g, op.base_dim);
            (g, beta, line_min_singular(&pencil, beta))
        })
        .collect();
    output::csv(
        ctx,
        "weights_sigma.csv",
        &["gamma".into(), "beta".into(), "sigma_min".into()],
        rows,
    )?;
    Ok(Verdict::Pass)
}

/// `min σ_min(σ_c(β + iτ))` over `|τ| ≤ 40`.
fn line_min_singular(p: &OperatorPencil, beta: f64) -> f64 {
    linspace(-40.0, 40.0, 161)
        .into_iter()
        .map(|t| min_singular_value(&p.eval(C64::new(beta, t))))
        .fold(f64::INFINITY, f64::min)
}

fn weights_text(rep: &WeightReport) -> String {
    let mut s = format!(
        "admissible weights for gamma in [{}, {}], base dimension {}\nstrip {} <= Re w <= {}\n\n",
        rep.gamma_range.0, rep.gamma_range.1, rep.base_dim, rep.strip.0, rep.strip.1
    );
    if rep.points.is_empty() {
        s += "D: empty in the strip\n";
    } else {
        s += "D:\n";
        let rows: Vec<Vec<String>> = rep
            .points
            .iter()
            .map(|p| {
                vec![
                    format!("{:.10}", p.re),
                    format!("{:.10}", p.im),
                    p.multiplicity.to_string(),
                    format!("{:.10}", line_offset(p.re, rep.base_dim)),
                ]
            })
            .collect();
        s += &table(&["re w", "im w", "multiplicity", "gamma"], &rows);
    }
    s += "\nadmissible intervals:\n";
    let rows: Vec<Vec<String>> = rep
        .intervals
        .iter()
        .map(|iv| {
            vec![
                format!("{:.10}", iv.lo),
                format!("{:.10}", iv.hi),
                format!("{:.3e}", iv.min_singular),
            ]
        })
        .collect();
    s += &table(&["lo", "hi", "min sigma"], &rows);
    s
}

#[derive(Debug, Serialize)]
struct IndexReport {
    gamma: f64,
    /// Order of the symbol; the Toeplitz oracle is conclusive only at order -∞.
    #[serde(serialize_with = "order_json")]
    order: f64,
    beta: f64,
    winding: WindingReport,
    toeplitz: Vec<(usize, i64)>,
    /// All Toeplitz sizes give the same index.
    stable: bool,
    /// Stable and equal to the winding number.
    agree: bool,
}

/// JSON has no infinities: order -∞ is written as the string "-inf".
fn order_json<S: serde::Serializer>(order: &f64, s: S) -> Result<S::Ok, S::Error> {
    if order.is_finite() {
        s.serialize_f64(*order)
    } else {
        s.serialize_str(&order.to_string())
    }
}

fn mero_failure(e: MeroError) -> Failure {
    match e {
        MeroError::SymbolVanishes { .. }
        | MeroError::InvalidInput(_)
        | MeroError::ScaleMismatch(..) => Failure::Input(e.into()),
        _ => Failure::Inconclusive(e.into()),
    }
}

pub fn index(ctx: &Context, problem: &ProblemFile) -> Result<Verdict, Failure> {
    let ProblemFile::Index {
        symbol,
        gamma,
        toeplitz,
    } = problem
    else {
        return Err(wrong_operation("index"));
    };
    let f = symbol.build(*gamma)?;
    let beta = 0.5 - gamma;
    let winding = winding_number(&f, beta).map_err(mero_failure)?;
    let cfg = toeplitz.unwrap_or_default();
    let toeplitz: Vec<(usize, i64)> = TOEPLITZ_SIZES
        .par_iter()
        .map(|&n| {
            let n = ctx.scaled(n, 16);
            (n, toeplitz_index_oracle(&f, *gamma, n, &cfg))
        })
        .collect();
    let stable = toeplitz.iter().all(|t| t.1 == toeplitz[0].1);
    let agree = stable && toeplitz[0].1 == winding.winding;
    let rep = IndexReport {
        gamma: *gamma,
        order: f.order,
        beta,
        winding,
        toeplitz,
        stable,
        agree,
    };

    output::json(ctx, "index.json", &rep)?;
    output::text(ctx, "index.txt", &index_text(&rep, symbol))?;
    line_samples_csv(ctx, &f, beta, cfg.tau_max.min(f.line_extent))?;
    match (rep.stable, rep.agree) {
        (false, _) => Err(Failure::Inconclusive(anyhow::anyhow!(
            "Toeplitz index differs across sizes: {:?}",
            rep.toeplitz
        ))),
        (true, true) => Ok(Verdict::Pass),
        // the tall-section oracle resolves kernels only for smoothing symbols; a finite-order
        // symbol has a non-smooth convolution kernel and a cokernel far above the threshold
        (true, false) if f.order > f64::NEG_INFINITY => Err(Failure::Inconclusive(anyhow::anyhow!(
            "Toeplitz oracle is conclusive only for smoothing symbols; this symbol has order {}",
            f.order
        ))),
        (true, false) => Ok(Verdict::Fail),
    }
}

fn index_text(rep: &IndexReport, symbol: &SymbolSpec) -> String {
    let name = match symbol {
        SymbolSpec::IndexSymbol { k } => format!("index symbol k = {k}"),
        SymbolSpec::Rational { dim, poles } => {
            format!("rational symbol, dimension {dim}, {} poles", poles.len())
        }
    };
    let mut s = format!(
        "{name}\nweight gamma = {}, line Re w = {}\n\n",
        rep.gamma, rep.beta
    );
    let mut rows = vec![vec![
        "winding".to_string(),
        rep.winding.winding.to_string(),
        format!(
            "raw {:.6}, min |det| {:.3e}",
            rep.winding.raw, rep.winding.min_abs
        ),
    ]];
    for (n, i) in &rep.toeplitz {
        rows.push(vec![
            format!("toeplitz n = {n}"),
            i.to_string(),
            String::new(),
        ]);
    }
    s += &table(&["method", "index", "notes"], &rows);
    let verdict = match (rep.stable, rep.agree) {
        (true, true) => "AGREE",
        (true, false) if rep.order == f64::NEG_INFINITY => "DISAGREE",
        _ => "INCONCLUSIVE",
    };
    s + &format!("\nverdict: {verdict}\n")
}

/// `τ, Re f_ij, Im f_ij` on the weight line, one column pair per mode pair.
fn line_samples_csv(ctx: &Context, f: &MeroSymbol, beta: f64, tau_max: f64) -> Result<(), Failure> {
    let d = f.dim;
    let mut header = vec!["tau".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("re_{i}{j}"));
            header.push(format!("im_{i}{j}"));
        }
    }
    let rows: Vec<Vec<f64>> = linspace(-tau_max, tau_max, ctx.scaled(961, 17))
        .par_iter()
        .map(|&t| {
            let m = f.eval(C64::new(beta, t));
            let mut row = vec![t];
            for i in 0..d {
                for j in 0..d {
                    row.extend([m[(i, j)].re, m[(i, j)].im]);
                }
            }
            row
        })
        .collect();
    output::csv(ctx, "index_line.csv", &header, rows)
}
