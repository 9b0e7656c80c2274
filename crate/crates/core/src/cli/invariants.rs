use std::time::Instant;

use super::{ExperimentConfig, InvariantRow, Rows, RunInfo};
use crate::error::Result;
use crate::funcspace::{project_to_cpsi, psi, psi_norm, EvaluationGrid, Function01};
use crate::operators::{mkz, Family, OperatorSpec};
use crate::series::{image_of, SeriesEngine};
use crate::special::binomial;

fn row(name: String, measured: f64, threshold: f64) -> InvariantRow {
    // NaN never passes
    InvariantRow { name, measured, threshold, pass: measured <= threshold }
}

/// Largest excess of the MKZ second moment over the Becker–Nessel bounds on
/// x ≤ 1 − 1/(4n): (lower − m², m² − upper), each ≤ 0 when the sandwich holds.
pub fn becker_nessel_excess(n: u32, eps: f64, grid: &EvaluationGrid) -> Result<(f64, f64)> {
    let op = OperatorSpec::mkz(n, eps)?;
    let nf = n as f64;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &x in op.window_grid(grid)?.points() {
        let m2 = op.moment(2, x)?;
        let base = x * (1.0 - x) * (1.0 - x) / (nf + 1.0);
        lo = lo.max(base * (1.0 + 2.0 * x / (nf + 2.0)) - m2);
        hi = hi.max(m2 - base * (1.0 + 2.0 * x / (nf + 1.0)));
    }
    Ok((lo, hi))
}

/// As [`becker_nessel_excess`] for the Z_n* bounds
/// ψ/(2(n+1))(1 + 4ψ/(n+2)) ≤ M² ≤ ψ/(2(n+1))(1 + 4ψ/(n+1)).
pub fn symmetric_sandwich_excess(n: u32, eps: f64, grid: &EvaluationGrid) -> Result<(f64, f64)> {
    let op = OperatorSpec::mkz_symmetric(n, eps)?;
    let nf = n as f64;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &x in grid.restrict(0.0, 1.0 - 0.25 / nf)?.points() {
        let m2 = op.moment(2, x)?;
        let p = psi(x);
        let base = p / (2.0 * (nf + 1.0));
        lo = lo.max(base * (1.0 + 4.0 * p / (nf + 2.0)) - m2);
        hi = hi.max(m2 - base * (1.0 + 4.0 * p / (nf + 1.0)));
    }
    Ok((lo, hi))
}

/// sup |n(Z_n(e_r) − x^r) − C(r,2)x^{r−1}(1−x)²|/ψ over x ≤ 1 − 1/(4n).
pub fn mkz_moment_asymptotic_error(n: u32, r: u32, eps: f64, grid: &EvaluationGrid) -> Result<f64> {
    let op = OperatorSpec::mkz(n, eps)?;
    let er = Function01::registry(&format!("e{r}"))?;
    let c = binomial(r as u64, 2)?;
    let nf = n as f64;
    let mut best = 0.0f64;
    for &x in op.window_grid(grid)?.points() {
        let lead = c * x.powi(r as i32 - 1) * (1.0 - x) * (1.0 - x);
        let v = nf * (mkz::mkz_apply(n, &er, x, eps)? - x.powi(r as i32)) - lead;
        best = best.max((v / psi(x)).abs());
    }
    Ok(best)
}

fn sup<F: FnMut(f64) -> Result<f64>>(grid: &EvaluationGrid, mut f: F) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for &x in grid.points() {
        best = best.max(f(x)?);
    }
    Ok(best)
}

/// Pass/fail rows for the invariants that concern the configured family at
/// each n of the list.
pub fn run_invariant_suite(cfg: &ExperimentConfig) -> Result<(Rows, Vec<RunInfo>)> {
    let grid = cfg.grid()?;
    let f = cfg.function()?;
    let teps = cfg.truncation_eps.unwrap_or(0.0);
    let repro_tol = 1e-10f64.max(10.0 * teps);
    let per = cfg.per_n(|n| {
        let t = Instant::now();
        let op = cfg.operator(n)?;
        let g = op.window_grid(&grid)?;
        let tag = format!("{} n={n}", op.family);
        let mut rows = Vec::new();
        let nf = n as f64;

        let e0 = Function01::registry("e0")?;
        let e1 = Function01::registry("e1")?;
        let p = Function01::registry("psi")?;
        let l0 = image_of(&op, &e0)?;
        let l1 = image_of(&op, &e1)?;
        let lp = image_of(&op, &p)?;
        rows.push(row(format!("{tag} reproduces e0"), sup(&g, |x| Ok((l0(x)? - 1.0).abs()))?, repro_tol));
        rows.push(row(format!("{tag} reproduces e1"), sup(&g, |x| Ok((l1(x)? - x).abs()))?, repro_tol));
        rows.push(row(format!("{tag} L(psi) <= psi"), sup(&g, |x| Ok(lp(x)? - psi(x)))?, 1e-12));
        let ah = Function01::registry("abs_half")?;
        let la = image_of(&op, &ah)?;
        rows.push(row(format!("{tag} positivity on abs_half"), sup(&g, |x| Ok(-la(x)?))?, 1e-12));

        match op.family {
            Family::Bernstein => {
                let m2 = sup(&g, |x| Ok((op.moment(2, x)? * nf / psi(x) - 1.0).abs()))?;
                rows.push(row(format!("{tag} M2 = psi/n"), m2, 1e-12));
                if n >= 2 {
                    let r = sup(&g, |x| Ok(op.moment(4, x)? / op.moment(2, x)?))?;
                    rows.push(row(format!("{tag} M4/M2 bound"), r, 0.75 / nf - 0.5 / (nf * nf) + 1e-12));
                }
            }
            Family::Durrmeyer => {
                let rho = op.rho.unwrap_or(1.0);
                let c = (rho + 1.0) / (nf * rho + 1.0);
                let m2 = sup(&g, |x| Ok((op.moment(2, x)? - c * psi(x)).abs()))?;
                rows.push(row(format!("{tag} M2 closed form"), m2, 1e-10));
            }
            Family::Mkz => {
                let (lo, hi) = becker_nessel_excess(n, teps.min(1e-10), &grid)?;
                rows.push(row(format!("{tag} Becker-Nessel lower"), lo, 1e-10));
                rows.push(row(format!("{tag} Becker-Nessel upper"), hi, 1e-10));
            }
            Family::MkzReflected => {
                let z = OperatorSpec::mkz(n, teps)?;
                let fr = f.reflect();
                let d = sup(&g, |x| Ok((op.apply(&f, x)? - z.apply(&fr, 1.0 - x)?).abs()))?;
                rows.push(row(format!("{tag} reflection identity"), d, 2.0 * teps * f_sup(&f) + 1e-12));
            }
            Family::MkzSymmetric => {
                let (lo, hi) = symmetric_sandwich_excess(n, teps.min(1e-10), &grid)?;
                rows.push(row(format!("{tag} M2 sandwich lower"), lo, 1e-10));
                rows.push(row(format!("{tag} M2 sandwich upper"), hi, 1e-10));
            }
        }

        let engine = SeriesEngine::new(&op, &grid)?;
        let f1 = project_to_cpsi(&f);
        let n1 = psi_norm(&f1, &engine.grid)?.value;
        if op.is_lambda() {
            let b = engine.b_norm();
            let gp = engine.neumann(&p, cfg.eps)?;
            let v = (1.0 - b) * psi_norm(&gp.g, &engine.grid)?.value;
            rows.push(row(format!("{tag} (1-b)|G(psi)| <= 1"), v, 1.0 + 1e-6));
            if n1 > 0.0 {
                let gf = engine.neumann(&f1, cfg.eps)?;
                let v = (1.0 - b) * psi_norm(&gf.g, &engine.grid)?.value / n1;
                rows.push(row(format!("{tag} (1-b)|G(f1)|/|f1| <= 1"), v, 1.0 + 1e-6));
            }
            let (r7, r8) = engine.inversion_residuals(&f1, cfg.eps)?;
            let tol = if op.family.has_exact_carrier() {
                1e-7
            } else {
                10.0 * (cfg.eps + gp.truncation_bound)
            };
            rows.push(row(format!("{tag} (I-L)G = I residual"), r7, tol));
            rows.push(row(format!("{tag} G(I-L) = I residual"), r8, tol));
        }
        if n1 > 0.0 {
            let k_max = cfg.k_max as usize;
            let it = engine.iterates(&f, k_max.saturating_sub(1))?;
            let b = engine.b_norm();
            let mut worst = 0.0f64;
            for k in 0..=k_max {
                let err = sup(&engine.grid, |x| Ok(it.cpsi_ratio(k, x)?.abs()))?;
                worst = worst.max(err / (b.powi(k as i32) * n1));
            }
            rows.push(row(format!("{tag} iterate envelope ratio"), worst, 1.0 + 1e-9));
        }
        Ok((rows, RunInfo { n, seconds: t.elapsed().as_secs_f64(), ..Default::default() }))
    })?;
    let (rows, runs): (Vec<Vec<InvariantRow>>, Vec<RunInfo>) = per.into_iter().unzip();
    let mut rows = rows.concat();
    if cfg.family == Family::Mkz && cfg.n_list.len() >= 2 {
        for r in [2u32, 3, 4] {
            let errs = cfg
                .n_list
                .iter()
                .map(|&n| mkz_moment_asymptotic_error(n, r, teps, &grid))
                .collect::<Result<Vec<f64>>>()?;
            let worst = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
            rows.push(row(format!("mkz e{r} asymptotic error ratio per step"), worst, 0.7));
        }
    }
    Ok((Rows::Invariants(rows), runs))
}

fn f_sup(f: &Function01) -> f64 {
    (0..=1000).map(|i| f.eval(i as f64 / 1000.0).abs()).fold(0.0, f64::max)
}
