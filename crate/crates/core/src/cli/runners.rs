use std::time::Instant;

use super::{ErrorRow, ExperimentConfig, GeomRow, IterateRow, Rows, RunInfo};
use crate::error::{Error, Result};
use crate::funcspace::{f_transform_default, project_to_cpsi, psi, psi_norm, EvaluationGrid, Function01};
use crate::operators::{condition_row, AlphaProfile, OperatorSpec};
use crate::series::{image_of, SeriesEngine};

type Output = (Rows, Vec<RunInfo>);

fn sup<F: FnMut(f64) -> Result<f64>>(grid: &EvaluationGrid, mut f: F) -> Result<f64> {
    let mut best = 0.0f64;
    for &x in grid.points() {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::PsiRatioOverflow { x });
        }
        best = best.max(v.abs());
    }
    Ok(best)
}

/// α on the grid points, in grid order.
fn alpha_values(op: &OperatorSpec, grid: &EvaluationGrid) -> Result<Vec<f64>> {
    grid.points().iter().map(|&x| op.alpha_at(x)).collect()
}

/// ‖L^k f − B₁f‖_ψ for k = 0..=k_max against b^k·‖f − B₁f‖_ψ, with b the
/// carrier's ‖b_L‖.
pub fn run_iterates(cfg: &ExperimentConfig) -> Result<Output> {
    let f = cfg.function()?;
    let grid = cfg.grid()?;
    let per = cfg.per_n(|n| {
        let t = Instant::now();
        let engine = SeriesEngine::new(&cfg.operator(n)?, &grid)?;
        let k_max = cfg.k_max as usize;
        let it = engine.iterates(&f, k_max.saturating_sub(1))?;
        let b = engine.b_norm();
        let norm0 = psi_norm(&it.f1, &engine.grid)?.value;
        let mut rows = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let err = if norm0 == 0.0 { 0.0 } else { sup(&engine.grid, |x| it.cpsi_ratio(k, x))? };
            rows.push(IterateRow { n, k: k as u32, error_psi: err, envelope: b.powi(k as i32) * norm0 });
        }
        let info = RunInfo { n, seconds: t.elapsed().as_secs_f64(), b_norm: Some(b), ..Default::default() };
        Ok((rows, info))
    })?;
    let (rows, runs): (Vec<_>, Vec<_>) = per.into_iter().unzip();
    Ok((Rows::Iterates(rows.concat()), runs))
}

/// ‖α_n·G_n(ψf) − 2F(f)‖_ψ, α applied pointwise.
pub fn run_geom(cfg: &ExperimentConfig) -> Result<Output> {
    let f = cfg.function()?;
    let grid = cfg.grid()?;
    let two_f = f_transform_default(&f)?.scale(2.0);
    let pf = Function01::psi_times(&f);
    let rows = cfg.per_n(|n| {
        let t = Instant::now();
        let op = cfg.operator(n)?;
        let engine = SeriesEngine::new(&op, &grid)?;
        let r = engine.neumann(&pf, cfg.eps)?;
        let alpha = alpha_values(&op, &engine.grid)?;
        let mut err = 0.0f64;
        for (i, &x) in engine.grid.points().iter().enumerate() {
            err = err.max(((alpha[i] * r.g.eval(x) - two_f.eval(x)) / psi(x)).abs());
        }
        if !err.is_finite() {
            return Err(Error::PsiRatioOverflow { x: f64::NAN });
        }
        let row = GeomRow { n, error_psi: err, terms_used: r.terms_used, tail_bound: r.tail_bound };
        let info = RunInfo {
            n,
            seconds: t.elapsed().as_secs_f64(),
            b_norm: Some(r.b_norm),
            tail_bound: Some(r.tail_bound),
            truncation_bound: Some(r.truncation_bound),
            residual_psi_norm: Some(r.residual_psi_norm),
            ..Default::default()
        };
        Ok((row, info))
    })?;
    let (rows, runs) = rows.into_iter().unzip();
    Ok((Rows::Geom(rows), runs))
}

fn second_half(f: &Function01) -> Result<Function01> {
    f.second_derivative_fn()
        .map(|d| d.scale(0.5))
        .ok_or_else(|| Error::Config(format!("'{}' has no registered second derivative", f.name())))
}

/// ‖(1/ν_n)(L_n f − f) − ½f″ψ‖_ψ; aux_error uses α_n(x) in place of ν_n.
pub fn run_voronovskaya(cfg: &ExperimentConfig) -> Result<Output> {
    let f = cfg.function()?;
    let half = second_half(&f)?;
    let grid = cfg.grid()?;
    let rows = cfg.per_n(|n| {
        let t = Instant::now();
        let op = cfg.operator(n)?;
        let g = op.window_grid(&grid)?;
        let prof = AlphaProfile::new(&op, &grid)?;
        let lf = image_of(&op, &f)?;
        let (mut err, mut aux) = (0.0f64, 0.0f64);
        for (i, &x) in g.points().iter().enumerate() {
            let q = (lf(x)? - f.eval(x)) / psi(x);
            err = err.max((q / prof.nu - half.eval(x)).abs());
            aux = aux.max((q / prof.values[i] - half.eval(x)).abs());
        }
        let info = RunInfo {
            n,
            seconds: t.elapsed().as_secs_f64(),
            b_norm: Some(prof.b_norm),
            nu: Some(prof.nu),
            ..Default::default()
        };
        Ok((ErrorRow { n, error_psi: err, aux_error: aux }, info))
    })?;
    let (rows, runs) = rows.into_iter().unzip();
    Ok((Rows::Voronovskaya(rows), runs))
}

/// ‖(f − B₁f) + 2F(½f″)‖_ψ on the full grid.
pub fn reconstruction_error(f: &Function01, grid: &EvaluationGrid) -> Result<f64> {
    let two_fg = f_transform_default(&second_half(f)?)?.scale(2.0);
    let f1 = project_to_cpsi(f);
    sup(grid, |x| Ok((f1.eval(x) + two_fg.eval(x)) / psi(x)))
}

/// error_psi: the premise ‖(1/α_n)(L_n f − f) − gψ‖_ψ with g = ½f″ and α_n
/// pointwise; aux_error: the n-independent reconstruction ‖f₁ + 2F(g)‖_ψ.
pub fn run_inverse_voronovskaya(cfg: &ExperimentConfig) -> Result<Output> {
    let f = cfg.function()?;
    let g = second_half(&f)?;
    let grid = cfg.grid()?;
    let recon = reconstruction_error(&f, &grid)?;
    let rows = cfg.per_n(|n| {
        let t = Instant::now();
        let op = cfg.operator(n)?;
        let wg = op.window_grid(&grid)?;
        let alpha = alpha_values(&op, &wg)?;
        let lf = image_of(&op, &f)?;
        let mut err = 0.0f64;
        for (i, &x) in wg.points().iter().enumerate() {
            err = err.max(((lf(x)? - f.eval(x)) / (alpha[i] * psi(x)) - g.eval(x)).abs());
        }
        let info = RunInfo { n, seconds: t.elapsed().as_secs_f64(), ..Default::default() };
        Ok((ErrorRow { n, error_psi: err, aux_error: recon }, info))
    })?;
    let (rows, runs) = rows.into_iter().unzip();
    Ok((Rows::InverseVoronovskaya(rows), runs))
}

pub fn run_conditions(cfg: &ExperimentConfig) -> Result<Output> {
    let grid = cfg.grid()?;
    let rows = cfg.per_n(|n| {
        let t = Instant::now();
        let row = condition_row(&cfg.operator(n)?, &grid)?;
        Ok((row, RunInfo { n, seconds: t.elapsed().as_secs_f64(), ..Default::default() }))
    })?;
    let (rows, runs) = rows.into_iter().unzip();
    Ok((Rows::Conditions(rows), runs))
}
