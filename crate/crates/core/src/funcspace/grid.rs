use std::sync::Arc;

use super::{psi, Function01};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    UniformInterior,
    ChebyshevInterior,
}

/// Strictly increasing interior points of (0, 1). Cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    points: Arc<[f64]>,
    scheme: GridScheme,
}

/// Default number of grid points.
pub const DEFAULT_GRID_SIZE: usize = 1001;

impl EvaluationGrid {
    /// x_j = (1 − cos(jπ/(count+1)))/2, j = 1..count; clusters at both ends.
    pub fn chebyshev(count: usize) -> Result<Self> {
        Self::check_count(count)?;
        let m = (count + 1) as f64;
        let points: Vec<f64> =
            (1..=count).map(|j| 0.5 * (1.0 - (j as f64 * std::f64::consts::PI / m).cos())).collect();
        Ok(EvaluationGrid { points: points.into(), scheme: GridScheme::ChebyshevInterior })
    }

    /// x_j = j/(count+1), j = 1..count.
    pub fn uniform(count: usize) -> Result<Self> {
        Self::check_count(count)?;
        let m = (count + 1) as f64;
        let points: Vec<f64> = (1..=count).map(|j| j as f64 / m).collect();
        Ok(EvaluationGrid { points: points.into(), scheme: GridScheme::UniformInterior })
    }

    pub fn with_scheme(scheme: GridScheme, count: usize) -> Result<Self> {
        match scheme {
            GridScheme::UniformInterior => Self::uniform(count),
            GridScheme::ChebyshevInterior => Self::chebyshev(count),
        }
    }

    fn check_count(count: usize) -> Result<()> {
        if count < 3 {
            return Err(Error::Parameter(format!("grid needs at least 3 points, got {count}")));
        }
        Ok(())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    /// The points inside [lo, hi]; fails if fewer than 3 remain.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let points: Vec<f64> = self.points.iter().copied().filter(|&x| x >= lo && x <= hi).collect();
        Self::check_count(points.len())?;
        Ok(EvaluationGrid { points: points.into(), scheme: self.scheme })
    }

    /// Same scheme with twice as many points plus one, so every old point is kept.
    pub fn doubled(&self) -> Self {
        let count = 2 * self.points.len() + 1;
        Self::with_scheme(self.scheme, count).expect("count >= 3")
    }
}

impl Default for EvaluationGrid {
    fn default() -> Self {
        Self::chebyshev(DEFAULT_GRID_SIZE).expect("default grid size is valid")
    }
}

/// Grid estimate of ‖f‖_ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiNormEstimate {
    pub value: f64,
    pub argmax_point: f64,
    pub grid: EvaluationGrid,
}

/// max over the grid of |f(x)|/ψ(x), a lower bound for the true sup.
pub fn psi_norm(f: &Function01, grid: &EvaluationGrid) -> Result<PsiNormEstimate> {
    psi_norm_with(grid, |x| Ok(f.eval(x)))
}

/// As [`psi_norm`] for any fallible evaluation rule.
pub fn psi_norm_with<F>(grid: &EvaluationGrid, mut f: F) -> Result<PsiNormEstimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best = (0.0, grid.points[0]);
    for &x in grid.points.iter() {
        let v = f(x)?;
        let r = v.abs() / psi(x);
        if !r.is_finite() {
            return Err(Error::PsiRatioOverflow { x });
        }
        if r > best.0 {
            best = (r, x);
        }
    }
    Ok(PsiNormEstimate { value: best.0, argmax_point: best.1, grid: grid.clone() })
}

/// ψ-norm of values already sampled on the grid.
pub fn psi_norm_of_values(grid: &EvaluationGrid, values: &[f64]) -> Result<PsiNormEstimate> {
    if values.len() != grid.len() {
        return Err(Error::Parameter("value count does not match grid".into()));
    }
    let mut it = values.iter();
    psi_norm_with(grid, |_| Ok(*it.next().unwrap()))
}

/// Doubles the grid until the estimate changes by less than 1 % (relative),
/// at most `max_doublings` times. Returns the last estimate and whether the
/// criterion was met.
pub fn psi_norm_converged(f: &Function01, start: &EvaluationGrid, max_doublings: usize) -> Result<(PsiNormEstimate, bool)> {
    let mut cur = psi_norm(f, start)?;
    for _ in 0..max_doublings {
        let next = psi_norm(f, &cur.grid.doubled())?;
        let change = (next.value - cur.value).abs();
        let done = change <= 0.01 * next.value.max(f64::MIN_POSITIVE);
        cur = next;
        if done {
            return Ok((cur, true));
        }
    }
    Ok((cur, false))
}
