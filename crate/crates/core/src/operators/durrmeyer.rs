//! Genuine Bernstein–Durrmeyer operators U_n^ρ and their Beta-density functionals.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcspace::Function01;
use crate::quadrature::{beta_density_rule, gauss_jacobi, gauss_legendre_level};
use crate::special::{bernstein_basis_all, binomial, ln_beta};

const TOL: f64 = 1e-13;
const MIN_LEVEL: usize = 3;
const MAX_LEVEL: usize = 8;

/// E[t^j] for t ~ Beta(a, b), j = 0..=deg: Π_{i<j} (a+i)/(a+b+i).
pub fn beta_moments(a: f64, b: f64, deg: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(deg + 1);
    let mut acc = 1.0;
    m.push(acc);
    for i in 0..deg {
        let fi = i as f64;
        acc *= (a + fi) / (a + b + fi);
        m.push(acc);
    }
    m
}

/// ∫ f dμ for the Beta(a, b) probability measure. Polynomials are integrated
/// exactly from the moments; other inputs by Gauss–Jacobi, split into panels
/// at the function's breakpoints.
pub fn beta_expectation(f: &Function01, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Parameter(format!("Beta parameters must be positive, got ({a}, {b})")));
    }
    if let Some(p) = f.polynomial_form() {
        let m = beta_moments(a, b, p.degree());
        return Ok(p.coeffs().iter().zip(&m).map(|(c, mj)| c * mj).sum());
    }
    beta_expectation_quadrature(f, a, b)
}

/// The quadrature path of [`beta_expectation`], also for polynomial input.
pub fn beta_expectation_quadrature(f: &Function01, a: f64, b: f64) -> Result<f64> {
    let hint = f.hint();
    let delta = hint.unresolved;
    let inner: Vec<f64> =
        hint.breakpoints.iter().copied().filter(|&t| t > delta && t < 1.0 - delta && t > 0.0 && t < 1.0).collect();
    if inner.is_empty() && delta == 0.0 {
        return settle(f, a, b, 1.0, 0.0, |level| {
            let r = beta_density_rule(1 << level, a, b)?;
            Ok(r.nodes.iter().zip(&r.weights).map(|(t, w)| w * f.eval(*t)).sum())
        });
    }
    composite(f, a, b, delta, &inner)
}

/// Raises the level until two successive values agree to TOL·max(|v|, width),
/// or to the resolution of abscissae near `edge`, ε·|edge|/width relative.
fn settle<Q: FnMut(usize) -> Result<f64>>(f: &Function01, a: f64, b: f64, width: f64, edge: f64, mut q: Q) -> Result<f64> {
    let mut prev: Option<f64> = None;
    for level in MIN_LEVEL..=MAX_LEVEL {
        let cur = q(level)?;
        if !cur.is_finite() {
            return Err(Error::QuadratureNonConvergence(format!("non-finite Beta integral of '{}'", f.name())));
        }
        if let Some(p) = prev {
            let floor = 16.0 * f64::EPSILON * edge.abs() / width * cur.abs();
            if (cur - p).abs() <= (TOL * cur.abs().max(width)).max(floor) {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Err(Error::QuadratureNonConvergence(format!(
        "Beta({a}, {b}) integral of '{}' did not settle with {} nodes per panel",
        f.name(),
        1 << MAX_LEVEL
    )))
}

/// Panels between breakpoints, each refined until it settles on its own.
fn composite(f: &Function01, a: f64, b: f64, delta: f64, inner: &[f64]) -> Result<f64> {
    let lnb = ln_beta(a, b)?;
    let density = |t: f64| ((a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - lnb).exp();
    let mut cuts = Vec::with_capacity(inner.len() + 4);
    cuts.push(0.0);
    if delta > 0.0 {
        cuts.push(delta);
    }
    cuts.extend_from_slice(inner);
    if delta > 0.0 {
        cuts.push(1.0 - delta);
    }
    cuts.push(1.0);
    let last = cuts.len() - 2;
    // the unresolved margins get one fixed rule and no refinement
    let fixed = |f: &Function01, a: f64, b: f64, width: f64, edge: f64, mut q: Box<dyn FnMut(usize) -> Result<f64> + '_>| {
        if delta > 0.0 {
            q(MIN_LEVEL + 1)
        } else {
            settle(f, a, b, width, edge, q)
        }
    };
    let mut total = 0.0;
    for (i, w) in cuts.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        total += if i == 0 {
            // t^(a−1) absorbed into the rule
            let h = 0.5 * hi;
            fixed(f, a, b, hi - lo, hi, Box::new(|level| {
                let r = gauss_jacobi(1 << level, 0.0, a - 1.0)?;
                let s: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(sn, sw)| {
                        let t = h * (1.0 + sn);
                        sw * f.eval(t) * ((b - 1.0) * (-t).ln_1p()).exp()
                    })
                    .sum();
                Ok(s * (a * h.ln() - lnb).exp())
            }))?
        } else if i == last {
            let h = 0.5 * (1.0 - lo);
            fixed(f, a, b, hi - lo, hi, Box::new(|level| {
                let r = gauss_jacobi(1 << level, b - 1.0, 0.0)?;
                let s: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(sn, sw)| {
                        let t = lo + h * (1.0 + sn);
                        sw * f.eval(t) * ((a - 1.0) * t.ln()).exp()
                    })
                    .sum();
                Ok(s * (b * h.ln() - lnb).exp())
            }))?
        } else {
            settle(f, a, b, hi - lo, hi, |level| Ok(gauss_legendre_level(level).integrate_on(lo, hi, |t| f.eval(t) * density(t))))?
        };
    }
    Ok(total)
}

fn check_params(n: u32, rho: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("Durrmeyer operators need n >= 2, got {n}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

/// F_{n,k}^ρ(f) = ∫ f(t) t^(kρ−1)(1−t)^((n−k)ρ−1)/B(kρ, (n−k)ρ) dt, 1 ≤ k ≤ n−1.
pub fn durrmeyer_functional(n: u32, k: u32, rho: f64, f: &Function01) -> Result<f64> {
    check_params(n, rho)?;
    if k < 1 || k >= n {
        return Err(Error::Parameter(format!("functional index k = {k} outside 1..={}", n - 1)));
    }
    beta_expectation(f, k as f64 * rho, (n - k) as f64 * rho)
}

/// Bernstein coefficients of U_n^ρ(f): (f(0), F_1(f), …, F_{n−1}(f), f(1)).
pub fn durrmeyer_coefficients(n: u32, rho: f64, f: &Function01) -> Result<Vec<f64>> {
    check_params(n, rho)?;
    let mut c = vec![0.0; n as usize + 1];
    c[0] = f.eval(0.0);
    c[n as usize] = f.eval(1.0);
    let inner: Vec<Result<f64>> = (1..n).into_par_iter().map(|k| durrmeyer_functional(n, k, rho, f)).collect();
    for (k, v) in inner.into_iter().enumerate() {
        c[k + 1] = v?;
    }
    Ok(c)
}

/// Σ c_k p_{n,k}(x).
pub fn bernstein_sum(c: &[f64], x: f64) -> f64 {
    BernsteinForm::new(c).eval(x)
}

/// A polynomial in Bernstein form, prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct BernsteinForm {
    coeffs: Vec<f64>,
    // c_k·C(n,k); None where the binomials would overflow
    scaled: Option<Vec<f64>>,
}

impl BernsteinForm {
    pub fn new(c: &[f64]) -> Self {
        let n = c.len() - 1;
        let scaled = (n <= 500).then(|| {
            let mut binom = 1.0;
            c.iter()
                .enumerate()
                .map(|(k, ck)| {
                    if k > 0 {
                        binom = binom * (n - k + 1) as f64 / k as f64;
                    }
                    ck * binom
                })
                .collect()
        });
        BernsteinForm { coeffs: c.to_vec(), scaled }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let Some(d) = &self.scaled else {
            let p = bernstein_basis_all(self.coeffs.len() - 1, x);
            return self.coeffs.iter().zip(&p).map(|(a, b)| a * b).sum();
        };
        // Volk–Schumaker nested form, run from the nearer endpoint
        if x <= 0.5 {
            nested(x, d.iter())
        } else {
            nested(1.0 - x, d.iter().rev())
        }
    }
}

fn nested<'a, I: Iterator<Item = &'a f64>>(t: f64, mut it: I) -> f64 {
    let s = 1.0 - t;
    let mut acc = it.next().copied().unwrap_or(0.0);
    let mut tp = 1.0;
    for dk in it {
        tp *= t;
        acc = acc * s + tp * dk;
    }
    acc
}

pub fn durrmeyer_apply(n: u32, rho: f64, f: &Function01, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(bernstein_sum(&durrmeyer_coefficients(n, rho, f)?, x))
}

/// T[k][j] = F_k(p_{n,j}) = C(n,j) B(a+j, b+n−j)/B(a, b) with a = kρ, b = (n−k)ρ;
/// the first and last rows are unit vectors (endpoint interpolation).
pub fn durrmeyer_transfer(n: u32, rho: f64) -> Result<DMatrix<f64>> {
    check_params(n, rho)?;
    let nn = n as usize;
    let mut t = DMatrix::<f64>::zeros(nn + 1, nn + 1);
    t[(0, 0)] = 1.0;
    t[(nn, nn)] = 1.0;
    for k in 1..nn {
        let a = k as f64 * rho;
        let b = (nn - k) as f64 * rho;
        for j in 0..=nn {
            // B(a+j, b+n−j)/B(a, b) as a product of factors below one
            let mut r = 1.0;
            for i in 0..j {
                r *= (a + i as f64) / (a + b + i as f64);
            }
            for i in 0..nn - j {
                r *= (b + i as f64) / (a + b + (j + i) as f64);
            }
            t[(k, j)] = binomial(nn as u64, j as u64)? * r;
        }
    }
    Ok(t)
}
