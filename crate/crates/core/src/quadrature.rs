//! Gauss–Legendre and Gauss–Jacobi rules.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::ln_beta;

/// Nodes and weights of an interpolatory rule on [−1, 1] (or [0, 1] for
/// the Beta-density rules).
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_lo^hi f for a rule on [−1, 1].
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let h = 0.5 * (hi - lo);
        let c = 0.5 * (hi + lo);
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * t);
        }
        s * h
    }
}

/// m-point Gauss–Legendre rule, nodes ascending.
pub fn gauss_legendre(m: usize) -> GaussRule {
    assert!(m >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

const CACHED_LEVELS: usize = 11;

/// Gauss–Legendre rule with 2^level points, built once per process.
pub fn gauss_legendre_level(level: usize) -> &'static GaussRule {
    static CACHE: [OnceLock<GaussRule>; CACHED_LEVELS] = [const { OnceLock::new() }; CACHED_LEVELS];
    assert!(level < CACHED_LEVELS, "level {level} beyond cache");
    CACHE[level].get_or_init(|| gauss_legendre(1 << level))
}

/// m-point Gauss–Jacobi rule for the weight (1−s)^alpha (1+s)^beta on [−1, 1],
/// by Golub–Welsch on the Jacobi matrix of the monic recurrence.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if m == 0 {
        return Err(Error::Parameter("rule needs at least one node".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::Domain(format!("Jacobi exponents must exceed -1, got ({alpha}, {beta})")));
    }
    let ab = alpha + beta;
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    diag[0] = (beta - alpha) / (ab + 2.0);
    for (k, d) in diag.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        *d = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
    for (i, o) in off.iter_mut().enumerate() {
        let k = (i + 1) as f64;
        let s = 2.0 * k + ab;
        let b2 = if i == 0 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        *o = b2.sqrt();
    }
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jm[(i, i)] = diag[i];
        if i + 1 < m {
            jm[(i, i + 1)] = off[i];
            jm[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jm);
    let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + ln_beta(alpha + 1.0, beta + 1.0)?;
    let mu0 = ln_mu0.exp();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GaussRule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
}

/// Rule on [0, 1] for the Beta(a, b) probability density
/// t^(a−1)(1−t)^(b−1)/B(a, b); weights sum to one.
pub fn beta_density_rule(m: usize, a: f64, b: f64) -> Result<GaussRule> {
    let r = gauss_jacobi(m, b - 1.0, a - 1.0)?;
    let total: f64 = r.weights.iter().sum();
    Ok(GaussRule {
        nodes: r.nodes.iter().map(|s| 0.5 * (1.0 + s)).collect(),
        weights: r.weights.iter().map(|w| w / total).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for m in [1usize, 2, 5, 8, 16, 64] {
            let r = gauss_legendre(m);
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            // degree 2m−1 is exact
            let d = 2 * m - 1;
            let got = r.integrate_on(0.0, 1.0, |t| t.powi(d as i32));
            assert_relative_eq!(got, 1.0 / (d as f64 + 1.0), max_relative = 1e-13);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn legendre_smooth_integrand() {
        let r = gauss_legendre_level(4);
        let got = r.integrate_on(0.0, std::f64::consts::PI, f64::sin);
        assert_relative_eq!(got, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_reduces_to_legendre() {
        let gj = gauss_jacobi(12, 0.0, 0.0).unwrap();
        let gl = gauss_legendre(12);
        for i in 0..12 {
            assert!((gj.nodes[i] - gl.nodes[i]).abs() < 1e-13);
            assert!((gj.weights[i] - gl.weights[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn beta_rule_moments() {
        // E[t^j] under Beta(a,b) = Π_{i<j} (a+i)/(a+b+i)
        for (a, b) in [(0.5, 1.5), (2.0, 2.0), (0.25, 7.75), (16.0, 1.0)] {
            let r = beta_density_rule(10, a, b).unwrap();
            for j in 0..20 {
                let got: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * t.powi(j)).sum();
                let want: f64 = (0..j).map(|i| (a + i as f64) / (a + b + i as f64)).product();
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_rejects_bad_exponents() {
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
        assert!(gauss_jacobi(0, 0.0, 0.0).is_err());
    }
}
