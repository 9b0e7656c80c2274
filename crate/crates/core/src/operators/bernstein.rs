//! Bernstein operators B_n.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcspace::Function01;
use crate::special::bernstein_basis_all;

/// B_n(f)(x) = Σ f(k/n) p_{n,k}(x).
pub fn bernstein_apply(n: u32, f: &Function01, x: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Parameter("Bernstein operators need n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    let p = bernstein_basis_all(n as usize, x);
    Ok(p.iter().enumerate().map(|(k, w)| w * f.eval(k as f64 / n as f64)).sum())
}

/// Node values f(k/n), k = 0..=n.
pub fn bernstein_coefficients(n: u32, f: &Function01) -> Vec<f64> {
    (0..=n).map(|k| f.eval(k as f64 / n as f64)).collect()
}

/// T[i][j] = p_{n,j}(i/n).
pub fn bernstein_transfer(n: u32) -> Result<DMatrix<f64>> {
    if n < 1 {
        return Err(Error::Parameter("Bernstein operators need n >= 1".into()));
    }
    let m = n as usize + 1;
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let p = bernstein_basis_all(n as usize, i as f64 / n as f64);
        for (j, v) in p.into_iter().enumerate() {
            t[(i, j)] = v;
        }
    }
    Ok(t)
}
