//! Meyer-König–Zeller weights: a certified sweep over the negative-binomial
//! series and the three MKZ operators built on it.

use crate::error::{Error, Result};
use crate::funcspace::Function01;

/// Default cap on the number of series terms per evaluation point.
pub const DEFAULT_TERM_CAP: u64 = 1 << 26;

/// Visits (k, w_k) for the weights w_k = C(n+k,k)(1−y)^(n+1) y^k, where
/// `yc` is 1 − y passed separately so callers holding the complement exactly
/// do not lose it to rounding.
///
/// Stops at the first K past the mode with w_K·r_K/(1−r_K) ≤ eps, where
/// r_K = y(n+K+1)/(K+1) < 1; since the ratios decrease this bounds Σ_{k>K} w_k.
/// Returns that tail bound. Weights below the mode are generated downward from
/// a log-domain anchor and dropped once they underflow.
pub fn sweep<F: FnMut(u64, f64)>(n: u32, y: f64, yc: f64, eps: f64, cap: u64, mut visit: F) -> Result<f64> {
    if y <= 0.0 {
        visit(0, 1.0);
        return Ok(0.0);
    }
    if yc <= 0.0 {
        return Err(Error::Domain("the series is not defined at x = 1".into()));
    }
    let nf = n as f64;
    // the weights increase while k ≤ (y(n+1) − 1)/(1 − y)
    let kstar = (y * (nf + 1.0) - 1.0) / yc;
    let mode = if kstar < 0.0 { 0.0 } else { kstar.floor() + 1.0 };
    if mode > cap as f64 {
        return Err(Error::TruncationBudgetExceeded { needed: mode as u64, cap });
    }
    let m = mode as u64;
    let ln_w = {
        let kf = m as f64;
        let mut lc = 0.0;
        for i in 1..=n {
            lc += (kf / i as f64).ln_1p();
        }
        lc + (nf + 1.0) * yc.ln() + kf * y.ln()
    };
    let wm = ln_w.exp();

    let mut w = wm;
    let mut k = m;
    while k > 0 {
        w *= k as f64 / (y * (nf + k as f64));
        k -= 1;
        if w < 1e-300 {
            break;
        }
        visit(k, w);
    }

    let mut w = wm;
    let mut k = m;
    visit(k, w);
    loop {
        let r = y * (nf + k as f64 + 1.0) / (k as f64 + 1.0);
        let tail = w * r / (1.0 - r);
        if tail <= eps {
            return Ok(tail);
        }
        if k >= cap {
            return Err(Error::TruncationBudgetExceeded { needed: k + 1, cap });
        }
        w *= r;
        k += 1;
        visit(k, w);
    }
}

/// Number of terms [`sweep`] uses at y.
pub fn truncation_index(n: u32, y: f64, eps: f64, cap: u64) -> Result<u64> {
    let mut last = 0;
    sweep(n, y, 1.0 - y, eps, cap, |k, _| last = last.max(k))?;
    Ok(last)
}

#[inline]
pub(crate) fn node(n: u32, k: u64) -> f64 {
    k as f64 / (n as u64 + k) as f64
}

#[inline]
pub(crate) fn reflected_node(n: u32, k: u64) -> f64 {
    n as f64 / (n as u64 + k) as f64
}

/// Z_n(f)(x), truncated so the omitted weight is at most eps.
pub fn mkz_apply_with(n: u32, f: &Function01, x: f64, eps: f64, cap: u64) -> Result<f64> {
    if x >= 1.0 {
        return Ok(f.eval(1.0));
    }
    let mut s = 0.0;
    sweep(n, x, 1.0 - x, eps, cap, |k, w| s += w * f.eval(node(n, k)))?;
    Ok(s)
}

/// Z_n¹(f)(x) = Z_n(f∘τ)(1 − x), with τ(t) = 1 − t.
pub fn mkz_reflected_apply_with(n: u32, f: &Function01, x: f64, eps: f64, cap: u64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(f.eval(0.0));
    }
    let mut s = 0.0;
    sweep(n, 1.0 - x, x, eps, cap, |k, w| s += w * f.eval(reflected_node(n, k)))?;
    Ok(s)
}

/// Z_n*(f) = ½(Z_n + Z_n¹)(f), each half truncated to eps/2.
pub fn mkz_symmetric_apply_with(n: u32, f: &Function01, x: f64, eps: f64, cap: u64) -> Result<f64> {
    let a = mkz_apply_with(n, f, x, 0.5 * eps, cap)?;
    let b = mkz_reflected_apply_with(n, f, x, 0.5 * eps, cap)?;
    Ok(0.5 * (a + b))
}

pub fn mkz_apply(n: u32, f: &Function01, x: f64, eps: f64) -> Result<f64> {
    check(n, x, eps)?;
    mkz_apply_with(n, f, x, eps, DEFAULT_TERM_CAP)
}

pub fn mkz_reflected_apply(n: u32, f: &Function01, x: f64, eps: f64) -> Result<f64> {
    check(n, x, eps)?;
    mkz_reflected_apply_with(n, f, x, eps, DEFAULT_TERM_CAP)
}

pub fn mkz_symmetric_apply(n: u32, f: &Function01, x: f64, eps: f64) -> Result<f64> {
    check(n, x, eps)?;
    mkz_symmetric_apply_with(n, f, x, eps, DEFAULT_TERM_CAP)
}

fn check(n: u32, x: f64, eps: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::Parameter("mkz operators need n >= 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("truncation eps must be positive, got {eps}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(())
}

/// Central moment Σ w_k (t_k − x)^p of one half; `reflected` selects the
/// nodes n/(n+k) swept at 1 − x.
pub(crate) fn half_moment(n: u32, p: u32, x: f64, eps: f64, cap: u64, reflected: bool) -> Result<f64> {
    let mut s = 0.0;
    if !reflected {
        if x >= 1.0 {
            return Ok(if p == 0 { 1.0 } else { 0.0 });
        }
        sweep(n, x, 1.0 - x, eps, cap, |k, w| s += w * (node(n, k) - x).powi(p as i32))?;
    } else {
        if x <= 0.0 {
            return Ok(if p == 0 { 1.0 } else { 0.0 });
        }
        sweep(n, 1.0 - x, x, eps, cap, |k, w| s += w * (reflected_node(n, k) - x).powi(p as i32))?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::mkz_basis_weight;

    #[test]
    fn sweep_matches_direct_weights() {
        for (n, x) in [(3u32, 0.4), (16, 0.93), (1, 0.01), (8, 0.5)] {
            let mut seen = Vec::new();
            let tail = sweep(n, x, 1.0 - x, 1e-12, DEFAULT_TERM_CAP, |k, w| seen.push((k, w))).unwrap();
            assert!(tail <= 1e-12);
            let mut total = 0.0;
            for (k, w) in seen {
                let direct = mkz_basis_weight(n as u64, k, x).unwrap();
                assert!((w - direct).abs() <= 1e-13 * direct.max(1e-300) + 1e-300, "n={n} x={x} k={k}");
                total += w;
            }
            assert!(total <= 1.0 + 1e-12 && total >= 1.0 - 1e-12 - tail);
        }
    }

    #[test]
    fn weights_at_zero() {
        let mut seen = Vec::new();
        sweep(4, 0.0, 1.0, 1e-10, 10, |k, w| seen.push((k, w))).unwrap();
        assert_eq!(seen, vec![(0, 1.0)]);
    }

    #[test]
    fn cap_is_enforced() {
        let r = sweep(4, 1.0 - 1e-9, 1e-9, 1e-10, 1000, |_, _| {});
        assert!(matches!(r, Err(Error::TruncationBudgetExceeded { cap: 1000, .. })));
    }

    #[test]
    fn tail_bound_is_honest() {
        // exact tail by summing far beyond the stopping index
        let (n, x, eps) = (5u32, 0.8, 1e-6);
        let mut kmax = 0;
        let tail = sweep(n, x, 1.0 - x, eps, DEFAULT_TERM_CAP, |k, _| kmax = kmax.max(k)).unwrap();
        let mut exact = 0.0;
        for k in kmax + 1..kmax + 5000 {
            exact += mkz_basis_weight(n as u64, k, x).unwrap();
        }
        assert!(exact <= tail * (1.0 + 1e-9));
        assert!(exact > 0.0);
    }

    #[test]
    fn linear_reproduction() {
        let e1 = Function01::registry("e1").unwrap();
        for x in [0.0, 0.1, 0.6, 0.95, 1.0] {
            assert!((mkz_apply(4, &e1, x, 1e-12).unwrap() - x).abs() < 1e-11);
            assert!((mkz_reflected_apply(4, &e1, x, 1e-12).unwrap() - x).abs() < 1e-11);
            assert!((mkz_symmetric_apply(4, &e1, x, 1e-12).unwrap() - x).abs() < 1e-11);
        }
    }
}
