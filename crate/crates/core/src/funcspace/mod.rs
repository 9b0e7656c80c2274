//! Functions on [0, 1], the weight ψ, the ψ-norm, the projection B₁ and the
//! integral transform F.

mod function;
mod grid;
mod poly;
mod transform;

pub use function::{Function01, FunctionKind, QuadHint, RealFn, Side, OSC_CUTOFF, REGISTRY};
pub use grid::{
    psi_norm, psi_norm_converged, psi_norm_of_values, psi_norm_with, EvaluationGrid, GridScheme, PsiNormEstimate,
    DEFAULT_GRID_SIZE,
};
pub use poly::Polynomial;
pub use transform::{check_f_second_derivative, f_transform, f_transform_default, FTransform, DEFAULT_PANELS, F_TOLERANCE};

use crate::error::{Error, Result};

/// ψ(x) = x(1−x).
#[inline]
pub fn psi(x: f64) -> f64 {
    x * (1.0 - x)
}

/// B₁(f)(x) = (1−x) f(0) + x f(1).
pub fn apply_b1(f: &Function01) -> Function01 {
    let (a, b) = (f.eval(0.0), f.eval(1.0));
    Function01::polynomial(format!("B1({})", f.name()), Polynomial::new(vec![a, b - a]))
}

/// f − B₁(f), which vanishes at both endpoints.
pub fn project_to_cpsi(f: &Function01) -> Function01 {
    let g = f.sub(&apply_b1(f));
    let ge = g.eval_fn();
    // pin the endpoint values to exact zeros
    let pinned = move |x: f64| if x <= 0.0 || x >= 1.0 { 0.0 } else { ge(x) };
    let name = format!("P({})", f.name());
    match g.polynomial_form() {
        Some(p) => {
            // (f − B₁f) has zero constant term and coefficients summing to zero
            let mut c = p.coeffs().to_vec();
            c[0] = 0.0;
            let s: f64 = c.iter().sum();
            if c.len() > 1 {
                c[1] -= s;
            }
            Function01::polynomial(name, Polynomial::new(c)).pinned_at_endpoints()
        }
        None => {
            let mut out = Function01::from_fn(name, pinned).with_hint(f.hint().clone());
            if let Some(d) = f.second_derivative_fn() {
                out = out.with_second_derivative(move |x| d.eval(x));
            }
            out
        }
    }
}

/// max |f(u) − f(v)| over grid pairs with |u − v| ≤ δ, a lower estimate of ω(f, δ).
pub fn modulus_of_continuity(f: &Function01, delta: f64, grid: &EvaluationGrid) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let p = grid.points();
    let v: Vec<f64> = p.iter().map(|&x| f.eval(x)).collect();
    let mut best = 0.0f64;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[j] - p[i] > delta {
                break;
            }
            best = best.max((v[j] - v[i]).abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(name: &str) -> Function01 {
        Function01::registry(name).unwrap()
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0), 0.0);
        assert_eq!(psi(0.5), 0.25);
        assert!((psi(0.3) - 0.21).abs() < 1e-16);
    }

    #[test]
    fn b1_examples() {
        let b = apply_b1(&reg("e2"));
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(b.eval(x), x);
        }
        assert_eq!(apply_b1(&reg("e0")).eval(0.7), 1.0);
        let s = apply_b1(&reg("sin_pi"));
        assert_eq!(s.eval(0.4), 0.0);
        let bb = apply_b1(&apply_b1(&reg("exp")));
        let b1 = apply_b1(&reg("exp"));
        for x in [0.0, 0.2, 0.9, 1.0] {
            assert!((bb.eval(x) - b1.eval(x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn projection_examples() {
        let z = project_to_cpsi(&reg("e1"));
        assert_eq!(z.eval(0.3), 0.0);
        let m = project_to_cpsi(&reg("e2"));
        for x in [0.1, 0.5, 0.8] {
            assert!((m.eval(x) + psi(x)).abs() < 1e-16);
        }
        let c = project_to_cpsi(&reg("e0").add(&reg("e2")));
        assert!((c.eval(0.25) + psi(0.25)).abs() < 1e-16);
        for name in REGISTRY {
            let p = project_to_cpsi(&reg(name));
            assert_eq!(p.eval(0.0), 0.0, "{name}");
            assert_eq!(p.eval(1.0), 0.0, "{name}");
        }
        let e = project_to_cpsi(&reg("exp"));
        assert!(e.has_second_derivative());
    }

    #[test]
    fn modulus_examples() {
        let g = EvaluationGrid::default();
        assert_eq!(modulus_of_continuity(&reg("e0"), 0.1, &g).unwrap(), 0.0);
        let w1 = modulus_of_continuity(&reg("e1"), 0.1, &g).unwrap();
        assert!(w1 <= 0.1 && w1 > 0.099);
        let wp = modulus_of_continuity(&reg("psi"), 0.1, &g).unwrap();
        assert!(wp <= 0.1 && wp > 0.085);
        assert!(modulus_of_continuity(&reg("e1"), 0.0, &g).is_err());
    }
}
