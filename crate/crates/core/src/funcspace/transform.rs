use std::sync::Arc;

use super::function::{Function01, RealFn};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_level, GaussRule};

/// Agreement required between successive rule levels.
pub const F_TOLERANCE: f64 = 1e-11;
/// Uniform panels used by [`f_transform_default`].
pub const DEFAULT_PANELS: usize = 16;

const FIRST_LEVEL: usize = 3;
const LAST_LEVEL: usize = 8;

/// F(f)(x) = (1−x)∫₀ˣ t f(t) dt + x∫ₓ¹ (1−t) f(t) dt, tabulated by panel.
///
/// Panel integrals are accumulated once; evaluation at any x adds one
/// partial-panel integral on each side.
pub struct FTransform {
    f: RealFn,
    cuts: Vec<f64>,
    active: Vec<bool>,
    /// ∫₀^{cuts[i]} t f
    head: Vec<f64>,
    /// ∫_{cuts[i]}^1 (1−t) f
    tail: Vec<f64>,
    rule: &'static GaussRule,
    error_estimate: f64,
}

/// Fixed rule for the end panels inside the unresolved margin; their
/// integrands are bounded by the margin width, so no refinement is attempted.
fn margin_rule() -> &'static GaussRule {
    gauss_legendre_level(FIRST_LEVEL)
}

impl FTransform {
    pub fn new(f: &Function01, quad_panels: usize) -> Result<Self> {
        if quad_panels == 0 {
            return Err(Error::Parameter("need at least one panel".into()));
        }
        let hint = f.hint();
        let delta = hint.unresolved;
        let mut cuts: Vec<f64> = (0..=quad_panels).map(|i| i as f64 / quad_panels as f64).collect();
        cuts.extend(hint.breakpoints.iter().copied().filter(|t| *t > 0.0 && *t < 1.0));
        if delta > 0.0 {
            cuts.push(delta);
            cuts.push(1.0 - delta);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let active: Vec<bool> = cuts.windows(2).map(|w| w[0] >= delta && w[1] <= 1.0 - delta).collect();

        let fe = f.eval_fn();
        let panel_sums = |rule: &GaussRule| -> Vec<(f64, f64)> {
            cuts.windows(2)
                .zip(&active)
                .map(|(w, &on)| {
                    let rule = if on { rule } else { margin_rule() };
                    let a = rule.integrate_on(w[0], w[1], |t| t * fe(t));
                    let b = rule.integrate_on(w[0], w[1], |t| (1.0 - t) * fe(t));
                    (a, b)
                })
                .collect()
        };
        let cumulate = |p: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) {
            let m = p.len();
            let mut head = vec![0.0; m + 1];
            let mut tail = vec![0.0; m + 1];
            for i in 0..m {
                head[i + 1] = head[i] + p[i].0;
            }
            for i in (0..m).rev() {
                tail[i] = tail[i + 1] + p[i].1;
            }
            (head, tail)
        };

        let mut prev = cumulate(&panel_sums(gauss_legendre_level(FIRST_LEVEL)));
        for level in FIRST_LEVEL + 1..=LAST_LEVEL {
            let rule = gauss_legendre_level(level);
            let cur = cumulate(&panel_sums(rule));
            let diff = prev
                .0
                .iter()
                .zip(&cur.0)
                .chain(prev.1.iter().zip(&cur.1))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if diff.is_nan() {
                return Err(Error::QuadratureNonConvergence("integrand produced NaN".into()));
            }
            if diff <= F_TOLERANCE {
                return Ok(FTransform { f: fe, cuts, active, head: cur.0, tail: cur.1, rule, error_estimate: diff });
            }
            prev = cur;
        }
        Err(Error::QuadratureNonConvergence(format!(
            "F-transform of '{}' did not settle below {F_TOLERANCE} with {} points per panel",
            f.name(),
            1 << LAST_LEVEL
        )))
    }

    /// Difference between the last two rule levels.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    /// ∫₀¹ (1−t) f and ∫₀¹ t f, the limits of F(f)/ψ at 0 and at 1.
    pub fn ratio_limits(&self) -> [f64; 2] {
        [self.tail[0], self.head[self.head.len() - 1]]
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let i = self.cuts.partition_point(|&c| c <= x) - 1;
        let (lo, hi) = (self.cuts[i], self.cuts[i + 1]);
        let fe = &self.f;
        let (mut a, mut b) = (self.head[i], self.tail[i + 1]);
        let rule = if self.active[i] { self.rule } else { margin_rule() };
        a += rule.integrate_on(lo, x, |t| t * fe(t));
        b += rule.integrate_on(x, hi, |t| (1.0 - t) * fe(t));
        (1.0 - x) * a + x * b
    }
}

/// F(f) as a function on [0, 1].
pub fn f_transform(f: &Function01, quad_panels: usize) -> Result<Function01> {
    let t = Arc::new(FTransform::new(f, quad_panels)?);
    let limits = t.ratio_limits();
    Ok(Function01::from_fn(format!("F({})", f.name()), move |x| t.eval(x)).with_ratio_limits(limits))
}

pub fn f_transform_default(f: &Function01) -> Result<Function01> {
    f_transform(f, DEFAULT_PANELS)
}

/// (F(x−h) − 2F(x) + F(x+h))/h², which tends to −f(x) as h → 0.
pub fn check_f_second_derivative(f: &Function01, x: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(x - h > 0.0 && x + h < 1.0) {
        return Err(Error::Domain(format!("need x ± h inside (0, 1), got x = {x}, h = {h}")));
    }
    let t = FTransform::new(f, DEFAULT_PANELS)?;
    let (l, c, r) = (t.eval(x - h), t.eval(x), t.eval(x + h));
    let noise = 4.0 * (t.error_estimate() + f64::EPSILON * c.abs().max(l.abs()).max(r.abs())) / (h * h);
    if noise > 1e-4 {
        return Err(Error::StepTooSmall { h });
    }
    Ok((l - 2.0 * c + r) / (h * h))
}
