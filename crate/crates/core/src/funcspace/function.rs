use std::fmt;
use std::sync::Arc;

use super::poly::Polynomial;
use super::psi;
use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which end of [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    ClosedForm,
    NodeTable,
}

/// Where a quadrature over the function should cut panels, and the width of
/// endpoint strips [0, δ], [1−δ, 1] where the function oscillates beyond
/// resolution and integrals are taken as zero.
#[derive(Debug, Clone, Default)]
pub struct QuadHint {
    pub breakpoints: Arc<Vec<f64>>,
    pub unresolved: f64,
}

impl QuadHint {
    fn merge(&self, other: &QuadHint) -> QuadHint {
        if other.breakpoints.is_empty() {
            return QuadHint { breakpoints: self.breakpoints.clone(), unresolved: self.unresolved.max(other.unresolved) };
        }
        if self.breakpoints.is_empty() {
            return QuadHint { breakpoints: other.breakpoints.clone(), unresolved: self.unresolved.max(other.unresolved) };
        }
        let mut b: Vec<f64> = self.breakpoints.iter().chain(other.breakpoints.iter()).copied().collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        QuadHint { breakpoints: Arc::new(b), unresolved: self.unresolved.max(other.unresolved) }
    }

    fn reflect(&self) -> QuadHint {
        let b: Vec<f64> = self.breakpoints.iter().rev().map(|t| 1.0 - t).collect();
        QuadHint { breakpoints: Arc::new(b), unresolved: self.unresolved }
    }
}

#[derive(Debug)]
struct NodeTable {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl NodeTable {
    fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let i = self.nodes.partition_point(|&t| t <= x);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// An evaluable real function on [0, 1], immutable once built.
///
/// Besides the evaluation rule it may carry exact side information that
/// lets the operators avoid numerical work: a monomial form for polynomials,
/// the ratio u = f/ψ when f was built as ψ·u, the analytic second derivative
/// of registry entries, and quadrature hints.
#[derive(Clone)]
pub struct Function01 {
    name: String,
    kind: FunctionKind,
    eval: RealFn,
    second: Option<RealFn>,
    poly: Option<Polynomial>,
    ratio: Option<RealFn>,
    ratio_limits: Option<[f64; 2]>,
    hint: QuadHint,
}

impl fmt::Debug for Function01 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Function01")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("poly", &self.poly)
            .finish_non_exhaustive()
    }
}

/// Registry names, in a fixed order.
pub const REGISTRY: [&str; 10] = ["e0", "e1", "e2", "e3", "e4", "psi", "sin_pi", "exp", "abs_half", "osc"];

/// Width of the endpoint strips left unresolved for `osc`.
pub const OSC_CUTOFF: f64 = 1e-5;

impl Function01 {
    pub fn from_fn<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Function01 {
            name: name.into(),
            kind: FunctionKind::ClosedForm,
            eval: Arc::new(f),
            second: None,
            poly: None,
            ratio: None,
            ratio_limits: None,
            hint: QuadHint::default(),
        }
    }

    pub fn polynomial(name: impl Into<String>, p: Polynomial) -> Self {
        let pe = p.clone();
        let d2 = p.derivative().derivative();
        let ratio = p.div_psi().map(|q| -> RealFn { Arc::new(move |x| q.eval(x)) });
        Function01 {
            name: name.into(),
            kind: FunctionKind::ClosedForm,
            eval: Arc::new(move |x| pe.eval(x)),
            second: Some(Arc::new(move |x| d2.eval(x))),
            poly: Some(p),
            ratio,
            ratio_limits: None,
            hint: QuadHint::default(),
        }
    }

    /// Piecewise-linear interpolant of a node table, constant beyond the
    /// outermost nodes.
    pub fn node_table(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::Parameter("node table needs equal, nonzero numbers of nodes and values".into()));
        }
        if nodes.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Domain("node table nodes must lie in [0, 1]".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("node table nodes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("node table values must be finite".into()));
        }
        let breakpoints = Arc::new(nodes.iter().copied().filter(|t| *t > 0.0 && *t < 1.0).collect());
        let table = Arc::new(NodeTable { nodes, values });
        Ok(Function01 {
            name: "node-table".into(),
            kind: FunctionKind::NodeTable,
            eval: Arc::new(move |x| table.eval(x)),
            second: None,
            poly: None,
            ratio: None,
            ratio_limits: None,
            hint: QuadHint { breakpoints, unresolved: 0.0 },
        })
    }

    /// Look up a registry entry by its exact name.
    pub fn registry(name: &str) -> Result<Self> {
        let mono = |k: usize| Function01::polynomial(format!("e{k}"), Polynomial::monomial(k));
        let f = match name {
            "e0" => mono(0),
            "e1" => mono(1),
            "e2" => mono(2),
            "e3" => mono(3),
            "e4" => mono(4),
            "psi" => Function01::polynomial("psi", Polynomial::psi()),
            "sin_pi" => {
                let pi = std::f64::consts::PI;
                // sin(π·min(x, 1−x)) is exactly 0 at both ends
                Function01::from_fn("sin_pi", move |x: f64| (pi * x.min(1.0 - x)).sin())
                    .with_second_derivative(move |x: f64| -pi * pi * (pi * x.min(1.0 - x)).sin())
            }
            "exp" => Function01::from_fn("exp", f64::exp).with_second_derivative(f64::exp),
            "abs_half" => Function01::from_fn("abs_half", |x: f64| (x - 0.5).abs()).with_hint(QuadHint {
                breakpoints: Arc::new(vec![0.5]),
                unresolved: 0.0,
            }),
            "osc" => Function01::from_fn("osc", |x: f64| {
                let p = psi(x);
                if p <= 0.0 {
                    0.0
                } else {
                    (1.0 / p).sin()
                }
            })
            .with_hint(QuadHint { breakpoints: Arc::new(osc_zeros(OSC_CUTOFF)), unresolved: OSC_CUTOFF }),
            other => return Err(Error::UnknownFunction(other.to_string())),
        };
        Ok(f)
    }

    /// Same function with f(0) and f(1) forced to exact zeros.
    pub(crate) fn pinned_at_endpoints(mut self) -> Self {
        let ev = self.eval.clone();
        self.eval = Arc::new(move |x| if x <= 0.0 || x >= 1.0 { 0.0 } else { ev(x) });
        self
    }

    /// ψ·u, carrying u as the exact ratio.
    pub fn psi_times(u: &Function01) -> Self {
        let ue = u.eval.clone();
        let poly = u.poly.as_ref().map(|p| p.mul(&Polynomial::psi()));
        Function01 {
            name: format!("psi*{}", u.name),
            kind: FunctionKind::ClosedForm,
            eval: Arc::new(move |x| psi(x) * ue(x)),
            second: poly.as_ref().map(|p| {
                let d2 = p.derivative().derivative();
                Arc::new(move |x| d2.eval(x)) as RealFn
            }),
            poly,
            ratio: Some(u.eval.clone()),
            ratio_limits: None,
            hint: u.hint.clone(),
        }
    }

    pub fn with_second_derivative<F>(mut self, d2: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.second = Some(Arc::new(d2));
        self
    }

    pub fn with_hint(mut self, hint: QuadHint) -> Self {
        self.hint = hint;
        self
    }

    /// Attach known values of lim f/ψ at 0 and 1.
    pub fn with_ratio_limits(mut self, limits: [f64; 2]) -> Self {
        self.ratio_limits = Some(limits);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn eval_fn(&self) -> RealFn {
        self.eval.clone()
    }

    pub fn polynomial_form(&self) -> Option<&Polynomial> {
        self.poly.as_ref()
    }

    pub fn has_second_derivative(&self) -> bool {
        self.second.is_some()
    }

    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        self.second.as_ref().map(|d| d(x))
    }

    /// f″ as a function, when known analytically.
    pub fn second_derivative_fn(&self) -> Option<Function01> {
        let d = self.second.clone()?;
        Some(match &self.poly {
            Some(p) => Function01::polynomial(format!("{}''", self.name), p.derivative().derivative()),
            None => Function01::from_fn(format!("{}''", self.name), move |x| d(x)).with_hint(self.hint.clone()),
        })
    }

    pub fn hint(&self) -> &QuadHint {
        &self.hint
    }

    /// True when f(0) and f(1) are both zero up to `tol`.
    pub fn vanishes_at_endpoints(&self, tol: f64) -> bool {
        self.eval(0.0).abs() <= tol && self.eval(1.0).abs() <= tol
    }

    /// f(x)/ψ(x), using exact side information where available.
    /// At the endpoints this is the limit value.
    pub fn psi_ratio(&self, x: f64) -> f64 {
        if let Some(u) = &self.ratio {
            return u(x);
        }
        if x <= 0.0 {
            return self.ratio_limit(Side::Left);
        }
        if x >= 1.0 {
            return self.ratio_limit(Side::Right);
        }
        self.eval(x) / psi(x)
    }

    /// lim f/ψ at an endpoint: exact when known, otherwise a three-level
    /// Richardson extrapolation of f(d)/ψ(d) with d = 1e-4.
    pub fn ratio_limit(&self, side: Side) -> f64 {
        let idx = if side == Side::Left { 0 } else { 1 };
        if let Some(l) = self.ratio_limits {
            return l[idx];
        }
        if let Some(u) = &self.ratio {
            return u(idx as f64);
        }
        let at = |d: f64| {
            let x = if side == Side::Left { d } else { 1.0 - d };
            self.eval(x) / psi(x)
        };
        let d = 1e-4;
        (8.0 * at(d) - 6.0 * at(2.0 * d) + at(4.0 * d)) / 3.0
    }

    /// Limits known without extrapolation.
    fn exact_ratio_limits(&self) -> Option<[f64; 2]> {
        if let Some(l) = self.ratio_limits {
            return Some(l);
        }
        self.ratio.as_ref().map(|u| [u(0.0), u(1.0)])
    }

    /// a·f + b·g.
    pub fn lin_comb(a: f64, f: &Function01, b: f64, g: &Function01) -> Function01 {
        let (fe, ge) = (f.eval.clone(), g.eval.clone());
        let second = match (&f.second, &g.second) {
            (Some(fs), Some(gs)) => {
                let (fs, gs) = (fs.clone(), gs.clone());
                Some(Arc::new(move |x| a * fs(x) + b * gs(x)) as RealFn)
            }
            _ => None,
        };
        let ratio = match (&f.ratio, &g.ratio) {
            (Some(fr), Some(gr)) => {
                let (fr, gr) = (fr.clone(), gr.clone());
                Some(Arc::new(move |x| a * fr(x) + b * gr(x)) as RealFn)
            }
            _ => None,
        };
        let poly = match (&f.poly, &g.poly) {
            (Some(p), Some(q)) => Some(Polynomial::lin_comb(a, p, b, q)),
            _ => None,
        };
        let ratio = ratio.or_else(|| {
            poly.as_ref().and_then(|p| p.div_psi()).map(|q| Arc::new(move |x| q.eval(x)) as RealFn)
        });
        let ratio_limits = if ratio.is_some() {
            None
        } else {
            match (f.exact_ratio_limits(), g.exact_ratio_limits()) {
                (Some(l), Some(m)) => Some([a * l[0] + b * m[0], a * l[1] + b * m[1]]),
                _ => None,
            }
        };
        Function01 {
            name: format!("{a}*{}+{b}*{}", f.name, g.name),
            kind: FunctionKind::ClosedForm,
            eval: Arc::new(move |x| a * fe(x) + b * ge(x)),
            second,
            poly,
            ratio,
            ratio_limits,
            hint: f.hint.merge(&g.hint),
        }
    }

    pub fn scale(&self, c: f64) -> Function01 {
        let mut out = Function01::lin_comb(c, self, 0.0, &Function01::zero());
        out.name = format!("{c}*{}", self.name);
        out
    }

    pub fn add(&self, g: &Function01) -> Function01 {
        Function01::lin_comb(1.0, self, 1.0, g)
    }

    pub fn sub(&self, g: &Function01) -> Function01 {
        Function01::lin_comb(1.0, self, -1.0, g)
    }

    pub fn zero() -> Function01 {
        Function01::polynomial("zero", Polynomial::zero())
    }

    /// f∘τ with τ(x) = 1 − x.
    pub fn reflect(&self) -> Function01 {
        let fe = self.eval.clone();
        Function01 {
            name: format!("{}(1-x)", self.name),
            kind: self.kind,
            eval: Arc::new(move |x| fe(1.0 - x)),
            second: self.second.clone().map(|s| Arc::new(move |x| s(1.0 - x)) as RealFn),
            poly: self.poly.as_ref().map(Polynomial::reflect),
            ratio: self.ratio.clone().map(|u| Arc::new(move |x| u(1.0 - x)) as RealFn),
            ratio_limits: self.ratio_limits.map(|l| [l[1], l[0]]),
            hint: self.hint.reflect(),
        }
    }
}

/// Zeros of sin(1/ψ) in (δ, 1−δ), ascending.
fn osc_zeros(delta: f64) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let mut left = Vec::new();
    // ψ(t) = 1/(mπ) needs mπ ≥ 4
    let mut m = (4.0 / pi).ceil() as u64;
    loop {
        let r = 1.0 / (m as f64 * pi);
        let t = 2.0 * r / (1.0 + (1.0 - 4.0 * r).sqrt());
        if t < delta {
            break;
        }
        left.push(t);
        m += 1;
    }
    let mut all: Vec<f64> = left.iter().rev().copied().collect();
    if all.last().is_none_or(|&t| t < 0.5) {
        all.push(0.5);
    }
    all.extend(left.iter().map(|t| 1.0 - t));
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}
