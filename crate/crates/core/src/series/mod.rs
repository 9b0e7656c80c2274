//! Iterates L^k and the geometric series G_L = Σ L^k on C_ψ.

pub mod carrier;

use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use carrier::{Carrier, CoefficientCarrier, NodeCache, RatioCarrier, DEFAULT_CLOSURE_FACTOR};

use crate::error::{Error, Result};
use crate::funcspace::{apply_b1, project_to_cpsi, psi, psi_norm, EvaluationGrid, Function01, Side};
use crate::operators::{bernstein_sum, mkz, BernsteinForm, Family, OperatorSpec};

/// Neumann tolerance for the exact-carrier families.
pub const DEFAULT_EPS_EXACT: f64 = 1e-8;
/// Neumann tolerance for the MKZ families.
pub const DEFAULT_EPS_MKZ: f64 = 1e-6;
/// Largest endpoint value accepted as zero for inputs in C_ψ.
pub const ENDPOINT_TOLERANCE: f64 = 1e-12;

pub fn default_eps(family: Family) -> f64 {
    if family.is_mkz() {
        DEFAULT_EPS_MKZ
    } else {
        DEFAULT_EPS_EXACT
    }
}

/// Smallest K with b^(K+1)/(1−b)·‖f‖_ψ ≤ eps.
pub fn neumann_tail_terms(b_norm: f64, f_psi_norm: f64, eps: f64) -> Result<u64> {
    if !(b_norm < 1.0) {
        return Err(Error::Domain(format!("b_norm = {b_norm} is not below 1: the operator is outside Lambda")));
    }
    if !(b_norm >= 0.0) || !(f_psi_norm >= 0.0) || !(eps > 0.0) {
        return Err(Error::Parameter(format!("need b_norm >= 0, norm >= 0 and eps > 0, got {b_norm}, {f_psi_norm}, {eps}")));
    }
    let tail = |k: u64| b_norm.powi(k as i32 + 1) / (1.0 - b_norm) * f_psi_norm;
    if tail(0) <= eps {
        return Ok(0);
    }
    let guess = ((eps * (1.0 - b_norm) / f_psi_norm).ln() / b_norm.ln() - 1.0).ceil().max(0.0) as u64;
    let mut k = guess.saturating_sub(2);
    while tail(k) > eps {
        k += 1;
    }
    while k > 0 && tail(k - 1) <= eps {
        k -= 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Neumann,
    Solve,
}

#[derive(Debug, Clone)]
pub struct GeometricSeriesResult {
    /// G_L(f), evaluable anywhere through g = f + L(g).
    pub g: Function01,
    pub method: Method,
    /// Index K of the last Neumann term; 0 for the solve path.
    pub terms_used: u64,
    /// b^(K+1)/(1−b)·‖f‖_ψ; 0 for the solve path.
    pub tail_bound: f64,
    /// Error attributable to the finite carrier (0 for exact carriers).
    pub truncation_bound: f64,
    /// ‖(I−L)g − f‖_ψ on the grid, with L applied directly to g.
    pub residual_psi_norm: f64,
    pub b_norm: f64,
    pub f_psi_norm: f64,
}

/// L(h)(x) evaluated outside the carrier.
enum Image {
    Coefficients(DVector<f64>),
    Nodes(Box<Mutex<NodeCache>>),
}

impl Image {
    fn new(op: &OperatorSpec, carrier: &Carrier, h: &Function01) -> Result<Image> {
        Ok(match carrier {
            Carrier::Coefficients(_) => Image::Coefficients(carrier.state_of(h)?),
            Carrier::Ratio(_) => Image::Nodes(Box::new(Mutex::new(NodeCache::new(op, h)))),
        })
    }

    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Image::Coefficients(c) => Ok(bernstein_sum(c.as_slice(), x)),
            Image::Nodes(m) => m.lock().expect("node cache poisoned").apply(x),
        }
    }
}

/// h + L(h) + L(φ_w), or h + L(φ_w) when the image term is absent.
struct SeriesFunction {
    h: Function01,
    image: Option<Image>,
    w: DVector<f64>,
    carrier: Arc<Carrier>,
    // L(h) + L(φ_w) in one Bernstein form, for coefficient carriers
    poly: Option<BernsteinForm>,
}

impl SeriesFunction {
    fn new(h: Function01, image: Option<Image>, w: DVector<f64>, carrier: Arc<Carrier>) -> Self {
        let poly = match (carrier.as_ref(), &image) {
            (Carrier::Coefficients(_), Some(Image::Coefficients(c))) => Some(BernsteinForm::new((&w + c).as_slice())),
            (Carrier::Coefficients(_), None) => Some(BernsteinForm::new(w.as_slice())),
            _ => None,
        };
        SeriesFunction { h, image, w, carrier, poly }
    }

    fn value(&self, x: f64) -> Result<f64> {
        if let Some(p) = &self.poly {
            return Ok(self.h.eval(x) + p.eval(x));
        }
        let mut v = self.h.eval(x) + self.carrier.apply_state(&self.w, x)?;
        if let Some(im) = &self.image {
            v += im.eval(x)?;
        }
        Ok(v)
    }

    fn ratio(&self, x: f64) -> Result<f64> {
        let mut r = self.h.psi_ratio(x) + self.carrier.ratio_at(&self.w, x)?;
        if let Some(im) = &self.image {
            r += if x <= 0.0 || x >= 1.0 {
                // for exact carriers the image coefficients end in zeros
                match im {
                    Image::Coefficients(c) => self.carrier.ratio_at(c, x)?,
                    Image::Nodes(_) => 0.0,
                }
            } else {
                im.eval(x)? / psi(x)
            };
        }
        Ok(r)
    }
}

/// Carrier, grid and operator for repeated series computations.
pub struct SeriesEngine {
    pub op: OperatorSpec,
    pub carrier: Arc<Carrier>,
    /// Grid restricted to the operator's evaluation window.
    pub grid: EvaluationGrid,
    /// Half-depth ratio carrier; the spread between the two depths is the
    /// reported truncation bound.
    coarse: Option<Arc<Carrier>>,
}

/// State of Σ_{m=1}^{k−1} L^m φ₁ where φ₁ = L(f), so that Σ_{m=0}^{k} L^m f = f + L f + L(φ_w).
fn partial_sum(carrier: &Carrier, f: &Function01, k: u64) -> Result<DVector<f64>> {
    if k < 2 {
        return Ok(DVector::zeros(carrier.len()));
    }
    accumulate(carrier, carrier.image_state(f)?, k)
}

/// Σ_{m=1}^{k−1} s(L^m f) from s1 = s(L f).
fn accumulate(carrier: &Carrier, s1: DVector<f64>, k: u64) -> Result<DVector<f64>> {
    let mut w = DVector::zeros(carrier.len());
    if k >= 2 {
        let mut s = s1;
        w += &s;
        for _ in 1..k - 1 {
            s = carrier.step(&s);
            w += &s;
        }
    }
    Ok(w)
}

fn sup_abs<F: FnMut(f64) -> Result<f64>>(grid: &EvaluationGrid, mut r: F) -> Result<f64> {
    let mut best = 0.0f64;
    for &x in grid.points() {
        let v = r(x)?;
        if !v.is_finite() {
            return Err(Error::PsiRatioOverflow { x });
        }
        best = best.max(v.abs());
    }
    Ok(best)
}

impl SeriesEngine {
    pub fn new(op: &OperatorSpec, grid: &EvaluationGrid) -> Result<Self> {
        let carrier = Carrier::build(op)?;
        let coarse = match &carrier {
            Carrier::Ratio(r) => {
                let half = op.clone().with_closure_depth((r.depth / 2).max(1));
                Some(Arc::new(Carrier::build(&half)?))
            }
            Carrier::Coefficients(_) => None,
        };
        Ok(SeriesEngine { op: op.clone(), carrier: Arc::new(carrier), grid: op.window_grid(grid)?, coarse })
    }

    pub fn b_norm(&self) -> f64 {
        self.carrier.b_norm()
    }

    fn check_input(&self, f: &Function01) -> Result<()> {
        let (f0, f1) = (f.eval(0.0), f.eval(1.0));
        if f0.abs() > ENDPOINT_TOLERANCE || f1.abs() > ENDPOINT_TOLERANCE {
            return Err(Error::NotInCpsi { f0, f1 });
        }
        Ok(())
    }

    fn check_lambda(&self) -> Result<f64> {
        let b = self.b_norm();
        if !self.op.is_lambda() || !(b < 1.0) {
            return Err(Error::DegenerateOperator(format!(
                "{} has ||b_L|| = {b}; the geometric series does not converge in C_psi",
                self.op.label()
            )));
        }
        Ok(b)
    }

    fn finish(
        &self,
        sf: SeriesFunction,
        method: Method,
        k: u64,
        tail: f64,
        fnorm: f64,
        with_residual: bool,
    ) -> Result<GeometricSeriesResult> {
        let h = sf.h.clone();
        let sf = Arc::new(sf);
        let limits = [sf.ratio(0.0)?, sf.ratio(1.0)?];
        let ev = sf.clone();
        let g = Function01::from_fn(format!("G({})", h.name()), move |x| ev.value(x).unwrap_or(f64::NAN))
            .with_hint(h.hint().clone())
            .with_ratio_limits(limits);
        let residual = if with_residual { self.residual_of(&g, &h)? } else { f64::NAN };
        Ok(GeometricSeriesResult {
            g,
            method,
            terms_used: k,
            tail_bound: tail,
            truncation_bound: 0.0,
            residual_psi_norm: residual,
            b_norm: self.b_norm(),
            f_psi_norm: fnorm,
        })
    }

    /// Σ_{k=0}^{K} L^k(f) with K from [`neumann_tail_terms`].
    pub fn neumann(&self, f: &Function01, eps: f64) -> Result<GeometricSeriesResult> {
        self.neumann_sum(f, eps, true)
    }

    fn neumann_sum(&self, f: &Function01, eps: f64, with_residual: bool) -> Result<GeometricSeriesResult> {
        self.check_input(f)?;
        let b = self.check_lambda()?;
        let fnorm = psi_norm(f, &self.grid)?.value;
        let k = neumann_tail_terms(b, fnorm, eps)?;
        let tail = b.powi(k as i32 + 1) / (1.0 - b) * fnorm;
        let (w, image) = match (k, self.carrier.as_ref()) {
            (0, _) => (DVector::zeros(self.carrier.len()), None),
            (_, Carrier::Coefficients(_)) => {
                // one quadrature pass serves both the image and the carrier start
                let c0 = self.carrier.state_of(f)?;
                let w = accumulate(&self.carrier, self.carrier.step(&c0), k)?;
                (w, Some(Image::Coefficients(c0)))
            }
            (_, Carrier::Ratio(_)) => (partial_sum(&self.carrier, f, k)?, Some(Image::new(&self.op, &self.carrier, f)?)),
        };
        let truncation = match (&self.coarse, with_residual && k > 0) {
            (Some(coarse), true) => {
                let wc = partial_sum(coarse, f, k)?;
                sup_abs(&self.grid, |x| Ok(self.carrier.ratio_at(&w, x)? - coarse.ratio_at(&wc, x)?))?
            }
            _ => 0.0,
        };
        let sf = SeriesFunction::new(f.clone(), image, w, self.carrier.clone());
        let mut r = self.finish(sf, Method::Neumann, k, tail, fnorm, with_residual)?;
        r.truncation_bound = truncation;
        Ok(r)
    }

    /// Solves (I − T) y = s(f) on the interior coefficients; G(f) = f + L(φ_y).
    pub fn solve(&self, f: &Function01) -> Result<GeometricSeriesResult> {
        self.check_input(f)?;
        self.check_lambda()?;
        let Carrier::Coefficients(c) = self.carrier.as_ref() else {
            return Err(Error::Unsupported(format!("{} has no exact finite carrier to solve on", self.op.family)));
        };
        let fnorm = psi_norm(f, &self.grid)?.value;
        let s = c.coefficients(f)?;
        let n = s.len() - 1;
        let mut a = DMatrix::<f64>::identity(n - 1, n - 1);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                a[(i, j)] -= c.t[(i + 1, j + 1)];
            }
        }
        let rhs = DVector::from_iterator(n - 1, (1..n).map(|i| s[i]));
        let lu = a.lu();
        let y = lu.solve(&rhs).ok_or_else(|| Error::SingularSystem(format!("I - T is singular for {}", self.op.label())))?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(format!("I - T is numerically singular for {}", self.op.label())));
        }
        let mut w = DVector::zeros(n + 1);
        for i in 1..n {
            w[i] = y[i - 1];
        }
        let sf = SeriesFunction::new(f.clone(), None, w, self.carrier.clone());
        self.finish(sf, Method::Solve, 0, 0.0, fnorm, true)
    }

    /// L(φ) as a pointwise rule.
    pub fn image_of(&self, phi: &Function01) -> Result<impl Fn(f64) -> Result<f64> + Send + Sync> {
        image_of(&self.op, phi)
    }

    /// ‖(I−L)g − h‖_ψ on the grid, applying L to g directly.
    pub fn residual_of(&self, g: &Function01, h: &Function01) -> Result<f64> {
        let lg = self.image_of(g)?;
        sup_abs(&self.grid, |x| Ok((g.eval(x) - lg(x)? - h.eval(x)) / psi(x)))
    }

    /// (‖(I−L)G f − f‖_ψ, ‖G(I−L) f − f‖_ψ).
    pub fn inversion_residuals(&self, f: &Function01, eps: f64) -> Result<(f64, f64)> {
        let first = self.neumann(f, eps)?;
        let h = self.minus_image(f)?;
        let back = self.neumann_sum(&h, eps, false)?;
        let r8 = sup_abs(&self.grid, |x| Ok((back.g.eval(x) - f.eval(x)) / psi(x)))?;
        Ok((first.residual_psi_norm, r8))
    }

    /// f − L(f), with its endpoint ratio limits attached.
    pub fn minus_image(&self, f: &Function01) -> Result<Function01> {
        let lim = self.op.image_ratio_limits(f)?;
        let ulim = [f.ratio_limit(Side::Left), f.ratio_limit(Side::Right)];
        let lf = self.image_of(f)?;
        let fc = f.clone();
        Ok(Function01::from_fn(format!("(I-L){}", f.name()), move |x| fc.eval(x) - lf(x).unwrap_or(f64::NAN))
            .with_hint(f.hint().clone())
            .with_ratio_limits([ulim[0] - lim[0], ulim[1] - lim[1]]))
    }

    /// States of L^m(f − B₁f) for m = 1..=k_max.
    pub fn iterates(&self, f: &Function01, k_max: usize) -> Result<Iterates> {
        let b1 = apply_b1(f);
        let f1 = project_to_cpsi(f);
        let mut states = Vec::with_capacity(k_max);
        if k_max >= 1 {
            let mut s = self.carrier.image_state(&f1)?;
            states.push(s.clone());
            for _ in 1..k_max {
                s = self.carrier.step(&s);
                states.push(s.clone());
            }
        }
        let first = self.image_of(&f1)?;
        Ok(Iterates { b1, f1, states, carrier: self.carrier.clone(), first: Box::new(first) })
    }
}

/// L^k f = B₁f + L^k(f − B₁f), with the C_ψ part carried by states.
pub struct Iterates {
    pub b1: Function01,
    pub f1: Function01,
    /// states[m] = s(L^(m+1) f₁)
    states: Vec<DVector<f64>>,
    carrier: Arc<Carrier>,
    first: Box<dyn Fn(f64) -> Result<f64> + Send + Sync>,
}

impl Iterates {
    pub fn k_max(&self) -> usize {
        self.states.len()
    }

    /// L^k(f₁)(x).
    pub fn cpsi_part(&self, k: usize, x: f64) -> Result<f64> {
        match k {
            0 => Ok(self.f1.eval(x)),
            1 => (self.first)(x),
            _ => {
                let s = self.states.get(k - 2).ok_or_else(|| Error::Parameter(format!("k = {k} beyond the table")))?;
                self.carrier.apply_state(s, x)
            }
        }
    }

    /// L^k(f₁)(x)/ψ(x) for interior x.
    pub fn cpsi_ratio(&self, k: usize, x: f64) -> Result<f64> {
        match k {
            0 | 1 => Ok(self.cpsi_part(k, x)? / psi(x)),
            _ => {
                let s = self.states.get(k - 2).ok_or_else(|| Error::Parameter(format!("k = {k} beyond the table")))?;
                self.carrier.ratio_at(s, x)
            }
        }
    }

    /// L^k(f)(x).
    pub fn value(&self, k: usize, x: f64) -> Result<f64> {
        Ok(self.b1.eval(x) + self.cpsi_part(k, x)?)
    }
}

/// L^k(f)(x).
pub fn iterate_apply(op: &OperatorSpec, k: usize, f: &Function01, x: f64) -> Result<f64> {
    if k == 0 {
        return Ok(f.eval(x));
    }
    if k == 1 {
        return op.apply(f, x);
    }
    let engine = SeriesEngine::new(op, &EvaluationGrid::chebyshev(33)?)?;
    engine.iterates(f, k - 1)?.value(k, x)
}

pub fn geometric_series_neumann(op: &OperatorSpec, f: &Function01, eps: f64) -> Result<GeometricSeriesResult> {
    SeriesEngine::new(op, &EvaluationGrid::default())?.neumann(f, eps)
}

pub fn geometric_series_solve(op: &OperatorSpec, f: &Function01) -> Result<GeometricSeriesResult> {
    SeriesEngine::new(op, &EvaluationGrid::default())?.solve(f)
}

pub fn check_inversion_identities(op: &OperatorSpec, f: &Function01, eps: f64) -> Result<(f64, f64)> {
    SeriesEngine::new(op, &EvaluationGrid::default())?.inversion_residuals(f, eps)
}

/// L(φ) as a pointwise rule, with the per-function work done up front:
/// Bernstein coefficients once, or MKZ node values tabulated on first use.
pub fn image_of(op: &OperatorSpec, phi: &Function01) -> Result<impl Fn(f64) -> Result<f64> + Send + Sync> {
    let im = match op.prepare(phi)? {
        crate::operators::Prepared::Coefficients(c) => Image::Coefficients(DVector::from_vec(c)),
        crate::operators::Prepared::Direct { .. } => Image::Nodes(Box::new(Mutex::new(NodeCache::new(op, phi)))),
    };
    Ok(move |x: f64| im.eval(x))
}

/// L(f)(x) for MKZ families with the omitted weight below 1e-16·ψ(x).
pub fn tight_apply(op: &OperatorSpec, f: &Function01, x: f64) -> Result<f64> {
    let eps = (1e-16 * psi(x)).max(1e-300);
    match op.family {
        Family::Mkz => mkz::mkz_apply_with(op.n, f, x, eps, op.term_cap),
        Family::MkzReflected => mkz::mkz_reflected_apply_with(op.n, f, x, eps, op.term_cap),
        Family::MkzSymmetric => mkz::mkz_symmetric_apply_with(op.n, f, x, eps, op.term_cap),
        _ => op.apply(f, x),
    }
}
