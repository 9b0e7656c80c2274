//! Bernstein, Durrmeyer and Meyer-König–Zeller operators behind one interface.

pub mod bernstein;
pub mod discretization;
pub mod durrmeyer;
pub mod mkz;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bernstein::{bernstein_apply, bernstein_coefficients, bernstein_transfer};
pub use discretization::{CarrierState, NodeDiscretization, MKZ_NODE_CAP};
pub use durrmeyer::{
    beta_expectation, beta_expectation_quadrature, beta_moments, bernstein_sum, BernsteinForm, durrmeyer_apply,
    durrmeyer_coefficients, durrmeyer_functional, durrmeyer_transfer,
};
pub use mkz::{
    mkz_apply, mkz_reflected_apply, mkz_symmetric_apply, sweep, truncation_index, DEFAULT_TERM_CAP,
};

use crate::error::{Error, Result};
use crate::funcspace::{psi, EvaluationGrid, Function01, Polynomial, Side};
use crate::special::bernstein_basis_all;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Bernstein,
    Durrmeyer,
    Mkz,
    MkzReflected,
    MkzSymmetric,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Bernstein, Family::Durrmeyer, Family::Mkz, Family::MkzReflected, Family::MkzSymmetric];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Bernstein => "bernstein",
            Family::Durrmeyer => "durrmeyer",
            Family::Mkz => "mkz",
            Family::MkzReflected => "mkz-reflected",
            Family::MkzSymmetric => "mkz-symmetric",
        }
    }

    pub fn is_mkz(self) -> bool {
        matches!(self, Family::Mkz | Family::MkzReflected | Family::MkzSymmetric)
    }

    /// Whether the carrier is exact (Bernstein form with finitely many coefficients).
    pub fn has_exact_carrier(self) -> bool {
        matches!(self, Family::Bernstein | Family::Durrmeyer)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.into_iter().find(|f| f.tag() == s).ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// One operator instance: family, order and family parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub family: Family,
    pub n: u32,
    pub rho: Option<f64>,
    pub truncation_eps: Option<f64>,
    pub term_cap: u64,
    /// Depth of the MKZ series carrier; `None` picks a default from n.
    pub closure_depth: Option<u64>,
}

impl OperatorSpec {
    pub fn new(family: Family, n: u32, rho: Option<f64>, truncation_eps: Option<f64>) -> Result<Self> {
        let min_n = match family {
            Family::Bernstein | Family::Mkz | Family::MkzReflected => 1,
            Family::Durrmeyer => 2,
            Family::MkzSymmetric => 3,
        };
        if n < min_n {
            return Err(Error::Parameter(format!("{family} needs n >= {min_n}, got {n}")));
        }
        match (family, rho) {
            (Family::Durrmeyer, None) => return Err(Error::Parameter("durrmeyer needs rho".into())),
            (Family::Durrmeyer, Some(r)) if !(r > 0.0 && r.is_finite()) => {
                return Err(Error::Parameter(format!("rho must be positive, got {r}")))
            }
            (Family::Durrmeyer, _) => {}
            (_, Some(_)) => return Err(Error::Parameter(format!("rho does not apply to {family}"))),
            _ => {}
        }
        match (family.is_mkz(), truncation_eps) {
            (true, None) => return Err(Error::Parameter(format!("{family} needs truncation_eps"))),
            (true, Some(e)) if !(e > 0.0 && e < 1.0) => {
                return Err(Error::Parameter(format!("truncation_eps must lie in (0, 1), got {e}")))
            }
            (false, Some(_)) => return Err(Error::Parameter(format!("truncation_eps does not apply to {family}"))),
            _ => {}
        }
        Ok(OperatorSpec { family, n, rho, truncation_eps, term_cap: DEFAULT_TERM_CAP, closure_depth: None })
    }

    pub fn bernstein(n: u32) -> Result<Self> {
        Self::new(Family::Bernstein, n, None, None)
    }

    pub fn durrmeyer(n: u32, rho: f64) -> Result<Self> {
        Self::new(Family::Durrmeyer, n, Some(rho), None)
    }

    pub fn mkz(n: u32, eps: f64) -> Result<Self> {
        Self::new(Family::Mkz, n, None, Some(eps))
    }

    pub fn mkz_reflected(n: u32, eps: f64) -> Result<Self> {
        Self::new(Family::MkzReflected, n, None, Some(eps))
    }

    pub fn mkz_symmetric(n: u32, eps: f64) -> Result<Self> {
        Self::new(Family::MkzSymmetric, n, None, Some(eps))
    }

    pub fn with_term_cap(mut self, cap: u64) -> Self {
        self.term_cap = cap;
        self
    }

    pub fn with_closure_depth(mut self, depth: u64) -> Self {
        self.closure_depth = Some(depth);
        self
    }

    /// The same family and parameters at another order.
    pub fn with_n(&self, n: u32) -> Result<Self> {
        let mut s = Self::new(self.family, n, self.rho, self.truncation_eps)?;
        s.term_cap = self.term_cap;
        s.closure_depth = self.closure_depth;
        Ok(s)
    }

    fn eps(&self) -> f64 {
        self.truncation_eps.unwrap_or(0.0)
    }

    fn rho(&self) -> f64 {
        self.rho.unwrap_or(1.0)
    }

    /// L(f)(x).
    pub fn apply(&self, f: &Function01, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        let (n, eps, cap) = (self.n, self.eps(), self.term_cap);
        match self.family {
            Family::Bernstein => bernstein_apply(n, f, x),
            Family::Durrmeyer => durrmeyer_apply(n, self.rho(), f, x),
            Family::Mkz => mkz::mkz_apply_with(n, f, x, eps, cap),
            Family::MkzReflected => mkz::mkz_reflected_apply_with(n, f, x, eps, cap),
            Family::MkzSymmetric => mkz::mkz_symmetric_apply_with(n, f, x, eps, cap),
        }
    }

    /// L(f) ready for repeated evaluation; Durrmeyer functionals are computed once.
    pub fn prepare(&self, f: &Function01) -> Result<Prepared> {
        Ok(match self.family {
            Family::Bernstein => Prepared::Coefficients(bernstein_coefficients(self.n, f)),
            Family::Durrmeyer => Prepared::Coefficients(durrmeyer_coefficients(self.n, self.rho(), f)?),
            _ => Prepared::Direct { op: self.clone(), f: f.clone() },
        })
    }

    /// M^k(x) = L((e₁ − x e₀)^k)(x).
    pub fn moment(&self, k: u32, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        let (n, eps, cap) = (self.n, self.eps(), self.term_cap);
        match self.family {
            Family::Bernstein => {
                let p = bernstein_basis_all(n as usize, x);
                Ok(p.iter().enumerate().map(|(j, w)| w * (j as f64 / n as f64 - x).powi(k as i32)).sum())
            }
            Family::Durrmeyer => {
                let q = Polynomial::shifted_power(x, k as usize);
                let f = Function01::polynomial("moment", q);
                durrmeyer_apply(n, self.rho(), &f, x)
            }
            Family::Mkz => mkz::half_moment(n, k, x, eps, cap, false),
            Family::MkzReflected => mkz::half_moment(n, k, x, eps, cap, true),
            Family::MkzSymmetric => {
                let a = mkz::half_moment(n, k, x, 0.5 * eps, cap, false)?;
                let b = mkz::half_moment(n, k, x, 0.5 * eps, cap, true)?;
                Ok(0.5 * (a + b))
            }
        }
    }

    /// α(x) = M²(x)/ψ(x) = 1 − L(ψ)(x)/ψ(x), for x in (0, 1).
    pub fn alpha_at(&self, x: f64) -> Result<f64> {
        match self.family {
            Family::Bernstein => Ok(1.0 / self.n as f64),
            Family::Durrmeyer => {
                let r = self.rho();
                Ok((r + 1.0) / (self.n as f64 * r + 1.0))
            }
            _ => {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::Domain(format!("alpha is evaluated on (0, 1), got x = {x}")));
                }
                Ok(self.moment(2, x)? / psi(x))
            }
        }
    }

    /// Membership in the class Λ (‖L(ψ)‖_ψ < 1).
    pub fn is_lambda(&self) -> bool {
        match self.family {
            Family::Bernstein | Family::Durrmeyer => self.n >= 2,
            Family::MkzSymmetric => true,
            Family::Mkz | Family::MkzReflected => false,
        }
    }

    /// Whether L(ψ)/ψ is constant.
    pub fn is_lambda0(&self) -> bool {
        self.family.has_exact_carrier() && self.is_lambda()
    }

    /// Interval of evaluation points: all of [0, 1] except near the ends where
    /// an MKZ series needs O(1/(1−x)) terms.
    pub fn evaluation_window(&self) -> (f64, f64) {
        let d = 1.0 / (4.0 * self.n as f64);
        match self.family {
            Family::Bernstein | Family::Durrmeyer => (0.0, 1.0),
            Family::Mkz => (0.0, 1.0 - d),
            Family::MkzReflected => (d, 1.0),
            Family::MkzSymmetric => (d, 1.0 - d),
        }
    }

    /// The grid restricted to the evaluation window.
    pub fn window_grid(&self, grid: &EvaluationGrid) -> Result<EvaluationGrid> {
        let (lo, hi) = self.evaluation_window();
        if lo <= 0.0 && hi >= 1.0 {
            return Ok(grid.clone());
        }
        grid.restrict(lo, hi)
    }

    /// lim L(h)/ψ at 0 and 1 for h in C_ψ. These are exact finite sums: near an
    /// endpoint only the first interior node carries weight of order ψ.
    pub fn image_ratio_limits(&self, h: &Function01) -> Result<[f64; 2]> {
        let n = self.n as f64;
        match self.family {
            Family::Bernstein => Ok([n * h.eval(1.0 / n), n * h.eval(1.0 - 1.0 / n)]),
            Family::Durrmeyer => {
                let r = self.rho();
                Ok([
                    n * durrmeyer_functional(self.n, 1, r, h)?,
                    n * durrmeyer_functional(self.n, self.n - 1, r, h)?,
                ])
            }
            _ => {
                let (cz, cr) = discretization::halves(self.family);
                let m = n + 1.0;
                let z = [m * h.eval(1.0 / m), h.ratio_limit(Side::Right)];
                let r = [h.ratio_limit(Side::Left), m * h.eval(n / m)];
                Ok([cz * z[0] + cr * r[0], cz * z[1] + cr * r[1]])
            }
        }
    }

    pub fn node_discretization(&self) -> Result<NodeDiscretization> {
        let n = self.n;
        let nodes: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        match self.family {
            Family::Bernstein => Ok(discretization::exact(nodes, bernstein_transfer(n)?, CarrierState::NodeValues)),
            Family::Durrmeyer => Ok(discretization::exact(
                nodes,
                durrmeyer_transfer(n, self.rho())?,
                CarrierState::BernsteinCoefficients,
            )),
            _ => discretization::mkz_discretization(self),
        }
    }

    pub fn alpha_profile(&self, grid: &EvaluationGrid) -> Result<AlphaProfile> {
        AlphaProfile::new(self, grid)
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::Durrmeyer => format!("durrmeyer(n={}, rho={})", self.n, self.rho()),
            f if f.is_mkz() => format!("{f}(n={}, eps={:e})", self.n, self.eps()),
            f => format!("{f}(n={})", self.n),
        }
    }
}

/// L(f) with its per-function work done.
#[derive(Debug, Clone)]
pub enum Prepared {
    Coefficients(Vec<f64>),
    Direct { op: OperatorSpec, f: Function01 },
}

impl Prepared {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Prepared::Coefficients(c) => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
                }
                Ok(bernstein_sum(c, x))
            }
            Prepared::Direct { op, f } => op.apply(f, x),
        }
    }
}

/// α = 1 − L(ψ)/ψ on a grid, with ν = min α, η = (max α − min α)/ν and
/// ‖b_L‖ = 1 − ν.
#[derive(Debug, Clone)]
pub struct AlphaProfile {
    pub op: OperatorSpec,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub nu: f64,
    pub eta: f64,
    pub b_norm: f64,
}

impl AlphaProfile {
    pub fn new(op: &OperatorSpec, grid: &EvaluationGrid) -> Result<Self> {
        let points: Vec<f64> = op.window_grid(grid)?.points().to_vec();
        let values = points.iter().map(|&x| op.alpha_at(x)).collect::<Result<Vec<f64>>>()?;
        let nu = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(nu > 0.0) {
            return Err(Error::DegenerateOperator(format!("{}: min alpha = {nu} on the grid", op.label())));
        }
        let eta = if op.is_lambda0() { 0.0 } else { (max - nu) / nu };
        Ok(AlphaProfile { op: op.clone(), points, values, nu, eta, b_norm: 1.0 - nu })
    }

    /// α at any interior point.
    pub fn alpha(&self, x: f64) -> Result<f64> {
        self.op.alpha_at(x)
    }
}

/// One row of the condition table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub n: u32,
    pub sup_m4_over_m2: f64,
    pub eta: f64,
    pub cond55: f64,
}

/// Grid suprema of M⁴/M², η_n and L(ψ|α − α(x)|)(x)/(ν²ψ(x)) for each n.
pub fn condition_report(template: &OperatorSpec, n_list: &[u32], grid: &EvaluationGrid) -> Result<Vec<ConditionRow>> {
    n_list.iter().map(|&n| condition_row(&template.with_n(n)?, grid)).collect()
}

pub fn condition_row(op: &OperatorSpec, grid: &EvaluationGrid) -> Result<ConditionRow> {
    if !op.is_lambda() {
        return Err(Error::DegenerateOperator(format!("{} is not in the class Lambda", op.label())));
    }
    let g = op.window_grid(grid)?;
    let mut ratio = 0.0f64;
    for &x in g.points() {
        ratio = ratio.max(op.moment(4, x)? / op.moment(2, x)?);
    }
    let prof = AlphaProfile::new(op, grid)?;
    let cond55 = if op.is_lambda0() { 0.0 } else { cond55_sup(op, &g, prof.nu)? };
    Ok(ConditionRow { n: op.n, sup_m4_over_m2: ratio, eta: prof.eta, cond55 })
}

/// For Z_n*: α is symmetric about ½, so α(n/(n+k)) = α(k/(n+k)) and one
/// cache indexed by k serves both halves.
fn cond55_sup(op: &OperatorSpec, grid: &EvaluationGrid, nu: f64) -> Result<f64> {
    let n = op.n;
    let (cz, cr) = discretization::halves(op.family);
    let eps = 1e-15;
    let mut cache: Vec<f64> = Vec::new();
    let mut alpha_k = |k: u64| -> Result<f64> {
        while cache.len() as u64 <= k {
            let j = cache.len() as u64;
            let y = mkz::node(n, j);
            let v = if j == 0 { 0.0 } else { op.alpha_at(y)? };
            cache.push(v);
        }
        Ok(cache[k as usize])
    };
    let mut best = 0.0f64;
    for &x in grid.points() {
        let ax = op.alpha_at(x)?;
        let mut s = 0.0;
        let mut err = None;
        if cz > 0.0 {
            let mut acc = 0.0;
            let mut keys = Vec::new();
            sweep(n, x, 1.0 - x, eps, op.term_cap, |k, w| keys.push((k, w)))?;
            for (k, w) in keys {
                let y = mkz::node(n, k);
                match alpha_k(k) {
                    Ok(a) => acc += w * psi(y) * (a - ax).abs(),
                    Err(e) => err = Some(e),
                }
            }
            s += cz * acc;
        }
        if cr > 0.0 {
            let mut acc = 0.0;
            let mut keys = Vec::new();
            sweep(n, 1.0 - x, x, eps, op.term_cap, |k, w| keys.push((k, w)))?;
            for (k, w) in keys {
                let y = mkz::reflected_node(n, k);
                match alpha_k(k) {
                    Ok(a) => acc += w * psi(y) * (a - ax).abs(),
                    Err(e) => err = Some(e),
                }
            }
            s += cr * acc;
        }
        if let Some(e) = err {
            return Err(e);
        }
        best = best.max(s / (nu * nu * psi(x)));
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
    fn family_tags_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.tag().parse::<Family>().unwrap(), f);
        }
        assert!(matches!("szasz".parse::<Family>(), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(OperatorSpec::durrmeyer(4, 0.0).is_err());
        assert!(OperatorSpec::new(Family::Durrmeyer, 4, None, None).is_err());
        assert!(OperatorSpec::new(Family::Mkz, 4, None, None).is_err());
        assert!(OperatorSpec::mkz_symmetric(2, 1e-8).is_err());
        assert!(OperatorSpec::bernstein(0).is_err());
        assert!(OperatorSpec::new(Family::Bernstein, 4, Some(1.0), None).is_err());
    }

    #[test]
    fn moment_examples() {
        let b = OperatorSpec::bernstein(7).unwrap();
        let d = OperatorSpec::durrmeyer(6, 0.5).unwrap();
        for x in [0.1, 0.5, 0.77] {
            assert!((b.moment(2, x).unwrap() - psi(x) / 7.0).abs() < 1e-15);
            assert!((d.moment(2, x).unwrap() - 1.5 * psi(x) / 4.0).abs() < 1e-15);
            assert!(b.moment(1, x).unwrap().abs() < 1e-15);
            assert!(d.moment(1, x).unwrap().abs() < 1e-15);
            assert!((b.moment(0, x).unwrap() - 1.0).abs() < 1e-15);
        }
        let z = OperatorSpec::mkz_symmetric(5, 1e-12).unwrap();
        assert!(z.moment(1, 0.4).unwrap().abs() < 1e-11);
    }

    #[test]
    fn alpha_profiles() {
        let g = EvaluationGrid::chebyshev(101).unwrap();
        let p = OperatorSpec::bernstein(8).unwrap().alpha_profile(&g).unwrap();
        assert_eq!(p.nu, 0.125);
        assert_eq!(p.eta, 0.0);
        assert_eq!(p.b_norm, 0.875);
        let n = 6u32;
        let z = OperatorSpec::mkz_symmetric(n, 1e-12).unwrap().alpha_profile(&g).unwrap();
        let nf = n as f64;
        let lo = 1.0 / (2.0 * (nf + 1.0));
        for (&x, &a) in z.points.iter().zip(&z.values) {
            let main = 1.0 / (2.0 * nf) - (1.0 - 2.0 * x).powi(2) / (2.0 * nf * (nf - 1.0));
            assert!(a >= lo && (a - main).abs() <= 6.0 / (nf * (nf * nf - 1.0)));
        }
        assert!(z.eta > 0.0);
        let plain = OperatorSpec::mkz(4, 1e-10).unwrap();
        assert!(!plain.is_lambda());
    }

    #[test]
    fn image_limits_match_the_ratio_near_the_ends() {
        let h = crate::funcspace::project_to_cpsi(&reg("exp"));
        for op in [
            OperatorSpec::bernstein(5).unwrap(),
            OperatorSpec::durrmeyer(5, 0.7).unwrap(),
            OperatorSpec::mkz_symmetric(5, 1e-14).unwrap(),
        ] {
            let lim = op.image_ratio_limits(&h).unwrap();
            // ratio at d and 2d, extrapolated linearly to the endpoint
            let r = |x: f64| op.apply(&h, x).unwrap() / psi(x);
            let d = 1e-4;
            assert!((2.0 * r(d) - r(2.0 * d) - lim[0]).abs() < 1e-6, "{}", op.label());
            assert!((2.0 * r(1.0 - d) - r(1.0 - 2.0 * d) - lim[1]).abs() < 1e-6, "{}", op.label());
        }
    }

    #[test]
    fn discretizations() {
        let d = OperatorSpec::bernstein(2).unwrap().node_discretization().unwrap();
        assert_eq!(d.nodes, vec![0.0, 0.5, 1.0]);
        let z = OperatorSpec::mkz(3, 1e-8).unwrap().node_discretization().unwrap();
        assert!(z.truncation_error_bound <= 1e-8);
        assert_eq!(z.nodes[0], 0.0);
        assert_eq!(*z.nodes.last().unwrap(), 1.0);
        assert!(z.nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..z.len() {
            let s: f64 = z.transfer.row(i).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
            assert!(z.transfer.row(i).iter().all(|&v| v >= 0.0));
            if z.in_window[i] {
                assert!(z.row_tail_mass[i] <= 1e-8);
            }
        }
    }

    #[test]
    fn condition_rows() {
        let g = EvaluationGrid::chebyshev(201).unwrap();
        let rows = condition_report(&OperatorSpec::bernstein(2).unwrap(), &[2, 4, 8], &g).unwrap();
        for r in &rows {
            let n = r.n as f64;
            assert!(r.sup_m4_over_m2 <= 0.75 / n - 0.5 / (n * n) + 1e-12);
            assert_eq!(r.eta, 0.0);
            assert_eq!(r.cond55, 0.0);
        }
        let z = condition_report(&OperatorSpec::mkz_symmetric(4, 1e-10).unwrap(), &[4, 8], &g).unwrap();
        assert!(z[1].cond55 < z[0].cond55 && z[1].cond55 > 0.0);
        assert!(z[1].eta < z[0].eta);
    }
}
