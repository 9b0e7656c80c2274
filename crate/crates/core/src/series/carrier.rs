//! Finite state spaces carrying L and its powers.
//!
//! A state s(φ) is whatever determines L(φ): Bernstein coefficients for the
//! Bernstein and Durrmeyer operators, and for the MKZ families the ratios φ/ψ
//! at the series nodes together with the two endpoint limits of φ/ψ.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcspace::{psi, Function01, Side};
use crate::operators::discretization::halves;
use crate::operators::mkz::{node, reflected_node};
use crate::operators::{
    bernstein_coefficients, bernstein_sum, bernstein_transfer, durrmeyer_coefficients, durrmeyer_transfer, sweep,
    Family, OperatorSpec,
};

/// Nodes per unit of n kept by the MKZ carrier unless set on the spec.
pub const DEFAULT_CLOSURE_FACTOR: u64 = 64;

#[derive(Debug, Clone)]
pub enum Carrier {
    Coefficients(CoefficientCarrier),
    Ratio(RatioCarrier),
}

impl Carrier {
    pub fn build(op: &OperatorSpec) -> Result<Carrier> {
        match op.family {
            Family::Bernstein | Family::Durrmeyer => Ok(Carrier::Coefficients(CoefficientCarrier::new(op)?)),
            _ => Ok(Carrier::Ratio(RatioCarrier::new(op)?)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Carrier::Coefficients(c) => c.t.nrows(),
            Carrier::Ratio(r) => r.positions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest row sum, the carrier's ‖b_L‖.
    pub fn b_norm(&self) -> f64 {
        match self {
            Carrier::Coefficients(c) => c.b_norm,
            Carrier::Ratio(r) => r.b_norm,
        }
    }

    /// s(φ).
    pub fn state_of(&self, f: &Function01) -> Result<DVector<f64>> {
        match self {
            Carrier::Coefficients(c) => c.coefficients(f),
            Carrier::Ratio(r) => Ok(r.state_of(f)),
        }
    }

    /// s(L φ), computed from φ directly rather than by a carrier step.
    pub fn image_state(&self, f: &Function01) -> Result<DVector<f64>> {
        match self {
            Carrier::Coefficients(c) => Ok(&c.t * c.coefficients(f)?),
            Carrier::Ratio(r) => r.image_state(f),
        }
    }

    /// s(φ) ↦ s(L φ).
    pub fn step(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Carrier::Coefficients(c) => &c.t * v,
            Carrier::Ratio(r) => r.step(v),
        }
    }

    /// L(φ)(x)/ψ(x) for the φ with state v; the endpoint limits at x = 0, 1.
    pub fn ratio_at(&self, v: &DVector<f64>, x: f64) -> Result<f64> {
        match self {
            Carrier::Coefficients(c) => Ok(c.ratio_at(v, x)),
            Carrier::Ratio(r) => r.ratio_at(v, x),
        }
    }

    /// L(φ)(x) for the φ with state v.
    pub fn apply_state(&self, v: &DVector<f64>, x: f64) -> Result<f64> {
        match self {
            Carrier::Coefficients(_) => Ok(bernstein_sum(v.as_slice(), x)),
            Carrier::Ratio(r) => {
                if x <= 0.0 || x >= 1.0 {
                    return Ok(0.0);
                }
                Ok(psi(x) * r.ratio_at(v, x)?)
            }
        }
    }
}

/// Bernstein-form operators L(f) = Σ c_j(f) p_{n,j}: the state is c and
/// T[k][j] = c_k(p_{n,j}).
#[derive(Debug, Clone)]
pub struct CoefficientCarrier {
    pub op: OperatorSpec,
    pub t: DMatrix<f64>,
    pub b_norm: f64,
}

impl CoefficientCarrier {
    pub fn new(op: &OperatorSpec) -> Result<Self> {
        let t = match op.family {
            Family::Bernstein => bernstein_transfer(op.n)?,
            Family::Durrmeyer => durrmeyer_transfer(op.n, op.rho.unwrap_or(1.0))?,
            f => return Err(Error::Unsupported(format!("{f} has no finite coefficient carrier"))),
        };
        Ok(CoefficientCarrier { op: op.clone(), t, b_norm: 1.0 - op.alpha_at(0.5)? })
    }

    pub fn coefficients(&self, f: &Function01) -> Result<DVector<f64>> {
        let c = match self.op.family {
            Family::Bernstein => bernstein_coefficients(self.op.n, f),
            _ => durrmeyer_coefficients(self.op.n, self.op.rho.unwrap_or(1.0), f)?,
        };
        Ok(DVector::from_vec(c))
    }

    fn ratio_at(&self, v: &DVector<f64>, x: f64) -> f64 {
        let n = self.op.n as f64;
        let m = v.len() - 1;
        // Σ c_j p_{n,j}/ψ → n c_1 at 0 when c_0 = 0
        if x <= 0.0 {
            return if v[0] == 0.0 { n * v[1] } else { f64::INFINITY.copysign(v[0]) };
        }
        if x >= 1.0 {
            return if v[m] == 0.0 { n * v[m - 1] } else { f64::INFINITY.copysign(v[m]) };
        }
        bernstein_sum(v.as_slice(), x) / psi(x)
    }
}

/// Sparse row entries and the closure mass of one node.
type RatioRow = (Vec<(u32, f64)>, f64);

/// Ratio carrier for the MKZ families.
///
/// States are u = φ/ψ at the nodes k/(n+k) and n/(n+k), 1 ≤ k ≤ J, plus the
/// limits u(0), u(1). A row at x holds the weights c·w_k(x)ψ(y_k)/ψ(x); series
/// nodes beyond depth J lie between the deepest kept node and the endpoint,
/// and their ratio is interpolated linearly between those two states. The
/// interpolation reproduces constants, so row sums are b_L(x) exactly.
#[derive(Debug, Clone)]
pub struct RatioCarrier {
    pub op: OperatorSpec,
    pub depth: u64,
    /// State positions, ascending; the first and last are the limit states.
    pub positions: Vec<f64>,
    zidx: Vec<usize>,
    ridx: Vec<usize>,
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    pub b_norm: f64,
    /// Largest weight share handed to the interpolated closure by any row.
    pub closure_mass: f64,
}

/// Weight below which a sweep may stop, relative to ψ(x).
const ROW_EPS: f64 = 1e-17;

fn key(p: u64, q: u64) -> (u64, u64) {
    let (mut a, mut b) = (p, q);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    (p / a, q / a)
}

impl RatioCarrier {
    pub fn new(op: &OperatorSpec) -> Result<Self> {
        if !op.family.is_mkz() {
            return Err(Error::Unsupported(format!("{} uses the coefficient carrier", op.family)));
        }
        let n = op.n;
        let nn = n as u64;
        let depth = op.closure_depth.unwrap_or(DEFAULT_CLOSURE_FACTOR * nn).max(1);
        let (cz, cr) = halves(op.family);

        let mut keyed: HashMap<(u64, u64), f64> = HashMap::new();
        keyed.insert((0, 1), 0.0);
        keyed.insert((1, 1), 1.0);
        for k in 1..=depth {
            if cz > 0.0 {
                keyed.insert(key(k, nn + k), node(n, k));
            }
            if cr > 0.0 {
                keyed.insert(key(nn, nn + k), reflected_node(n, k));
            }
        }
        let mut entries: Vec<((u64, u64), f64)> = keyed.into_iter().collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1));
        let index: HashMap<(u64, u64), usize> = entries.iter().enumerate().map(|(i, e)| (e.0, i)).collect();
        let positions: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let mut zidx = vec![0; depth as usize + 1];
        let mut ridx = vec![0; depth as usize + 1];
        for k in 1..=depth {
            if cz > 0.0 {
                zidx[k as usize] = index[&key(k, nn + k)];
            }
            if cr > 0.0 {
                ridx[k as usize] = index[&key(nn, nn + k)];
            }
        }
        let mut c = RatioCarrier {
            op: op.clone(),
            depth,
            positions,
            zidx,
            ridx,
            indptr: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
            b_norm: 0.0,
            closure_mass: 0.0,
        };
        let m = c.positions.len();
        let rows: Vec<Result<RatioRow>> = (0..m).into_par_iter().map(|i| c.row(i)).collect();
        let mut indptr = Vec::with_capacity(m + 1);
        indptr.push(0);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        let (mut b_norm, mut closure) = (0.0f64, 0.0f64);
        for r in rows {
            let (entries, cm) = r?;
            b_norm = b_norm.max(entries.iter().map(|e| e.1).sum());
            closure = closure.max(cm);
            for (j, v) in entries {
                cols.push(j);
                vals.push(v);
            }
            indptr.push(cols.len());
        }
        c.indptr = indptr;
        c.cols = cols;
        c.vals = vals;
        c.b_norm = b_norm;
        c.closure_mass = closure;
        Ok(c)
    }

    fn last(&self) -> usize {
        self.positions.len() - 1
    }

    /// The row of state i, and its closure share.
    fn row(&self, i: usize) -> Result<(Vec<(u32, f64)>, f64)> {
        let n = self.op.n as f64;
        let (cz, cr) = halves(self.op.family);
        let last = self.last();
        if i == 0 || i == last {
            // only the first interior node carries weight of order ψ near an end
            let f = n / (n + 1.0);
            let mut e = Vec::new();
            if i == 0 {
                if cz > 0.0 {
                    e.push((self.zidx[1] as u32, cz * f));
                }
                if cr > 0.0 {
                    e.push((0, cr));
                }
            } else {
                if cz > 0.0 {
                    e.push((last as u32, cz));
                }
                if cr > 0.0 {
                    e.push((self.ridx[1] as u32, cr * f));
                }
            }
            return Ok((merge(e), 0.0));
        }
        let mut acc: Vec<(u32, f64)> = Vec::new();
        let closure = self.accumulate(self.positions[i], &mut acc)?;
        Ok((merge(acc), closure))
    }

    /// Pushes the (state, weight) pairs of the row at interior x; returns the
    /// weight share that went through the closure.
    fn accumulate(&self, x: f64, out: &mut Vec<(u32, f64)>) -> Result<f64> {
        let n = self.op.n;
        let (cz, cr) = halves(self.op.family);
        let px = psi(x);
        let j = self.depth;
        let last = self.last() as u32;
        let mut closure = 0.0;
        if cz > 0.0 {
            let yj = node(n, j);
            let (mut to_j, mut to_end) = (0.0, 0.0);
            sweep(n, x, 1.0 - x, ROW_EPS * px, self.op.term_cap, |k, w| {
                if k == 0 {
                    return;
                }
                let y = node(n, k);
                let c = cz * w * psi(y) / px;
                if k <= j {
                    out.push((self.zidx[k as usize] as u32, c));
                } else {
                    let th = (y - yj) / (1.0 - yj);
                    to_j += c * (1.0 - th);
                    to_end += c * th;
                }
            })?;
            out.push((self.zidx[j as usize] as u32, to_j));
            out.push((last, to_end));
            closure += to_j + to_end;
        }
        if cr > 0.0 {
            let yj = reflected_node(n, j);
            let (mut to_j, mut to_end) = (0.0, 0.0);
            sweep(n, 1.0 - x, x, ROW_EPS * px, self.op.term_cap, |k, w| {
                if k == 0 {
                    return;
                }
                let y = reflected_node(n, k);
                let c = cr * w * psi(y) / px;
                if k <= j {
                    out.push((self.ridx[k as usize] as u32, c));
                } else {
                    let th = y / yj;
                    to_j += c * th;
                    to_end += c * (1.0 - th);
                }
            })?;
            out.push((self.ridx[j as usize] as u32, to_j));
            out.push((0, to_end));
            closure += to_j + to_end;
        }
        Ok(closure)
    }

    pub fn step(&self, v: &DVector<f64>) -> DVector<f64> {
        let m = self.positions.len();
        let out: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let (a, b) = (self.indptr[i], self.indptr[i + 1]);
                self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&j, &w)| w * v[j as usize]).sum()
            })
            .collect();
        DVector::from_vec(out)
    }

    pub fn ratio_at(&self, v: &DVector<f64>, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(self.row_dot(0, v));
        }
        if x >= 1.0 {
            return Ok(self.row_dot(self.last(), v));
        }
        let mut acc = Vec::new();
        self.accumulate(x, &mut acc)?;
        Ok(acc.iter().map(|&(j, w)| w * v[j as usize]).sum())
    }

    /// Closure share of the row at an arbitrary interior x.
    pub fn closure_share(&self, x: f64) -> Result<f64> {
        let mut acc = Vec::new();
        self.accumulate(x, &mut acc)
    }

    fn row_dot(&self, i: usize, v: &DVector<f64>) -> f64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&j, &w)| w * v[j as usize]).sum()
    }

    /// Row sum of state i.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.vals[self.indptr[i]..self.indptr[i + 1]].iter().sum()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn state_of(&self, f: &Function01) -> DVector<f64> {
        let last = self.last();
        DVector::from_iterator(
            self.positions.len(),
            self.positions.iter().enumerate().map(|(i, &y)| {
                if i == 0 {
                    f.ratio_limit(Side::Left)
                } else if i == last {
                    f.ratio_limit(Side::Right)
                } else {
                    f.eval(y) / psi(y)
                }
            }),
        )
    }

    pub fn image_state(&self, f: &Function01) -> Result<DVector<f64>> {
        let lim = self.op.image_ratio_limits(f)?;
        let mut cache = NodeCache::new(&self.op, f);
        let last = self.last();
        let mut s = DVector::zeros(self.positions.len());
        for (i, &y) in self.positions.iter().enumerate() {
            s[i] = if i == 0 {
                lim[0]
            } else if i == last {
                lim[1]
            } else {
                cache.apply(y)? / psi(y)
            };
        }
        Ok(s)
    }
}

fn merge(mut e: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    e.sort_by_key(|p| p.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(e.len());
    for (j, v) in e {
        match out.last_mut() {
            Some(l) if l.0 == j => l.1 += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|p| p.1 != 0.0);
    out
}

/// L(φ) for an MKZ family with φ tabulated lazily at the series nodes, so that
/// expensive φ are evaluated once per node however many points are swept.
pub struct NodeCache {
    op: OperatorSpec,
    f: Function01,
    z: Vec<f64>,
    r: Vec<f64>,
}

impl NodeCache {
    pub fn new(op: &OperatorSpec, f: &Function01) -> Self {
        NodeCache { op: op.clone(), f: f.clone(), z: Vec::new(), r: Vec::new() }
    }

    fn at(table: &mut Vec<f64>, f: &Function01, k: u64, pos: impl Fn(u64) -> f64) -> f64 {
        while table.len() as u64 <= k {
            let j = table.len() as u64;
            table.push(f.eval(pos(j)));
        }
        table[k as usize]
    }

    /// L(φ)(x), with omitted weight below 1e-17·ψ(x).
    pub fn apply(&mut self, x: f64) -> Result<f64> {
        let n = self.op.n;
        let (cz, cr) = halves(self.op.family);
        let eps = (ROW_EPS * psi(x)).max(1e-300);
        let mut s = 0.0;
        if cz > 0.0 {
            if x >= 1.0 {
                s += cz * self.f.eval(1.0);
            } else {
                let mut ks = Vec::new();
                sweep(n, x, 1.0 - x, eps, self.op.term_cap, |k, w| ks.push((k, w)))?;
                for (k, w) in ks {
                    s += cz * w * Self::at(&mut self.z, &self.f, k, |j| node(n, j));
                }
            }
        }
        if cr > 0.0 {
            if x <= 0.0 {
                s += cr * self.f.eval(0.0);
            } else {
                let mut ks = Vec::new();
                sweep(n, 1.0 - x, x, eps, self.op.term_cap, |k, w| ks.push((k, w)))?;
                for (k, w) in ks {
                    s += cr * w * Self::at(&mut self.r, &self.f, k, |j| reflected_node(n, j));
                }
            }
        }
        Ok(s)
    }
}
