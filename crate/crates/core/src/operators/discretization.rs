//! Finite carriers: nodes plus a transfer matrix acting on node data.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::mkz::{node, reflected_node, sweep};
use super::{Family, OperatorSpec};
use crate::error::{Error, Result};
use crate::funcspace::Function01;

/// Largest MKZ node set built before giving up.
pub const MKZ_NODE_CAP: usize = 2048;

/// What the carrier vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarrierState {
    /// Values f(node_j).
    NodeValues,
    /// Bernstein coefficients c_j, with L(f) = Σ c_j p_{n,j}; node_j = j/n
    /// is the Greville abscissa of c_j.
    BernsteinCoefficients,
}

#[derive(Debug, Clone)]
pub struct NodeDiscretization {
    pub nodes: Vec<f64>,
    pub transfer: DMatrix<f64>,
    /// Largest omitted weight over the rows inside the evaluation window.
    pub truncation_error_bound: f64,
    pub state: CarrierState,
    /// MKZ series depth J: nodes k/(n+k) and n/(n+k) for k ≤ J.
    pub depth: Option<u64>,
    /// Omitted weight of every row, lumped onto an endpoint node.
    pub row_tail_mass: Vec<f64>,
    /// Whether each node lies in the operator's evaluation window.
    pub in_window: Vec<bool>,
}

impl NodeDiscretization {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The carrier vector of f before any application: node values, or for
    /// coefficient carriers the node values as Bernstein coefficients.
    pub fn sample(&self, f: &Function01) -> DVector<f64> {
        DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&x| f.eval(x)))
    }

    /// T·v.
    pub fn step(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.transfer * v
    }
}

pub(crate) fn exact(nodes: Vec<f64>, transfer: DMatrix<f64>, state: CarrierState) -> NodeDiscretization {
    let m = nodes.len();
    NodeDiscretization {
        nodes,
        transfer,
        truncation_error_bound: 0.0,
        state,
        depth: None,
        row_tail_mass: vec![0.0; m],
        in_window: vec![true; m],
    }
}

/// Reduced fraction p/q as an ordering key for node deduplication.
fn key(p: u64, q: u64) -> (u64, u64) {
    let g = gcd(p, q);
    (p / g, q / g)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Half weights (Z_n, Z_n¹) of an MKZ family.
pub(crate) fn halves(family: Family) -> (f64, f64) {
    match family {
        Family::Mkz => (1.0, 0.0),
        Family::MkzReflected => (0.0, 1.0),
        _ => (0.5, 0.5),
    }
}

pub(crate) fn mkz_discretization(op: &OperatorSpec) -> Result<NodeDiscretization> {
    let n = op.n;
    let eps = op.truncation_eps.ok_or_else(|| Error::Parameter("mkz families need truncation_eps".into()))?;
    let (lo, hi) = op.evaluation_window();
    let (cz, cr) = halves(op.family);
    // the omitted mass beyond a fixed depth grows towards the far end of each half
    let edge = if cz > 0.0 { hi } else { 1.0 - lo };
    let mut depth = 0;
    sweep(n, edge, 1.0 - edge, eps, op.term_cap, |k, _| depth = depth.max(k))?;

    let nn = n as u64;
    let mut keys: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for k in 0..=depth {
        keys.insert(key(k, nn + k), node(n, k));
        keys.insert(key(nn, nn + k), reflected_node(n, k));
        if keys.len() > MKZ_NODE_CAP {
            return Err(Error::TruncationBudgetExceeded { needed: 2 * depth + 2, cap: MKZ_NODE_CAP as u64 });
        }
    }
    let mut entries: Vec<((u64, u64), f64)> = keys.into_iter().collect();
    entries.sort_by(|a, b| a.1.total_cmp(&b.1));
    let nodes: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let index: BTreeMap<(u64, u64), usize> = entries.iter().enumerate().map(|(i, e)| (e.0, i)).collect();
    let m = nodes.len();
    let last = m - 1;

    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut tails = vec![0.0; m];
    for (i, &x) in nodes.iter().enumerate() {
        let mut tail = 0.0;
        if cz > 0.0 {
            if x >= 1.0 {
                t[(i, last)] += cz;
            } else {
                let mut lumped = 0.0;
                let bound = sweep(n, x, 1.0 - x, 1e-17, op.term_cap, |k, w| {
                    if k <= depth {
                        t[(i, index[&key(k, nn + k)])] += cz * w;
                    } else {
                        lumped += w;
                    }
                })?;
                lumped += bound;
                t[(i, last)] += cz * lumped;
                tail += cz * lumped;
            }
        }
        if cr > 0.0 {
            if x <= 0.0 {
                t[(i, 0)] += cr;
            } else {
                let mut lumped = 0.0;
                let bound = sweep(n, 1.0 - x, x, 1e-17, op.term_cap, |k, w| {
                    if k <= depth {
                        t[(i, index[&key(nn, nn + k)])] += cr * w;
                    } else {
                        lumped += w;
                    }
                })?;
                lumped += bound;
                t[(i, 0)] += cr * lumped;
                tail += cr * lumped;
            }
        }
        tails[i] = tail;
    }
    let in_window: Vec<bool> = nodes.iter().map(|&x| x >= lo && x <= hi).collect();
    let bound = tails.iter().zip(&in_window).filter(|(_, w)| **w).fold(0.0f64, |a, (t, _)| a.max(*t));
    Ok(NodeDiscretization {
        nodes,
        transfer: t,
        truncation_error_bound: bound,
        state: CarrierState::NodeValues,
        depth: Some(depth),
        row_tail_mass: tails,
        in_window,
    })
}
