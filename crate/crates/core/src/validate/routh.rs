//! Routh–Hurwitz classification from the characteristic polynomial.
//!
//! K is first split into the irreducible blocks of its sparsity pattern
//! (strongly connected components, which put K in block-triangular form), so
//! an exactly decoupled subsystem gets its own polynomial with exact zero
//! coefficients instead of a product polynomial full of round-off. Each block
//! polynomial comes from the Faddeev–LeVerrier recursion on the block scaled
//! by ‖K‖_max. An all-zero Routh row (roots symmetric about the origin,
//! typically a pair on the imaginary axis) is replaced by the derivative of
//! the auxiliary polynomial and the result is reported as marginal unless a
//! sign change shows a right-half-plane root.

use nalgebra::{DMatrix, Matrix6};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::dynamics::Stability;

#[derive(Debug, Clone, PartialEq)]
pub struct RouthReport {
    /// det(sI − K/‖K‖_max), monic, highest degree first.
    pub coefficients: [f64; 7],
    /// State indices of each irreducible block, in the order analysed.
    pub blocks: Vec<Vec<usize>>,
    /// First column of the Routh array of each block.
    pub first_columns: Vec<Vec<f64>>,
    /// Number of right-half-plane roots.
    pub sign_changes: usize,
    pub class: Stability,
}

/// Relative size below which a difference of two Routh terms is treated as
/// exact cancellation.
const CANCELLATION: f64 = 1e-12;

/// det(sI − A) for a 6×6 matrix, monic, highest degree first.
pub fn characteristic_polynomial(a: &Matrix6<f64>) -> [f64; 7] {
    let c = faddeev_leverrier(&DMatrix::from_column_slice(6, 6, a.as_slice()));
    let mut out = [0.0; 7];
    out.copy_from_slice(&c);
    out
}

fn faddeev_leverrier(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[k - 1];
        c[k] = -(a * &m).trace() / k as f64;
    }
    c
}

/// Strongly connected components of the graph i → j for a_ij ≠ 0.
fn irreducible_blocks(a: &Matrix6<f64>) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..6).map(|_| g.add_node(())).collect();
    for i in 0..6 {
        for j in 0..6 {
            if i != j && a[(i, j)] != 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

struct BlockResult {
    first_column: Vec<f64>,
    sign_changes: usize,
    marginal: bool,
}

fn routh_array(c: &[f64]) -> BlockResult {
    let degree = c.len() - 1;
    let width = degree / 2 + 1;
    let split = |offset: usize| {
        let mut r: Vec<f64> = c.iter().skip(offset).step_by(2).copied().collect();
        r.resize(width + 1, 0.0);
        r
    };
    let mut rows = vec![split(0), split(1)];
    let mut marginal = false;

    for i in 2..=degree {
        let q = rows[i - 2].clone();
        let mut p = rows[i - 1].clone();
        if p.iter().all(|v| *v == 0.0) {
            // Auxiliary polynomial of order degree − (i − 2) from row i − 2.
            marginal = true;
            let order = degree + 2 - i;
            p = (0..=width)
                .map(|j| q[j] * (order as f64 - 2.0 * j as f64))
                .collect();
            rows[i - 1] = p.clone();
        } else if p[0] == 0.0 {
            marginal = true;
            let row_scale = p.iter().chain(&q).fold(0.0_f64, |m, v| m.max(v.abs()));
            p[0] = 1e-10 * row_scale;
            rows[i - 1] = p.clone();
        }
        let mut row = vec![0.0; width + 1];
        for j in 0..width {
            // q_{j+1} − q_0·p_{j+1}/p_0
            let term = q[0] * p[j + 1] / p[0];
            let v = q[j + 1] - term;
            row[j] = if v.abs() <= CANCELLATION * (q[j + 1].abs() + term.abs()) {
                0.0
            } else {
                v
            };
        }
        rows.push(row);
    }

    let first_column: Vec<f64> = rows.iter().take(degree + 1).map(|r| r[0]).collect();
    // A vanishing last entry is a root at s = 0.
    if first_column[degree] == 0.0 {
        marginal = true;
    }
    let sign_changes = first_column
        .iter()
        .filter(|v| **v != 0.0)
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| (*w[0] > 0.0) != (*w[1] > 0.0))
        .count();
    BlockResult {
        first_column,
        sign_changes,
        marginal,
    }
}

pub fn routh_hurwitz(k: &Matrix6<f64>) -> RouthReport {
    let scale = k.amax();
    let scaled = if scale > 0.0 { k / scale } else { *k };
    let coefficients = characteristic_polynomial(&scaled);
    let blocks = irreducible_blocks(&scaled);

    let mut first_columns = Vec::with_capacity(blocks.len());
    let mut sign_changes = 0;
    let mut marginal = false;
    for idx in &blocks {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| scaled[(idx[i], idx[j])]);
        let r = routh_array(&faddeev_leverrier(&sub));
        sign_changes += r.sign_changes;
        marginal |= r.marginal;
        first_columns.push(r.first_column);
    }
    let class = if sign_changes > 0 {
        Stability::Unstable
    } else if marginal {
        Stability::Marginal
    } else {
        Stability::Stable
    };
    RouthReport {
        coefficients,
        blocks,
        first_columns,
        sign_changes,
        class,
    }
}
