use nalgebra::{DMatrix, DVector};

use super::{check_len, CountResult, CountingOracle};
use crate::error::{Error, Result};
use crate::family::UndirectedGraph;

/// Weighted spanning-tree sums by the matrix-tree theorem.
#[derive(Debug, Clone)]
pub struct SpanningTreeOracle {
    graph: UndirectedGraph,
}

impl SpanningTreeOracle {
    pub fn new(graph: UndirectedGraph) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(Self { graph })
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }
}

impl CountingOracle for SpanningTreeOracle {
    fn m(&self) -> usize {
        self.graph.edges.len()
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        count_spanning_trees(&self.graph, lambda)
    }
}

/// `ln Z` is the log-determinant of the reduced Laplacian with conductances
/// `e^{−λ_e}`; `ln Z_e = −λ_e + ln Z(G/e)` by contracting `e`.
pub fn count_spanning_trees(graph: &UndirectedGraph, lambda: &DVector<f64>) -> Result<CountResult> {
    check_len(graph.edges.len(), lambda)?;
    let log_w: Vec<f64> = lambda.iter().map(|l| -l).collect();
    let log_z = log_tree_sum(graph.vertices, &graph.edges, &log_w)?;
    let mut log_z_e = DVector::from_element(graph.edges.len(), f64::NEG_INFINITY);
    for (idx, &(u, v)) in graph.edges.iter().enumerate() {
        if u == v {
            continue;
        }
        let (n, edges) = contract(graph.vertices, &graph.edges, u, v);
        log_z_e[idx] = log_w[idx] + log_tree_sum(n, &edges, &log_w)?;
    }
    Ok(CountResult { log_z, log_z_e })
}

/// Merges `v` into `u` and relabels to `0..n−1`. Edge indices are kept; edges
/// that become loops stay as loops and are ignored by the Laplacian.
pub(crate) fn contract(n: usize, edges: &[(usize, usize)], u: usize, v: usize) -> (usize, Vec<(usize, usize)>) {
    let relabel = |x: usize| {
        let x = if x == v { u } else { x };
        if x > v {
            x - 1
        } else {
            x
        }
    };
    (n - 1, edges.iter().map(|&(a, b)| (relabel(a), relabel(b))).collect())
}

/// `ln Σ_T Π_{e∈T} w_e` over spanning trees, with `ln w_e = log_w[e]`.
/// Loops are skipped. Gaussian elimination on the reduced Laplacian in the
/// subtraction-free form: each pivot is the grounded conductance plus the
/// remaining off-diagonal conductances, and Schur complements only add.
pub(crate) fn log_tree_sum(n: usize, edges: &[(usize, usize)], log_w: &[f64]) -> Result<f64> {
    if n <= 1 {
        return Ok(0.0);
    }
    let shift = edges
        .iter()
        .zip(log_w)
        .filter(|((a, b), _)| a != b)
        .map(|(_, &l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::Disconnected);
    }
    // Vertex n−1 is grounded.
    let k = n - 1;
    let mut c = DMatrix::<f64>::zeros(k, k);
    let mut ground = vec![0.0; k];
    for (&(a, b), &l) in edges.iter().zip(log_w) {
        if a == b {
            continue;
        }
        let w = (l - shift).exp();
        match (a == k, b == k) {
            (true, false) => ground[b] += w,
            (false, true) => ground[a] += w,
            _ => {
                c[(a, b)] += w;
                c[(b, a)] += w;
            }
        }
    }
    let mut log_det = 0.0;
    for p in 0..k {
        let pivot = ground[p] + (p + 1..k).map(|j| c[(p, j)]).sum::<f64>();
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(if pivot == 0.0 {
                Error::Disconnected
            } else {
                Error::NumericalFailure(format!("non-positive Laplacian pivot {pivot:e}"))
            });
        }
        log_det += pivot.ln();
        for j in p + 1..k {
            let cj = c[(j, p)];
            if cj == 0.0 {
                continue;
            }
            ground[j] += cj * ground[p] / pivot;
            for l in p + 1..k {
                if l != j {
                    c[(j, l)] += cj * c[(p, l)] / pivot;
                }
            }
        }
    }
    Ok(log_det + k as f64 * shift)
}
