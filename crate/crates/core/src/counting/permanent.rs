use nalgebra::{DMatrix, DVector};

use super::{check_len, CountResult, CountingOracle};
use crate::error::{Error, Result};
use crate::family::{BipartiteGraph, DirectedGraph};

/// Largest matrix handled by the Ryser oracle.
pub const MAX_PERMANENT_SIZE: usize = 20;

const SINKHORN_ROUNDS: usize = 100;

/// Weighted perfect-matching sums via Ryser's formula.
#[derive(Debug, Clone)]
pub struct PerfectMatchingOracle {
    graph: BipartiteGraph,
    support: Vec<bool>,
}

impl PerfectMatchingOracle {
    pub fn new(graph: BipartiteGraph) -> Result<Self> {
        check_shape(&graph)?;
        let support = matchable_edges(&graph)?;
        Ok(Self { graph, support })
    }
}

impl CountingOracle for PerfectMatchingOracle {
    fn m(&self) -> usize {
        self.graph.edges.len()
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        check_len(self.graph.edges.len(), lambda)?;
        count_on_support(&self.graph, &self.support, lambda)
    }
}

/// Cycle covers of a digraph, counted as perfect matchings of its bipartite
/// double cover.
#[derive(Debug, Clone)]
pub struct CycleCoverOracle {
    cover: BipartiteGraph,
    support: Vec<bool>,
}

impl CycleCoverOracle {
    pub fn new(graph: DirectedGraph) -> Result<Self> {
        let cover = graph.double_cover();
        check_shape(&cover)?;
        let support = matchable_edges(&cover)?;
        Ok(Self { cover, support })
    }
}

impl CountingOracle for CycleCoverOracle {
    fn m(&self) -> usize {
        self.cover.edges.len()
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        check_len(self.cover.edges.len(), lambda)?;
        count_on_support(&self.cover, &self.support, lambda)
    }
}

fn check_shape(g: &BipartiteGraph) -> Result<()> {
    if g.left != g.right {
        return Err(Error::SideMismatch {
            left: g.left,
            right: g.right,
        });
    }
    if g.left > MAX_PERMANENT_SIZE {
        return Err(Error::SizeExceeded {
            n: g.left,
            max: MAX_PERMANENT_SIZE,
        });
    }
    Ok(())
}

pub fn count_cycle_covers(graph: &DirectedGraph, lambda: &DVector<f64>) -> Result<CountResult> {
    count_bipartite_pm(&graph.double_cover(), lambda)
}

/// `Z` is the permanent of `W_ij = Σ_{e=(i,j)} e^{−λ_e}`; `Z_e = e^{−λ_e}·perm(W
/// minus row i, column j)`. The matrix is first balanced by log-domain
/// Sinkhorn scaling (exact for the permanent up to the recorded factors), so
/// Ryser's alternating sum runs on entries in `[0, 1]`.
pub fn count_bipartite_pm(graph: &BipartiteGraph, lambda: &DVector<f64>) -> Result<CountResult> {
    check_shape(graph)?;
    check_len(graph.edges.len(), lambda)?;
    count_on_support(graph, &matchable_edges(graph)?, lambda)
}

/// Edges lying on at least one perfect matching. The rest have `Z_e = 0`
/// exactly and are dropped before scaling, which also gives the weight
/// matrix total support so Sinkhorn converges.
fn matchable_edges(graph: &BipartiteGraph) -> Result<Vec<bool>> {
    let n = graph.left;
    let all = vec![true; graph.edges.len()];
    if !graph.has_perfect_matching(&all, None, None) {
        return Err(Error::EmptyFamily);
    }
    let mut pair = vec![None; n * n];
    Ok(graph
        .edges
        .iter()
        .map(|&(i, j)| *pair[i * n + j].get_or_insert_with(|| graph.has_perfect_matching(&all, Some(i), Some(j))))
        .collect())
}

fn count_on_support(graph: &BipartiteGraph, support: &[bool], lambda: &DVector<f64>) -> Result<CountResult> {
    let n = graph.left;
    let m = graph.edges.len();
    if n == 0 {
        return Ok(CountResult {
            log_z: 0.0,
            log_z_e: DVector::zeros(0),
        });
    }

    // log of the merged weight matrix; parallel edges add
    let mut parallel: Vec<Vec<f64>> = vec![Vec::new(); n * n];
    for (idx, &(i, j)) in graph.edges.iter().enumerate().filter(|(idx, _)| support[*idx]) {
        parallel[i * n + j].push(-lambda[idx]);
    }
    let base = DMatrix::from_fn(n, n, |i, j| crate::linalg::log_sum_exp(parallel[i * n + j].iter().copied()));
    let mut row_scale = vec![0.0; n];
    let mut col_scale = vec![0.0; n];
    for _ in 0..SINKHORN_ROUNDS {
        for i in 0..n {
            row_scale[i] -= crate::linalg::log_sum_exp((0..n).map(|j| base[(i, j)] + row_scale[i] + col_scale[j]));
        }
        let mut worst = 0.0f64;
        for j in 0..n {
            let d = crate::linalg::log_sum_exp((0..n).map(|i| base[(i, j)] + row_scale[i] + col_scale[j]));
            col_scale[j] -= d;
            worst = worst.max(d.abs());
        }
        // column sums were already 1 before renormalizing: both are balanced
        if worst < 1e-13 {
            break;
        }
    }
    let offset: f64 = row_scale.iter().sum::<f64>() + col_scale.iter().sum::<f64>();
    let w = DMatrix::from_fn(n, n, |i, j| (base[(i, j)] + row_scale[i] + col_scale[j]).exp());

    let (perm, minors) = ryser_with_minors(&w);
    if !(perm > 0.0) {
        return Err(Error::NumericalFailure(format!("scaled permanent {perm:e} is not positive")));
    }
    let log_z = perm.ln() - offset;
    let log_z_e = DVector::from_fn(m, |idx, _| {
        let (i, j) = graph.edges[idx];
        let minor = minors[(i, j)];
        if support[idx] && minor > 0.0 {
            -lambda[idx] + row_scale[i] + col_scale[j] + minor.ln() - offset
        } else {
            f64::NEG_INFINITY
        }
    });
    Ok(CountResult { log_z, log_z_e })
}

/// Ryser's formula `perm(A) = (−1)^n Σ_S (−1)^{|S|} Π_i Σ_{j∈S} a_ij` over a
/// Gray-code walk of column subsets, together with every minor permanent
/// `∂perm/∂a_ij` from the same walk (prefix/suffix products over rows).
fn ryser_with_minors(a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let n = a.nrows();
    let mut row_sums = vec![0.0; n];
    let mut in_set = vec![false; n];
    let mut perm = 0.0;
    let mut minors = DMatrix::<f64>::zeros(n, n);
    let mut prefix = vec![0.0; n + 1];
    let mut suffix = vec![0.0; n + 1];
    let mut size = 0usize;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        in_set[j] = !in_set[j];
        let delta = if in_set[j] { 1.0 } else { -1.0 };
        size = if in_set[j] { size + 1 } else { size - 1 };
        for i in 0..n {
            row_sums[i] += delta * a[(i, j)];
        }
        let sign = if (n - size) % 2 == 0 { 1.0 } else { -1.0 };
        prefix[0] = 1.0;
        for i in 0..n {
            prefix[i + 1] = prefix[i] * row_sums[i];
        }
        perm += sign * prefix[n];
        suffix[n] = 1.0;
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * row_sums[i];
        }
        for i in 0..n {
            let without_i = sign * prefix[i] * suffix[i + 1];
            if without_i == 0.0 {
                continue;
            }
            for (col, &member) in in_set.iter().enumerate() {
                if member {
                    minors[(i, col)] += without_i;
                }
            }
        }
    }
    (perm, minors)
}
