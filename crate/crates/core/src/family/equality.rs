use nalgebra::{DMatrix, DVector};

use super::graph::blocks;
use super::{BipartiteGraph, Family, FamilyKind};
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement, orthonormalize, Subspace, RANK_TOL};

/// `A_eq x = b`, with linearly independent rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualitySystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl EqualitySystem {
    /// Checks independence of the rows at [`RANK_TOL`].
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        let rows: Vec<DVector<f64>> = (0..a.nrows()).map(|i| a.row(i).transpose()).collect();
        if orthonormalize(&rows, RANK_TOL).len() != rows.len() {
            return Err(Error::RankDeficient);
        }
        Ok(Self { a, b })
    }

    /// No equalities over `R^m`.
    pub fn empty(m: usize) -> Self {
        Self {
            a: DMatrix::zeros(0, m),
            b: DVector::zeros(0),
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Number of equalities.
    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    /// `max_i |(A x − b)_i|`, zero when there are no rows.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        (&self.a * x - &self.b).amax()
    }

    /// The null space `K = {λ : A λ = 0}`.
    pub fn null_space(&self) -> Subspace {
        Subspace::null_space_of(&self.a)
    }
}

pub(super) fn equality_system(family: &Family) -> Result<EqualitySystem> {
    let m = family.m();
    let rows = match family.kind() {
        FamilyKind::SpanningTrees(g) => {
            let (blocks, loops) = blocks(g);
            let mut rows = Vec::new();
            for block in blocks {
                let mut seen = std::collections::BTreeSet::new();
                let mut row = DVector::zeros(m);
                for &e in &block {
                    row[e] = 1.0;
                    seen.insert(g.edges[e].0);
                    seen.insert(g.edges[e].1);
                }
                rows.push((row, (seen.len() - 1) as f64));
            }
            for e in loops {
                rows.push((unit(m, e), 0.0));
            }
            rows
        }
        FamilyKind::BipartitePerfectMatchings(g) => matching_rows(g)?,
        FamilyKind::CycleCovers(g) => matching_rows(&g.double_cover())?,
        FamilyKind::Explicit { .. } => return generic(family),
    };
    // Rows from the closed forms may be dependent; keep an independent subset
    // in order.
    let mut kept: Vec<DVector<f64>> = Vec::new();
    let mut a_rows = Vec::new();
    let mut b = Vec::new();
    for (row, rhs) in rows {
        let mut trial = kept.clone();
        trial.push(row.clone());
        let q = orthonormalize(&trial, RANK_TOL);
        if q.len() > kept.len() {
            kept = q;
            a_rows.push(row.transpose());
            b.push(rhs);
        }
    }
    let a = if a_rows.is_empty() {
        DMatrix::zeros(0, m)
    } else {
        DMatrix::from_rows(&a_rows)
    };
    EqualitySystem::new(a, DVector::from_vec(b))
}

fn unit(m: usize, e: usize) -> DVector<f64> {
    let mut v = DVector::zeros(m);
    v[e] = 1.0;
    v
}

/// Edges lying in no perfect matching are fixed at zero; every vertex has
/// degree one. Each connected component of the remaining graph contributes
/// one redundant degree row, dropped by the caller.
fn matching_rows(g: &BipartiteGraph) -> Result<Vec<(DVector<f64>, f64)>> {
    let m = g.edges.len();
    let all = vec![true; m];
    if !g.has_perfect_matching(&all, None, None) {
        return Err(Error::EmptyFamily);
    }
    let mut rows = Vec::new();
    for (idx, &(i, j)) in g.edges.iter().enumerate() {
        if !g.has_perfect_matching(&all, Some(i), Some(j)) {
            rows.push((unit(m, idx), 0.0));
        }
    }
    for i in 0..g.left {
        let row = DVector::from_fn(m, |e, _| if g.edges[e].0 == i { 1.0 } else { 0.0 });
        rows.push((row, 1.0));
    }
    for j in 0..g.right {
        let row = DVector::from_fn(m, |e, _| if g.edges[e].1 == j { 1.0 } else { 0.0 });
        rows.push((row, 1.0));
    }
    Ok(rows)
}

/// Orthogonal complement of the affine hull's direction space, taken along
/// the coordinate axes in order.
fn generic(family: &Family) -> Result<EqualitySystem> {
    let m = family.m();
    let vertices = family.enumerate()?;
    let first = vertices.first().ok_or(Error::EmptyFamily)?;
    let diffs: Vec<DVector<f64>> = vertices[1..].iter().map(|v| v - first).collect();
    let directions = orthonormalize(&diffs, RANK_TOL);
    let normals = orthogonal_complement(&directions, m, RANK_TOL);
    if normals.is_empty() {
        return Ok(EqualitySystem::empty(m));
    }
    let a = DMatrix::from_fn(normals.len(), m, |i, j| normals[i][j]);
    let b = &a * first;
    EqualitySystem::new(a, b)
}
