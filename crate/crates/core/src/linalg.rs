//! Small dense linear-algebra helpers shared by the polytope, objective and
//! ellipsoid code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Rank tolerance used for equality systems and affine independence.
pub const RANK_TOL: f64 = 1e-9;

/// Numerically stable `ln Σ exp(x_i)`. Returns `-inf` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Projects `v` against every vector of `basis` (assumed orthonormal), twice.
fn reject(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&r);
            r.axpy(-c, q, 1.0);
        }
    }
    r
}

/// Modified Gram–Schmidt with re-orthogonalization. Vectors whose residual
/// falls below `tol * max(1, |v|)` are skipped, so the output spans the same
/// space as the input and ties resolve in input order.
pub fn orthonormalize(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let r = reject(v, &basis);
        let norm = r.norm();
        if norm > tol * v.norm().max(1.0) {
            basis.push(r / norm);
        }
    }
    basis
}

/// Extends the orthonormal `basis` of a subspace of `R^dim` with its
/// orthogonal complement, scanning the coordinate axes in order.
pub fn orthogonal_complement(basis: &[DVector<f64>], dim: usize, tol: f64) -> Vec<DVector<f64>> {
    let mut all: Vec<DVector<f64>> = basis.to_vec();
    let mut out = Vec::new();
    for i in 0..dim {
        if all.len() == dim {
            break;
        }
        let e = DVector::from_fn(dim, |j, _| if j == i { 1.0 } else { 0.0 });
        let r = reject(&e, &all);
        let norm = r.norm();
        if norm > tol.max(1e-6) {
            let q = r / norm;
            all.push(q.clone());
            out.push(q);
        }
    }
    out
}

/// Numerical rank of a set of vectors.
pub fn rank(vectors: &[DVector<f64>], tol: f64) -> usize {
    orthonormalize(vectors, tol).len()
}

/// Stacks column vectors into an `n x k` matrix (`n` given for the empty case).
pub fn columns_to_matrix(n: usize, columns: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i])
}

/// Linear subspace of `R^m` described by an orthonormal basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a basis matrix after checking orthonormality to `1e-10`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let r = basis.ncols();
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::<f64>::identity(r, r)).amax();
        if err > 1e-10 {
            return Err(Error::BadBasis(format!("|BᵀB − I| = {err:.3e}")));
        }
        Ok(Self { basis })
    }

    /// The whole space `R^m`.
    pub fn full(m: usize) -> Self {
        Self {
            basis: DMatrix::identity(m, m),
        }
    }

    /// Null space of the rows of `a` (a `k x m` matrix).
    pub fn null_space_of(a: &DMatrix<f64>) -> Self {
        let m = a.ncols();
        let rows: Vec<DVector<f64>> = (0..a.nrows()).map(|i| a.row(i).transpose()).collect();
        let row_basis = orthonormalize(&rows, RANK_TOL);
        let comp = orthogonal_complement(&row_basis, m, RANK_TOL);
        Self {
            basis: columns_to_matrix(m, &comp),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Coordinates `Bᵀ v`.
    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(v)
    }

    /// Embeds coordinates: `B y`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * y
    }

    /// Orthogonal projection `B Bᵀ v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.lift(&self.coords(v))
    }
}

/// Serde adapter writing a `DVector<f64>` as a flat JSON array.
pub mod serde_dvector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(raw))
    }
}

/// Same as [`serde_dvector`] but allowing `-inf` entries, which JSON cannot
/// carry; they are written as `null`.
pub mod serde_log_dvector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        Ok(DVector::from_iterator(
            raw.len(),
            raw.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)),
        ))
    }
}
