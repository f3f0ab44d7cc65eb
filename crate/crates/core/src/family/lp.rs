//! Dense phase-one simplex for `x ∈ conv{v_j}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum HullLp {
    /// Optimal phase-one value at most the tolerance; convex weights attached.
    Feasible { weights: DVector<f64> },
    /// Farkas certificate: `⟨a, v_j⟩ ≤ c` for all `j` and `⟨a, x⟩ = c + infeasibility`.
    Infeasible { a: DVector<f64>, c: f64, infeasibility: f64 },
}

/// Minimizes the ℓ1 infeasibility of `Σ w_j v_j = x, Σ w_j = 1, w ≥ 0`
/// with Bland's rule.
pub(crate) fn hull_phase_one(vertices: &[DVector<f64>], x: &DVector<f64>, tol: f64) -> Result<HullLp> {
    let m = x.len();
    let n = vertices.len();
    let rows = m + 1;
    let cols = n + rows + 1;
    let rhs = cols - 1;
    let mut t = DMatrix::<f64>::zeros(rows, cols);
    let mut sign = vec![1.0; rows];
    for i in 0..rows {
        let r = if i < m { x[i] } else { 1.0 };
        sign[i] = if r < 0.0 { -1.0 } else { 1.0 };
        for (j, v) in vertices.iter().enumerate() {
            t[(i, j)] = sign[i] * if i < m { v[i] } else { 1.0 };
        }
        t[(i, n + i)] = 1.0;
        t[(i, rhs)] = sign[i] * r;
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();
    // reduced costs; the rhs slot holds minus the objective
    let mut obj = DVector::<f64>::zeros(cols);
    for j in 0..cols {
        let c = if (n..n + rows).contains(&j) { 1.0 } else { 0.0 };
        let col_sum: f64 = (0..rows).map(|i| t[(i, j)]).sum();
        obj[j] = if j == rhs { -col_sum } else { c - col_sum };
    }

    let limit = 100 * (rows + n) + 1000;
    let mut iterations = 0;
    loop {
        let Some(enter) = (0..rhs).find(|&j| obj[j] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..rows {
            let p = t[(i, enter)];
            if p > PIVOT_TOL {
                let ratio = t[(i, rhs)] / p;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-14 || (ratio <= best + 1e-14 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        // Phase one is bounded below by zero, so an unbounded column cannot occur.
        let Some(leave) = leave else {
            return Err(Error::NumericalFailure("phase-one simplex found an unbounded ray".into()));
        };
        pivot(&mut t, &mut obj, leave, enter);
        basis[leave] = enter;
        iterations += 1;
        if iterations > limit {
            return Err(Error::NumericalFailure(format!(
                "phase-one simplex exceeded {limit} pivots"
            )));
        }
    }

    let infeasibility = -obj[rhs];
    if infeasibility <= tol {
        let mut weights = DVector::zeros(n);
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                weights[bv] = t[(i, rhs)].max(0.0);
            }
        }
        return Ok(HullLp::Feasible { weights });
    }
    let u = DVector::from_fn(rows, |i, _| sign[i] * (1.0 - obj[n + i]));
    Ok(HullLp::Infeasible {
        a: u.rows(0, m).into_owned(),
        c: -u[m],
        infeasibility,
    })
}

fn pivot(t: &mut DMatrix<f64>, obj: &mut DVector<f64>, r: usize, c: usize) {
    let p = t[(r, c)];
    let cols = t.ncols();
    for j in 0..cols {
        t[(r, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i != r {
            let f = t[(i, c)];
            if f != 0.0 {
                for j in 0..cols {
                    t[(i, j)] -= f * t[(r, j)];
                }
            }
        }
    }
    let f = obj[c];
    if f != 0.0 {
        for j in 0..cols {
            obj[j] -= f * t[(r, j)];
        }
    }
}
