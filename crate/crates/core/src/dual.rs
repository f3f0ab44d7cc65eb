//! The dual objective `f_θ(λ) = ⟨θ, λ⟩ + ln Z^λ`, its gradient `θ − θ^λ`,
//! and helpers on the working subspace `K = null(A_eq)`.

use nalgebra::DVector;

use crate::counting::{CountResult, CountingOracle};
use crate::error::{Error, Result};
use crate::family::EqualitySystem;

/// Roundoff window absorbed when clamping marginals to `[0, 1]`.
pub const MARGINAL_CLAMP: f64 = 1e-12;

/// Value and gradient from a single oracle call.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub count: CountResult,
}

fn check_dims(theta: &DVector<f64>, lambda: &DVector<f64>, m: usize) -> Result<()> {
    for v in [theta, lambda] {
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: v.len(),
            });
        }
    }
    Ok(())
}

pub fn eval_f(theta: &DVector<f64>, lambda: &DVector<f64>, oracle: &dyn CountingOracle) -> Result<f64> {
    check_dims(theta, lambda, oracle.m())?;
    Ok(theta.dot(lambda) + oracle.count(lambda)?.log_z)
}

/// `⟨θ, λ⟩ + ln Z^{λ+μ} + ln Z^μ`.
pub fn eval_f_kl(
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    mu: &DVector<f64>,
    oracle: &dyn CountingOracle,
) -> Result<f64> {
    check_dims(theta, lambda, oracle.m())?;
    check_dims(mu, lambda, oracle.m())?;
    let shifted = lambda + mu;
    Ok(theta.dot(lambda) + oracle.count(&shifted)?.log_z + oracle.count(mu)?.log_z)
}

pub fn grad_f(theta: &DVector<f64>, lambda: &DVector<f64>, oracle: &dyn CountingOracle) -> Result<DVector<f64>> {
    Ok(eval_with_grad(theta, lambda, oracle)?.gradient)
}

pub fn eval_with_grad(theta: &DVector<f64>, lambda: &DVector<f64>, oracle: &dyn CountingOracle) -> Result<DualEval> {
    check_dims(theta, lambda, oracle.m())?;
    let count = oracle.count(lambda)?;
    let value = theta.dot(lambda) + count.log_z;
    let gradient = theta - count.ratios();
    Ok(DualEval { value, gradient, count })
}

/// `θ^λ_e = Z^λ_e / Z^λ`.
pub fn marginals_of(lambda: &DVector<f64>, oracle: &dyn CountingOracle) -> Result<DVector<f64>> {
    marginals_from(&oracle.count(lambda)?)
}

pub fn marginals_from(count: &CountResult) -> Result<DVector<f64>> {
    if count.log_z == f64::NEG_INFINITY {
        return Err(Error::EmptyFamily);
    }
    let raw = count.ratios();
    if let Some(bad) = raw.iter().find(|&&t| !(-MARGINAL_CLAMP..=1.0 + MARGINAL_CLAMP).contains(&t)) {
        return Err(Error::NumericalFailure(format!("marginal {bad} outside [0, 1]")));
    }
    Ok(raw.map(|t| t.clamp(0.0, 1.0)))
}

/// Orthogonal projection onto `null(A_eq)`.
pub fn project_to_k(lambda: &DVector<f64>, eq: &EqualitySystem) -> Result<DVector<f64>> {
    if lambda.len() != eq.m() {
        return Err(Error::DimensionMismatch {
            expected: eq.m(),
            found: lambda.len(),
        });
    }
    if eq.rank() == 0 {
        return Ok(lambda.clone());
    }
    let a = eq.a();
    let gram = a * a.transpose();
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    let coef = chol.solve(&(a * lambda));
    Ok(lambda - a.transpose() * coef)
}

/// Bound `m/η` on the norm of the optimal dual point.
pub fn radius_bound(m: usize, eta: f64) -> f64 {
    m as f64 / eta
}
