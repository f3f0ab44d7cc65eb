//! Central-cut ellipsoids inside an affine subspace `anchor + span(B)`.
//!
//! The shape is kept as `e^{log_scale} · N` with `N` normalized to unit
//! trace-per-dimension, so long runs of cuts neither underflow nor lose
//! positive definiteness.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Subspace;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidState {
    center: DVector<f64>,
    anchor: DVector<f64>,
    basis: Subspace,
    shape: DMatrix<f64>,
    log_scale: f64,
}

impl EllipsoidState {
    /// Ball of radius `radius` around `anchor` within `anchor + span(basis)`.
    pub fn init_ball(anchor: DVector<f64>, basis: Subspace, radius: f64) -> Result<Self> {
        if basis.ambient_dim() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.ambient_dim(),
                found: anchor.len(),
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        // re-validate: the subspace may have been assembled by hand
        let basis = Subspace::new(basis.basis().clone())?;
        let r = basis.dim();
        Ok(Self {
            center: anchor.clone(),
            anchor,
            basis,
            shape: DMatrix::identity(r, r),
            log_scale: 2.0 * radius.ln(),
        })
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn basis(&self) -> &Subspace {
        &self.basis
    }

    /// Subspace dimension `r`.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// The shape matrix in subspace coordinates (may under/overflow for
    /// extreme scales; intended for inspection).
    pub fn shape(&self) -> DMatrix<f64> {
        &self.shape * self.log_scale.exp()
    }

    /// Minimum-volume ellipsoid containing `{x ∈ E : ⟨normal, x − center⟩ ≤ 0}`.
    pub fn central_cut(&self, normal: &DVector<f64>) -> Result<Self> {
        let r = self.dim();
        let g = self.basis.coords(normal);
        if r == 0 || g.norm() <= 1e-12 * normal.norm().max(1.0) {
            return Err(Error::DegenerateNormal);
        }
        let ng = &self.shape * &g;
        let gng = g.dot(&ng);
        if !(gng > 0.0) {
            return Err(Error::NumericalFailure(format!("shape is not positive definite (gᵀNg = {gng:e})")));
        }
        let b = ng / gng.sqrt();
        let rf = r as f64;
        let half_scale = (0.5 * self.log_scale).exp();
        let (step, shape, log_factor) = if r == 1 {
            (0.5, self.shape.clone(), (0.25f64).ln())
        } else {
            let shrunk = &self.shape - (&b * b.transpose()) * (2.0 / (rf + 1.0));
            (1.0 / (rf + 1.0), shrunk, (rf * rf / (rf * rf - 1.0)).ln())
        };
        let mut shape = (&shape + shape.transpose()) * 0.5;
        let norm = shape.trace() / rf;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NumericalFailure("shape trace collapsed".into()));
        }
        shape /= norm;
        let center = &self.center - self.basis.lift(&(b * (step * half_scale)));
        Ok(Self {
            center,
            anchor: self.anchor.clone(),
            basis: self.basis.clone(),
            shape,
            log_scale: self.log_scale + log_factor + norm.ln(),
        })
    }

    /// Square root of the largest eigenvalue of the shape.
    pub fn enclosing_radius(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let top = self.shape.clone().symmetric_eigenvalues().max();
        (0.5 * self.log_scale).exp() * top.max(0.0).sqrt()
    }

    /// `ln √det(shape)`, i.e. the log-volume relative to the unit ball.
    pub fn log_volume(&self) -> f64 {
        let r = self.dim();
        if r == 0 {
            return 0.0;
        }
        let log_det = match self.shape.clone().cholesky() {
            Some(c) => 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        };
        0.5 * (r as f64 * self.log_scale + log_det)
    }

    /// Geometric-mean semi-axis `exp(log_volume / r)`.
    pub fn mean_radius(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        (self.log_volume() / self.dim() as f64).exp()
    }

    /// Half-width along `direction`: `max_{x∈E} ⟨direction, x − center⟩`.
    pub fn width_along(&self, direction: &DVector<f64>) -> f64 {
        let g = self.basis.coords(direction);
        (0.5 * self.log_scale).exp() * g.dot(&(&self.shape * &g)).max(0.0).sqrt()
    }

    /// `(x−c)ᵀ S⁻¹ (x−c)` over the subspace component; `+inf` when `x` leaves
    /// the affine subspace by more than `1e-9`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.center;
        let y = self.basis.coords(&d);
        if (&d - self.basis.lift(&y)).norm() > 1e-9 * d.norm().max(1.0) {
            return f64::INFINITY;
        }
        if self.dim() == 0 {
            return 0.0;
        }
        match self.shape.clone().cholesky() {
            Some(c) => c.solve(&y).dot(&y) * (-self.log_scale).exp(),
            None => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.quadratic_form(x) <= 1.0 + tol
    }

    /// Checks symmetry, positive definiteness and that the center lies on
    /// the affine subspace.
    pub fn check_invariants(&self) -> Result<()> {
        let asym = (&self.shape - self.shape.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::NumericalFailure(format!("shape asymmetric by {asym:e}")));
        }
        if self.dim() > 0 && self.shape.clone().cholesky().is_none() {
            return Err(Error::NumericalFailure("shape is not positive definite".into()));
        }
        let d = &self.center - &self.anchor;
        let off = (&d - self.basis.project(&d)).norm();
        if off > 1e-9 * d.norm().max(1.0) {
            return Err(Error::NumericalFailure(format!("center left the subspace by {off:e}")));
        }
        Ok(())
    }
}
