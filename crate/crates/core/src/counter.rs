//! Reverse direction: estimate `|M|` (or `Z^μ`) from a max-entropy solver
//! and hull separation alone, by running the ellipsoid method over marginal
//! space for each guess of the log-count.

use std::sync::Arc;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::counting::{CountingOracle, EnumerationOracle, NoiseSpec};
use crate::dual::eval_with_grad;
use crate::ellipsoid::EllipsoidState;
use crate::error::{Error, Result};
use crate::family::{FamilyKind, Polytope, SeparationAnswer};
use crate::linalg::{orthonormalize, serde_dvector, Subspace, RANK_TOL};
use crate::solver::MaxEntSolver;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorPointResult {
    #[serde(with = "serde_dvector")]
    pub theta_tilde: DVector<f64>,
    /// Radius of a ball (within the affine hull) around `theta_tilde` that
    /// stays inside the polytope.
    pub eta_certified: f64,
    /// Indices of the affinely independent vertices averaged.
    pub vertices: Vec<usize>,
}

/// Centroid of `r+1` affinely independent vertices, picked greedily in
/// enumeration order. The certified radius is `1/((r+1)·k_l·k_u·√m)` with
/// the facet-coefficient bounds of the family kind, capped by the exact
/// distance to the boundary; explicit families use that distance directly.
pub fn interior_point(polytope: &Polytope) -> Result<InteriorPointResult> {
    let r = polytope.dim();
    let vs = polytope.vertices();
    let mut chosen = vec![0];
    let mut span: Vec<DVector<f64>> = Vec::new();
    for (i, v) in vs.iter().enumerate().skip(1) {
        if chosen.len() == r + 1 {
            break;
        }
        let mut trial = span.clone();
        trial.push(v - &vs[0]);
        let q = orthonormalize(&trial, RANK_TOL);
        if q.len() > span.len() {
            span = q;
            chosen.push(i);
        }
    }
    if chosen.len() != r + 1 {
        return Err(Error::NumericalFailure(format!(
            "found {} affinely independent vertices, expected {}",
            chosen.len(),
            r + 1
        )));
    }
    let mut theta = DVector::zeros(polytope.m());
    for &i in &chosen {
        theta += &vs[i];
    }
    theta /= chosen.len() as f64;
    if r == 0 {
        return Ok(InteriorPointResult {
            theta_tilde: theta,
            eta_certified: 0.0,
            vertices: chosen,
        });
    }
    let distance = polytope.boundary_distance(&theta)?;
    let m = polytope.m() as f64;
    let formula = |k_l: f64, k_u: f64| 1.0 / ((r as f64 + 1.0) * k_l * k_u * m.sqrt());
    let eta = match polytope.family().kind() {
        FamilyKind::SpanningTrees(g) => formula(1.0, (g.vertices.saturating_sub(2)).max(1) as f64).min(distance),
        FamilyKind::BipartitePerfectMatchings(_) | FamilyKind::CycleCovers(_) => formula(1.0, 1.0).min(distance),
        FamilyKind::Explicit { .. } => distance,
    };
    Ok(InteriorPointResult {
        theta_tilde: theta,
        eta_certified: eta,
        vertices: chosen,
    })
}

/// Vertices of a regular `r`-simplex with pairwise distances `eta`,
/// centered at `theta` inside `theta + span(basis)`.
pub fn regular_simplex(theta: &DVector<f64>, basis: &Subspace, eta: f64) -> Vec<DVector<f64>> {
    let r = basis.dim();
    if r == 0 {
        return vec![theta.clone()];
    }
    // Standard simplex e_0..e_r, centered, expressed in an orthonormal basis
    // of the hyperplane 1^⊥ ⊂ R^{r+1}.
    let n = r + 1;
    let centered: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64))
        .collect();
    let q = orthonormalize(&centered, RANK_TOL);
    let q = DMatrix::from_fn(r, n, |i, j| q[i][j]);
    let scale = eta / std::f64::consts::SQRT_2;
    centered
        .iter()
        .map(|c| theta + basis.lift(&(&q * c * scale)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum InteriorityVerdict {
    /// Every simplex vertex is in the hull, so `θ` is `η/(2m)`-interior.
    Inside { radius: f64 },
    /// `⟨a, y⟩ < ⟨a, θ⟩` for every `η`-interior `y`.
    Hyperplane { a: DVector<f64>, c: f64 },
}

pub fn interiority_test(polytope: &Polytope, theta: &DVector<f64>, eta: f64) -> Result<InteriorityVerdict> {
    for x in regular_simplex(theta, polytope.directions(), eta) {
        if let SeparationAnswer::Separated { a, c } = polytope.separate(&x)? {
            return Ok(InteriorityVerdict::Hyperplane { a, c });
        }
    }
    Ok(InteriorityVerdict::Inside {
        radius: eta / (2.0 * polytope.m() as f64),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntropyVerdict {
    /// `inf_λ f_θ(λ) ≥ ζ − ε`.
    AtLeast,
    /// `f_θ(λ) ≤ ζ + ε` for the returned `λ ∈ K`.
    Witness(DVector<f64>),
}

/// Threshold form of a max-entropy oracle. With `mu`, the objective is
/// `⟨θ, λ⟩ + ln Z^{λ+μ}`.
pub trait EntropyOracle {
    fn threshold(
        &self,
        theta: &DVector<f64>,
        zeta: f64,
        epsilon: f64,
        eta: f64,
        mu: Option<&DVector<f64>>,
    ) -> Result<EntropyVerdict>;
}

/// Answers threshold queries with an exact-oracle ellipsoid run that stops
/// as soon as either side of the threshold is certified.
pub struct ThresholdSolver {
    oracle: Arc<dyn CountingOracle>,
    k: Subspace,
    max_iterations: Option<usize>,
}

impl ThresholdSolver {
    pub fn new(oracle: Arc<dyn CountingOracle>, k: Subspace) -> Self {
        Self {
            oracle,
            k,
            max_iterations: None,
        }
    }

    /// Enumeration-backed solver for a polytope; robust for the very large
    /// dual points that tiny interiority radii allow.
    pub fn for_polytope(polytope: &Polytope) -> Self {
        let oracle = EnumerationOracle::from_members(polytope.m(), polytope.members().to_vec());
        Self::new(Arc::new(oracle), polytope.directions().clone())
    }

    pub fn with_max_iterations(mut self, limit: usize) -> Self {
        self.max_iterations = Some(limit);
        self
    }
}

impl EntropyOracle for ThresholdSolver {
    fn threshold(
        &self,
        theta: &DVector<f64>,
        zeta: f64,
        epsilon: f64,
        eta: f64,
        mu: Option<&DVector<f64>>,
    ) -> Result<EntropyVerdict> {
        let m = self.oracle.m();
        let shift = mu.cloned().unwrap_or_else(|| DVector::zeros(m));
        let value = |lambda: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
            let ev = eval_with_grad(theta, &(lambda + &shift), self.oracle.as_ref())?;
            Ok((ev.value - theta.dot(&shift), ev.gradient))
        };
        let r = self.k.dim();
        if r == 0 {
            let zero = DVector::zeros(m);
            let (v, _) = value(&zero)?;
            return Ok(if v <= zeta + epsilon {
                EntropyVerdict::Witness(zero)
            } else {
                EntropyVerdict::AtLeast
            });
        }
        let mf = m as f64;
        let radius = mf.sqrt() * mf / eta + self.k.coords(&shift).norm();
        let beta = epsilon / ((2.0 * mf + 1.0) * radius);
        let rf = r as f64;
        let ceiling = self
            .max_iterations
            .unwrap_or((2.0 * rf * rf * (1.0 / beta).ln()).ceil() as usize + 10);
        let mut e = EllipsoidState::init_ball(DVector::zeros(m), self.k.clone(), radius)?;
        let log_v0 = e.log_volume();
        let mut lower = f64::NEG_INFINITY;
        for _ in 0..ceiling {
            let c = e.center().clone();
            let (v, grad) = value(&c)?;
            if v <= zeta + epsilon {
                return Ok(EntropyVerdict::Witness(c));
            }
            let g = self.k.project(&grad);
            lower = lower.max(v - e.width_along(&g));
            if lower >= zeta - epsilon || (e.log_volume() - log_v0) / rf <= beta.ln() {
                return Ok(EntropyVerdict::AtLeast);
            }
            e = match e.central_cut(&g) {
                Ok(next) => next,
                Err(Error::DegenerateNormal) => return Ok(EntropyVerdict::AtLeast),
                Err(err) => return Err(err),
            };
        }
        Err(Error::MaxIterations { limit: ceiling })
    }
}

/// Turns [`MaxEntSolver`] results into threshold verdicts: solve to
/// accuracy `ε`, then compare the estimated value against `ζ` with an `ε/8`
/// allowance for oracle noise.
pub struct SolverAdapter {
    solver: MaxEntSolver,
    noise: NoiseSpec,
}

impl SolverAdapter {
    pub fn new(solver: MaxEntSolver, noise: NoiseSpec) -> Self {
        Self { solver, noise }
    }
}

impl EntropyOracle for SolverAdapter {
    fn threshold(
        &self,
        theta: &DVector<f64>,
        zeta: f64,
        epsilon: f64,
        eta: f64,
        mu: Option<&DVector<f64>>,
    ) -> Result<EntropyVerdict> {
        let result = match mu {
            Some(mu) => self.solver.solve_kl(theta, eta, epsilon, self.noise, mu)?,
            None => self.solver.solve_approx(theta, eta, epsilon, self.noise)?,
        };
        let estimate = result.f_estimate.unwrap_or(result.f_value) - result.objective_offset;
        Ok(if estimate <= zeta + epsilon - epsilon / 8.0 {
            EntropyVerdict::Witness(result.lambda)
        } else {
            EntropyVerdict::AtLeast
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CountConfig {
    /// Per-guess iteration ceiling.
    pub max_iterations: Option<usize>,
    /// A point whose survival inside every ellipsoid is recorded per guess.
    #[serde(skip)]
    pub probe: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessOutcome {
    pub zeta: f64,
    pub succeeded: bool,
    pub iterations: usize,
    pub hyperplane_cuts: usize,
    pub entropy_cuts: usize,
    /// Whether the probe stayed in every ellipsoid of this guess.
    pub probe_inside: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub z_tilde: f64,
    /// `ln z_tilde`: the largest guess that succeeded.
    pub zeta_final: f64,
    pub guess_trace: Vec<GuessOutcome>,
    /// Interiority radius used for the entropy queries' target set.
    pub eta: f64,
    pub eta_certified: f64,
    pub stop_radius: f64,
}

/// Approximates `|M|` within a factor `1 ± ε`.
pub fn count_via_entropy(
    polytope: &Polytope,
    oracle: &dyn EntropyOracle,
    epsilon: f64,
    config: &CountConfig,
) -> Result<CountEstimate> {
    run_count(polytope, oracle, epsilon, None, config)
}

/// Approximates `Z^μ = Σ_M e^{−μ(M)}` within a factor `1 ± ε`; `μ = 0`
/// is plain counting.
pub fn generalized_count(
    polytope: &Polytope,
    oracle: &dyn EntropyOracle,
    mu: &DVector<f64>,
    epsilon: f64,
    config: &CountConfig,
) -> Result<CountEstimate> {
    if mu.len() != polytope.m() {
        return Err(Error::DimensionMismatch {
            expected: polytope.m(),
            found: mu.len(),
        });
    }
    if mu.iter().all(|&x| x == 0.0) {
        return count_via_entropy(polytope, oracle, epsilon, config);
    }
    run_count(polytope, oracle, epsilon, Some(mu), config)
}

/// Mixture weight of the interior point in the survival target, and the
/// stop-radius divisor, for plain and weighted counting.
fn schedule(m: f64, epsilon: f64, mu: Option<&DVector<f64>>) -> (f64, f64) {
    match mu {
        None => (epsilon / (16.0 * m.powi(3)), 16.0 * m),
        Some(mu) => {
            let s = 1.0 + mu.lp_norm(1);
            (epsilon / (32.0 * m.powi(3) * s), 32.0 * m * s)
        }
    }
}

/// The point the reverse ellipsoid must never cut: the max-entropy
/// maximizer (vertex centroid, or `Z^μ_e/Z^μ`) pulled slightly toward the
/// interior point. Computed by enumeration; meant for instrumentation.
pub fn survival_probe(
    polytope: &Polytope,
    interior: &InteriorPointResult,
    epsilon: f64,
    mu: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let target = match mu {
        None => polytope.centroid(),
        Some(mu) => EnumerationOracle::from_members(polytope.m(), polytope.members().to_vec())
            .count(mu)?
            .ratios(),
    };
    let (w, _) = schedule(polytope.m() as f64, epsilon, mu);
    Ok(target * (1.0 - w) + &interior.theta_tilde * w)
}

/// Minimum-norm point of the affine hull `A_eq x = b`.
fn affine_anchor(polytope: &Polytope) -> Result<DVector<f64>> {
    let eq = polytope.equality();
    if eq.rank() == 0 {
        return Ok(DVector::zeros(polytope.m()));
    }
    let a = eq.a();
    let chol = (a * a.transpose()).cholesky().ok_or(Error::RankDeficient)?;
    Ok(a.transpose() * chol.solve(eq.b()))
}

fn run_count(
    polytope: &Polytope,
    oracle: &dyn EntropyOracle,
    epsilon: f64,
    mu: Option<&DVector<f64>>,
    config: &CountConfig,
) -> Result<CountEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let m = polytope.m() as f64;
    let r = polytope.dim();
    let interior = interior_point(polytope)?;
    let (w, stop_div) = schedule(m, epsilon, mu);
    let eta = if r == 0 { 1.0 } else { w * interior.eta_certified };
    let stop = epsilon * eta / stop_div;
    let query_eps = epsilon / 16.0;
    let query_eta = eta / (2.0 * m);
    let mu_norm = mu.map_or(0.0, |v| v.lp_norm(1));
    let (mut lo, mut hi) = match mu {
        None => (0.0, m),
        Some(_) => (-mu_norm - 1.0, m + mu_norm),
    };
    let anchor = affine_anchor(polytope)?;
    let radius = m.sqrt();
    let rf = r as f64;
    let ceiling = config
        .max_iterations
        .unwrap_or((2.0 * rf * rf * (radius / stop).ln().max(1.0)).ceil() as usize + 10);
    info!(
        "counting: r = {r}, η_cert = {:.3e}, η = {eta:.3e}, stop radius {stop:.3e}",
        interior.eta_certified
    );

    enum Step {
        Success,
        Cut(DVector<f64>),
    }
    let step = |theta: &DVector<f64>, zeta: f64, hyper: &mut usize, entropy: &mut usize| -> Result<Step> {
        if r > 0 {
            if let InteriorityVerdict::Hyperplane { a, .. } = interiority_test(polytope, theta, eta)? {
                *hyper += 1;
                return Ok(Step::Cut(a));
            }
        }
        match oracle.threshold(theta, zeta, query_eps, query_eta, mu)? {
            EntropyVerdict::AtLeast => Ok(Step::Success),
            EntropyVerdict::Witness(lambda) => {
                if lambda.len() != polytope.m() || lambda.iter().any(|x| !x.is_finite()) {
                    return Err(Error::SolverContractViolation(format!(
                        "witness has length {} or non-finite entries",
                        lambda.len()
                    )));
                }
                *entropy += 1;
                Ok(Step::Cut(-lambda))
            }
        }
    };

    let guess = |zeta: f64| -> Result<GuessOutcome> {
        let mut out = GuessOutcome {
            zeta,
            succeeded: false,
            iterations: 0,
            hyperplane_cuts: 0,
            entropy_cuts: 0,
            probe_inside: config.probe.as_ref().map(|_| true),
        };
        let mut e = EllipsoidState::init_ball(anchor.clone(), polytope.directions().clone(), radius)?;
        if let (Some(p), Some(flag)) = (&config.probe, out.probe_inside.as_mut()) {
            *flag = e.contains(p, 1e-9);
        }
        loop {
            out.iterations += 1;
            let theta = e.center().clone();
            let normal = match step(&theta, zeta, &mut out.hyperplane_cuts, &mut out.entropy_cuts)? {
                Step::Success => {
                    out.succeeded = true;
                    return Ok(out);
                }
                Step::Cut(n) => n,
            };
            if r == 0 || e.enclosing_radius() <= stop || e.mean_radius() <= stop {
                return Ok(out);
            }
            if out.iterations >= ceiling {
                return Err(Error::MaxIterations { limit: ceiling });
            }
            e = match e.central_cut(&normal) {
                Ok(next) => next,
                Err(Error::DegenerateNormal) => return Ok(out),
                Err(err) => return Err(err),
            };
            if let (Some(p), Some(flag)) = (&config.probe, out.probe_inside.as_mut()) {
                *flag &= e.contains(p, 1e-9);
            }
        }
    };

    let mut trace = Vec::new();
    while hi - lo > epsilon / 16.0 {
        let mid = 0.5 * (lo + hi);
        let g = guess(mid)?;
        debug!(
            "count guess ζ = {mid:.6}: {} after {} iterations",
            if g.succeeded { "success" } else { "failure" },
            g.iterations
        );
        if g.succeeded {
            lo = mid;
        } else {
            hi = mid;
        }
        trace.push(g);
    }
    Ok(CountEstimate {
        z_tilde: lo.exp(),
        zeta_final: lo,
        guess_trace: trace,
        eta,
        eta_certified: interior.eta_certified,
        stop_radius: stop,
    })
}
