//! Forward direction: given marginals `θ` in the η-interior, find `λ°` with
//! `f_θ(λ°) ≤ inf f_θ + ε` by the ellipsoid method over `K = null(A_eq)`.

use std::sync::Arc;

use log::{debug, info};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::counting::{exact_oracle, CountingOracle, NoiseSpec, NoisyOracle};
use crate::dual::{eval_with_grad, marginals_from};
use crate::ellipsoid::EllipsoidState;
use crate::error::{Error, Result};
use crate::family::{EqualitySystem, Family};
use crate::linalg::{serde_dvector, Subspace};

/// Equality residual tolerated on input marginals.
pub const THETA_EQ_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    Approximate(NoiseSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    pub family: Family,
    pub theta: DVector<f64>,
    pub eta: f64,
    pub epsilon: f64,
    pub oracle_kind: OracleKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Per-run (exact) or per-guess (approximate) iteration ceiling.
    pub max_iterations: Option<usize>,
    /// Overrides the approximate solver's stop radius `ε/(16√m)`.
    pub stop_radius: Option<f64>,
    /// Record every ellipsoid step in the result.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessRecord {
    pub zeta: f64,
    pub succeeded: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Exact solve; `lower_bound ≤ inf f` from the subgradient certificates.
    Converged { lower_bound: f64 },
    GuessLedger(Vec<GuessRecord>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Guess being tested; absent for exact solves.
    pub zeta: Option<f64>,
    pub iteration: usize,
    pub value: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(with = "serde_dvector")]
    pub lambda: DVector<f64>,
    /// Objective at `lambda` under the exact oracle.
    pub f_value: f64,
    /// Objective as seen through the noisy oracle, for approximate solves.
    pub f_estimate: Option<f64>,
    /// Marginals of the returned product distribution.
    #[serde(with = "serde_dvector")]
    pub marginals: DVector<f64>,
    pub marginal_gap: f64,
    pub iterations: usize,
    pub oracle_calls: usize,
    pub epsilon: f64,
    /// `ln Z̃^μ` added to the KL objective (zero otherwise).
    pub objective_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_dvector")]
    pub mu: Option<DVector<f64>>,
    pub certificate: Certificate,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

mod opt_dvector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|x| x.as_slice().to_vec()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DVector<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(DVector::from_vec))
    }
}

/// Pinsker bound `√(ε/2)` on the marginal error of an ε-optimal dual point,
/// plus a small absolute slack.
pub fn marginal_gap_bound(epsilon: f64) -> f64 {
    (epsilon / 2.0).sqrt() + 1e-6
}

/// Solver bound to one family: exact oracle, equality system and `K`.
#[derive(Clone)]
pub struct MaxEntSolver {
    oracle: Arc<dyn CountingOracle>,
    eq: EqualitySystem,
    k: Subspace,
    config: SolverConfig,
}

impl std::fmt::Debug for MaxEntSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaxEntSolver")
            .field("m", &self.eq.m())
            .field("dim", &self.k.dim())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

struct Outcome {
    lambda: DVector<f64>,
    estimate: f64,
    iterations: usize,
}

impl MaxEntSolver {
    pub fn new(family: &Family) -> Result<Self> {
        Self::with_oracle(exact_oracle(family)?, family.equality_system()?)
    }

    pub fn with_oracle(oracle: Arc<dyn CountingOracle>, eq: EqualitySystem) -> Result<Self> {
        if oracle.m() != eq.m() {
            return Err(Error::DimensionMismatch {
                expected: eq.m(),
                found: oracle.m(),
            });
        }
        let k = eq.null_space();
        Ok(Self {
            oracle,
            eq,
            k,
            config: SolverConfig::default(),
        })
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn oracle(&self) -> &Arc<dyn CountingOracle> {
        &self.oracle
    }

    pub fn equality(&self) -> &EqualitySystem {
        &self.eq
    }

    pub fn subspace(&self) -> &Subspace {
        &self.k
    }

    fn m(&self) -> usize {
        self.eq.m()
    }

    fn validate(&self, theta: &DVector<f64>, eta: f64, epsilon: f64) -> Result<()> {
        if theta.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: theta.len(),
            });
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("η must be positive, got {eta}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {epsilon}")));
        }
        let residual = self.eq.residual(theta);
        if residual > THETA_EQ_TOL {
            return Err(Error::InfeasibleMarginals { residual });
        }
        Ok(())
    }

    /// Exact-oracle ellipsoid method from the ball of radius `√m·m/η`.
    /// Stops once the best value is within `ε` of the running lower bound
    /// `max_t f(c_t) − width_t(∇f)`, or once the volume has contracted by
    /// `β^r` with `β = ε/((2m+1)R)`. Returns the best center visited.
    pub fn solve_exact(&self, theta: &DVector<f64>, eta: f64, epsilon: f64) -> Result<SolveResult> {
        self.validate(theta, eta, epsilon)?;
        let m = self.m() as f64;
        let r = self.k.dim();
        if r == 0 {
            return self.trivial(theta, epsilon);
        }
        let radius = m.sqrt() * m / eta;
        let beta = epsilon / ((2.0 * m + 1.0) * radius);
        let rf = r as f64;
        let ceiling = self
            .config
            .max_iterations
            .unwrap_or((2.0 * rf * rf * (1.0 / beta).ln()).ceil() as usize + 10);

        let mut e = EllipsoidState::init_ball(DVector::zeros(self.m()), self.k.clone(), radius)?;
        let log_v0 = e.log_volume();
        let mut best: Option<(DVector<f64>, crate::dual::DualEval)> = None;
        let mut lower = f64::NEG_INFINITY;
        let mut trace = Vec::new();
        let mut calls = 0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < ceiling {
            iterations += 1;
            let c = e.center().clone();
            let ev = eval_with_grad(theta, &c, self.oracle.as_ref())?;
            calls += 1;
            let g = self.k.project(&ev.gradient);
            lower = lower.max(ev.value - e.width_along(&g));
            if self.config.trace {
                trace.push(TraceEntry {
                    zeta: None,
                    iteration: iterations,
                    value: ev.value,
                    radius: e.enclosing_radius(),
                });
            }
            if best.as_ref().is_none_or(|(_, b)| ev.value < b.value) {
                best = Some((c, ev));
            }
            let best_value = best.as_ref().map(|(_, b)| b.value).unwrap_or(f64::INFINITY);
            if best_value - lower <= epsilon || (e.log_volume() - log_v0) / rf <= beta.ln() {
                converged = true;
                break;
            }
            e = match e.central_cut(&g) {
                Ok(next) => next,
                // zero gradient on K: the center is optimal
                Err(Error::DegenerateNormal) => {
                    converged = true;
                    break;
                }
                Err(err) => return Err(err),
            };
        }
        if !converged {
            return Err(Error::MaxIterations { limit: ceiling });
        }
        let (lambda, ev) = best.expect("at least one iteration ran");
        // An η-interior θ has its optimum inside the box ‖λ‖∞ ≤ m/η; a best
        // point outside it means the promise was false (best-effort check).
        let box_radius = m / eta;
        if lambda.amax() > box_radius {
            return Err(Error::NotInterior(format!(
                "best dual point leaves the box ‖λ‖∞ ≤ m/η (‖λ‖∞ = {:.3e}, m/η = {box_radius:.3e})",
                lambda.amax()
            )));
        }
        let marginals = marginals_from(&ev.count)?;
        let marginal_gap = (&marginals - theta).amax();
        debug!("exact solve: {iterations} iterations, f = {}, lower bound {lower}", ev.value);
        Ok(SolveResult {
            lambda,
            f_value: ev.value,
            f_estimate: None,
            marginals,
            marginal_gap,
            iterations,
            oracle_calls: calls,
            epsilon,
            objective_offset: 0.0,
            mu: None,
            certificate: Certificate::Converged { lower_bound: lower },
            trace,
        })
    }

    /// A zero-dimensional polytope: `λ = 0` is optimal.
    fn trivial(&self, theta: &DVector<f64>, epsilon: f64) -> Result<SolveResult> {
        let lambda = DVector::zeros(self.m());
        let count = self.oracle.count(&lambda)?;
        let marginals = marginals_from(&count)?;
        Ok(SolveResult {
            marginal_gap: (&marginals - theta).amax(),
            lambda,
            f_value: count.log_z,
            f_estimate: None,
            marginals,
            iterations: 0,
            oracle_calls: 1,
            epsilon,
            objective_offset: 0.0,
            mu: None,
            certificate: Certificate::Converged { lower_bound: count.log_z },
            trace: Vec::new(),
        })
    }

    /// Approximate-oracle solve: bisection over guesses `ζ ∈ (0, m]` down to
    /// width `ε/8`, one ellipsoid run per guess.
    pub fn solve_approx(&self, theta: &DVector<f64>, eta: f64, epsilon: f64, noise: NoiseSpec) -> Result<SolveResult> {
        self.solve_shifted(theta, eta, epsilon, noise, None)
    }

    /// Minimizes `⟨θ, λ⟩ + ln Z^{λ+μ} + ln Z^μ` with the same loop; `ln Z̃^μ`
    /// costs one extra oracle call.
    pub fn solve_kl(
        &self,
        theta: &DVector<f64>,
        eta: f64,
        epsilon: f64,
        noise: NoiseSpec,
        mu: &DVector<f64>,
    ) -> Result<SolveResult> {
        if mu.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: mu.len(),
            });
        }
        self.solve_shifted(theta, eta, epsilon, noise, Some(mu))
    }

    fn solve_shifted(
        &self,
        theta: &DVector<f64>,
        eta: f64,
        epsilon: f64,
        noise: NoiseSpec,
        mu: Option<&DVector<f64>>,
    ) -> Result<SolveResult> {
        self.validate(theta, eta, epsilon)?;
        noise.validate()?;
        let m = self.m() as f64;
        let r = self.k.dim();
        let shift = mu.cloned().unwrap_or_else(|| DVector::zeros(self.m()));
        let radius = m / eta + self.k.coords(&shift).norm();
        let stop = self.config.stop_radius.unwrap_or(epsilon / (16.0 * m.sqrt()));
        let value_oracle = NoisyOracle::new(self.oracle.clone(), noise.at_most(epsilon / 16.0))?;
        let grad_oracle = NoisyOracle::new(self.oracle.clone(), noise.at_most(epsilon / (96.0 * m * radius)))?;
        let mut calls = 0;

        let (offset, exact_offset) = match mu {
            Some(mu) => {
                calls += 1;
                (value_oracle.count(mu)?.log_z, self.oracle.count(mu)?.log_z)
            }
            None => (0.0, 0.0),
        };
        let base = offset - theta.dot(&shift);
        let (mut lo, mut hi) = match mu {
            Some(_) => (base - epsilon, base + m + epsilon),
            None => (0.0, m),
        };

        let rf = r as f64;
        let ceiling = self
            .config
            .max_iterations
            .unwrap_or((2.0 * rf * rf * (radius / stop).ln().max(1.0)).ceil() as usize + 10);
        let mut ledger = Vec::new();
        let mut trace = Vec::new();
        let mut iterations = 0;

        let run = |zeta: f64, trace: &mut Vec<TraceEntry>, calls: &mut usize| -> Result<Option<Outcome>> {
            let value_at = |c: &DVector<f64>| -> Result<f64> {
                Ok(theta.dot(c) + value_oracle.count(&(c + &shift))?.log_z + offset)
            };
            if r == 0 {
                let c = DVector::zeros(self.m());
                *calls += 1;
                let v = value_at(&c)?;
                return Ok((v <= zeta).then_some(Outcome {
                    lambda: c,
                    estimate: v,
                    iterations: 1,
                }));
            }
            let mut e = EllipsoidState::init_ball(DVector::zeros(self.m()), self.k.clone(), radius)?;
            for it in 1..=ceiling {
                let c = e.center().clone();
                let zeta_t = value_at(&c)?;
                *calls += 1;
                if self.config.trace {
                    trace.push(TraceEntry {
                        zeta: Some(zeta),
                        iteration: it,
                        value: zeta_t,
                        radius: e.enclosing_radius(),
                    });
                }
                if zeta_t <= zeta {
                    return Ok(Some(Outcome {
                        lambda: c,
                        estimate: zeta_t,
                        iterations: it,
                    }));
                }
                if e.enclosing_radius() <= stop || e.mean_radius() <= stop {
                    return Ok(None);
                }
                let theta_t = grad_oracle.count(&(&c + &shift))?.ratios();
                *calls += 1;
                e = match e.central_cut(&(theta - theta_t)) {
                    Ok(next) => next,
                    Err(Error::DegenerateNormal) => return Ok(None),
                    Err(err) => return Err(err),
                };
            }
            Err(Error::MaxIterations { limit: ceiling })
        };

        let mut found = match run(hi, &mut trace, &mut calls)? {
            Some(out) => {
                iterations += out.iterations;
                ledger.push(GuessRecord {
                    zeta: hi,
                    succeeded: true,
                    iterations: out.iterations,
                });
                out
            }
            None => {
                ledger.push(GuessRecord {
                    zeta: hi,
                    succeeded: false,
                    iterations: ceiling,
                });
                return Err(Error::NoGuessSucceeded);
            }
        };
        while hi - lo > epsilon / 8.0 {
            let mid = 0.5 * (lo + hi);
            match run(mid, &mut trace, &mut calls)? {
                Some(out) => {
                    iterations += out.iterations;
                    ledger.push(GuessRecord {
                        zeta: mid,
                        succeeded: true,
                        iterations: out.iterations,
                    });
                    hi = mid;
                    found = out;
                }
                None => {
                    ledger.push(GuessRecord {
                        zeta: mid,
                        succeeded: false,
                        iterations: 0,
                    });
                    lo = mid;
                }
            }
            debug!("guess ζ = {mid:.6}: bracket [{lo:.6}, {hi:.6}]");
        }
        check_monotone(&ledger, epsilon / 8.0)?;

        let lambda = found.lambda;
        if r > 0 && lambda.norm() >= 0.999 * radius {
            return Err(Error::NotInterior(format!(
                "returned dual point sits on the bounding ball (‖λ‖ = {:.3e}, radius {radius:.3e})",
                lambda.norm()
            )));
        }
        let count = self.oracle.count(&(&lambda + &shift))?;
        let f_value = theta.dot(&lambda) + count.log_z + exact_offset;
        let marginals = marginals_from(&count)?;
        let marginal_gap = (&marginals - theta).amax();
        info!(
            "approximate solve: {} guesses, {iterations} iterations, f = {f_value}",
            ledger.len()
        );
        Ok(SolveResult {
            lambda,
            f_value,
            f_estimate: Some(found.estimate),
            marginals,
            marginal_gap,
            iterations,
            oracle_calls: calls,
            epsilon,
            objective_offset: offset,
            mu: mu.cloned(),
            certificate: Certificate::GuessLedger(ledger),
            trace,
        })
    }
}

/// Successes must not sit below failures by more than the granularity.
fn check_monotone(ledger: &[GuessRecord], granularity: f64) -> Result<()> {
    for s in ledger.iter().filter(|g| g.succeeded) {
        if let Some(f) = ledger.iter().find(|g| !g.succeeded && g.zeta > s.zeta + granularity) {
            return Err(Error::NumericalFailure(format!(
                "non-monotone guesses: ζ = {} succeeded but ζ = {} failed",
                s.zeta, f.zeta
            )));
        }
    }
    Ok(())
}

pub fn solve_exact(req: &SolveRequest) -> Result<SolveResult> {
    MaxEntSolver::new(&req.family)?.solve_exact(&req.theta, req.eta, req.epsilon)
}

pub fn solve_approx(req: &SolveRequest) -> Result<SolveResult> {
    MaxEntSolver::new(&req.family)?.solve_approx(&req.theta, req.eta, req.epsilon, noise_of(req))
}

pub fn solve_kl(req: &SolveRequest, mu: &DVector<f64>) -> Result<SolveResult> {
    MaxEntSolver::new(&req.family)?.solve_kl(&req.theta, req.eta, req.epsilon, noise_of(req), mu)
}

fn noise_of(req: &SolveRequest) -> NoiseSpec {
    match req.oracle_kind {
        OracleKind::Exact => NoiseSpec::deterministic(0.0),
        OracleKind::Approximate(spec) => spec,
    }
}

/// Recomputes the marginals of `result` with `oracle` and checks the Pinsker
/// bound; returns the largest coordinate gap.
pub fn verify_marginals(result: &SolveResult, theta: &DVector<f64>, oracle: &dyn CountingOracle) -> Result<f64> {
    let at = match &result.mu {
        Some(mu) => &result.lambda + mu,
        None => result.lambda.clone(),
    };
    let marginals = marginals_from(&oracle.count(&at)?)?;
    if marginals.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: marginals.len(),
            found: theta.len(),
        });
    }
    let gap = (marginals - theta).amax();
    let bound = marginal_gap_bound(result.epsilon);
    if gap > bound {
        return Err(Error::GapExceeded { gap, bound });
    }
    Ok(gap)
}
