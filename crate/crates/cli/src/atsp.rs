//! Illustrative randomized cycle-cover heuristic for ATSP.
//!
//! Each stage samples a cycle cover from the max-entropy distribution with
//! the current marginals, keeps its arcs, and contracts every cycle to one
//! representative. The union of the kept arcs is Eulerian and connected; a
//! shortcut Euler tour gives the Hamiltonian cycle. Only the first stage
//! uses the supplied fractional point. Later stages use marginals of the
//! cost-weighted Gibbs distribution over cycle covers (`∝ e^{−β·cost}`)
//! instead of re-solving the subtour LP.

use maxent_core::counting::CycleCoverOracle;
use maxent_core::dual::marginals_of;
use maxent_core::family::{DirectedGraph, Family};
use maxent_core::sampler::sample_cycle_cover;
use maxent_core::solver::MaxEntSolver;
use maxent_core::Error;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Degree-equality tolerance for the supplied fractional point.
pub const DEGREE_TOL: f64 = 1e-6;

/// Largest instance for which the optimal tour is brute-forced.
pub const BRUTE_FORCE_MAX: usize = 9;

/// Costs of a complete digraph; `costs[u][v]` for `u ≠ v`, diagonal ignored.
/// A `null` entry marks a missing arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtspInstance {
    pub costs: Vec<Vec<Option<f64>>>,
}

impl AtspInstance {
    pub fn n(&self) -> usize {
        self.costs.len()
    }

    fn cost(&self, u: usize, v: usize) -> f64 {
        self.costs[u][v].expect("completeness checked up front")
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = self.n();
        if n < 2 {
            return Err(CliError::Input("the instance needs at least two vertices".into()));
        }
        for (u, row) in self.costs.iter().enumerate() {
            if row.len() != n {
                return Err(CliError::Input(format!("cost row {u} has {} entries, expected {n}", row.len())));
            }
            for (v, c) in row.iter().enumerate() {
                match c {
                    None if u != v => {
                        return Err(CliError::NoHamiltonianClosure(format!(
                            "arc ({u}, {v}) is missing; the demo requires a complete digraph"
                        )))
                    }
                    Some(c) if u != v && !(c.is_finite() && *c >= 0.0) => {
                        return Err(CliError::Input(format!("cost of arc ({u}, {v}) must be finite and ≥ 0")))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtspConfig {
    /// Independent trials; the cheapest tour is reported.
    pub rounds: usize,
    /// Inverse temperature of the cost-weighted marginals after stage one.
    pub beta: f64,
    pub seed: u64,
    /// Accuracy of each max-entropy solve.
    pub epsilon: f64,
    /// Weight moved toward the uniform point when marginals touch the
    /// boundary (which the solver cannot accept).
    pub mix: f64,
}

impl Default for AtspConfig {
    fn default() -> Self {
        Self {
            rounds: 1,
            beta: 1.0,
            seed: 0,
            epsilon: 1e-3,
            mix: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    /// Original ids of the vertices alive in this stage.
    pub vertices: Vec<usize>,
    /// `"supplied"` or `"gibbs"`.
    pub marginal_source: String,
    pub mixed: bool,
    pub eta: f64,
    pub f_value: f64,
    pub marginal_gap: f64,
    pub solver_iterations: usize,
    /// Sampled cycles, in original ids, each starting at its representative.
    pub cycles: Vec<Vec<usize>>,
    pub cover_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub stages: Vec<StageStats>,
    pub kept_arcs: Vec<(usize, usize)>,
    pub kept_cost: f64,
    pub tour: Vec<usize>,
    pub tour_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtspReport {
    pub n: usize,
    pub config: AtspConfig,
    pub trials: Vec<TrialReport>,
    pub best_tour: Vec<usize>,
    pub best_cost: f64,
    /// Brute-forced optimum for small instances.
    pub optimum: Option<f64>,
    pub empirical_ratio: Option<f64>,
    pub note: String,
}

fn arc_index(k: usize, u: usize, v: usize) -> usize {
    u * (k - 1) + if v > u { v - 1 } else { v }
}

/// Checks `x ≥ 0` and unit in- and out-degree at every vertex.
pub fn check_fractional_point(n: usize, x: &DVector<f64>) -> Result<(), CliError> {
    let expected = n * (n - 1);
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        }
        .into());
    }
    let mut residual = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    for v in 0..n {
        let out: f64 = (0..n).filter(|&w| w != v).map(|w| x[arc_index(n, v, w)]).sum();
        let inn: f64 = (0..n).filter(|&w| w != v).map(|w| x[arc_index(n, w, v)]).sum();
        residual = residual.max((out - 1.0).abs()).max((inn - 1.0).abs());
    }
    if residual > DEGREE_TOL {
        return Err(Error::InfeasibleMarginals { residual }.into());
    }
    Ok(())
}

/// Distance from `x` to the nearest facet `x_e = 0` within the affine hull.
fn interiority_radius(solver: &MaxEntSolver, x: &DVector<f64>) -> f64 {
    let k = solver.subspace();
    if k.dim() == 0 {
        return 1.0;
    }
    (0..x.len())
        .filter_map(|e| {
            let mut unit = DVector::zeros(x.len());
            unit[e] = 1.0;
            let reach = k.project(&unit).norm();
            (reach > 1e-12).then(|| x[e] / reach)
        })
        .fold(f64::INFINITY, f64::min)
}

fn run_trial(instance: &AtspInstance, x0: &DVector<f64>, config: &AtspConfig, rng: &mut ChaCha8Rng) -> Result<TrialReport, CliError> {
    let n = instance.n();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut kept = Vec::new();
    let mut stages = Vec::new();
    while alive.len() > 1 {
        let k = alive.len();
        let graph = DirectedGraph::complete(k);
        let local_cost = DVector::from_iterator(graph.arcs.len(), graph.arcs.iter().map(|&(u, v)| instance.cost(alive[u], alive[v])));
        let (mut x, source) = if stages.is_empty() {
            (x0.clone(), "supplied")
        } else {
            let oracle = CycleCoverOracle::new(graph.clone())?;
            (marginals_of(&(&local_cost * config.beta), &oracle)?, "gibbs")
        };
        let solver = MaxEntSolver::new(&Family::cycle_covers(graph.clone())?)?;
        let mut eta = interiority_radius(&solver, &x);
        let mixed = !(eta > 1e-9);
        if mixed {
            let uniform = DVector::from_element(x.len(), config.mix / (k - 1) as f64);
            x = x * (1.0 - config.mix) + uniform;
            eta = interiority_radius(&solver, &x);
        }
        let result = solver.solve_exact(&x, eta, config.epsilon)?;
        let cover = sample_cycle_cover(&graph, &result.lambda, rng)?;

        let mut succ = vec![usize::MAX; k];
        for (idx, &(u, v)) in graph.arcs.iter().enumerate() {
            if cover[idx] == 1.0 {
                succ[u] = v;
            }
        }
        let mut seen = vec![false; k];
        let mut cycles = Vec::new();
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut u = start;
            while !seen[u] {
                seen[u] = true;
                cycle.push(alive[u]);
                kept.push((alive[u], alive[succ[u]]));
                u = succ[u];
            }
            cycles.push(cycle);
        }
        let cover_cost = graph
            .arcs
            .iter()
            .enumerate()
            .filter(|(idx, _)| cover[*idx] == 1.0)
            .map(|(idx, _)| local_cost[idx])
            .sum();
        stages.push(StageStats {
            vertices: alive.clone(),
            marginal_source: source.into(),
            mixed,
            eta,
            f_value: result.f_value,
            marginal_gap: result.marginal_gap,
            solver_iterations: result.iterations,
            cycles: cycles.clone(),
            cover_cost,
        });
        // the smallest id in each cycle survives; `alive` is sorted, so the
        // cycle's first element (its smallest local index) is that id
        alive = cycles.iter().map(|c| c[0]).collect();
        alive.sort_unstable();
    }
    let kept_cost = kept.iter().map(|&(u, v)| instance.cost(u, v)).sum();
    let tour = shortcut_euler_tour(n, &kept);
    check_tour(n, &tour)?;
    let tour_cost = tour_cost(instance, &tour);
    Ok(TrialReport {
        stages,
        kept_arcs: kept,
        kept_cost,
        tour,
        tour_cost,
    })
}

/// Hierholzer's algorithm from vertex 0, keeping first visits only.
fn shortcut_euler_tour(n: usize, arcs: &[(usize, usize)]) -> Vec<usize> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in arcs {
        out[u].push(v);
    }
    let mut stack = vec![0];
    let mut circuit = Vec::new();
    while let Some(&u) = stack.last() {
        match out[u].pop() {
            Some(v) => stack.push(v),
            None => circuit.push(stack.pop().expect("non-empty")),
        }
    }
    circuit.reverse();
    let mut visited = vec![false; n];
    circuit.into_iter().filter(|&v| !std::mem::replace(&mut visited[v], true)).collect()
}

fn check_tour(n: usize, tour: &[usize]) -> Result<(), CliError> {
    let mut seen = vec![false; n];
    if tour.len() != n || tour.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return Err(CliError::NoHamiltonianClosure(format!(
            "kept arcs do not close into a Hamiltonian tour: {tour:?}"
        )));
    }
    Ok(())
}

fn tour_cost(instance: &AtspInstance, tour: &[usize]) -> f64 {
    (0..tour.len()).map(|i| instance.cost(tour[i], tour[(i + 1) % tour.len()])).sum()
}

/// Cheapest Hamiltonian cycle by enumerating permutations that fix vertex 0.
pub fn brute_force_optimum(instance: &AtspInstance) -> f64 {
    fn extend(instance: &AtspInstance, path: &mut Vec<usize>, used: &mut [bool], cost: f64, best: &mut f64) {
        let n = used.len();
        let last = *path.last().expect("starts at 0");
        if path.len() == n {
            *best = best.min(cost + instance.cost(last, 0));
            return;
        }
        for v in 1..n {
            if !used[v] {
                let c = cost + instance.cost(last, v);
                if c < *best {
                    used[v] = true;
                    path.push(v);
                    extend(instance, path, used, c, best);
                    path.pop();
                    used[v] = false;
                }
            }
        }
    }
    let mut used = vec![false; instance.n()];
    used[0] = true;
    let mut best = f64::INFINITY;
    extend(instance, &mut vec![0], &mut used, 0.0, &mut best);
    best
}

pub fn atsp_demo(instance: &AtspInstance, x: &DVector<f64>, config: &AtspConfig) -> Result<AtspReport, CliError> {
    instance.validate()?;
    let n = instance.n();
    check_fractional_point(n, x)?;
    if config.rounds == 0 {
        return Err(CliError::Input("rounds must be at least 1".into()));
    }
    if !(config.beta.is_finite() && config.beta >= 0.0) {
        return Err(CliError::Input("β must be finite and ≥ 0".into()));
    }
    if !(config.mix > 0.0 && config.mix < 1.0) {
        return Err(CliError::Input("mix must lie in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let trials = (0..config.rounds)
        .map(|_| run_trial(instance, x, config, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let best = trials
        .iter()
        .min_by(|a, b| a.tour_cost.total_cmp(&b.tour_cost))
        .expect("at least one trial");
    let optimum = (n <= BRUTE_FORCE_MAX).then(|| brute_force_optimum(instance));
    Ok(AtspReport {
        n,
        config: config.clone(),
        best_tour: best.tour.clone(),
        best_cost: best.tour_cost,
        empirical_ratio: optimum.filter(|&o| o > 0.0).map(|o| best.tour_cost / o),
        optimum,
        trials,
        note: "illustrative: stage one uses the supplied fractional point; later stages use cost-weighted \
               Gibbs marginals instead of re-solving the subtour LP; no approximation guarantee is claimed"
            .into(),
    })
}
