//! Shared fixtures and an independent reference solver for the dual.
#![allow(dead_code)]

use maxent_core::family::{BipartiteGraph, DirectedGraph, Family, Polytope, UndirectedGraph};
use maxent_core::linalg::{log_sum_exp, Subspace};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn k_trees(n: usize) -> Family {
    Family::spanning_trees(UndirectedGraph::complete(n)).unwrap()
}

pub fn k_pm(n: usize) -> Family {
    Family::bipartite_matchings(BipartiteGraph::complete(n)).unwrap()
}

pub fn k_cc(n: usize) -> Family {
    Family::cycle_covers(DirectedGraph::complete(n)).unwrap()
}

/// The desk instances: (name, family, |M|).
pub fn desk() -> Vec<(&'static str, Family, f64)> {
    vec![
        ("K3 trees", k_trees(3), 3.0),
        ("K4 trees", k_trees(4), 16.0),
        ("K2,2 matchings", k_pm(2), 2.0),
        ("K3,3 matchings", k_pm(3), 6.0),
    ]
}

pub fn members_as_vectors(family: &Family) -> Vec<DVector<f64>> {
    family.enumerate().unwrap()
}

/// `θ = 0.9·Σ w_j v_j + 0.1·centroid` with Dirichlet-like random weights.
pub fn random_interior<R: Rng>(p: &Polytope, rng: &mut R) -> DVector<f64> {
    let vs = p.vertices();
    let w: Vec<f64> = (0..vs.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    let mut x = DVector::zeros(p.m());
    for (v, wj) in vs.iter().zip(&w) {
        x += v * (wj / total);
    }
    x * 0.9 + p.centroid() * 0.1
}

/// Random connected graph: a random spanning tree plus random extra edges.
pub fn random_connected<R: Rng>(n: usize, extra: f64, rng: &mut R) -> UndirectedGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random::<f64>() < extra {
                edges.push((u, v));
            }
        }
    }
    UndirectedGraph::new(n, edges)
}

/// Value of `⟨θ,λ⟩ + ln Σ_M e^{−λ(M)}` by direct summation.
pub fn dual_value(vertices: &[DVector<f64>], theta: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    theta.dot(lambda) + log_sum_exp(vertices.iter().map(|v| -v.dot(lambda)))
}

pub fn gibbs(vertices: &[DVector<f64>], lambda: &DVector<f64>) -> Vec<f64> {
    let lz = log_sum_exp(vertices.iter().map(|v| -v.dot(lambda)));
    vertices.iter().map(|v| (-v.dot(lambda) - lz).exp()).collect()
}

/// Damped Newton on the dual restricted to `K`, written against the
/// enumerated family only. Returns `(λ*, f*)`.
pub fn newton_optimum(vertices: &[DVector<f64>], k: &Subspace, theta: &DVector<f64>) -> (DVector<f64>, f64) {
    let m = theta.len();
    let r = k.dim();
    let b = k.basis().clone();
    let mut lambda = DVector::zeros(m);
    if r == 0 {
        return (lambda.clone(), dual_value(vertices, theta, &lambda));
    }
    let mut value = dual_value(vertices, theta, &lambda);
    for _ in 0..500 {
        let p = gibbs(vertices, &lambda);
        let mean = vertices.iter().zip(&p).fold(DVector::zeros(m), |acc, (v, w)| acc + v * *w);
        let mut cov = DMatrix::<f64>::zeros(m, m);
        for (v, w) in vertices.iter().zip(&p) {
            let d = v - &mean;
            cov += &d * d.transpose() * *w;
        }
        let g = b.transpose() * (theta - &mean);
        if g.norm() < 1e-14 {
            break;
        }
        let h = b.transpose() * cov * &b + DMatrix::identity(r, r) * 1e-14;
        let step = h.cholesky().map(|c| c.solve(&g)).unwrap_or_else(|| g.clone());
        let dir = -(&b * step);
        let mut t = 1.0;
        loop {
            let cand = &lambda + &dir * t;
            let v = dual_value(vertices, theta, &cand);
            if v <= value - 1e-4 * t * g.dot(&(b.transpose() * -&dir)).abs() || t < 1e-12 {
                if v <= value {
                    lambda = cand;
                    value = v;
                }
                break;
            }
            t *= 0.5;
        }
        if t < 1e-12 {
            break;
        }
    }
    (lambda, value)
}
