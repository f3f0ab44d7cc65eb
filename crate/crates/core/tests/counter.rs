use std::time::Instant;

use maxent_core::counter::{count_via_entropy, generalized_count, survival_probe, interior_point, CountConfig, ThresholdSolver};
use maxent_core::family::{BipartiteGraph, Family, Polytope, UndirectedGraph};
use nalgebra::DVector;

fn check(family: Family, truth: f64) {
    let p = Polytope::new(&family).unwrap();
    let start = Instant::now();
    let est = count_via_entropy(&p, &ThresholdSolver::for_polytope(&p), 0.1, &CountConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    eprintln!("truth {truth}: z = {:.4}, guesses {}, {secs:.2}s", est.z_tilde, est.guess_trace.len());
    assert!(est.z_tilde >= 0.9 * truth && est.z_tilde <= 1.1 * truth, "{} vs {truth}", est.z_tilde);
    assert!(secs < 60.0);
}

#[test]
fn k4_trees() {
    check(Family::spanning_trees(UndirectedGraph::complete(4)).unwrap(), 16.0);
}

#[test]
fn k22_matchings() {
    check(Family::bipartite_matchings(BipartiteGraph::complete(2)).unwrap(), 2.0);
}

#[test]
fn k33_matchings() {
    check(Family::bipartite_matchings(BipartiteGraph::complete(3)).unwrap(), 6.0);
}

#[test]
fn weighted_k3_count() {
    let p = Polytope::new(&Family::spanning_trees(UndirectedGraph::complete(3)).unwrap()).unwrap();
    let mu = DVector::from_vec(vec![2f64.ln(), 0.0, 0.0]);
    let ip = interior_point(&p).unwrap();
    let config = CountConfig {
        probe: Some(survival_probe(&p, &ip, 0.1, Some(&mu)).unwrap()),
        ..Default::default()
    };
    let est = generalized_count(&p, &ThresholdSolver::for_polytope(&p), &mu, 0.1, &config).unwrap();
    assert!((1.8..=2.2).contains(&est.z_tilde), "{}", est.z_tilde);
    // the target point is never cut away by a successful guess's ellipsoids
    for g in &est.guess_trace {
        if g.zeta <= 2f64.ln() - 0.1 {
            assert!(g.succeeded, "{g:?}");
        }
    }
}
