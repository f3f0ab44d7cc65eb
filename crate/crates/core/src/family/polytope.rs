use std::sync::OnceLock;

use nalgebra::DVector;

use super::lp::{hull_phase_one, HullLp};
use super::{EqualitySystem, Family, FamilyKind, Member};
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement, orthonormalize, Subspace, RANK_TOL};

/// Equality residual above which a query is treated as off the affine hull.
pub const EQ_TOL: f64 = 1e-7;
/// Phase-one infeasibility at or below which a point counts as inside.
pub const INSIDE_TOL: f64 = 1e-9;
/// Largest number of vertex subsets scanned when brute-forcing facets.
pub const FACET_SCAN_CAP: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SeparationAnswer {
    Inside,
    /// `⟨a, 1_M⟩ ≤ c` for every member and `⟨a, x⟩ > c`.
    Separated { a: DVector<f64>, c: f64 },
}

impl SeparationAnswer {
    pub fn is_inside(&self) -> bool {
        matches!(self, SeparationAnswer::Inside)
    }
}

/// The convex hull of a family's indicator vectors with its enumerated
/// vertices, equality system and direction space cached.
#[derive(Debug)]
pub struct Polytope {
    family: Family,
    members: Vec<Member>,
    vertices: Vec<DVector<f64>>,
    eq: EqualitySystem,
    directions: Subspace,
    inequalities: OnceLock<Vec<(DVector<f64>, f64)>>,
}

impl Polytope {
    pub fn new(family: &Family) -> Result<Self> {
        Self::with_cap(family, super::DEFAULT_CAP)
    }

    pub fn with_cap(family: &Family, cap: usize) -> Result<Self> {
        let members = family.members_with_cap(cap)?;
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let vertices: Vec<DVector<f64>> = members.iter().map(|s| super::indicator(family.m(), s)).collect();
        let eq = family.equality_system()?;
        let directions = eq.null_space();
        Ok(Self {
            family: family.clone(),
            members,
            vertices,
            eq,
            directions,
            inequalities: OnceLock::new(),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn m(&self) -> usize {
        self.family.m()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn equality(&self) -> &EqualitySystem {
        &self.eq
    }

    /// Orthonormal basis of `K = null(A_eq)`, the affine hull's direction space.
    pub fn directions(&self) -> &Subspace {
        &self.directions
    }

    /// Affine dimension `r = m − rank(A_eq)`.
    pub fn dim(&self) -> usize {
        self.directions.dim()
    }

    pub fn centroid(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.m());
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Strong separation over the hull.
    pub fn separate(&self, x: &DVector<f64>) -> Result<SeparationAnswer> {
        if x.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: x.len(),
            });
        }
        if self.eq.rank() > 0 {
            let r = self.eq.a() * x - self.eq.b();
            let i = r.iamax();
            if r[i].abs() > EQ_TOL {
                let row = self.eq.a().row(i).transpose();
                return Ok(if r[i] > 0.0 {
                    SeparationAnswer::Separated { a: row, c: self.eq.b()[i] }
                } else {
                    SeparationAnswer::Separated {
                        a: -row,
                        c: -self.eq.b()[i],
                    }
                });
            }
        }
        match hull_phase_one(&self.vertices, x, INSIDE_TOL)? {
            HullLp::Feasible { .. } => Ok(SeparationAnswer::Inside),
            HullLp::Infeasible { a, .. } => {
                // Components along the row space of A_eq are constant on the
                // hull; dropping them keeps the cut inside the working subspace.
                let projected = self.directions.project(&a);
                for normal in [projected, a] {
                    let c = self.max_over_vertices(&normal);
                    if normal.dot(x) > c {
                        return Ok(SeparationAnswer::Separated { a: normal, c });
                    }
                }
                Ok(SeparationAnswer::Inside)
            }
        }
    }

    fn max_over_vertices(&self, a: &DVector<f64>) -> f64 {
        self.vertices.iter().map(|v| a.dot(v)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Valid inequalities `⟨a, x⟩ ≤ c` containing every facet of the hull.
    pub fn inequalities(&self) -> Result<&[(DVector<f64>, f64)]> {
        if let Some(list) = self.inequalities.get() {
            return Ok(list);
        }
        let list = match self.family.kind() {
            FamilyKind::SpanningTrees(g) => {
                if g.vertices > 20 {
                    return Err(Error::SizeExceeded { n: g.vertices, max: 20 });
                }
                let m = self.m();
                let mut list = nonnegativity(m);
                for mask in 1u32..(1u32 << g.vertices) {
                    if mask.count_ones() < 2 {
                        continue;
                    }
                    let inside = |v: usize| mask & (1 << v) != 0;
                    let a = DVector::from_fn(m, |e, _| {
                        let (u, v) = g.edges[e];
                        if u != v && inside(u) && inside(v) {
                            1.0
                        } else {
                            0.0
                        }
                    });
                    list.push((a, f64::from(mask.count_ones() - 1)));
                }
                list
            }
            FamilyKind::BipartitePerfectMatchings(_) | FamilyKind::CycleCovers(_) => nonnegativity(self.m()),
            FamilyKind::Explicit { .. } => self.brute_force_facets()?,
        };
        Ok(self.inequalities.get_or_init(|| list))
    }

    /// Facets from every `r`-subset of vertices whose span, within the affine
    /// hull, is a supporting hyperplane.
    fn brute_force_facets(&self) -> Result<Vec<(DVector<f64>, f64)>> {
        let r = self.dim();
        let n = self.vertices.len();
        if r == 0 {
            return Ok(Vec::new());
        }
        if binomial(n, r) > FACET_SCAN_CAP as f64 {
            return Err(Error::CapExceeded { cap: FACET_SCAN_CAP });
        }
        let coords: Vec<DVector<f64>> = self.vertices.iter().map(|v| self.directions.coords(v)).collect();
        let mut out = Vec::new();
        let mut subset: Vec<usize> = (0..r).collect();
        loop {
            let base = &coords[subset[0]];
            let diffs: Vec<DVector<f64>> = subset[1..].iter().map(|&j| &coords[j] - base).collect();
            let span = orthonormalize(&diffs, RANK_TOL);
            if span.len() == r - 1 {
                let normal = orthogonal_complement(&span, r, RANK_TOL).remove(0);
                let level = normal.dot(base);
                let values: Vec<f64> = coords.iter().map(|y| normal.dot(y) - level).collect();
                let lifted = self.directions.lift(&normal);
                let offset = lifted.dot(&self.vertices[subset[0]]);
                if values.iter().all(|&v| v <= 1e-9) {
                    out.push((lifted.clone(), offset));
                }
                if values.iter().all(|&v| v >= -1e-9) {
                    out.push((-lifted, -offset));
                }
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
        Ok(out)
    }

    /// Distance from `x` (on the affine hull) to the relative boundary,
    /// measured within the hull: `min (c − ⟨a,x⟩)/‖P_K a‖` over valid
    /// inequalities. Zero for a single point.
    pub fn boundary_distance(&self, x: &DVector<f64>) -> Result<f64> {
        if self.dim() == 0 {
            return Ok(0.0);
        }
        let mut best = f64::INFINITY;
        for (a, c) in self.inequalities()? {
            let norm = self.directions.coords(a).norm();
            if norm < 1e-12 {
                continue;
            }
            best = best.min((c - a.dot(x)) / norm);
        }
        Ok(best)
    }
}

fn nonnegativity(m: usize) -> Vec<(DVector<f64>, f64)> {
    (0..m)
        .map(|e| (DVector::from_fn(m, |i, _| if i == e { -1.0 } else { 0.0 }), 0.0))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `subset` to the next lexicographic `k`-combination of `0..n`.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::super::{BipartiteGraph, UndirectedGraph};
    use super::*;

    fn k3() -> Polytope {
        Polytope::new(&Family::spanning_trees(UndirectedGraph::complete(3)).unwrap()).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn k3_separation_examples() {
        let p = k3();
        assert!(p.separate(&v(&[2.0 / 3.0; 3])).unwrap().is_inside());
        assert!(p.separate(&v(&[1.0, 1.0, 0.0])).unwrap().is_inside());
        // (0.9, 0.9, 0.2) = 0.8·(1,1,0) + 0.1·(1,0,1) + 0.1·(0,1,1)
        assert!(p.separate(&v(&[0.9, 0.9, 0.2])).unwrap().is_inside());
        let outside = v(&[1.2, 0.8, 0.0]);
        match p.separate(&outside).unwrap() {
            SeparationAnswer::Separated { a, c } => {
                for vert in p.vertices() {
                    assert!(a.dot(vert) <= c + 1e-9);
                }
                assert!(a.dot(&outside) > c);
                // normal lies in the working subspace
                assert!(a.sum().abs() < 1e-9);
            }
            SeparationAnswer::Inside => panic!("outside point accepted"),
        }
    }

    #[test]
    fn off_hull_query_returns_equality_row() {
        let p = k3();
        let x = v(&[1.0, 1.0, 1.0]);
        let SeparationAnswer::Separated { a, c } = p.separate(&x).unwrap() else {
            panic!("sum 3 is off the hull");
        };
        assert_eq!(a, v(&[1.0, 1.0, 1.0]));
        assert_eq!(c, 2.0);
    }

    #[test]
    fn boundary_distance_of_k3_centroid() {
        let p = k3();
        // facet x_e ≤ 1: slack 1/3 over ‖P_K e_e‖ = √(2/3)
        let want = (1.0 / 3.0) / (2.0f64 / 3.0).sqrt();
        assert!((p.boundary_distance(&p.centroid()).unwrap() - want).abs() < 1e-12);
        assert!(p.boundary_distance(&v(&[1.0, 1.0, 0.0])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn explicit_facets_agree_with_known_descriptions() {
        let trees = Family::spanning_trees(UndirectedGraph::complete(4)).unwrap();
        let known = Polytope::new(&trees).unwrap();
        let explicit = Family::explicit(6, trees.members().unwrap()).unwrap();
        let brute = Polytope::new(&explicit).unwrap();
        let x = known.centroid();
        let (d1, d2) = (known.boundary_distance(&x).unwrap(), brute.boundary_distance(&x).unwrap());
        assert!((d1 - d2).abs() < 1e-9, "{d1} vs {d2}");

        let pm = Family::bipartite_matchings(BipartiteGraph::complete(3)).unwrap();
        let known = Polytope::new(&pm).unwrap();
        let brute = Polytope::new(&Family::explicit(9, pm.members().unwrap()).unwrap()).unwrap();
        let x = known.centroid();
        let (d1, d2) = (known.boundary_distance(&x).unwrap(), brute.boundary_distance(&x).unwrap());
        assert!((d1 - d2).abs() < 1e-9, "{d1} vs {d2}");
    }

    #[test]
    fn segment_and_point() {
        let seg = Polytope::new(&Family::explicit(2, vec![vec![0], vec![1]]).unwrap()).unwrap();
        assert_eq!(seg.dim(), 1);
        let d = seg.boundary_distance(&v(&[0.5, 0.5])).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
        let point = Polytope::new(&Family::explicit(2, vec![vec![1]]).unwrap()).unwrap();
        assert_eq!(point.boundary_distance(&v(&[0.0, 1.0])).unwrap(), 0.0);
    }
}
