//! Combinatorial families `M ⊆ {0,1}^m`, their equality systems, and
//! membership/separation over the convex hull of their indicator vectors.

mod enumerate;
mod equality;
mod graph;
mod lp;
mod polytope;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use equality::EqualitySystem;
pub use graph::{BipartiteGraph, DirectedGraph, UndirectedGraph};
pub use polytope::{Polytope, SeparationAnswer};


/// Default bound on the number of members enumerated.
pub const DEFAULT_CAP: usize = 1_000_000;

/// A member of a family: sorted ground-set indices.
pub type Member = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    Explicit { m: usize, members: Vec<Member> },
    SpanningTrees(UndirectedGraph),
    BipartitePerfectMatchings(BipartiteGraph),
    CycleCovers(DirectedGraph),
}

/// A validated combinatorial family over the ground set `[m]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FamilyKind", into = "FamilyKind")]
pub struct Family {
    kind: FamilyKind,
    m: usize,
}

impl TryFrom<FamilyKind> for Family {
    type Error = Error;

    fn try_from(kind: FamilyKind) -> Result<Self> {
        Family::new(kind)
    }
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        f.kind
    }
}

impl Family {
    pub fn new(kind: FamilyKind) -> Result<Self> {
        let m = match &kind {
            FamilyKind::Explicit { m, members } => {
                let mut seen = std::collections::BTreeSet::new();
                for member in members {
                    if member.iter().any(|&e| e >= *m) {
                        return Err(Error::InvalidFamily(format!("member {member:?} exceeds ground set of size {m}")));
                    }
                    if member.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidFamily(format!(
                            "member {member:?} must be strictly increasing"
                        )));
                    }
                    if !seen.insert(member.clone()) {
                        return Err(Error::InvalidFamily(format!("duplicate member {member:?}")));
                    }
                }
                *m
            }
            FamilyKind::SpanningTrees(g) => {
                check_endpoints(g.vertices, g.vertices, &g.edges)?;
                if !g.is_connected() {
                    return Err(Error::InvalidFamily("spanning-tree graph must be connected".into()));
                }
                g.edges.len()
            }
            FamilyKind::BipartitePerfectMatchings(g) => {
                if g.left != g.right {
                    return Err(Error::InvalidFamily(format!(
                        "bipartite sides differ ({} vs {})",
                        g.left, g.right
                    )));
                }
                check_endpoints(g.left, g.right, &g.edges)?;
                g.edges.len()
            }
            FamilyKind::CycleCovers(g) => {
                check_endpoints(g.vertices, g.vertices, &g.arcs)?;
                let mut out_deg = vec![0usize; g.vertices];
                let mut in_deg = vec![0usize; g.vertices];
                for &(u, v) in &g.arcs {
                    out_deg[u] += 1;
                    in_deg[v] += 1;
                }
                if out_deg.iter().chain(&in_deg).any(|&d| d == 0) {
                    return Err(Error::InvalidFamily(
                        "every vertex needs in- and out-degree at least 1".into(),
                    ));
                }
                g.arcs.len()
            }
        };
        Ok(Self { kind, m })
    }

    pub fn explicit(m: usize, members: Vec<Member>) -> Result<Self> {
        let members = members
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s
            })
            .collect();
        Self::new(FamilyKind::Explicit { m, members })
    }

    pub fn spanning_trees(g: UndirectedGraph) -> Result<Self> {
        Self::new(FamilyKind::SpanningTrees(g))
    }

    pub fn bipartite_matchings(g: BipartiteGraph) -> Result<Self> {
        Self::new(FamilyKind::BipartitePerfectMatchings(g))
    }

    pub fn cycle_covers(g: DirectedGraph) -> Result<Self> {
        Self::new(FamilyKind::CycleCovers(g))
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Ground-set size.
    pub fn m(&self) -> usize {
        self.m
    }

    /// All members, each exactly once, in a deterministic order.
    pub fn members(&self) -> Result<Vec<Member>> {
        self.members_with_cap(DEFAULT_CAP)
    }

    pub fn members_with_cap(&self, cap: usize) -> Result<Vec<Member>> {
        enumerate::members(self, cap)
    }

    /// All members as 0/1 indicator vectors.
    pub fn enumerate(&self) -> Result<Vec<DVector<f64>>> {
        self.enumerate_with_cap(DEFAULT_CAP)
    }

    pub fn enumerate_with_cap(&self, cap: usize) -> Result<Vec<DVector<f64>>> {
        Ok(self
            .members_with_cap(cap)?
            .iter()
            .map(|s| indicator(self.m, s))
            .collect())
    }

    /// Maximal linearly independent equalities satisfied by every member.
    pub fn equality_system(&self) -> Result<EqualitySystem> {
        equality::equality_system(self)
    }

    /// Exact average of the indicator vectors.
    pub fn vertex_centroid(&self) -> Result<DVector<f64>> {
        let members = self.members()?;
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let mut c = DVector::zeros(self.m);
        for s in &members {
            for &e in s {
                c[e] += 1.0;
            }
        }
        Ok(c / members.len() as f64)
    }

    /// Separation over the convex hull of the members.
    pub fn hull_separation(&self, x: &DVector<f64>) -> Result<SeparationAnswer> {
        Polytope::new(self)?.separate(x)
    }
}

/// Indicator vector of a member.
pub fn indicator(m: usize, member: &[usize]) -> DVector<f64> {
    let mut v = DVector::zeros(m);
    for &e in member {
        v[e] = 1.0;
    }
    v
}

fn check_endpoints(left: usize, right: usize, edges: &[(usize, usize)]) -> Result<()> {
    for &(u, v) in edges {
        if u >= left || v >= right {
            return Err(Error::InvalidFamily(format!("edge ({u}, {v}) references a missing vertex")));
        }
    }
    Ok(())
}

/// JSON input schemas. The key set selects the family kind: undirected
/// graphs yield spanning trees, bipartite graphs perfect matchings, directed
/// graphs cycle covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyFile {
    Bipartite {
        left: usize,
        right: usize,
        edges: Vec<(usize, usize)>,
    },
    Undirected {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Directed {
        vertices: usize,
        arcs: Vec<(usize, usize)>,
    },
    Explicit {
        m: usize,
        members: Vec<Vec<usize>>,
    },
}

impl FamilyFile {
    pub fn into_family(self) -> Result<Family> {
        match self {
            FamilyFile::Bipartite { left, right, edges } => {
                Family::bipartite_matchings(BipartiteGraph::new(left, right, edges))
            }
            FamilyFile::Undirected { vertices, edges } => {
                Family::spanning_trees(UndirectedGraph::new(vertices, edges))
            }
            FamilyFile::Directed { vertices, arcs } => Family::cycle_covers(DirectedGraph::new(vertices, arcs)),
            FamilyFile::Explicit { m, members } => Family::explicit(m, members),
        }
    }

    pub fn from_family(family: &Family) -> Self {
        match family.kind().clone() {
            FamilyKind::Explicit { m, members } => FamilyFile::Explicit { m, members },
            FamilyKind::SpanningTrees(g) => FamilyFile::Undirected {
                vertices: g.vertices,
                edges: g.edges,
            },
            FamilyKind::BipartitePerfectMatchings(g) => FamilyFile::Bipartite {
                left: g.left,
                right: g.right,
                edges: g.edges,
            },
            FamilyKind::CycleCovers(g) => FamilyFile::Directed {
                vertices: g.vertices,
                arcs: g.arcs,
            },
        }
    }
}
