use serde::{Deserialize, Serialize};

/// Undirected multigraph; edge order fixes the ground-set indexing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Directed multigraph; arc order fixes the ground-set indexing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedGraph {
    pub vertices: usize,
    pub arcs: Vec<(usize, usize)>,
}

/// Bipartite graph with edges `(left, right)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    pub left: usize,
    pub right: usize,
    pub edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Self {
        Self { vertices, edges }
    }

    /// Complete graph `K_n` with edges in lexicographic order.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self { vertices: n, edges }
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices == 0 {
            return false;
        }
        let mut dsu = Dsu::new(self.vertices);
        let mut parts = self.vertices;
        for &(u, v) in &self.edges {
            if dsu.union(u, v) {
                parts -= 1;
            }
        }
        parts == 1
    }
}

impl DirectedGraph {
    pub fn new(vertices: usize, arcs: Vec<(usize, usize)>) -> Self {
        Self { vertices, arcs }
    }

    /// Complete digraph without self-loops, arcs in lexicographic order.
    pub fn complete(n: usize) -> Self {
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    arcs.push((u, v));
                }
            }
        }
        Self { vertices: n, arcs }
    }

    /// Bipartite double cover: arc `(u, v)` becomes edge `u_L – v_R`, keeping
    /// the index.
    pub fn double_cover(&self) -> BipartiteGraph {
        BipartiteGraph {
            left: self.vertices,
            right: self.vertices,
            edges: self.arcs.clone(),
        }
    }
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize)>) -> Self {
        Self { left, right, edges }
    }

    /// `K_{n,n}` with edges in row-major order.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                edges.push((i, j));
            }
        }
        Self {
            left: n,
            right: n,
            edges,
        }
    }

    /// Whether the graph restricted to `allowed` edges has a perfect matching.
    pub(crate) fn has_perfect_matching(&self, allowed: &[bool], skip_left: Option<usize>, skip_right: Option<usize>) -> bool {
        let n = self.left;
        let mut adj = vec![Vec::new(); n];
        for (idx, &(i, j)) in self.edges.iter().enumerate() {
            if allowed[idx] && Some(i) != skip_left && Some(j) != skip_right {
                adj[i].push(j);
            }
        }
        let mut match_right: Vec<Option<usize>> = vec![None; self.right];
        for i in 0..n {
            if Some(i) == skip_left {
                continue;
            }
            let mut seen = vec![false; self.right];
            if !augment(i, &adj, &mut seen, &mut match_right) {
                return false;
            }
        }
        true
    }
}

fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], match_right: &mut [Option<usize>]) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let free = match match_right[v] {
            None => true,
            Some(w) => augment(w, adj, seen, match_right),
        };
        if free {
            match_right[v] = Some(u);
            return true;
        }
    }
    false
}

/// Union–find with path halving.
#[derive(Debug, Clone)]
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if the two elements were in different sets.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Blocks (biconnected components) of an undirected multigraph, as lists of
/// edge indices. Self-loops are reported separately.
pub(crate) fn blocks(g: &UndirectedGraph) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = g.vertices;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut loops = Vec::new();
    for (idx, &(u, v)) in g.edges.iter().enumerate() {
        if u == v {
            loops.push(idx);
        } else {
            adj[u].push((v, idx));
            adj[v].push((u, idx));
        }
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut stack: Vec<usize> = Vec::new();
    let mut out = Vec::new();

    // Iterative DFS: frames hold (vertex, edge used to enter, next adjacency slot).
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut frames: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        while let Some(&mut (u, parent_edge, ref mut slot)) = frames.last_mut() {
            if *slot < adj[u].len() {
                let (w, e) = adj[u][*slot];
                *slot += 1;
                if Some(e) == parent_edge {
                    continue;
                }
                if disc[w] == usize::MAX {
                    stack.push(e);
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    frames.push((w, Some(e), 0));
                } else if disc[w] < disc[u] {
                    stack.push(e);
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                frames.pop();
                if let Some(&(p, _, _)) = frames.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] >= disc[p] {
                        let e_in = parent_edge.expect("non-root frame has an entry edge");
                        let mut block = Vec::new();
                        while let Some(e) = stack.pop() {
                            block.push(e);
                            if e == e_in {
                                break;
                            }
                        }
                        block.sort_unstable();
                        out.push(block);
                    }
                }
            }
        }
    }
    out.sort();
    (out, loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_of_triangle_with_pendant() {
        // triangle 0-1-2 plus bridge 2-3
        let g = UndirectedGraph::new(4, vec![(0, 1), (1, 2), (0, 2), (2, 3)]);
        let (b, loops) = blocks(&g);
        assert!(loops.is_empty());
        assert_eq!(b, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn blocks_with_parallel_edges_and_loop() {
        let g = UndirectedGraph::new(2, vec![(0, 1), (0, 1), (1, 1)]);
        let (b, loops) = blocks(&g);
        assert_eq!(b, vec![vec![0, 1]]);
        assert_eq!(loops, vec![2]);
    }

    #[test]
    fn matching_check() {
        let g = BipartiteGraph::new(2, 2, vec![(0, 0), (1, 1), (0, 1)]);
        let all = vec![true; 3];
        assert!(g.has_perfect_matching(&all, None, None));
        // edge (0,1) forces right 1 taken by left 0, so left 1 is stranded
        assert!(!g.has_perfect_matching(&all, Some(0), Some(1)));
        assert!(g.has_perfect_matching(&all, Some(0), Some(0)));
    }
}
