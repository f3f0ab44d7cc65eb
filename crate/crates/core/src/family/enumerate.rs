use super::{BipartiteGraph, Family, FamilyKind, Member, UndirectedGraph};
use crate::error::{Error, Result};

pub(super) fn members(family: &Family, cap: usize) -> Result<Vec<Member>> {
    let mut out = Vec::new();
    match family.kind() {
        FamilyKind::Explicit { members, .. } => {
            if members.len() > cap {
                return Err(Error::CapExceeded { cap });
            }
            out = members.clone();
        }
        FamilyKind::SpanningTrees(g) => {
            let mut chosen = Vec::new();
            let labels: Vec<usize> = (0..g.vertices).collect();
            trees(g, 0, &labels, &mut chosen, &mut out, cap)?;
        }
        FamilyKind::BipartitePerfectMatchings(g) => matchings(g, cap, &mut out)?,
        FamilyKind::CycleCovers(g) => matchings(&g.double_cover(), cap, &mut out)?,
    }
    Ok(out)
}

/// Include/exclude recursion over edges in index order. `labels` maps each
/// vertex to its component in the current forest.
fn trees(
    g: &UndirectedGraph,
    next: usize,
    labels: &[usize],
    chosen: &mut Vec<usize>,
    out: &mut Vec<Member>,
    cap: usize,
) -> Result<()> {
    let need = g.vertices - 1;
    if chosen.len() == need {
        if out.len() == cap {
            return Err(Error::CapExceeded { cap });
        }
        out.push(chosen.clone());
        return Ok(());
    }
    if next == g.edges.len() || g.edges.len() - next < need - chosen.len() {
        return Ok(());
    }
    let (u, v) = g.edges[next];
    let (lu, lv) = (labels[u], labels[v]);
    if lu != lv {
        let merged: Vec<usize> = labels.iter().map(|&l| if l == lv { lu } else { l }).collect();
        chosen.push(next);
        trees(g, next + 1, &merged, chosen, out, cap)?;
        chosen.pop();
    }
    trees(g, next + 1, labels, chosen, out, cap)
}

/// Perfect matchings by assigning left vertices in order; members are sorted
/// edge-index lists.
fn matchings(g: &BipartiteGraph, cap: usize, out: &mut Vec<Member>) -> Result<()> {
    let mut by_left = vec![Vec::new(); g.left];
    for (idx, &(i, j)) in g.edges.iter().enumerate() {
        by_left[i].push((j, idx));
    }
    let mut used = vec![false; g.right];
    let mut chosen = Vec::with_capacity(g.left);
    assign(&by_left, 0, &mut used, &mut chosen, out, cap)
}

fn assign(
    by_left: &[Vec<(usize, usize)>],
    i: usize,
    used: &mut [bool],
    chosen: &mut Vec<usize>,
    out: &mut Vec<Member>,
    cap: usize,
) -> Result<()> {
    if i == by_left.len() {
        if out.len() == cap {
            return Err(Error::CapExceeded { cap });
        }
        let mut m = chosen.clone();
        m.sort_unstable();
        out.push(m);
        return Ok(());
    }
    for &(j, idx) in &by_left[i] {
        if used[j] {
            continue;
        }
        used[j] = true;
        chosen.push(idx);
        assign(by_left, i + 1, used, chosen, out, cap)?;
        chosen.pop();
        used[j] = false;
    }
    Ok(())
}
