//! Fill-reducing elimination orders.
//!
//! Unknowns interior to one element only couple to dofs of that element, so
//! eliminating them first creates no fill outside the element blocks. The
//! remaining skeleton unknowns are ordered by reverse Cuthill–McKee.

use std::collections::VecDeque;

use super::sparse::CscMatrix;

/// Symmetrized adjacency lists of the pattern of `A + Aᵀ`, without the diagonal.
fn adjacency(a: &CscMatrix) -> Vec<Vec<usize>> {
    let n = a.n_cols();
    let mut adj = vec![Vec::new(); n];
    for c in 0..n {
        for &r in a.col(c).0 {
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Reverse Cuthill–McKee order of the unknowns with `include[i]`, using
/// only edges between included unknowns.
fn rcm(adj: &[Vec<usize>], include: &[bool]) -> Vec<usize> {
    let n = adj.len();
    let degree = |v: usize| adj[v].iter().filter(|&&u| include[u]).count();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut candidates: Vec<usize> = (0..n).filter(|&v| include[v]).collect();
    candidates.sort_by_key(|&v| (degree(v), v));
    for &start in &candidates {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(adj, include, start);
        visited[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| include[u] && !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// A node of near-maximal eccentricity in `start`'s component.
fn pseudo_peripheral(adj: &[Vec<usize>], include: &[bool], start: usize) -> usize {
    let mut root = start;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (depth, last_level) = bfs_levels(adj, include, root);
        if depth <= best_depth && root != start {
            break;
        }
        best_depth = depth;
        let far = last_level
            .into_iter()
            .min_by_key(|&v| (adj[v].iter().filter(|&&u| include[u]).count(), v))
            .unwrap_or(root);
        if far == root {
            break;
        }
        root = far;
    }
    root
}

fn bfs_levels(adj: &[Vec<usize>], include: &[bool], root: usize) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in &adj[v] {
                if include[u] && level[u] == usize::MAX {
                    level[u] = depth + 1;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Column elimination order: unknowns flagged in `first` in natural order,
/// then the rest by reverse Cuthill–McKee.
pub fn elimination_order(a: &CscMatrix, first: &[bool]) -> Vec<usize> {
    let adj = adjacency(a);
    let rest: Vec<bool> = first.iter().map(|&f| !f).collect();
    let mut order: Vec<usize> = (0..a.n_cols()).filter(|&i| first[i]).collect();
    order.extend(rcm(&adj, &rest));
    order
}
