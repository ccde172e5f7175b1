use std::collections::VecDeque;

use super::CsrMatrix;

/// Reverse Cuthill–McKee ordering of the symmetric sparsity graph of `a`.
///
/// Returns `perm` with `perm[new] = old`. Each connected component is started
/// from a pseudo-peripheral node found by repeated breadth-first sweeps.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.sort_by_key(|&i| (degree[i], i));

    for &seed in &nodes {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let (mut ecc, mut last_level) = bfs_levels(root, adj);
    for _ in 0..8 {
        let cand = *last_level.iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let (e, lvl) = bfs_levels(cand, adj);
        if e > ecc {
            root = cand;
            ecc = e;
            last_level = lvl;
        } else {
            break;
        }
    }
    root
}

/// Eccentricity of `root` within its component and the nodes of the last level.
fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut dist = std::collections::HashMap::new();
    dist.insert(root, 0usize);
    let mut queue = VecDeque::from([root]);
    let mut ecc = 0;
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        ecc = ecc.max(d);
        for &w in &adj[v] {
            if !dist.contains_key(&w) {
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    let last = dist.iter().filter(|(_, &d)| d == ecc).map(|(&v, _)| v).collect();
    (ecc, last)
}
