//! Reverse Cuthill-McKee fill-reducing ordering.

use super::sparse::CscMatrix;

/// RCM ordering of the symmetric sparsity pattern of `a` (given as its upper
/// triangle). Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CscMatrix) -> Vec<usize> {
    let n = a.ncols;
    // Build full adjacency from the upper triangle.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for p in a.colptr[j]..a.colptr[j + 1] {
            let i = a.rowind[p];
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let deg: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut queue: std::collections::VecDeque<usize> = Default::default();

    for start in 0..n {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(start, &adj, &deg);
        visited[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_unstable_by_key(|&v| deg[v]);
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], deg: &[usize]) -> usize {
    let mut root = start;
    let mut last_ecc = 0usize;
    for _ in 0..4 {
        let (far, ecc) = bfs_far(root, adj, deg);
        if ecc <= last_ecc {
            break;
        }
        last_ecc = ecc;
        root = far;
    }
    root
}

fn bfs_far(root: usize, adj: &[Vec<usize>], deg: &[usize]) -> (usize, usize) {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    dist[root] = 0;
    let mut q = std::collections::VecDeque::new();
    q.push_back(root);
    let mut far = root;
    let mut ecc = 0;
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                if dist[v] > ecc || (dist[v] == ecc && deg[v] < deg[far]) {
                    ecc = dist[v];
                    far = v;
                }
                q.push_back(v);
            }
        }
    }
    (far, ecc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;

    #[test]
    fn rcm_is_a_permutation() {
        // 1D chain graph: RCM should give a bandwidth-1 ordering.
        let n = 10;
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
            if i + 1 < n {
                t.push(i, i + 1, 1.0);
            }
        }
        let perm = reverse_cuthill_mckee(&t.to_csc());
        let mut seen = vec![false; n];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        // Bandwidth of the permuted chain stays 1.
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        for i in 0..n - 1 {
            assert_eq!((iperm[i] as isize - iperm[i + 1] as isize).abs(), 1);
        }
    }
}
