//! Symmetric sparse storage on the mesh graph and an envelope (profile)
//! Cholesky factorization over a subset of free unknowns, ordered by reverse
//! Cuthill-McKee.

use std::collections::VecDeque;

use crate::mesh::Mesh;

/// CSR sparsity pattern of the P1 node graph (full symmetric storage).
#[derive(Debug, Clone)]
pub(crate) struct CsrPattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl CsrPattern {
    pub(crate) fn from_mesh(mesh: &Mesh) -> Self {
        let adj = mesh.adjacency();
        let mut row_ptr = Vec::with_capacity(adj.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for row in adj {
            cols.extend_from_slice(&row);
            row_ptr.push(cols.len());
        }
        CsrPattern { row_ptr, cols }
    }

    pub(crate) fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub(crate) fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub(crate) fn row(&self, i: usize) -> (&[usize], std::ops::Range<usize>) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], r)
    }

    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        let (cols, range) = self.row(i);
        range.start + cols.binary_search(&j).expect("entry outside the sparsity pattern")
    }

    #[allow(dead_code)]
    pub(crate) fn mul(&self, values: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let (cols, r) = self.row(i);
                cols.iter().zip(&values[r]).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }
}

/// Symbolic envelope structure for the free unknowns.
#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    /// `perm[k]` = global index of the k-th unknown in elimination order.
    perm: Vec<usize>,
    /// `slot[global]` = position in elimination order, or `usize::MAX` if fixed.
    slot: Vec<usize>,
    /// First column of row k inside the envelope.
    first: Vec<usize>,
    /// Offset of row k in the packed storage.
    offset: Vec<usize>,
    len: usize,
}

/// Numeric Cholesky factor `L` with `A = L Lᵀ`, packed by envelope rows.
#[derive(Debug, Clone)]
pub(crate) struct Factor {
    l: Vec<f64>,
}

impl Envelope {
    pub(crate) fn new(pattern: &CsrPattern, free: &[bool]) -> Self {
        let n = pattern.n();
        let perm = rcm_order(pattern, free);
        let mut slot = vec![usize::MAX; n];
        for (k, &g) in perm.iter().enumerate() {
            slot[g] = k;
        }
        let mut first = Vec::with_capacity(perm.len());
        let mut offset = Vec::with_capacity(perm.len());
        let mut len = 0;
        for (k, &g) in perm.iter().enumerate() {
            let (cols, _) = pattern.row(g);
            let f = cols
                .iter()
                .filter_map(|&j| (slot[j] != usize::MAX).then_some(slot[j]))
                .min()
                .unwrap_or(k)
                .min(k);
            first.push(f);
            offset.push(len);
            len += k - f + 1;
        }
        Envelope {
            perm,
            slot,
            first,
            offset,
            len,
        }
    }

    pub(crate) fn n_free(&self) -> usize {
        self.perm.len()
    }

    /// Factorizes the free-free block of `values`. `None` if not positive definite.
    pub(crate) fn factor(&self, pattern: &CsrPattern, values: &[f64]) -> Option<Factor> {
        let mut l = vec![0.0; self.len];
        for (k, &g) in self.perm.iter().enumerate() {
            let (cols, r) = pattern.row(g);
            for (&j, &v) in cols.iter().zip(&values[r]) {
                let sj = self.slot[j];
                if sj != usize::MAX && sj <= k {
                    l[self.offset[k] + sj - self.first[k]] += v;
                }
            }
        }
        for i in 0..self.n_free() {
            let (fi, oi) = (self.first[i], self.offset[i]);
            for j in fi..i {
                let (fj, oj) = (self.first[j], self.offset[j]);
                let start = fi.max(fj);
                let mut s = l[oi + j - fi];
                for k in start..j {
                    s -= l[oi + k - fi] * l[oj + k - fj];
                }
                l[oi + j - fi] = s / l[oj + j - fj];
            }
            let mut d = l[oi + i - fi];
            for k in fi..i {
                let v = l[oi + k - fi];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            l[oi + i - fi] = d.sqrt();
        }
        Some(Factor { l })
    }

    /// Solves `A x = b` on the free unknowns; fixed entries of the result are zero.
    pub(crate) fn solve(&self, factor: &Factor, b: &[f64]) -> Vec<f64> {
        let n = self.n_free();
        let l = &factor.l;
        let mut y: Vec<f64> = self.perm.iter().map(|&g| b[g]).collect();
        for i in 0..n {
            let (fi, oi) = (self.first[i], self.offset[i]);
            let mut s = y[i];
            for k in fi..i {
                s -= l[oi + k - fi] * y[k];
            }
            y[i] = s / l[oi + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, oi) = (self.first[i], self.offset[i]);
            y[i] /= l[oi + i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= l[oi + k - fi] * yi;
            }
        }
        let mut x = vec![0.0; self.slot.len()];
        for (k, &g) in self.perm.iter().enumerate() {
            x[g] = y[k];
        }
        x
    }
}

/// Reverse Cuthill-McKee over the free nodes, one BFS per connected component,
/// each started from a pseudo-peripheral node. Deterministic.
fn rcm_order(pattern: &CsrPattern, free: &[bool]) -> Vec<usize> {
    let n = pattern.n();
    let degree: Vec<usize> = (0..n)
        .map(|i| pattern.row(i).0.iter().filter(|&&j| j != i && free[j]).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        // returns the last node reached (a far node)
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        let mut last = start;
        while let Some(v) = q.pop_front() {
            out.push(v);
            last = v;
            let mut nb: Vec<usize> = pattern
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&j| free[j] && !visited[j])
                .collect();
            nb.sort_by_key(|&j| (degree[j], j));
            for j in nb {
                visited[j] = true;
                q.push_back(j);
            }
        }
        last
    };
    for s in 0..n {
        if !free[s] || visited[s] {
            continue;
        }
        // find a pseudo-peripheral start by two BFS sweeps on a scratch copy
        let mut scratch = visited.clone();
        let mut tmp = Vec::new();
        let far = bfs(s, &mut scratch, &mut tmp);
        let mut scratch = visited.clone();
        tmp.clear();
        let start = bfs(far, &mut scratch, &mut tmp);
        let mut comp = Vec::new();
        bfs(start, &mut visited, &mut comp);
        order.extend(comp);
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk, build_square};

    fn laplacian_plus_mass(mesh: &Mesh, pattern: &CsrPattern) -> Vec<f64> {
        let mut v = vec![0.0; pattern.nnz()];
        for c in 0..mesh.n_cells() {
            let ids = mesh.cell(c);
            let g = mesh.cell_basis_grads(c);
            for (a, &i) in ids.iter().enumerate() {
                for (b, &j) in ids.iter().enumerate() {
                    let k = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                    v[pattern.index(i, j)] += mesh.cell_measure(c) * k;
                }
                v[pattern.index(i, i)] += 0.1 * mesh.cell_measure(c);
            }
        }
        v
    }

    #[test]
    fn envelope_solve_matches_product() {
        for mesh in [build_disk(0.2).unwrap(), build_square(0.2).unwrap()] {
            let pattern = CsrPattern::from_mesh(&mesh);
            let vals = laplacian_plus_mass(&mesh, &pattern);
            for free in [
                vec![true; mesh.n_nodes()],
                mesh.node_is_boundary().iter().map(|b| !b).collect(),
            ] {
                let env = Envelope::new(&pattern, &free);
                let fac = env.factor(&pattern, &vals).expect("SPD");
                let x_true: Vec<f64> = (0..mesh.n_nodes())
                    .map(|i| if free[i] { (i as f64 * 0.37).sin() } else { 0.0 })
                    .collect();
                let b = pattern.mul(&vals, &x_true);
                let x = env.solve(&fac, &b);
                for i in 0..mesh.n_nodes() {
                    assert!((x[i] - x_true[i]).abs() < 1e-10, "node {i}");
                }
            }
        }
    }

    #[test]
    fn indefinite_is_reported() {
        let mesh = build_square(0.5).unwrap();
        let pattern = CsrPattern::from_mesh(&mesh);
        let vals: Vec<f64> = laplacian_plus_mass(&mesh, &pattern).iter().map(|v| -v).collect();
        let env = Envelope::new(&pattern, &vec![true; mesh.n_nodes()]);
        assert!(env.factor(&pattern, &vals).is_none());
    }
}
