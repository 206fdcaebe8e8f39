use std::collections::VecDeque;

use super::LinsolveError;
use crate::fem::SparseMatrix;

/// Reverse Cuthill–McKee ordering of the symmetrized pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    let bfs_last = |root: usize, visited: &[bool]| -> (usize, usize) {
        // returns (last node reached, eccentricity)
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        dist[root] = 0;
        q.push_back(root);
        let mut last = root;
        while let Some(v) = q.pop_front() {
            if dist[v] > dist[last] || (dist[v] == dist[last] && degree[v] < degree[last]) {
                last = v;
            }
            for &w in &adj[v] {
                if !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (last, dist[last])
    };

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start
        let mut root = seed;
        let (mut far, mut ecc) = bfs_last(root, &visited);
        for _ in 0..8 {
            let (f2, e2) = bfs_last(far, &visited);
            if e2 <= ecc {
                break;
            }
            root = far;
            far = f2;
            ecc = e2;
        }
        let _ = far;
        let mut q = VecDeque::new();
        visited[root] = true;
        q.push_back(root);
        let mut nbrs = Vec::new();
        while let Some(v) = q.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// LU factorization without pivoting in envelope (profile) storage, on a
/// symmetric-pattern matrix reordered by reverse Cuthill–McKee.
#[derive(Debug, Clone)]
pub struct EnvelopeLu {
    n: usize,
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self, LinsolveError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinsolveError::Dimension("envelope LU needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for &jold in a.row(old).0 {
                let j = inv[jold];
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i]);
        }
        let size = offset[n];
        let mut lower = vec![0.0; size];
        let mut upper = vec![0.0; size];
        let mut diag = vec![0.0; n];
        for old in 0..n {
            let i = inv[old];
            let (cols, vals) = a.row(old);
            for (&jold, &v) in cols.iter().zip(vals) {
                let j = inv[jold];
                if j < i {
                    lower[offset[i] + j - first[i]] += v;
                } else if j > i {
                    upper[offset[j] + i - first[j]] += v;
                } else {
                    diag[i] += v;
                }
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                // U[j][i] = A[j][i] - Σ L[j][k] U[k][i]
                let mut su = upper[offset[i] + j - fi];
                let mut sl = lower[offset[i] + j - fi];
                let lj = &lower[offset[j] + k0 - fj..offset[j] + j - fj];
                let ui = &upper[offset[i] + k0 - fi..offset[i] + j - fi];
                let li = &lower[offset[i] + k0 - fi..offset[i] + j - fi];
                let uj = &upper[offset[j] + k0 - fj..offset[j] + j - fj];
                for t in 0..lj.len() {
                    su -= lj[t] * ui[t];
                    sl -= li[t] * uj[t];
                }
                upper[offset[i] + j - fi] = su;
                lower[offset[i] + j - fi] = sl / diag[j];
            }
            let li = &lower[offset[i]..offset[i + 1]];
            let ui = &upper[offset[i]..offset[i + 1]];
            let s: f64 = li.iter().zip(ui).map(|(l, u)| l * u).sum();
            diag[i] -= s;
            if diag[i].abs() <= 1e-14 * scale || !diag[i].is_finite() {
                return Err(LinsolveError::Singular(format!(
                    "zero pivot at row {}",
                    perm[i]
                )));
            }
        }
        Ok(Self {
            n,
            perm,
            inv,
            first,
            offset,
            lower,
            upper,
            diag,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of stored off-diagonal entries in each triangle.
    pub fn envelope_size(&self) -> usize {
        self.offset[self.n]
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let l = &self.lower[self.offset[i]..self.offset[i + 1]];
            let s: f64 = l.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let yi = y[i];
            let fi = self.first[i];
            let u = &self.upper[self.offset[i]..self.offset[i + 1]];
            for (k, uk) in u.iter().enumerate() {
                y[fi + k] -= uk * yi;
            }
        }
        for i in 0..n {
            x[i] = y[self.inv[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rcm_is_permutation() {
        let a = SparseMatrix::from_triplets(
            5,
            5,
            &[(0, 4, 1.0), (4, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (3, 3, 1.0)],
        );
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn lu_solves_diagonally_dominant(entries in prop::collection::vec((0usize..12, 0usize..12, -1.0f64..1.0), 0..40),
                                         b in prop::collection::vec(-1.0f64..1.0, 12)) {
            let n = 12;
            let mut t = entries.clone();
            for i in 0..n {
                t.push((i, i, 25.0));
            }
            let a = SparseMatrix::from_triplets(n, n, &t);
            let lu = EnvelopeLu::factor(&a).unwrap();
            let mut x = vec![0.0; n];
            lu.solve(&b, &mut x);
            let r = a.mul(&x);
            for (ri, bi) in r.iter().zip(&b) {
                prop_assert!((ri - bi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_pivot_reported() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(EnvelopeLu::factor(&a), Err(LinsolveError::Singular(_))));
    }
}
