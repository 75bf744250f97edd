use super::sparse::SparseSym;
use crate::error::{Error, Result};

/// Sparse Cholesky factorization `P Q P' = L L'` with an envelope (profile)
/// storage scheme and a reverse Cuthill-McKee fill-reducing permutation.
///
/// Densely coupled indices (fixed effects in a joint Hessian) can be forced
/// to the end of the ordering so their full rows sit at the bottom of the
/// profile instead of widening every envelope row.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    perm: Vec<usize>,     // new -> old
    inv_perm: Vec<usize>, // old -> new
    first: Vec<usize>,    // envelope start column per (permuted) row
    rows: Vec<Vec<f64>>,  // L rows, columns first[i]..=i
    jitter: f64,
}

/// Escalating diagonal jitter: start at `initial * max_diag`, multiply by 10
/// until `max * max_diag`, then fail. The first attempt applies no jitter so
/// well-conditioned matrices factor exactly.
#[derive(Debug, Clone, Copy)]
pub struct JitterPolicy {
    pub initial: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            initial: 1e-10,
            max: 1e-6,
        }
    }
}

impl CholeskyFactor {
    pub fn new(q: &SparseSym, force_last: &[usize]) -> Result<Self> {
        Self::with_policy(q, force_last, JitterPolicy::default())
    }

    pub fn with_policy(q: &SparseSym, force_last: &[usize], policy: JitterPolicy) -> Result<Self> {
        let n = q.dim();
        let perm = rcm_ordering(q, force_last);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }

        // Envelope start per permuted row.
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in q.iter_upper() {
            let (pi, pj) = (inv_perm[i], inv_perm[j]);
            let (lo, hi) = (pi.min(pj), pi.max(pj));
            if lo < first[hi] {
                first[hi] = lo;
            }
        }

        let max_diag = q.max_diag().max(f64::MIN_POSITIVE);
        let mut jitter = 0.0;
        loop {
            match Self::try_factor(q, &inv_perm, &first, jitter) {
                Ok(rows) => {
                    return Ok(CholeskyFactor {
                        perm,
                        inv_perm,
                        first,
                        rows,
                        jitter,
                    })
                }
                Err(e) => {
                    let next = if jitter == 0.0 {
                        policy.initial * max_diag
                    } else {
                        jitter * 10.0
                    };
                    if next > policy.max * max_diag {
                        return Err(e);
                    }
                    jitter = next;
                }
            }
        }
    }

    fn try_factor(
        q: &SparseSym,
        inv_perm: &[usize],
        first: &[usize],
        jitter: f64,
    ) -> Result<Vec<Vec<f64>>> {
        let n = q.dim();
        // Scatter A into the envelope (permuted indexing).
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - first[i] + 1]).collect();
        for (i, j, v) in q.iter_upper() {
            let (pi, pj) = (inv_perm[i], inv_perm[j]);
            let (lo, hi) = (pi.min(pj), pi.max(pj));
            rows[hi][lo - first[hi]] = v;
        }
        if jitter > 0.0 {
            for i in 0..n {
                let k = i - first[i];
                rows[i][k] += jitter;
            }
        }

        // In-place envelope factorization.
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = rows[i][j - fi];
                for k in lo..j {
                    s -= rows[i][k - fi] * rows[j][k - fj];
                }
                rows[i][j - fi] = s / rows[j][j - fj];
            }
            let mut d = rows[i][i - fi];
            for k in fi..i {
                let l = rows[i][k - fi];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { leading_minor: i });
            }
            rows[i][i - fi] = d.sqrt();
        }
        Ok(rows)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Diagonal jitter that was actually applied (absolute value).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `log det Q` (of the jittered matrix if jitter was needed).
    pub fn logdet(&self) -> f64 {
        (0..self.dim())
            .map(|i| 2.0 * self.rows[i][i - self.first[i]].ln())
            .sum()
    }

    /// Solves `Q x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // permute
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        self.forward_in_place(&mut y);
        self.backward_in_place(&mut y);
        // unpermute
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Solves `L y = Pb` in place (permuted coordinates).
    fn forward_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.rows[i][k - fi] * y[k];
            }
            y[i] = s / self.rows[i][i - fi];
        }
    }

    /// Solves `L' x = y` in place (permuted coordinates).
    fn backward_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let fi = self.first[i];
            let x = y[i] / self.rows[i][i - fi];
            y[i] = x;
            for k in fi..i {
                y[k] -= self.rows[i][k - fi] * x;
            }
        }
    }

    /// Maps a standard-normal vector `z` to a sample `x = P' L^-T z`, which
    /// has covariance `Q^-1`.
    pub fn sample_from_std_normal(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(z.len(), n);
        let mut y = z.to_vec();
        self.backward_in_place(&mut y);
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Marginal variances `diag(Q^-1)`, in original indexing.
    pub fn diag_inverse(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        let mut w = vec![0.0; n];
        for pi in 0..n {
            // w = L^-1 e_pi, supported on rows >= pi
            for it in w.iter_mut().skip(pi) {
                *it = 0.0;
            }
            w[pi] = 1.0 / self.rows[pi][pi - self.first[pi]];
            for i in (pi + 1)..n {
                let fi = self.first[i];
                if fi > pi {
                    // envelope rows starting after pi contribute only via
                    // columns >= fi; sum runs over the envelope anyway
                }
                let mut s = 0.0;
                for k in fi.max(pi)..i {
                    s -= self.rows[i][k - fi] * w[k];
                }
                w[i] = s / self.rows[i][i - fi];
            }
            let norm2: f64 = w[pi..].iter().map(|v| v * v).sum();
            out[self.perm[pi]] = norm2;
        }
        out
    }

    /// Quadratic form `a' Q^-1 a` for a sparse vector `a`, via one forward
    /// substitution.
    pub fn inverse_quad_form(&self, a: &[(usize, f64)]) -> f64 {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for &(idx, v) in a {
            y[self.inv_perm[idx]] = v;
        }
        self.forward_in_place(&mut y);
        y.iter().map(|v| v * v).sum()
    }
}

/// Reverse Cuthill-McKee ordering of the sparsity graph of `q`, with
/// `force_last` indices appended at the end (in the given order).
fn rcm_ordering(q: &SparseSym, force_last: &[usize]) -> Vec<usize> {
    let n = q.dim();
    let adj = q.neighbor_lists();
    let mut excluded = vec![false; n];
    for &i in force_last {
        excluded[i] = true;
    }
    let degree: Vec<usize> = (0..n).map(|i| adj[i].len()).collect();

    let mut visited = excluded.clone();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    loop {
        // next unvisited vertex of minimum degree
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i));
        let Some(mut start) = start else { break };

        // pseudo-peripheral refinement: hop to the farthest min-degree vertex
        for _ in 0..2 {
            let far = bfs_farthest(start, &adj, &excluded, &degree);
            if far == start {
                break;
            }
            start = far;
        }

        // Cuthill-McKee BFS from start
        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_unstable_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                order.push(u);
            }
        }
        order[begin..].reverse();
    }
    order.extend_from_slice(force_last);
    debug_assert_eq!(order.len(), n);
    order
}

fn bfs_farthest(start: usize, adj: &[Vec<usize>], excluded: &[bool], degree: &[usize]) -> usize {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut last_level = vec![start];
    let mut max_d = 0;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !excluded[u] && dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                if dist[u] > max_d {
                    max_d = dist[u];
                    last_level.clear();
                }
                if dist[u] == max_d {
                    last_level.push(u);
                }
                queue.push_back(u);
            }
        }
    }
    *last_level
        .iter()
        .min_by_key(|&&u| (degree[u], u))
        .unwrap_or(&start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmrf::sparse::SparseSymBuilder;

    fn dense_cholesky_logdet(m: &[Vec<f64>]) -> Option<f64> {
        let n = m.len();
        let mut a: Vec<Vec<f64>> = m.to_vec();
        let mut logdet = 0.0;
        for i in 0..n {
            for j in 0..i {
                let s = a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>();
                a[i][j] = s / a[j][j];
            }
            let d = a[i][i] - (0..i).map(|k| a[i][k] * a[i][k]).sum::<f64>();
            if d <= 0.0 {
                return None;
            }
            a[i][i] = d.sqrt();
            logdet += 2.0 * d.ln();
        }
        Some(logdet)
    }

    fn lattice_matrix(nx: usize, ny: usize) -> SparseSym {
        let id = |i: usize, j: usize| j * nx + i;
        let mut b = SparseSymBuilder::new(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                b.add(id(i, j), id(i, j), 4.5);
                if i + 1 < nx {
                    b.add(id(i, j), id(i + 1, j), -1.0);
                }
                if j + 1 < ny {
                    b.add(id(i, j), id(i, j + 1), -1.0);
                }
            }
        }
        b.build()
    }

    #[test]
    fn logdet_matches_dense() {
        let q = lattice_matrix(6, 5);
        let f = CholeskyFactor::new(&q, &[]).unwrap();
        let want = dense_cholesky_logdet(&q.to_dense()).unwrap();
        assert!((f.logdet() - want).abs() < 1e-10, "{} vs {}", f.logdet(), want);
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn solve_matches_mat_vec() {
        let q = lattice_matrix(5, 4);
        let f = CholeskyFactor::new(&q, &[]).unwrap();
        let x: Vec<f64> = (0..q.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = q.mat_vec(&x);
        let got = f.solve(&b);
        for i in 0..q.dim() {
            assert!((got[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn diag_inverse_matches_dense_solves() {
        let q = lattice_matrix(4, 3);
        let f = CholeskyFactor::new(&q, &[]).unwrap();
        let diag = f.diag_inverse();
        for i in 0..q.dim() {
            let mut e = vec![0.0; q.dim()];
            e[i] = 1.0;
            let col = f.solve(&e);
            assert!((diag[i] - col[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn inverse_quad_form_matches_solve() {
        let q = lattice_matrix(4, 4);
        let f = CholeskyFactor::new(&q, &[]).unwrap();
        let a = vec![(0usize, 1.5), (5, -0.5), (11, 2.0)];
        let mut dense_a = vec![0.0; q.dim()];
        for &(i, v) in &a {
            dense_a[i] = v;
        }
        let sol = f.solve(&dense_a);
        let want: f64 = dense_a.iter().zip(&sol).map(|(x, y)| x * y).sum();
        assert!((f.inverse_quad_form(&a) - want).abs() < 1e-11);
    }

    #[test]
    fn force_last_keeps_dense_rows_at_bottom() {
        // lattice plus one dense row (index 0 coupled to everything)
        let base = lattice_matrix(5, 5);
        let n = base.dim();
        let mut b = SparseSymBuilder::new(n);
        for (i, j, v) in base.iter_upper() {
            b.add(i, j, v);
        }
        for j in 1..n {
            b.add(0, j, 0.01);
        }
        b.add(0, 0, 20.0);
        let q = b.build();
        let f = CholeskyFactor::new(&q, &[0]).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let bvec = q.mat_vec(&x);
        let got = f.solve(&bvec);
        for i in 0..n {
            assert!((got[i] - x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn non_pd_reports_leading_minor() {
        let mut b = SparseSymBuilder::new(3);
        b.add(0, 0, 1.0);
        b.add(1, 1, -5.0);
        b.add(2, 2, 1.0);
        let q = b.build();
        match CholeskyFactor::new(&q, &[]) {
            Err(Error::NotPositiveDefinite { leading_minor }) => {
                assert!(leading_minor < 3);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn jitter_escalation_recovers_semidefinite() {
        // Singular PSD matrix: rank-1 block; jitter makes it factorizable.
        let mut b = SparseSymBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 1, 1.0);
        b.add(1, 1, 1.0);
        let q = b.build();
        let f = CholeskyFactor::new(&q, &[]).unwrap();
        assert!(f.jitter() > 0.0);
        assert!(f.jitter() <= 1e-6 * q.max_diag());
    }
}
