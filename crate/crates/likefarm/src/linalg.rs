//! Small dense/sparse numerics used by the co-clustering: one-sided Jacobi
//! SVD, truncated SVD by subspace iteration over a matrix-free operator, and
//! a deterministic k-means.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c));
        DenseMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self
                .row(i)
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

/// Thin SVD: `u` is m×r, `v` is n×r, singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

/// Full thin SVD via one-sided Jacobi. Accurate to near machine precision on
/// the modest matrices this crate handles; used as the dense reference.
pub fn jacobi_svd(a: &DenseMatrix) -> Svd {
    if a.cols > a.rows {
        let s = jacobi_svd(&a.transpose());
        return Svd {
            singular_values: s.singular_values,
            u: s.v,
            v: s.u,
        };
    }
    let m = a.rows;
    let n = a.cols;
    // Column-major copy of A; rotations act on columns.
    let mut b: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let eps = 1e-15;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    alpha += b[p][i] * b[p][i];
                    beta += b[q][i] * b[q][i];
                    gamma += b[p][i] * b[q][i];
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let ratio = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(ratio);
                if ratio <= eps {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bp = b[p][i];
                    let bq = b[q][i];
                    b[p][i] = c * bp - s * bq;
                    b[q][i] = s * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if off <= eps {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = b.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (rank, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        sv.push(sigma);
        if sigma > 0.0 {
            for i in 0..m {
                u.set(i, rank, b[j][i] / sigma);
            }
        }
        for i in 0..n {
            vm.set(i, rank, v[j][i]);
        }
    }
    Svd {
        singular_values: sv,
        u,
        v: vm,
    }
}

/// Top-k singular triplets of a matrix given only `y = A x` and `y = Aᵀ x`,
/// by subspace iteration on AᵀA with Rayleigh-Ritz extraction.
pub fn truncated_svd(
    m: usize,
    n: usize,
    k: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
    rmatvec: impl Fn(&[f64], &mut [f64]),
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<Svd> {
    assert!(k >= 1 && k <= m.min(n));
    let l = (k + 3).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..l)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
        .collect();
    orthonormalize(&mut x);

    let mut ybuf = vec![0.0; m];
    let mut last_residual = f64::INFINITY;
    for _ in 0..max_iter {
        // z_j = AᵀA x_j
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(l);
        for xj in &x {
            matvec(xj, &mut ybuf);
            let mut zj = vec![0.0; n];
            rmatvec(&ybuf, &mut zj);
            z.push(zj);
        }
        // Rayleigh-Ritz on span(x): s = xᵀ z is symmetric PSD.
        let mut s = DenseMatrix::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                s.set(i, j, dot(&x[i], &z[j]));
            }
        }
        let (theta, w) = symmetric_eigen(&s);
        // Ritz vectors v_r = X w_r and their residuals ||AᵀA v - theta v||.
        let mut converged = true;
        let scale = theta.first().copied().unwrap_or(0.0).max(f64::EPSILON);
        let mut worst: f64 = 0.0;
        for r in 0..k {
            let vr = combine(&x, w.row(r));
            let zr = combine(&z, w.row(r));
            let mut res = 0.0;
            for i in 0..n {
                let d = zr[i] - theta[r] * vr[i];
                res += d * d;
            }
            let res = res.sqrt() / scale;
            worst = worst.max(res);
            if res > tol {
                converged = false;
            }
        }
        last_residual = worst;
        if converged {
            let mut sv = Vec::with_capacity(k);
            let mut u = DenseMatrix::zeros(m, k);
            let mut v = DenseMatrix::zeros(n, k);
            for r in 0..k {
                let vr = combine(&x, w.row(r));
                let sigma = theta[r].max(0.0).sqrt();
                sv.push(sigma);
                matvec(&vr, &mut ybuf);
                for i in 0..m {
                    u.set(i, r, if sigma > 1e-12 { ybuf[i] / sigma } else { 0.0 });
                }
                for i in 0..n {
                    v.set(i, r, vr[i]);
                }
            }
            return Ok(Svd {
                singular_values: sv,
                u,
                v,
            });
        }
        // Next subspace.
        x = z;
        orthonormalize(&mut x);
    }
    Err(Error::SvdDidNotConverge {
        iterations: max_iter,
        residual: last_residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(basis: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for (col, &w) in basis.iter().zip(weights) {
        for (o, &c) in out.iter_mut().zip(col) {
            *o += w * c;
        }
    }
    out
}

/// Modified Gram-Schmidt with reorthogonalization. A column that collapses
/// (the subspace hit an invariant subspace smaller than requested) is
/// re-seeded from cycling unit vectors and orthogonalized again.
fn orthonormalize(cols: &mut [Vec<f64>]) {
    let n = cols[0].len();
    for j in 0..cols.len() {
        let mut attempt = 0usize;
        loop {
            for _ in 0..2 {
                for i in 0..j {
                    let (head, tail) = cols.split_at_mut(j);
                    let r = dot(&head[i], &tail[0]);
                    for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                        *t -= r * h;
                    }
                }
            }
            let norm = dot(&cols[j], &cols[j]).sqrt();
            if norm > 1e-10 {
                for v in cols[j].iter_mut() {
                    *v /= norm;
                }
                break;
            }
            let seed_idx = (j + attempt) % n;
            for (idx, v) in cols[j].iter_mut().enumerate() {
                *v = f64::from(u8::from(idx == seed_idx));
            }
            attempt += 1;
            if attempt > n {
                // Give up; leave the unit vector as-is.
                break;
            }
        }
    }
}

/// Eigen decomposition of a small symmetric matrix by cyclic Jacobi.
/// Returns eigenvalues descending; `w.row(r)` holds the r-th eigenvector.
fn symmetric_eigen(s: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = s.rows;
    let mut a = s.clone();
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - sn * aiq);
                    a.set(i, q, sn * aip + c * aiq);
                }
                for i in 0..n {
                    let api = a.get(p, i);
                    let aqi = a.get(q, i);
                    a.set(p, i, c * api - sn * aqi);
                    a.set(q, i, sn * api + c * aqi);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - sn * viq);
                    v.set(i, q, sn * vip + c * viq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut w = DenseMatrix::zeros(n, n);
    for (rank, &j) in order.iter().enumerate() {
        for i in 0..n {
            w.set(rank, i, v.get(i, j));
        }
    }
    (values, w)
}

#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

/// Deterministic k-means. Restart r seeds its first center with the r-th
/// point in a data-dependent anchor order (norm descending, then
/// coordinate-lexicographic), grows centers by farthest-point traversal and
/// runs Lloyd to a fixed point; the best restart by inertia wins, earlier
/// restart on ties. No randomness, so results are stable under input
/// permutation up to cluster-index renaming.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, max_iters: usize) -> KmeansResult {
    assert!(k >= 1 && k <= points.len());
    let anchors = anchor_order(points);

    let mut best: Option<KmeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut centers: Vec<Vec<f64>> = vec![points[anchors[r % anchors.len()]].clone()];
        while centers.len() < k {
            let mut far_idx = anchors[0];
            let mut far_d = -1.0;
            for &i in &anchors {
                let d = centers
                    .iter()
                    .map(|c| dist2(&points[i], c))
                    .fold(f64::INFINITY, f64::min);
                if d > far_d {
                    far_d = d;
                    far_idx = i;
                }
            }
            centers.push(points[far_idx].clone());
        }

        let mut assignments = vec![0usize; points.len()];
        for _ in 0..max_iters {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let mut best_c = 0;
                let mut best_d = f64::INFINITY;
                for (c, center) in centers.iter().enumerate() {
                    let d = dist2(p, center);
                    if d < best_d {
                        best_d = d;
                        best_c = c;
                    }
                }
                if assignments[i] != best_c {
                    assignments[i] = best_c;
                    changed = true;
                }
            }
            // Refill any empty cluster with the globally worst-fit point.
            for c in 0..k {
                if !assignments.contains(&c) {
                    let mut far_idx = anchors[0];
                    let mut far_d = -1.0;
                    for &i in &anchors {
                        let d = dist2(&points[i], &centers[assignments[i]]);
                        if d > far_d {
                            far_d = d;
                            far_idx = i;
                        }
                    }
                    assignments[far_idx] = c;
                    changed = true;
                }
            }
            let dim = points[0].len();
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &a) in points.iter().zip(&assignments) {
                counts[a] += 1;
                for (s, x) in sums[a].iter_mut().zip(p) {
                    *s += x;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    for s in sums[c].iter_mut() {
                        *s /= counts[c] as f64;
                    }
                    centers[c] = std::mem::take(&mut sums[c]);
                }
            }
            if !changed {
                break;
            }
        }

        let inertia: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| dist2(p, &centers[a]))
            .sum();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KmeansResult {
                assignments,
                inertia,
            });
        }
    }
    best.unwrap()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn anchor_order(points: &[Vec<f64>]) -> Vec<usize> {
    let norms: Vec<f64> = points.iter().map(|p| dot(p, p)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .total_cmp(&norms[i])
            .then_with(|| cmp_lex(&points[j], &points[i]))
            .then(i.cmp(&j))
    });
    order
}

fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd, m: usize, n: usize) -> DenseMatrix {
        let r = svd.singular_values.len();
        let mut a = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut x = 0.0;
                for t in 0..r {
                    x += svd.singular_values[t] * svd.u.get(i, t) * svd.v.get(j, t);
                }
                a.set(i, j, x);
            }
        }
        a
    }

    #[test]
    fn jacobi_recovers_diagonal() {
        let a = DenseMatrix::from_rows(vec![
            vec![3.0, 0.0],
            vec![0.0, 2.0],
            vec![0.0, 0.0],
        ]);
        let svd = jacobi_svd(&a);
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let (m, n) = (17, 9);
            let a = DenseMatrix::from_rows(
                (0..m)
                    .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                    .collect(),
            );
            let svd = jacobi_svd(&a);
            let back = reconstruct(&svd, m, n);
            for i in 0..m {
                for j in 0..n {
                    assert!((a.get(i, j) - back.get(i, j)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn truncated_matches_jacobi_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..4 {
            let (m, n) = (40 + trial, 25 + trial);
            let a = DenseMatrix::from_rows(
                (0..m)
                    .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                    .collect(),
            );
            let dense = jacobi_svd(&a);
            let at = a.transpose();
            let trunc = truncated_svd(
                m,
                n,
                4,
                |x, y| a.matvec(x, y),
                |x, y| at.matvec(x, y),
                42,
                1e-12,
                2000,
            )
            .unwrap();
            for t in 0..4 {
                assert!(
                    (dense.singular_values[t] - trunc.singular_values[t]).abs() < 1e-8,
                    "sigma_{t}: {} vs {}",
                    dense.singular_values[t],
                    trunc.singular_values[t]
                );
            }
        }
    }

    #[test]
    fn kmeans_separates_two_blobs() {
        let mut points = Vec::new();
        for i in 0..10 {
            points.push(vec![0.0 + 0.01 * i as f64, 0.0]);
            points.push(vec![5.0 + 0.01 * i as f64, 5.0]);
        }
        let res = kmeans(&points, 2, 5, 100);
        let a0 = res.assignments[0];
        for i in 0..10 {
            assert_eq!(res.assignments[2 * i], a0);
            assert_ne!(res.assignments[2 * i + 1], a0);
        }
    }

    #[test]
    fn kmeans_is_permutation_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let base = kmeans(&points, 3, 10, 200);
        let mut perm: Vec<usize> = (0..points.len()).collect();
        perm.reverse();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
        let other = kmeans(&permuted, 3, 10, 200);
        // Same partition up to cluster renaming.
        for i in 0..points.len() {
            for j in 0..points.len() {
                let same_base = base.assignments[i] == base.assignments[j];
                let same_other = other.assignments[perm.iter().position(|&p| p == i).unwrap()]
                    == other.assignments[perm.iter().position(|&p| p == j).unwrap()];
                assert_eq!(same_base, same_other);
            }
        }
    }
}
