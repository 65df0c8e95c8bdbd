//! Sparse binary user×page biadjacency with iterative degree filtering, and
//! the degree normalization used by spectral co-clustering.

use std::collections::{BTreeMap, BTreeSet};

use crate::datamodel::LikeEvent;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Deduplicated binary like matrix. Rows are users, columns pages; each row
/// holds sorted distinct column indices. Guaranteed free of all-zero rows and
/// columns by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    rows: Vec<Vec<u32>>,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    n_edges: usize,
}

impl BipartiteGraph {
    pub fn n_users(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_pages(&self) -> usize {
        self.col_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.col_ids.len()];
        for row in &self.rows {
            for &j in row {
                d[j as usize] += 1;
            }
        }
        d
    }

    /// `An = D1^{-1/2} A D2^{-1/2}` as a dense matrix.
    pub fn normalize(&self) -> Result<DenseMatrix> {
        let rd = self.row_degrees();
        let cd = self.col_degrees();
        if rd.iter().any(|&d| d == 0) || cd.iter().any(|&d| d == 0) {
            return Err(Error::DegenerateGraph(
                "zero-degree row or column in normalization".into(),
            ));
        }
        let mut out = DenseMatrix::zeros(self.n_users(), self.n_pages());
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                let j = j as usize;
                out.set(i, j, 1.0 / ((rd[i] * cd[j]) as f64).sqrt());
            }
        }
        Ok(out)
    }

    /// Sparse products with the normalized matrix, without materializing it.
    /// Returns `(matvec, rmatvec)` closures over precomputed degree scalings.
    pub fn normalized_ops(
        &self,
    ) -> (
        impl Fn(&[f64], &mut [f64]) + '_,
        impl Fn(&[f64], &mut [f64]) + '_,
    ) {
        let rinv: Vec<f64> = self
            .row_degrees()
            .iter()
            .map(|&d| 1.0 / (d as f64).sqrt())
            .collect();
        let cinv: Vec<f64> = self
            .col_degrees()
            .iter()
            .map(|&d| 1.0 / (d as f64).sqrt())
            .collect();
        let rinv2 = rinv.clone();
        let cinv2 = cinv.clone();
        let matvec = move |x: &[f64], y: &mut [f64]| {
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = 0.0;
                for &j in row {
                    acc += x[j as usize] * cinv[j as usize];
                }
                y[i] = acc * rinv[i];
            }
        };
        let rmatvec = move |x: &[f64], y: &mut [f64]| {
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, row) in self.rows.iter().enumerate() {
                let xi = x[i] * rinv2[i];
                for &j in row {
                    y[j as usize] += xi * cinv2[j as usize];
                }
            }
        };
        (matvec, rmatvec)
    }
}

/// Build the graph from raw like events: deduplicate `(user, page)` pairs,
/// then iteratively remove users with fewer than `min_user_degree` distinct
/// pages and pages with fewer than `min_page_degree` distinct users until a
/// fixed point, since each removal changes the other side's degrees.
pub fn build_bipartite(
    likes: &[LikeEvent],
    min_user_degree: usize,
    min_page_degree: usize,
) -> Result<BipartiteGraph> {
    let mut user_pages: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for like in likes {
        user_pages
            .entry(like.user.as_str())
            .or_default()
            .insert(like.page.as_str());
    }

    loop {
        let mut page_users: BTreeMap<&str, usize> = BTreeMap::new();
        for pages in user_pages.values() {
            for p in pages {
                *page_users.entry(p).or_default() += 1;
            }
        }
        let bad_pages: BTreeSet<&str> = page_users
            .iter()
            .filter(|&(_, &d)| d < min_page_degree)
            .map(|(&p, _)| p)
            .collect();
        let mut changed = !bad_pages.is_empty();
        for pages in user_pages.values_mut() {
            pages.retain(|p| !bad_pages.contains(p));
        }
        let before = user_pages.len();
        user_pages.retain(|_, pages| pages.len() >= min_user_degree && !pages.is_empty());
        changed |= user_pages.len() != before;
        if !changed {
            break;
        }
    }

    if user_pages.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let row_ids: Vec<String> = user_pages.keys().map(|s| s.to_string()).collect();
    let col_set: BTreeSet<&str> = user_pages.values().flatten().copied().collect();
    let col_ids: Vec<String> = col_set.iter().map(|s| s.to_string()).collect();
    let col_index: BTreeMap<&str, u32> = col_set
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i as u32))
        .collect();

    let mut n_edges = 0;
    let rows: Vec<Vec<u32>> = user_pages
        .values()
        .map(|pages| {
            let mut row: Vec<u32> = pages.iter().map(|p| col_index[p]).collect();
            row.sort_unstable();
            n_edges += row.len();
            row
        })
        .collect();

    Ok(BipartiteGraph {
        rows,
        row_ids,
        col_ids,
        n_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn like(user: &str, page: &str) -> LikeEvent {
        LikeEvent {
            user: user.into(),
            page: page.into(),
            ts: 0,
        }
    }

    #[test]
    fn retains_users_above_threshold() {
        let mut likes = Vec::new();
        for u in 0..3 {
            for p in 0..12 {
                likes.push(like(&format!("u{u}"), &format!("p{p}")));
            }
        }
        let g = build_bipartite(&likes, 10, 1).unwrap();
        assert_eq!(g.n_users(), 3);
        assert_eq!(g.n_pages(), 12);
        assert_eq!(g.n_edges(), 36);
    }

    #[test]
    fn removes_low_degree_user() {
        let mut likes = Vec::new();
        for p in 0..9 {
            likes.push(like("thin", &format!("p{p}")));
        }
        for u in 0..12 {
            for p in 0..10 {
                likes.push(like(&format!("u{u}"), &format!("p{p}")));
            }
        }
        let g = build_bipartite(&likes, 10, 1).unwrap();
        assert!(!g.row_ids.iter().any(|id| id == "thin"));
        assert_eq!(g.n_users(), 12);
    }

    #[test]
    fn duplicate_events_become_one_edge() {
        let likes = vec![like("u", "p"), like("u", "p"), like("u", "p")];
        let g = build_bipartite(&likes, 1, 1).unwrap();
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn filtering_reaches_fixed_point() {
        // u0 likes 2 pages; p-solo is held up only by u0. Removing u0
        // (degree < 2 after p-solo goes) must cascade.
        let likes = vec![
            like("u0", "p-solo"),
            like("u0", "shared"),
            like("u1", "shared"),
            like("u1", "b"),
            like("u2", "shared"),
            like("u2", "b"),
        ];
        let g = build_bipartite(&likes, 2, 2).unwrap();
        assert_eq!(g.n_users(), 2);
        assert_eq!(g.n_pages(), 2);
    }

    #[test]
    fn empty_after_filtering_is_an_error() {
        let likes = vec![like("u", "p")];
        assert!(matches!(
            build_bipartite(&likes, 5, 5),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn filtering_is_idempotent() {
        let mut likes = Vec::new();
        for u in 0..20 {
            for p in 0..(5 + u % 7) {
                likes.push(like(&format!("u{u:02}"), &format!("p{p}")));
            }
        }
        let g1 = build_bipartite(&likes, 3, 4).unwrap();
        // Re-filter the surviving edges with the same thresholds.
        let survivors: Vec<LikeEvent> = (0..g1.n_users())
            .flat_map(|i| {
                let uid = g1.row_ids[i].clone();
                g1.row(i)
                    .iter()
                    .map(move |&j| (uid.clone(), j))
                    .collect::<Vec<_>>()
            })
            .map(|(u, j)| like(&u, &g1.col_ids[j as usize]))
            .collect();
        let g2 = build_bipartite(&survivors, 3, 4).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn edge_count_bounded_by_distinct_pairs() {
        let likes = vec![
            like("a", "x"),
            like("a", "x"),
            like("a", "y"),
            like("b", "x"),
        ];
        let g = build_bipartite(&likes, 1, 1).unwrap();
        assert!(g.n_edges() <= 3);
    }

    #[test]
    fn single_edge_normalizes_to_one() {
        let g = build_bipartite(&[like("u", "p")], 1, 1).unwrap();
        let an = g.normalize().unwrap();
        assert_eq!(an.get(0, 0), 1.0);
    }

    #[test]
    fn all_ones_two_by_two_normalizes_to_half() {
        let likes = vec![
            like("u0", "p0"),
            like("u0", "p1"),
            like("u1", "p0"),
            like("u1", "p1"),
        ];
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let an = g.normalize().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((an.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_normalization_cases() {
        // A = [[1,1],[1,0]]: row degrees (2,1), col degrees (2,1).
        let likes = vec![like("u0", "p0"), like("u0", "p1"), like("u1", "p0")];
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let an = g.normalize().unwrap();
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((an.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((an.get(0, 1) - s2).abs() < 1e-15);
        assert!((an.get(1, 0) - s2).abs() < 1e-15);
        assert_eq!(an.get(1, 1), 0.0);

        // A = [[1,0],[1,1]]: row degrees (1,2), col degrees (2,1).
        let likes = vec![like("u0", "p0"), like("u1", "p0"), like("u1", "p1")];
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let an = g.normalize().unwrap();
        assert!((an.get(0, 0) - s2).abs() < 1e-15);
        assert_eq!(an.get(0, 1), 0.0);
        assert!((an.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((an.get(1, 1) - s2).abs() < 1e-15);
    }

    #[test]
    fn normalized_ops_match_dense() {
        let likes = vec![
            like("a", "x"),
            like("a", "y"),
            like("b", "y"),
            like("b", "z"),
            like("c", "x"),
            like("c", "z"),
        ];
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let dense = g.normalize().unwrap();
        let (mv, rmv) = g.normalized_ops();
        let x = vec![0.3, -1.0, 2.0];
        let mut y_sparse = vec![0.0; 3];
        mv(&x, &mut y_sparse);
        let mut y_dense = vec![0.0; 3];
        dense.matvec(&x, &mut y_dense);
        for (a, b) in y_sparse.iter().zip(&y_dense) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut z_sparse = vec![0.0; 3];
        rmv(&x, &mut z_sparse);
        let dt = dense.transpose();
        let mut z_dense = vec![0.0; 3];
        dt.matvec(&x, &mut z_dense);
        for (a, b) in z_sparse.iter().zip(&z_dense) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
