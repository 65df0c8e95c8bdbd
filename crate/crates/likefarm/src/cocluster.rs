//! Spectral co-clustering of the user-page graph: embed users and pages with
//! the leading singular vectors of the degree-normalized biadjacency
//! (excluding the trivial first pair), scale by D^{-1/2}, and k-means the
//! joint embedding. Includes majority labeling of clusters against ground
//! truth.

use std::collections::BTreeMap;

use crate::bipartite::BipartiteGraph;
use crate::datamodel::Label;
use crate::error::{Error, Result};
use crate::linalg::{kmeans, truncated_svd};

#[derive(Debug, Clone)]
pub struct CoclusterConfig {
    pub k: usize,
    /// Leading singular vectors to compute, trivial pair included.
    /// `None` = ceil(log2 k) + 1.
    pub n_singular_vectors: Option<usize>,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub seed: u64,
}

impl CoclusterConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        CoclusterConfig {
            k,
            n_singular_vectors: None,
            kmeans_restarts: 10,
            kmeans_max_iters: 300,
            seed,
        }
    }

    pub fn effective_singular_vectors(&self) -> usize {
        self.n_singular_vectors
            .unwrap_or_else(|| (self.k as f64).log2().ceil() as usize + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub user_cluster: BTreeMap<String, usize>,
    pub page_cluster: BTreeMap<String, usize>,
}

pub fn cocluster(graph: &BipartiteGraph, config: &CoclusterConfig) -> Result<ClusterAssignment> {
    let k = config.k;
    if k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    if graph.n_users() < k || graph.n_pages() < k {
        return Err(Error::InvalidInput(format!(
            "graph has {} users x {} pages, cannot form {k} clusters",
            graph.n_users(),
            graph.n_pages()
        )));
    }

    let n_sv = config.effective_singular_vectors().max(2).min(graph.n_users().min(graph.n_pages()));
    let (mv, rmv) = graph.normalized_ops();
    let svd = truncated_svd(
        graph.n_users(),
        graph.n_pages(),
        n_sv,
        mv,
        rmv,
        config.seed,
        1e-10,
        5000,
    )?;

    let rdeg = graph.row_degrees();
    let cdeg = graph.col_degrees();
    let dims = n_sv - 1;
    let n_users = graph.n_users();
    let n_pages = graph.n_pages();

    // Joint embedding: users then pages, one row per entity, columns are the
    // non-trivial singular directions scaled by D^{-1/2}. Each column's sign
    // is canonicalized on its largest-magnitude entry (scanning entities in
    // id order) so results do not depend on input permutation.
    let mut points = vec![vec![0.0; dims]; n_users + n_pages];
    let order = entity_id_order(graph);
    for (d, sv_idx) in (1..n_sv).enumerate() {
        let mut col = Vec::with_capacity(n_users + n_pages);
        for i in 0..n_users {
            col.push(svd.u.get(i, sv_idx) / (rdeg[i] as f64).sqrt());
        }
        for j in 0..n_pages {
            col.push(svd.v.get(j, sv_idx) / (cdeg[j] as f64).sqrt());
        }
        let mut best = 0.0f64;
        let mut best_val = 0.0f64;
        for &e in &order {
            if col[e].abs() > best {
                best = col[e].abs();
                best_val = col[e];
            }
        }
        let flip = if best_val < 0.0 { -1.0 } else { 1.0 };
        for (p, &c) in points.iter_mut().zip(&col) {
            p[d] = c * flip;
        }
    }

    let km = kmeans(&points, k, config.kmeans_restarts, config.kmeans_max_iters);

    let user_cluster = graph
        .row_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), km.assignments[i]))
        .collect();
    let page_cluster = graph
        .col_ids
        .iter()
        .enumerate()
        .map(|(j, id)| (id.clone(), km.assignments[n_users + j]))
        .collect();
    Ok(ClusterAssignment {
        user_cluster,
        page_cluster,
    })
}

/// Entities (users then pages, by stacked index) sorted by id; used as the
/// permutation-stable scan order for sign canonicalization.
fn entity_id_order(graph: &BipartiteGraph) -> Vec<usize> {
    let n_users = graph.n_users();
    let mut order: Vec<usize> = (0..n_users + graph.n_pages()).collect();
    order.sort_by(|&a, &b| {
        let ida = if a < n_users {
            (&graph.row_ids[a], 0)
        } else {
            (&graph.col_ids[a - n_users], 1)
        };
        let idb = if b < n_users {
            (&graph.row_ids[b], 0)
        } else {
            (&graph.col_ids[b - n_users], 1)
        };
        ida.cmp(&idb)
    });
    order
}

/// Label each cluster by the majority ground-truth class of its member
/// users; exact ties go to the farm class (pessimistic for precision).
/// `Unknown` accounts do not vote; a cluster where nobody votes is an error.
pub fn label_clusters(
    assignment: &ClusterAssignment,
    ground_truth: &BTreeMap<String, Label>,
) -> Result<BTreeMap<usize, Label>> {
    let mut votes: BTreeMap<usize, BTreeMap<&Label, usize>> = BTreeMap::new();
    let mut clusters: std::collections::BTreeSet<usize> =
        assignment.user_cluster.values().copied().collect();
    clusters.extend(assignment.page_cluster.values().copied());

    for (user, &cluster) in &assignment.user_cluster {
        match ground_truth.get(user) {
            Some(label) if *label != Label::Unknown => {
                *votes.entry(cluster).or_default().entry(label).or_default() += 1;
            }
            _ => {}
        }
    }

    let mut out = BTreeMap::new();
    for cluster in clusters {
        let Some(tally) = votes.get(&cluster) else {
            return Err(Error::UnlabeledCluster(cluster));
        };
        let max = tally.values().copied().max().unwrap_or(0);
        if max == 0 {
            return Err(Error::UnlabeledCluster(cluster));
        }
        // Among majority labels, prefer farm; among farm labels, the
        // lexicographically smallest campaign (Label ordering does both).
        let winner = tally
            .iter()
            .filter(|&(_, &count)| count == max)
            .map(|(&label, _)| label)
            .min_by(|a, b| {
                // Farm sorts before Baseline in the tie-break.
                let rank = |l: &Label| if l.is_farm() { 0 } else { 1 };
                rank(a).cmp(&rank(b)).then_with(|| a.cmp(b))
            })
            .unwrap();
        out.insert(cluster, winner.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::build_bipartite;
    use crate::datamodel::LikeEvent;
    use crate::linalg::jacobi_svd;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn like(user: &str, page: &str) -> LikeEvent {
        LikeEvent {
            user: user.into(),
            page: page.into(),
            ts: 0,
        }
    }

    fn two_block_likes(block: usize, noise: f64, seed: u64) -> Vec<LikeEvent> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut likes = Vec::new();
        for b in 0..2 {
            for u in 0..block {
                for p in 0..block {
                    let cross = rng.gen::<f64>() < noise;
                    let page_block = if cross { 1 - b } else { b };
                    likes.push(like(
                        &format!("u{b}-{u:03}"),
                        &format!("p{page_block}-{p:03}"),
                    ));
                }
            }
        }
        likes
    }

    #[test]
    fn recovers_disconnected_blocks_exactly() {
        let likes = two_block_likes(10, 0.0, 1);
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let asg = cocluster(&g, &CoclusterConfig::new(2, 7)).unwrap();
        let c0 = asg.user_cluster["u0-000"];
        for (user, &c) in &asg.user_cluster {
            if user.starts_with("u0") {
                assert_eq!(c, c0, "{user}");
            } else {
                assert_ne!(c, c0, "{user}");
            }
        }
        let p0 = asg.page_cluster["p0-000"];
        assert_eq!(p0, c0);
        for (page, &c) in &asg.page_cluster {
            assert_eq!(c == p0, page.starts_with("p0"), "{page}");
        }
    }

    #[test]
    fn singular_values_of_normalized_graph_lie_in_unit_interval() {
        let likes = two_block_likes(8, 0.2, 3);
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let an = g.normalize().unwrap();
        let svd = jacobi_svd(&an);
        for &s in &svd.singular_values {
            assert!(s <= 1.0 + 1e-10, "sigma {s}");
            assert!(s >= -1e-12);
        }
        // Connected graph: leading singular value is 1.
        assert!((svd.singular_values[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noisy_planted_blocks_mostly_recovered() {
        let likes = two_block_likes(30, 0.05, 11);
        let g = build_bipartite(&likes, 1, 1).unwrap();
        let asg = cocluster(&g, &CoclusterConfig::new(2, 5)).unwrap();
        let c0 = asg.user_cluster["u0-000"];
        let correct = asg
            .user_cluster
            .iter()
            .filter(|(u, &c)| (c == c0) == u.starts_with("u0"))
            .count();
        let agreement = correct.max(asg.user_cluster.len() - correct) as f64
            / asg.user_cluster.len() as f64;
        assert!(agreement >= 0.95, "agreement {agreement}");
    }

    #[test]
    fn permutation_changes_only_cluster_indices() {
        let likes = two_block_likes(12, 0.08, 21);
        let mut reversed = likes.clone();
        reversed.reverse();
        let g1 = build_bipartite(&likes, 1, 1).unwrap();
        let g2 = build_bipartite(&reversed, 1, 1).unwrap();
        let cfg = CoclusterConfig::new(2, 9);
        let a1 = cocluster(&g1, &cfg).unwrap();
        let a2 = cocluster(&g2, &cfg).unwrap();
        // Canonicalize: cluster of the smallest user id gets index 0.
        let canon = |a: &ClusterAssignment| -> BTreeMap<String, usize> {
            let first = a.user_cluster.values().next().copied().unwrap();
            a.user_cluster
                .iter()
                .map(|(u, &c)| (u.clone(), usize::from(c != first)))
                .collect()
        };
        assert_eq!(canon(&a1), canon(&a2));
    }

    #[test]
    fn labeling_majority_and_tie() {
        let mut truth = BTreeMap::new();
        let mut user_cluster = BTreeMap::new();
        for i in 0..9 {
            truth.insert(format!("f{i}"), Label::Farm("c".into()));
            user_cluster.insert(format!("f{i}"), 0);
        }
        truth.insert("b0".into(), Label::Baseline);
        user_cluster.insert("b0".into(), 0);
        for i in 0..5 {
            truth.insert(format!("x{i}"), Label::Farm("c".into()));
            user_cluster.insert(format!("x{i}"), 1);
            truth.insert(format!("y{i}"), Label::Baseline);
            user_cluster.insert(format!("y{i}"), 1);
        }
        let asg = ClusterAssignment {
            user_cluster,
            page_cluster: BTreeMap::new(),
        };
        let labels = label_clusters(&asg, &truth).unwrap();
        assert_eq!(labels[&0], Label::Farm("c".into()));
        // 5 vs 5 tie breaks toward farm.
        assert_eq!(labels[&1], Label::Farm("c".into()));
    }

    #[test]
    fn unlabeled_cluster_is_an_error() {
        let mut truth = BTreeMap::new();
        truth.insert("u".to_string(), Label::Unknown);
        let mut user_cluster = BTreeMap::new();
        user_cluster.insert("u".to_string(), 0);
        let asg = ClusterAssignment {
            user_cluster,
            page_cluster: BTreeMap::new(),
        };
        assert!(matches!(
            label_clusters(&asg, &truth),
            Err(Error::UnlabeledCluster(0))
        ));
    }

    #[test]
    fn pure_clusters_get_their_class() {
        let mut truth = BTreeMap::new();
        let mut user_cluster = BTreeMap::new();
        for i in 0..4 {
            truth.insert(format!("f{i}"), Label::Farm("z".into()));
            user_cluster.insert(format!("f{i}"), 0);
            truth.insert(format!("b{i}"), Label::Baseline);
            user_cluster.insert(format!("b{i}"), 1);
        }
        let labels = label_clusters(
            &ClusterAssignment {
                user_cluster,
                page_cluster: BTreeMap::new(),
            },
            &truth,
        )
        .unwrap();
        assert_eq!(labels[&0], Label::Farm("z".into()));
        assert_eq!(labels[&1], Label::Baseline);
    }
}
