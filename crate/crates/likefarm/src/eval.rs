//! Evaluation harness: stratified train/test splitting, confusion-matrix
//! metrics, campaign report tables (CSV plus aligned markdown), scatter
//! export for the co-clustering view, incremental-feature curves, and run
//! manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bipartite::BipartiteGraph;
use crate::classify::{train_svm, SvmHyperParams, SvmModel};
use crate::cocluster::{label_clusters, ClusterAssignment};
use crate::datamodel::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u32,
    pub fp: u32,
    pub tn: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
}

impl ConfusionCounts {
    pub fn total(&self) -> u32 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Derived metrics, full precision. Any 0/0 ratio is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(c: &ConfusionCounts) -> Metrics {
        let ratio = |num: u32, den: u32| if den == 0 { 0.0 } else { f64::from(num) / f64::from(den) };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let accuracy = ratio(c.tp + c.tn, c.total());
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            precision,
            recall,
            accuracy,
            f1,
        }
    }

    /// Integer percentages for report rendering, rounded half-up. The F1
    /// integer is the harmonic mean of the already-rounded precision and
    /// recall so every printed row stays self-consistent.
    pub fn rounded_percent(&self) -> RoundedPercent {
        let p = round_half_up_percent(self.precision);
        let r = round_half_up_percent(self.recall);
        let a = round_half_up_percent(self.accuracy);
        let f1 = if p + r == 0 {
            0
        } else {
            round_half_up_percent(2.0 * (p as f64) * (r as f64) / ((p + r) as f64) / 100.0)
        };
        RoundedPercent {
            precision: p,
            recall: r,
            accuracy: a,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundedPercent {
    pub precision: u32,
    pub recall: u32,
    pub accuracy: u32,
    pub f1: u32,
}

pub fn round_half_up_percent(fraction: f64) -> u32 {
    (fraction * 100.0 + 0.5).floor() as u32
}

/// Farm is the positive class: `true` entries are farm.
pub fn compute_metrics(predictions: &[bool], truth: &[bool]) -> Result<(ConfusionCounts, Metrics)> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} predictions vs {} truths",
            predictions.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let m = Metrics::from_counts(&c);
    Ok((c, m))
}

/// Stratified split: per class, shuffle deterministically and take
/// `round(train_fraction * n)` for training. Returns (train, test) index
/// sets, each sorted ascending.
pub fn split_indices(
    labels: &[bool],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_fraction} out of (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class {} has fewer than 2 members",
                if class { "farm" } else { "baseline" }
            )));
        }
        members.shuffle(&mut rng);
        let n_train = (train_fraction * members.len() as f64 + 0.5).floor() as usize;
        let n_train = n_train.clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_vectors(
    vectors: &[FeatureVector],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>)> {
    let labels: Vec<bool> = vectors.iter().map(|v| v.label.is_farm()).collect();
    let (tr, te) = split_indices(&labels, train_fraction, seed)?;
    Ok((
        tr.into_iter().map(|i| vectors[i].clone()).collect(),
        te.into_iter().map(|i| vectors[i].clone()).collect(),
    ))
}

/// One evaluated campaign run, as a report row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignRun {
    pub campaign: String,
    pub total_users: usize,
    pub training_set: usize,
    pub testing_set: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Train with a fixed feature prefix length for each j = 1..=d and return
/// the cumulative F1 per prefix. The split, scaling and hyperparameters stay
/// fixed across prefixes; `feature_order` must be a permutation of 0..d.
pub fn incremental_feature_curve(
    vectors: &[FeatureVector],
    feature_order: &[usize],
    params: SvmHyperParams,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let d = vectors.first().map_or(0, |v| v.values.len());
    let mut seen = vec![false; d];
    if feature_order.len() != d || feature_order.iter().any(|&f| f >= d || std::mem::replace(&mut seen[f], true)) {
        return Err(Error::InvalidInput(
            "feature_order must be a permutation of the feature indices".into(),
        ));
    }
    let (train, test) = split_vectors(vectors, train_fraction, seed)?;
    let mut curve = Vec::with_capacity(d);
    for j in 1..=d {
        let project = |v: &FeatureVector| FeatureVector {
            user: v.user.clone(),
            label: v.label.clone(),
            values: feature_order[..j].iter().map(|&f| v.values[f]).collect(),
        };
        let train_j: Vec<FeatureVector> = train.iter().map(project).collect();
        let test_j: Vec<FeatureVector> = test.iter().map(project).collect();
        let model: SvmModel = train_svm(&train_j, params, seed)?;
        let mut pred = Vec::with_capacity(test_j.len());
        let mut truth = Vec::with_capacity(test_j.len());
        for v in &test_j {
            pred.push(model.predict_farm(&v.values)?);
            truth.push(v.label.is_farm());
        }
        let (_, m) = compute_metrics(&pred, &truth)?;
        curve.push((j, m.f1));
    }
    Ok(curve)
}

/// Scatter export of a clustered graph: one row per like edge, indexed by
/// cluster-sorted user and page positions, tagged with the user's confusion
/// outcome under majority cluster labeling.
pub fn export_scatter(
    graph: &BipartiteGraph,
    assignment: &ClusterAssignment,
    truth: &BTreeMap<String, Label>,
    path: &Path,
) -> Result<()> {
    let cluster_labels = label_clusters(assignment, truth)?;

    let order = |ids: &[String], cluster_of: &BTreeMap<String, usize>| -> BTreeMap<String, usize> {
        let mut idx: Vec<usize> = (0..ids.len()).collect();
        idx.sort_by_key(|&i| (cluster_of.get(&ids[i]).copied().unwrap_or(usize::MAX), i));
        idx.into_iter()
            .enumerate()
            .map(|(pos, i)| (ids[i].clone(), pos))
            .collect()
    };
    let user_pos = order(&graph.row_ids, &assignment.user_cluster);
    let page_pos = order(&graph.col_ids, &assignment.page_cluster);

    let mut rows: Vec<(usize, usize, &'static str)> = Vec::with_capacity(graph.n_edges());
    for (i, user) in graph.row_ids.iter().enumerate() {
        let cluster = assignment.user_cluster[user];
        let predicted_farm = cluster_labels[&cluster].is_farm();
        let actual_farm = truth
            .get(user)
            .map(Label::is_farm)
            .ok_or_else(|| Error::DanglingReference {
                kind: "account",
                id: user.clone(),
            })?;
        let outcome = match (predicted_farm, actual_farm) {
            (true, true) => "TP",
            (true, false) => "FP",
            (false, false) => "TN",
            (false, true) => "FN",
        };
        for &j in graph.row(i) {
            rows.push((user_pos[user], page_pos[&graph.col_ids[j as usize]], outcome));
        }
    }
    rows.sort_unstable();

    let mut out = String::from("user_index,page_index,outcome\n");
    for (u, p, o) in rows {
        writeln!(out, "{u},{p},{o}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Full-size campaign table (CSV with raw reals).
pub fn report_csv(runs: &[CampaignRun]) -> String {
    let mut out = String::from(
        "campaign,total_users,training_set,testing_set,tp,fp,tn,fn,precision,recall,accuracy,f1\n",
    );
    for r in runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.campaign,
            r.total_users,
            r.training_set,
            r.testing_set,
            r.counts.tp,
            r.counts.fp,
            r.counts.tn,
            r.counts.fn_,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.accuracy,
            r.metrics.f1
        )
        .unwrap();
    }
    out
}

/// Aligned markdown rendering of the same table, percentages half-up.
pub fn report_markdown(title: &str, runs: &[CampaignRun]) -> String {
    let header = [
        "Campaign", "Total", "Training", "Testing", "TP", "FP", "TN", "FN", "Precision",
        "Recall", "Accuracy", "F1",
    ];
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            let pct = r.metrics.rounded_percent();
            vec![
                r.campaign.clone(),
                r.total_users.to_string(),
                r.training_set.to_string(),
                r.testing_set.to_string(),
                r.counts.tp.to_string(),
                r.counts.fp.to_string(),
                r.counts.tn.to_string(),
                r.counts.fn_.to_string(),
                format!("{}%", pct.precision),
                format!("{}%", pct.recall),
                format!("{}%", pct.accuracy),
                format!("{}%", pct.f1),
            ]
        })
        .collect();
    markdown_table(title, &header, &rows)
}

/// Cluster-experiment table (no train/test sizes).
pub fn cocluster_report_csv(runs: &[CampaignRun]) -> String {
    let mut out = String::from("campaign,tp,fp,tn,fn,precision,recall,f1\n");
    for r in runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.campaign,
            r.counts.tp,
            r.counts.fp,
            r.counts.tn,
            r.counts.fn_,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.f1
        )
        .unwrap();
    }
    out
}

pub fn cocluster_report_markdown(runs: &[CampaignRun]) -> String {
    let header = ["Campaign", "TP", "FP", "TN", "FN", "Precision", "Recall", "F1"];
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            let pct = r.metrics.rounded_percent();
            vec![
                r.campaign.clone(),
                r.counts.tp.to_string(),
                r.counts.fp.to_string(),
                r.counts.tn.to_string(),
                r.counts.fn_.to_string(),
                format!("{}%", pct.precision),
                format!("{}%", pct.recall),
                format!("{}%", pct.f1),
            ]
        })
        .collect();
    markdown_table("Graph co-clustering by campaign", &header, &rows)
}

/// Campaign x classifier F1 comparison.
pub fn f1_matrix_csv(classifiers: &[String], rows: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("campaign");
    for c in classifiers {
        write!(out, ",{c}").unwrap();
    }
    out.push('\n');
    for (campaign, f1s) in rows {
        write!(out, "{campaign}").unwrap();
        for f1 in f1s {
            write!(out, ",{f1}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn f1_matrix_markdown(classifiers: &[String], rows: &[(String, Vec<f64>)]) -> String {
    let mut header = vec!["Campaign".to_string()];
    header.extend(classifiers.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(campaign, f1s)| {
            let mut row = vec![campaign.clone()];
            row.extend(f1s.iter().map(|f| format!("{}%", round_half_up_percent(*f))));
            row
        })
        .collect();
    markdown_table("F1 by classifier", &header_refs, &body)
}

fn markdown_table(title: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0usize; cols];
    for (w, h) in width.iter_mut().zip(header) {
        *w = h.len();
    }
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = format!("# {title}\n\n|");
    for (h, w) in header.iter().zip(&width) {
        write!(out, " {h:<w$} |").unwrap();
    }
    out.push_str("\n|");
    for w in &width {
        write!(out, "{}|", "-".repeat(w + 2)).unwrap();
    }
    out.push('\n');
    for row in rows {
        out.push('|');
        for (cell, w) in row.iter().zip(&width) {
            write!(out, " {cell:<w$} |").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Everything needed to reproduce a run byte-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub config_hash: String,
    /// input file name -> sha256
    pub dataset_fingerprint: BTreeMap<String, String>,
    pub classifier: Option<String>,
    pub hyperparams: Option<serde_json::Value>,
    pub counts: Option<ConfusionCounts>,
    pub metrics: Option<Metrics>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> RunManifest {
        let config_hash = sha256_hex(config.to_string().as_bytes());
        RunManifest {
            schema_version: 1,
            command: command.to_string(),
            seed,
            config,
            config_hash,
            dataset_fingerprint: BTreeMap::new(),
            classifier: None,
            hyperparams: None,
            counts: None,
            metrics: None,
        }
    }

    pub fn fingerprint_file(&mut self, path: &Path) -> Result<()> {
        let data = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.dataset_fingerprint.insert(name, sha256_hex(&data));
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_reference_rows() {
        let (c, m) = compute_metrics(&[true; 4], &[true, true, true, false]).unwrap();
        assert_eq!((c.tp, c.fp), (3, 1));
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 1.0);

        // Stealthy-campaign clustering row: 523/588/18/0.
        let counts = ConfusionCounts { tp: 523, fp: 588, tn: 18, fn_: 0 };
        let m = Metrics::from_counts(&counts);
        assert!((m.precision - 0.47074707).abs() < 1e-6);
        assert_eq!(m.recall, 1.0);
        let pct = m.rounded_percent();
        assert_eq!((pct.precision, pct.recall, pct.f1), (47, 100, 64));

        // Near-perfect clustering row: 681/9/569/4.
        let counts = ConfusionCounts { tp: 681, fp: 9, tn: 569, fn_: 4 };
        let m = Metrics::from_counts(&counts);
        assert!((m.precision - 0.9869565).abs() < 1e-6);
        assert!((m.recall - 0.9941606).abs() < 1e-6);

        // Combined-feature row: 113/1/281/4 -> 99/97/99/98.
        let counts = ConfusionCounts { tp: 113, fp: 1, tn: 281, fn_: 4 };
        let pct = Metrics::from_counts(&counts).rounded_percent();
        assert_eq!((pct.precision, pct.recall, pct.accuracy, pct.f1), (99, 97, 99, 98));
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let (c, m) = compute_metrics(&[false, false], &[false, false]).unwrap();
        assert_eq!(c.tp, 0);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn f1_edges() {
        // F1 = 0 whenever tp = 0.
        let m = Metrics::from_counts(&ConfusionCounts { tp: 0, fp: 5, tn: 5, fn_: 5 });
        assert_eq!(m.f1, 0.0);
        // F1 = 1 iff fp = fn = 0 with tp > 0.
        let m = Metrics::from_counts(&ConfusionCounts { tp: 7, fp: 0, tn: 3, fn_: 0 });
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(compute_metrics(&[true], &[true, false]).is_err());
    }

    #[test]
    fn split_exact_fractions() {
        let labels: Vec<bool> = std::iter::repeat(true)
            .take(100)
            .chain(std::iter::repeat(false).take(100))
            .collect();
        let (tr, te) = split_indices(&labels, 0.8, 3).unwrap();
        assert_eq!(tr.len(), 160);
        assert_eq!(te.len(), 40);
        let farm_train = tr.iter().filter(|&&i| labels[i]).count();
        assert_eq!(farm_train, 80);
    }

    #[test]
    fn split_reference_campaign_size() {
        // 583 farm + 1408 baseline at 0.8 -> 466 farm training users.
        let labels: Vec<bool> = std::iter::repeat(true)
            .take(583)
            .chain(std::iter::repeat(false).take(1408))
            .collect();
        let (tr, te) = split_indices(&labels, 0.8, 1).unwrap();
        let farm_train = tr.iter().filter(|&&i| labels[i]).count();
        let farm_test = te.iter().filter(|&&i| labels[i]).count();
        assert_eq!(farm_train, 466);
        assert_eq!(farm_test, 117);
        let base_test = te.len() - farm_test;
        assert_eq!(base_test, 282);
    }

    #[test]
    fn split_is_deterministic() {
        let labels: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let a = split_indices(&labels, 0.8, 9).unwrap();
        let b = split_indices(&labels, 0.8, 9).unwrap();
        assert_eq!(a, b);
        let c = split_indices(&labels, 0.8, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_class_rejected() {
        let labels = vec![true, false, false, false];
        assert!(split_indices(&labels, 0.8, 0).is_err());
    }

    #[test]
    fn markdown_is_aligned() {
        let runs = vec![CampaignRun {
            campaign: "camp-x".into(),
            total_users: 100,
            training_set: 80,
            testing_set: 20,
            counts: ConfusionCounts { tp: 10, fp: 1, tn: 8, fn_: 1 },
            metrics: Metrics::from_counts(&ConfusionCounts { tp: 10, fp: 1, tn: 8, fn_: 1 }),
        }];
        let md = report_markdown("Combined features", &runs);
        let lines: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        let csv = report_csv(&runs);
        assert!(csv.starts_with("campaign,"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn manifest_is_deterministic() {
        let m1 = RunManifest::new("evaluate", 7, serde_json::json!({"k": 2}));
        let m2 = RunManifest::new("evaluate", 7, serde_json::json!({"k": 2}));
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
        assert_eq!(m1.config_hash.len(), 64);
    }
}
