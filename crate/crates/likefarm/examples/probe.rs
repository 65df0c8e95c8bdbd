//! Scratch calibration probe (not part of the shipped surface): prints
//! per-profile feature statistics, co-clustering precision and classifier
//! F1 so generator parameters can be tuned.


use likefarm::bipartite::build_bipartite;
use likefarm::classify::{
    grid_search, train_classifier, BaselineParams, ClassifierKind, GridSpec,
};
use likefarm::cocluster::{cocluster, label_clusters, CoclusterConfig};
use likefarm::datamodel::Label;
use likefarm::eval::{compute_metrics, split_vectors};
use likefarm::features::extract_features;
use likefarm::synthgen::{generate, reference_calibration};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let which = std::env::args().nth(2).unwrap_or_else(|| "all".into());

    let config = reference_calibration(seed);
    let t0 = std::time::Instant::now();
    let dataset = generate(&config).unwrap();
    eprintln!(
        "generated {} accounts, {} posts, {} likes in {:?}",
        dataset.accounts.len(),
        dataset.posts.len(),
        dataset.likes.len(),
        t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let features = extract_features(&dataset);
    eprintln!("extracted features in {:?}", t0.elapsed());

    if which == "all" || which == "lex" {
        println!("\n== per-profile lexical/nonlexical means ==");
        for profile in &config.profiles {
            let rows: Vec<_> = features
                .iter()
                .filter(|f| f.user.rsplit_once('-').map(|(p, _)| p) == Some(profile.name.as_str()))
                .collect();
            let n = rows.len() as f64;
            let english_rows: Vec<_> = rows.iter().filter(|f| f.english_ratio > 0.0).collect();
            let ne = english_rows.len().max(1) as f64;
            let mean =
                |get: &dyn Fn(&likefarm::features::UserFeatures) -> f64| -> f64 {
                    english_rows.iter().map(|f| get(f)).sum::<f64>() / ne
                };
            println!(
                "{:16} n={:4} r0={:.2} awl={:.2} asl={:.2} rich={:.3} ari={:.1} flesch={:.1} wpp={:.1} com={:.2} lik={:.2} share={:.2}",
                profile.name,
                rows.len(),
                rows.iter().filter(|f| f.english_ratio == 0.0).count() as f64 / n,
                mean(&|f| f.lexical.avg_word_length),
                mean(&|f| f.lexical.avg_sentence_length),
                mean(&|f| f.lexical.richness),
                mean(&|f| f.lexical.ari),
                mean(&|f| f.lexical.flesch),
                rows.iter().map(|f| f.nonlexical.avg_words_per_post).sum::<f64>() / n,
                rows.iter().map(|f| f.nonlexical.avg_comments_per_post).sum::<f64>() / n,
                rows.iter().map(|f| f.nonlexical.avg_likes_per_post).sum::<f64>() / n,
                rows.iter().map(|f| f.nonlexical.share_fraction).sum::<f64>() / n,
            );
        }
    }

    let campaigns = dataset.campaigns();
    if which == "all" || which == "cocluster" {
        println!("\n== cocluster per campaign ==");
        for campaign in &campaigns {
            let t0 = std::time::Instant::now();
            let slice = dataset.campaign_slice(campaign);
            let graph = match build_bipartite(&slice.likes, 10, 10) {
                Ok(g) => g,
                Err(e) => {
                    println!("{campaign}: graph error {e}");
                    continue;
                }
            };
            let truth = slice.labels_by_id();
            let asg = cocluster(&graph, &CoclusterConfig::new(2, seed)).unwrap();
            let labels = label_clusters(&asg, &truth).unwrap();
            let mut pred = Vec::new();
            let mut actual = Vec::new();
            for (user, &cluster) in &asg.user_cluster {
                pred.push(labels[&cluster].is_farm());
                actual.push(truth[user].is_farm());
            }
            let (c, m) = compute_metrics(&pred, &actual).unwrap();
            println!(
                "{campaign}: graph {}x{} edges {} | tp={} fp={} tn={} fn={} P={:.3} R={:.3} F1={:.3}  ({:?})",
                graph.n_users(),
                graph.n_pages(),
                graph.n_edges(),
                c.tp,
                c.fp,
                c.tn,
                c.fn_,
                m.precision,
                m.recall,
                m.f1,
                t0.elapsed()
            );
        }
    }

    if which == "all" || which == "svm" {
        println!("\n== classifiers per campaign ==");
        for campaign in &campaigns {
            let rows: Vec<_> = features
                .iter()
                .filter(|f| {
                    f.label == Label::Baseline || f.label.campaign() == Some(campaign.as_str())
                })
                .collect();
            let vectors: Vec<_> = rows.iter().map(|f| f.to_vector().unwrap()).collect();
            let (train, test) = split_vectors(&vectors, 0.8, seed).unwrap();

            let run = |train_v: &[likefarm::features::FeatureVector],
                       test_v: &[likefarm::features::FeatureVector]|
             -> (f64, f64, f64) {
                let t0 = std::time::Instant::now();
                let (params, model) = grid_search(train_v, &GridSpec::default(), 5, seed).unwrap();
                let mut pred = Vec::new();
                let mut actual = Vec::new();
                for v in test_v {
                    pred.push(model.predict_farm(&v.values).unwrap());
                    actual.push(v.label.is_farm());
                }
                let (_, m) = compute_metrics(&pred, &actual).unwrap();
                eprintln!(
                    "  grid search {:?} -> gamma=2^{:.0} nu=2^{:.0}",
                    t0.elapsed(),
                    params.gamma.log2(),
                    params.nu.log2()
                );
                (m.f1, m.precision, m.recall)
            };

            let (combined_f1, p, r) = run(&train, &test);

            let project = |v: &likefarm::features::FeatureVector, range: std::ops::Range<usize>| {
                likefarm::features::FeatureVector {
                    user: v.user.clone(),
                    label: v.label.clone(),
                    values: v.values[range].to_vec(),
                }
            };
            let train_nl: Vec<_> = train.iter().map(|v| project(v, 12..16)).collect();
            let test_nl: Vec<_> = test.iter().map(|v| project(v, 12..16)).collect();
            let (nonlex_f1, _, _) = run(&train_nl, &test_nl);

            let nb = train_classifier(
                ClassifierKind::Nb,
                &train,
                &GridSpec::default(),
                5,
                &BaselineParams::default(),
                seed,
            )
            .unwrap();
            let mut pred = Vec::new();
            let mut actual = Vec::new();
            for v in &test {
                pred.push(nb.predict_farm(&v.values).unwrap());
                actual.push(v.label.is_farm());
            }
            let (_, m_nb) = compute_metrics(&pred, &actual).unwrap();

            println!(
                "{campaign}: combined F1={combined_f1:.3} (P={p:.3} R={r:.3}) nonlex F1={nonlex_f1:.3} nb F1={:.3}",
                m_nb.f1
            );
        }
    }
}
