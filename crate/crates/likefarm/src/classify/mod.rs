//! Classifier training: the primary ν-SVM with grid-searched hyperparameters
//! plus the five comparison classifiers, behind one serializable model type.

pub mod baselines;
pub mod svm;

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use baselines::{predict_baseline, train_baseline, BaselineKind, BaselineModel, BaselineParams};
pub use svm::{rbf_kernel, train_svm, SvmHyperParams, SvmModel};

use crate::error::{Error, Result};
use crate::eval::compute_metrics;
use crate::features::{FeatureVector, Scaler};

/// Version stamp written into model.json.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Svm,
    Tree,
    AdaBoost,
    Knn,
    Forest,
    Nb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Svm,
        ClassifierKind::Tree,
        ClassifierKind::AdaBoost,
        ClassifierKind::Knn,
        ClassifierKind::Forest,
        ClassifierKind::Nb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Tree => "tree",
            ClassifierKind::AdaBoost => "adaboost",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Forest => "forest",
            ClassifierKind::Nb => "nb",
        }
    }

    pub fn baseline(&self) -> Option<BaselineKind> {
        match self {
            ClassifierKind::Svm => None,
            ClassifierKind::Tree => Some(BaselineKind::DecisionTree),
            ClassifierKind::AdaBoost => Some(BaselineKind::AdaBoost),
            ClassifierKind::Knn => Some(BaselineKind::Knn),
            ClassifierKind::Forest => Some(BaselineKind::RandomForest),
            ClassifierKind::Nb => Some(BaselineKind::NaiveBayes),
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ClassifierKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown classifier {s:?} (svm|tree|adaboost|knn|forest|nb)"))
    }
}

/// Hyperparameter grid; defaults to the dyadic 11x11 grid 2^-10 ..= 2^0 in
/// both gamma and nu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub nus: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::dyadic(-10, 0)
    }
}

impl GridSpec {
    pub fn dyadic(min_exp: i32, max_exp: i32) -> Self {
        let values: Vec<f64> = (min_exp..=max_exp).map(|e| (e as f64).exp2()).collect();
        GridSpec {
            gammas: values.clone(),
            nus: values,
        }
    }

    pub fn single(gamma: f64, nu: f64) -> Self {
        GridSpec {
            gammas: vec![gamma],
            nus: vec![nu],
        }
    }
}

/// Deterministic stratified fold ids (0..folds) per vector.
pub fn stratified_folds(vectors: &[FeatureVector], folds: usize, seed: u64) -> Vec<usize> {
    let mut fold_of = vec![0usize; vectors.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class_is_farm in [true, false] {
        let mut members: Vec<usize> = (0..vectors.len())
            .filter(|&i| vectors[i].label.is_farm() == class_is_farm)
            .collect();
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    fold_of
}

/// Exhaustive grid search: mean F1 over stratified cross-validation folds for
/// every feasible grid point; ties prefer smaller gamma, then smaller nu. The
/// winner is retrained on the full training set.
pub fn grid_search(
    train: &[FeatureVector],
    grid: &GridSpec,
    folds: usize,
    seed: u64,
) -> Result<(SvmHyperParams, SvmModel)> {
    if folds < 2 {
        return Err(Error::InvalidInput("grid search needs >= 2 folds".into()));
    }
    let fold_of = stratified_folds(train, folds, seed);

    let mut best: Option<(f64, SvmHyperParams)> = None;
    for &gamma in &grid.gammas {
        for &nu in &grid.nus {
            let params = SvmHyperParams { gamma, nu };
            let mut f1_sum = 0.0;
            let mut feasible = true;
            for fold in 0..folds {
                let fit: Vec<FeatureVector> = train
                    .iter()
                    .zip(&fold_of)
                    .filter(|(_, &f)| f != fold)
                    .map(|(v, _)| v.clone())
                    .collect();
                let held: Vec<&FeatureVector> = train
                    .iter()
                    .zip(&fold_of)
                    .filter(|(_, &f)| f == fold)
                    .map(|(v, _)| v)
                    .collect();
                if held.is_empty() {
                    feasible = false;
                    break;
                }
                let model = match train_svm(&fit, params, seed) {
                    Ok(m) => m,
                    Err(Error::NuInfeasible { .. }) | Err(Error::InvalidInput(_)) => {
                        feasible = false;
                        break;
                    }
                    Err(other) => return Err(other),
                };
                let mut pred = Vec::with_capacity(held.len());
                let mut truth = Vec::with_capacity(held.len());
                for v in &held {
                    pred.push(model.predict_farm(&v.values)?);
                    truth.push(v.label.is_farm());
                }
                let (_, metrics) = compute_metrics(&pred, &truth)?;
                f1_sum += metrics.f1;
            }
            if !feasible {
                continue;
            }
            let mean_f1 = f1_sum / folds as f64;
            if best.as_ref().is_none_or(|(b, _)| mean_f1 > *b) {
                best = Some((mean_f1, params));
            }
        }
    }

    let Some((_, params)) = best else {
        return Err(Error::InvalidInput(
            "no feasible grid point for this training set".into(),
        ));
    };
    let model = train_svm(train, params, seed)?;
    Ok((params, model))
}

/// Any trained classifier, with its scaler baked in; predicts on raw vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedClassifier {
    Svm(SvmModel),
    Baseline {
        baseline: BaselineKind,
        params: BaselineParams,
        scaler: Scaler,
        model: BaselineModel,
    },
}

impl TrainedClassifier {
    pub fn predict_farm(&self, raw: &[f64]) -> Result<bool> {
        match self {
            TrainedClassifier::Svm(m) => m.predict_farm(raw),
            TrainedClassifier::Baseline { scaler, model, .. } => {
                if raw.len() != scaler.means.len() {
                    return Err(Error::InvalidInput(format!(
                        "dimension mismatch: model expects {}, got {}",
                        scaler.means.len(),
                        raw.len()
                    )));
                }
                Ok(predict_baseline(model, &scaler.apply(raw)))
            }
        }
    }

    pub fn hyperparams_json(&self) -> serde_json::Value {
        match self {
            TrainedClassifier::Svm(m) => serde_json::json!({
                "gamma": m.hyperparams.gamma,
                "nu": m.hyperparams.nu,
            }),
            TrainedClassifier::Baseline { baseline, params, .. } => serde_json::json!({
                "baseline": baseline.name(),
                "adaboost_rounds": params.adaboost_rounds,
                "knn_k": params.knn_k,
                "forest_trees": params.forest_trees,
            }),
        }
    }
}

/// Train any classifier kind on raw feature vectors. The SVM goes through
/// grid search; baselines use `params` directly.
pub fn train_classifier(
    kind: ClassifierKind,
    train: &[FeatureVector],
    grid: &GridSpec,
    folds: usize,
    params: &BaselineParams,
    seed: u64,
) -> Result<TrainedClassifier> {
    match kind.baseline() {
        None => {
            let (_, model) = grid_search(train, grid, folds, seed)?;
            Ok(TrainedClassifier::Svm(model))
        }
        Some(baseline) => {
            let raw: Vec<Vec<f64>> = train.iter().map(|v| v.values.clone()).collect();
            let scaler = crate::features::fit_scaler(&raw)?;
            let x: Vec<Vec<f64>> = raw.iter().map(|v| scaler.apply(v)).collect();
            let farm: Vec<bool> = train.iter().map(|v| v.label.is_farm()).collect();
            let model = train_baseline(baseline, &x, &farm, params, seed)?;
            Ok(TrainedClassifier::Baseline {
                baseline,
                params: *params,
                scaler,
                model,
            })
        }
    }
}

/// Self-describing model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub campaign: Option<String>,
    pub seed: u64,
    pub classifier: TrainedClassifier,
}

impl ModelFile {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &std::path::Path) -> Result<ModelFile> {
        let data =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let file: ModelFile = serde_json::from_str(&data).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Label;

    fn fv(user: &str, farm: bool, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            user: user.into(),
            label: if farm {
                Label::Farm("c".into())
            } else {
                Label::Baseline
            },
            values,
        }
    }

    fn blobs(n_per_class: usize, sep: f64, seed: u64) -> Vec<FeatureVector> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..n_per_class {
            out.push(fv(
                &format!("f{i}"),
                true,
                vec![sep + rng.gen::<f64>(), rng.gen::<f64>()],
            ));
            out.push(fv(
                &format!("b{i}"),
                false,
                vec![-sep - rng.gen::<f64>(), rng.gen::<f64>()],
            ));
        }
        out
    }

    #[test]
    fn grid_of_one_point_returns_it() {
        let train = blobs(10, 1.0, 1);
        let grid = GridSpec::single(0.25, 0.25);
        let (params, _) = grid_search(&train, &grid, 2, 3).unwrap();
        assert_eq!(params, SvmHyperParams { gamma: 0.25, nu: 0.25 });
    }

    #[test]
    fn default_grid_stays_in_range() {
        let train = blobs(12, 1.0, 2);
        let (params, model) = grid_search(&train, &GridSpec::default(), 3, 5).unwrap();
        assert!(params.gamma >= 2f64.powi(-10) && params.gamma <= 1.0);
        assert!(params.nu >= 2f64.powi(-10) && params.nu <= 1.0);
        let correct = train
            .iter()
            .filter(|v| model.predict_farm(&v.values).unwrap() == v.label.is_farm())
            .count();
        assert!(correct as f64 / train.len() as f64 >= 0.95);
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let train = blobs(25, 1.0, 7);
        let folds = stratified_folds(&train, 5, 11);
        for fold in 0..5 {
            let farm = train
                .iter()
                .zip(&folds)
                .filter(|(v, &f)| f == fold && v.label.is_farm())
                .count();
            let base = train
                .iter()
                .zip(&folds)
                .filter(|(v, &f)| f == fold && !v.label.is_farm())
                .count();
            assert_eq!(farm, 5);
            assert_eq!(base, 5);
        }
    }

    #[test]
    fn grid_search_is_deterministic() {
        let train = blobs(10, 0.4, 9);
        let grid = GridSpec::dyadic(-4, 0);
        let (p1, m1) = grid_search(&train, &grid, 3, 42).unwrap();
        let (p2, m2) = grid_search(&train, &grid, 3, 42).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(m1.dual_coefficients, m2.dual_coefficients);
    }

    #[test]
    fn model_file_round_trips() {
        let train = blobs(8, 1.0, 4);
        let clf = train_classifier(
            ClassifierKind::Nb,
            &train,
            &GridSpec::default(),
            5,
            &BaselineParams::default(),
            1,
        )
        .unwrap();
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            campaign: Some("c".into()),
            seed: 1,
            classifier: clf,
        };
        let dir = std::env::temp_dir().join(format!("likefarm-model-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        file.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        assert_eq!(loaded.campaign.as_deref(), Some("c"));
        let probe = vec![0.9, 0.1];
        assert_eq!(
            loaded.classifier.predict_farm(&probe).unwrap(),
            file.classifier.predict_farm(&probe).unwrap()
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
