//! Per-user feature assembly: the 12 lexical + 4 non-lexical values in a
//! frozen canonical order, the zero-fill rule for users without English
//! posts, and train-set standardization.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{read_jsonl, write_jsonl, Dataset, Label, Post};
use crate::error::{Error, Result};
use crate::lexical::{english_ratio, lexical_profile, LexicalFeatures};
use crate::nonlexical::{nonlexical_profile, NonLexicalFeatures};

pub const N_FEATURES: usize = 16;

/// Canonical feature order: the 12 lexical fields in declaration order, then
/// the 4 non-lexical fields. Frozen so incremental-feature runs are
/// reproducible.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "n_chars",
    "n_words",
    "n_sentences",
    "avg_word_length",
    "avg_sentence_length",
    "avg_uppercase",
    "pct_punctuation",
    "pct_numbers",
    "pct_non_letters",
    "richness",
    "ari",
    "flesch",
    "avg_words_per_post",
    "avg_comments_per_post",
    "avg_likes_per_post",
    "share_fraction",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub user: String,
    pub label: Label,
    pub values: Vec<f64>,
}

/// Place the two feature blocks into one 16-vector. Lexical slots are zeroed
/// when the user has no English posts (english_ratio = 0).
pub fn assemble(
    user: &str,
    label: Label,
    lexical: &LexicalFeatures,
    nonlexical: &NonLexicalFeatures,
    english_ratio: f64,
) -> Result<FeatureVector> {
    let lex = if english_ratio == 0.0 {
        [0.0; 12]
    } else {
        lexical.values()
    };
    let mut values = Vec::with_capacity(N_FEATURES);
    values.extend_from_slice(&lex);
    values.extend_from_slice(&nonlexical.values());
    for (v, name) in values.iter().zip(FEATURE_NAMES) {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                field: name.to_string(),
                user: user.to_string(),
            });
        }
    }
    Ok(FeatureVector {
        user: user.to_string(),
        label,
        values,
    })
}

/// Row of `features.jsonl`: every feature by name plus the English ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatures {
    pub user: String,
    pub label: Label,
    pub english_ratio: f64,
    pub lexical: LexicalFeatures,
    pub nonlexical: NonLexicalFeatures,
}

impl UserFeatures {
    pub fn to_vector(&self) -> Result<FeatureVector> {
        assemble(
            &self.user,
            self.label.clone(),
            &self.lexical,
            &self.nonlexical,
            self.english_ratio,
        )
    }
}

/// Run the full extraction over a dataset: group posts per account, compute
/// the English ratio and both feature blocks. Accounts without posts get
/// all-zero features. Output is ordered by account order in the dataset.
pub fn extract_features(dataset: &Dataset) -> Vec<UserFeatures> {
    let mut by_author: BTreeMap<&str, Vec<&Post>> = BTreeMap::new();
    for p in &dataset.posts {
        by_author.entry(p.author.as_str()).or_default().push(p);
    }
    dataset
        .accounts
        .iter()
        .map(|account| {
            let posts = by_author.get(account.id.as_str()).map_or(&[][..], |v| &v[..]);
            let texts: Vec<&str> = posts
                .iter()
                .filter(|p| p.is_text_bearing())
                .map(|p| p.text.as_str())
                .collect();
            let ratio = english_ratio(texts.iter().copied()).r;
            UserFeatures {
                user: account.id.clone(),
                label: account.label.clone(),
                english_ratio: ratio,
                lexical: lexical_profile(texts.iter().copied()),
                nonlexical: nonlexical_profile(posts),
            }
        })
        .collect()
}

pub fn write_features(path: &Path, features: &[UserFeatures]) -> Result<()> {
    write_jsonl(path, features)
}

pub fn read_features(path: &Path) -> Result<Vec<UserFeatures>> {
    read_jsonl(path)
}

/// Per-dimension standardization fitted on a training set. A constant
/// dimension keeps standard deviation 1 so it passes through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_scaler(train: &[Vec<f64>]) -> Result<Scaler> {
    if train.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "scaler needs at least 2 training vectors, got {}",
            train.len()
        )));
    }
    let dim = train[0].len();
    if train.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidInput("inconsistent vector dimensions".into()));
    }
    let n = train.len() as f64;
    let mut means = vec![0.0; dim];
    for v in train {
        for (m, x) in means.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; dim];
    for v in train {
        for ((var, x), m) in vars.iter_mut().zip(v).zip(&means) {
            *var += (x - m) * (x - m);
        }
    }
    let stds = vars
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Ok(Scaler { means, stds })
}

impl Scaler {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn apply_vector(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector {
            user: v.user.clone(),
            label: v.label.clone(),
            values: self.apply(&v.values),
        }
    }
}
