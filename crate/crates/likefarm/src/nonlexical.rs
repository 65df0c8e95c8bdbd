//! Non-lexical engagement features and the post-type distribution.

use serde::{Deserialize, Serialize};

use crate::datamodel::{Post, PostKind};
use crate::lexical::tokenize;

/// The four engagement features of one user, arithmetic means over their
/// posts. Words per post is averaged over text-bearing posts of any language;
/// the other three use every post.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NonLexicalFeatures {
    pub avg_words_per_post: f64,
    pub avg_comments_per_post: f64,
    pub avg_likes_per_post: f64,
    pub share_fraction: f64,
}

impl NonLexicalFeatures {
    pub const NAMES: [&'static str; 4] = [
        "avg_words_per_post",
        "avg_comments_per_post",
        "avg_likes_per_post",
        "share_fraction",
    ];

    pub fn values(&self) -> [f64; 4] {
        [
            self.avg_words_per_post,
            self.avg_comments_per_post,
            self.avg_likes_per_post,
            self.share_fraction,
        ]
    }
}

pub fn nonlexical_profile(posts: &[&Post]) -> NonLexicalFeatures {
    if posts.is_empty() {
        return NonLexicalFeatures::default();
    }
    let n = posts.len() as f64;
    let mut text_posts = 0u64;
    let mut words = 0u64;
    let mut comments = 0u64;
    let mut likes = 0u64;
    let mut shared = 0u64;
    for p in posts {
        comments += u64::from(p.n_comments);
        likes += u64::from(p.n_likes);
        if p.is_shared {
            shared += 1;
        }
        if p.is_text_bearing() {
            text_posts += 1;
            words += tokenize(&p.text).words.len() as u64;
        }
    }
    NonLexicalFeatures {
        avg_words_per_post: if text_posts == 0 {
            0.0
        } else {
            words as f64 / text_posts as f64
        },
        avg_comments_per_post: comments as f64 / n,
        avg_likes_per_post: likes as f64 / n,
        share_fraction: shared as f64 / n,
    }
}

/// Exact post counts by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PostTypeHistogram {
    pub counts: [u64; 6],
    pub total: u64,
}

impl PostTypeHistogram {
    pub fn count(&self, kind: PostKind) -> u64 {
        self.counts[kind_index(kind)]
    }

    pub fn fraction(&self, kind: PostKind) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(kind) as f64 / self.total as f64
        }
    }
}

fn kind_index(kind: PostKind) -> usize {
    PostKind::ALL.iter().position(|k| *k == kind).unwrap()
}

pub fn post_type_histogram<'a>(posts: impl IntoIterator<Item = &'a Post>) -> PostTypeHistogram {
    let mut h = PostTypeHistogram::default();
    for p in posts {
        h.counts[kind_index(p.kind)] += 1;
        h.total += 1;
    }
    h
}
