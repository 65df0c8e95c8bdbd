//! Like-farm account detection toolkit.
//!
//! Two detection routes over a social like/timeline corpus:
//! - spectral co-clustering of the user-page like graph, which separates
//!   burst-style farm campaigns but degrades on stealthy ones that mimic
//!   normal liking behavior;
//! - a timeline classifier over 12 lexical + 4 non-lexical per-user features
//!   (ν-SVM with RBF kernel, plus five comparison classifiers).
//!
//! A calibrated synthetic corpus generator stands in for crawl data, so the
//! full pipeline is runnable and testable end to end.

pub mod bipartite;
pub mod classify;
pub mod cocluster;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod features;
pub mod lexical;
pub mod linalg;
pub mod nonlexical;
pub mod synthgen;

pub use error::{Error, Result};
