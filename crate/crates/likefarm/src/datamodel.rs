//! Core entities (accounts, posts, like events, pages) and JSONL ingestion.
//!
//! File formats, one JSON object per line:
//! - `accounts.jsonl`: `{"id": str, "label": "farm:<campaign>"|"baseline"|"unknown"}`
//! - `posts.jsonl`: `{"author", "kind", "text", "n_comments", "n_likes", "is_shared", "ts"}`
//! - `likes.jsonl`: `{"user", "page", "ts"}`
//! - `pages.jsonl` (optional): `{"id", "popularity"}`

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ground-truth class of an account.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// Member of a like-farm campaign (carries the campaign name).
    Farm(String),
    Baseline,
    Unknown,
}

impl Label {
    pub fn is_farm(&self) -> bool {
        matches!(self, Label::Farm(_))
    }

    pub fn campaign(&self) -> Option<&str> {
        match self {
            Label::Farm(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Farm(c) => write!(f, "farm:{c}"),
            Label::Baseline => write!(f, "baseline"),
            Label::Unknown => write!(f, "unknown"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "baseline" => Ok(Label::Baseline),
            "unknown" => Ok(Label::Unknown),
            other => match other.strip_prefix("farm:") {
                Some(c) if !c.is_empty() => Ok(Label::Farm(c.to_string())),
                _ => Err(format!(
                    "bad label {other:?} (expected \"farm:<campaign>\", \"baseline\" or \"unknown\")"
                )),
            },
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: String,
    #[serde(default = "default_label")]
    pub label: Label,
}

fn default_label() -> Label {
    Label::Unknown
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostKind {
    Text,
    Link,
    Video,
    Photo,
    Shared,
    Other,
}

impl PostKind {
    pub const ALL: [PostKind; 6] = [
        PostKind::Text,
        PostKind::Link,
        PostKind::Video,
        PostKind::Photo,
        PostKind::Shared,
        PostKind::Other,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PostKind::Text => "text",
            PostKind::Link => "link",
            PostKind::Video => "video",
            PostKind::Photo => "photo",
            PostKind::Shared => "shared",
            PostKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub author: String,
    pub kind: PostKind,
    #[serde(default)]
    pub text: String,
    pub n_comments: u32,
    pub n_likes: u32,
    #[serde(default)]
    pub is_shared: bool,
    pub ts: i64,
}

impl Post {
    /// A post carries text when it is non-empty after trimming whitespace.
    pub fn is_text_bearing(&self) -> bool {
        !self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikeEvent {
    pub user: String,
    pub page: String,
    pub ts: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub id: String,
    #[serde(default)]
    pub popularity: u64,
}

/// A fully cross-referenced corpus: every post author and like user resolves
/// to an account, every liked page resolves to a page entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub accounts: Vec<Account>,
    pub posts: Vec<Post>,
    pub likes: Vec<LikeEvent>,
    pub pages: Vec<Page>,
}

impl Dataset {
    pub fn labels_by_id(&self) -> BTreeMap<String, Label> {
        self.accounts
            .iter()
            .map(|a| (a.id.clone(), a.label.clone()))
            .collect()
    }

    /// Campaign names present in the dataset, sorted.
    pub fn campaigns(&self) -> Vec<String> {
        let set: BTreeSet<String> = self
            .accounts
            .iter()
            .filter_map(|a| a.label.campaign().map(str::to_string))
            .collect();
        set.into_iter().collect()
    }

    /// Restrict to one campaign's farm accounts plus every baseline account.
    /// Posts and likes of excluded accounts are dropped; pages are kept.
    pub fn campaign_slice(&self, campaign: &str) -> Dataset {
        let keep: BTreeSet<&str> = self
            .accounts
            .iter()
            .filter(|a| match &a.label {
                Label::Farm(c) => c == campaign,
                Label::Baseline => true,
                Label::Unknown => false,
            })
            .map(|a| a.id.as_str())
            .collect();
        Dataset {
            accounts: self
                .accounts
                .iter()
                .filter(|a| keep.contains(a.id.as_str()))
                .cloned()
                .collect(),
            posts: self
                .posts
                .iter()
                .filter(|p| keep.contains(p.author.as_str()))
                .cloned()
                .collect(),
            likes: self
                .likes
                .iter()
                .filter(|l| keep.contains(l.user.as_str()))
                .cloned()
                .collect(),
            pages: self.pages.clone(),
        }
    }

    /// Write the four JSONL files into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        write_jsonl(&dir.join("accounts.jsonl"), &self.accounts)?;
        write_jsonl(&dir.join("posts.jsonl"), &self.posts)?;
        write_jsonl(&dir.join("likes.jsonl"), &self.likes)?;
        write_jsonl(&dir.join("pages.jsonl"), &self.pages)?;
        Ok(())
    }

    /// Load from a directory holding the JSONL files written by [`Dataset::write_dir`].
    pub fn load_dir(dir: &Path) -> Result<Dataset> {
        let pages = dir.join("pages.jsonl");
        load_dataset(
            &dir.join("accounts.jsonl"),
            &dir.join("posts.jsonl"),
            &dir.join("likes.jsonl"),
            if pages.exists() { Some(&pages) } else { None },
        )
    }
}

/// Load and cross-reference a dataset.
///
/// Unknown labels default to `Unknown`. When `pages_path` is absent, page
/// entries are synthesized from the like events (popularity = distinct likers).
pub fn load_dataset(
    accounts_path: &Path,
    posts_path: &Path,
    likes_path: &Path,
    pages_path: Option<&Path>,
) -> Result<Dataset> {
    let accounts: Vec<Account> = read_jsonl(accounts_path)?;
    let mut ids = BTreeSet::new();
    for a in &accounts {
        if !ids.insert(a.id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate account id {:?} in {}",
                a.id,
                accounts_path.display()
            )));
        }
    }

    let posts: Vec<Post> = read_jsonl_validated(posts_path, |post: &Post, line| {
        if post.kind == PostKind::Text && !post.is_text_bearing() {
            return Err(Error::Parse {
                path: posts_path.display().to_string(),
                line,
                msg: "text post has empty text".into(),
            });
        }
        Ok(())
    })?;
    for p in &posts {
        if !ids.contains(p.author.as_str()) {
            return Err(Error::DanglingReference {
                kind: "account",
                id: p.author.clone(),
            });
        }
    }

    let likes: Vec<LikeEvent> = read_jsonl(likes_path)?;
    for l in &likes {
        if !ids.contains(l.user.as_str()) {
            return Err(Error::DanglingReference {
                kind: "account",
                id: l.user.clone(),
            });
        }
    }

    let pages = match pages_path {
        Some(path) => {
            let pages: Vec<Page> = read_jsonl(path)?;
            let page_ids: BTreeSet<&str> = pages.iter().map(|p| p.id.as_str()).collect();
            if page_ids.len() != pages.len() {
                return Err(Error::InvalidInput(format!(
                    "duplicate page id in {}",
                    path.display()
                )));
            }
            for l in &likes {
                if !page_ids.contains(l.page.as_str()) {
                    return Err(Error::DanglingReference {
                        kind: "page",
                        id: l.page.clone(),
                    });
                }
            }
            pages
        }
        None => {
            let mut counts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for l in &likes {
                counts.entry(&l.page).or_default().insert(&l.user);
            }
            counts
                .into_iter()
                .map(|(id, users)| Page {
                    id: id.to_string(),
                    popularity: users.len() as u64,
                })
                .collect()
        }
    };

    Ok(Dataset {
        accounts,
        posts,
        likes,
        pages,
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl_validated(path, |_, _| Ok(()))
}

fn read_jsonl_validated<T: DeserializeOwned>(
    path: &Path,
    check: impl Fn(&T, usize) -> Result<()>,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg: e.to_string(),
        })?;
        check(&value, lineno)?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("serializable");
        writeln!(w, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn tmpdir() -> tempdir::TempDir {
        tempdir::TempDir::new()
    }

    // Minimal self-rolled tempdir so the crate stays dependency-light in tests.
    mod tempdir {
        use std::path::{Path, PathBuf};
        use std::sync::atomic::{AtomicU64, Ordering};

        static N: AtomicU64 = AtomicU64::new(0);

        pub struct TempDir(PathBuf);

        impl TempDir {
            pub fn new() -> TempDir {
                let dir = std::env::temp_dir().join(format!(
                    "likefarm-test-{}-{}",
                    std::process::id(),
                    N.fetch_add(1, Ordering::Relaxed)
                ));
                std::fs::create_dir_all(&dir).unwrap();
                TempDir(dir)
            }

            pub fn path(&self) -> &Path {
                &self.0
            }
        }

        impl Drop for TempDir {
            fn drop(&mut self) {
                let _ = std::fs::remove_dir_all(&self.0);
            }
        }
    }

    fn write_lines(path: &Path, lines: &[&str]) {
        let mut f = std::fs::File::create(path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
    }

    #[test]
    fn loads_valid_dataset() {
        let dir = tmpdir();
        write_lines(
            &dir.path().join("accounts.jsonl"),
            &[
                r#"{"id":"u1","label":"farm:camp-a"}"#,
                r#"{"id":"u2","label":"baseline"}"#,
            ],
        );
        write_lines(
            &dir.path().join("posts.jsonl"),
            &[
                r#"{"author":"u1","kind":"text","text":"Hello there.","n_comments":0,"n_likes":2,"is_shared":false,"ts":10}"#,
                r#"{"author":"u1","kind":"link","text":"","n_comments":1,"n_likes":0,"is_shared":true,"ts":11}"#,
                r#"{"author":"u2","kind":"text","text":"Fine day.","n_comments":3,"n_likes":1,"is_shared":false,"ts":12}"#,
                r#"{"author":"u2","kind":"photo","text":"","n_comments":0,"n_likes":0,"is_shared":false,"ts":13}"#,
            ],
        );
        write_lines(
            &dir.path().join("likes.jsonl"),
            &[
                r#"{"user":"u1","page":"p1","ts":1}"#,
                r#"{"user":"u1","page":"p2","ts":2}"#,
                r#"{"user":"u2","page":"p1","ts":3}"#,
                r#"{"user":"u2","page":"p2","ts":4}"#,
                r#"{"user":"u2","page":"p3","ts":5}"#,
            ],
        );
        let ds = load_dataset(
            &dir.path().join("accounts.jsonl"),
            &dir.path().join("posts.jsonl"),
            &dir.path().join("likes.jsonl"),
            None,
        )
        .unwrap();
        assert_eq!(ds.accounts.len(), 2);
        assert_eq!(ds.posts.len(), 4);
        assert_eq!(ds.likes.len(), 5);
        assert_eq!(ds.pages.len(), 3);
        assert_eq!(ds.accounts[0].label, Label::Farm("camp-a".into()));
    }

    #[test]
    fn negative_like_count_names_the_line() {
        let dir = tmpdir();
        write_lines(&dir.path().join("accounts.jsonl"), &[r#"{"id":"u1"}"#]);
        write_lines(
            &dir.path().join("posts.jsonl"),
            &[
                r#"{"author":"u1","kind":"text","text":"ok then.","n_comments":0,"n_likes":1,"is_shared":false,"ts":0}"#,
                r#"{"author":"u1","kind":"text","text":"bad.","n_comments":0,"n_likes":-1,"is_shared":false,"ts":0}"#,
            ],
        );
        write_lines(&dir.path().join("likes.jsonl"), &[]);
        let err = load_dataset(
            &dir.path().join("accounts.jsonl"),
            &dir.path().join("posts.jsonl"),
            &dir.path().join("likes.jsonl"),
            None,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("posts.jsonl:2"), "got: {msg}");
    }

    #[test]
    fn dangling_like_user_is_reported() {
        let dir = tmpdir();
        write_lines(&dir.path().join("accounts.jsonl"), &[r#"{"id":"u1"}"#]);
        write_lines(&dir.path().join("posts.jsonl"), &[]);
        write_lines(
            &dir.path().join("likes.jsonl"),
            &[r#"{"user":"u99","page":"p1","ts":0}"#],
        );
        let err = load_dataset(
            &dir.path().join("accounts.jsonl"),
            &dir.path().join("posts.jsonl"),
            &dir.path().join("likes.jsonl"),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("u99"), "got: {err}");
    }

    #[test]
    fn empty_text_post_rejected() {
        let dir = tmpdir();
        write_lines(&dir.path().join("accounts.jsonl"), &[r#"{"id":"u1"}"#]);
        write_lines(
            &dir.path().join("posts.jsonl"),
            &[r#"{"author":"u1","kind":"text","text":"   ","n_comments":0,"n_likes":0,"is_shared":false,"ts":0}"#],
        );
        write_lines(&dir.path().join("likes.jsonl"), &[]);
        let err = load_dataset(
            &dir.path().join("accounts.jsonl"),
            &dir.path().join("posts.jsonl"),
            &dir.path().join("likes.jsonl"),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("posts.jsonl:1"));
    }

    #[test]
    fn write_then_load_round_trips() {
        let ds = Dataset {
            accounts: vec![
                Account {
                    id: "a".into(),
                    label: Label::Farm("x".into()),
                },
                Account {
                    id: "b".into(),
                    label: Label::Baseline,
                },
            ],
            posts: vec![Post {
                author: "a".into(),
                kind: PostKind::Text,
                text: "Round trip!".into(),
                n_comments: 1,
                n_likes: 2,
                is_shared: false,
                ts: 99,
            }],
            likes: vec![LikeEvent {
                user: "b".into(),
                page: "p1".into(),
                ts: 5,
            }],
            pages: vec![Page {
                id: "p1".into(),
                popularity: 1,
            }],
        };
        let dir = tmpdir();
        ds.write_dir(dir.path()).unwrap();
        let loaded = Dataset::load_dir(dir.path()).unwrap();
        assert_eq!(ds, loaded);
    }

    #[test]
    fn label_string_forms() {
        assert_eq!("farm:bl-usa".parse::<Label>().unwrap(), Label::Farm("bl-usa".into()));
        assert_eq!("baseline".parse::<Label>().unwrap(), Label::Baseline);
        assert!("farm:".parse::<Label>().is_err());
        assert_eq!(Label::Farm("x".into()).to_string(), "farm:x");
    }
}
