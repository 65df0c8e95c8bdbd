//! Synthetic corpus generator: labeled accounts, timelines and like events
//! under configurable behavioral profiles (normal users, naive burst farms,
//! stealthy farms), deterministic per seed.
//!
//! Each user draws from an independent substream keyed by (seed, profile,
//! user index), so one profile's output never shifts another's.

pub mod vocab;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::datamodel::{Account, Dataset, Label, LikeEvent, Page, Post, PostKind};
use crate::error::{Error, Result};
use vocab::{
    calibrate_vocabulary_size, content_word, foreign_word, mix, stopword_mean_len,
    stopword_mean_syllables, ZipfTable,
};

const BASE_TS: i64 = 1_700_000_000;
const POST_SPAN_SECS: f64 = 31_536_000.0;
const MAX_POSTS_PER_USER: u64 = 500;

/// Count distribution: dispersion 0 yields the rounded mean exactly, any
/// positive dispersion gives a negative-binomial shape (gamma-mixed Poisson)
/// with that gamma shape parameter. Smaller dispersion = heavier tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountDist {
    pub mean: f64,
    pub dispersion: f64,
}

impl CountDist {
    pub fn exactly(mean: f64) -> CountDist {
        CountDist {
            mean,
            dispersion: 0.0,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        if self.mean <= 0.0 {
            return 0;
        }
        if self.dispersion <= 0.0 {
            return self.mean.round() as u64;
        }
        let gamma = Gamma::new(self.dispersion, self.mean / self.dispersion)
            .expect("validated gamma parameters");
        let lambda: f64 = gamma.sample(rng);
        if lambda < 1e-9 {
            return 0;
        }
        Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementParams {
    pub mean_comments_per_post: f64,
    pub mean_likes_per_post: f64,
    pub share_fraction: f64,
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
}

fn default_dispersion() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalGenParams {
    /// Content vocabulary size (the richness knob; the 200-word stopword
    /// tier sits on top of it).
    pub vocabulary_size: usize,
    pub mean_words_per_post: f64,
    /// Target mean token length in characters, over all tokens.
    pub mean_word_length: f64,
    /// Target words per sentence.
    pub mean_sentence_length: f64,
    /// Per-post probability of English for users who post English at all.
    pub english_fraction: f64,
    #[serde(default = "default_stopword_fraction")]
    pub stopword_fraction: f64,
    /// Target mean syllables per token (drives the Flesch score).
    #[serde(default = "default_syllables_per_word")]
    pub mean_syllables_per_word: f64,
}

fn default_stopword_fraction() -> f64 {
    0.45
}

fn default_syllables_per_word() -> f64 {
    1.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    /// Unique profile name; account ids are `<name>-<index>`.
    pub name: String,
    pub label: Label,
    pub n_users: usize,
    pub likes_per_user: CountDist,
    /// Pages every user of this profile must like (ids from the generated
    /// page universe).
    #[serde(default)]
    pub target_pages: Vec<String>,
    /// Fraction of non-target likes drawn popularity-weighted (Zipf) rather
    /// than uniformly.
    pub popular_page_affinity: f64,
    /// Seconds over which a user's likes are spread.
    pub like_time_spread: f64,
    pub posts_per_user: CountDist,
    /// Fraction of users who never post in English.
    #[serde(default)]
    pub zero_english_fraction: f64,
    pub lexical_params: LexicalGenParams,
    pub engagement_params: EngagementParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub profiles: Vec<BehaviorProfile>,
    pub n_pages: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

pub fn page_id(index: usize) -> String {
    format!("p{:06}", index + 1)
}

fn parse_page_id(id: &str) -> Option<usize> {
    id.strip_prefix('p')
        .and_then(|s| s.parse::<usize>().ok())
        .and_then(|n| n.checked_sub(1))
}

fn validate(config: &GenConfig) -> Result<()> {
    if config.profiles.is_empty() {
        return Err(Error::Config("at least one profile required".into()));
    }
    if config.n_pages == 0 {
        return Err(Error::Config("n_pages must be positive".into()));
    }
    if config.zipf_exponent <= 0.0 {
        return Err(Error::Config("zipf_exponent must be positive".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    for p in &config.profiles {
        if p.name.is_empty() || p.name.contains(char::is_whitespace) {
            return Err(Error::Config(format!("bad profile name {:?}", p.name)));
        }
        if !names.insert(&p.name) {
            return Err(Error::Config(format!("duplicate profile name {:?}", p.name)));
        }
        for frac in [
            p.popular_page_affinity,
            p.zero_english_fraction,
            p.lexical_params.english_fraction,
            p.lexical_params.stopword_fraction,
            p.engagement_params.share_fraction,
        ] {
            if !(0.0..=1.0).contains(&frac) {
                return Err(Error::Config(format!(
                    "profile {:?}: fraction {frac} out of [0, 1]",
                    p.name
                )));
            }
        }
        if p.like_time_spread <= 0.0 {
            return Err(Error::Config(format!(
                "profile {:?}: like_time_spread must be positive",
                p.name
            )));
        }
        if p.lexical_params.vocabulary_size == 0 {
            return Err(Error::Config(format!(
                "profile {:?}: vocabulary_size must be >= 1",
                p.name
            )));
        }
        for (what, v) in [
            ("mean_words_per_post", p.lexical_params.mean_words_per_post),
            ("mean_word_length", p.lexical_params.mean_word_length),
            ("mean_sentence_length", p.lexical_params.mean_sentence_length),
        ] {
            if v <= 0.0 {
                return Err(Error::Config(format!(
                    "profile {:?}: {what} must be positive",
                    p.name
                )));
            }
        }
        if p.likes_per_user.mean + p.target_pages.len() as f64 > config.n_pages as f64 {
            return Err(Error::Config(format!(
                "profile {:?}: likes_per_user mean {} plus {} target pages exceeds n_pages {} under deduplication",
                p.name,
                p.likes_per_user.mean,
                p.target_pages.len(),
                config.n_pages
            )));
        }
        for t in &p.target_pages {
            match parse_page_id(t) {
                Some(idx) if idx < config.n_pages => {}
                _ => {
                    return Err(Error::Config(format!(
                        "profile {:?}: target page {t:?} outside the page universe (n_pages = {})",
                        p.name, config.n_pages
                    )))
                }
            }
        }
    }
    Ok(())
}

/// Generate a full dataset. Deterministic: the same config yields the same
/// byte-identical output.
pub fn generate(config: &GenConfig) -> Result<Dataset> {
    validate(config)?;
    let page_table = ZipfTable::new(config.n_pages, config.zipf_exponent);

    let mut accounts = Vec::new();
    let mut posts = Vec::new();
    let mut likes = Vec::new();
    let mut page_likes = vec![0u64; config.n_pages];

    for (pi, profile) in config.profiles.iter().enumerate() {
        let word_seed = mix(config.seed, mix(0x77_0c, pi as u64));
        let content_table = ZipfTable::new(profile.lexical_params.vocabulary_size, CONTENT_ZIPF_S);
        let foreign_table = ZipfTable::new(FOREIGN_POOL, 1.0);
        let targets: Vec<usize> = profile
            .target_pages
            .iter()
            .map(|t| parse_page_id(t).expect("validated"))
            .collect();

        for u in 0..profile.n_users {
            let id = format!("{}-{:05}", profile.name, u + 1);
            accounts.push(Account {
                id: id.clone(),
                label: profile.label.clone(),
            });
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix(config.seed, mix(pi as u64, 0x10_000 + u as u64)));

            gen_likes(
                &mut rng,
                profile,
                &targets,
                &page_table,
                config.n_pages,
                &id,
                &mut likes,
                &mut page_likes,
            );
            gen_posts(
                &mut rng,
                profile,
                word_seed,
                &content_table,
                &foreign_table,
                &id,
                &mut posts,
            );
        }
    }

    let pages = (0..config.n_pages)
        .map(|i| Page {
            id: page_id(i),
            popularity: page_likes[i],
        })
        .collect();

    Ok(Dataset {
        accounts,
        posts,
        likes,
        pages,
    })
}

/// Zipf exponent of the content-word frequency law.
pub const CONTENT_ZIPF_S: f64 = 0.7;
const FOREIGN_POOL: usize = 4000;

#[allow(clippy::too_many_arguments)]
fn gen_likes(
    rng: &mut ChaCha8Rng,
    profile: &BehaviorProfile,
    targets: &[usize],
    page_table: &ZipfTable,
    n_pages: usize,
    user_id: &str,
    likes: &mut Vec<LikeEvent>,
    page_likes: &mut [u64],
) {
    let mut chosen: std::collections::BTreeSet<usize> = targets.iter().copied().collect();
    let n_extra = (profile.likes_per_user.sample(rng) as usize).min(n_pages - targets.len());
    let mut extras = Vec::with_capacity(n_extra);
    let mut attempts = 0usize;
    let max_attempts = 64 + 32 * n_extra;
    while extras.len() < n_extra && attempts < max_attempts {
        attempts += 1;
        let idx = if rng.gen::<f64>() < profile.popular_page_affinity {
            page_table.sample(rng)
        } else {
            rng.gen_range(0..n_pages)
        };
        if chosen.insert(idx) {
            extras.push(idx);
        }
    }
    // Degenerate configs (tiny page universe): fill from the popular end.
    let mut fill = 0usize;
    while extras.len() < n_extra && fill < n_pages {
        if chosen.insert(fill) {
            extras.push(fill);
        }
        fill += 1;
    }

    for &idx in targets.iter().chain(extras.iter()) {
        let ts = BASE_TS + (rng.gen::<f64>() * profile.like_time_spread) as i64;
        likes.push(LikeEvent {
            user: user_id.to_string(),
            page: page_id(idx),
            ts,
        });
        page_likes[idx] += 1;
    }
}

fn gen_posts(
    rng: &mut ChaCha8Rng,
    profile: &BehaviorProfile,
    word_seed: u64,
    content_table: &ZipfTable,
    foreign_table: &ZipfTable,
    user_id: &str,
    posts: &mut Vec<Post>,
) {
    let lex = &profile.lexical_params;
    let zero_english = rng.gen::<f64>() < profile.zero_english_fraction;
    let n_posts = profile.posts_per_user.sample(rng).min(MAX_POSTS_PER_USER);

    let eng = &profile.engagement_params;
    let comments_dist = CountDist {
        mean: eng.mean_comments_per_post,
        dispersion: eng.dispersion,
    };
    let likes_dist = CountDist {
        mean: eng.mean_likes_per_post,
        dispersion: eng.dispersion,
    };

    // Mean content-word length/syllables that land the all-token targets
    // given the stopword tier's contribution.
    let q = lex.stopword_fraction;
    let content_len =
        ((lex.mean_word_length - q * stopword_mean_len()) / (1.0 - q).max(1e-9)).max(2.0);
    let content_syl =
        ((lex.mean_syllables_per_word - q * stopword_mean_syllables()) / (1.0 - q).max(1e-9))
            .max(1.0);

    for _ in 0..n_posts {
        let shared_roll = rng.gen::<f64>() < eng.share_fraction;
        let kind = if shared_roll {
            let r: f64 = rng.gen();
            if r < 0.5 {
                PostKind::Shared
            } else if r < 0.8 {
                PostKind::Link
            } else {
                PostKind::Video
            }
        } else {
            let r: f64 = rng.gen();
            if r < 0.8 {
                PostKind::Text
            } else if r < 0.92 {
                PostKind::Photo
            } else {
                PostKind::Other
            }
        };

        let text = if kind == PostKind::Text {
            let english = !zero_english && rng.gen::<f64>() < lex.english_fraction;
            let n_words = if lex.mean_words_per_post > 1.0 {
                1 + Poisson::new(lex.mean_words_per_post - 1.0)
                    .expect("positive")
                    .sample(rng) as usize
            } else {
                1
            };
            let words: Vec<String> = (0..n_words)
                .map(|_| {
                    if english {
                        if rng.gen::<f64>() < q {
                            crate::lexical::STOPWORDS[rng.gen_range(0..200)].to_string()
                        } else {
                            let rank = content_table.sample(rng);
                            content_word(word_seed, rank, content_len, content_syl)
                        }
                    } else {
                        let rank = foreign_table.sample(rng);
                        foreign_word(word_seed, rank, content_len.max(4.0))
                    }
                })
                .collect();
            render_sentences(&words, lex.mean_sentence_length)
        } else {
            String::new()
        };

        posts.push(Post {
            author: user_id.to_string(),
            kind,
            text,
            n_comments: comments_dist.sample(rng) as u32,
            n_likes: likes_dist.sample(rng) as u32,
            is_shared: shared_roll,
            ts: BASE_TS + (rng.gen::<f64>() * POST_SPAN_SECS) as i64,
        });
    }
}

/// Join words into sentences of roughly `mean_sentence_length` words, each
/// capitalized and terminated with a period.
fn render_sentences(words: &[String], mean_sentence_length: f64) -> String {
    let n_words = words.len();
    let n_sent = ((n_words as f64 / mean_sentence_length).round() as usize).clamp(1, n_words);
    let base = n_words / n_sent;
    let extra = n_words % n_sent;
    let mut out = String::new();
    let mut cursor = 0;
    for s in 0..n_sent {
        let len = base + usize::from(s < extra);
        let chunk = &words[cursor..cursor + len];
        cursor += len;
        if s > 0 {
            out.push(' ');
        }
        let mut sentence = chunk.join(" ");
        if let Some(first) = sentence.get(..1) {
            let upper = first.to_ascii_uppercase();
            sentence.replace_range(..1, &upper);
        }
        out.push_str(&sentence);
        out.push('.');
    }
    out
}

/// The default desk-scale calibration: one baseline population (plus a small
/// high-engagement baseline cohort) and six farm campaign profiles. The
/// stealthy campaign (bl-usa) mirrors baseline behavior except in its text
/// style and likes popular pages; the al/sf/ms campaigns burst-like obscure
/// target pages and differ sharply in engagement.
pub fn reference_calibration(seed: u64) -> GenConfig {
    let n_pages = 1500;

    struct Row {
        name: &'static str,
        label: Label,
        n_users: usize,
        awl: f64,
        asl: f64,
        richness: f64,
        flesch: f64,
        english_fraction: f64,
        zero_english_fraction: f64,
        words_per_post: f64,
        posts_per_user: f64,
        likes_per_user: f64,
        affinity: f64,
        n_targets: usize,
        spread_days: f64,
        comments: f64,
        likes: f64,
        share: f64,
    }

    let farm = |c: &str| Label::Farm(c.to_string());
    let rows = vec![
        Row { name: "baseline", label: Label::Baseline, n_users: 425, awl: 6.9, asl: 17.6, richness: 0.70, flesch: 55.1, english_fraction: 0.86, zero_english_fraction: 0.14, words_per_post: 17.6, posts_per_user: 40.0, likes_per_user: 45.0, affinity: 0.80, n_targets: 0, spread_days: 180.0, comments: 0.8, likes: 1.5, share: 0.20 },
        Row { name: "baseline-active", label: Label::Baseline, n_users: 75, awl: 6.9, asl: 17.6, richness: 0.70, flesch: 55.1, english_fraction: 0.86, zero_english_fraction: 0.14, words_per_post: 17.6, posts_per_user: 40.0, likes_per_user: 45.0, affinity: 0.80, n_targets: 0, spread_days: 180.0, comments: 3.0, likes: 5.0, share: 0.30 },
        Row { name: "bl-usa", label: farm("bl-usa"), n_users: 520, awl: 5.7, asl: 17.6, richness: 0.58, flesch: 51.5, english_fraction: 0.88, zero_english_fraction: 0.03, words_per_post: 17.6, posts_per_user: 45.0, likes_per_user: 45.0, affinity: 0.80, n_targets: 2, spread_days: 180.0, comments: 0.8, likes: 1.5, share: 0.20 },
        Row { name: "al-all", label: farm("al-all"), n_users: 500, awl: 6.2, asl: 13.9, richness: 0.59, flesch: 43.6, english_fraction: 0.10, zero_english_fraction: 0.22, words_per_post: 9.5, posts_per_user: 45.0, likes_per_user: 55.0, affinity: 0.05, n_targets: 25, spread_days: 2.0, comments: 4.0, likes: 6.0, share: 0.50 },
        Row { name: "al-usa", label: farm("al-usa"), n_users: 550, awl: 6.2, asl: 12.7, richness: 0.49, flesch: 54.0, english_fraction: 0.88, zero_english_fraction: 0.05, words_per_post: 9.0, posts_per_user: 35.0, likes_per_user: 55.0, affinity: 0.03, n_targets: 25, spread_days: 2.0, comments: 3.0, likes: 5.0, share: 0.45 },
        Row { name: "sf-all", label: farm("sf-all"), n_users: 550, awl: 6.3, asl: 11.7, richness: 0.58, flesch: 45.2, english_fraction: 0.15, zero_english_fraction: 0.18, words_per_post: 8.5, posts_per_user: 40.0, likes_per_user: 45.0, affinity: 0.10, n_targets: 20, spread_days: 3.0, comments: 2.5, likes: 5.5, share: 0.55 },
        Row { name: "sf-usa", label: farm("sf-usa"), n_users: 450, awl: 6.3, asl: 12.0, richness: 0.55, flesch: 45.6, english_fraction: 0.80, zero_english_fraction: 0.08, words_per_post: 9.0, posts_per_user: 42.0, likes_per_user: 45.0, affinity: 0.08, n_targets: 20, spread_days: 3.0, comments: 2.8, likes: 5.0, share: 0.50 },
        Row { name: "ms-usa", label: farm("ms-usa"), n_users: 260, awl: 6.1, asl: 17.8, richness: 0.53, flesch: 50.1, english_fraction: 0.85, zero_english_fraction: 0.05, words_per_post: 12.0, posts_per_user: 38.0, likes_per_user: 50.0, affinity: 0.10, n_targets: 15, spread_days: 2.0, comments: 2.0, likes: 4.0, share: 0.45 },
    ];

    let q = default_stopword_fraction();
    let mut next_target = n_pages; // target blocks are carved from the unpopular tail
    let profiles = rows
        .into_iter()
        .map(|row| {
            // Expected English words per user, the volume richness is
            // calibrated at.
            let text_fraction = (1.0 - row.share) * 0.8;
            let english_words = row.posts_per_user
                * text_fraction
                * row.english_fraction
                * row.words_per_post;
            // The per-user word-volume spread biases realized mean richness
            // upward of the fixed-volume expectation; solve slightly low.
            let vocabulary_size = calibrate_vocabulary_size(
                (row.richness - 0.03).max(0.05),
                english_words.max(8.0),
                q,
                CONTENT_ZIPF_S,
            );
            // Syllable target from the Flesch identity at the effective
            // sentence length (posts shorter than one target sentence end up
            // as a single sentence).
            let asl_effective = row.asl.min(row.words_per_post);
            let spw = ((206.835 - 1.015 * asl_effective - row.flesch) / 84.6).clamp(1.0, 4.0);

            let targets: Vec<String> = (0..row.n_targets)
                .map(|t| page_id(next_target - 1 - t))
                .collect();
            next_target -= row.n_targets + 5;

            BehaviorProfile {
                name: row.name.to_string(),
                label: row.label,
                n_users: row.n_users,
                likes_per_user: CountDist {
                    mean: row.likes_per_user,
                    dispersion: 4.0,
                },
                target_pages: targets,
                popular_page_affinity: row.affinity,
                like_time_spread: row.spread_days * 86_400.0,
                posts_per_user: CountDist {
                    mean: row.posts_per_user,
                    dispersion: 1.5,
                },
                zero_english_fraction: row.zero_english_fraction,
                lexical_params: LexicalGenParams {
                    vocabulary_size,
                    mean_words_per_post: row.words_per_post,
                    mean_word_length: row.awl,
                    mean_sentence_length: row.asl,
                    english_fraction: row.english_fraction,
                    stopword_fraction: q,
                    mean_syllables_per_word: spw,
                },
                engagement_params: EngagementParams {
                    mean_comments_per_post: row.comments,
                    mean_likes_per_post: row.likes,
                    share_fraction: row.share,
                    dispersion: 1.0,
                },
            }
        })
        .collect();

    GenConfig {
        profiles,
        n_pages,
        zipf_exponent: 1.0,
        seed,
    }
}
