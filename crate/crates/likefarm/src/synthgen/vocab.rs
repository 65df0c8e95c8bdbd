//! Deterministic synthetic vocabularies. Words are assembled from
//! consonant-onset / vowel-nucleus / coda units so their length and
//! vowel-group count (hence syllables) are controlled exactly; the English
//! tier is headed by the shared stopword list, the non-English pool uses a
//! disjoint set of onsets so it can never hit a stopword.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lexical::{count_syllables, STOPWORDS};

const ONSETS: [&str; 36] = [
    "b", "br", "c", "cr", "d", "dr", "f", "fl", "fr", "g", "gl", "gr", "h", "j", "k", "l", "m",
    "n", "p", "pl", "pr", "r", "s", "sk", "sl", "sm", "sp", "st", "str", "t", "tr", "v", "w",
    "sh", "ch", "th",
];
const NUCLEI_SHORT: [&str; 5] = ["a", "e", "i", "o", "u"];
const NUCLEI_LONG: [&str; 9] = ["ai", "au", "ea", "ee", "ei", "ie", "oa", "oo", "ou"];
const CODAS: [&str; 30] = [
    "", "b", "ck", "d", "ft", "g", "k", "l", "lk", "lt", "m", "mp", "n", "nd", "ng", "nk", "nt",
    "p", "r", "rd", "rk", "rm", "rn", "rt", "s", "sk", "sp", "st", "t", "x",
];
const LONG_CODAS: [&str; 6] = ["rst", "mps", "nks", "rth", "nts", "lds"];

const FOREIGN_ONSETS: [&str; 12] = [
    "kz", "vr", "zk", "tk", "qh", "xh", "gz", "kt", "zv", "vx", "dz", "tz",
];

pub(crate) fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// Build one word of exactly `len` characters with `syllables` vowel groups.
fn assemble(rng: &mut ChaCha8Rng, onsets: &[&str], len: usize, syllables: usize) -> String {
    let len = len.clamp(2, 24);
    let syllables = syllables.clamp(1, len / 2);
    // Distribute the length over syllables as evenly as possible.
    let base = len / syllables;
    let extra = len % syllables;
    let mut word = String::with_capacity(len);
    for s in 0..syllables {
        let budget = base + usize::from(s < extra);
        let budget = budget.clamp(2, 8);
        let last = s + 1 == syllables;
        // Feasible (onset, nucleus, coda) length triples for this budget.
        let mut triples = Vec::new();
        for lo in 1..=3usize {
            for ln in 1..=2usize {
                for lc in [0usize, 1, 2, 3] {
                    if lo + ln + lc == budget {
                        triples.push((lo, ln, lc));
                    }
                }
            }
        }
        let (lo, ln, lc) = if triples.is_empty() {
            (1, 1, 0)
        } else {
            triples[rng.gen_range(0..triples.len())]
        };
        let onset_pool: Vec<&str> = onsets.iter().filter(|o| o.len() == lo).copied().collect();
        let onset = if onset_pool.is_empty() {
            onsets[rng.gen_range(0..onsets.len())]
        } else {
            pick(rng, &onset_pool)
        };
        let nucleus = if ln >= 2 {
            pick(rng, &NUCLEI_LONG)
        } else if last && lc == 0 {
            // Avoid a trailing lone 'e', which the syllable counter elides.
            let safe = ["a", "i", "o", "u"];
            pick(rng, &safe)
        } else {
            pick(rng, &NUCLEI_SHORT)
        };
        let coda = match lc {
            0 => "",
            3 => pick(rng, &LONG_CODAS),
            n => {
                let pool: Vec<&str> = CODAS.iter().filter(|c| c.len() == n).copied().collect();
                pick(rng, &pool)
            }
        };
        word.push_str(onset);
        word.push_str(nucleus);
        word.push_str(coda);
    }
    word
}

/// English content word for a vocabulary rank. Pure function of
/// (seed, rank, targets); collides with no stopword.
pub fn content_word(seed: u64, rank: usize, mean_len: f64, mean_syllables: f64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, rank as u64));
    // Floor-dithering keeps the expected value exactly on target.
    let len = (mean_len + rng.gen::<f64>()).floor().max(2.0) as usize;
    let syl = (mean_syllables + rng.gen::<f64>()).floor().max(1.0) as usize;
    let mut word = assemble(&mut rng, &ONSETS, len, syl);
    while STOPWORDS.contains(&word.as_str()) {
        word.push('t');
    }
    debug_assert!(count_syllables(&word) >= 1);
    word
}

/// Non-English token. The onset pool is disjoint from every stopword prefix,
/// so the English detector scores zero coverage on these posts.
pub fn foreign_word(seed: u64, rank: usize, mean_len: f64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ 0x00ff_00ff, rank as u64));
    let len = (mean_len + rng.gen::<f64>()).floor().max(3.0) as usize;
    let syl = ((len as f64) / 4.0).round().max(1.0) as usize;
    assemble(&mut rng, &FOREIGN_ONSETS, len, syl)
}

/// Zipf sampling table over ranks 1..=n with exponent `s`.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    cumulative: Vec<f64>,
}

impl ZipfTable {
    pub fn new(n: usize, s: f64) -> ZipfTable {
        assert!(n >= 1);
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for r in 1..=n {
            acc += (r as f64).powf(-s);
            cumulative.push(acc);
        }
        let total = acc;
        for c in &mut cumulative {
            *c /= total;
        }
        ZipfTable { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    /// Zero-based rank index.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c < u).min(self.cumulative.len() - 1)
    }
}

/// Average character length of the stopword tier (uniform weights).
pub fn stopword_mean_len() -> f64 {
    STOPWORDS.iter().map(|w| w.len()).sum::<usize>() as f64 / STOPWORDS.len() as f64
}

/// Average syllables of the stopword tier (uniform weights).
pub fn stopword_mean_syllables() -> f64 {
    STOPWORDS.iter().map(|w| count_syllables(w)).sum::<u64>() as f64 / STOPWORDS.len() as f64
}

/// Expected unique/total word ratio when drawing `n_words` tokens with the
/// two-tier sampler: stopwords uniformly with probability `stopword_fraction`,
/// otherwise Zipf(`zipf_s`) over a content vocabulary of `vocab_size`.
pub fn expected_richness(
    n_words: f64,
    stopword_fraction: f64,
    vocab_size: usize,
    zipf_s: f64,
) -> f64 {
    if n_words <= 0.0 {
        return 0.0;
    }
    let n_stop = stopword_fraction * n_words;
    let n_content = n_words - n_stop;
    let e_stop = 200.0 * (1.0 - (n_stop * (1.0f64 - 1.0 / 200.0).ln()).exp());

    let mut h = 0.0;
    for r in 1..=vocab_size {
        h += (r as f64).powf(-zipf_s);
    }
    let mut e_content = 0.0;
    for r in 1..=vocab_size {
        let p = (r as f64).powf(-zipf_s) / h;
        e_content += 1.0 - (n_content * (-p).ln_1p()).exp();
    }
    (e_stop + e_content) / n_words
}

/// Smallest content vocabulary size whose expected richness reaches the
/// target at the given word volume. Richness rises with vocabulary size, so
/// binary search applies; the result is clamped to [2, 400_000].
pub fn calibrate_vocabulary_size(
    target_richness: f64,
    n_words: f64,
    stopword_fraction: f64,
    zipf_s: f64,
) -> usize {
    let (mut lo, mut hi) = (2usize, 400_000usize);
    if expected_richness(n_words, stopword_fraction, hi, zipf_s) < target_richness {
        return hi;
    }
    if expected_richness(n_words, stopword_fraction, lo, zipf_s) >= target_richness {
        return lo;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if expected_richness(n_words, stopword_fraction, mid, zipf_s) >= target_richness {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::is_english;
    use std::collections::HashSet;

    #[test]
    fn content_words_hit_length_and_syllable_targets_on_average() {
        let n = 2000;
        let mut len_sum = 0.0;
        let mut syl_sum = 0.0;
        for rank in 0..n {
            let w = content_word(42, rank, 9.0, 2.0);
            len_sum += w.len() as f64;
            syl_sum += count_syllables(&w) as f64;
        }
        let mean_len = len_sum / n as f64;
        let mean_syl = syl_sum / n as f64;
        assert!((mean_len - 9.0).abs() < 0.6, "mean len {mean_len}");
        assert!((mean_syl - 2.0).abs() < 0.3, "mean syl {mean_syl}");
    }

    #[test]
    fn content_words_are_deterministic_and_mostly_distinct() {
        let a: Vec<String> = (0..500).map(|r| content_word(7, r, 8.0, 2.0)).collect();
        let b: Vec<String> = (0..500).map(|r| content_word(7, r, 8.0, 2.0)).collect();
        assert_eq!(a, b);
        let distinct: HashSet<&String> = a.iter().collect();
        assert!(distinct.len() > 450, "{} distinct of 500", distinct.len());
    }

    #[test]
    fn foreign_words_never_look_english() {
        let words: Vec<String> = (0..300).map(|r| foreign_word(3, r, 6.0)).collect();
        let text = words.join(" ");
        assert!(!is_english(&text));
        for w in &words {
            assert!(!STOPWORDS.contains(&w.as_str()), "{w} is a stopword");
        }
    }

    #[test]
    fn zipf_head_is_heavier() {
        let table = ZipfTable::new(1000, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut head = 0;
        let n = 20_000;
        for _ in 0..n {
            if table.sample(&mut rng) < 10 {
                head += 1;
            }
        }
        // Mass of the top 10 ranks under Zipf(1.0, 1000) is ~39%.
        let frac = head as f64 / n as f64;
        assert!((frac - 0.39).abs() < 0.03, "head fraction {frac}");
    }

    #[test]
    fn richness_calibration_is_monotone_and_invertible() {
        let n_words = 480.0;
        let q = 0.4;
        let s = 0.7;
        let small = expected_richness(n_words, q, 100, s);
        let large = expected_richness(n_words, q, 100_000, s);
        assert!(small < large);
        let v = calibrate_vocabulary_size(0.70, n_words, q, s);
        let achieved = expected_richness(n_words, q, v, s);
        assert!((achieved - 0.70).abs() < 0.02, "achieved {achieved} with v={v}");
    }
}
