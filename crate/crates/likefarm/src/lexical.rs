//! Lexical timeline features: tokenization, language detection, richness,
//! readability (ARI and Flesch reading ease).
//!
//! Tokenization rules are deliberately simple and bit-exact so the derived
//! statistics are reproducible:
//! - a word is a maximal run of letters, digits or apostrophes containing at
//!   least one letter or digit;
//! - each maximal run of `.`, `!`, `?` ends one sentence, provided at least
//!   one word appeared since the previous sentence break; text that contains
//!   words but no counted break is one sentence; trailing fragments after a
//!   counted break are not counted.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Built-in 200-word English stopword/frequency list used by [`is_english`]
/// and shared with the synthetic generator as the head of its vocabulary.
pub const STOPWORDS: [&str; 200] = [
    "the", "of", "and", "a", "to", "in", "is", "you", "that", "it",
    "he", "was", "for", "on", "are", "as", "with", "his", "they", "i",
    "at", "be", "this", "have", "from", "or", "one", "had", "by", "word",
    "but", "not", "what", "all", "were", "we", "when", "your", "can", "said",
    "there", "use", "an", "each", "which", "she", "do", "how", "their", "if",
    "will", "up", "other", "about", "out", "many", "then", "them", "these", "so",
    "some", "her", "would", "make", "like", "him", "into", "time", "has", "look",
    "two", "more", "write", "go", "see", "number", "no", "way", "could", "people",
    "my", "than", "first", "water", "been", "call", "who", "oil", "its", "now",
    "find", "long", "down", "day", "did", "get", "come", "made", "may", "part",
    "over", "new", "sound", "take", "only", "little", "work", "know", "place", "year",
    "live", "me", "back", "give", "most", "very", "after", "thing", "our", "just",
    "name", "good", "sentence", "man", "think", "say", "great", "where", "help", "through",
    "much", "before", "line", "right", "too", "mean", "old", "any", "same", "tell",
    "boy", "follow", "came", "want", "show", "also", "around", "form", "three", "small",
    "set", "put", "end", "does", "another", "well", "large", "must", "big", "even",
    "such", "because", "turn", "here", "why", "ask", "went", "men", "read", "need",
    "land", "different", "home", "us", "move", "try", "kind", "hand", "picture", "again",
    "change", "off", "play", "spell", "air", "away", "animal", "house", "point", "page",
    "letter", "mother", "answer", "found", "study", "still", "learn", "should", "world", "high",
];

/// Minimum fraction of tokens found in [`STOPWORDS`] for a post to pass as English.
pub const STOPWORD_COVERAGE_MIN: f64 = 0.15;
/// Minimum fraction of characters that must be ASCII letters.
pub const ASCII_LETTER_FRACTION_MIN: f64 = 0.5;

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

/// Per-post token and character-class counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenizedPost {
    pub words: Vec<String>,
    pub sentences: u64,
    /// All characters, including whitespace.
    pub chars: u64,
    pub uppercase: u64,
    /// ASCII punctuation characters (a subset of `non_letters`).
    pub punctuation: u64,
    pub digits: u64,
    /// Characters that are neither letter, digit nor whitespace (emoticons,
    /// punctuation, symbols).
    pub non_letters: u64,
}

pub fn tokenize(text: &str) -> TokenizedPost {
    let mut t = TokenizedPost::default();
    let mut word = String::new();
    let mut word_has_alnum = false;
    let mut words_since_break = 0u64;

    let flush = |word: &mut String, has_alnum: &mut bool, t: &mut TokenizedPost, since: &mut u64| {
        if *has_alnum {
            t.words.push(std::mem::take(word));
            *since += 1;
        } else {
            word.clear();
        }
        *has_alnum = false;
    };

    for c in text.chars() {
        t.chars += 1;
        if c.is_uppercase() {
            t.uppercase += 1;
        }
        if c.is_ascii_punctuation() {
            t.punctuation += 1;
        }
        if c.is_numeric() {
            t.digits += 1;
        }
        if !c.is_alphabetic() && !c.is_numeric() && !c.is_whitespace() {
            t.non_letters += 1;
        }

        if c.is_alphabetic() || c.is_numeric() || c == '\'' {
            word.push(c);
            if c != '\'' {
                word_has_alnum = true;
            }
        } else {
            flush(&mut word, &mut word_has_alnum, &mut t, &mut words_since_break);
            if matches!(c, '.' | '!' | '?') && words_since_break > 0 {
                t.sentences += 1;
                words_since_break = 0;
            }
        }
    }
    flush(&mut word, &mut word_has_alnum, &mut t, &mut words_since_break);

    if t.sentences == 0 && !t.words.is_empty() {
        t.sentences = 1;
    }
    t
}

/// Stopword-coverage heuristic: a post is English when at least 15% of its
/// tokens come from the built-in list and at least half its characters are
/// ASCII letters. Empty or wordless text is not English.
pub fn is_english(text: &str) -> bool {
    let tokens = tokenize(text);
    if tokens.words.is_empty() || tokens.chars == 0 {
        return false;
    }
    let set = stopword_set();
    let hits = tokens
        .words
        .iter()
        .filter(|w| set.contains(w.to_lowercase().as_str()))
        .count();
    let coverage = hits as f64 / tokens.words.len() as f64;
    let ascii_letters = text.chars().filter(char::is_ascii_alphabetic).count();
    let ascii_fraction = ascii_letters as f64 / tokens.chars as f64;
    coverage >= STOPWORD_COVERAGE_MIN && ascii_fraction >= ASCII_LETTER_FRACTION_MIN
}

/// Fraction of a user's text-bearing posts detected as English.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnglishRatio {
    pub r: f64,
}

/// `texts` are one user's text-bearing posts. Returns 0 when there are none.
pub fn english_ratio<'a>(texts: impl IntoIterator<Item = &'a str>) -> EnglishRatio {
    let mut total = 0usize;
    let mut english = 0usize;
    for t in texts {
        total += 1;
        if is_english(t) {
            english += 1;
        }
    }
    EnglishRatio {
        r: if total == 0 {
            0.0
        } else {
            english as f64 / total as f64
        },
    }
}

/// Automated Readability Index. Degenerate input (no words or sentences is
/// signalled by zero arguments) maps to 0 rather than the formula's negative
/// constant, so no-text users match the zero-fill convention.
pub fn ari(avg_word_length: f64, avg_sentence_length: f64) -> f64 {
    if avg_word_length == 0.0 && avg_sentence_length == 0.0 {
        return 0.0;
    }
    4.71 * avg_word_length + 0.5 * avg_sentence_length - 21.43
}

/// Flesch reading ease; 0 when there are no words or sentences.
pub fn flesch(total_words: u64, total_sentences: u64, total_syllables: u64) -> f64 {
    if total_words == 0 || total_sentences == 0 {
        return 0.0;
    }
    206.835 - 1.015 * (total_words as f64 / total_sentences as f64)
        - 84.6 * (total_syllables as f64 / total_words as f64)
}

/// Vowel-group syllable counter: counts maximal runs of `aeiouy`, subtracts
/// one when the word ends in a lone `e` group that is not the only group,
/// floor 1.
pub fn count_syllables(word: &str) -> u64 {
    let lower = word.to_lowercase();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0u64;
    let mut last_group_len = 0u64;
    let mut in_group = false;
    for c in lower.chars() {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
                last_group_len = 0;
                in_group = true;
            }
            last_group_len += 1;
        } else {
            in_group = false;
        }
    }
    if groups > 1 && in_group && last_group_len == 1 && lower.ends_with('e') {
        groups -= 1;
    }
    groups.max(1)
}

/// The twelve lexical features of one user, over their English posts.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct LexicalFeatures {
    pub n_chars: f64,
    pub n_words: f64,
    pub n_sentences: f64,
    pub avg_word_length: f64,
    pub avg_sentence_length: f64,
    pub avg_uppercase: f64,
    pub pct_punctuation: f64,
    pub pct_numbers: f64,
    pub pct_non_letters: f64,
    pub richness: f64,
    pub ari: f64,
    pub flesch: f64,
}

impl LexicalFeatures {
    pub const NAMES: [&'static str; 12] = [
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
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.n_chars,
            self.n_words,
            self.n_sentences,
            self.avg_word_length,
            self.avg_sentence_length,
            self.avg_uppercase,
            self.pct_punctuation,
            self.pct_numbers,
            self.pct_non_letters,
            self.richness,
            self.ari,
            self.flesch,
        ]
    }
}

/// Extract the lexical profile from one user's text-bearing posts. Only posts
/// passing [`is_english`] contribute; a user with none gets the all-zero
/// vector (the zero-fill rule is applied downstream on assembly).
pub fn lexical_profile<'a>(texts: impl IntoIterator<Item = &'a str>) -> LexicalFeatures {
    let mut n_posts = 0u64;
    let mut chars = 0u64;
    let mut sentences = 0u64;
    let mut uppercase = 0u64;
    let mut punctuation = 0u64;
    let mut digits = 0u64;
    let mut non_letters = 0u64;
    let mut word_chars = 0u64;
    let mut syllables = 0u64;
    let mut n_words = 0u64;
    let mut unique: HashSet<String> = HashSet::new();

    for text in texts {
        if !is_english(text) {
            continue;
        }
        n_posts += 1;
        let t = tokenize(text);
        chars += t.chars;
        sentences += t.sentences;
        uppercase += t.uppercase;
        punctuation += t.punctuation;
        digits += t.digits;
        non_letters += t.non_letters;
        for w in &t.words {
            n_words += 1;
            word_chars += w.chars().count() as u64;
            syllables += count_syllables(w);
            unique.insert(w.to_lowercase());
        }
    }

    if n_posts == 0 || n_words == 0 {
        return LexicalFeatures::default();
    }

    let awl = word_chars as f64 / n_words as f64;
    let asl = if sentences > 0 {
        n_words as f64 / sentences as f64
    } else {
        0.0
    };
    let char_frac = |x: u64| {
        if chars == 0 {
            0.0
        } else {
            x as f64 / chars as f64
        }
    };

    LexicalFeatures {
        n_chars: chars as f64,
        n_words: n_words as f64,
        n_sentences: sentences as f64,
        avg_word_length: awl,
        avg_sentence_length: asl,
        avg_uppercase: uppercase as f64 / n_posts as f64,
        pct_punctuation: char_frac(punctuation),
        pct_numbers: char_frac(digits),
        pct_non_letters: char_frac(non_letters),
        richness: unique.len() as f64 / n_words as f64,
        ari: if sentences == 0 { 0.0 } else { ari(awl, asl) },
        flesch: flesch(n_words, sentences, syllables),
    }
}
