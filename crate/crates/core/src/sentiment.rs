//! Lexicon-based sentiment scoring with rule heuristics.
//!
//! Each token's lexicon valence is adjusted for emphasis (all-caps words
//! in mixed-case text, degree modifiers, negation, a contrastive "but")
//! and the adjusted sum `s` is squashed to a compound score
//! `s / sqrt(s² + α)`. The defaults reproduce the constants of the
//! reference VADER tool.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Token valences in `[-4, 4]`, keyed by lowercase token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or overwrites an entry.
    pub fn insert(&mut self, token: &str, valence: f64) -> Result<()> {
        if !(-4.0..=4.0).contains(&valence) {
            return Err(Error::ValenceOutOfRange {
                token: token.to_string(),
                value: valence,
            });
        }
        self.entries.insert(token.to_lowercase(), valence);
        Ok(())
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut lexicon = Self::new();
        for (token, valence) in entries {
            lexicon.insert(token, valence)?;
        }
        Ok(lexicon)
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Proportions of positive/neutral/negative mass plus the compound score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
    pub compound: f64,
}

/// Heuristic constants. Every field can be overridden from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    /// Added per "!" in the text.
    pub exclamation_boost: f64,
    pub exclamation_cap: usize,
    /// Added per "?" when the text has 2..=`question_max_count` of them.
    pub question_boost: f64,
    pub question_max_count: usize,
    /// Flat boost once the "?" count exceeds `question_max_count`.
    pub question_cap_boost: f64,
    pub caps_boost: f64,
    pub booster_increment: f64,
    /// Scale applied to a modifier `k` tokens back (index `k - 1`); the last
    /// entry repeats for longer windows.
    pub booster_decay: Vec<f64>,
    pub negation_factor: f64,
    pub negation_window: usize,
    pub but_before: f64,
    pub but_after: f64,
    pub alpha: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            exclamation_boost: 0.292,
            exclamation_cap: 4,
            question_boost: 0.18,
            question_max_count: 3,
            question_cap_boost: 0.96,
            caps_boost: 0.733,
            booster_increment: 0.293,
            booster_decay: alloc::vec![1.0, 0.95, 0.9],
            negation_factor: -0.74,
            negation_window: 3,
            but_before: 0.5,
            but_after: 1.5,
            alpha: 15.0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be positive and finite"));
        }
        if self.negation_window == 0 {
            return Err(Error::InvalidConfig("negation window must be at least 1"));
        }
        if self.booster_decay.is_empty() {
            return Err(Error::InvalidConfig("booster decay list is empty"));
        }
        let finite = [
            self.exclamation_boost,
            self.question_boost,
            self.question_cap_boost,
            self.caps_boost,
            self.booster_increment,
            self.negation_factor,
            self.but_before,
            self.but_after,
        ]
        .iter()
        .chain(&self.booster_decay)
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("boosts must be finite"));
        }
        Ok(())
    }

    fn decay(&self, distance: usize) -> f64 {
        let idx = (distance - 1).min(self.booster_decay.len() - 1);
        self.booster_decay[idx]
    }

    /// Emphasis added to the valence sum for "!" and "?" marks.
    pub fn punctuation_emphasis(&self, text: &str) -> f64 {
        let bangs = text.matches('!').count().min(self.exclamation_cap);
        let questions = text.matches('?').count();
        let question = if questions > 1 {
            if questions <= self.question_max_count {
                questions as f64 * self.question_boost
            } else {
                self.question_cap_boost
            }
        } else {
            0.0
        };
        bangs as f64 * self.exclamation_boost + question
    }
}

const BOOSTERS: &[&str] = &[
    "absolutely",
    "amazingly",
    "awfully",
    "completely",
    "considerable",
    "considerably",
    "decidedly",
    "deeply",
    "effing",
    "enormous",
    "enormously",
    "entirely",
    "especially",
    "exceptional",
    "exceptionally",
    "extreme",
    "extremely",
    "fabulously",
    "flipping",
    "flippin",
    "frackin",
    "fracking",
    "fricking",
    "frickin",
    "frigging",
    "friggin",
    "fully",
    "greatly",
    "hella",
    "highly",
    "hugely",
    "incredible",
    "incredibly",
    "intensely",
    "major",
    "majorly",
    "more",
    "most",
    "particularly",
    "purely",
    "quite",
    "really",
    "remarkably",
    "so",
    "substantially",
    "thoroughly",
    "total",
    "totally",
    "tremendous",
    "tremendously",
    "uber",
    "unbelievably",
    "unusually",
    "utter",
    "utterly",
    "very",
];

const DAMPENERS: &[&str] = &[
    "almost",
    "barely",
    "hardly",
    "kinda",
    "kindof",
    "kind-of",
    "less",
    "little",
    "marginal",
    "marginally",
    "occasional",
    "occasionally",
    "partly",
    "scarce",
    "scarcely",
    "slight",
    "slightly",
    "somewhat",
    "sorta",
    "sortof",
    "sort-of",
];

const NEGATIONS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "dont", "hadnt", "hasnt", "havent",
    "isnt", "mightnt", "mustnt", "neither", "neednt", "never", "no", "none", "nope", "nor", "not", "nothing",
    "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "uh-uh", "wasnt", "werent", "without", "wont", "wouldnt",
    "rarely", "seldom", "despite",
];

const CONTRASTIVE: &str = "but";

fn modifier_sign(token: &str) -> Option<f64> {
    if BOOSTERS.contains(&token) {
        Some(1.0)
    } else if DAMPENERS.contains(&token) {
        Some(-1.0)
    } else {
        None
    }
}

fn is_negation(token: &str) -> bool {
    NEGATIONS.contains(&token) || token.contains("n't")
}

/// Python-style `isupper`: has a cased letter and no lowercase letters.
fn is_all_caps(token: &str) -> bool {
    token.chars().any(char::is_uppercase) && !token.chars().any(char::is_lowercase)
}

/// Compound normalization `s / sqrt(s² + α)`, clamped to `[-1, 1]`.
pub fn normalize_score(sum: f64, alpha: f64) -> f64 {
    (sum / libm::sqrt(sum * sum + alpha)).clamp(-1.0, 1.0)
}

struct Token<'a> {
    raw: &'a str,
    lower: String,
}

fn tokens(text: &str) -> Vec<Token<'_>> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|w| !w.is_empty())
        .map(|raw| Token {
            raw,
            lower: raw.to_lowercase(),
        })
        .collect()
}

/// Adjusted valence for every token, before punctuation emphasis.
pub fn token_valences(text: &str, lexicon: &SentimentLexicon, config: &HeuristicConfig) -> Vec<f64> {
    let tokens = tokens(text);
    let caps = tokens.iter().filter(|t| is_all_caps(t.raw)).count();
    let cap_differential = caps > 0 && caps < tokens.len();

    let mut valences = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.iter().enumerate() {
        if modifier_sign(&token.lower).is_some() {
            valences.push(0.0);
            continue;
        }
        let Some(mut valence) = lexicon.get(&token.lower) else {
            valences.push(0.0);
            continue;
        };
        // "no" directly before a sentiment word acts as a negator only
        if token.lower == "no" && tokens.get(i + 1).is_some_and(|n| lexicon.contains(&n.lower)) {
            valences.push(0.0);
            continue;
        }
        if cap_differential && is_all_caps(token.raw) {
            valence += config.caps_boost.copysign(valence);
        }
        for distance in 1..=config.negation_window.min(i) {
            let prev = &tokens[i - distance];
            if let Some(direction) = modifier_sign(&prev.lower) {
                let mut scalar = direction * config.booster_increment;
                if valence < 0.0 {
                    scalar = -scalar;
                }
                if cap_differential && is_all_caps(prev.raw) {
                    scalar += config.caps_boost.copysign(valence);
                }
                valence += scalar * config.decay(distance);
            }
            if is_negation(&prev.lower) {
                valence *= config.negation_factor;
            }
        }
        valences.push(valence);
    }

    if let Some(pivot) = tokens.iter().position(|t| t.lower == CONTRASTIVE) {
        for (i, v) in valences.iter_mut().enumerate() {
            if i < pivot {
                *v *= config.but_before;
            } else if i > pivot {
                *v *= config.but_after;
            }
        }
    }
    valences
}

/// Scores one text as a single unit. Unknown tokens are neutral.
pub fn analyze(text: &str, lexicon: &SentimentLexicon, config: &HeuristicConfig) -> SentimentScores {
    let valences = token_valences(text, lexicon, config);
    if valences.is_empty() {
        return SentimentScores::default();
    }

    let emphasis = config.punctuation_emphasis(text);
    let mut sum: f64 = valences.iter().sum();
    if sum > 0.0 {
        sum += emphasis;
    } else if sum < 0.0 {
        sum -= emphasis;
    }
    let compound = normalize_score(sum, config.alpha);

    // each sentiment token weighs |v| + 1 so it stays comparable to a neutral token's 1
    let mut positive = 0.0;
    let mut negative = 0.0;
    let mut neutral = 0.0;
    for &v in &valences {
        if v > 0.0 {
            positive += v + 1.0;
        } else if v < 0.0 {
            negative += 1.0 - v;
        } else {
            neutral += 1.0;
        }
    }
    if positive > negative {
        positive += emphasis;
    } else if positive < negative {
        negative += emphasis;
    }
    let total = positive + negative + neutral;
    SentimentScores {
        positive: positive / total,
        neutral: neutral / total,
        negative: negative / total,
        compound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> SentimentLexicon {
        SentimentLexicon::from_entries([
            ("good", 1.9),
            ("great", 3.1),
            ("bad", -2.5),
            ("slow", -1.0),
            ("no", -1.2),
            ("love", 3.2),
        ])
        .unwrap()
    }

    fn score(text: &str) -> SentimentScores {
        analyze(text, &lex(), &HeuristicConfig::default())
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn lexicon_rejects_out_of_range() {
        let mut lexicon = SentimentLexicon::new();
        assert!(matches!(
            lexicon.insert("bad", -9.0),
            Err(Error::ValenceOutOfRange { .. })
        ));
        lexicon.insert("ok", 0.5).unwrap();
        lexicon.insert("ok", 0.9).unwrap();
        assert_eq!(lexicon.get("ok"), Some(0.9));
        assert_eq!(lexicon.len(), 1);
    }

    #[test]
    fn empty_text_is_all_zero() {
        assert_eq!(score(""), SentimentScores::default());
        assert_eq!(score("  ...  "), SentimentScores::default());
    }

    #[test]
    fn single_token_closed_form() {
        let s = score("good");
        assert_close(s.compound, 0.440_433_570_760_168_5, 1e-12);
        assert_close(s.compound, 1.9 / libm::sqrt(1.9 * 1.9 + 15.0), 0.0);
        assert_eq!((s.positive, s.neutral, s.negative), (1.0, 0.0, 0.0));
    }

    #[test]
    fn negation_closed_form() {
        let s = score("not good");
        let sum = 1.9 * -0.74;
        assert_close(s.compound, sum / libm::sqrt(sum * sum + 15.0), 1e-15);
        assert_close(s.compound, -0.341_237_651_254_324_2, 1e-12);
    }

    #[test]
    fn exclamation_adds_emphasis() {
        let plain = score("good").compound;
        let bang = score("good!").compound;
        let sum = 1.9 + 0.292;
        assert_close(bang, sum / libm::sqrt(sum * sum + 15.0), 1e-15);
        assert!(bang.abs() > plain.abs());
        // capped at four
        assert_eq!(score("good!!!!").compound, score("good!!!!!!!").compound);
    }

    #[test]
    fn question_marks() {
        let cfg = HeuristicConfig::default();
        assert_eq!(cfg.punctuation_emphasis("good?"), 0.0);
        assert_close(cfg.punctuation_emphasis("good??"), 0.36, 1e-15);
        assert_close(cfg.punctuation_emphasis("good???"), 0.54, 1e-15);
        assert_eq!(cfg.punctuation_emphasis("good?????"), 0.96);
    }

    #[test]
    fn caps_only_count_in_mixed_case() {
        let vs = token_valences("the service is GOOD", &lex(), &HeuristicConfig::default());
        assert_close(vs[3], 1.9 + 0.733, 1e-15);
        let vs = token_valences("GOOD", &lex(), &HeuristicConfig::default());
        assert_eq!(vs, [1.9]);
    }

    #[test]
    fn degree_modifiers() {
        let cfg = HeuristicConfig::default();
        let vs = token_valences("very good", &lex(), &cfg);
        assert_close(vs[1], 1.9 + 0.293, 1e-15);
        let vs = token_valences("very really good", &lex(), &cfg);
        assert_close(vs[2], 1.9 + 0.293 + 0.293 * 0.95, 1e-15);
        let vs = token_valences("slightly bad", &lex(), &cfg);
        assert_close(vs[1], -2.5 + 0.293, 1e-15);
        let vs = token_valences("very bad", &lex(), &cfg);
        assert_close(vs[1], -2.5 - 0.293, 1e-15);
    }

    #[test]
    fn negation_window() {
        let cfg = HeuristicConfig::default();
        assert_close(
            token_valences("not so very good", &lex(), &cfg)[3],
            (1.9 + 0.293 + 0.293 * 0.95) * -0.74,
            1e-12,
        );
        // four tokens back is outside the window
        assert_eq!(token_valences("not a b c good", &lex(), &cfg)[4], 1.9);
        assert_close(token_valences("isn't good", &lex(), &cfg)[1], 1.9 * -0.74, 1e-15);
        let vs = token_valences("no good", &lex(), &cfg);
        assert_eq!(vs[0], 0.0);
        assert_close(vs[1], 1.9 * -0.74, 1e-15);
        // a standalone "no" keeps its own valence
        assert_eq!(token_valences("no", &lex(), &cfg), [-1.2]);
    }

    #[test]
    fn contrastive_but() {
        let vs = token_valences("good but slow", &lex(), &HeuristicConfig::default());
        assert_eq!(vs, [0.95, 0.0, -1.5]);
    }

    #[test]
    fn proportions() {
        let s = score("the service is good");
        let total = 3.0 + 2.9;
        assert_close(s.positive, 2.9 / total, 1e-15);
        assert_close(s.neutral, 3.0 / total, 1e-15);
        assert_eq!(s.negative, 0.0);
    }

    #[test]
    fn matches_reference_tool_on_plain_sentences() {
        // Frozen from vaderSentiment 3.3.2 with a lexicon restricted to these words.
        let lexicon = SentimentLexicon::from_entries([("good", 1.9), ("bad", -2.5), ("slow", -1.0)]).unwrap();
        let cfg = HeuristicConfig::default();
        // (text, neg, neu, pos, compound), rounded as the tool prints them
        let cases = [
            ("The support is very good!", 0.0, 0.534, 0.466, 0.54),
            ("not good but slow", 0.293, 0.344, 0.363, 0.1045),
            ("The support is GOOD", 0.0, 0.452, 0.548, 0.5622),
            ("bad bad bad", 1.0, 0.0, 0.0, -0.8885),
            ("not good", 0.706, 0.294, 0.0, -0.3412),
            ("good!", 0.0, 0.0, 1.0, 0.4926),
        ];
        for (text, neg, neu, pos, compound) in cases {
            let got = analyze(text, &lexicon, &cfg);
            assert_close(got.compound, compound, 5e-5);
            assert_close(got.negative, neg, 5e-4);
            assert_close(got.neutral, neu, 5e-4);
            assert_close(got.positive, pos, 5e-4);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = HeuristicConfig::default();
        cfg.validate().unwrap();
        cfg.alpha = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = HeuristicConfig {
            negation_window: 0,
            ..HeuristicConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    const VOCAB: &[&str] = &[
        "good", "great", "bad", "slow", "love", "not", "very", "slightly", "but", "the", "cloud", "GOOD", "BAD", "!",
        "?", "no", "never", "isn't",
    ];

    proptest! {
        #[test]
        fn compound_bounded_and_proportions_sum(words in proptest::collection::vec(0..VOCAB.len(), 0..30)) {
            let text: Vec<&str> = words.iter().map(|&i| VOCAB[i]).collect();
            let text = text.join(" ");
            let s = score(&text);
            prop_assert!((-1.0..=1.0).contains(&s.compound));
            let total = s.positive + s.neutral + s.negative;
            if tokens(&text).is_empty() {
                prop_assert_eq!(total, 0.0);
            } else {
                prop_assert!((total - 1.0).abs() < 1e-6);
            }
        }

        #[test]
        fn normalization_closed_form(sum in -50.0f64..50.0, alpha in 0.1f64..100.0) {
            prop_assert_eq!(normalize_score(sum, alpha), sum / libm::sqrt(sum * sum + alpha));
        }
    }
}
