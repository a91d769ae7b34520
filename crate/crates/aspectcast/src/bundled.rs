//! Data files compiled into the binary.

use aspectcast_core::aspect::AspectVocabulary;
use aspectcast_core::sentiment::SentimentLexicon;

use crate::formats::{parse_lexicon, parse_model, parse_vocabulary, SavedModel};

pub const DEFAULT_CONFIG: &str = include_str!("../data/default_config.json");
pub const DEFAULT_VOCABULARY: &str = include_str!("../data/default_vocabulary.json");
/// The VADER lexicon (MIT, see `data/VADER_LICENSE.txt`).
pub const VADER_LEXICON: &str = include_str!("../data/vader_lexicon.txt");
pub const SYNTHETIC_REVIEWS: &str = include_str!("../data/synthetic_reviews.jsonl");
pub const SYNTHETIC_REVENUE: &str = include_str!("../data/synthetic_revenue.csv");
/// Reference 13-aspect regression, shipped for comparison.
pub const LR13_REFERENCE: &str = include_str!("../data/lr13_reference.json");
/// Reference 16-aspect regression, shipped for comparison.
pub const LR16_REFERENCE: &str = include_str!("../data/lr16_reference.json");

const FILES: &[(&str, &str)] = &[
    ("default_config.json", DEFAULT_CONFIG),
    ("default_vocabulary.json", DEFAULT_VOCABULARY),
    ("vader_lexicon.txt", VADER_LEXICON),
    ("synthetic_reviews.jsonl", SYNTHETIC_REVIEWS),
    ("synthetic_revenue.csv", SYNTHETIC_REVENUE),
    ("lr13_reference.json", LR13_REFERENCE),
    ("lr16_reference.json", LR16_REFERENCE),
];

/// Canonical name of a bundled file.
pub fn key(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(n, _)| *n)
}

pub fn lookup(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|(n, _)| *n)
}

pub fn default_lexicon() -> SentimentLexicon {
    parse_lexicon(VADER_LEXICON).expect("bundled lexicon is valid")
}

pub fn default_vocabulary() -> AspectVocabulary {
    parse_vocabulary(DEFAULT_VOCABULARY).expect("bundled vocabulary is valid")
}

/// The reference regression for 13 or 16 aspects.
pub fn reference_model(aspects: usize) -> Option<SavedModel> {
    let text = match aspects {
        13 => LR13_REFERENCE,
        16 => LR16_REFERENCE,
        _ => return None,
    };
    Some(parse_model(text).expect("bundled reference model is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use aspectcast_core::aspect::builtin_aspects;

    #[test]
    fn vocabulary_covers_every_aspect() {
        let v = default_vocabulary();
        assert_eq!(v.len(), 16);
        for a in builtin_aspects() {
            assert!(v.phrases(a.id).is_some(), "{}", a.id);
        }
    }

    #[test]
    fn after_sales_and_security_entries() {
        let v = default_vocabulary();
        let mut after: Vec<&str> = v.phrases("after_sales_experience").unwrap().collect();
        after.sort_unstable();
        let mut expected = [
            "customer service",
            "satisfaction",
            "good service",
            "after-sales",
            "client service",
            "product service",
            "troubleshooting",
            "assistance",
            "customer care",
            "support",
        ];
        expected.sort_unstable();
        assert_eq!(after, expected);
        let security: Vec<&str> = v.phrases("security_concerns").unwrap().collect();
        for w in ["secure", "secured", "securely", "security"] {
            assert!(security.contains(&w));
        }
    }

    #[test]
    fn lexicon_loads() {
        let lex = default_lexicon();
        assert!(lex.len() > 7000);
        assert_eq!(lex.get("good"), Some(1.9));
    }

    #[test]
    fn every_bundled_file_resolves() {
        for n in names() {
            assert_eq!(key(n), Some(n));
            assert!(!lookup(n).unwrap().is_empty());
        }
        assert!(reference_model(13).is_some() && reference_model(16).is_some());
        assert!(reference_model(12).is_none());
    }
}
