//! Cloud aspects, keyword vocabularies and phrase matching.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Review;
use crate::{Error, Result};

/// One subjective driver or barrier of cloud purchase decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Aspect {
    pub id: &'static str,
    pub name: &'static str,
    pub description: &'static str,
}

const fn aspect(id: &'static str, name: &'static str, description: &'static str) -> Aspect {
    Aspect { id, name, description }
}

static ASPECTS: [Aspect; 16] = [
    aspect(
        "greater_scalability",
        "Greater scalability",
        "Flexible to either up-scale or down-scale",
    ),
    aspect(
        "faster_access_to_infrastructure",
        "Faster access to infrastructure",
        "Easy access to infrastructure without having to purchase them",
    ),
    aspect(
        "managing_multiple_services",
        "Managing multiple services",
        "Overheads and difficulty in managing multiple services",
    ),
    aspect(
        "security_concerns",
        "Security concerns",
        "Concerns over data breaches, privacy, access control, etc.",
    ),
    aspect(
        "cost_savings",
        "Cost savings",
        "Cost saved by transfer to cloud infrastructure",
    ),
    aspect(
        "higher_availability",
        "Higher availability",
        "High availability of cloud services",
    ),
    aspect(
        "lack_of_control",
        "Lack of control",
        "Uncertainty of data location. Uncertainty regarding legal issues, and dispute resolution",
    ),
    aspect(
        "higher_performance",
        "Higher performance",
        "Higher performance of cloud compared to on-premise infrastructure",
    ),
    aspect(
        "lack_of_expertise_resources",
        "Lack of expertise/resources",
        "Lack of specialised people or sufficient resources for managing cloud services",
    ),
    aspect("it_staff_efficiency", "IT staff efficiency", "Increase of productivity"),
    aspect(
        "provider_lock_in",
        "Provider lock-in",
        "Difficulties with changing cloud computing service provider",
    ),
    aspect(
        "business_continuity",
        "Business continuity",
        "Ability to continually operate even through disasters",
    ),
    aspect(
        "move_from_capex_to_opex",
        "Move from CapEx to OpEx",
        "Changing from capital expenditure to operating expense",
    ),
    aspect(
        "after_sales_experience",
        "After-sales experience",
        "Ability to provide acceptable customer services",
    ),
    aspect(
        "market_responsiveness",
        "Market responsiveness",
        "Ability to enhance the products' after sales",
    ),
    aspect(
        "marketing_execution",
        "Marketing execution",
        "Ability to deliver the product that the customer expected",
    ),
];

/// Number of aspects in the original product/service-quality set, which
/// are the first rows of [`builtin_aspects`].
pub const BASE_ASPECT_COUNT: usize = 13;

/// The sixteen built-in aspects in table order.
pub fn builtin_aspects() -> &'static [Aspect] {
    &ASPECTS
}

/// The first thirteen aspects (without the three market-facing additions).
pub fn base_aspects() -> &'static [Aspect] {
    &ASPECTS[..BASE_ASPECT_COUNT]
}

pub fn find_aspect(id: &str) -> Option<&'static Aspect> {
    ASPECTS.iter().find(|a| a.id == id)
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Lowercase and collapse whitespace runs to single spaces.
pub fn normalize_phrase(phrase: &str) -> String {
    let mut out = String::with_capacity(phrase.len());
    for word in phrase.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Phrase {
    text: String,
    tokens: Vec<String>,
}

/// Keyword phrases per aspect id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AspectVocabulary {
    entries: BTreeMap<String, Vec<Phrase>>,
}

impl AspectVocabulary {
    /// Normalizes phrases and validates aspect ids and phrase lengths.
    pub fn new<I, P, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, P)>,
        P: IntoIterator,
        P::Item: AsRef<str>,
        S: AsRef<str>,
    {
        let mut vocab = AspectVocabulary::default();
        for (id, phrases) in entries {
            let id = id.as_ref();
            if find_aspect(id).is_none() {
                return Err(Error::UnknownAspect(id.to_string()));
            }
            let mut set = BTreeSet::new();
            for phrase in phrases {
                let text = normalize_phrase(phrase.as_ref());
                let tokens = tokenize(&text);
                if tokens.is_empty() || tokens.len() > 5 {
                    return Err(Error::InvalidPhrase {
                        aspect: id.to_string(),
                        phrase: phrase.as_ref().to_string(),
                    });
                }
                set.insert(text);
            }
            if set.is_empty() {
                return Err(Error::EmptyPhrases(id.to_string()));
            }
            let list = vocab.entries.entry(id.to_string()).or_default();
            for text in set {
                if !list.iter().any(|p| p.text == text) {
                    let tokens = tokenize(&text);
                    list.push(Phrase { text, tokens });
                }
            }
            list.sort_by(|a, b| a.text.cmp(&b.text));
        }
        Ok(vocab)
    }

    /// Aspect ids present, sorted.
    pub fn aspect_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn phrases(&self, aspect_id: &str) -> Option<impl Iterator<Item = &str>> {
        self.entries
            .get(aspect_id)
            .map(|list| list.iter().map(|p| p.text.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// An aspect mentioned by a review, with the phrases that triggered it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectMatch {
    pub review_id: String,
    pub aspect_id: String,
    pub phrases: BTreeSet<String>,
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Every aspect with at least one phrase on token boundaries in the text.
///
/// Matches come out in built-in aspect order.
pub fn match_aspects(review: &Review, vocab: &AspectVocabulary) -> Vec<AspectMatch> {
    let tokens = tokenize(&review.text);
    let mut matches = Vec::new();
    for aspect in builtin_aspects() {
        let Some(phrases) = vocab.entries.get(aspect.id) else {
            continue;
        };
        let hits: BTreeSet<String> = phrases
            .iter()
            .filter(|p| contains_run(&tokens, &p.tokens))
            .map(|p| p.text.clone())
            .collect();
        if !hits.is_empty() {
            matches.push(AspectMatch {
                review_id: review.id.clone(),
                aspect_id: aspect.id.to_string(),
                phrases: hits,
            });
        }
    }
    matches
}

/// Small English stop-word list used by [`term_frequencies`] by default.
pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by",
    "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his", "how", "i", "if",
    "in", "into", "is", "it", "its", "just", "me", "more", "my", "of", "on", "or", "our", "out", "she", "so", "some",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "to", "too", "up", "us", "very",
    "was", "we", "were", "what", "when", "which", "who", "will", "with", "would", "you", "your",
];

/// Case-insensitive token counts, most frequent first, ties broken
/// lexicographically.
pub fn term_frequencies(reviews: &[Review], top_n: usize, stop_words: &[&str]) -> Vec<(String, usize)> {
    let stop: BTreeSet<&str> = stop_words.iter().copied().collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for review in reviews {
        for token in tokenize(&review.text) {
            if !stop.contains(token.as_str()) {
                *counts.entry(token).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    // BTreeMap order already gives the lexicographic tie-break; the sort is stable.
    ranked.sort_by_key(|r| core::cmp::Reverse(r.1));
    ranked.truncate(top_n);
    ranked
}
